"""Integration with event detection, exact solutions and presets."""

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, List, Optional, Tuple

import numpy as np
import structlog
from scipy.integrate import RK45
from scipy.interpolate import CubicHermiteSpline
from scipy.optimize import brentq

from .config import settings
from .errors import BlowUpAt, DomainViolation, InvalidOptions, InvalidParameter
from .flow import (
    DynamicsClass,
    FixedPointKind,
    FlowKind,
    FlowState,
    classify_dynamics,
    fixed_points,
    from_integration_chart,
    integration_field,
    state_from_vector,
    state_vector,
    to_integration_chart,
)
from .lie_algebra import NormalizedContactData
from .presets import parse_preset_name, preset_registry
from .pseudohermitian import torsion_and_webster
from .stepping import RK4, explicit_step

logger = structlog.get_logger(__name__)

CONVERGED_RHS_NORM = 1e-10


class Method(Enum):
    RK4 = "RK4"
    RK45 = "RK45"


@dataclass
class IntegratorOptions:
    method: Method = Method.RK45
    dt: float = field(default_factory=lambda: settings.dt)
    rtol: float = field(default_factory=lambda: settings.rtol)
    atol: float = field(default_factory=lambda: settings.atol)
    blowup_threshold: float = field(default_factory=lambda: settings.blowup_threshold)
    convergence_radius: float = field(default_factory=lambda: settings.convergence_radius)
    dt_min: float = field(default_factory=lambda: settings.dt_min)
    samples: int = field(default_factory=lambda: settings.samples)
    tau_min: float = field(default_factory=lambda: settings.tau_min)
    max_step: Optional[float] = None

    def __post_init__(self) -> None:
        if isinstance(self.method, str):
            try:
                self.method = Method(self.method.upper())
            except ValueError:
                raise InvalidOptions(f"Unknown method '{self.method}'") from None
        positive = ("dt", "rtol", "atol", "blowup_threshold", "convergence_radius", "dt_min", "tau_min")
        for name in positive:
            value = getattr(self, name)
            if not (np.isfinite(value) and value > 0):
                raise InvalidOptions(f"{name} must be positive, got {value!r}")
        if self.samples < 2:
            raise InvalidOptions(f"samples must be at least 2, got {self.samples}")
        if self.max_step is not None and not self.max_step > 0:
            raise InvalidOptions(f"max_step must be positive, got {self.max_step}")


class EventKind(Enum):
    COMPLETED = "completed"
    CONVERGED = "converged"
    BLOW_UP = "blow_up"
    DOMAIN_EXIT = "domain_exit"


@dataclass(frozen=True)
class TerminalEvent:
    kind: EventKind
    time: float
    field: Optional[str] = None
    point: Optional[Tuple[float, float]] = None

    def __str__(self) -> str:
        parts = [self.kind.value]
        if self.field is not None:
            parts.append(f"field={self.field}")
        if self.point is not None:
            parts.append(f"point=({self.point[0]:g},{self.point[1]:g})")
        parts.append(f"time={self.time:.17g}")
        return " ".join(parts)


@dataclass(frozen=True)
class InvariantSample:
    torsion: complex
    webster: float
    einstein_hilbert: float


@dataclass
class Trajectory:
    kind: FlowKind
    times: np.ndarray
    states: List[FlowState]
    invariant_samples: List[InvariantSample]
    terminal_event: TerminalEvent
    steps: int = 0

    @property
    def final_state(self) -> FlowState:
        return self.states[-1]

    def column(self, name: str) -> np.ndarray:
        return np.array([getattr(s, name) for s in self.states], dtype=float)


class _FixedStepper:
    """Classical RK4 with a step that divides the horizon evenly."""

    def __init__(self, fun: Callable[[np.ndarray], np.ndarray], y0: np.ndarray, t_end: float, dt: float):
        self.fun = fun
        self.count = max(1, int(math.ceil(t_end / dt - 1e-12)))
        self.h = t_end / self.count
        self.index = 0
        self.t = 0.0
        self.y = y0
        self.t_old = 0.0
        self.y_old = y0
        self.step_size = self.h

    @property
    def finished(self) -> bool:
        return self.index >= self.count

    def step(self) -> Optional[str]:
        self.t_old, self.y_old = self.t, self.y
        self.y = explicit_step(self.fun, self.y, self.h, RK4)
        self.index += 1
        self.t = self.index * self.h
        return None

    def crossing(self, index: int, level: float) -> float:
        lo, hi = self.y_old[index] - level, self.y[index] - level
        return self.t_old + (self.t - self.t_old) * lo / (lo - hi)


class _AdaptiveStepper:
    """Dormand-Prince 5(4) from scipy, advanced one accepted step at a time."""

    def __init__(
        self,
        fun: Callable[[np.ndarray], np.ndarray],
        y0: np.ndarray,
        t_end: float,
        opts: IntegratorOptions,
    ):
        max_step = opts.max_step if opts.max_step is not None else t_end / opts.samples
        self.solver = RK45(
            lambda t, y: fun(y),
            0.0,
            y0,
            t_bound=t_end,
            rtol=opts.rtol,
            atol=opts.atol,
            max_step=max_step,
        )
        self.t_end = t_end

    @property
    def t(self) -> float:
        return float(self.solver.t)

    @property
    def y(self) -> np.ndarray:
        return np.array(self.solver.y)

    @property
    def t_old(self) -> float:
        return float(self.solver.t_old)

    @property
    def step_size(self) -> float:
        return float(self.solver.step_size)

    @property
    def finished(self) -> bool:
        return self.solver.status != "running"

    def step(self) -> Optional[str]:
        message = self.solver.step()
        if self.solver.status == "failed":
            return message or "step failed"
        return None

    def crossing(self, index: int, level: float) -> float:
        dense = self.solver.dense_output()

        def offset(t: float) -> float:
            return float(dense(t)[index] - level)

        lo, hi = self.t_old, self.t
        if offset(lo) * offset(hi) > 0:
            return hi
        return float(brentq(offset, lo, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps))


def _domain_bounds(kind: FlowKind, opts: IntegratorOptions) -> List[Tuple[int, str, float]]:
    bounds = [(1, "c", 0.0), (2, "B", 0.0)]
    if "tau" in kind.fields:
        bounds.append((kind.fields.index("tau"), "tau", opts.tau_min))
    return bounds


def _largest_field(kind: FlowKind, y: np.ndarray) -> str:
    magnitudes = np.where(np.isfinite(y), np.abs(y), np.inf)
    return kind.fields[int(np.argmax(magnitudes))]


def integrate(
    kind: FlowKind,
    nd: NormalizedContactData,
    s0: FlowState,
    t_end: float,
    opts: Optional[IntegratorOptions] = None,
    vol0: Optional[float] = None,
) -> Trajectory:
    """Integrate a flow and report how it ends.

    Blow-up and leaving the domain are outcomes recorded in the terminal
    event, never exceptions.
    """
    opts = opts or IntegratorOptions()
    vol0 = settings.vol0 if vol0 is None else vol0
    if not (np.isfinite(t_end) and t_end > 0):
        raise InvalidOptions(f"t_end must be positive, got {t_end!r}")

    y0 = to_integration_chart(kind, state_vector(kind, s0))

    def fun(y: np.ndarray) -> np.ndarray:
        with np.errstate(all="ignore"):
            return integration_field(kind, nd, y)

    stepper = (
        _FixedStepper(fun, y0, t_end, opts.dt)
        if opts.method is Method.RK4
        else _AdaptiveStepper(fun, y0, t_end, opts)
    )

    knots_t = [0.0]
    knots_y = [y0]
    knots_f = [fun(y0)]
    # Only an attracting fixed point ends the run; a repelling one is left to t_end.
    attracting = kind is FlowKind.NORMALIZED and classify_dynamics(nd) is DynamicsClass.ATTRACTING
    target = fixed_points(nd) if attracting else None
    bounds = _domain_bounds(kind, opts)
    event: Optional[TerminalEvent] = None
    steps = 0

    logger.info("integration_started", kind=kind.value, t_end=t_end, method=opts.method.value)
    while event is None:
        if stepper.finished:
            event = TerminalEvent(EventKind.COMPLETED, knots_t[-1])
            break
        failure = stepper.step()
        steps += 1
        if failure is not None:
            event = TerminalEvent(EventKind.BLOW_UP, knots_t[-1], _largest_field(kind, knots_y[-1]))
            logger.info("step_failed", message=failure, t=knots_t[-1])
            break

        t, y = stepper.t, stepper.y
        if not np.all(np.isfinite(y)) or np.max(np.abs(y)) > opts.blowup_threshold:
            event = TerminalEvent(EventKind.BLOW_UP, t, _largest_field(kind, y))
            break

        exits = [(index, name, level) for index, name, level in bounds if y[index] <= level]
        if exits:
            crossings = [(stepper.crossing(index, level), name) for index, name, level in exits]
            crossing, name = min(crossings)
            event = TerminalEvent(EventKind.DOMAIN_EXIT, crossing, name)
            break

        if stepper.step_size < opts.dt_min and t < t_end:
            event = TerminalEvent(EventKind.BLOW_UP, t, _largest_field(kind, y))
            break

        f = fun(y)
        knots_t.append(t)
        knots_y.append(y)
        knots_f.append(f)

        if target is not None and target.kind is FixedPointKind.ISOLATED:
            distance = target.distance(y[0], y[1])
            if distance < opts.convergence_radius and np.max(np.abs(f[:2])) < CONVERGED_RHS_NORM:
                nearest = min(target.points, key=lambda p: np.hypot(y[0] - p[0], y[1] - p[1]))
                event = TerminalEvent(EventKind.CONVERGED, t, point=nearest)

    trajectory = _dense_output(kind, nd, knots_t, knots_y, knots_f, opts.samples, vol0)
    trajectory.terminal_event = event
    trajectory.steps = steps
    logger.info(
        "integration_finished",
        kind=kind.value,
        steps=steps,
        terminal_event=event.kind.value,
        time=event.time,
        field=event.field,
    )
    return trajectory


def _dense_output(
    kind: FlowKind,
    nd: NormalizedContactData,
    knots_t: List[float],
    knots_y: List[np.ndarray],
    knots_f: List[np.ndarray],
    samples: int,
    vol0: float,
) -> Trajectory:
    """Resample the accepted steps at equispaced times by cubic Hermite interpolation."""
    t_stop = knots_t[-1]
    if len(knots_t) == 1:
        times = np.array([0.0])
        values = np.array([knots_y[0]])
    else:
        spline = CubicHermiteSpline(
            np.array(knots_t), np.array(knots_y), np.array(knots_f), axis=0
        )
        times = np.linspace(0.0, t_stop, samples)
        values = spline(times)
        values[0] = knots_y[0]
        values[-1] = knots_y[-1]

    kept_times = []
    states = []
    invariants = []
    for t, y in zip(times, values):
        try:
            state = state_from_vector(kind, from_integration_chart(kind, y))
        except DomainViolation:
            continue
        torsion, webster = torsion_and_webster(nd, state.a, state.c, state.B)
        kept_times.append(float(t))
        states.append(state)
        invariants.append(
            InvariantSample(
                torsion=complex(torsion),
                webster=float(webster),
                einstein_hilbert=float(webster * state.B**2 * vol0),
            )
        )
    return Trajectory(
        kind=kind,
        times=np.array(kept_times),
        states=states,
        invariant_samples=invariants,
        terminal_event=TerminalEvent(EventKind.COMPLETED, t_stop),
    )


def _positive(name: str, value: float) -> float:
    if not (np.isfinite(value) and value > 0):
        raise InvalidParameter(f"{name} must be positive, got {value!r}")
    return float(value)


def _is_degenerate(product: float) -> bool:
    return math.isclose(product, 1.0, rel_tol=1e-14, abs_tol=1e-14)


def pdq_closed_form(K: float, c0: float, b0: float, t: float) -> Tuple[float, float]:
    """Exact (c, B) of the unnormalized flow on the circle bundle with a = 0."""
    c0 = _positive("c0", c0)
    B0 = _positive("b0", b0) ** 2
    if _is_degenerate(K * c0 * c0):
        return c0, B0 - t * (c0 * c0 * K + 1.0) / c0
    rate = (1.0 - K * c0 * c0) / (B0 * c0)
    growth = math.exp(rate * t)
    c = c0 * growth
    B = B0 * (1.0 - K * c0 * c0 * growth * growth) / ((1.0 - K * c0 * c0) * growth)
    return c, B


def pdq_blowup_time(K: float, c0: float, b0: float) -> float:
    """Time at which B reaches 0, or inf."""
    c0 = _positive("c0", c0)
    B0 = _positive("b0", b0) ** 2
    if _is_degenerate(K * c0 * c0):
        slope = (c0 * c0 * K + 1.0) / c0
        return B0 / slope if slope > 0 else math.inf
    if K <= 0:
        return math.inf
    rate = (1.0 - K * c0 * c0) / (B0 * c0)
    return math.log(1.0 / (c0 * math.sqrt(K))) / rate


def prequant_closed_form(K: float, c0: float, B0: float, t: float) -> Tuple[float, float]:
    """Exact (c, B) of the unnormalized flow on a prequantization bundle with a = 0."""
    if K == 0:
        raise InvalidParameter("prequantization needs K != 0")
    c0 = _positive("c0", c0)
    B0 = _positive("B0", B0)
    if _is_degenerate(K * K * c0 * c0):
        return c0, B0 - 2.0 * (abs(K) / K) * t
    rate = (1.0 - K * K * c0 * c0) / (B0 * c0 * K)
    growth = math.exp(rate * t)
    c = c0 * growth
    B = B0 * (1.0 - K * K * c0 * c0 * growth * growth) / ((1.0 - K * K * c0 * c0) * growth)
    return c, B


def prequant_blowup_time(K: float, c0: float, B0: float) -> float:
    if K == 0:
        raise InvalidParameter("prequantization needs K != 0")
    c0 = _positive("c0", c0)
    B0 = _positive("B0", B0)
    if _is_degenerate(K * K * c0 * c0):
        return B0 / 2.0 if K > 0 else math.inf
    rate = (1.0 - K * K * c0 * c0) / (B0 * c0 * K)
    t_star = math.log(1.0 / (abs(K) * c0)) / rate
    return t_star if t_star > 0 else math.inf


def normalized_a0_blowup_time(K: float, c0: float) -> float:
    c0 = _positive("c0", c0)
    if K >= 0:
        return math.inf
    m = math.sqrt(-K)
    return (math.pi / 2.0 - math.atan(m * c0)) / m


def normalized_a0_closed_form(K: float, c0: float, t: float) -> float:
    """Solution of ċ = 1 − Kc² with c(0) = c0."""
    c0 = _positive("c0", c0)
    if K > 0:
        k = math.sqrt(K)
        slope = math.tanh(k * t)
        return (k * c0 + slope) / (k * (1.0 + k * c0 * slope))
    if K == 0:
        return c0 + t
    t_star = normalized_a0_blowup_time(K, c0)
    if t >= t_star:
        raise BlowUpAt(t_star)
    m = math.sqrt(-K)
    return math.tan(m * t + math.atan(m * c0)) / m


def preset(name: str, params: Optional[float] = None) -> Tuple[NormalizedContactData, FlowState]:
    """Constants and default state of a named structure; accepts ``"pdq:1"`` style names."""
    base, inline = parse_preset_name(name)
    if inline is not None and params is not None and inline != params:
        raise InvalidParameter(f"Conflicting parameters for preset '{base}': {inline} vs {params}")
    return preset_registry.build(base, inline if inline is not None else params)

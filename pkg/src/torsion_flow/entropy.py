"""Einstein-Hilbert, F and W± functionals at homogeneous scope.

With φ constant in space the measure totals reduce to ``B²·vol0`` (for dμ)
and ``e^{−φ}B²·vol0`` (for e^{−φ}dμ), so every functional becomes an
explicit function of the packed state.
"""

from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, List, Optional

import numpy as np
import structlog

from .config import settings
from .errors import ConstraintViolated, InvalidOptions, InvalidParameter, MissingField
from .flow import FlowKind, FlowState, central_difference, state_vector, vector_field
from .lie_algebra import NormalizedContactData
from .pseudohermitian import torsion_and_webster
from .solver import IntegratorOptions, TerminalEvent, integrate

logger = structlog.get_logger(__name__)

CONSTRAINT_TOLERANCE = 1e-9
MATCH_TOLERANCE = 1e-4
MONOTONE_SLACK = 1e-8


class Functional(Enum):
    EINSTEIN_HILBERT = "EinsteinHilbert"
    F = "F"
    W_PLUS = "WPlus"
    W_MINUS = "WMinus"

    @property
    def required_fields(self) -> tuple:
        return _REQUIRED[self]

    @property
    def flow_kind(self) -> FlowKind:
        return _FLOW_OF[self]


_REQUIRED = {
    Functional.EINSTEIN_HILBERT: (),
    Functional.F: ("phi",),
    Functional.W_PLUS: ("phi", "tau"),
    Functional.W_MINUS: ("phi", "tau"),
}

_FLOW_OF = {
    Functional.EINSTEIN_HILBERT: FlowKind.UNNORMALIZED,
    Functional.F: FlowKind.COUPLED_F,
    Functional.W_PLUS: FlowKind.COUPLED_W_PLUS,
    Functional.W_MINUS: FlowKind.COUPLED_W_MINUS,
}


def functional_for(kind: FlowKind) -> Functional:
    """The functional that is monotone along ``kind``."""
    for functional, flow_kind in _FLOW_OF.items():
        if flow_kind is kind:
            return functional
    raise InvalidOptions(f"No monotone functional is attached to the {kind.value} flow")


class Weighting(Enum):
    UNWEIGHTED = "Unweighted"
    WEIGHTED = "Weighted"
    NEITHER = "Neither"
    BOTH = "Both"


@dataclass(frozen=True)
class EntropyConfig:
    kind: Functional
    vol0: float = field(default_factory=lambda: settings.vol0)

    def __post_init__(self) -> None:
        if isinstance(self.kind, str):
            object.__setattr__(self, "kind", Functional(self.kind))
        if not (np.isfinite(self.vol0) and self.vol0 > 0):
            raise InvalidParameter(f"vol0 must be positive, got {self.vol0!r}")


def _require(cfg: EntropyConfig, s: FlowState) -> None:
    for name in cfg.kind.required_fields:
        if getattr(s, name) is None:
            raise MissingField(name, f"{cfg.kind.value} functional")


def _measure(cfg: EntropyConfig, B: float) -> float:
    """∫dμ at constant φ."""
    return B * B * cfg.vol0


def _weighted_measure(cfg: EntropyConfig, B: float, phi: float, tau: Optional[float]) -> float:
    """The measure the functional integrates against."""
    if cfg.kind is Functional.EINSTEIN_HILBERT:
        return _measure(cfg, B)
    total = np.exp(-phi) * _measure(cfg, B)
    if cfg.kind is Functional.F:
        return float(total)
    return float(total / (4.0 * np.pi * tau) ** 2)


def constraint_value(kind: Functional, s: FlowState, cfg: EntropyConfig) -> float:
    """e^{−φ}B²vol0 for F, (4πτ)^{−2}e^{−φ}B²vol0 for W±."""
    if kind is Functional.EINSTEIN_HILBERT:
        raise InvalidOptions("The Einstein-Hilbert functional carries no constraint")
    cfg = EntropyConfig(kind, cfg.vol0)
    _require(cfg, s)
    return _weighted_measure(cfg, s.B, s.phi, s.tau)


def functional_value(cfg: EntropyConfig, s: FlowState, W: float) -> float:
    _require(cfg, s)
    if cfg.kind is Functional.EINSTEIN_HILBERT:
        return W * _measure(cfg, s.B)
    weighted = _weighted_measure(cfg, s.B, s.phi, s.tau)
    if cfg.kind is Functional.F:
        return W * weighted
    direction = 1.0 if cfg.kind is Functional.W_PLUS else -1.0
    return (s.tau * W + direction * (s.phi / 2.0 - 1.0)) * weighted


def solve_initial_phi(cfg: EntropyConfig, s: FlowState) -> FlowState:
    """Return ``s`` with the φ that makes the constraint equal to 1."""
    if cfg.kind is Functional.EINSTEIN_HILBERT:
        return s
    if cfg.kind is not Functional.F and s.tau is None:
        raise MissingField("tau", f"{cfg.kind.value} functional")
    phi = float(np.log(_measure(cfg, s.B)))
    if cfg.kind is not Functional.F:
        phi -= 2.0 * float(np.log(4.0 * np.pi * s.tau))
    return s.with_fields(phi=phi)


def _unpack(kind: FlowKind, y: np.ndarray) -> Dict[str, float]:
    return dict(zip(kind.fields, y))


def _value_on_vector(cfg: EntropyConfig, kind: FlowKind, nd: NormalizedContactData, y: np.ndarray) -> float:
    values = _unpack(kind, y)
    _, W = torsion_and_webster(nd, values["a"], values["c"], values["B"])
    B = values["B"]
    if cfg.kind is Functional.EINSTEIN_HILBERT:
        return float(W * _measure(cfg, B))
    weighted = _weighted_measure(cfg, B, values["phi"], values.get("tau"))
    if cfg.kind is Functional.F:
        return float(W * weighted)
    direction = 1.0 if cfg.kind is Functional.W_PLUS else -1.0
    return float((values["tau"] * W + direction * (values["phi"] / 2.0 - 1.0)) * weighted)


def _curvature_defect(cfg: EntropyConfig, W: float, tau: Optional[float]) -> float:
    if cfg.kind is Functional.W_PLUS:
        return W - 1.0 / tau
    if cfg.kind is Functional.W_MINUS:
        return W + 1.0 / tau
    return W


def _theorem_rates(
    cfg: EntropyConfig, s: FlowState, torsion_norm2: float, W: float
) -> tuple:
    """(unweighted, weighted) candidate right-hand sides of the monotonicity formula."""
    defect = _curvature_defect(cfg, W, s.tau)
    if cfg.kind in (Functional.EINSTEIN_HILBERT, Functional.F):
        density = -2.0 * (defect**2 + torsion_norm2)
    else:
        density = -2.0 * s.tau * (torsion_norm2 + defect**2)
    unweighted = density * _measure(cfg, s.B)
    if cfg.kind is Functional.EINSTEIN_HILBERT:
        return unweighted, unweighted
    return unweighted, density * _weighted_measure(cfg, s.B, s.phi, s.tau)


def _fd_step(kind: FlowKind, nd: NormalizedContactData, y: np.ndarray, base: float) -> float:
    with np.errstate(all="ignore"):
        rate = float(np.max(np.abs(vector_field(kind, nd, y))))
    if not np.isfinite(rate):
        return base
    return min(base, base / rate) if rate > 0 else base


def _relative_residual(derivative: np.ndarray, candidate: np.ndarray) -> float:
    mask = np.isfinite(derivative)
    if not mask.any():
        return float("nan")
    diff = np.abs(derivative[mask] - candidate[mask]) / (1.0 + np.abs(candidate[mask]))
    return float(np.max(diff))


@dataclass
class MonotonicityReport:
    functional: Functional
    times: np.ndarray
    functional_values: np.ndarray
    finite_diff_derivative: np.ndarray
    theorem_rhs_unweighted: np.ndarray
    theorem_rhs_weighted: np.ndarray
    constraint_values: np.ndarray
    torsion_norms: np.ndarray
    curvature_defects: np.ndarray
    max_violation: float
    matched_weighting: Weighting
    residual_unweighted: float
    residual_weighted: float
    constraint_drift: float
    terminal_event: TerminalEvent

    @property
    def monotone(self) -> bool:
        finite = self.finite_diff_derivative[np.isfinite(self.finite_diff_derivative)]
        return bool(np.all(finite <= MONOTONE_SLACK))

    @property
    def constraint_conserved(self) -> bool:
        return self.constraint_drift < CONSTRAINT_TOLERANCE

    @property
    def strict_samples(self) -> np.ndarray:
        """Samples where the derivative is non-negligible or the structure is a critical point."""
        stationary = np.abs(self.finite_diff_derivative) < MONOTONE_SLACK
        critical = (self.torsion_norms < MONOTONE_SLACK) & (np.abs(self.curvature_defects) < MONOTONE_SLACK)
        return ~stationary | critical

    def summary(self) -> str:
        verdict = "yes" if self.monotone else "no"
        bound = "< 1e-8" if self.max_violation < MONOTONE_SLACK else f"= {self.max_violation:.3e}"
        conserved = "yes" if self.constraint_conserved else "no"
        return (
            f"{self.functional.value}: monotone: {verdict}, max_violation {bound}, "
            f"matched_weighting: {self.matched_weighting.value}, "
            f"constraint conserved: {conserved} (drift {self.constraint_drift:.3e}), "
            f"event: {self.terminal_event}"
        )

    def to_dict(self) -> Dict[str, object]:
        return {
            "functional": self.functional.value,
            "samples": len(self.times),
            "max_violation": self.max_violation,
            "matched_weighting": self.matched_weighting.value,
            "residual_unweighted": self.residual_unweighted,
            "residual_weighted": self.residual_weighted,
            "constraint_drift": self.constraint_drift,
            "constraint_conserved": self.constraint_conserved,
            "monotone": self.monotone,
            "event": str(self.terminal_event),
        }


def run_with_report(
    kind: FlowKind,
    nd: NormalizedContactData,
    s0: FlowState,
    t_end: float,
    cfg: Optional[EntropyConfig] = None,
    opts: Optional[IntegratorOptions] = None,
) -> MonotonicityReport:
    """Integrate the flow and compare the functional's rate with the monotonicity formula.

    φ₀ is always re-solved from the constraint.
    """
    cfg = cfg or EntropyConfig(functional_for(kind))
    if cfg.kind.flow_kind is not kind:
        raise InvalidOptions(f"{cfg.kind.value} is not monotone along the {kind.value} flow")

    s0 = solve_initial_phi(cfg, s0)
    if cfg.kind is not Functional.EINSTEIN_HILBERT:
        initial = constraint_value(cfg.kind, s0, cfg)
        if abs(initial - 1.0) > CONSTRAINT_TOLERANCE:
            raise ConstraintViolated(initial)

    trajectory = integrate(kind, nd, s0, t_end, opts, vol0=cfg.vol0)
    base_step = settings.fd_step

    values: List[float] = []
    derivatives: List[float] = []
    unweighted: List[float] = []
    weighted: List[float] = []
    constraints: List[float] = []
    torsion_norms: List[float] = []
    defects: List[float] = []
    for state, sample in zip(trajectory.states, trajectory.invariant_samples):
        y = state_vector(kind, state)
        W = sample.webster
        norm2 = abs(sample.torsion) ** 2
        values.append(functional_value(cfg, state, W))
        h = _fd_step(kind, nd, y, base_step)
        with np.errstate(all="ignore"):
            rate = central_difference(
                kind, nd, y, h, lambda z: _value_on_vector(cfg, kind, nd, z)
            )
        derivatives.append(float(np.real(rate)))
        u, w = _theorem_rates(cfg, state, norm2, W)
        unweighted.append(u)
        weighted.append(w)
        constraints.append(
            1.0 if cfg.kind is Functional.EINSTEIN_HILBERT else constraint_value(cfg.kind, state, cfg)
        )
        torsion_norms.append(float(np.sqrt(norm2)))
        defects.append(_curvature_defect(cfg, W, state.tau))

    derivative = np.array(derivatives)
    rhs_unweighted = np.array(unweighted)
    rhs_weighted = np.array(weighted)
    residual_u = _relative_residual(derivative, rhs_unweighted)
    residual_w = _relative_residual(derivative, rhs_weighted)
    matches_u = residual_u < MATCH_TOLERANCE
    matches_w = residual_w < MATCH_TOLERANCE
    if matches_u and matches_w:
        matched = Weighting.BOTH
    elif matches_u:
        matched = Weighting.UNWEIGHTED
    elif matches_w:
        matched = Weighting.WEIGHTED
    else:
        matched = Weighting.NEITHER

    finite = derivative[np.isfinite(derivative)]
    constraint_array = np.array(constraints)
    report = MonotonicityReport(
        functional=cfg.kind,
        times=trajectory.times,
        functional_values=np.array(values),
        finite_diff_derivative=derivative,
        theorem_rhs_unweighted=rhs_unweighted,
        theorem_rhs_weighted=rhs_weighted,
        constraint_values=constraint_array,
        torsion_norms=np.array(torsion_norms),
        curvature_defects=np.array(defects),
        max_violation=float(max(0.0, finite.max())) if finite.size else 0.0,
        matched_weighting=matched,
        residual_unweighted=residual_u,
        residual_weighted=residual_w,
        constraint_drift=float(np.max(np.abs(constraint_array - constraint_array[0]) / abs(constraint_array[0]))),
        terminal_event=trajectory.terminal_event,
    )
    fields = report.to_dict()
    fields["terminal_event"] = fields.pop("event")
    logger.info("monotonicity_report", **fields)
    return report

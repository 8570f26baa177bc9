"""Right-hand sides of the torsion flow and its coupled variants.

The complex structure moves by ``J̇ = 2E`` and the contact form by
``θ̇ = 2ηθ``. On homogeneous data this reduces to an ODE in
``(a, c, B = b²)`` plus the potential ``φ`` and scale ``τ`` of the coupled
flows:

    ȧ = 2(Re E + a Im E)
    ċ = −2(Re E · (−2ac/(a²+1)) + Im E · (1−a²)c/(a²+1))
    Ḃ = 2ηB

with E built from the lowered torsion ``A_{11} = conj(A^1_{1̄})``.
"""

from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Callable, Dict, List, Optional, Tuple, Union

import numpy as np
import pandas as pd
import structlog

from .errors import (
    CalibrationAmbiguous,
    DomainViolation,
    InvalidOptions,
    MissingField,
)
from .lie_algebra import NormalizedContactData, sign
from .pseudohermitian import (
    CRParameters,
    connection_theta_coefficient,
    torsion_and_webster,
)
from .stepping import advance

logger = structlog.get_logger(__name__)

# κ_A in ‖A‖² = κ_A |A_{11}|², frozen by calibrate_torsion_norm().
TORSION_NORM_CONSTANT = 1
# Index convention under which Ȧ = 2WA − i A_{,0} holds on homogeneous data.
TORSION_CONVENTION = "conjugate"
VARIATION_TOLERANCE = 1e-6
FIXED_POINT_TOLERANCE = 1e-12


class FlowKind(Enum):
    UNNORMALIZED = "unnormalized"
    NORMALIZED = "normalized"
    COUPLED_F = "f"
    COUPLED_W_PLUS = "wplus"
    COUPLED_W_MINUS = "wminus"

    @property
    def fields(self) -> Tuple[str, ...]:
        return _FIELDS[self]

    @property
    def is_coupled(self) -> bool:
        return self in (
            FlowKind.COUPLED_F,
            FlowKind.COUPLED_W_PLUS,
            FlowKind.COUPLED_W_MINUS,
        )


_FIELDS: Dict[FlowKind, Tuple[str, ...]] = {
    FlowKind.UNNORMALIZED: ("a", "c", "B"),
    FlowKind.NORMALIZED: ("a", "c", "B"),
    FlowKind.COUPLED_F: ("a", "c", "B", "phi"),
    FlowKind.COUPLED_W_PLUS: ("a", "c", "B", "phi", "tau"),
    FlowKind.COUPLED_W_MINUS: ("a", "c", "B", "phi", "tau"),
}


@dataclass(frozen=True)
class FlowState:
    a: float
    c: float
    B: float = 1.0
    phi: Optional[float] = None
    tau: Optional[float] = None

    def __post_init__(self) -> None:
        for name in ("a", "c", "B", "phi", "tau"):
            value = getattr(self, name)
            if value is None:
                continue
            value = float(value)
            if not np.isfinite(value):
                raise DomainViolation(name, value)
            object.__setattr__(self, name, value)
        for name in ("c", "B", "tau"):
            value = getattr(self, name)
            if value is not None and value <= 0:
                raise DomainViolation(name, value)

    @classmethod
    def from_parameters(cls, p: CRParameters, **extra: Optional[float]) -> "FlowState":
        return cls(a=p.a, c=p.c, B=p.B, **extra)

    @property
    def b(self) -> float:
        return float(np.sqrt(self.B))

    def cr_parameters(self) -> CRParameters:
        return CRParameters(self.a, self.b, self.c)

    def with_fields(self, **changes: Optional[float]) -> "FlowState":
        return replace(self, **changes)

    def to_dict(self) -> Dict[str, Optional[float]]:
        return {"a": self.a, "c": self.c, "B": self.B, "phi": self.phi, "tau": self.tau}


@dataclass(frozen=True)
class StateDerivative:
    a: float
    c: float
    B: float
    phi: Optional[float] = None
    tau: Optional[float] = None

    def norm(self) -> float:
        """Max-norm over the geometric components (a, c, B)."""
        return float(max(abs(self.a), abs(self.c), abs(self.B)))

    def to_dict(self) -> Dict[str, Optional[float]]:
        return {"a": self.a, "c": self.c, "B": self.B, "phi": self.phi, "tau": self.tau}


def require_fields(kind: FlowKind, s: FlowState) -> None:
    for name in kind.fields:
        if getattr(s, name) is None:
            raise MissingField(name, f"{kind.value} flow")


def state_vector(kind: FlowKind, s: FlowState) -> np.ndarray:
    require_fields(kind, s)
    return np.array([getattr(s, name) for name in kind.fields], dtype=float)


def state_from_vector(kind: FlowKind, y: np.ndarray) -> FlowState:
    values = dict(zip(kind.fields, (float(v) for v in y)))
    return FlowState(**values)


def j_velocity(a: float, c: float, E: complex) -> Tuple[float, float]:
    """(ȧ, ċ) for J̇ = 2E on the (a, c) chart."""
    re, im = E.real, E.imag
    n = a * a + 1.0
    a_dot = 2.0 * (re + a * im)
    c_dot = -2.0 * (re * (-2.0 * a * c / n) + im * (1.0 - a * a) * c / n)
    return a_dot, c_dot


def normalized_velocity(
    nd: NormalizedContactData,
    a: Union[float, np.ndarray],
    c: Union[float, np.ndarray],
) -> Tuple[Union[float, np.ndarray], Union[float, np.ndarray]]:
    """Normalized flow at b = 1; accepts scalars or arrays."""
    p, r = nd.c2_13, nd.c3_12
    a_dot = p * a * c - r * (a * a + 1.0) * a / c
    c_dot = p * c * c + r * (1.0 - a * a)
    return a_dot, c_dot


def vector_field(kind: FlowKind, nd: NormalizedContactData, y: np.ndarray) -> np.ndarray:
    """Raw right-hand side on a packed state; no domain checks."""
    y = np.asarray(y, dtype=float)
    a, c, B = y[0], y[1], y[2]
    if kind is FlowKind.NORMALIZED:
        a_dot, c_dot = normalized_velocity(nd, a, c)
        return np.array([a_dot, c_dot, 0.0])

    torsion, webster = torsion_and_webster(nd, a, c, B)
    lowered = torsion.conjugate()
    if kind is FlowKind.UNNORMALIZED:
        E, eta = lowered, -webster
    elif kind is FlowKind.COUPLED_F:
        weight = np.exp(y[3])
        E, eta = weight * lowered, weight * webster
    else:
        E, eta = lowered, webster

    a_dot, c_dot = j_velocity(a, c, E)
    out = [a_dot, c_dot, 2.0 * eta * B]
    if kind is FlowKind.COUPLED_F:
        out.append(4.0 * eta)
    elif kind is FlowKind.COUPLED_W_PLUS:
        out.extend([4.0 * (webster - 1.0 / y[4]), 2.0])
    elif kind is FlowKind.COUPLED_W_MINUS:
        out.extend([4.0 * (webster + 1.0 / y[4]), -2.0])
    return np.array(out)


def _has_scale(kind: FlowKind) -> bool:
    return kind in (FlowKind.COUPLED_W_PLUS, FlowKind.COUPLED_W_MINUS)


def to_integration_chart(kind: FlowKind, y: np.ndarray) -> np.ndarray:
    """Replace φ by ψ = φ + 2 ln τ for the W± flows; other kinds pass through."""
    z = np.array(y, dtype=float)
    if _has_scale(kind):
        z[3] = z[3] + 2.0 * np.log(z[4])
    return z


def from_integration_chart(kind: FlowKind, z: np.ndarray) -> np.ndarray:
    y = np.array(z, dtype=float)
    if _has_scale(kind):
        with np.errstate(invalid="ignore", divide="ignore"):
            y[3] = y[3] - 2.0 * np.log(y[4])
    return y


def integration_field(kind: FlowKind, nd: NormalizedContactData, z: np.ndarray) -> np.ndarray:
    """Right-hand side in the chart of ``to_integration_chart``.

    For W± the potential obeys ψ̇ = 4W, which stays bounded as τ → 0 while
    φ̇ = 4(W ∓ 1/τ) does not.
    """
    if not _has_scale(kind):
        return vector_field(kind, nd, z)
    z = np.asarray(z, dtype=float)
    a, c, B = z[0], z[1], z[2]
    torsion, webster = torsion_and_webster(nd, a, c, B)
    a_dot, c_dot = j_velocity(a, c, torsion.conjugate())
    tau_dot = 2.0 if kind is FlowKind.COUPLED_W_PLUS else -2.0
    return np.array([a_dot, c_dot, 2.0 * webster * B, 4.0 * webster, tau_dot])


def rhs(kind: FlowKind, nd: NormalizedContactData, s: FlowState) -> StateDerivative:
    dy = vector_field(kind, nd, state_vector(kind, s))
    extra = dict(zip(kind.fields[3:], (float(v) for v in dy[3:])))
    return StateDerivative(a=float(dy[0]), c=float(dy[1]), B=float(dy[2]), **extra)


class FixedPointKind(Enum):
    NONE = "none"
    ISOLATED = "isolated"
    ALL = "all"


@dataclass(frozen=True)
class FixedPointSet:
    kind: FixedPointKind
    points: Tuple[Tuple[float, float], ...] = ()

    def __str__(self) -> str:
        if self.kind is FixedPointKind.ALL:
            return "fixed points: all"
        if self.kind is FixedPointKind.NONE:
            return "no torsion-free J"
        listed = ", ".join(f"({a:g},{c:g})" for a, c in self.points)
        noun = "fixed point" if len(self.points) == 1 else "fixed points"
        return f"{noun} {listed}"

    def distance(self, a: float, c: float) -> float:
        """Distance from (a, c) to the nearest listed point (inf if none listed)."""
        if not self.points:
            return float("inf")
        return min(float(np.hypot(a - pa, c - pc)) for pa, pc in self.points)


def fixed_points(nd: NormalizedContactData) -> FixedPointSet:
    """Torsion-free homogeneous structures (a, c)."""
    p, r = nd.c2_13, nd.c3_12
    if sign(p) == 0 and sign(r) == 0:
        return FixedPointSet(FixedPointKind.ALL)
    if sign(p) == 0:
        return FixedPointSet(FixedPointKind.NONE)
    ratio = -r / p
    if ratio <= FIXED_POINT_TOLERANCE:
        return FixedPointSet(FixedPointKind.NONE)
    return FixedPointSet(FixedPointKind.ISOLATED, ((0.0, float(np.sqrt(ratio))),))


class DynamicsClass(Enum):
    ATTRACTING = "Attracting"
    REPELLING = "Repelling"
    UNCLASSIFIED = "Unclassified"


def classify_dynamics(nd: NormalizedContactData) -> DynamicsClass:
    p, r = sign(nd.c2_13), sign(nd.c3_12)
    if r > 0 and p < 0:
        return DynamicsClass.ATTRACTING
    if r < 0 and p > 0:
        return DynamicsClass.REPELLING
    return DynamicsClass.UNCLASSIFIED


def _c_axis(lo: float, hi: float, count: int) -> np.ndarray:
    """Inclusive grid, except that a left end at 0 is dropped: (0, hi]."""
    if lo == 0.0:
        return lo + (hi - lo) * np.arange(1, count + 1) / count
    return np.linspace(lo, hi, count)


def phase_field(
    nd: NormalizedContactData,
    a_range: Tuple[float, float],
    c_range: Tuple[float, float],
    grid: Tuple[int, int],
) -> pd.DataFrame:
    """Normalized velocity field sampled on an N×M grid (a outer, c inner)."""
    n_a, n_c = grid
    if n_a < 1 or n_c < 1:
        raise InvalidOptions(f"Grid must be positive, got {n_a}x{n_c}")
    a_lo, a_hi = map(float, a_range)
    c_lo, c_hi = map(float, c_range)
    if a_hi < a_lo:
        raise InvalidOptions(f"Empty a-range {a_lo}:{a_hi}")
    if c_lo < 0:
        raise DomainViolation("c", c_lo)
    if c_hi <= c_lo or c_hi <= 0:
        raise DomainViolation("c", c_hi)

    a_axis = np.linspace(a_lo, a_hi, n_a)
    c_axis = _c_axis(c_lo, c_hi, n_c)
    a_grid, c_grid = np.meshgrid(a_axis, c_axis, indexing="ij")
    a_dot, c_dot = normalized_velocity(nd, a_grid, c_grid)
    return pd.DataFrame(
        {
            "a": a_grid.ravel(),
            "c": c_grid.ravel(),
            "a_dot": np.ravel(a_dot),
            "c_dot": np.ravel(c_dot),
        }
    )


def _in_domain(y: np.ndarray) -> bool:
    return bool(np.all(np.isfinite(y)) and y[1] > 0 and y[2] > 0 and (len(y) < 5 or y[4] > 0))


def central_difference(
    kind: FlowKind,
    nd: NormalizedContactData,
    y: np.ndarray,
    h: float,
    observable: Callable[[np.ndarray], complex],
) -> complex:
    """d/dt of ``observable`` along the flow through ``y``; NaN if ±h leaves the domain.

    Central differences at ``h`` and ``h/2`` are combined by Richardson
    extrapolation, so the truncation error is O(h⁴).
    """

    def field_at(state: np.ndarray) -> np.ndarray:
        return vector_field(kind, nd, state)

    def symmetric(step: float) -> Optional[complex]:
        forward = advance(field_at, y, step, step)
        backward = advance(field_at, y, -step, step)
        if not (_in_domain(forward) and _in_domain(backward)):
            return None
        return (observable(forward) - observable(backward)) / (2.0 * step)

    coarse = symmetric(h)
    fine = symmetric(0.5 * h)
    if coarse is None or fine is None:
        return complex("nan")
    return (4.0 * fine - coarse) / 3.0


@dataclass
class VariationReport:
    """Finite-difference check of the homogeneous curvature evolution."""

    times: np.ndarray
    webster_derivative: np.ndarray
    webster_prediction: np.ndarray
    torsion_derivative: np.ndarray
    torsion_prediction: np.ndarray
    kappa: int
    torsion_convention: str
    residual_by_kappa: Dict[int, float] = field(default_factory=dict)
    residual_by_convention: Dict[str, float] = field(default_factory=dict)

    @property
    def webster_residuals(self) -> np.ndarray:
        return np.abs(self.webster_derivative - self.webster_prediction)

    @property
    def torsion_residuals(self) -> np.ndarray:
        return np.abs(self.torsion_derivative - self.torsion_prediction)

    @property
    def max_webster_residual(self) -> float:
        return float(np.max(self.webster_residuals))

    @property
    def max_torsion_residual(self) -> float:
        return float(np.max(self.torsion_residuals))

    def passed(self, tolerance: float = VARIATION_TOLERANCE) -> bool:
        return self.max_webster_residual < tolerance and self.max_torsion_residual < tolerance

    def to_dict(self) -> Dict[str, object]:
        return {
            "samples": len(self.times),
            "kappa": self.kappa,
            "torsion_convention": self.torsion_convention,
            "max_webster_residual": self.max_webster_residual,
            "max_torsion_residual": self.max_torsion_residual,
        }


def _sample_unnormalized(
    nd: NormalizedContactData, s0: FlowState, t_end: float, samples: int
) -> List[Tuple[float, np.ndarray]]:
    """States on an equispaced grid, stopping before the flow leaves the domain."""
    kind = FlowKind.UNNORMALIZED

    def field_at(state: np.ndarray) -> np.ndarray:
        return vector_field(kind, nd, state)

    y = state_vector(kind, s0)
    previous = 0.0
    visited = []
    for t in np.linspace(0.0, t_end, samples):
        y = advance(field_at, y, float(t) - previous, 1e-3)
        previous = float(t)
        if not _in_domain(y):
            logger.info("variation_check_truncated", t=float(t))
            break
        visited.append((float(t), y))
    return visited


def variation_identity_check(
    nd: NormalizedContactData,
    s0: FlowState,
    h: float = 1e-4,
    t_end: float = 0.25,
    samples: int = 11,
) -> VariationReport:
    """Compare FD rates of W and A^1_{1̄} with their homogeneous evolution laws.

    Ẇ = 2(W² − κ|A|²) is tested for κ ∈ {1, 2}. For the torsion, A_{,0} is
    2i c_θ A for the raised component (giving Ȧ = 2(W + c_θ)A) and
    −2i c_θ A_{11} for the lowered one (giving Ȧ_{11} = 2(W − c_θ)A_{11});
    the report names the convention that matches.
    """
    if not 1e-6 <= h <= 1e-3:
        raise InvalidOptions(f"Finite-difference step must lie in [1e-6, 1e-3], got {h}")
    if t_end <= 0 or samples < 2:
        raise InvalidOptions("Need t_end > 0 and at least two samples")

    kind = FlowKind.UNNORMALIZED
    rows = []
    for t, y in _sample_unnormalized(nd, s0, t_end, samples):
        torsion, webster = torsion_and_webster(nd, y[0], y[1], y[2])
        c_theta = connection_theta_coefficient(nd, y[0], y[1], y[2])
        d_webster = central_difference(
            kind, nd, y, h, lambda z: torsion_and_webster(nd, z[0], z[1], z[2])[1]
        )
        d_torsion = central_difference(
            kind, nd, y, h, lambda z: torsion_and_webster(nd, z[0], z[1], z[2])[0]
        )
        if np.isnan(d_webster) or np.isnan(d_torsion):
            break
        rows.append((t, d_webster.real, d_torsion, webster, torsion, c_theta))
    if not rows:
        raise InvalidOptions("No sample of the trajectory stays inside the domain")

    times = np.array([r[0] for r in rows])
    d_webster = np.array([r[1] for r in rows])
    d_torsion = np.array([r[2] for r in rows], dtype=complex)
    webster = np.array([r[3] for r in rows])
    torsion = np.array([r[4] for r in rows], dtype=complex)
    c_theta = np.array([r[5] for r in rows])

    residual_by_kappa = {
        kappa: float(np.max(np.abs(d_webster - 2.0 * (webster**2 - kappa * np.abs(torsion) ** 2))))
        for kappa in (1, 2)
    }
    matching = [k for k, res in residual_by_kappa.items() if res < VARIATION_TOLERANCE]
    if not matching:
        raise CalibrationAmbiguous(
            f"No torsion-norm constant matches: residuals {residual_by_kappa}"
        )
    kappa = TORSION_NORM_CONSTANT if TORSION_NORM_CONSTANT in matching else matching[0]

    predictions = {
        "conjugate": (d_torsion, 2.0 * (webster + c_theta) * torsion),
        "lowered": (d_torsion.conjugate(), 2.0 * (webster - c_theta) * torsion.conjugate()),
    }
    residual_by_convention = {
        name: float(np.max(np.abs(lhs - rhs_))) for name, (lhs, rhs_) in predictions.items()
    }
    convention = min(
        residual_by_convention,
        key=lambda name: (residual_by_convention[name], name != TORSION_CONVENTION),
    )
    derivative, prediction = predictions[convention]

    report = VariationReport(
        times=times,
        webster_derivative=d_webster,
        webster_prediction=2.0 * (webster**2 - kappa * np.abs(torsion) ** 2),
        torsion_derivative=derivative,
        torsion_prediction=prediction,
        kappa=kappa,
        torsion_convention=convention,
        residual_by_kappa=residual_by_kappa,
        residual_by_convention=residual_by_convention,
    )
    logger.info("variation_check", **report.to_dict())
    return report


def calibrate_torsion_norm(h: float = 1e-4) -> int:
    """Pick κ_A from the Einstein-Hilbert rate on the flat torus (c = e^t, B = e^{−t})."""
    nd = NormalizedContactData.from_free(c3_12=1.0)
    kind = FlowKind.UNNORMALIZED
    s0 = FlowState(a=0.0, c=1.0, B=1.0)

    def einstein_hilbert(z: np.ndarray) -> float:
        return torsion_and_webster(nd, z[0], z[1], z[2])[1] * z[2] ** 2

    residuals: Dict[int, float] = {1: 0.0, 2: 0.0}
    for t, y in _sample_unnormalized(nd, s0, 0.5, 6):
        torsion, webster = torsion_and_webster(nd, y[0], y[1], y[2])
        rate = central_difference(kind, nd, y, h, einstein_hilbert).real
        for kappa in residuals:
            predicted = -2.0 * (webster**2 + kappa * abs(torsion) ** 2) * y[2] ** 2
            residuals[kappa] = max(residuals[kappa], abs(rate - predicted) / abs(predicted))

    matching = [k for k, res in residuals.items() if res < VARIATION_TOLERANCE]
    if len(matching) != 1:
        raise CalibrationAmbiguous(f"Calibration residuals {residuals} do not single out one constant")
    logger.info("torsion_norm_calibrated", kappa=matching[0], residuals=residuals)
    return matching[0]

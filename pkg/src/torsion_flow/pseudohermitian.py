"""Pseudohermitian invariants of homogeneous CR structures.

A homogeneous structure on normalized data is fixed by ``(a, b, c)``: the
contact plane carries ``J`` with matrix ``[[a, −(1+a²)/c], [c, −a]]`` on
``(U_b, V_b) = (X_2/b, X_3/b)``, and the contact form is ``θ_b = b²ω^1``.
Torsion is reported as the raised component ``A^1_{1̄}``; the lowered
component used by the flow is its conjugate.
"""

from dataclasses import dataclass
from typing import Dict, NamedTuple, Tuple

import numpy as np
import structlog

from .errors import InvalidParameter
from .lie_algebra import NormalizedContactData

logger = structlog.get_logger(__name__)


def _positive(name: str, value: float) -> float:
    value = float(value)
    if not np.isfinite(value) or value <= 0:
        raise InvalidParameter(f"{name} must be a positive finite number, got {value!r}")
    return value


@dataclass(frozen=True)
class CRParameters:
    """Skew ``a``, conformal scale ``b > 0`` and stretch ``c > 0``."""

    a: float
    b: float = 1.0
    c: float = 1.0

    def __post_init__(self) -> None:
        if not np.isfinite(self.a):
            raise InvalidParameter(f"a must be finite, got {self.a!r}")
        object.__setattr__(self, "a", float(self.a))
        object.__setattr__(self, "b", _positive("b", self.b))
        object.__setattr__(self, "c", _positive("c", self.c))

    @property
    def B(self) -> float:
        return self.b * self.b


@dataclass(frozen=True)
class PseudohermitianInvariants:
    c_theta: float
    c_Z: complex
    torsion: complex
    webster: float

    @property
    def torsion_lowered(self) -> complex:
        """A_{11} in the unit frame."""
        return self.torsion.conjugate()

    def components(self) -> Tuple[float, ...]:
        return (
            self.c_theta,
            self.c_Z.real,
            self.c_Z.imag,
            self.torsion.real,
            self.torsion.imag,
            self.webster,
        )

    def deviation(self, other: "PseudohermitianInvariants") -> float:
        """Largest componentwise ``|x − y| / (1 + |x|)``."""
        return max(
            abs(x - y) / (1.0 + abs(x))
            for x, y in zip(self.components(), other.components())
        )

    def to_dict(self) -> Dict[str, float]:
        return {
            "c_theta": self.c_theta,
            "c_Z_re": self.c_Z.real,
            "c_Z_im": self.c_Z.imag,
            "torsion_re": self.torsion.real,
            "torsion_im": self.torsion.imag,
            "webster": self.webster,
        }


def j_endomorphism(a: float, c: float) -> np.ndarray:
    """Matrix of J on (U, V)."""
    c = _positive("c", c)
    return np.array([[a, -(1.0 + a * a) / c], [c, -a]])


@dataclass(frozen=True)
class ComplexFrame:
    """Unitary frame Z_1 and its dual θ^1 for given (a, b, c).

    ``z1`` / ``z1bar`` hold coefficients on (U_b, V_b); ``theta1`` /
    ``theta1bar`` hold coefficients on (θ_b, α_b, β_b).
    """

    z1: np.ndarray
    z1bar: np.ndarray
    theta1: np.ndarray
    theta1bar: np.ndarray
    b: float

    def reeb(self) -> np.ndarray:
        """T_b on the invariant frame (X_1, X_2, X_3)."""
        return np.array([1.0 / self.b**2, 0.0, 0.0], dtype=complex)

    def vector(self, coefficients: np.ndarray) -> np.ndarray:
        """Lift (U_b, V_b) coefficients to the invariant frame."""
        return np.concatenate([[0.0], np.asarray(coefficients) / self.b]).astype(complex)

    def covector(self, coefficients: np.ndarray) -> np.ndarray:
        """Lift (θ_b, α_b, β_b) coefficients to the invariant coframe."""
        scale = np.array([self.b**2, self.b, self.b])
        return np.asarray(coefficients, dtype=complex) * scale

    def duality_residual(self) -> float:
        def pair(form: np.ndarray, vec: np.ndarray) -> complex:
            return complex(form[1:] @ vec)

        return max(
            abs(pair(self.theta1, self.z1) - 1.0),
            abs(pair(self.theta1, self.z1bar)),
            abs(pair(self.theta1bar, self.z1bar) - 1.0),
            abs(pair(self.theta1bar, self.z1)),
        )

    def levi_residual(self) -> float:
        """Deviation of i θ^1 ∧ θ^{1̄} from α_b ∧ β_b."""
        wedge = self.theta1[1] * self.theta1bar[2] - self.theta1[2] * self.theta1bar[1]
        return abs(1j * wedge - 1.0)


def complex_frame(nd: NormalizedContactData, p: CRParameters) -> ComplexFrame:
    a, c = p.a, p.c
    n = a * a + 1.0
    norm = np.sqrt(2.0 * c * n)
    z1 = np.array([n, c * (a - 1j)]) / norm
    theta1 = norm * np.array([0.0, -1j / (2.0 * (a - 1j)), 1j / (2.0 * c)])
    return ComplexFrame(
        z1=z1,
        z1bar=z1.conjugate(),
        theta1=theta1,
        theta1bar=theta1.conjugate(),
        b=p.b,
    )


def torsion_and_webster(
    nd: NormalizedContactData, a: float, c: float, B: float
) -> Tuple[complex, float]:
    """Closed-form ``(A^1_{1̄}, W)`` with B = b²; no range checks, for integrators."""
    p, q, r, s = nd.free_parameters
    n = a * a + 1.0
    torsion = 1j * n / (2.0 * c) * r - 1j * c * (a + 1j) / (2.0 * (a - 1j)) * p
    webster = (
        n / (2.0 * c) * r
        - 0.5 * c * p
        - c * q * q
        + 2.0 * a * q * s
        - n / c * s * s
    )
    return torsion / B, webster / B


def connection_theta_coefficient(nd: NormalizedContactData, a: float, c: float, B: float) -> float:
    """c_θ with B = b²."""
    p, r = nd.c2_13, nd.c3_12
    n = a * a + 1.0
    return (0.5 * c * p - n / (2.0 * c) * r) / B


def invariants_closed_form(nd: NormalizedContactData, p: CRParameters) -> PseudohermitianInvariants:
    a, b, c = p.a, p.b, p.c
    q, s = nd.c2_23, nd.c3_23
    n = a * a + 1.0
    torsion, webster = torsion_and_webster(nd, a, c, p.B)
    # The 1/b factor comes from dα_b(U_b, V_b) = c^2_23 / b.
    c_Z = 1j * (c * (a - 1j) * q - n * s) / (np.sqrt(2.0 * c * n) * b)
    return PseudohermitianInvariants(
        c_theta=connection_theta_coefficient(nd, a, c, p.B),
        c_Z=complex(c_Z),
        torsion=complex(torsion),
        webster=float(webster),
    )


class StructurePairings(NamedTuple):
    """Raw complex values read off dθ^1 before any reality projection."""

    c_theta: complex
    c_Z: complex
    torsion: complex


def structure_pairings(nd: NormalizedContactData, p: CRParameters) -> StructurePairings:
    """Evaluate dθ^1 on (Z_1, Z_{1̄}), (T_b, Z_1) and (T_b, Z_{1̄}).

    With dθ^1 = θ^1 ∧ ω_1^1 + A^1_{1̄} θ ∧ θ^{1̄} and
    ω_1^1 = i c_θ θ + i c_Z θ^1 + i c̄_Z θ^{1̄} these pairings are
    i c̄_Z, −i c_θ and A^1_{1̄}.
    """
    frame = complex_frame(nd, p)
    form = frame.covector(frame.theta1)
    reeb = frame.reeb()
    z1 = frame.vector(frame.z1)
    z1bar = frame.vector(frame.z1bar)
    tensor = nd.constants.tensor

    def d_theta1(left: np.ndarray, right: np.ndarray) -> complex:
        return complex(np.einsum("i,j,ijk,k->", form, left, tensor, right))

    c_Z = (d_theta1(z1, z1bar) / 1j).conjugate()
    c_theta = 1j * d_theta1(reeb, z1)
    torsion = d_theta1(reeb, z1bar)
    return StructurePairings(c_theta=c_theta, c_Z=c_Z, torsion=torsion)


def invariants_from_structure_equations(
    nd: NormalizedContactData, p: CRParameters
) -> PseudohermitianInvariants:
    pairings = structure_pairings(nd, p)
    c_theta = pairings.c_theta.real
    webster = -c_theta - 2.0 * abs(pairings.c_Z) ** 2
    return PseudohermitianInvariants(
        c_theta=c_theta,
        c_Z=pairings.c_Z,
        torsion=pairings.torsion,
        webster=webster,
    )


def connection_form(nd: NormalizedContactData, p: CRParameters) -> np.ndarray:
    """Coefficients of ω_1^1 on (θ_b, α_b, β_b)."""
    inv = invariants_closed_form(nd, p)
    frame = complex_frame(nd, p)
    c_Z = inv.c_Z
    return np.array(
        [
            1j * inv.c_theta,
            1j * (c_Z * frame.theta1[1] + c_Z.conjugate() * frame.theta1bar[1]),
            1j * (c_Z * frame.theta1[2] + c_Z.conjugate() * frame.theta1bar[2]),
        ]
    )


def rescale_b(p: CRParameters, lam: float) -> CRParameters:
    """Constant gauge change θ ↦ λ²θ; torsion and W scale by 1/λ²."""
    lam = _positive("lambda", lam)
    return CRParameters(p.a, lam * p.b, p.c)


def torsion_matrix(a: float, c: float, A11: complex) -> np.ndarray:
    """Real endomorphism A of the contact plane on (U, V) for lowered torsion A_{11}."""
    c = _positive("c", c)
    re, im = A11.real, A11.imag
    n = a * a + 1.0
    return np.array(
        [
            [re + a * im, -im * n / c],
            [-(re * (-2.0 * a * c / n) + im * (1.0 - a * a) * c / n), -(re + a * im)],
        ]
    )


def reeb_adjoint(nd: NormalizedContactData) -> np.ndarray:
    """ad_{X_1} restricted to span(X_2, X_3)."""
    return -nd.constants.tensor[1:, 0, 1:]


def lie_derivative_reeb_J(nd: NormalizedContactData, a: float, c: float) -> np.ndarray:
    """(L_T J)(X) = [T, JX] − J[T, X] on span(X_2, X_3), b = 1."""
    J = j_endomorphism(a, c)
    ad = reeb_adjoint(nd)
    return ad @ J - J @ ad

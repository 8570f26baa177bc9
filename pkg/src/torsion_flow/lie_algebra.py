"""Structure constants of homogeneous contact 3-manifolds.

Conventions: ``dω^i = Σ_{j<k} c^i_{jk} ω^j ∧ ω^k`` and the dual bracket is
``[X_j, X_k] = −Σ_i c^i_{jk} X_i``. Indices in the public API are 1-based to
match the usual notation; arrays are 0-based.
"""

from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, Iterable, Tuple

import numpy as np
import structlog

from .errors import (
    AntisymmetryViolation,
    InvalidParameter,
    JacobiViolation,
    NormalizationFailed,
    NotContact,
)

logger = structlog.get_logger(__name__)

JACOBI_TOLERANCE = 1e-12
ANTISYMMETRY_TOLERANCE = 1e-12
CONTACT_TOLERANCE = 1e-12
SIGN_TOLERANCE = 1e-12
NORMALIZATION_TOLERANCE = 1e-10

# Lower index pairs (j, k), j < k, in storage order: 12, 13, 23.
INDEX_PAIRS: Tuple[Tuple[int, int], ...] = ((0, 1), (0, 2), (1, 2))

# Standard compatible complex structure on a symplectic basis.
STANDARD_J = np.array([[0.0, -1.0], [1.0, 0.0]])


def _key(i: int, j: int, k: int) -> str:
    return f"c{i}_{j}{k}"


@dataclass(frozen=True)
class StructureConstants:
    """Upper-triangle storage of c^i_{jk}; antisymmetry holds by construction."""

    upper: Tuple[float, ...]
    _tensor: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        values = tuple(float(v) for v in self.upper)
        if len(values) != 9:
            raise InvalidParameter(f"Expected 9 upper-triangle entries, got {len(values)}")
        if not all(np.isfinite(values)):
            raise InvalidParameter(f"Structure constants must be finite: {values}")
        object.__setattr__(self, "upper", values)

        tensor = np.zeros((3, 3, 3))
        for i in range(3):
            for n, (j, k) in enumerate(INDEX_PAIRS):
                tensor[i, j, k] = values[3 * i + n]
                tensor[i, k, j] = -values[3 * i + n]
        tensor.setflags(write=False)
        object.__setattr__(self, "_tensor", tensor)

    @classmethod
    def from_tensor(cls, tensor: np.ndarray) -> "StructureConstants":
        """Build from a full 3×3×3 array, reading only the upper triangle."""
        arr = np.asarray(tensor, dtype=float)
        return cls(tuple(arr[i, j, k] for i in range(3) for (j, k) in INDEX_PAIRS))

    @classmethod
    def from_entries(cls, entries: Dict[Tuple[int, int, int], float]) -> "StructureConstants":
        """Build from 1-based ``{(i, j, k): value}`` entries with j < k; the rest are zero."""
        tensor = np.zeros((3, 3, 3))
        for (i, j, k), value in entries.items():
            if not (1 <= i <= 3 and 1 <= j < k <= 3):
                raise InvalidParameter(f"Entry index ({i},{j},{k}) must satisfy j < k")
            tensor[i - 1, j - 1, k - 1] = value
        return cls.from_tensor(tensor)

    @property
    def tensor(self) -> np.ndarray:
        """Full antisymmetric array ``tensor[i, j, k] = c^{i+1}_{j+1,k+1}`` (read-only)."""
        return self._tensor

    def c(self, i: int, j: int, k: int) -> float:
        """Return c^i_{jk} with 1-based indices."""
        return float(self._tensor[i - 1, j - 1, k - 1])

    def scaled(self, factor: float) -> "StructureConstants":
        return StructureConstants(tuple(factor * v for v in self.upper))

    @property
    def scale(self) -> float:
        return float(max(abs(v) for v in self.upper))

    def to_dict(self) -> Dict[str, float]:
        return {
            _key(i + 1, j + 1, k + 1): self.upper[3 * i + n]
            for i in range(3)
            for n, (j, k) in enumerate(INDEX_PAIRS)
        }

    @classmethod
    def from_dict(cls, data: Dict[str, float]) -> "StructureConstants":
        entries = {}
        for name, value in data.items():
            i, jk = name[1:].split("_")
            entries[(int(i), int(jk[0]), int(jk[1]))] = float(value)
        return cls.from_entries(entries)


def jacobi_residual(sc: StructureConstants) -> float:
    """Max-norm of the cyclic sum [X_a,[X_b,X_c]] + [X_b,[X_c,X_a]] + [X_c,[X_a,X_b]]."""
    f = -sc.tensor  # [X_j, X_k] = Σ_i f[i, j, k] X_i
    cyclic = (
        np.einsum("mbc,nam->nabc", f, f)
        + np.einsum("mca,nbm->nabc", f, f)
        + np.einsum("mab,ncm->nabc", f, f)
    )
    return float(np.max(np.abs(cyclic)))


def _unit_scale(sc: StructureConstants) -> float:
    contact = abs(sc.c(1, 2, 3))
    if contact > JACOBI_TOLERANCE:
        return contact
    return sc.scale or 1.0


def validate(raw: Iterable) -> StructureConstants:
    """Validate a raw 3×3×3 array of structure constants."""
    arr = np.asarray(raw, dtype=float)
    if arr.shape != (3, 3, 3):
        raise InvalidParameter(f"Structure constants must have shape (3, 3, 3), got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise InvalidParameter("Structure constants must be finite")

    skew = float(np.max(np.abs(arr + arr.transpose(0, 2, 1))))
    if skew > ANTISYMMETRY_TOLERANCE:
        raise AntisymmetryViolation(
            f"c[i][j][k] + c[i][k][j] reaches {skew:.3e}; constants must be antisymmetric"
        )

    sc = StructureConstants.from_tensor(arr)
    residual = jacobi_residual(sc.scaled(1.0 / _unit_scale(sc)))
    if residual > JACOBI_TOLERANCE:
        raise JacobiViolation(residual, JACOBI_TOLERANCE)
    return sc


def levi_matrix(sc: StructureConstants, theta_coeffs: Iterable[float]) -> np.ndarray:
    """Matrix of dθ on the invariant frame: ``dθ(X_j, X_k)``."""
    theta = np.asarray(theta_coeffs, dtype=float)
    return np.einsum("i,ijk->jk", theta, sc.tensor)


def contact_volume(sc: StructureConstants, theta_coeffs: Iterable[float]) -> float:
    """Coefficient of θ∧dθ on ω^1∧ω^2∧ω^3."""
    theta = np.asarray(theta_coeffs, dtype=float)
    omega = levi_matrix(sc, theta)
    dual = np.array([omega[1, 2], omega[2, 0], omega[0, 1]])
    return float(theta @ dual)


def reeb_vector(sc: StructureConstants, theta_coeffs: Iterable[float]) -> np.ndarray:
    """Solve θ(T) = 1, dθ(T, ·) = 0 for the Reeb field T in the invariant frame."""
    theta = np.asarray(theta_coeffs, dtype=float)
    if theta.shape != (3,):
        raise InvalidParameter(f"theta must have 3 coefficients, got shape {theta.shape}")

    volume = contact_volume(sc, theta)
    if abs(volume) < CONTACT_TOLERANCE:
        raise NotContact(volume)

    omega = levi_matrix(sc, theta)
    # Kernel of Ω^T is one-dimensional; adding θθ^T makes the system regular.
    system = omega.T + np.outer(theta, theta)
    return np.linalg.solve(system, theta)


def change_basis(sc: StructureConstants, frame: np.ndarray) -> StructureConstants:
    """Structure constants of the frame whose vectors are the columns of ``frame``."""
    frame = np.asarray(frame, dtype=float)
    inverse = np.linalg.inv(frame)
    tensor = np.einsum("ci,ijk,ja,kb->cab", inverse, sc.tensor, frame, frame)
    return StructureConstants.from_tensor(tensor)


def is_unimodular(sc: StructureConstants) -> bool:
    """Tr ad_{X_i} = 0 for every i, i.e. Σ_j c^j_{ij} = 0."""
    traces = np.einsum("jij->i", sc.tensor)
    tolerance = SIGN_TOLERANCE * max(1.0, sc.scale)
    return bool(np.all(np.abs(traces) <= tolerance))


@dataclass(frozen=True)
class NormalizedContactData:
    """Constants in a frame with c^1_{23} = 1 and c^1_{12}=c^1_{13}=c^2_{12}=c^3_{13}=0."""

    constants: StructureConstants

    VANISHING = ((1, 1, 2), (1, 1, 3), (2, 1, 2), (3, 1, 3))

    def __post_init__(self) -> None:
        sc = self.constants
        if sc.c(1, 2, 3) != 1.0:
            raise NormalizationFailed(f"c1_23 must equal 1, got {sc.c(1, 2, 3)!r}")
        nonzero = [_key(*idx) for idx in self.VANISHING if sc.c(*idx) != 0.0]
        if nonzero:
            raise NormalizationFailed(f"Coefficients {nonzero} must vanish")

    @classmethod
    def from_free(
        cls,
        c2_13: float = 0.0,
        c2_23: float = 0.0,
        c3_12: float = 0.0,
        c3_23: float = 0.0,
    ) -> "NormalizedContactData":
        """Build from the four free parameters, checking Jacobi."""
        sc = StructureConstants.from_entries(
            {
                (1, 2, 3): 1.0,
                (2, 1, 3): c2_13,
                (2, 2, 3): c2_23,
                (3, 1, 2): c3_12,
                (3, 2, 3): c3_23,
            }
        )
        residual = jacobi_residual(sc)
        if residual > JACOBI_TOLERANCE:
            raise JacobiViolation(residual, JACOBI_TOLERANCE)
        return cls(sc)

    @property
    def c2_13(self) -> float:
        return self.constants.c(2, 1, 3)

    @property
    def c2_23(self) -> float:
        return self.constants.c(2, 2, 3)

    @property
    def c3_12(self) -> float:
        return self.constants.c(3, 1, 2)

    @property
    def c3_23(self) -> float:
        return self.constants.c(3, 2, 3)

    @property
    def free_parameters(self) -> Tuple[float, float, float, float]:
        return (self.c2_13, self.c2_23, self.c3_12, self.c3_23)

    def to_dict(self) -> Dict[str, float]:
        return dict(zip(("c2_13", "c2_23", "c3_12", "c3_23"), self.free_parameters))


def _kernel_basis(theta: np.ndarray, omega: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Symplectic basis (U, V) of ker θ with dθ(U, V) = 1."""
    pivot = int(np.argmax(np.abs(theta)))
    others = [j for j in range(3) if j != pivot]
    vectors = []
    for j in others:
        v = np.zeros(3)
        v[j] = 1.0
        v[pivot] = -theta[j] / theta[pivot]
        vectors.append(v)
    u, v = vectors
    pairing = float(u @ omega @ v)
    if pairing < 0:
        v = -v
        pairing = -pairing
    root = np.sqrt(pairing)
    return u / root, v / root


def _canonical_sign(vector: np.ndarray) -> np.ndarray:
    for entry in vector:
        if abs(entry) > NORMALIZATION_TOLERANCE:
            return vector if entry > 0 else -vector
    return vector


def normalize_frame(
    sc: StructureConstants, theta_coeffs: Iterable[float]
) -> Tuple[NormalizedContactData, np.ndarray]:
    """Bring (sc, θ) to normalized form.

    Returns the normalized data and the change of basis whose columns are the
    new frame vectors (T, X, JX) written in the input frame.
    """
    theta = np.asarray(theta_coeffs, dtype=float)
    reeb = reeb_vector(sc, theta)
    omega = levi_matrix(sc, theta)
    u, v = _kernel_basis(theta, omega)

    symplectic = change_basis(sc, np.column_stack([reeb, u, v]))
    # ad_T restricted to ker θ, written on (U, V)
    ad_reeb = -symplectic.tensor[1:, 0, 1:]
    h = 0.5 * (ad_reeb @ STANDARD_J - STANDARD_J @ ad_reeb)
    h = 0.5 * (h + h.T)

    if np.max(np.abs(h)) <= NORMALIZATION_TOLERANCE * max(1.0, sc.scale):
        eigen = np.array([1.0, 0.0])
    else:
        _, vectors = np.linalg.eigh(h)
        eigen = _canonical_sign(vectors[:, -1])
    rotated = STANDARD_J @ eigen

    frame = np.column_stack(
        [
            reeb,
            eigen[0] * u + eigen[1] * v,
            rotated[0] * u + rotated[1] * v,
        ]
    )
    candidate = change_basis(sc, frame)
    contact = candidate.c(1, 2, 3)
    if contact <= NORMALIZATION_TOLERANCE:
        raise NormalizationFailed(f"c1_23={contact:.3e} after normalization is not positive")
    if contact != 1.0:
        frame[:, 1:] /= np.sqrt(contact)
        candidate = change_basis(sc, frame)

    tolerance = NORMALIZATION_TOLERANCE * max(1.0, candidate.scale)
    defects = {
        _key(*idx): candidate.c(*idx) for idx in NormalizedContactData.VANISHING
    }
    defects["c1_23 - 1"] = candidate.c(1, 2, 3) - 1.0
    failing = {name: value for name, value in defects.items() if abs(value) > tolerance}
    if failing:
        logger.warning("normalization_failed", defects=failing)
        raise NormalizationFailed(f"Normalized frame fails verification: {failing}")

    entries = candidate.to_dict()
    for idx in NormalizedContactData.VANISHING:
        entries[_key(*idx)] = 0.0
    entries[_key(1, 2, 3)] = 1.0
    data = NormalizedContactData(StructureConstants.from_dict(entries))
    logger.debug("frame_normalized", free=data.to_dict())
    return data, frame


class Geometry(Enum):
    """Simply connected model groups of homogeneous contact 3-manifolds."""

    SU2 = "SU2"
    SL2R_HYPERBOLIC = "SL2R_hyperbolic"
    SL2R_MIXED = "SL2R_mixed"
    E2 = "E2"
    E11 = "E11"
    HEISENBERG = "Heisenberg"
    NOT_UNIMODULAR = "NotUnimodular"

    @property
    def label(self) -> str:
        return _LABELS[self]


_LABELS = {
    Geometry.SU2: "SU2",
    Geometry.SL2R_HYPERBOLIC: "SL~(2,R)",
    Geometry.SL2R_MIXED: "SL~(2,R)",
    Geometry.E2: "E(2)",
    Geometry.E11: "E(1,1)",
    Geometry.HEISENBERG: "Heisenberg",
    Geometry.NOT_UNIMODULAR: "non-unimodular",
}


@dataclass(frozen=True)
class GeometryClass:
    geometry: Geometry
    admits_torsion_free: bool

    @property
    def unimodular(self) -> bool:
        return self.geometry is not Geometry.NOT_UNIMODULAR

    def __str__(self) -> str:
        torsion_free = "yes" if self.admits_torsion_free else "no"
        return f"{self.geometry.label} (torsion-free J: {torsion_free})"


def sign(value: float, tolerance: float = SIGN_TOLERANCE) -> int:
    if abs(value) <= tolerance:
        return 0
    return 1 if value > 0 else -1


# Keyed by the signs of (c^2_{31}, c^3_{12}) = (−c^2_{13}, c^3_{12}).
# (+,−), (+,0) and (−,0) are the e_2 ↔ e_3 relabelings of (−,+), (0,+), (0,−).
GEOMETRY_TABLE: Dict[Tuple[int, int], Tuple[Geometry, bool]] = {
    (1, 1): (Geometry.SU2, True),
    (-1, -1): (Geometry.SL2R_HYPERBOLIC, True),
    (-1, 1): (Geometry.SL2R_MIXED, False),
    (1, -1): (Geometry.SL2R_MIXED, False),
    (0, 1): (Geometry.E2, False),
    (1, 0): (Geometry.E2, False),
    (0, -1): (Geometry.E11, False),
    (-1, 0): (Geometry.E11, False),
    (0, 0): (Geometry.HEISENBERG, True),
}


def classify_geometry(nd: NormalizedContactData) -> GeometryClass:
    """Classify by the sign table; non-unimodular data is reported, not rejected."""
    signs = (sign(-nd.c2_13), sign(nd.c3_12))
    if sign(nd.c2_23) != 0 or sign(nd.c3_23) != 0:
        return GeometryClass(Geometry.NOT_UNIMODULAR, admits_torsion_free=signs == (0, 0))
    geometry, torsion_free = GEOMETRY_TABLE[signs]
    return GeometryClass(geometry, torsion_free)

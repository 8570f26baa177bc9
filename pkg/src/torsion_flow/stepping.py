"""Explicit Runge-Kutta steps from Butcher tableaux."""

from dataclasses import dataclass
from typing import Callable

import numpy as np

VectorField = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class ButcherTableau:
    a: np.ndarray
    b: np.ndarray
    c: np.ndarray
    order: int

    @property
    def stages(self) -> int:
        return len(self.b)


def _classical_rk4() -> ButcherTableau:
    a = np.zeros((4, 4))
    a[1, 0] = 1 / 2
    a[2, 1] = 1 / 2
    a[3, 2] = 1
    b = np.array([1 / 6, 1 / 3, 1 / 3, 1 / 6])
    c = a.sum(axis=1)
    return ButcherTableau(a=a, b=b, c=c, order=4)


RK4 = _classical_rk4()


def explicit_step(
    f: VectorField, y: np.ndarray, h: float, tableau: ButcherTableau = RK4
) -> np.ndarray:
    """One step of an autonomous explicit method; ``h`` may be negative."""
    k = np.zeros((tableau.stages, len(y)))
    for i in range(tableau.stages):
        k[i] = f(y + h * (tableau.a[i, :i] @ k[:i]))
    return y + h * (tableau.b @ k)


def advance(
    f: VectorField,
    y: np.ndarray,
    span: float,
    max_step: float,
    tableau: ButcherTableau = RK4,
) -> np.ndarray:
    """Integrate over ``span`` (either sign) with equal substeps no longer than ``max_step``."""
    if span == 0.0:
        return np.array(y, dtype=float)
    substeps = max(1, int(np.ceil(abs(span) / max_step - 1e-12)))
    h = span / substeps
    state = np.array(y, dtype=float)
    for _ in range(substeps):
        state = explicit_step(f, state, h, tableau)
    return state

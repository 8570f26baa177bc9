"""Exception hierarchy for Torsion Flow.

Input problems subclass ``ValueError`` as well, so callers that only know
about ``ValueError`` keep working.
"""

from typing import Optional


class TorsionFlowError(Exception):
    """Base class for every error raised by this package."""


class AntisymmetryViolation(TorsionFlowError, ValueError):
    """Raw structure constants are not antisymmetric in their lower indices."""


class JacobiViolation(TorsionFlowError, ValueError):
    """Structure constants fail the Jacobi identity."""

    def __init__(self, residual: float, tolerance: float):
        self.residual = residual
        self.tolerance = tolerance
        super().__init__(
            f"Jacobi identity violated: residual {residual:.3e} exceeds {tolerance:.1e}"
        )


class NotContact(TorsionFlowError, ValueError):
    """The one-form is not a contact form."""

    def __init__(self, volume: float):
        self.volume = volume
        super().__init__(f"theta ^ dtheta = {volume:.3e} vanishes; form is not contact")


class NormalizationFailed(TorsionFlowError, ValueError):
    """The normalized frame did not pass post-hoc verification."""


class InvalidParameter(TorsionFlowError, ValueError):
    """A numeric parameter is outside its admissible range."""


class MissingField(TorsionFlowError, ValueError):
    """A flow state lacks a field required by the flow kind or functional."""

    def __init__(self, field: str, context: str):
        self.field = field
        super().__init__(f"{context} requires '{field}' in the state")


class DomainViolation(TorsionFlowError, ValueError):
    """A state or range leaves the region where the geometry is defined."""

    def __init__(self, field: str, value: float):
        self.field = field
        self.value = value
        super().__init__(f"{field}={value!r} is outside the admissible domain")


class CalibrationAmbiguous(TorsionFlowError):
    """No torsion-norm constant reproduces the measured evolution."""


class InvalidOptions(TorsionFlowError, ValueError):
    """Integrator options are inconsistent."""


class UnknownPreset(TorsionFlowError, LookupError):
    """No preset is registered under the requested name."""

    def __init__(self, name: str, known: Optional[list[str]] = None):
        self.name = name
        hint = f" (known: {', '.join(known)})" if known else ""
        super().__init__(f"Unknown preset '{name}'{hint}")

    def __str__(self) -> str:
        return str(self.args[0])


class BlowUpAt(TorsionFlowError):
    """An exact solution ceases to exist at ``t_star``."""

    def __init__(self, t_star: float):
        self.t_star = t_star
        super().__init__(f"solution blows up at t*={t_star:.17g}")


class ConstraintViolated(TorsionFlowError):
    """The normalization constraint of a coupled flow does not hold."""

    def __init__(self, value: float):
        self.value = value
        super().__init__(f"constraint value {value:.17g} differs from 1")

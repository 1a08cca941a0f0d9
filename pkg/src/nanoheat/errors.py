"""Exception types shared across the package."""


class NanoheatError(Exception):
    """Base class for all package errors."""


class DomainError(NanoheatError, ValueError):
    """Argument outside the mathematical domain of an operation."""


class SingularityError(NanoheatError, ZeroDivisionError):
    """Evaluation requested exactly at a pole or kernel singularity."""


class RegimeError(NanoheatError, ValueError):
    """Material / frequency parameters incompatible with the requested regime."""


class AssumptionViolationError(NanoheatError, ValueError):
    """A smallness assumption required by a formula does not hold."""


class MeshError(NanoheatError, ValueError):
    """Mesh construction or mesh compatibility failure."""


class ShapeError(NanoheatError, ValueError):
    """Mismatched sample grids or array shapes."""


class ProbeError(NanoheatError, ValueError):
    """Probe point or time outside the computed grid."""


class CoefficientError(NanoheatError, ValueError):
    """Nonpositive or inconsistent physical coefficients."""


class ResonanceTooExactError(NanoheatError, RuntimeError):
    """Discrete scattering system is numerically singular at the chosen frequency."""

    def __init__(self, condition: float, resonance_factor: float):
        self.condition = condition
        self.resonance_factor = resonance_factor
        super().__init__(
            f"scattering system condition {condition:.3e} exceeds 1e12 "
            f"(resonance factor {resonance_factor:.3e})"
        )


class DegenerateBasisError(NanoheatError, ValueError):
    """Rank-deficient Gram matrix in a Galerkin projection."""


class FitError(NanoheatError, ValueError):
    """Not enough sweep points for a scaling fit."""


class ConfigError(NanoheatError, ValueError):
    """Malformed or inconsistent experiment configuration."""

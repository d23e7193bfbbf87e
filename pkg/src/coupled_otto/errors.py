"""Exception hierarchy.

Configuration problems derive from :class:`ConfigError` (CLI exit code 2);
numerical and physical failures derive from :class:`NumericalError`
(CLI exit code 3).
"""


class OttoError(Exception):
    """Base class for every error raised by this package."""


class ConfigError(OttoError, ValueError):
    """An input violates a type invariant or the config schema."""


class NumericalError(OttoError, ArithmeticError):
    """A computation hit a singular or unphysical point."""


class DegenerateFactorization(NumericalError):
    """Gauss decomposition coordinate singularity in a single element."""

    def __init__(self, message, step=None):
        super().__init__(message if step is None else f"{message} (step {step})")
        self.step = step


class CompositionSingularity(NumericalError):
    """Vanishing denominator while composing factored elements."""

    def __init__(self, message, step=None):
        super().__init__(message if step is None else f"{message} (step {step})")
        self.step = step


class DegenerateField(NumericalError):
    """Zero field: the triplet eigenbasis is not defined."""


class NonUnitary(NumericalError):
    """Assembled evolution operator is not unitary within tolerance."""


class StochasticityViolation(NumericalError):
    """Transition matrix is not doubly stochastic within tolerance."""


class UnphysicalTriple(NumericalError):
    """Persistence triple not realizable by any unitary."""


class RangeError(NumericalError, OverflowError):
    """Boltzmann exponent too large for double precision."""


class InconsistentEnergies(NumericalError):
    """Work does not equal the sum of the exchanged heats."""


class NoEngineRegion(NumericalError):
    """Efficiency maximization found no engine-regime point."""

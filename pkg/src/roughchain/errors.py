"""Exception hierarchy for the pricing engine."""


class RoughChainError(Exception):
    """Base class for all engine errors."""


class DomainError(RoughChainError, ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class ParameterError(RoughChainError, ValueError):
    """A model/market/kernel parameter violates its admissibility condition."""


class GridError(RoughChainError, ValueError):
    """A state grid cannot be built or fails its spacing invariants."""


class GeneratorError(RoughChainError, ValueError):
    """A rate matrix could not be constructed as a valid generator."""


class NumericalError(RoughChainError, RuntimeError):
    """An iterative numerical procedure failed to reach its tolerance."""


class ConfigError(RoughChainError, ValueError):
    """A run configuration is malformed or inconsistent."""

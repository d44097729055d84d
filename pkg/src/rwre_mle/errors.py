"""Exception types raised across the package."""


class RwreError(Exception):
    """Base class for package errors."""


class DomainError(RwreError, ValueError):
    """Parameter outside the family's valid domain."""


class RegimeError(RwreError):
    """Operation requires a regime the family is not in."""


class StepBudgetExceeded(RwreError):
    """Walk did not reach its target within ``max_steps``."""


class RangeExceeded(RwreError):
    """Walk reached the lowest sampled site of the environment."""


class PopulationExplosion(RwreError):
    """Branching chain exceeded its population safety cap."""


class SeriesDivergence(RwreError):
    """Running product of odds ratios did not fall below tolerance."""


class EmptyHistory(RwreError):
    """No observed move for the requested site history."""


class NonInvertible(RwreError):
    """Moment system has no admissible solution."""


class NonFinite(RwreError):
    """Criterion is -inf over the whole search grid."""


class ConfigError(RwreError, ValueError):
    """Malformed or inconsistent configuration."""

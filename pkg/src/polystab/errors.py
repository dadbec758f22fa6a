"""Typed errors shared across the toolkit.

Every dimension/domain violation raises a structured exception; nothing is
silently clamped or coerced.
"""


class PolystabError(Exception):
    """Base class for all toolkit errors."""


class DimensionMismatchError(PolystabError):
    """A vector/matrix does not conform to the owning system."""

    def __init__(self, what: str, expected: int, actual: int):
        self.what = what
        self.expected = expected
        self.actual = actual
        super().__init__(f"{what}: expected length {expected}, got {actual}")


class DomainError(PolystabError):
    """An argument lies outside its mathematical domain."""


class NonFiniteStateError(PolystabError):
    """A state contains NaN or Inf entries (constructed or propagated)."""


class ConfigError(PolystabError):
    """An experiment configuration is malformed or inconsistent."""


class DiagnosticFailure(PolystabError):
    """A numerical diagnostic (energy identity, contraction bound) failed."""

class PolymixError(Exception):
    """Base class for all toolkit errors."""


class DomainError(PolymixError, ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class UsageError(PolymixError, ValueError):
    """An operation was called with an inconsistent combination of arguments."""


class SizeError(PolymixError, ValueError):
    """A requested computation exceeds the supported problem size."""


class FitError(PolymixError, ValueError):
    """Too few usable points for a regression."""


class DegenerateInputError(PolymixError, ValueError):
    """Input samples carry no information (e.g. all equal)."""


class ConfigError(PolymixError, ValueError):
    """Experiment configuration failed validation."""


class ObservableLookupError(PolymixError, LookupError):
    """A tabulated observable was evaluated outside its table."""


class UnsupportedOperationError(PolymixError, NotImplementedError):
    """The chain does not provide the requested capability."""


class TruncationWarning(UserWarning):
    """Probability mass lost to truncation or discretization exceeds tolerance."""

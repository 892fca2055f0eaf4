"""Exception hierarchy shared by every module of the package."""


class PollingError(Exception):
    """Base class for all errors raised by polling_lab."""


class ParseError(PollingError):
    """A model description could not be parsed."""


class ParamError(PollingError, ValueError):
    """A parameter is out of its admissible range."""


class StabilityError(PollingError):
    """The total load is not below one."""


class DomainError(PollingError, ValueError):
    """A transform was requested outside its domain."""


class MissingInputError(PollingError):
    """A quantity needed for the computation was not supplied."""


class ConvergenceError(PollingError):
    """An iteration hit its cap before reaching the tolerance."""


class UnsupportedDiscipline(PollingError):
    """The operation needs a branching-type discipline."""


class SingularityError(PollingError):
    """A removable singularity could not be resolved, or a pole was hit."""


class InversionError(PollingError):
    """Numerical PGF inversion produced an inconsistent result."""


class InsufficientSamples(PollingError):
    """Too few logged epochs for a reliable estimate."""


class UnknownProbe(PollingError, KeyError):
    """The requested probe was not registered before the simulation."""


class DivergenceError(PollingError):
    """A simulated queue grew past the runaway threshold."""

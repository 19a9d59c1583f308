"""Exception hierarchy shared across the package."""


class FactorStreamError(Exception):
    """Base class for all package errors."""


class ConfigError(FactorStreamError):
    """Invalid configuration (CLI exit code 2)."""


class GraphError(FactorStreamError):
    """Structural error while building a model graph."""


class WiringError(FactorStreamError):
    """Failure while turning a graph into a reactive network (CLI exit code 3)."""


class NoRuleError(WiringError):
    """No message-update rule registered for a lookup key."""


class RuleRegistrationError(FactorStreamError):
    """Duplicate or ambiguous rule registration."""


class DistributionError(FactorStreamError):
    """Invalid distribution parameters or unsupported operation."""


class IncompatibleSupportError(DistributionError):
    """Operands of a product do not live on the same support."""


class ZeroMeasureError(DistributionError):
    """A normalized product has zero total mass (e.g. disjoint point masses)."""


class UndefinedMomentError(DistributionError):
    """The requested moment does not exist for this distribution."""


class StreamClosedError(FactorStreamError):
    """Pushed a value into a completed subject."""


class QuiescenceError(FactorStreamError):
    """The reactive network did not settle within the event budget."""

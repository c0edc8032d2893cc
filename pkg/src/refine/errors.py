"""Exception hierarchy shared by all refine modules."""


class RefineError(Exception):
    """Base class for every error raised by this package."""


class FormatError(RefineError):
    """A file could not be parsed; message carries the offending line number."""


class ValidationError(RefineError):
    """Input data violates an invariant (duplicate ids, NaN values, ...)."""


class ShapeError(RefineError, ValueError):
    """Array dimensions do not line up."""


class ParameterError(RefineError, ValueError):
    """A parameter is outside its allowed range."""


class SplitError(RefineError):
    """A dataset split cannot be produced as requested."""


class SessionError(RefineError):
    """A feedback session cannot be started or continued."""


class FeedbackError(RefineError):
    """Submitted feedback references items outside the current batch."""


class StateError(RefineError):
    """Operation not allowed in the session's current status."""


class ExportError(RefineError):
    """A training-data export cannot be produced."""


class MetricError(RefineError):
    """A metric is undefined for the given inputs."""

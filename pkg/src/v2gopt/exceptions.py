"""Exception types shared across the package."""


class V2gOptError(Exception):
    """Base class for all package-specific errors."""


class NetworkShapeError(V2gOptError):
    """A weight matrix or input vector has an inconsistent dimension.

    Carries the layer index and path ("convex" or "context") where the
    mismatch was detected.
    """

    def __init__(self, message, layer=None, path=None):
        if layer is not None:
            message = f"layer {layer} ({path or 'convex'} path): {message}"
        super().__init__(message)
        self.layer = layer
        self.path = path


class NonFiniteValueError(V2gOptError):
    """A forward or backward pass produced NaN or infinity."""

    def __init__(self, message, layer=None, batch_index=None):
        super().__init__(message)
        self.layer = layer
        self.batch_index = batch_index


class DataFormatError(V2gOptError):
    """A data file violates the documented schema.

    ``line`` is the 1-based line number of the offending row when known.
    """

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class InfeasibleProblemError(V2gOptError):
    """The charging constraint set is empty; message explains why."""


class ProjectionError(V2gOptError):
    """The projection routine failed to converge within its sweep budget."""

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class TrainingDivergedError(V2gOptError):
    """The training loss became non-finite."""

    def __init__(self, message, epoch=None, batch_index=None):
        super().__init__(message)
        self.epoch = epoch
        self.batch_index = batch_index


class DegenerateMetricError(V2gOptError):
    """A statistical metric is undefined for the given inputs (e.g. zero variance)."""


class ConfigError(V2gOptError):
    """A run configuration file is missing fields or references missing paths."""

    def __init__(self, message, field=None):
        if field is not None:
            message = f"field '{field}': {message}"
        super().__init__(message)
        self.field = field

"""Exception hierarchy shared by all cascadenet modules."""


class CascadeNetError(Exception):
    """Base class for every error raised by this package."""


class ShapeError(CascadeNetError, ValueError):
    """Array dimensions do not agree."""


class ParameterError(CascadeNetError, ValueError):
    """An argument is outside its admissible range."""


class ConvergenceError(CascadeNetError, RuntimeError):
    """An iterative solver ran out of sweeps or iterations."""


class NumericalError(CascadeNetError, ArithmeticError):
    """An objective or gradient evaluated to a non-finite value."""

    def __init__(self, message, iteration=None):
        super().__init__(message)
        self.iteration = iteration


class TrainingError(CascadeNetError, RuntimeError):
    """Training a candidate net failed.

    ``net_index`` is 1-based; ``k`` is set when the failure happened inside a
    principal-component sweep.
    """

    def __init__(self, message, net_index=None, k=None):
        super().__init__(message)
        self.net_index = net_index
        self.k = k


class ParseError(CascadeNetError, ValueError):
    """Malformed dataset file. ``line`` is 1-based."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class LoadError(CascadeNetError, ValueError):
    """A model document could not be loaded or violates an invariant."""


class SchemaVersionError(LoadError):
    def __init__(self, found, supported):
        super().__init__(
            f"unsupported schema_version {found!r} (supported: {supported})"
        )
        self.found = found
        self.supported = supported


class ConfigError(CascadeNetError, ValueError):
    """Invalid run configuration. ``field`` names the offending setting."""

    def __init__(self, message, field=None):
        super().__init__(message)
        self.field = field

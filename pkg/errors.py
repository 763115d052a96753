class GlpinError(Exception):
    pass


class DomainError(GlpinError, ValueError):
    pass


class GridError(GlpinError, ValueError):
    pass


class ConfigError(GlpinError, ValueError):

    def __init__(self, field, message):
        super(ConfigError, self).__init__(f"{field}: {message}")
        self.field = field
        self.message = message


class SolverError(GlpinError, RuntimeError):

    def __init__(self, message, residual=None):
        super(SolverError, self).__init__(message if residual is None else f"{message} (residual {residual:.3e})")
        self.residual = residual


class ConvergenceError(SolverError):
    pass


class NonDegeneracyError(GlpinError, ValueError):
    pass


class ContourError(GlpinError, ValueError):
    pass


class MesoTableError(GlpinError, KeyError):
    pass


class FlowStall(GlpinError, RuntimeError):
    """Raised when the backtracking step of the gradient flow collapses below dt_min."""

    def __init__(self, message, state=None, trace=None):
        super(FlowStall, self).__init__(message)
        self.state = state
        self.trace = trace

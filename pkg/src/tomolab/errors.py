"""Exception types raised across tomolab."""


class TomolabError(Exception):
    """Base class for all library errors."""


class ConfigurationError(TomolabError, ValueError):
    pass


class ShapeError(TomolabError, ValueError):
    pass


class UnsupportedOrderError(TomolabError, ValueError):
    pass


class UnsupportedDimensionError(TomolabError, ValueError):
    pass


class DomainError(TomolabError, ValueError):
    pass


class InsufficientDataError(TomolabError, ValueError):
    pass


class DegenerateInputError(TomolabError, ValueError):
    pass


class PlacementError(TomolabError, ValueError):
    pass


class SizeError(TomolabError, ValueError):
    pass


class WeightError(TomolabError, ValueError):
    """A matrix weight or mixing is singular somewhere on the grid."""


class ConvergenceError(TomolabError, RuntimeError):
    def __init__(self, message, residual=None, iterations=None):
        super().__init__(message)
        self.residual = residual
        self.iterations = iterations


class DirichletEigenvalueError(TomolabError, RuntimeError):
    """Zero is a Dirichlet eigenvalue of the interior operator block."""


class TrappingError(TomolabError, RuntimeError):
    pass


class ShootingError(TomolabError, RuntimeError):
    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


class InvalidDataError(TomolabError, ValueError):
    pass


class NotFinslerError(TomolabError, ValueError):
    """The one-form is too large: ||beta||_{F*} < 1 fails."""


class NotClosedError(TomolabError, ValueError):
    pass


class PerturbationRegimeError(TomolabError, ValueError):
    pass

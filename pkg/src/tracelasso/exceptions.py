"""Exception types raised across the package."""


class InvalidInputError(ValueError):
    """Input violates a documented precondition (shape, symmetry, sign...)."""


class DomainError(ValueError):
    """An expansion or approximation is used outside its region of validity."""


class ConvergenceError(RuntimeError):
    """An iterative method hit its iteration cap before reaching tolerance.

    Attributes
    ----------
    iterations : int
        Number of iterations performed.
    residual : float
        Final residual (method specific, e.g. relative residual norm for CG).
    x : ndarray or None
        Last iterate, when available.
    """

    def __init__(self, message, iterations=0, residual=float("nan"), x=None):
        super().__init__(message)
        self.iterations = iterations
        self.residual = residual
        self.x = x

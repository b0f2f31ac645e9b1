"""Exception types raised across the package."""


class DomainError(ValueError):
    """Argument outside the domain of a function."""


class ArsInitError(ValueError):
    """Initial abscissae do not produce an integrable envelope."""


class ConcavityError(ValueError):
    """The target log-density was found not to be concave."""


class DegeneracyError(ArithmeticError):
    """A posterior scale matrix is not positive definite."""


class ChainError(RuntimeError):
    """A sampler iteration failed; carries the iteration index."""

    def __init__(self, iteration, cause):
        self.iteration = iteration
        self.cause = cause
        super().__init__(f"chain failed at iteration {iteration}: {cause!r}")

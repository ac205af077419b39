"""Exception types shared across the package."""


class ModelError(ValueError):
    """A distribution table or parameter is malformed (non-finite, non-monotone, ...)."""


class DomainError(ValueError):
    """An argument lies outside the mathematical domain of the requested quantity."""


class UnsupportedModelError(TypeError):
    """The operation is only defined for specific fading/attack families."""


class PreconditionError(ValueError):
    """The caller violated an operation contract (shape, budget, range)."""


class OutOfRegimeError(ValueError):
    """An asymptotic formula was requested outside its validity region."""


class CalibrationError(RuntimeError):
    """Copula calibration could not reach the requested correlation.

    Carries the best achievable value so callers can decide how to proceed.
    """

    def __init__(self, message: str, achieved: float, latent: float):
        super().__init__(message)
        self.achieved = achieved
        self.latent = latent

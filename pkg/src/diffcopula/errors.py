"""Exception and warning types raised across the package."""


class DiffCopulaError(Exception):
    """Base class for all package errors."""


class DomainError(DiffCopulaError, ValueError):
    pass


class ParamError(DiffCopulaError, ValueError):
    pass


class QuadratureError(DiffCopulaError, ArithmeticError):
    pass


class NonStationaryError(DiffCopulaError):
    pass


class ConvergenceError(DiffCopulaError):
    pass


class NonConvergenceError(ConvergenceError):
    """An optimizer failed to reach a finite optimum after all restarts."""


class BesselOverflowError(DiffCopulaError, OverflowError):
    pass


class BandwidthError(DiffCopulaError, ValueError):
    pass


class DegenerateSampleError(DiffCopulaError, ValueError):
    pass


class DerivativeError(DiffCopulaError):
    pass


class NonFiniteLikelihoodError(DiffCopulaError):
    def __init__(self, message, index=None):
        super().__init__(message)
        self.index = index


class MonotonicityError(DiffCopulaError, ValueError):
    pass


class DomainEscapeError(DiffCopulaError):
    pass


class SingularHessianError(DiffCopulaError, ArithmeticError):
    pass


class ConfigError(DiffCopulaError, ValueError):
    pass


class DataError(DiffCopulaError, ValueError):
    pass


class TailWarning(UserWarning):
    pass


class FellerWarning(UserWarning):
    pass

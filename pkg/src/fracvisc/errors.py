"""Exception hierarchy shared by all fracvisc modules."""


class FracviscError(Exception):
    """Base class for every error raised by this package."""


class InvalidOrder(FracviscError, ValueError):
    pass


class NonZeroMean(FracviscError, ValueError):
    """A negative-order operator was applied to a field carrying mass."""

    def __init__(self, msg, index=None):
        super().__init__(msg if index is None else f"{msg} (slice {index})")
        self.index = index


class GridMismatch(FracviscError, ValueError):
    pass


class CFLViolation(FracviscError, ValueError):
    pass


class NonFinite(FracviscError, FloatingPointError):
    pass


class MassDrift(FracviscError, ValueError):
    pass


class SupportViolation(FracviscError, ValueError):
    pass


class DegenerateJump(FracviscError, ValueError):
    pass


class RangeExceeded(FracviscError, ValueError):
    pass


class NotWeakSolution(FracviscError, ValueError):
    pass


class UnresolvedLayer(FracviscError, ArithmeticError):
    pass


class TraceMismatch(FracviscError, ValueError):
    pass


class MassMismatch(FracviscError, ValueError):
    pass


class NotFromConstant(FracviscError, ValueError):
    pass


class ConfigError(FracviscError, ValueError):
    pass

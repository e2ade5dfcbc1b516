"""Exception hierarchy shared by the library and the command line."""


class GMRFError(Exception):
    """Base class for all library errors."""


class InvalidArgumentError(GMRFError, ValueError):
    pass


class InsufficientDataError(GMRFError, ValueError):
    pass


class EmptyPatternSetError(InsufficientDataError):
    pass


class DegenerateError(GMRFError, ArithmeticError):
    """Data carries no usable spatial variation (CLI exit code 3)."""


class DegenerateFieldError(DegenerateError):
    pass


class DegenerateCovarianceError(DegenerateError):
    pass


class SingularMeanError(DegenerateError):
    """The mean estimator is singular at beta = 1/k."""


class PGMError(GMRFError, ValueError):
    def __init__(self, message, offset=None):
        if offset is not None:
            message = f"{message} (byte offset {offset})"
        super().__init__(message)
        self.offset = offset


class UnsupportedFormatError(PGMError):
    pass


class UnsupportedDepthError(PGMError):
    pass

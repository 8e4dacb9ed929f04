"""Exception hierarchy shared by all gridid modules."""


class GridIdError(Exception):
    """Base class for every error raised by this package."""


class InvalidArgument(GridIdError, ValueError):
    pass


class IllConditionedData(GridIdError):
    def __init__(self, message, condition_number=float("inf")):
        super().__init__(f"{message} (condition number {condition_number:.3e})")
        self.condition_number = condition_number


class DegenerateModel(GridIdError):
    pass


class ConversionError(GridIdError):
    def __init__(self, message, eigenvalue=None):
        if eigenvalue is not None:
            message = f"{message}: offending eigenvalue {eigenvalue!r}"
        super().__init__(message)
        self.eigenvalue = eigenvalue


class LeakageError(GridIdError):
    pass


class InsufficientExcitation(GridIdError):
    def __init__(self, message, freq=None, condition_number=None):
        super().__init__(message)
        self.freq = freq
        self.condition_number = condition_number


class UndefinedFit(GridIdError):
    pass


class NumericalError(GridIdError):
    pass

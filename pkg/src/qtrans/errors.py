"""Exception hierarchy shared by every module."""


class QTransError(Exception):
    """Base class for all library errors."""


class InputError(QTransError, ValueError):
    """Malformed or inconsistent user input (CLI exit code 2)."""


class InvalidPrime(InputError):
    pass


class LevelMismatch(InputError):
    pass


class NotRational(QTransError):
    pass


class PolySyntaxError(InputError):
    def __init__(self, message: str, position: int):
        super().__init__(f"{message} at position {position}")
        self.position = position


class UnknownVariable(InputError):
    pass


class SizeOutOfRange(InputError):
    pass


class BadPrime(InputError):
    pass


class ResourceLimit(QTransError):
    """A configured desk-scale cap was exceeded (CLI exit code 3)."""


class NotSubmersion(QTransError):
    pass


class PresentationUnsupported(QTransError):
    pass


class DecompositionMismatch(InputError):
    pass


class BudgetExceeded(ResourceLimit):
    pass


class ScaleOutOfRange(InputError):
    pass


class DimensionMismatch(InputError):
    pass


class WindowMismatch(InputError):
    pass

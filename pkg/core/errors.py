"""Exception hierarchy shared by every module and mapped to exit codes by the driver."""


class HPMError(Exception):
    """Base class for all hyper-process model errors"""


class InvalidArgumentError(HPMError, ValueError):
    """An argument violates an operation's precondition"""


class PreconditionError(InvalidArgumentError):
    """A task set cannot be used by the requested method"""


class NumericalError(HPMError, ArithmeticError):
    """A computation produced non-finite or inadmissible values"""


class FormatError(HPMError):
    """A model file is unreadable or has an unsupported format version"""

"""Exception hierarchy shared by the solvers and the command line."""


class LabError(Exception):
    """Base class for all errors raised by this package."""


class InvalidInputError(LabError, ValueError):
    pass


class OutOfRangeError(LabError, ValueError):
    pass


class ConvergenceError(LabError, RuntimeError):
    """Step size underflow; ``last_t`` is the last time reached."""

    def __init__(self, message: str, last_t: float):
        super().__init__(message)
        self.last_t = last_t


class BlowUpError(LabError, FloatingPointError):
    def __init__(self, message: str, time: float):
        super().__init__(message)
        self.time = time


class PositivityError(LabError, RuntimeError):
    def __init__(self, message: str, time: float, min_value: float):
        super().__init__(message)
        self.time = time
        self.min_value = min_value


class StepRejectedError(LabError, RuntimeError):
    """Time step above the stability bound; ``proposed_dt`` is admissible."""

    def __init__(self, message: str, proposed_dt: float):
        super().__init__(message)
        self.proposed_dt = proposed_dt


class DomainOverflowError(LabError, ValueError):
    pass


class ConfigError(LabError, ValueError):
    """Invalid run configuration; ``path`` locates the offending field."""

    def __init__(self, message: str, path: str = ""):
        super().__init__(f"{path}: {message}" if path else message)
        self.path = path

"""Exception types shared across the package."""


class QRepBenchError(Exception):
    """Base class for all package errors."""


class InvalidFidelity(QRepBenchError, ValueError):
    pass


class PurificationBelowThreshold(InvalidFidelity):
    """Purification only improves pairs whose fidelity exceeds 1/2."""


class IterationCapExceeded(QRepBenchError, RuntimeError):
    pass


class ResourceOverflow(QRepBenchError, OverflowError):
    pass


class SubsetTooLarge(QRepBenchError, ValueError):
    pass


class PatternSpaceTooLarge(QRepBenchError, ValueError):
    pass


class NoRepeaterPath(QRepBenchError):
    pass


class NotARepeater(QRepBenchError, KeyError):
    pass


class InstanceTooLarge(QRepBenchError, ValueError):
    pass


class NotPowerOfTwo(QRepBenchError, ValueError):
    pass


class GraphFormatError(QRepBenchError, ValueError):
    def __init__(self, message, lineno=None):
        self.lineno = lineno
        if lineno is not None:
            message = f"line {lineno}: {message}"
        super().__init__(message)


class EmptyInput(QRepBenchError, ValueError):
    pass

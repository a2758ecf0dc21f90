"""Exception types raised by energy_pyramid."""


class InvalidArgumentError(ValueError):
    """Raised when an input violates a shape, range or type invariant."""


class CapacityError(RuntimeError):
    """Raised when an exhaustive computation exceeds its size guard."""


class ParseError(ValueError):
    """Raised for malformed energy or sparse-triplet files.

    Carries the 1-based line number of the offending line when known.
    """

    def __init__(self, message, lineno=None, path=None):
        self.lineno = lineno
        self.path = path
        where = ""
        if path is not None:
            where += f"{path}:"
        if lineno is not None:
            where += f"{lineno}:"
        super().__init__(f"{where} {message}" if where else message)

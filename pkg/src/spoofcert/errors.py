class SpoofcertError(Exception):
    """Base class for all errors raised by spoofcert."""


class UsageError(SpoofcertError, ValueError):
    """An API was called with arguments violating its preconditions."""


class WidthMismatchError(UsageError):
    pass


class InvalidCidrError(SpoofcertError, ValueError):
    pass


class ParseError(SpoofcertError):
    """Malformed ruleset or ipassmt input.

    ``line`` is 1-based, or None when the error is not tied to a line.
    """

    def __init__(self, message, line=None):
        super().__init__(message)
        self.message = message
        self.line = line

    def __str__(self):
        if self.line is None:
            return self.message
        return f"line {self.line}: {self.message}"


class UnsupportedError(ParseError):
    pass


class CyclicChainError(SpoofcertError):
    def __init__(self, cycle):
        self.cycle = list(cycle)
        super().__init__("cyclic chain calls: " + " -> ".join(self.cycle))

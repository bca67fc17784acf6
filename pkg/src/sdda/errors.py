"""Exception types shared across the package."""


class ArgumentError(ValueError):
    """Raised when a caller passes arguments that violate an operation's contract."""


class NumericError(ArithmeticError):
    """Raised when a computation produces a non-finite value.

    ``where`` names the offending coordinate or loss term.
    """

    def __init__(self, message, where=None):
        super().__init__(message)
        self.where = where


class ParseError(ValueError):
    """Malformed input file; ``line`` is 1-based."""

    def __init__(self, message, line):
        super().__init__(f"line {line}: {message}")
        self.line = line


class ConfigError(ValueError):
    def __init__(self, message, line=None):
        prefix = f"line {line}: " if line is not None else ""
        super().__init__(prefix + message)
        self.line = line

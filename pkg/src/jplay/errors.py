"""Exception hierarchy shared by every module.

The CLI maps each family onto a stable exit code, so new exceptions should
derive from one of the three families below.
"""


class JPlayError(Exception):
    """Base class for all errors raised by this package."""


# -- configuration / parameter family (CLI exit 2) --------------------------

class ParameterError(JPlayError, ValueError):
    """A numeric parameter violates its documented invariant."""


class ConfigError(ParameterError):
    """Malformed or unknown configuration key."""


# -- data family (CLI exit 3) ------------------------------------------------

class InputError(JPlayError, ValueError):
    """Input data is malformed (non-finite, wrong labels, ...)."""


class ShapeError(InputError):
    """Matrix dimensions do not agree."""


class ParseError(InputError):
    """A text file could not be parsed; carries the 1-based line number."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class FormatError(InputError):
    """A binary file is malformed; carries the byte offset."""

    def __init__(self, message, offset=None):
        if offset is not None:
            message = f"offset {offset}: {message}"
        super().__init__(message)
        self.offset = offset


class StratificationError(InputError):
    """Some class has fewer samples than the requested number of folds."""


class RankError(InputError):
    """Requested output dimension exceeds the available rank."""


# -- numerical family (CLI exit 4) -------------------------------------------

class NumericalError(JPlayError, ArithmeticError):
    """Base for numerical breakdowns."""


class SingularityError(NumericalError):
    """A linear system is numerically singular."""


class DivergenceError(NumericalError):
    """An iteration produced non-finite values.

    ``trace`` holds whatever history was collected before the failure.
    """

    def __init__(self, message, trace=None):
        super().__init__(message)
        self.trace = trace if trace is not None else []

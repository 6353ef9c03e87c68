"""Exception hierarchy.

Input and configuration problems derive from :class:`InputError` (a
``ValueError``); numerical breakdowns derive from :class:`NumericalError`.
The CLI maps the first family to exit code 2 and the second to exit code 3.
"""


class FLGCError(Exception):
    """Base class for every error raised by this package."""


class InputError(FLGCError, ValueError):
    pass


class NumericalError(FLGCError, ArithmeticError):
    pass


class NotPositiveDefinite(NumericalError):
    pass


class ConvergenceFailure(NumericalError):
    pass


class DegenerateInput(InputError):
    pass


class ShapeMismatch(InputError):
    pass


class LengthMismatch(InputError):
    pass


class EmptyInput(InputError):
    pass


class InvalidLambda(InputError):
    pass


class EmptyGrid(InputError):
    pass


class IndexOutOfRange(InputError, IndexError):
    pass


class ParseError(InputError):
    def __init__(self, message, line=None, column=None):
        self.line = line
        self.column = column
        where = []
        if line is not None:
            where.append(f"line {line}")
        if column is not None:
            where.append(f"column {column}")
        if where:
            message = f"{', '.join(where)}: {message}"
        super().__init__(message)


class NonNumericFeature(ParseError):
    pass


class MissingLabelColumn(InputError, KeyError):
    def __str__(self):
        return str(self.args[0]) if self.args else ""


class ClassTooSmall(InputError):
    pass


class ConfigError(InputError):
    pass

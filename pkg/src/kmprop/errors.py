"""Exception hierarchy shared across the package.

Two branches matter to callers: :class:`InputError` for bad data,
configuration, or file content (CLI exit code 2), and
:class:`NumericalError` for computations that fail or leave their
numerical guard rails (CLI exit code 3).
"""


class KmpropError(Exception):
    """Base class for every error raised by this package."""

    exit_code = 1


class InputError(KmpropError):
    """Invalid user-supplied data, configuration, or file content."""

    exit_code = 2


class NumericalError(KmpropError):
    """A computation failed or produced values outside its guards."""

    exit_code = 3


class DimensionMismatch(InputError):
    """Operands have incompatible point dimensions or lengths."""


class KernelMismatch(InputError):
    """Two expansions carry different kernels where one is required."""


class NoDistinctPairs(InputError):
    """Bandwidth selection needs at least two distinct points."""


class DegenerateBandwidth(NumericalError):
    """A data-driven bandwidth came out zero, negative, or non-finite."""


class DomainError(InputError):
    """A point function was applied outside its domain.

    Carries the name of the function and the grid index of the first
    offending combination so callers can report exactly which inputs
    were rejected.
    """

    def __init__(self, function: str, index: tuple, detail: str = ""):
        self.function = function
        self.index = index
        msg = f"{function}: invalid input at grid index {index}"
        if detail:
            msg = f"{msg} ({detail})"
        super().__init__(msg)


class SizeCapExceeded(InputError):
    """A product grid would exceed the configured size cap."""


class DegenerateNormalizer(NumericalError):
    """Total weight mass is too close to zero to normalize by."""


class NonPositiveWeight(InputError):
    """An operation requiring strictly positive weights saw one <= 0."""


class WeightsNotNormalized(InputError):
    """An operation requiring weights summing to one saw a different sum."""


class SingularSystem(NumericalError):
    """A linear system is singular and no regularization was allowed."""


class TooFewRows(InputError):
    """A data file contains fewer rows than the operation needs."""


class UnboundVariable(InputError):
    """An expression references a variable missing from the environment."""

    def __init__(self, name: str, path: str = ""):
        self.name = name
        self.path = path
        where = f" at node {path}" if path else ""
        super().__init__(f"unbound variable '{name}'{where}")


class ParseError(InputError):
    """An expression or data file could not be parsed."""

    def __init__(self, message: str, position: int | None = None):
        self.position = position
        if position is not None:
            message = f"{message} (position {position})"
        super().__init__(message)


class UnexpectedCharacter(ParseError):
    """The tokenizer hit a character outside the language."""


class UnexpectedToken(ParseError):
    """The parser saw a token that no grammar rule allows here."""


class UnbalancedParen(ParseError):
    """Parentheses do not balance."""

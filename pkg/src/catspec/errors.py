"""Exception types shared across the package."""


class CatspecError(Exception):
    """Base class for every error raised deliberately by catspec."""


class UnknownId(CatspecError):
    pass


class NotComposable(CatspecError):
    pass


class PreconditionError(CatspecError):
    """An operation's hypotheses do not hold for the given input."""


class GuardrailExceeded(CatspecError):
    """Input is larger than the configured exhaustive-search bound."""

    def __init__(self, size: int, bound: int, what: str = "category"):
        self.size = size
        self.bound = bound
        super().__init__(
            f"{what} has {size} morphisms, above the guardrail of {bound} "
            "(raise it with CATSPEC_MAX_MORPHISMS or --max-morphisms)"
        )


class DslError(CatspecError):
    def __init__(self, message: str, line: int, col: int):
        self.message = message
        self.line = line
        self.col = col
        super().__init__(f"{message} at line {line}, column {col}")

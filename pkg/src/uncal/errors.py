"""Exception hierarchy shared by every module.

User-facing failures (bad input, ill-typed terms, pattern failures) derive
from ``UserError``; broken internal invariants derive from ``InternalError``.
The CLI maps the two families to exit codes 2 and 3.
"""


class UncalError(Exception):
    pass


class UserError(UncalError):
    pass


class InternalError(UncalError):
    pass


class ParseError(UserError):
    def __init__(self, msg, line=None, col=None):
        self.line = line
        self.col = col
        where = f" at line {line}, column {col}" if line is not None else ""
        super().__init__(f"{msg}{where}")


SyntaxError = ParseError  # noqa: A001


class DuplicateClause(UserError):
    pass


class OverlappingPatterns(UserError):
    pass


class TypeCheckError(UserError):
    pass


class UnboundMarker(TypeCheckError):
    pass


class ContextMismatch(TypeCheckError):
    pass


class ArityError(TypeCheckError):
    pass


class UnknownFunction(TypeCheckError):
    pass


class DomainMismatch(TypeCheckError):
    pass


class LengthMismatch(TypeCheckError):
    pass


class MarkerMismatch(UserError):
    pass


class ContextSplitError(UserError):
    pass


class InterfaceMismatch(UserError):
    pass


class NotClosed(UserError):
    pass


class TypeNotSingleton(UserError):
    pass


class NotInN(UserError):
    pass


class SlotJudgmentMismatch(UserError):
    pass


class Unsatisfiable(UserError):
    pass


class DependsOnArgument(UserError):
    pass


class InconsistentK(UserError):
    pass


class ModeMismatch(UserError):
    pass


class MatchFailure(UserError):
    pass


class HypothesisFailed(UserError):
    def __init__(self, label):
        self.label = label
        super().__init__(f"fusion hypothesis fails at label {label!r}")


class NotInImage(UserError):
    pass


class LgTypeError(UserError):
    pass


class StuckConditional(UserError):
    pass


class NonCanonicalClauseTable(UserError):
    pass


class FuelExhausted(InternalError):
    pass

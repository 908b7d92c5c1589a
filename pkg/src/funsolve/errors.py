"""Exception hierarchy shared by all funsolve modules."""


class FunsolveError(Exception):
    """Base class for every error raised by this package."""


class SortError(FunsolveError):
    pass


class QuantifierError(FunsolveError):
    pass


class BlowupError(FunsolveError):
    """A normal-form or enumeration step exceeded its configured cap."""


class PartitionBlowup(BlowupError):
    pass


class ParseError(FunsolveError):
    def __init__(self, message, line=None, col=None):
        self.line = line
        self.col = col
        where = f"{line}:{col}: " if line is not None else ""
        super().__init__(where + message)


class SyntaxError_(ParseError):
    """Malformed input text (named with a trailing underscore to avoid the builtin)."""


class UndeclaredSymbol(ParseError):
    pass


class Redeclaration(ParseError):
    pass


class BackendError(FunsolveError):
    pass


class BackendUnavailable(BackendError):
    pass


class BackendTimeout(BackendError):
    pass


class ModelParseError(BackendError):
    pass


class InconsistentModel(FunsolveError):
    pass


class CongruenceViolation(FunsolveError):
    pass


class DerivativeOrderUnsupported(FunsolveError):
    pass


class StageBlowup(UserWarning):
    """Emitted when one enumeration stage holds more candidates than the cap."""

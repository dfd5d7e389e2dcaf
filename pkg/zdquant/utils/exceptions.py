"""Custom exceptions for zdquant."""


class ZdqError(Exception):
    """Base exception for zdquant."""

    exit_code = 1


class ConfigError(ZdqError):
    """Configuration related errors."""

    exit_code = 2

    def __init__(self, message: str, line: int = None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class ArtifactError(ZdqError):
    """Saved triplet / report related errors."""
    pass


class ModelError(ZdqError):
    """Invalid model data or an impossible numerical situation."""
    pass


class NonStochasticMatrix(ModelError):
    """A row (or a distribution) does not sum to one."""

    def __init__(self, message: str, row: int = None):
        super().__init__(message)
        self.row = row


class NegativeEntry(ModelError):
    """A probability or distortion entry is negative."""
    pass


class DimensionMismatch(ModelError):
    """Array shapes are not compatible."""
    pass


class NotIrreducible(ModelError):
    """The source chain is reducible."""
    pass


class NotIrreducibleAperiodic(ModelError):
    """The source chain is reducible or periodic."""
    pass


class ZeroProbabilitySymbol(ModelError):
    """A channel symbol was observed that has zero probability under the belief."""

    def __init__(self, message: str, symbol: int = None):
        super().__init__(message)
        self.symbol = symbol


class InvalidDiscount(ModelError):
    """Discount factor outside (0, 1)."""
    pass


class IncompleteTable(ModelError):
    """An oracle policy table is missing entries."""
    pass


class SynchronyError(ModelError):
    """Encoder and decoder beliefs diverged."""

    def __init__(self, message: str, step: int = None):
        super().__init__(message)
        self.step = step


class CapExceeded(ZdqError):
    """A configured size cap was exceeded."""

    exit_code = 3

    def __init__(self, message: str, size: int = None, cap: int = None):
        super().__init__(message)
        self.size = size
        self.cap = cap


class ActionSpaceTooLarge(CapExceeded):
    """Too many quantizers to enumerate."""
    pass


class TreeTooLarge(CapExceeded):
    """Reachable belief tree exceeds the cap."""
    pass


class SearchSpaceTooLarge(CapExceeded):
    """Oracle encoder-table space exceeds the cap."""
    pass


class GridTooLarge(CapExceeded):
    """Belief grid exceeds the cap."""
    pass


class NoConvergence(ZdqError):
    """An iterative solver hit its iteration limit."""

    exit_code = 4

    def __init__(self, message: str, max_iters: int = None):
        super().__init__(message)
        self.max_iters = max_iters


class SpanStalled(NoConvergence):
    """RVI span stopped shrinking: the grid MDP has more than one closed class."""

    def __init__(self, message: str, iterations: int, gain_range: tuple):
        super().__init__(message, max_iters=iterations)
        self.iterations = iterations
        self.gain_range = gain_range

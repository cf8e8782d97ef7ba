"""Exception types shared across the solver stack."""


class ColgenError(Exception):
    """Base class for all errors raised by this package."""


class DimensionMismatch(ColgenError):
    """Vector/matrix shapes do not agree."""


class NumericalBreakdown(ColgenError):
    """The simplex could not make progress (pivot too small, singular basis)."""


class InvalidRange(ColgenError):
    """Generator parameter range is empty or out of bounds."""


class ParseError(ColgenError):
    """Instance text could not be parsed; carries line diagnostics."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class InvalidCount(ColgenError):
    """Requested customer count is outside the instance's range."""


class InfeasibleInitialization(ColgenError):
    """No feasible initial restricted master could be built."""


class IterationCapExceeded(ColgenError):
    """The CG loop hit its iteration cap before converging.

    The partial trace, last solution and episodes are attached so callers
    can still inspect the run.
    """

    def __init__(self, message, trace=None, solution=None, episodes=None):
        super().__init__(message)
        self.trace = trace
        self.solution = solution
        self.episodes = episodes


class StateInconsistency(ColgenError):
    """Bipartite state inputs disagree (e.g. candidate without reduced cost)."""


class UnknownColumn(ColgenError):
    """Referenced column id is not part of the current selectable set."""


class InvalidBaseline(ColgenError):
    """Reward normalization baseline obj0 must be positive."""


class ShapeMismatch(ColgenError):
    """Network weights and state dimensions disagree."""


class EmptyBatch(ColgenError):
    """A training step needs at least one transition."""


class EmptyCandidates(ColgenError):
    """A selection policy was invoked with no candidate columns."""

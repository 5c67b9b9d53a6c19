"""Exception hierarchy for treepacking.

Input problems derive from ``UsageError`` and map to exit code 2 on the
command line; every other ``TreePackingError`` maps to exit code 1.
Semantic verification failures are never raised, they are reported.
"""

from typing import Optional, Sequence, TYPE_CHECKING

if TYPE_CHECKING:
    from treepacking.verifier import VerificationReport


class TreePackingError(Exception):
    """Base class for all treepacking errors."""


class UsageError(TreePackingError):
    """Malformed input: bad files, bad ids, unsupported sizes."""


class ParseError(UsageError):
    """A line of an edge list or cycle string could not be parsed."""

    def __init__(self, message: str, line: Optional[int] = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class NotATree(UsageError):
    """The edge list does not describe a tree."""


class NotAnEdge(UsageError):
    """The two vertices given are not adjacent."""


class StarInput(UsageError):
    """The operation is undefined for star trees."""


class SizeTooLarge(UsageError):
    """The input exceeds an exhaustive-search or enumeration bound."""


class DuplicateId(UsageError):
    """A vertex id appears twice in a cycle list."""


class IdOutOfRange(UsageError):
    """A vertex id lies outside 0..n-1."""


class SizeMismatch(UsageError):
    """Two objects that must share a vertex count do not."""


class KindMismatch(UsageError):
    """A certificate kind was applied to a tree it does not fit."""


class TooShort(UsageError):
    """A path construction was asked for fewer than four vertices."""


class BadVertex(UsageError):
    """A good placement was requested at the centre of a P5."""


class NoNonBadVertex(UsageError):
    """No vertex of the tree is a valid anchor for a good placement."""


class PreconditionViolation(TreePackingError):
    """An inner placement handed to an extension step does not qualify."""


class UncoveredCase(TreePackingError):
    """No construction branch applied to the input."""

    def __init__(self, message: str, trace: Sequence[str] = ()):
        self.trace = list(trace)
        super().__init__(message)


class ConstructionBug(TreePackingError):
    """A construction produced a permutation that fails verification."""

    def __init__(
        self,
        message: str,
        report: "Optional[VerificationReport]" = None,
        trace: Sequence[str] = (),
    ):
        self.report = report
        self.trace = list(trace)
        super().__init__(message)


class ReconstructionAmbiguous(TreePackingError):
    """A figure family in the data file does not certify its permutation."""

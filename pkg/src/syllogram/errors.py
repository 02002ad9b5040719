"""Exception types shared across the package.

Every error raised by the library derives from :class:`SyllogramError`,
so callers (notably the CLI) can map failures to stable exit codes
without enumerating module-specific types.
"""

from __future__ import annotations


class SyllogramError(Exception):
    """Base class for all library errors."""


class WellFormednessError(SyllogramError):
    """A relation set violates a diagram invariant.

    Carries the name of the first violated invariant and the offending
    object pair.
    """

    def __init__(self, invariant: str, offenders: tuple[str, ...], message: str = ""):
        self.invariant = invariant
        self.offenders = offenders
        detail = message or f"invariant {invariant} violated on {offenders}"
        super().__init__(detail)


class ClosureConflict(SyllogramError):
    """Closure derived two incompatible relations for one object pair."""

    def __init__(self, pair: tuple[str, str], first: str, second: str):
        self.pair = pair
        self.first = first
        self.second = second
        super().__init__(f"closure derives both {first} and {second} on pair {pair}")


class UnknownObject(SyllogramError):
    """An operation referenced an object name absent from the diagram."""


class EmptyDiagram(SyllogramError):
    """Deleting the object would leave a diagram with no objects."""


class ParseError(SyllogramError):
    """Sentence or inference text failed to parse.

    ``offset`` is the character offset of the failure; ``expected`` is the
    set of token descriptions that would have been accepted there.
    """

    def __init__(self, message: str, offset: int, expected: frozenset[str] = frozenset()):
        self.offset = offset
        self.expected = expected
        super().__init__(f"{message} (at offset {offset})")


class UninterpretedName(SyllogramError):
    """A model evaluation referenced a name the model does not interpret."""


class MissingWitness(SyllogramError):
    """Diagram evaluation lacks a witness element for an existential point."""


class VocabularyTooLarge(SyllogramError):
    """The semantic oracle only handles vocabularies of at most 4 predicates."""


class UnifyBlocked(SyllogramError):
    """Unification was blocked by the consistency or determinacy constraint."""

    CONSISTENCY = "consistency"
    DETERMINACY = "determinacy"

    def __init__(self, reason: str, point: str | None = None, circle: str | None = None,
                 detail: str = "", conflict: "ClosureConflict | None" = None):
        self.reason = reason
        self.point = point
        self.circle = circle
        self.conflict = conflict
        if reason == self.DETERMINACY:
            msg = f"unification blocked: position of point {point} relative to circle {circle} is ambiguous"
        else:
            msg = f"unification blocked: inconsistent merged relations ({detail or conflict})"
        super().__init__(msg)


class PrecondViolation(SyllogramError):
    """The premise set is inconsistent, so proof search does not apply."""


class NoProofFound(SyllogramError):
    """Bounded proof search exhausted without finding a derivation."""

    def __init__(self, bound: str):
        self.bound = bound
        super().__init__(f"no diagrammatic proof found ({bound})")


class NoFalsifiableRelation(SyllogramError):
    """The diagram contains no relation with an expressible counter-relation."""


class NonRelationalConclusion(SyllogramError):
    """Counter-proof search requires the conclusion diagram to be relational."""


class CannotDisprove(SyllogramError):
    """Every counter-diagram candidate and placement branch was exhausted."""

    def __init__(self, message: str, equality_gap: bool = False):
        self.equality_gap = equality_gap
        super().__init__(message)


class UnsupportedRelation(SyllogramError):
    """The relation has no first-order translation (point/point exclusion)."""


class LayoutError(SyllogramError):
    """Concrete placement failed within the restart budget."""

    def __init__(self, constraint: str):
        self.constraint = constraint
        super().__init__(f"layout failed: {constraint}")


class DegenerateGeometry(SyllogramError):
    """Tangent boundaries or on-boundary points make relations ambiguous."""


class InternalDefect(SyllogramError):
    """The diagrammatic verdict disagrees with the semantic oracle."""

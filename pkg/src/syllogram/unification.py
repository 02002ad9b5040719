"""Diagrammatic inference: unification, deletion, and proof search.

Unification merges two diagrams into one whose information is exactly
the conjunction of the inputs: the hard (in/ex) relations of both sides
are pooled and closed under the forced derivations, every circle pair
the closure leaves open becomes a non-committal crossing, and stored
crossings impose nothing (they translate to tautologies).  Two
constraints block the rule:

* consistency  -- the pooled relations force two incompatible relations
  on some pair;
* determinacy  -- some point's relation to some circle is underivable,
  i.e. the point's position would be disjunctively ambiguous.

Proof search (:func:`prove`) looks for a tree of unification and
deletion steps from the premise diagrams whose conclusion supports the
goal sentence.  Because premises are conjunctive, no premise is ever
needed twice; the search walks premise subsets (smallest first),
resolves determinacy blocks by deleting objects that are absent from
the conclusion's vocabulary, merges point-free diagrams before
point-carrying ones (which keeps every intermediate step determinate),
and finally checks the conclusion:

* each required in/ex relation of the conclusion's canonical diagram
  must hold on the derived diagram;
* a required existential witness may be matched by any point whose
  profile covers the requirement, or by any circle forced inside every
  required circle and excluded from every forbidden one -- under
  existential import a nonempty circle supplies the witness element.

:func:`check` combines proof search with counter-proof construction and
cross-checks both against the semantic oracle; a disagreement raises
:class:`InternalDefect` rather than being returned silently.

Proof objects are immutable; search states are local to the call, so
everything here can run on parallel inputs without shared state.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from itertools import combinations, permutations
from typing import Iterable, Mapping, Sequence

from .diagram import (
    Diagram,
    DiagramObject,
    ObjectKind,
    Relation,
    RelTag,
    Saturation,
    crosses,
    diagram_to_json,
    excludes,
    inside,
    make_diagram,
    saturate,
)
from .errors import (
    CannotDisprove,
    InternalDefect,
    NonRelationalConclusion,
    NoProofFound,
    PrecondViolation,
    UnifyBlocked,
)
from .models import Model, counter_profile_model, eval_sentence, oracle_consistent, oracle_valid
from .sentences import Form, Inference, Sentence, premise_diagrams


# ---------------------------------------------------------------------------
# Merging machinery shared by unify, prove, and the counter-engine


def merged_kinds(diagrams: Sequence[Diagram]) -> dict[str, ObjectKind]:
    kinds: dict[str, ObjectKind] = {}
    for d in diagrams:
        for obj in d.objects:
            seen = kinds.get(obj.name)
            if seen is not None and seen is not obj.kind:
                raise UnifyBlocked(
                    UnifyBlocked.CONSISTENCY,
                    detail=f"object {obj.name!r} is a {seen.value} and a {obj.kind.value}")
            kinds[obj.name] = obj.kind
    return kinds


def hard_atoms(diagrams: Iterable[Diagram]) -> tuple[set[tuple[str, str]], set[frozenset[str]]]:
    in_atoms: set[tuple[str, str]] = set()
    ex_atoms: set[frozenset[str]] = set()
    for d in diagrams:
        for rel in d.relations:
            if rel.tag is RelTag.INSIDE:
                in_atoms.add((rel.left, rel.right))
            elif rel.tag is RelTag.EXCLUSION:
                ex_atoms.add(rel.pair)
    return in_atoms, ex_atoms


def undefined_pairs(kinds: Mapping[str, ObjectKind], sat: Saturation) -> list[tuple[str, str]]:
    """Point/circle pairs the saturation leaves open (determinacy gaps)."""
    gaps: list[tuple[str, str]] = []
    for point in sorted(n for n, k in kinds.items() if k.is_point):
        for circ in sorted(n for n, k in kinds.items() if k is ObjectKind.CIRCLE):
            if sat.status(point, circ) is None:
                gaps.append((point, circ))
    return gaps


def assemble(kinds: Mapping[str, ObjectKind], sat: Saturation) -> Diagram:
    """Build the diagram a saturation describes, defaulting open circle
    pairs to crossings; raises on conflicts and determinacy gaps."""
    if sat.conflict is not None:
        raise UnifyBlocked(UnifyBlocked.CONSISTENCY, conflict=sat.conflict)
    gaps = undefined_pairs(kinds, sat)
    if gaps:
        point, circ = gaps[0]
        raise UnifyBlocked(UnifyBlocked.DETERMINACY, point=point, circle=circ)
    relations: list[Relation] = []
    names = sorted(kinds)
    for i, a in enumerate(names):
        for b in names[i + 1:]:
            if kinds[a].is_point and kinds[b].is_point:
                continue
            status = sat.status(a, b)
            if status is not None:
                relations.append(status)
            else:
                relations.append(crosses(a, b))
    objects = [DiagramObject(name, kind) for name, kind in kinds.items()]
    return make_diagram(objects, relations)


def merge_diagrams(diagrams: Sequence[Diagram]) -> Diagram:
    kinds = merged_kinds(diagrams)
    in_atoms, ex_atoms = hard_atoms(diagrams)
    sat = saturate(kinds, in_atoms, ex_atoms)
    merged = assemble(kinds, sat)
    if sat.conflict is None:
        _assert_conservative(diagrams, merged)
    return merged


def _assert_conservative(inputs: Sequence[Diagram], merged: Diagram) -> None:
    for d in inputs:
        for rel in d.relations:
            if rel.tag is RelTag.CROSSING:
                continue
            if rel not in merged.relations:
                raise InternalDefect(f"unification dropped {rel} of {d}")


def unify(d1: Diagram, d2: Diagram) -> Diagram:
    """Unify two diagrams; semantic content is the conjunction of both."""
    return merge_diagrams([d1, d2])


# ---------------------------------------------------------------------------
# Proof objects


@dataclass(frozen=True)
class ProofNode:
    id: int
    rule: str  # "premise" | "counter-premise" | "unify" | "delete" | "ipi"
    inputs: tuple[int, ...]
    diagram: Diagram
    detail: str | None = None


@dataclass(frozen=True)
class DProof:
    """A tree of unification/deletion steps from premise leaves."""

    nodes: tuple[ProofNode, ...]
    conclusion_id: int

    @property
    def conclusion(self) -> Diagram:
        return self.node(self.conclusion_id).diagram

    @property
    def leaves(self) -> tuple[Diagram, ...]:
        return tuple(n.diagram for n in self.nodes if not n.inputs)

    def node(self, node_id: int) -> ProofNode:
        return self.nodes[node_id]

    def steps(self, rule: str) -> tuple[ProofNode, ...]:
        return tuple(n for n in self.nodes if n.rule == rule)

    def to_json(self) -> dict:
        return {
            "nodes": [
                {
                    "id": f"n{n.id}",
                    "rule": n.rule,
                    "inputs": [f"n{i}" for i in n.inputs],
                    "diagram": diagram_to_json(n.diagram),
                    "detail": n.detail,
                    **({"conclusion": True} if n.id == self.conclusion_id else {}),
                }
                for n in self.nodes
            ]
        }


class _ProofBuilder:
    def __init__(self) -> None:
        self.nodes: list[ProofNode] = []

    def add(self, rule: str, inputs: tuple[int, ...], diagram: Diagram,
            detail: str | None = None) -> int:
        node = ProofNode(len(self.nodes), rule, inputs, diagram, detail)
        self.nodes.append(node)
        return node.id


# ---------------------------------------------------------------------------
# Conclusion requirements and matching


@dataclass(frozen=True)
class _Goal:
    """What the conclusion's canonical diagram demands of a derivation."""

    circles: frozenset[str]
    constants: frozenset[str]
    circle_rels: tuple[Relation, ...]
    const_rels: tuple[Relation, ...]
    witness_needs: tuple[tuple[frozenset[str], frozenset[str]], ...]


def _goal_of(conclusion: Sentence) -> _Goal:
    form = conclusion.form
    circles = frozenset(conclusion.predicates)
    constants = frozenset(conclusion.constant_names)
    if form is Form.ALL:
        return _Goal(circles, constants,
                     (inside(conclusion.subject, conclusion.predicate),), (), ())
    if form is Form.NO:
        return _Goal(circles, constants,
                     (excludes(conclusion.subject, conclusion.predicate),), (), ())
    if form is Form.CONST_IS:
        return _Goal(circles, constants, (),
                     (inside(conclusion.subject, conclusion.predicate),), ())
    if form is Form.CONST_IS_NOT:
        return _Goal(circles, constants, (),
                     (excludes(conclusion.subject, conclusion.predicate),), ())
    if form is Form.SOME:
        need = (frozenset((conclusion.subject, conclusion.predicate)), frozenset())
        return _Goal(circles, constants, (), (), (need,))
    if form is Form.SOME_NOT:
        need = (frozenset((conclusion.subject,)), frozenset((conclusion.predicate,)))
        return _Goal(circles, constants, (), (), (need,))
    if form is Form.SOMETHING_IS:
        return _Goal(circles, constants, (), (),
                     ((frozenset((conclusion.predicate,)), frozenset()),))
    return _Goal(circles, constants, (), (),
                 ((frozenset(), frozenset((conclusion.predicate,))),))


def _witness_in_sat(kinds: Mapping[str, ObjectKind], sat: Saturation,
                    objset: frozenset[str],
                    need: tuple[frozenset[str], frozenset[str]]) -> str | None:
    """An object guaranteeing an element with the required in/out profile.

    A point carries its own element; a circle is nonempty by import, and
    its element inherits every inclusion/exclusion forced on the circle.
    """
    ins, outs = need
    for name in sorted(objset):
        if kinds[name].is_point:
            ok = (all(sat.inside(name, c) for c in ins)
                  and all(sat.excluded(name, c) for c in outs))
        else:
            ok = (all(c == name or sat.inside(name, c) for c in ins)
                  and all(sat.excluded(name, c) for c in outs))
        if ok:
            return name
    return None


def _goal_in_sat(goal: _Goal, kinds: Mapping[str, ObjectKind],
                 sat: Saturation, objset: frozenset[str]) -> bool:
    for name in goal.circles:
        if name not in objset or kinds.get(name) is not ObjectKind.CIRCLE:
            return False
    for name in goal.constants:
        if name not in objset or kinds.get(name) is not ObjectKind.CONSTANT:
            return False
    for rel in goal.circle_rels + goal.const_rels:
        if rel.tag is RelTag.INSIDE:
            if not sat.inside(rel.left, rel.right):
                return False
        elif not sat.excluded(rel.left, rel.right):
            return False
    return all(_witness_in_sat(kinds, sat, objset, need) is not None
               for need in goal.witness_needs)


def goal_holds_on(d: Diagram, conclusion: Sentence) -> bool:
    """Conclusion check on a finished diagram (stored relations only)."""
    goal = _goal_of(conclusion)
    kinds = {o.name: o.kind for o in d.objects}
    in_atoms, ex_atoms = hard_atoms([d])
    sat = saturate(kinds, in_atoms, ex_atoms)
    return _goal_in_sat(goal, kinds, sat, frozenset(kinds))


# ---------------------------------------------------------------------------
# Proof search


def _restricted_atoms(diagrams: Sequence[Diagram], objset: frozenset[str]
                      ) -> tuple[set[tuple[str, str]], set[frozenset[str]]]:
    in_atoms, ex_atoms = hard_atoms(diagrams)
    return ({(s, t) for (s, t) in in_atoms if s in objset and t in objset},
            {pair for pair in ex_atoms if pair <= objset})


def _search_deletions(diagrams: Sequence[Diagram], kinds: Mapping[str, ObjectKind],
                      goal: _Goal, objset: frozenset[str],
                      seen: set[frozenset[str]]) -> frozenset[str] | None:
    """Objects to keep so that the merge is total and still meets the goal.

    Determinacy gaps are resolved by deleting one side of the first open
    point/circle pair; conclusion-vocabulary objects are never deleted.
    """
    if objset in seen:
        return None
    seen.add(objset)
    in_atoms, ex_atoms = _restricted_atoms(diagrams, objset)
    local_kinds = {n: k for n, k in kinds.items() if n in objset}
    sat = saturate(local_kinds, in_atoms, ex_atoms)
    if sat.conflict is not None:
        return None
    if not _goal_in_sat(goal, local_kinds, sat, objset):
        return None
    gaps = undefined_pairs(local_kinds, sat)
    if not gaps:
        if any(not any(o.name in objset for o in d.objects) for d in diagrams):
            return None  # an emptied leaf means a smaller subset suffices
        return objset
    point, circ = gaps[0]
    protected = goal.circles | goal.constants
    for victim in (point, circ):
        if victim in protected:
            continue
        result = _search_deletions(diagrams, kinds, goal, objset - {victim}, seen)
        if result is not None:
            return result
    return None


def _fold_merge(builder: _ProofBuilder, entries: list[tuple[int, Diagram]]) -> int:
    """Unify the entries pairwise, point-free diagrams first.

    Hard circle relations live in point-free diagrams, so merging those
    first keeps every point's position derivable at each step whenever
    the full merge is total; permutations are a defensive fallback.
    """
    def ordered(items: list[tuple[int, Diagram]]) -> list[tuple[int, Diagram]]:
        point_free = [e for e in items if not e[1].points]
        pointed = [e for e in items if e[1].points]
        return point_free + pointed

    for attempt in ([ordered(entries)]
                    if len(entries) <= 1 else
                    [ordered(entries), *map(list, permutations(entries))]):
        try:
            node_id, diagram = attempt[0]
            for next_id, next_diagram in attempt[1:]:
                diagram = unify(diagram, next_diagram)
                node_id = builder.add("unify", (node_id, next_id), diagram)
            return node_id
        except UnifyBlocked:
            builder.nodes = [n for n in builder.nodes
                             if n.rule != "unify"]  # retry another order
            continue
    raise InternalDefect("resolved merge has no admissible unification order")


def prove(inf: Inference, *, skip_consistency_check: bool = False) -> DProof:
    """Search for a diagrammatic proof of the inference.

    Raises :class:`PrecondViolation` when the premises are inconsistent
    and :class:`NoProofFound` when every premise subset, deletion
    resolution, and witness matching is exhausted.
    """
    if not inf.premises:
        raise NoProofFound("no premises to unify")
    diagrams, _ = premise_diagrams(inf)
    if not skip_consistency_check and not oracle_consistent(diagrams):
        raise PrecondViolation("the premises are jointly unsatisfiable")
    goal = _goal_of(inf.conclusion)
    indices = range(len(diagrams))
    for size in range(1, len(diagrams) + 1):
        for chosen in combinations(indices, size):
            subset = [diagrams[i] for i in chosen]
            try:
                kinds = merged_kinds(subset)
            except UnifyBlocked:
                continue
            objset = frozenset(kinds)
            keep = _search_deletions(subset, kinds, goal, objset, set())
            if keep is None:
                continue
            return _build_proof(subset, keep, goal, inf.conclusion)
    raise NoProofFound(
        f"all {2 ** len(diagrams) - 1} premise subsets with deletions exhausted")


def _build_proof(subset: Sequence[Diagram], keep: frozenset[str], goal: _Goal,
                 conclusion: Sentence) -> DProof:
    builder = _ProofBuilder()
    entries: list[tuple[int, Diagram]] = []
    for d in subset:
        node_id = builder.add("premise", (), d)
        current = d
        for name in sorted(o.name for o in d.objects if o.name not in keep):
            from .diagram import delete_object  # local import to avoid cycle noise
            current = delete_object(current, name)
            node_id = builder.add("delete", (node_id,), current, detail=name)
        entries.append((node_id, current))
    final_id = _fold_merge(builder, entries)
    final = builder.nodes[final_id].diagram
    if not goal_holds_on(final, conclusion):
        raise InternalDefect("search accepted a merge that fails the goal check")
    # Tidy: drop objects outside the conclusion's vocabulary while the
    # goal still holds, mirroring the delete-then-conclude proof shape.
    from .diagram import delete_object
    vocab = goal.circles | goal.constants
    changed = True
    while changed:
        changed = False
        for name in sorted(o.name for o in final.objects if o.name not in vocab):
            if len(final.objects) == 1:
                break
            trial = delete_object(final, name)
            if goal_holds_on(trial, conclusion):
                final = trial
                final_id = builder.add("delete", (final_id,), final, detail=name)
                changed = True
                break
    return DProof(tuple(builder.nodes), final_id)


# ---------------------------------------------------------------------------
# Combined decision front-end


@dataclass(frozen=True)
class CheckOutcome:
    verdict: str  # "valid" | "invalid" | "unknown"
    proof: DProof | None = None
    counter: "object | None" = None  # CounterProof, kept untyped to avoid a cycle
    counter_model: Model | None = None
    oracle_verdict: bool | None = None
    premises_consistent: bool = True
    notes: tuple[str, ...] = ()
    timings_ms: Mapping[str, float] = field(default_factory=dict)


def check(inf: Inference, use_oracle: bool = True) -> CheckOutcome:
    """Decide the inference and cross-check against the oracle.

    ``use_oracle=False`` skips the cross-check (the oracle is still used
    for the premise-consistency precondition).  Oracle disagreement with
    a diagrammatic verdict raises :class:`InternalDefect`.
    """
    from .counterproof import disprove  # deferred: counterproof imports unify

    timings: dict[str, float] = {}
    notes: list[str] = []

    start = time.perf_counter()
    diagrams, _ = premise_diagrams(inf)
    consistent = oracle_consistent(diagrams) if inf.premises else True
    timings["consistency"] = (time.perf_counter() - start) * 1000.0
    oracle_verdict: bool | None = None
    if use_oracle:
        start = time.perf_counter()
        oracle_verdict = oracle_valid(inf)
        timings["oracle"] = (time.perf_counter() - start) * 1000.0

    if not consistent:
        notes.append("premises are jointly unsatisfiable; the calculus has no "
                     "absurdity rule, so no verdict is derived diagrammatically")
        return CheckOutcome("unknown", oracle_verdict=oracle_verdict,
                            premises_consistent=False, notes=tuple(notes),
                            timings_ms=timings)

    start = time.perf_counter()
    try:
        proof = prove(inf, skip_consistency_check=True)
    except NoProofFound:
        proof = None
    timings["prove"] = (time.perf_counter() - start) * 1000.0
    if proof is not None:
        if oracle_verdict is False:
            raise InternalDefect("prove found a proof but the oracle says invalid")
        return CheckOutcome("valid", proof=proof, oracle_verdict=oracle_verdict,
                            notes=tuple(notes), timings_ms=timings)

    start = time.perf_counter()
    try:
        counter = disprove(inf, skip_consistency_check=True)
        timings["disprove"] = (time.perf_counter() - start) * 1000.0
        if oracle_verdict is True:
            raise InternalDefect("disprove built a counter-proof but the oracle "
                                 "says valid")
        return CheckOutcome("invalid", counter=counter,
                            counter_model=counter.model,
                            oracle_verdict=oracle_verdict, notes=tuple(notes),
                            timings_ms=timings)
    except NonRelationalConclusion:
        timings["disprove"] = (time.perf_counter() - start) * 1000.0
        notes.append("conclusion diagram is not relational; only the oracle "
                     "verdict (semantic, not diagrammatic) is reported")
        return CheckOutcome("unknown", oracle_verdict=oracle_verdict,
                            notes=tuple(notes), timings_ms=timings)
    except CannotDisprove as blocked:
        timings["disprove"] = (time.perf_counter() - start) * 1000.0
        return _resolve_undecided(inf, blocked, oracle_verdict, notes, timings)


def _resolve_undecided(inf: Inference, blocked: CannotDisprove,
                       oracle_verdict: bool | None, notes: list[str],
                       timings: dict[str, float]) -> CheckOutcome:
    """Neither a proof nor a counter-proof exists; classify the gap."""
    vocab_gap = (not inf.premises
                 or (inf.conclusion.form is Form.SOMETHING_IS
                     and not any(inf.conclusion.predicate in p.predicates
                                 for p in inf.premises)))
    if oracle_verdict is None:
        notes.append("diagrammatic search exhausted; rerun with the oracle "
                     "enabled to classify the inference")
        return CheckOutcome("unknown", notes=tuple(notes), timings_ms=timings)
    if oracle_verdict:
        if vocab_gap:
            notes.append("valid only by existential import: no premise "
                         "introduces the conclusion's vocabulary, so no "
                         "diagrammatic proof exists")
            return CheckOutcome("unknown", oracle_verdict=oracle_verdict,
                                notes=tuple(notes), timings_ms=timings)
        raise InternalDefect("oracle says valid but proof search failed")
    if not (blocked.equality_gap or "no counter-diagram candidates" in str(blocked)):
        raise InternalDefect(
            f"oracle says invalid but counter-proof search failed: {blocked}")
    found = counter_profile_model(inf)
    if found is None:
        raise InternalDefect("oracle verdicts disagree between calls")
    model, _ = found
    if not (all(eval_sentence(model, p) for p in inf.premises)
            and not eval_sentence(model, inf.conclusion)):
        raise InternalDefect("oracle counter-model failed self-verification")
    if blocked.equality_gap:
        notes.append("invalid, but every counter-model needs two circles with "
                     "equal extensions, which diagrams cannot draw; the "
                     "counter-model shown comes from the oracle")
    else:
        notes.append("invalid, but the conclusion's negation has no diagram "
                     "(emptiness is not expressible); the counter-model shown "
                     "comes from the oracle")
    return CheckOutcome("invalid", counter_model=model,
                        oracle_verdict=oracle_verdict, notes=tuple(notes),
                        timings_ms=timings)

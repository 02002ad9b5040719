"""Counter-diagram construction: disproving inferences diagrammatically.

An invalid inference is refuted by (1) building a diagram that falsifies
the conclusion and (2) unifying it with all premises.  Step (1) picks a
counter-diagram candidate per falsifiable relation of the conclusion's
canonical diagram; step (2) uses the valid unification rule wherever it
applies and, when a point's position is ambiguous (determinacy block),
the invalid point-insertion rule, which simply commits to one of the
possible positions.  Any committed position preserves every in/ex
relation of the premises, so the result is still a counter-diagram for
the whole inference; the concrete counter-model is then read off the
final diagram and self-verified sentence by sentence.

Candidate and placement orders are deterministic (canonical relation
order; exclusion tried before inclusion, circles in lexicographic
order), so the constructed counter-proofs are reproducible.

Branches are independent; the first success wins and is self-verified,
so parallel exploration would need no shared state.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations
from typing import Callable, Iterator, Mapping, Sequence

from .diagram import (
    Diagram,
    DiagramObject,
    ObjectKind,
    Relation,
    RelTag,
    crosses,
    excludes,
    inside,
    is_counter_diagram,
    make_diagram,
    saturate,
)
from .errors import (
    CannotDisprove,
    InternalDefect,
    NoFalsifiableRelation,
    NonRelationalConclusion,
    PrecondViolation,
    UnifyBlocked,
)
from .models import Model, eval_sentence, extract_model, oracle_consistent
from .sentences import FreshNames, Inference, Sentence, canonical_diagram, premise_diagrams
from .unification import (
    DProof,
    ProofNode,
    _ProofBuilder,
    assemble,
    hard_atoms,
    merged_kinds,
    undefined_pairs,
    unify,
)


@dataclass(frozen=True)
class CounterProof:
    """A counter-d-proof with its extracted counter-model.

    ``nodes`` form the proof tree (premise leaves, one counter-premise
    leaf, unify and ipi steps); the conclusion diagram holds every in/ex
    relation of every leaf and a counter-relation of the falsified
    sentence's diagram.
    """

    nodes: tuple[ProofNode, ...]
    conclusion_id: int
    falsified: Sentence
    model: Model
    witness: Mapping[str, str]

    @property
    def conclusion(self) -> Diagram:
        return self.nodes[self.conclusion_id].diagram

    @property
    def counter_leaf(self) -> Diagram:
        return next(n.diagram for n in self.nodes if n.rule == "counter-premise")

    def steps(self, rule: str) -> tuple[ProofNode, ...]:
        return tuple(n for n in self.nodes if n.rule == rule)

    def to_json(self) -> dict:
        from .models import model_to_json

        proof = DProof(self.nodes, self.conclusion_id).to_json()
        proof["model"] = model_to_json(self.model)
        proof["falsified"] = str(self.falsified)
        return proof


# ---------------------------------------------------------------------------
# Counter-diagram candidates


def counter_candidates(e: Diagram, fresh: Callable[[], str]) -> list[Diagram]:
    """Diagrams falsifying one relation of ``e`` each, in canonical order.

    Constant relations flip directly; a circle/circle inclusion or
    exclusion is countered by a fresh existential witness; the relations
    of an existential point are countered as a block by the diagram of
    the universalized negation of the point's pattern (two-circle
    patterns only -- wider patterns have no single-diagram negation).
    Emptiness is not expressible, so bare point-in-circle /
    point-outside-circle patterns yield no candidate.
    """
    if not any(r.tag is not RelTag.CROSSING for r in e.relations):
        raise NoFalsifiableRelation(f"{e} stores crossings only")
    candidates: list[Diagram] = []
    handled_points: set[str] = set()
    for rel in e.rel_sorted:
        if rel.tag is RelTag.CROSSING:
            continue
        kinds = (e.kind_of(rel.left), e.kind_of(rel.right))
        if ObjectKind.EXISTENTIAL in kinds:
            point = rel.left if kinds[0] is ObjectKind.EXISTENTIAL else rel.right
            if point in handled_points:
                continue
            handled_points.add(point)
            candidate = _negate_point_pattern(e, point, fresh)
            if candidate is not None:
                candidates.append(candidate)
        elif ObjectKind.CONSTANT in kinds:
            point, circ = ((rel.left, rel.right)
                           if kinds[0] is ObjectKind.CONSTANT else (rel.right, rel.left))
            flipped = (excludes(point, circ) if rel.tag is RelTag.INSIDE
                       else inside(point, circ))
            candidates.append(make_diagram(
                [DiagramObject(point, ObjectKind.CONSTANT),
                 DiagramObject(circ, ObjectKind.CIRCLE)], [flipped]))
        else:
            y = fresh()
            a, b = rel.left, rel.right
            if rel.tag is RelTag.INSIDE:
                rels = [inside(y, a), excludes(y, b), crosses(a, b)]
            else:
                rels = [inside(y, a), inside(y, b), crosses(a, b)]
            candidates.append(make_diagram(
                [DiagramObject(a, ObjectKind.CIRCLE), DiagramObject(b, ObjectKind.CIRCLE),
                 DiagramObject(y, ObjectKind.EXISTENTIAL)], rels))
    return candidates


def _negate_point_pattern(e: Diagram, point: str,
                          fresh: Callable[[], str]) -> Diagram | None:
    ins, outs = e.relation_profile(point)
    circles = [DiagramObject(c, ObjectKind.CIRCLE) for c in sorted(ins | outs)]
    if len(ins) == 2 and not outs:
        a, b = sorted(ins)
        return make_diagram(circles, [excludes(a, b)])
    if len(ins) == 1 and len(outs) == 1:
        (a,), (b,) = ins, outs
        return make_diagram(circles, [inside(a, b)])
    return None


# ---------------------------------------------------------------------------
# Invalid point insertion


def ipi_insert(d: Diagram, p: DiagramObject, partial: Sequence[Relation]
               ) -> list[Diagram]:
    """Every diagram placing ``p`` into ``d`` consistently with ``partial``.

    Completions fix the point's relation to each circle of ``d``; forced
    relations are committed, free ones are branched with exclusion tried
    before inclusion, circles in lexicographic order.  At least one
    completion always exists (outside everything that is not forced).
    """
    if d.has(p.name):
        raise InternalDefect(f"point {p.name!r} is already in the diagram")
    base_kinds = {o.name: o.kind for o in d.objects}
    base_kinds[p.name] = p.kind
    in_atoms, ex_atoms = hard_atoms([d])
    for rel in partial:
        if rel.tag is RelTag.INSIDE:
            in_atoms.add((rel.left, rel.right))
        elif rel.tag is RelTag.EXCLUSION:
            ex_atoms.add(rel.pair)
    out: list[Diagram] = []
    for completion in _completions(base_kinds, in_atoms, ex_atoms, p.name, d.circles):
        sat = saturate(base_kinds, completion[0], completion[1])
        out.append(assemble(base_kinds, sat))
    return out


def _completions(kinds: Mapping[str, ObjectKind], in_atoms: set[tuple[str, str]],
                 ex_atoms: set[frozenset[str]], point: str,
                 circles: Sequence[str]
                 ) -> Iterator[tuple[set[tuple[str, str]], set[frozenset[str]]]]:
    """DFS over the point's undetermined circle relations, ex before in."""

    def walk(ins: set[tuple[str, str]], exs: set[frozenset[str]],
             remaining: tuple[str, ...]) -> Iterator[tuple[set, set]]:
        sat = saturate(kinds, ins, exs)
        if sat.conflict is not None:
            return
        while remaining and sat.status(point, remaining[0]) is not None:
            remaining = remaining[1:]
        if not remaining:
            yield set(ins), set(exs)
            return
        circ = remaining[0]
        yield from walk(ins, exs | {frozenset((point, circ))}, remaining[1:])
        yield from walk(ins | {(point, circ)}, exs, remaining[1:])

    yield from walk(set(in_atoms), set(ex_atoms), tuple(sorted(circles)))


# ---------------------------------------------------------------------------
# Relational diagrams


def is_relational(e: Diagram) -> bool:
    """Every existential point's position follows from at most two circles.

    For each point there must be a set ``S`` of at most two circles such
    that the point's relations to ``S`` plus the circle/circle relations
    of the diagram entail its stored relation to every circle.
    """
    circle_names = e.circles
    circle_atoms_in = {(r.left, r.right) for r in e.relations
                       if r.tag is RelTag.INSIDE and not e.kind_of(r.left).is_point}
    circle_atoms_ex = {r.pair for r in e.relations
                       if r.tag is RelTag.EXCLUSION
                       and not e.kind_of(r.left).is_point
                       and not e.kind_of(r.right).is_point}
    kinds = {o.name: o.kind for o in e.objects if not (
        o.kind is ObjectKind.EXISTENTIAL)}
    for x in e.existentials:
        ins, outs = e.relation_profile(x)
        local_kinds = dict(kinds)
        local_kinds[x] = ObjectKind.EXISTENTIAL
        found = False
        options: list[tuple[str, ...]] = [()]
        options += [(c,) for c in circle_names]
        options += list(combinations(circle_names, 2))
        for subset in options:
            in_atoms = set(circle_atoms_in)
            ex_atoms = set(circle_atoms_ex)
            for c in subset:
                if c in ins:
                    in_atoms.add((x, c))
                elif c in outs:
                    ex_atoms.add(frozenset((x, c)))
            sat = saturate(local_kinds, in_atoms, ex_atoms)
            if all((sat.inside(x, c) if c in ins else sat.excluded(x, c))
                   for c in circle_names):
                found = True
                break
        if not found:
            return False
    return True


# ---------------------------------------------------------------------------
# Counter-proof search


def disprove(inf: Inference, *, skip_consistency_check: bool = False) -> CounterProof:
    """Construct a counter-d-proof and counter-model for an invalid inference.

    Tries every counter-diagram candidate; valid unification steps are
    preferred, determinacy blocks branch over point insertions, and
    consistency conflicts prune the branch.  Raises
    :class:`CannotDisprove` when everything is exhausted (for a
    consistent premise set this signals validity, up to the two known
    expressiveness gaps recorded on the exception).
    """
    diagrams, _ = premise_diagrams(inf)
    if not skip_consistency_check and inf.premises and not oracle_consistent(diagrams):
        raise PrecondViolation("the premises are jointly unsatisfiable")
    target = canonical_diagram(inf.conclusion, FreshNames("xc"))
    if not is_relational(target):
        raise NonRelationalConclusion(
            "an existential point of the conclusion is not determined by two circles")
    candidates = counter_candidates(target, FreshNames("y"))
    if not candidates:
        raise CannotDisprove(
            "no counter-diagram candidates: the conclusion's negation is not "
            "expressible (emptiness has no diagram)")
    gap_seen: list[bool] = [False]
    for candidate in candidates:
        builder = _ProofBuilder()
        leaf_entries = [(builder.add("premise", (), d), d) for d in diagrams]
        counter_id = builder.add("counter-premise", (), candidate,
                                 detail=f"counter-diagram falsifying {inf.conclusion}")
        final_id = _fold(builder, counter_id, candidate, leaf_entries, gap_seen)
        if final_id is not None:
            return _finish(builder, final_id, inf, candidate, target, diagrams)
    raise CannotDisprove("every candidate and placement branch is exhausted",
                         equality_gap=gap_seen[0])


def _fold(builder: _ProofBuilder, current_id: int, current: Diagram,
          remaining: list[tuple[int, Diagram]],
          gap_seen: list[bool]) -> int | None:
    """Merge all remaining leaves into ``current``.

    Returns the final node id, or ``None`` when the branch is dead;
    ``gap_seen`` records whether any dead branch died from an inclusion
    cycle (the circle-equality gap) rather than a genuine contradiction.
    """
    if not remaining:
        return current_id
    blocked: list[tuple[int, tuple[int, Diagram]]] = []
    for idx, (leaf_id, leaf) in enumerate(remaining):
        try:
            merged = unify(current, leaf)
        except UnifyBlocked as b:
            if b.reason == UnifyBlocked.DETERMINACY:
                blocked.append((idx, (leaf_id, leaf)))
            else:
                gap_seen[0] = gap_seen[0] or _is_equality_conflict(b)
            continue
        node_id = builder.add("unify", (current_id, leaf_id), merged)
        rest = remaining[:idx] + remaining[idx + 1:]
        outcome = _fold(builder, node_id, merged, rest, gap_seen)
        if outcome is not None:
            return outcome
        builder.nodes = builder.nodes[:node_id]
        # A clean unify that fails downstream fails in every order (the
        # pooled relations are order-independent); stop here.
        return None
    for idx, (leaf_id, leaf) in blocked:
        for merged, detail in _ipi_merges(current, leaf):
            node_id = builder.add("ipi", (current_id, leaf_id), merged, detail=detail)
            rest = remaining[:idx] + remaining[idx + 1:]
            outcome = _fold(builder, node_id, merged, rest, gap_seen)
            if outcome is not None:
                return outcome
            builder.nodes = builder.nodes[:node_id]
    return None


def _is_equality_conflict(blocked: UnifyBlocked) -> bool:
    conflict = blocked.conflict
    if conflict is None:
        return False
    return conflict.first.startswith("in(") and conflict.second.startswith("in(")


def _ipi_merges(d1: Diagram, d2: Diagram) -> Iterator[tuple[Diagram, str]]:
    """All ways to finish a determinacy-blocked unification of d1 and d2.

    Each undetermined point is fixed to one of its possible positions,
    exclusion before inclusion, circles in lexicographic order.
    """
    kinds = merged_kinds([d1, d2])
    in_atoms, ex_atoms = hard_atoms([d1, d2])
    base = saturate(kinds, in_atoms, ex_atoms)
    if base.conflict is not None:
        return
    gaps = undefined_pairs(kinds, base)
    points = sorted({p for p, _ in gaps})
    circles = sorted(n for n, k in kinds.items() if k is ObjectKind.CIRCLE)

    def walk(ins: set[tuple[str, str]], exs: set[frozenset[str]],
             todo: tuple[tuple[str, str], ...],
             chosen: tuple[tuple[str, str, str], ...]
             ) -> Iterator[tuple[Diagram, str]]:
        sat = saturate(kinds, ins, exs)
        if sat.conflict is not None:
            return
        while todo and sat.status(todo[0][0], todo[0][1]) is not None:
            todo = todo[1:]
        if not todo:
            diagram = assemble(kinds, sat)
            detail = "; ".join(
                f"{p} {'inside' if tag == 'in' else 'outside'} {c}"
                for p, c, tag in chosen)
            yield diagram, f"place {detail}"
            return
        point, circ = todo[0]
        yield from walk(ins, exs | {frozenset((point, circ))}, todo[1:],
                        chosen + ((point, circ, "ex"),))
        yield from walk(ins | {(point, circ)}, exs, todo[1:],
                        chosen + ((point, circ, "in"),))

    todo = tuple((p, c) for p in points for c in circles)
    yield from walk(set(in_atoms), set(ex_atoms), todo, ())


def _finish(builder: _ProofBuilder, final_id: int, inf: Inference,
            candidate: Diagram, target: Diagram,
            premises: Sequence[Diagram]) -> CounterProof:
    final = builder.nodes[final_id].diagram
    if not is_counter_diagram(candidate, target):
        raise InternalDefect("candidate is not a counter-diagram of the conclusion")
    premise_existentials = {x for d in premises for x in d.existentials}
    if premise_existentials & set(candidate.existentials):
        raise InternalDefect("counter-diagram reuses a premise existential point")
    for leaf in (*premises, candidate):
        for rel in leaf.relations:
            if rel.tag is not RelTag.CROSSING and rel not in final.relations:
                raise InternalDefect(f"conclusion dropped leaf relation {rel}")
    model, witness = extract_model(final)
    if not all(eval_sentence(model, p) for p in inf.premises):
        raise InternalDefect("extracted model fails a premise")
    if eval_sentence(model, inf.conclusion):
        raise InternalDefect("extracted model satisfies the conclusion")
    return CounterProof(tuple(builder.nodes), final_id, inf.conclusion,
                        model, witness)

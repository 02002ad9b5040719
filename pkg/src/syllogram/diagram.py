"""Abstract Euler diagrams as canonical relation sets.

A diagram is a finite set of named objects (circles, constant points,
existential points) together with the set of qualitative relations that
hold between them:

* ``in(s, t)``  -- the interior of ``s`` lies inside the interior of
  circle ``t`` (reflexive, asymmetric; the reflexive instances are never
  stored),
* ``ex(a, b)``  -- the interiors are disjoint (irreflexive, symmetric,
  stored with the two names in lexicographic order),
* ``cr(A, B)``  -- the circle boundaries cross, which carries no
  inclusion or exclusion commitment (irreflexive, symmetric, canonical
  order).

Diagram identity is value identity on the object set and the relation
set; no geometry lives at this layer.  Two families of relations are
implicit and never stored: ``in(s, s)`` for every object and
``ex(p, q)`` for distinct points, both synthesized by :func:`holds`.

Well-formedness combines totality (every circle pair carries exactly one
of the four possible relations, every point/circle pair exactly one of
in/ex) with closure under the forced derivations

* ``in(s, t), in(t, u)  =>  in(s, u)``
* ``in(s, t), ex(t, u)  =>  ex(s, u)``

where ``t`` ranges over circles and ``s``, ``u`` over arbitrary objects.
These two schemas cover inclusion chains (R1/R3) and exclusion
inheritance in both argument positions (R2/R4): in particular a point
outside a circle is forced outside everything included in that circle.
A relation set whose closure assigns two different relations to one pair
is rejected.

All values here are immutable; every function is pure and safe to share
across threads.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Mapping

from .errors import (
    ClosureConflict,
    EmptyDiagram,
    ParseError,
    UnknownObject,
    WellFormednessError,
)

_CIRCLE_NAME = re.compile(r"[A-Z][A-Za-z0-9]*\Z")
_POINT_NAME = re.compile(r"[a-z][A-Za-z0-9]*\Z")


class ObjectKind(Enum):
    CIRCLE = "circle"
    CONSTANT = "constant"
    EXISTENTIAL = "existential"

    @property
    def is_point(self) -> bool:
        return self is not ObjectKind.CIRCLE


@dataclass(frozen=True, order=True)
class DiagramObject:
    """A named circle, constant point, or existential point."""

    name: str
    kind: ObjectKind = field(compare=True)

    def __post_init__(self) -> None:
        pattern = _CIRCLE_NAME if self.kind is ObjectKind.CIRCLE else _POINT_NAME
        if not pattern.match(self.name):
            raise WellFormednessError(
                "NAME-CLASS",
                (self.name,),
                f"{self.kind.value} name {self.name!r} is not in its lexical class",
            )


def circle(name: str) -> DiagramObject:
    return DiagramObject(name, ObjectKind.CIRCLE)


def constant(name: str) -> DiagramObject:
    return DiagramObject(name, ObjectKind.CONSTANT)


def existential(name: str) -> DiagramObject:
    return DiagramObject(name, ObjectKind.EXISTENTIAL)


class RelTag(Enum):
    INSIDE = "in"
    EXCLUSION = "ex"
    CROSSING = "cr"


@dataclass(frozen=True)
class Relation:
    """One qualitative relation between two named objects.

    ``in`` is directed (left inside right); ``ex`` and ``cr`` are stored
    with ``left < right``.  Use :func:`inside` / :func:`excludes` /
    :func:`crosses` to build canonical values.
    """

    tag: RelTag
    left: str
    right: str

    @property
    def sort_key(self) -> tuple[str, str, str]:
        return (self.left, self.right, self.tag.value)

    @property
    def pair(self) -> frozenset[str]:
        return frozenset((self.left, self.right))

    def mentions(self, name: str) -> bool:
        return name == self.left or name == self.right

    def __str__(self) -> str:
        return f"{self.tag.value}({self.left},{self.right})"


def inside(inner: str, outer: str) -> Relation:
    return Relation(RelTag.INSIDE, inner, outer)


def excludes(a: str, b: str) -> Relation:
    lo, hi = sorted((a, b))
    return Relation(RelTag.EXCLUSION, lo, hi)


def crosses(a: str, b: str) -> Relation:
    lo, hi = sorted((a, b))
    return Relation(RelTag.CROSSING, lo, hi)


@dataclass(frozen=True)
class Diagram:
    """An abstract Euler diagram: object set plus canonical relation set.

    Instances should be produced by :func:`make_diagram` (or operations
    built on it), which establishes the well-formedness invariants.
    """

    objects: frozenset[DiagramObject]
    relations: frozenset[Relation]

    def kind_of(self, name: str) -> ObjectKind:
        for obj in self.objects:
            if obj.name == name:
                return obj.kind
        raise UnknownObject(f"object {name!r} is not in the diagram")

    def has(self, name: str) -> bool:
        return any(obj.name == name for obj in self.objects)

    @property
    def circles(self) -> tuple[str, ...]:
        return tuple(sorted(o.name for o in self.objects if o.kind is ObjectKind.CIRCLE))

    @property
    def constants(self) -> tuple[str, ...]:
        return tuple(sorted(o.name for o in self.objects if o.kind is ObjectKind.CONSTANT))

    @property
    def existentials(self) -> tuple[str, ...]:
        return tuple(sorted(o.name for o in self.objects if o.kind is ObjectKind.EXISTENTIAL))

    @property
    def points(self) -> tuple[str, ...]:
        return tuple(sorted(o.name for o in self.objects if o.kind.is_point))

    @property
    def rel_sorted(self) -> tuple[Relation, ...]:
        return tuple(sorted(self.relations, key=lambda r: r.sort_key))

    def hard_relations(self) -> tuple[Relation, ...]:
        """The stored in/ex relations, in canonical order."""
        return tuple(r for r in self.rel_sorted if r.tag is not RelTag.CROSSING)

    def relation_profile(self, point: str) -> tuple[frozenset[str], frozenset[str]]:
        """Circles the point is inside of / excluded from."""
        ins = frozenset(r.right for r in self.relations
                        if r.tag is RelTag.INSIDE and r.left == point)
        outs = set()
        for r in self.relations:
            if r.tag is RelTag.EXCLUSION and r.mentions(point):
                other = r.right if r.left == point else r.left
                if self.kind_of(other) is ObjectKind.CIRCLE:
                    outs.add(other)
        return ins, frozenset(outs)

    def __str__(self) -> str:
        rels = ", ".join(str(r) for r in self.rel_sorted)
        names = ", ".join(sorted(o.name for o in self.objects))
        return f"Diagram[{names} | {rels}]"


# ---------------------------------------------------------------------------
# Relation validation and canonicalization


def _canonicalize(
    kinds: Mapping[str, ObjectKind], relations: Iterable[Relation]
) -> tuple[set[Relation], set[tuple[str, str]], set[frozenset[str]]]:
    """Validate relation typing and return (stored, in_atoms, ex_atoms).

    Reflexive ``in`` and point/point ``ex`` are dropped (they are
    implicit); all other self-relations and kind violations are errors.
    """
    stored: set[Relation] = set()
    in_atoms: set[tuple[str, str]] = set()
    ex_atoms: set[frozenset[str]] = set()
    for rel in relations:
        for name in (rel.left, rel.right):
            if name not in kinds:
                raise UnknownObject(f"relation {rel} mentions unknown object {name!r}")
        if rel.left == rel.right:
            if rel.tag is RelTag.INSIDE:
                continue  # implicit reflexive inclusion
            raise WellFormednessError(
                "IRREFLEXIVITY", (rel.left, rel.right), f"self-relation {rel} is not allowed"
            )
        lk, rk = kinds[rel.left], kinds[rel.right]
        if rel.tag is RelTag.INSIDE:
            if rk is not ObjectKind.CIRCLE:
                raise WellFormednessError(
                    "RELATION-TYPE", (rel.left, rel.right),
                    f"{rel}: the right argument of an inclusion must be a circle",
                )
            stored.add(rel)
            in_atoms.add((rel.left, rel.right))
        elif rel.tag is RelTag.EXCLUSION:
            if lk.is_point and rk.is_point:
                continue  # implicit point/point exclusion
            canon = excludes(rel.left, rel.right)
            stored.add(canon)
            ex_atoms.add(canon.pair)
        else:
            if lk.is_point or rk.is_point:
                raise WellFormednessError(
                    "RELATION-TYPE", (rel.left, rel.right),
                    f"{rel}: crossing relates circles only",
                )
            stored.add(crosses(rel.left, rel.right))
    return stored, in_atoms, ex_atoms


# ---------------------------------------------------------------------------
# Saturation: the closure engine over hard (in/ex) atoms


@dataclass(frozen=True)
class Saturation:
    """Derived consequences of a set of in/ex atoms.

    ``up[o]`` is the set of circles the object ``o`` is forced inside of
    (transitively); exclusion queries consult the stored exclusion atoms
    through these up-sets.  ``conflict`` records the most direct pair
    (derived relation against a stored atom first, then canonical order)
    that received two incompatible relations, or ``None`` when the atom
    set is coherent.
    """

    kinds: Mapping[str, ObjectKind]
    up: Mapping[str, frozenset[str]]
    ex_atoms: frozenset[frozenset[str]]
    direct_in: frozenset[tuple[str, str]]
    conflict: ClosureConflict | None

    def up_star(self, name: str) -> frozenset[str]:
        return self.up[name] | {name}

    def inside(self, inner: str, outer: str) -> bool:
        return outer in self.up[inner]

    def excluded(self, a: str, b: str) -> bool:
        ups_a = self.up_star(a)
        ups_b = self.up_star(b)
        return any(frozenset((x, y)) in self.ex_atoms for x in ups_a for y in ups_b)

    def status(self, a: str, b: str) -> Relation | None:
        """The derived hard relation on the pair, if any."""
        if self.inside(a, b):
            return inside(a, b)
        if self.inside(b, a):
            return inside(b, a)
        if self.excluded(a, b):
            return excludes(a, b)
        return None


def saturate(
    kinds: Mapping[str, ObjectKind],
    in_atoms: Iterable[tuple[str, str]],
    ex_atoms: Iterable[frozenset[str]],
) -> Saturation:
    """Close the hard atoms under the two derivation schemas."""
    up: dict[str, set[str]] = {name: set() for name in kinds}
    for inner, outer in in_atoms:
        up[inner].add(outer)
    changed = True
    while changed:
        changed = False
        for name, ups in up.items():
            extra = set()
            for mid in ups:
                extra |= up[mid]
            extra -= ups
            extra.discard(name)
            if extra:
                ups |= extra
                changed = True
    frozen_up = {name: frozenset(ups) for name, ups in up.items()}
    direct = frozenset(in_atoms)
    sat = Saturation(dict(kinds), frozen_up, frozenset(ex_atoms), direct, None)
    conflict = _first_conflict(sat)
    if conflict is None:
        return sat
    return Saturation(dict(kinds), frozen_up, frozenset(ex_atoms), direct, conflict)


def _first_conflict(sat: Saturation) -> ClosureConflict | None:
    # Report the conflict the way a by-hand derivation meets it: a
    # derived inclusion hitting a stored exclusion first, then inclusion
    # cycles, then derived exclusions hitting stored inclusions.  Within
    # a rank the canonically first pair wins, so reports are stable.
    best: tuple[int, tuple[str, str], ClosureConflict] | None = None
    names = sorted(sat.kinds)
    for i, a in enumerate(names):
        for b in names[i + 1:]:
            if sat.kinds[a].is_point and sat.kinds[b].is_point:
                continue
            in_ab = sat.inside(a, b)
            in_ba = sat.inside(b, a)
            ex_ab = sat.excluded(a, b)
            conflict: ClosureConflict | None = None
            rank = 3
            if in_ab and in_ba:
                conflict = ClosureConflict((a, b), str(inside(a, b)), str(inside(b, a)))
                rank = 1
            elif (in_ab or in_ba) and ex_ab:
                inc = inside(a, b) if in_ab else inside(b, a)
                conflict = ClosureConflict((a, b), str(inc), str(excludes(a, b)))
                if frozenset((a, b)) in sat.ex_atoms:
                    rank = 0
                elif (a, b) in sat.direct_in or (b, a) in sat.direct_in:
                    rank = 2
            if conflict is None:
                continue
            key = (rank, (a, b), conflict)
            if best is None or key[:2] < best[:2]:
                best = key
    return best[2] if best is not None else None


# ---------------------------------------------------------------------------
# Public operations


def _object_index(objects: Iterable[DiagramObject]) -> dict[str, ObjectKind]:
    kinds: dict[str, ObjectKind] = {}
    for obj in objects:
        if obj.name in kinds:
            raise WellFormednessError(
                "OBJECT-NAMES", (obj.name,), f"object name {obj.name!r} is not unique"
            )
        kinds[obj.name] = obj.kind
    return kinds


def _closure_rule_name(derived: Relation, kinds: Mapping[str, ObjectKind]) -> str:
    point_involved = kinds[derived.left].is_point or kinds[derived.right].is_point
    if derived.tag is RelTag.INSIDE:
        return "CLOSURE-R3" if point_involved else "CLOSURE-R1"
    return "CLOSURE-R4" if point_involved else "CLOSURE-R2"


def make_diagram(
    objects: Iterable[DiagramObject], relations: Iterable[Relation]
) -> Diagram:
    """Build a well-formed diagram or raise :class:`WellFormednessError`.

    The relation set is canonicalized first (symmetric relations
    ordered, implicit relations dropped); the result is checked for
    totality, closure, and asymmetry.  Diagrams compare equal exactly
    when they have the same objects and the same canonical relation set.
    """
    object_set = frozenset(objects)
    kinds = _object_index(object_set)
    if not kinds:
        raise EmptyDiagram("a diagram needs at least one object")
    stored, in_atoms, ex_atoms = _canonicalize(kinds, relations)

    by_pair: dict[frozenset[str], list[Relation]] = {}
    for rel in stored:
        by_pair.setdefault(rel.pair, []).append(rel)

    names = sorted(kinds)
    circles_only = [n for n in names if kinds[n] is ObjectKind.CIRCLE]
    # Totality: exactly one stored relation per circle/circle pair and
    # per point/circle pair.
    for i, a in enumerate(names):
        for b in names[i + 1:]:
            a_pt, b_pt = kinds[a].is_point, kinds[b].is_point
            if a_pt and b_pt:
                continue
            invariant = "TOTALITY-PC" if (a_pt or b_pt) else "TOTALITY-CC"
            here = by_pair.get(frozenset((a, b)), [])
            if len(here) > 1:
                raise WellFormednessError(
                    invariant, (a, b),
                    f"pair ({a},{b}) carries {len(here)} relations: "
                    + ", ".join(sorted(str(r) for r in here)),
                )
            if not here:
                raise WellFormednessError(
                    invariant, (a, b), f"pair ({a},{b}) carries no relation"
                )

    sat = saturate(kinds, in_atoms, ex_atoms)
    # Under totality every derived relation lands on a pair with one
    # stored relation; any disagreement is a closure (or asymmetry)
    # violation.
    for i, a in enumerate(names):
        for b in names[i + 1:]:
            if kinds[a].is_point and kinds[b].is_point:
                continue
            stored_rel = by_pair[frozenset((a, b))][0]
            derived = sat.status(a, b)
            if derived is None or derived == stored_rel:
                continue
            if derived.tag is RelTag.INSIDE and stored_rel.tag is RelTag.INSIDE:
                raise WellFormednessError(
                    "ASYMMETRY", (a, b),
                    f"both {derived} and {stored_rel} are forced",
                )
            raise WellFormednessError(
                _closure_rule_name(derived, kinds), (a, b),
                f"closure forces {derived} but the diagram stores {stored_rel}",
            )
    if sat.conflict is not None:
        # Unreached when totality holds (the disagreement above fires
        # first), kept as a safety net.
        raise WellFormednessError(
            "CLOSURE", sat.conflict.pair, str(sat.conflict)
        )
    return Diagram(object_set, frozenset(stored))


def closure(
    relations: Iterable[Relation], objects: Iterable[DiagramObject]
) -> frozenset[Relation]:
    """Least superset of ``relations`` closed under the derivation rules.

    Stored crossings are kept verbatim; deriving a hard relation for a
    pair that carries a crossing, or two incompatible hard relations for
    one pair, raises :class:`ClosureConflict`.
    """
    kinds = _object_index(objects)
    stored, in_atoms, ex_atoms = _canonicalize(kinds, relations)
    sat = saturate(kinds, in_atoms, ex_atoms)
    if sat.conflict is not None:
        raise sat.conflict
    crossing_pairs = {r.pair for r in stored if r.tag is RelTag.CROSSING}
    out = set(stored)
    names = sorted(kinds)
    for i, a in enumerate(names):
        for b in names[i + 1:]:
            if kinds[a].is_point and kinds[b].is_point:
                continue
            derived = sat.status(a, b)
            if derived is None:
                continue
            if frozenset((a, b)) in crossing_pairs:
                raise ClosureConflict((a, b), str(crosses(a, b)), str(derived))
            out.add(derived)
    return frozenset(out)


def holds(d: Diagram, r: Relation) -> bool:
    """Whether the relation holds on the diagram.

    Synthesizes the implicit relations: reflexive inclusions and
    exclusions between distinct points.
    """
    for name in (r.left, r.right):
        if not d.has(name):
            raise UnknownObject(f"object {name!r} is not in the diagram")
    if r.left == r.right:
        return r.tag is RelTag.INSIDE
    if r.tag is RelTag.INSIDE:
        return r in d.relations
    lk, rk = d.kind_of(r.left), d.kind_of(r.right)
    if r.tag is RelTag.EXCLUSION and lk.is_point and rk.is_point:
        return True
    canon = excludes(r.left, r.right) if r.tag is RelTag.EXCLUSION else crosses(r.left, r.right)
    return canon in d.relations


def delete_object(d: Diagram, name: str) -> Diagram:
    """The diagram restricted to all objects except ``name``."""
    if not d.has(name):
        raise UnknownObject(f"object {name!r} is not in the diagram")
    remaining = [o for o in d.objects if o.name != name]
    if not remaining:
        raise EmptyDiagram("deleting the last object would leave an empty diagram")
    kept = [r for r in d.relations if not r.mentions(name)]
    # Restriction preserves totality and closure; make_diagram asserts it.
    return make_diagram(remaining, kept)


def is_counter_diagram(d: Diagram, e: Diagram) -> bool:
    """Whether one diagram holds a counter-relation to a relation of the other.

    Three counter-relation patterns exist, checked in both orientations:
    a constant placed inside vs. outside the same circle; an inclusion
    vs. an existential witness inside the one circle and outside the
    other; an exclusion vs. an existential witness inside both.
    """
    return _counter_oriented(d, e) or _counter_oriented(e, d)


def _counter_oriented(d: Diagram, e: Diagram) -> bool:
    e_exist = set(e.existentials)
    e_ins: dict[str, set[str]] = {}
    e_outs: dict[str, set[str]] = {}
    for x in e_exist:
        ins, outs = e.relation_profile(x)
        e_ins[x] = set(ins)
        e_outs[x] = set(outs)
    for rel in d.relations:
        if rel.tag is RelTag.INSIDE:
            inner_kind = d.kind_of(rel.left)
            if inner_kind is ObjectKind.CONSTANT:
                if (e.has(rel.left) and e.has(rel.right)
                        and e.kind_of(rel.left) is ObjectKind.CONSTANT
                        and excludes(rel.left, rel.right) in e.relations):
                    return True
            elif inner_kind is ObjectKind.CIRCLE:
                if any(rel.left in e_ins[x] and rel.right in e_outs[x] for x in e_exist):
                    return True
        elif rel.tag is RelTag.EXCLUSION:
            lk = d.kind_of(rel.left)
            rk = d.kind_of(rel.right)
            if lk is ObjectKind.CONSTANT and rk is ObjectKind.CIRCLE:
                if (e.has(rel.left) and e.has(rel.right)
                        and e.kind_of(rel.left) is ObjectKind.CONSTANT
                        and inside(rel.left, rel.right) in e.relations):
                    return True
            elif rk is ObjectKind.CONSTANT and lk is ObjectKind.CIRCLE:
                if (e.has(rel.right) and e.has(rel.left)
                        and e.kind_of(rel.right) is ObjectKind.CONSTANT
                        and inside(rel.right, rel.left) in e.relations):
                    return True
            elif lk is ObjectKind.CIRCLE and rk is ObjectKind.CIRCLE:
                if any(rel.left in e_ins[x] and rel.right in e_ins[x] for x in e_exist):
                    return True
    return False


# ---------------------------------------------------------------------------
# JSON interchange


def diagram_to_json(d: Diagram) -> dict:
    return {
        "circles": list(d.circles),
        "constants": list(d.constants),
        "existentials": list(d.existentials),
        "relations": [[r.tag.value, r.left, r.right] for r in d.rel_sorted],
    }


def diagram_from_json(data: dict) -> Diagram:
    if not isinstance(data, dict):
        raise ParseError("diagram JSON must be an object", 0)
    objects: list[DiagramObject] = []
    for key, factory in (("circles", circle), ("constants", constant),
                         ("existentials", existential)):
        for name in data.get(key, []):
            if not isinstance(name, str):
                raise ParseError(f"{key} entries must be strings", 0)
            objects.append(factory(name))
    tags = {t.value: t for t in RelTag}
    relations: list[Relation] = []
    for entry in data.get("relations", []):
        if (not isinstance(entry, (list, tuple)) or len(entry) != 3
                or not all(isinstance(part, str) for part in entry)):
            raise ParseError(f"relation entry {entry!r} must be [tag, left, right]", 0)
        tag_text, left, right = entry
        if tag_text not in tags:
            raise ParseError(f"unknown relation tag {tag_text!r}", 0,
                             frozenset(tags))
        relations.append(Relation(tags[tag_text], left, right))
    return make_diagram(objects, relations)

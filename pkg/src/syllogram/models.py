"""Set-theoretic models, diagram/sentence truth, and the semantic oracle.

Models interpret predicates as nonempty subsets of a finite domain
(existential import is always on: an empty predicate is not a model)
and constants as domain elements.

The oracle decides validity and satisfiability over vocabularies of at
most four predicates.  Because the sentence fragment is monadic with
quantifier depth one, truth depends only on which Boolean *cells*
(regions of the predicate partition) are inhabited and which cell each
constant occupies.  :class:`CellProfile` captures exactly that, and the
oracle reasons over profiles:

* universal sentences forbid cells,
* existential sentences require some inhabited cell from a pattern,
* constants constrain a single cell,
* import requires every predicate to own an inhabited cell.

Requirements never interact (adding an allowed cell cannot violate a
cell filter), so satisfiability is decided by scanning the at most
sixteen cells per requirement; this returns the same verdicts as
exhaustively enumerating all inhabited-cell subsets and constant
placements, which the test suite checks on small vocabularies.

Everything here is pure; enumeration helpers are deterministic.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import product
from typing import Iterable, Mapping, Sequence

from .diagram import Diagram, ObjectKind, RelTag, Relation
from .errors import (
    InternalDefect,
    MissingWitness,
    UninterpretedName,
    VocabularyTooLarge,
)
from .sentences import Form, Inference, Sentence

ORACLE_PREDICATE_BOUND = 4


@dataclass(frozen=True)
class Model:
    """Finite model with nonempty predicate interpretations."""

    domain: frozenset[str]
    const_interp: Mapping[str, str]
    pred_interp: Mapping[str, frozenset[str]]

    def __post_init__(self) -> None:
        if not self.domain:
            raise ValueError("model domain must be nonempty")
        for name, element in self.const_interp.items():
            if element not in self.domain:
                raise ValueError(f"I({name}) = {element!r} is outside the domain")
        for name, ext in self.pred_interp.items():
            if not ext:
                raise ValueError(f"I({name}) is empty (existential import)")
            if not ext <= self.domain:
                raise ValueError(f"I({name}) is not a subset of the domain")

    def pred(self, name: str) -> frozenset[str]:
        try:
            return self.pred_interp[name]
        except KeyError:
            raise UninterpretedName(f"predicate {name!r} is not interpreted") from None

    def const(self, name: str) -> str:
        try:
            return self.const_interp[name]
        except KeyError:
            raise UninterpretedName(f"constant {name!r} is not interpreted") from None


def model_to_json(m: Model) -> dict:
    return {
        "domain": sorted(m.domain),
        "constants": {k: m.const_interp[k] for k in sorted(m.const_interp)},
        "predicates": {k: sorted(m.pred_interp[k]) for k in sorted(m.pred_interp)},
    }


def model_from_json(data: dict) -> Model:
    return Model(
        frozenset(data["domain"]),
        dict(data.get("constants", {})),
        {k: frozenset(v) for k, v in data.get("predicates", {}).items()},
    )


# ---------------------------------------------------------------------------
# Truth evaluation


def eval_sentence(m: Model, s: Sentence) -> bool:
    """Standard set-theoretic truth of one sentence."""
    form = s.form
    if form is Form.CONST_IS:
        return m.const(s.subject) in m.pred(s.predicate)
    if form is Form.CONST_IS_NOT:
        return m.const(s.subject) not in m.pred(s.predicate)
    if form is Form.ALL:
        return m.pred(s.subject) <= m.pred(s.predicate)
    if form is Form.NO:
        return not (m.pred(s.subject) & m.pred(s.predicate))
    if form is Form.SOME:
        return bool(m.pred(s.subject) & m.pred(s.predicate))
    if form is Form.SOME_NOT:
        return bool(m.pred(s.subject) - m.pred(s.predicate))
    if form is Form.SOMETHING_IS:
        return bool(m.pred(s.predicate))
    return bool(m.domain - m.pred(s.predicate))


def eval_diagram(m: Model, d: Diagram, witness: Mapping[str, str]) -> bool:
    """Whether every relation of the diagram holds under the interpretation.

    Constants use the model's interpretation; each existential point is
    assigned an element by ``witness``.  Crossings hold vacuously, and
    distinct points must denote distinct elements (the implicit
    point/point exclusions).
    """
    values: dict[str, str] = {}
    for name in d.points:
        if d.kind_of(name) is ObjectKind.CONSTANT:
            values[name] = m.const(name)
        else:
            if name not in witness:
                raise MissingWitness(f"no witness element for existential point {name!r}")
            values[name] = witness[name]
    for name, element in values.items():
        if element not in m.domain:
            raise UninterpretedName(f"witness for {name!r} is outside the domain")
    points = sorted(values)
    for i, p in enumerate(points):
        for q in points[i + 1:]:
            if values[p] == values[q]:
                return False
    for rel in d.relations:
        if rel.tag is RelTag.CROSSING:
            continue
        if rel.tag is RelTag.INSIDE:
            if rel.left in values:
                if values[rel.left] not in m.pred(rel.right):
                    return False
            elif not m.pred(rel.left) <= m.pred(rel.right):
                return False
        else:
            left_pt = rel.left in values
            right_pt = rel.right in values
            if left_pt and right_pt:
                continue  # point/point distinctness already checked
            if left_pt:
                if values[rel.left] in m.pred(rel.right):
                    return False
            elif right_pt:
                if values[rel.right] in m.pred(rel.left):
                    return False
            elif m.pred(rel.left) & m.pred(rel.right):
                return False
    return True


# ---------------------------------------------------------------------------
# Cell profiles


@dataclass(frozen=True)
class CellProfile:
    """Canonical small-model representation over an ordered vocabulary.

    A cell is a bitmask over ``predicates``; ``inhabited`` lists cells
    holding at least one anonymous element, and each constant occupies
    the cell ``constant_cells[name]`` (which counts as inhabited).
    """

    predicates: tuple[str, ...]
    inhabited: frozenset[int]
    constant_cells: tuple[tuple[str, int], ...] = ()

    @property
    def constants(self) -> dict[str, int]:
        return dict(self.constant_cells)

    @property
    def effective_cells(self) -> frozenset[int]:
        return self.inhabited | {cell for _, cell in self.constant_cells}

    def bit(self, predicate: str) -> int:
        return 1 << self.predicates.index(predicate)

    def import_ok(self) -> bool:
        cells = self.effective_cells
        if not cells:
            return False
        return all(any(cell & (1 << i) for cell in cells)
                   for i in range(len(self.predicates)))

    def satisfies(self, s: Sentence) -> bool:
        cells = self.effective_cells
        form = s.form
        if form in (Form.CONST_IS, Form.CONST_IS_NOT):
            cell = self.constants[s.subject]
            member = bool(cell & self.bit(s.predicate))
            return member if form is Form.CONST_IS else not member
        if form in (Form.ALL, Form.NO):
            sub, pred = self.bit(s.subject), self.bit(s.predicate)
            if form is Form.ALL:
                return not any((c & sub) and not (c & pred) for c in cells)
            return not any((c & sub) and (c & pred) for c in cells)
        if form is Form.SOME:
            sub, pred = self.bit(s.subject), self.bit(s.predicate)
            return any((c & sub) and (c & pred) for c in cells)
        if form is Form.SOME_NOT:
            sub, pred = self.bit(s.subject), self.bit(s.predicate)
            return any((c & sub) and not (c & pred) for c in cells)
        pred = self.bit(s.predicate)
        if form is Form.SOMETHING_IS:
            return any(c & pred for c in cells)
        return any(not (c & pred) for c in cells)

    def satisfies_diagram(self, d: Diagram) -> bool:
        """Diagram truth with per-point witness-cell choice.

        Profiles abstract away element counts, so two points may share a
        cell; explicit models refine this by assigning actual elements.
        """
        cells = self.effective_cells
        consts = self.constants
        for rel in d.relations:
            if rel.tag is RelTag.CROSSING:
                continue
            left_kind = d.kind_of(rel.left)
            right_kind = d.kind_of(rel.right)
            if left_kind is ObjectKind.EXISTENTIAL or right_kind is ObjectKind.EXISTENTIAL:
                continue  # handled per point below
            if rel.tag is RelTag.INSIDE:
                if left_kind is ObjectKind.CONSTANT:
                    if not consts[rel.left] & self.bit(rel.right):
                        return False
                else:
                    sub, pred = self.bit(rel.left), self.bit(rel.right)
                    if any((c & sub) and not (c & pred) for c in cells):
                        return False
            else:
                if left_kind is ObjectKind.CONSTANT or right_kind is ObjectKind.CONSTANT:
                    const_name, circ = ((rel.left, rel.right)
                                        if left_kind is ObjectKind.CONSTANT
                                        else (rel.right, rel.left))
                    if consts[const_name] & self.bit(circ):
                        return False
                else:
                    a, b = self.bit(rel.left), self.bit(rel.right)
                    if any((c & a) and (c & b) for c in cells):
                        return False
        for x in d.existentials:
            ins, outs = d.relation_profile(x)
            need = sum(self.bit(c) for c in ins)
            avoid = sum(self.bit(c) for c in outs)
            if not any((c & need) == need and not (c & avoid) for c in cells):
                return False
        return True

    @classmethod
    def from_model(cls, m: Model, predicates: Sequence[str] | None = None) -> "CellProfile":
        preds = tuple(predicates) if predicates is not None else tuple(sorted(m.pred_interp))
        def cell_of(element: str) -> int:
            return sum(1 << i for i, p in enumerate(preds)
                       if element in m.pred_interp.get(p, frozenset()))
        const_cells = tuple(sorted((name, cell_of(el)) for name, el in m.const_interp.items()))
        inhabited = frozenset(cell_of(el) for el in m.domain)
        return cls(preds, inhabited, const_cells)

    def to_model(self) -> Model:
        """A concrete model realizing the profile (one element per cell)."""
        def element(cell: int) -> str:
            label = "".join(p for i, p in enumerate(self.predicates) if cell & (1 << i))
            return f"e_{label or 'none'}"
        elements = {cell: element(cell) for cell in self.effective_cells}
        domain = frozenset(elements.values())
        consts = {name: elements[cell] for name, cell in self.constant_cells}
        preds = {
            p: frozenset(el for cell, el in elements.items() if cell & (1 << i))
            for i, p in enumerate(self.predicates)
        }
        preds = {p: ext for p, ext in preds.items() if ext}
        return Model(domain, consts, preds)


# ---------------------------------------------------------------------------
# Constraint form of sentences and diagrams


@dataclass
class _CellConstraints:
    """Conjunctive cell constraints over a fixed vocabulary."""

    predicates: tuple[str, ...]
    forbids: list[tuple[int, int]]
    requires: list[tuple[int, int]]
    const_must: dict[str, int]
    const_mustnot: dict[str, int]

    @classmethod
    def empty(cls, predicates: Sequence[str]) -> "_CellConstraints":
        return cls(tuple(predicates), [], [], {}, {})

    def bit(self, predicate: str) -> int:
        return 1 << self.predicates.index(predicate)

    def add_sentence(self, s: Sentence, positive: bool = True) -> None:
        form = s.form
        if form is Form.ALL:
            sub, pred = self.bit(s.subject), self.bit(s.predicate)
            if positive:
                self.forbids.append((sub, pred))
            else:
                self.requires.append((sub, pred))
        elif form is Form.NO:
            sub, pred = self.bit(s.subject), self.bit(s.predicate)
            if positive:
                self.forbids.append((sub | pred, 0))
            else:
                self.requires.append((sub | pred, 0))
        elif form is Form.SOME:
            sub, pred = self.bit(s.subject), self.bit(s.predicate)
            if positive:
                self.requires.append((sub | pred, 0))
            else:
                self.forbids.append((sub | pred, 0))
        elif form is Form.SOME_NOT:
            sub, pred = self.bit(s.subject), self.bit(s.predicate)
            if positive:
                self.requires.append((sub, pred))
            else:
                self.forbids.append((sub, pred))
        elif form in (Form.CONST_IS, Form.CONST_IS_NOT):
            bit = self.bit(s.predicate)
            wants_in = (form is Form.CONST_IS) == positive
            target = self.const_must if wants_in else self.const_mustnot
            target[s.subject] = target.get(s.subject, 0) | bit
        elif form is Form.SOMETHING_IS:
            bit = self.bit(s.predicate)
            if positive:
                self.requires.append((bit, 0))
            else:
                self.forbids.append((bit, 0))
        else:  # SOMETHING_IS_NOT
            bit = self.bit(s.predicate)
            if positive:
                self.requires.append((0, bit))
            else:
                self.forbids.append((0, bit))

    def add_diagram(self, d: Diagram) -> None:
        for rel in d.relations:
            if rel.tag is RelTag.CROSSING:
                continue
            left_kind = d.kind_of(rel.left)
            right_kind = d.kind_of(rel.right)
            if left_kind is ObjectKind.EXISTENTIAL or right_kind is ObjectKind.EXISTENTIAL:
                continue  # folded into the per-point requirement below
            if rel.tag is RelTag.INSIDE:
                if left_kind is ObjectKind.CONSTANT:
                    self.const_must[rel.left] = (
                        self.const_must.get(rel.left, 0) | self.bit(rel.right))
                else:
                    self.forbids.append((self.bit(rel.left), self.bit(rel.right)))
            else:
                if left_kind is ObjectKind.CONSTANT or right_kind is ObjectKind.CONSTANT:
                    const_name, circ = ((rel.left, rel.right)
                                        if left_kind is ObjectKind.CONSTANT
                                        else (rel.right, rel.left))
                    self.const_mustnot[const_name] = (
                        self.const_mustnot.get(const_name, 0) | self.bit(circ))
                else:
                    self.forbids.append((self.bit(rel.left) | self.bit(rel.right), 0))
        for x in d.existentials:
            ins, outs = d.relation_profile(x)
            self.requires.append((sum(self.bit(c) for c in ins),
                                  sum(self.bit(c) for c in outs)))

    def solve(self) -> CellProfile | None:
        """A satisfying profile, or ``None`` when unsatisfiable."""
        k = len(self.predicates)
        def allowed(cell: int) -> bool:
            return not any((cell & must) == must and not (cell & mustnot)
                           for must, mustnot in self.forbids)
        cells = [c for c in range(1 << k) if allowed(c)]
        if not cells:
            return None
        inhabited: set[int] = set()
        for must, mustnot in self.requires:
            match = next((c for c in cells if (c & must) == must and not (c & mustnot)), None)
            if match is None:
                return None
            inhabited.add(match)
        const_cells: dict[str, int] = {}
        for name in sorted(set(self.const_must) | set(self.const_mustnot)):
            must = self.const_must.get(name, 0)
            mustnot = self.const_mustnot.get(name, 0)
            if must & mustnot:
                return None
            match = next((c for c in cells if (c & must) == must and not (c & mustnot)), None)
            if match is None:
                return None
            const_cells[name] = match
        for i in range(k):
            bit = 1 << i
            if any(c & bit for c in inhabited) or any(c & bit for c in const_cells.values()):
                continue
            match = next((c for c in cells if c & bit), None)
            if match is None:
                return None
            inhabited.add(match)
        if not inhabited and not const_cells:
            inhabited.add(cells[0])
        return CellProfile(self.predicates, frozenset(inhabited),
                           tuple(sorted(const_cells.items())))


def _vocabulary(preds: Iterable[str]) -> tuple[str, ...]:
    vocab = tuple(sorted(set(preds)))
    if len(vocab) > ORACLE_PREDICATE_BOUND:
        raise VocabularyTooLarge(
            f"oracle handles at most {ORACLE_PREDICATE_BOUND} predicates, got {len(vocab)}")
    return vocab


def satisfying_profile(inf: Inference) -> CellProfile | None:
    """A profile making all premises true and the conclusion false."""
    vocab = _vocabulary(inf.predicates)
    constraints = _CellConstraints.empty(vocab)
    for premise in inf.premises:
        constraints.add_sentence(premise, positive=True)
    constraints.add_sentence(inf.conclusion, positive=False)
    return constraints.solve()


def oracle_valid(inf: Inference) -> bool:
    """Exact validity over all profiles of the inference's vocabulary."""
    return satisfying_profile(inf) is None


def oracle_consistent(diagrams: Sequence[Diagram]) -> bool:
    """Whether some profile satisfies the conjunction of the diagrams."""
    vocab = _vocabulary(name for d in diagrams for name in d.circles)
    constraints = _CellConstraints.empty(vocab)
    for d in diagrams:
        constraints.add_diagram(d)
    return constraints.solve() is not None


def counter_profile_model(inf: Inference) -> tuple[Model, CellProfile] | None:
    """A concrete counter-model straight from the oracle, if one exists."""
    profile = satisfying_profile(inf)
    if profile is None:
        return None
    return profile.to_model(), profile


def diagram_entails(premises: Sequence[Diagram], goal: Diagram) -> bool:
    """Whether the premise conjunction entails every relation of ``goal``.

    Checked conjunct by conjunct: the premises plus the negation of one
    goal component must be unsatisfiable.  Crossings are tautologies and
    impose nothing.
    """
    vocab = _vocabulary(name for d in (*premises, goal) for name in d.circles)

    def base() -> _CellConstraints:
        constraints = _CellConstraints.empty(vocab)
        for d in premises:
            constraints.add_diagram(d)
        return constraints

    for rel in goal.relations:
        if rel.tag is RelTag.CROSSING:
            continue
        left_kind = goal.kind_of(rel.left)
        right_kind = goal.kind_of(rel.right)
        if left_kind is ObjectKind.EXISTENTIAL or right_kind is ObjectKind.EXISTENTIAL:
            continue
        constraints = base()
        if rel.tag is RelTag.INSIDE:
            if left_kind is ObjectKind.CONSTANT:
                constraints.const_mustnot[rel.left] = (
                    constraints.const_mustnot.get(rel.left, 0)
                    | constraints.bit(rel.right))
            else:
                constraints.requires.append(
                    (constraints.bit(rel.left), constraints.bit(rel.right)))
        else:
            if left_kind is ObjectKind.CONSTANT or right_kind is ObjectKind.CONSTANT:
                const_name, circ = ((rel.left, rel.right)
                                    if left_kind is ObjectKind.CONSTANT
                                    else (rel.right, rel.left))
                constraints.const_must[const_name] = (
                    constraints.const_must.get(const_name, 0)
                    | constraints.bit(circ))
            else:
                constraints.requires.append(
                    (constraints.bit(rel.left) | constraints.bit(rel.right), 0))
        if constraints.solve() is not None:
            return False
    for x in goal.existentials:
        ins, outs = goal.relation_profile(x)
        constraints = base()
        constraints.forbids.append((sum(constraints.bit(c) for c in ins),
                                    sum(constraints.bit(c) for c in outs)))
        if constraints.solve() is not None:
            return False
    return True


def diagrams_equivalent(parts: Sequence[Diagram], merged: Diagram) -> bool:
    """Whether the conjunction of ``parts`` has exactly the models of ``merged``."""
    return (diagram_entails(parts, merged)
            and all(diagram_entails([merged], part) for part in parts))


# ---------------------------------------------------------------------------
# Exhaustive enumeration (the oracle-of-the-oracle, used by tests)


def enumerate_profiles(predicates: Sequence[str],
                       constants: Sequence[str] = ()) -> Iterable[CellProfile]:
    """All profiles over the vocabulary satisfying existential import."""
    preds = tuple(predicates)
    k = len(preds)
    cells = list(range(1 << k))
    const_names = tuple(constants)
    for bits in range(1 << len(cells)):
        inhabited = frozenset(c for c in cells if bits & (1 << c))
        for assignment in product(cells, repeat=len(const_names)):
            profile = CellProfile(preds, inhabited,
                                  tuple(zip(const_names, assignment)))
            if profile.import_ok():
                yield profile


def oracle_valid_exhaustive(inf: Inference) -> bool:
    """Literal enumeration of profiles; exponential, for cross-checks."""
    vocab = _vocabulary(inf.predicates)
    for profile in enumerate_profiles(vocab, inf.constant_names):
        if (all(profile.satisfies(p) for p in inf.premises)
                and not profile.satisfies(inf.conclusion)):
            return False
    return True


def oracle_consistent_exhaustive(diagrams: Sequence[Diagram]) -> bool:
    vocab = _vocabulary(name for d in diagrams for name in d.circles)
    constants = sorted({name for d in diagrams for name in d.constants})
    for profile in enumerate_profiles(vocab, constants):
        if all(profile.satisfies_diagram(d) for d in diagrams):
            return True
    return False


# ---------------------------------------------------------------------------
# Counter-model extraction from diagrams


def extract_model(d: Diagram) -> tuple[Model, dict[str, str]]:
    """A model of the diagram, with the identity witness map.

    The domain holds one element per point, plus one fresh witness per
    circle containing no point; a witness for circle ``A`` is placed in
    ``A`` and everything ``A`` is included in, and outside every other
    circle.  Closure of the relation set guarantees the placement is
    consistent; a failed self-check is an internal defect.
    """
    inside_map: dict[str, set[str]] = {p: set() for p in d.points}
    for rel in d.relations:
        if rel.tag is RelTag.INSIDE and rel.left in inside_map:
            inside_map[rel.left].add(rel.right)
    up: dict[str, set[str]] = {c: set() for c in d.circles}
    for rel in d.relations:
        if rel.tag is RelTag.INSIDE and rel.left in up:
            up[rel.left].add(rel.right)
    changed = True
    while changed:
        changed = False
        for name, ups in up.items():
            extra = set().union(*(up[t] for t in ups)) - ups if ups else set()
            extra.discard(name)
            if extra:
                ups |= extra
                changed = True

    elements: dict[str, set[str]] = {c: set() for c in d.circles}
    domain: set[str] = set()
    for p in d.points:
        domain.add(p)
        for c in inside_map[p]:
            elements[c].add(p)
    pointed = {c for c, members in elements.items() if members}
    for c in d.circles:
        if c in pointed:
            continue
        witness_el = f"w{c}"
        domain.add(witness_el)
        elements[c].add(witness_el)
        for outer in up[c]:
            elements[outer].add(witness_el)

    model = Model(
        frozenset(domain),
        {name: name for name in d.constants},
        {c: frozenset(members) for c, members in elements.items()},
    )
    witness = {name: name for name in d.existentials}
    if not eval_diagram(model, d, witness):
        raise InternalDefect(
            f"extracted model fails its own diagram: {d} / {model_to_json(model)}")
    return model, witness

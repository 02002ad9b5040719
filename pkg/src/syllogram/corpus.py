"""Deterministic random inference and diagram generators.

These drive the desk-scale verification of the two metatheoretic
properties (proof search agrees with the oracle on valid inferences;
counter-proof search agrees on invalid ones) and the layout round-trip
suite.  Records are reproducible byte for byte from the seed.

The inference generator samples the fragment on which the diagrammatic
calculus is complete:

* premises are any of the eight sentence forms, conclusions draw their
  names from the premises' vocabulary (a conclusion about unseen names
  can only be import-vacuous, which no deletion/unification proof can
  witness);
* ``There is something not B`` is not sampled as a conclusion: its
  negation ("everything is B") has no diagram, so counter-proofs cannot
  exist for its invalid instances;
* premise sets, and candidate counter-diagrams of invalid conclusions,
  must merge without an inclusion cycle: two circles with provably equal
  extensions cannot be drawn (inclusion is asymmetric), which is the
  known expressive gap of the relation language.

Every record is annotated with the oracle verdict and the flags above.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass, replace
from typing import Sequence

from .counterproof import counter_candidates, is_relational
from .diagram import Diagram, ObjectKind, saturate
from .errors import NoFalsifiableRelation
from .models import oracle_consistent, oracle_valid
from .sentences import (
    Form,
    FreshNames,
    Inference,
    Sentence,
    canonical_diagram,
    format_sentence,
    premise_diagrams,
)
from .unification import hard_atoms, merged_kinds

_PREDICATE_POOL = ("A", "B", "C", "D")
_CONSTANT_POOL = ("a", "b")

_PREMISE_FORMS = tuple(Form)
_CONCLUSION_FORMS = (
    Form.ALL, Form.NO, Form.SOME, Form.SOME_NOT,
    Form.CONST_IS, Form.CONST_IS_NOT, Form.SOMETHING_IS,
)


@dataclass(frozen=True)
class CorpusRecord:
    index: int
    premises: tuple[str, ...]
    conclusion: str
    oracle_valid: bool
    premises_consistent: bool
    premises_mergeable: bool
    counter_mergeable: bool
    conclusion_relational: bool

    def inference(self) -> Inference:
        from .sentences import parse_sentence

        return Inference(tuple(parse_sentence(p) for p in self.premises),
                         parse_sentence(self.conclusion))

    def to_json_line(self) -> str:
        return json.dumps({
            "index": self.index,
            "premises": list(self.premises),
            "conclusion": self.conclusion,
            "oracle_valid": self.oracle_valid,
            "premises_consistent": self.premises_consistent,
            "premises_mergeable": self.premises_mergeable,
            "counter_mergeable": self.counter_mergeable,
            "conclusion_relational": self.conclusion_relational,
        })


def _random_sentence(rng: random.Random, forms: Sequence[Form],
                     preds: Sequence[str], consts: Sequence[str]) -> Sentence:
    while True:
        form = rng.choice(list(forms))
        if form.quantified:
            if len(preds) < 2:
                continue
            subject, predicate = rng.sample(list(preds), 2)
            return Sentence(form, subject, predicate)
        if form in (Form.CONST_IS, Form.CONST_IS_NOT):
            if not consts:
                continue
            return Sentence(form, rng.choice(list(consts)), rng.choice(list(preds)))
        return Sentence(form, None, rng.choice(list(preds)))


def _mergeable(diagrams: Sequence[Diagram], extra: Diagram | None = None) -> bool:
    parts = list(diagrams) + ([extra] if extra is not None else [])
    kinds = merged_kinds(parts)
    in_atoms, ex_atoms = hard_atoms(parts)
    return saturate(kinds, in_atoms, ex_atoms).conflict is None


def _sample_inference(rng: random.Random, max_circles: int, max_constants: int,
                      max_premises: int) -> CorpusRecord | None:
    preds = _PREDICATE_POOL[:rng.randint(2, max_circles)]
    consts = _CONSTANT_POOL[:rng.randint(0, max_constants)]
    n_premises = rng.randint(1, max_premises)
    premises = tuple(_random_sentence(rng, _PREMISE_FORMS, preds, consts)
                     for _ in range(n_premises))
    used_preds = sorted({p for s in premises for p in s.predicates})
    used_consts = sorted({c for s in premises for c in s.constant_names})
    conclusion_forms = [f for f in _CONCLUSION_FORMS
                        if (not f.quantified or len(used_preds) >= 2)
                        and (f not in (Form.CONST_IS, Form.CONST_IS_NOT) or used_consts)]
    conclusion = _random_sentence(rng, conclusion_forms, used_preds, used_consts)
    inf = Inference(premises, conclusion)

    diagrams, _ = premise_diagrams(inf)
    if not oracle_consistent(diagrams):
        return None
    if not _mergeable(diagrams):
        return None
    valid = oracle_valid(inf)
    target = canonical_diagram(conclusion, FreshNames("xc"))
    if not valid:
        try:
            candidates = counter_candidates(target, FreshNames("y"))
        except NoFalsifiableRelation:
            return None
        if not candidates:
            return None
        if not any(_mergeable(diagrams, cand) for cand in candidates):
            return None
    return CorpusRecord(
        index=-1,
        premises=tuple(format_sentence(p) for p in premises),
        conclusion=format_sentence(conclusion),
        oracle_valid=valid,
        premises_consistent=True,
        premises_mergeable=True,
        counter_mergeable=True,
        conclusion_relational=is_relational(target),
    )


def generate_corpus(count: int, *, max_circles: int = 4, max_constants: int = 2,
                    max_premises: int = 3, seed: int = 0) -> list[CorpusRecord]:
    """A reproducible stream of annotated inference records."""
    if not 2 <= max_circles <= 4:
        raise ValueError("max_circles must be between 2 and 4")
    rng = random.Random(seed)
    records: list[CorpusRecord] = []
    while len(records) < count:
        record = _sample_inference(rng, max_circles, max_constants, max_premises)
        if record is not None:
            records.append(replace(record, index=len(records)))
    return records


# ---------------------------------------------------------------------------
# Random well-formed diagrams (layout and unification-equivalence suites)


def random_diagram(rng: random.Random, circles: Sequence[str],
                   n_existentials: int = 1, n_constants: int = 0) -> Diagram:
    """A random well-formed diagram over the given circle names."""
    kinds: dict[str, ObjectKind] = {c: ObjectKind.CIRCLE for c in circles}
    in_atoms: set[tuple[str, str]] = set()
    ex_atoms: set[frozenset[str]] = set()
    crossing_pairs: set[frozenset[str]] = set()

    def consistent(cand_in: set[tuple[str, str]], cand_ex: set[frozenset[str]]) -> bool:
        sat = saturate(kinds, cand_in, cand_ex)
        if sat.conflict is not None:
            return False
        return not any(sat.status(*sorted(pair)) is not None for pair in crossing_pairs)

    names = sorted(circles)
    for i, a in enumerate(names):
        for b in names[i + 1:]:
            sat = saturate(kinds, in_atoms, ex_atoms)
            if sat.status(a, b) is not None:
                continue
            options = ["in_ab", "in_ba", "ex", "cr", "cr"]
            rng.shuffle(options)
            for option in options:
                if option == "cr":
                    crossing_pairs.add(frozenset((a, b)))
                    break
                cand_in, cand_ex = set(in_atoms), set(ex_atoms)
                if option == "in_ab":
                    cand_in.add((a, b))
                elif option == "in_ba":
                    cand_in.add((b, a))
                else:
                    cand_ex.add(frozenset((a, b)))
                if consistent(cand_in, cand_ex):
                    in_atoms, ex_atoms = cand_in, cand_ex
                    break

    point_names = [f"p{i + 1}" for i in range(n_existentials)]
    const_names = [_CONSTANT_POOL[i] for i in range(n_constants)]
    for name in point_names:
        kinds[name] = ObjectKind.EXISTENTIAL
    for name in const_names:
        kinds[name] = ObjectKind.CONSTANT
    for name in point_names + const_names:
        for circ in names:
            sat = saturate(kinds, in_atoms, ex_atoms)
            if sat.status(name, circ) is not None:
                continue
            if rng.random() < 0.5:
                cand_in, cand_ex = in_atoms | {(name, circ)}, set(ex_atoms)
            else:
                cand_in, cand_ex = set(in_atoms), ex_atoms | {frozenset((name, circ))}
            if consistent(cand_in, cand_ex):
                in_atoms, ex_atoms = set(cand_in), set(cand_ex)
            else:
                # the other option is forced
                sat2 = saturate(kinds, in_atoms | {(name, circ)},
                                set(ex_atoms))
                if sat2.conflict is None:
                    in_atoms.add((name, circ))
                else:
                    ex_atoms.add(frozenset((name, circ)))
    from .unification import assemble

    return assemble(kinds, saturate(kinds, in_atoms, ex_atoms))


def random_diagram_pair(rng: random.Random, max_circles: int = 4
                        ) -> tuple[Diagram, Diagram]:
    """Two random diagrams over overlapping vocabulary (joint size <= 4)."""
    total = rng.randint(2, max_circles)
    vocab = list(_PREDICATE_POOL[:total])
    size1 = rng.randint(1, total)
    size2 = rng.randint(1, total)
    first = rng.sample(vocab, size1)
    second = rng.sample(vocab, size2)
    d1 = random_diagram(rng, first, n_existentials=rng.randint(0, 1))
    rng2_points = rng.randint(0, 1)
    d2_names = [f"q{i + 1}" for i in range(rng2_points)]
    d2 = _random_diagram_named(rng, second, d2_names)
    return d1, d2


def _random_diagram_named(rng: random.Random, circles: Sequence[str],
                          point_names: Sequence[str]) -> Diagram:
    base = random_diagram(rng, circles, n_existentials=0)
    if not point_names:
        return base
    kinds = {o.name: o.kind for o in base.objects}
    in_atoms, ex_atoms = hard_atoms([base])
    for name in point_names:
        kinds[name] = ObjectKind.EXISTENTIAL
        for circ in sorted(circles):
            sat = saturate(kinds, in_atoms, ex_atoms)
            if sat.status(name, circ) is not None:
                continue
            if rng.random() < 0.5:
                in_atoms.add((name, circ))
            else:
                ex_atoms.add(frozenset((name, circ)))
    from .unification import assemble

    return assemble(kinds, saturate(kinds, in_atoms, ex_atoms))

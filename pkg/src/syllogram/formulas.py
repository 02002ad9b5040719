"""First-order translation of diagrams and relations, plus serializers.

Relations map to monadic formulas of quantifier depth one:

* ``in(p, A)``   ->  ``A(p)``           (point inside a circle)
* ``ex(p, A)``   ->  ``~A(p)``
* ``in(A, B)``   ->  ``forall x. (A(x) -> B(x))``
* ``ex(A, B)``   ->  ``forall x. (A(x) -> ~B(x))``
* ``cr(A, B)``   ->  ``forall x. ((A(x) -> A(x)) & (B(x) -> B(x)))``

A diagram becomes the conjunction of its point-free and constant-point
relation translations (in canonical relation order) followed by one
existential conjunct per existential point collecting that point's full
in/out profile.  Exclusions between two points have no translation: the
language is equality-free, so distinct points may share a witness at the
formula level (the geometric reading is stricter; the semantic oracle
follows the formulas).

Two dialects are emitted: ``plain`` ASCII connectives mirroring the
translation exactly, and TPTP FOF clauses (one per top-level conjunct)
with an explicit nonemptiness axiom per predicate, since an external
prover does not share the existential-import convention.  The in-repo
TPTP mini-parser round-trips everything the emitter produces.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Iterable, Iterator, Mapping

from .diagram import Diagram, ObjectKind, Relation, RelTag
from .errors import ParseError, UnsupportedRelation
from .models import CellProfile, Model

_QUANT_VAR = "x"


class Formula:
    """Base class for the formula AST."""

    __slots__ = ()


@dataclass(frozen=True)
class Atom(Formula):
    predicate: str
    term: str


@dataclass(frozen=True)
class Not(Formula):
    body: Formula


@dataclass(frozen=True)
class And(Formula):
    parts: tuple[Formula, ...]


@dataclass(frozen=True)
class Implies(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True)
class ForAll(Formula):
    var: str
    body: Formula


@dataclass(frozen=True)
class Exists(Formula):
    var: str
    body: Formula


@dataclass(frozen=True)
class Top(Formula):
    """The empty conjunction."""


def conjoin(parts: Iterable[Formula]) -> Formula:
    items = [p for p in parts if not isinstance(p, Top)]
    if not items:
        return Top()
    if len(items) == 1:
        return items[0]
    return And(tuple(items))


def conjuncts(f: Formula) -> tuple[Formula, ...]:
    if isinstance(f, Top):
        return ()
    if isinstance(f, And):
        return f.parts
    return (f,)


def _is_point_name(name: str) -> bool:
    return name[0].islower()


def translate_relation(r: Relation) -> Formula:
    """The first-order reading of a single relation."""
    left_pt, right_pt = _is_point_name(r.left), _is_point_name(r.right)
    if r.tag is RelTag.INSIDE:
        if left_pt:
            return Atom(r.right, r.left)
        a, b = r.left, r.right
        return ForAll(_QUANT_VAR, Implies(Atom(a, _QUANT_VAR), Atom(b, _QUANT_VAR)))
    if r.tag is RelTag.EXCLUSION:
        if left_pt and right_pt:
            raise UnsupportedRelation(
                f"{r}: exclusions between points have no equality-free translation")
        if left_pt or right_pt:
            point, circ = (r.left, r.right) if left_pt else (r.right, r.left)
            return Not(Atom(circ, point))
        a, b = r.left, r.right
        return ForAll(_QUANT_VAR, Implies(Atom(a, _QUANT_VAR), Not(Atom(b, _QUANT_VAR))))
    a, b = r.left, r.right
    return ForAll(_QUANT_VAR, And((
        Implies(Atom(a, _QUANT_VAR), Atom(a, _QUANT_VAR)),
        Implies(Atom(b, _QUANT_VAR), Atom(b, _QUANT_VAR)),
    )))


def translate_diagram(d: Diagram) -> Formula:
    """The conjunctive translation of a whole diagram."""
    blocks: list[Formula] = []
    existentials = set(d.existentials)
    for rel in d.rel_sorted:
        if rel.left in existentials or rel.right in existentials:
            continue
        blocks.append(translate_relation(rel))
    for x in d.existentials:
        ins, outs = d.relation_profile(x)
        literals: list[Formula] = []
        for circ in d.circles:
            if circ in ins:
                literals.append(Atom(circ, x))
            elif circ in outs:
                literals.append(Not(Atom(circ, x)))
        blocks.append(Exists(x, conjoin(literals)))
    return conjoin(blocks)


# ---------------------------------------------------------------------------
# Plain dialect


def _plain(f: Formula) -> str:
    if isinstance(f, Top):
        return "true"
    if isinstance(f, Atom):
        return f"{f.predicate}({f.term})"
    if isinstance(f, Not):
        body = _plain(f.body)
        if isinstance(f.body, Atom):
            return f"~{body}"
        return f"~({body})"
    if isinstance(f, Implies):
        return f"{_plain(f.left)} -> {_plain(f.right)}"
    if isinstance(f, And):
        rendered = []
        for part in f.parts:
            text = _plain(part)
            if isinstance(part, (Implies, And)):
                text = f"({text})"
            rendered.append(text)
        return " & ".join(rendered)
    if isinstance(f, ForAll):
        return f"forall {f.var}. ({_plain(f.body)})"
    if isinstance(f, Exists):
        return f"exists {f.var}. ({_plain(f.body)})"
    raise TypeError(f"not a formula: {f!r}")


# ---------------------------------------------------------------------------
# TPTP dialect


def _collect_names(f: Formula, bound: frozenset[str],
                   preds: set[str], consts: set[str]) -> None:
    if isinstance(f, Atom):
        preds.add(f.predicate)
        if f.term not in bound:
            consts.add(f.term)
    elif isinstance(f, Not):
        _collect_names(f.body, bound, preds, consts)
    elif isinstance(f, And):
        for part in f.parts:
            _collect_names(part, bound, preds, consts)
    elif isinstance(f, Implies):
        _collect_names(f.left, bound, preds, consts)
        _collect_names(f.right, bound, preds, consts)
    elif isinstance(f, (ForAll, Exists)):
        _collect_names(f.body, bound | {f.var}, preds, consts)


def _mangle(names: Iterable[str], prefix: str) -> dict[str, str]:
    mapping: dict[str, str] = {}
    taken: set[str] = set()
    folded: dict[str, list[str]] = {}
    ordered = sorted(set(names))
    for name in ordered:
        folded.setdefault(name.lower(), []).append(name)
    for name in ordered:
        base = name.lower()
        if len(folded[base]) > 1:
            base = f"{prefix}{base}"
        candidate, n = base, 1
        while candidate in taken:
            n += 1
            candidate = f"{base}_{n}"
        taken.add(candidate)
        mapping[name] = candidate
    return mapping


def _tptp(f: Formula, pred_map: Mapping[str, str], const_map: Mapping[str, str],
          bound: frozenset[str]) -> str:
    if isinstance(f, Top):
        return "$true"
    if isinstance(f, Atom):
        term = f.term.upper() if f.term in bound else const_map[f.term]
        return f"{pred_map[f.predicate]}({term})"
    if isinstance(f, Not):
        return f"~ {_tptp(f.body, pred_map, const_map, bound)}"
    if isinstance(f, And):
        inner = " & ".join(_tptp(p, pred_map, const_map, bound) for p in f.parts)
        return f"({inner})"
    if isinstance(f, Implies):
        left = _tptp(f.left, pred_map, const_map, bound)
        right = _tptp(f.right, pred_map, const_map, bound)
        return f"({left} => {right})"
    if isinstance(f, ForAll):
        body = _tptp(f.body, pred_map, const_map, bound | {f.var})
        return f"! [{f.var.upper()}] : {body}"
    if isinstance(f, Exists):
        body = _tptp(f.body, pred_map, const_map, bound | {f.var})
        return f"? [{f.var.upper()}] : {body}"
    raise TypeError(f"not a formula: {f!r}")


def emit(f: Formula, dialect: str = "plain") -> str:
    """Serialize a formula.

    ``plain`` mirrors the translation one-to-one.  ``tptp`` emits one
    ``fof`` axiom per top-level conjunct plus one nonemptiness axiom per
    predicate occurring in the formula (existential import made
    explicit for external provers).
    """
    if dialect == "plain":
        return _plain(f)
    if dialect != "tptp":
        raise ValueError(f"unknown dialect {dialect!r}")
    preds: set[str] = set()
    consts: set[str] = set()
    _collect_names(f, frozenset(), preds, consts)
    pred_map = _mangle(preds, "p_")
    const_map = _mangle(consts, "c_")
    lines = []
    for i, part in enumerate(conjuncts(f), start=1):
        body = _tptp(part, pred_map, const_map, frozenset())
        lines.append(f"fof(ax{i}, axiom, {body}).")
    for pred in sorted(preds):
        lines.append(f"fof(import_{pred_map[pred]}, axiom, ? [X] : {pred_map[pred]}(X)).")
    return "\n".join(lines)


# ---------------------------------------------------------------------------
# TPTP mini-parser (covers exactly the emitted FOF subset)


_TOKEN = re.compile(
    r"\s*(?:(?P<punct>=>|[()\[\]:,.~&?!])|(?P<lower>[a-z][A-Za-z0-9_]*)"
    r"|(?P<upper>[A-Z][A-Za-z0-9_]*)|(?P<dollar>\$[a-z]+))")


class _TptpTokens:
    def __init__(self, text: str):
        self.tokens: list[tuple[str, str, int]] = []
        pos = 0
        while pos < len(text):
            if text[pos].isspace():
                pos += 1
                continue
            m = _TOKEN.match(text, pos)
            if not m or m.end() == pos:
                raise ParseError(f"bad TPTP input near {text[pos:pos+10]!r}", pos)
            kind = m.lastgroup or "punct"
            self.tokens.append((kind, m.group().strip(), m.start()))
            pos = m.end()
        self.pos = 0

    def peek(self) -> tuple[str, str] | None:
        if self.pos < len(self.tokens):
            kind, value, _ = self.tokens[self.pos]
            return kind, value
        return None

    def next(self) -> tuple[str, str]:
        got = self.peek()
        if got is None:
            raise ParseError("unexpected end of TPTP input",
                             self.tokens[-1][2] if self.tokens else 0)
        self.pos += 1
        return got

    def expect(self, value: str) -> None:
        kind, got = self.next()
        if got != value:
            offset = self.tokens[self.pos - 1][2]
            raise ParseError(f"expected {value!r}, found {got!r}", offset,
                             frozenset({value}))


def _parse_tptp_formula(toks: _TptpTokens, bound: frozenset[str]) -> Formula:
    peeked = toks.peek()
    if peeked is None:
        raise ParseError("expected a formula", 0)
    kind, value = peeked
    if value in ("!", "?"):
        toks.next()
        toks.expect("[")
        _, var = toks.next()
        toks.expect("]")
        toks.expect(":")
        lowered = var.lower()
        body = _parse_tptp_formula(toks, bound | {lowered})
        return ForAll(lowered, body) if value == "!" else Exists(lowered, body)
    if value == "~":
        toks.next()
        return Not(_parse_tptp_formula(toks, bound))
    if value == "(":
        toks.next()
        first = _parse_tptp_formula(toks, bound)
        nxt = toks.peek()
        if nxt and nxt[1] == "=>":
            toks.next()
            right = _parse_tptp_formula(toks, bound)
            toks.expect(")")
            return Implies(first, right)
        parts = [first]
        while nxt and nxt[1] == "&":
            toks.next()
            parts.append(_parse_tptp_formula(toks, bound))
            nxt = toks.peek()
        toks.expect(")")
        return conjoin(parts) if len(parts) > 1 else first
    if kind == "dollar":
        toks.next()
        if value == "$true":
            return Top()
        raise ParseError(f"unsupported TPTP constant {value}", 0)
    if kind == "lower":
        toks.next()
        toks.expect("(")
        _, term = toks.next()
        toks.expect(")")
        term_name = term.lower() if term[0].isupper() else term
        if term[0].isupper() and term_name not in bound:
            raise ParseError(f"unbound variable {term}", 0)
        return Atom(value, term_name)
    raise ParseError(f"cannot parse TPTP token {value!r}", 0)


def parse_tptp(text: str) -> list[tuple[str, Formula]]:
    """Parse the emitted TPTP subset back into named formulas."""
    toks = _TptpTokens(text)
    out: list[tuple[str, Formula]] = []
    while toks.peek() is not None:
        toks.expect("fof")
        toks.expect("(")
        _, name = toks.next()
        toks.expect(",")
        toks.expect("axiom")
        toks.expect(",")
        formula = _parse_tptp_formula(toks, frozenset())
        toks.expect(")")
        toks.expect(".")
        out.append((name, formula))
    return out


# ---------------------------------------------------------------------------
# Evaluation (used to validate the translation against diagram truth)


def eval_formula(f: Formula, m: Model, env: Mapping[str, str] | None = None) -> bool:
    """Truth of a formula in a finite model; free terms are constants."""
    env = dict(env or {})

    def walk(g: Formula, scope: dict[str, str]) -> bool:
        if isinstance(g, Top):
            return True
        if isinstance(g, Atom):
            element = scope.get(g.term, m.const_interp.get(g.term, g.term))
            return element in m.pred(g.predicate)
        if isinstance(g, Not):
            return not walk(g.body, scope)
        if isinstance(g, And):
            return all(walk(p, scope) for p in g.parts)
        if isinstance(g, Implies):
            return (not walk(g.left, scope)) or walk(g.right, scope)
        if isinstance(g, ForAll):
            return all(walk(g.body, {**scope, g.var: el}) for el in sorted(m.domain))
        if isinstance(g, Exists):
            return any(walk(g.body, {**scope, g.var: el}) for el in sorted(m.domain))
        raise TypeError(f"not a formula: {g!r}")

    return walk(f, env)


def eval_formula_on_profile(f: Formula, profile: CellProfile) -> bool:
    """Truth at the cell level: quantifiers range over effective cells."""
    cells = sorted(profile.effective_cells)
    consts = profile.constants

    def walk(g: Formula, scope: dict[str, int]) -> bool:
        if isinstance(g, Top):
            return True
        if isinstance(g, Atom):
            cell = scope[g.term] if g.term in scope else consts[g.term]
            return bool(cell & profile.bit(g.predicate))
        if isinstance(g, Not):
            return not walk(g.body, scope)
        if isinstance(g, And):
            return all(walk(p, scope) for p in g.parts)
        if isinstance(g, Implies):
            return (not walk(g.left, scope)) or walk(g.right, scope)
        if isinstance(g, ForAll):
            return all(walk(g.body, {**scope, g.var: c}) for c in cells)
        if isinstance(g, Exists):
            return any(walk(g.body, {**scope, g.var: c}) for c in cells)
        raise TypeError(f"not a formula: {g!r}")

    return walk(f, {})

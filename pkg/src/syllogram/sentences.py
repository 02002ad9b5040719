"""Extended syllogistic sentences: parsing, printing, canonical diagrams.

The surface grammar (keywords case-sensitive, whitespace-insensitive):

    inference  = { sentence, (";" | newline) }, "|=", sentence ;
    sentence   = "All " P " are " P | "No " P " are " P
               | "Some " P " are " P | "Some " P " are not " P
               | c " is " P | c " is not " P
               | "There is something " P | "There is something not " P ;
    P = uppercase letter, { letter | digit } ;
    c = lowercase letter, { letter | digit } ;

Each sentence has one canonical diagram (fresh existential points are
drawn from a supplier, by convention ``x1, x2, ...`` in premise order),
and each sentence can be evaluated on an arbitrary diagram: a diagram is
read as a model by taking circles for predicates and points for
individuals.
"""

from __future__ import annotations

import re
import warnings
from dataclasses import dataclass
from enum import Enum
from typing import Callable, Iterator

from .diagram import (
    Diagram,
    DiagramObject,
    ObjectKind,
    RelTag,
    circle,
    constant,
    crosses,
    excludes,
    existential,
    inside,
    make_diagram,
)
from .errors import ParseError

_PREDICATE = re.compile(r"[A-Z][A-Za-z0-9]*\Z")
_CONSTANT = re.compile(r"[a-z][A-Za-z0-9]*\Z")


class Form(Enum):
    CONST_IS = "const-is"
    CONST_IS_NOT = "const-is-not"
    SOMETHING_IS = "something-is"
    SOMETHING_IS_NOT = "something-is-not"
    ALL = "all"
    NO = "no"
    SOME = "some"
    SOME_NOT = "some-not"

    @property
    def quantified(self) -> bool:
        return self in (Form.ALL, Form.NO, Form.SOME, Form.SOME_NOT)

    @property
    def subjectless(self) -> bool:
        return self in (Form.SOMETHING_IS, Form.SOMETHING_IS_NOT)


@dataclass(frozen=True)
class Sentence:
    """One extended syllogistic sentence.

    ``subject`` is a constant name for the two ``... is ...`` forms, a
    predicate name for the four quantified forms, and ``None`` for the
    two ``There is something ...`` forms.
    """

    form: Form
    subject: str | None
    predicate: str

    def __post_init__(self) -> None:
        if not _PREDICATE.match(self.predicate):
            raise ValueError(f"predicate name {self.predicate!r} is invalid")
        if self.form.subjectless:
            if self.subject is not None:
                raise ValueError(f"{self.form.value} takes no subject")
        elif self.form.quantified:
            if self.subject is None or not _PREDICATE.match(self.subject):
                raise ValueError(f"subject {self.subject!r} must be a predicate name")
            if self.subject == self.predicate:
                raise ValueError("subject and predicate must differ")
        else:
            if self.subject is None or not _CONSTANT.match(self.subject):
                raise ValueError(f"subject {self.subject!r} must be a constant name")

    @property
    def predicates(self) -> tuple[str, ...]:
        if self.form.quantified:
            assert self.subject is not None
            return (self.subject, self.predicate)
        return (self.predicate,)

    @property
    def constant_names(self) -> tuple[str, ...]:
        if self.form in (Form.CONST_IS, Form.CONST_IS_NOT):
            assert self.subject is not None
            return (self.subject,)
        return ()

    def __str__(self) -> str:
        return format_sentence(self)


@dataclass(frozen=True)
class Inference:
    premises: tuple[Sentence, ...]
    conclusion: Sentence

    @property
    def predicates(self) -> tuple[str, ...]:
        seen: list[str] = []
        for s in (*self.premises, self.conclusion):
            for p in s.predicates:
                if p not in seen:
                    seen.append(p)
        return tuple(seen)

    @property
    def constant_names(self) -> tuple[str, ...]:
        seen: list[str] = []
        for s in (*self.premises, self.conclusion):
            for c in s.constant_names:
                if c not in seen:
                    seen.append(c)
        return tuple(seen)

    def __str__(self) -> str:
        return format_inference(self)


def format_sentence(s: Sentence) -> str:
    if s.form is Form.ALL:
        return f"All {s.subject} are {s.predicate}"
    if s.form is Form.NO:
        return f"No {s.subject} are {s.predicate}"
    if s.form is Form.SOME:
        return f"Some {s.subject} are {s.predicate}"
    if s.form is Form.SOME_NOT:
        return f"Some {s.subject} are not {s.predicate}"
    if s.form is Form.CONST_IS:
        return f"{s.subject} is {s.predicate}"
    if s.form is Form.CONST_IS_NOT:
        return f"{s.subject} is not {s.predicate}"
    if s.form is Form.SOMETHING_IS:
        return f"There is something {s.predicate}"
    return f"There is something not {s.predicate}"


def format_inference(inf: Inference) -> str:
    left = "; ".join(format_sentence(p) for p in inf.premises)
    return f"{left} |= {format_sentence(inf.conclusion)}"


# ---------------------------------------------------------------------------
# Parsing


class _Tokens:
    """Whitespace-split tokens with their source offsets."""

    def __init__(self, text: str, base_offset: int = 0):
        self.items: list[tuple[str, int]] = [
            (m.group(), base_offset + m.start()) for m in re.finditer(r"\S+", text)
        ]
        self.pos = 0
        self.end_offset = base_offset + len(text)

    def peek(self) -> str | None:
        if self.pos < len(self.items):
            return self.items[self.pos][0]
        return None

    def offset(self) -> int:
        if self.pos < len(self.items):
            return self.items[self.pos][1]
        return self.end_offset

    def take(self, expected: str) -> None:
        got = self.peek()
        if got != expected:
            raise ParseError(
                f"expected {expected!r}, found {got!r}", self.offset(),
                frozenset({expected}),
            )
        self.pos += 1

    def take_name(self, pattern: re.Pattern[str], what: str) -> str:
        got = self.peek()
        if got is None or not pattern.match(got):
            raise ParseError(
                f"expected {what}, found {got!r}", self.offset(), frozenset({what})
            )
        self.pos += 1
        return got

    def expect_end(self) -> None:
        if self.peek() is not None:
            raise ParseError(
                f"unexpected trailing input {self.peek()!r}", self.offset(),
                frozenset({"end of sentence"}),
            )


def _parse_sentence_tokens(toks: _Tokens) -> Sentence:
    head = toks.peek()
    if head is None:
        raise ParseError(
            "expected a sentence", toks.offset(),
            frozenset({"All", "No", "Some", "There", "constant"}),
        )
    if head in ("All", "No", "Some"):
        toks.take(head)
        subject = toks.take_name(_PREDICATE, "predicate name")
        toks.take("are")
        negated = False
        if head == "Some" and toks.peek() == "not":
            toks.take("not")
            negated = True
        pred_offset = toks.offset()
        predicate = toks.take_name(_PREDICATE, "predicate name")
        form = {"All": Form.ALL, "No": Form.NO}.get(head, Form.SOME_NOT if negated else Form.SOME)
        if subject == predicate:
            raise ParseError(
                "subject and predicate must differ", pred_offset,
                frozenset({"distinct predicate name"}),
            )
        return Sentence(form, subject, predicate)
    if head == "There":
        toks.take("There")
        toks.take("is")
        toks.take("something")
        negated = toks.peek() == "not"
        if negated:
            toks.take("not")
        predicate = toks.take_name(_PREDICATE, "predicate name")
        return Sentence(Form.SOMETHING_IS_NOT if negated else Form.SOMETHING_IS, None, predicate)
    if _CONSTANT.match(head):
        subject = toks.take_name(_CONSTANT, "constant name")
        toks.take("is")
        negated = toks.peek() == "not"
        if negated:
            toks.take("not")
        predicate = toks.take_name(_PREDICATE, "predicate name")
        return Sentence(Form.CONST_IS_NOT if negated else Form.CONST_IS, subject, predicate)
    raise ParseError(
        f"cannot start a sentence with {head!r}", toks.offset(),
        frozenset({"All", "No", "Some", "There", "constant"}),
    )


def parse_sentence(text: str) -> Sentence:
    """Parse a single sentence; offsets in errors refer to ``text``."""
    toks = _Tokens(text)
    sentence = _parse_sentence_tokens(toks)
    toks.expect_end()
    return sentence


def parse_inference(text: str) -> Inference:
    """Parse ``premise; premise |= conclusion`` (premises may be empty)."""
    turnstile = text.find("|=")
    if turnstile < 0:
        raise ParseError("missing '|=' before the conclusion", len(text),
                         frozenset({"|="}))
    premise_text = text[:turnstile]
    conclusion_text = text[turnstile + 2:]
    premises: list[Sentence] = []
    offset = 0
    for chunk in re.split(r"[;\n]", premise_text):
        if chunk.strip():
            toks = _Tokens(chunk, base_offset=offset)
            premises.append(_parse_sentence_tokens(toks))
            toks.expect_end()
        offset += len(chunk) + 1
    toks = _Tokens(conclusion_text, base_offset=turnstile + 2)
    if toks.peek() is None:
        raise ParseError("missing conclusion after '|='", turnstile + 2,
                         frozenset({"sentence"}))
    conclusion = _parse_sentence_tokens(toks)
    toks.expect_end()
    return Inference(tuple(premises), conclusion)


# ---------------------------------------------------------------------------
# Canonical diagrams


class FreshNames:
    """Deterministic supplier of unused existential point names."""

    def __init__(self, prefix: str = "x", start: int = 1):
        self.prefix = prefix
        self.counter = start

    def __call__(self) -> str:
        name = f"{self.prefix}{self.counter}"
        self.counter += 1
        return name


def canonical_diagram(s: Sentence, fresh: Callable[[], str]) -> Diagram:
    """The fixed one-to-one diagram of a sentence.

    The two circles of a quantified sentence are related: an inclusion
    for All, an exclusion for No, and a non-committal crossing for the
    two existential forms (totality requires some circle/circle relation,
    and crossing is the one that adds no information).
    """
    form = s.form
    if form is Form.ALL:
        return make_diagram([circle(s.subject), circle(s.predicate)],
                            [inside(s.subject, s.predicate)])
    if form is Form.NO:
        return make_diagram([circle(s.subject), circle(s.predicate)],
                            [excludes(s.subject, s.predicate)])
    if form is Form.SOME:
        x = fresh()
        return make_diagram(
            [circle(s.subject), circle(s.predicate), existential(x)],
            [inside(x, s.subject), inside(x, s.predicate),
             crosses(s.subject, s.predicate)])
    if form is Form.SOME_NOT:
        x = fresh()
        return make_diagram(
            [circle(s.subject), circle(s.predicate), existential(x)],
            [inside(x, s.subject), excludes(x, s.predicate),
             crosses(s.subject, s.predicate)])
    if form is Form.CONST_IS:
        return make_diagram([constant(s.subject), circle(s.predicate)],
                            [inside(s.subject, s.predicate)])
    if form is Form.CONST_IS_NOT:
        return make_diagram([constant(s.subject), circle(s.predicate)],
                            [excludes(s.subject, s.predicate)])
    if form is Form.SOMETHING_IS:
        x = fresh()
        return make_diagram([circle(s.predicate), existential(x)],
                            [inside(x, s.predicate)])
    x = fresh()
    return make_diagram([circle(s.predicate), existential(x)],
                        [excludes(x, s.predicate)])


def premise_diagrams(inf: Inference) -> tuple[list[Diagram], FreshNames]:
    """Canonical diagrams of all premises sharing one fresh-name stream."""
    fresh = FreshNames()
    return [canonical_diagram(p, fresh) for p in inf.premises], fresh


# ---------------------------------------------------------------------------
# Truth on diagrams


class VocabularyMissing(UserWarning):
    """A sentence mentions names the diagram does not contain."""


def sentence_holds(d: Diagram, s: Sentence) -> bool:
    """Whether the sentence holds on the diagram read as a model.

    A diagram lacking some name of the sentence cannot make it hold:
    the result is ``False`` and a :class:`VocabularyMissing` warning is
    emitted.  Only existential points witness the quantified existential
    forms.
    """
    needed = list(s.predicates) + list(s.constant_names)
    missing = [n for n in needed if not d.has(n)]
    if missing:
        warnings.warn(
            f"diagram lacks {', '.join(missing)} mentioned by {s!r}",
            VocabularyMissing, stacklevel=2)
        return False
    form = s.form
    if form is Form.CONST_IS:
        return inside(s.subject, s.predicate) in d.relations
    if form is Form.CONST_IS_NOT:
        return excludes(s.subject, s.predicate) in d.relations
    if form is Form.ALL:
        return inside(s.subject, s.predicate) in d.relations
    if form is Form.NO:
        return excludes(s.subject, s.predicate) in d.relations
    if form is Form.SOME:
        return any(
            inside(x, s.subject) in d.relations and inside(x, s.predicate) in d.relations
            for x in d.existentials)
    if form is Form.SOME_NOT:
        return any(
            inside(x, s.subject) in d.relations and excludes(x, s.predicate) in d.relations
            for x in d.existentials)
    if form is Form.SOMETHING_IS:
        return any(inside(x, s.predicate) in d.relations for x in d.existentials)
    return any(excludes(x, s.predicate) in d.relations for x in d.existentials)

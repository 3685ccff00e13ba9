"""Weighted first-order rule templates and the rule DSL.

A rule is ``B1 ^ ... ^ Bn -> H`` over the fixed predicate vocabulary
(IsPositive/IsNegative/IsNeutral, Label(tool,pol,doc), sameAs(a,b)).
Weights are finite reals for soft rules or ``HARD`` (infinity) for
constraints no world may violate.

``sameAs`` note: equivalence pairs are stored in canonical (a < b)
order, and the grounder binds a ``sameAs(?x,?y)`` body atom to those
canonical pairs only.  Symmetric propagation therefore takes a pair of
mirrored rules, which is exactly how the generated default set is laid
out.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Iterable, Optional, Union

from .kb import POLARITIES, Polarity

HARD = math.inf

_POLARITY_PRED = {
    Polarity.POSITIVE: "IsPositive",
    Polarity.NEGATIVE: "IsNegative",
    Polarity.NEUTRAL: "IsNeutral",
}
_PRED_POLARITY = {v: k for k, v in _POLARITY_PRED.items()}


class RuleError(ValueError):
    """Malformed rule or rule set."""


class RuleSyntaxError(RuleError):
    """DSL parse failure, with position information."""

    def __init__(self, message: str, line: int, column: int):
        super().__init__(f"line {line}, column {column}: {message}")
        self.line = line
        self.column = column


@dataclass(frozen=True)
class Variable:
    name: str  # includes the leading '?'

    def __str__(self) -> str:
        return self.name


@dataclass(frozen=True)
class Constant:
    value: str

    def __str__(self) -> str:
        return self.value


Term = Union[Variable, Constant]


@dataclass(frozen=True)
class PolarityPattern:
    """IsPositive(?d) / IsNegative(?d) / IsNeutral(?d)."""

    polarity: Polarity
    doc: Term

    def terms(self) -> tuple[Term, ...]:
        return (self.doc,)

    def __str__(self) -> str:
        return f"{_POLARITY_PRED[self.polarity]}({self.doc})"


@dataclass(frozen=True)
class LabelPattern:
    """Label(tool, polarity, ?d): a tool's verdict as evidence."""

    tool: Term
    polarity: Polarity
    doc: Term

    def terms(self) -> tuple[Term, ...]:
        return (self.tool, self.doc)

    def __str__(self) -> str:
        return f"Label({self.tool},{self.polarity.symbol},{self.doc})"


@dataclass(frozen=True)
class SamePattern:
    """sameAs(?a, ?b): document equivalence as evidence."""

    a: Term
    b: Term

    def terms(self) -> tuple[Term, ...]:
        return (self.a, self.b)

    def __str__(self) -> str:
        return f"sameAs({self.a},{self.b})"


Pattern = Union[PolarityPattern, LabelPattern, SamePattern]


@dataclass(frozen=True)
class LiteralPattern:
    pattern: Pattern
    sign: bool = True

    def negated(self) -> "LiteralPattern":
        return LiteralPattern(self.pattern, not self.sign)

    def __str__(self) -> str:
        return str(self.pattern) if self.sign else f"!{self.pattern}"


def _doc_vars(pat: Pattern) -> set[str]:
    if isinstance(pat, PolarityPattern):
        slots = [pat.doc]
    elif isinstance(pat, LabelPattern):
        slots = [pat.doc]
    else:
        slots = [pat.a, pat.b]
    return {t.name for t in slots if isinstance(t, Variable)}


def _tool_vars(pat: Pattern) -> set[str]:
    if isinstance(pat, LabelPattern) and isinstance(pat.tool, Variable):
        return {pat.tool.name}
    return set()


@dataclass(frozen=True)
class RuleTemplate:
    """A weighted implication; ``weight=HARD`` marks an inviolable rule."""

    name: str
    body: tuple[LiteralPattern, ...]
    head: LiteralPattern
    weight: float

    def __post_init__(self):
        if not self.name:
            raise RuleError("rule needs a name")
        if not math.isfinite(self.weight) and self.weight != HARD:
            raise RuleError(f"rule {self.name!r}: weight must be finite or HARD")
        body_doc, body_tool = set(), set()
        for lit in self.body:
            body_doc |= _doc_vars(lit.pattern)
            body_tool |= _tool_vars(lit.pattern)
        if body_doc & body_tool:
            both = sorted(body_doc & body_tool)
            raise RuleError(f"rule {self.name!r}: variable {both[0]} used in both tool and document position")
        head_doc = _doc_vars(self.head.pattern)
        head_tool = _tool_vars(self.head.pattern)
        unbound = (head_doc - body_doc) | (head_tool - body_tool)
        if unbound:
            raise RuleError(f"rule {self.name!r}: unbound head variable {sorted(unbound)[0]}")

    @property
    def is_hard(self) -> bool:
        return self.weight == HARD

    def to_clause(self) -> tuple[LiteralPattern, ...]:
        """Material implication as a disjunction: negated body plus head."""
        return tuple(lit.negated() for lit in self.body) + (self.head,)

    def tool_constants(self) -> set[str]:
        out = set()
        for lit in (*self.body, self.head):
            if isinstance(lit.pattern, LabelPattern) and isinstance(lit.pattern.tool, Constant):
                out.add(lit.pattern.tool.value)
        return out

    def __str__(self) -> str:
        w = "hard" if self.is_hard else repr(self.weight)
        body = " ^ ".join(str(l) for l in self.body)
        return f"{w}: {body} -> {self.head}"


class RuleSet:
    """Ordered collection of uniquely named rules."""

    def __init__(self, rules: Iterable[RuleTemplate], vocabulary: Iterable[str] = ()):
        self.rules: list[RuleTemplate] = list(rules)
        self.vocabulary: set[str] = set(vocabulary)
        seen = set()
        for r in self.rules:
            if r.name in seen:
                raise RuleError(f"duplicate rule name {r.name!r}")
            seen.add(r.name)
            self.vocabulary |= r.tool_constants()

    def __len__(self) -> int:
        return len(self.rules)

    def __iter__(self):
        return iter(self.rules)

    def __eq__(self, other) -> bool:
        if not isinstance(other, RuleSet):
            return NotImplemented
        return self.rules == other.rules

    def soft_rules(self) -> list[RuleTemplate]:
        return [r for r in self.rules if not r.is_hard]

    def hard_rules(self) -> list[RuleTemplate]:
        return [r for r in self.rules if r.is_hard]

    def get(self, name: str) -> RuleTemplate:
        for r in self.rules:
            if r.name == name:
                return r
        raise KeyError(name)

    def extended(self, extra: "RuleSet") -> "RuleSet":
        return RuleSet(self.rules + extra.rules, self.vocabulary | extra.vocabulary)


_DI, _DJ, _D = Variable("?di"), Variable("?dj"), Variable("?d")


def _pol_lit(pol: Polarity, doc: Term, sign: bool = True) -> LiteralPattern:
    return LiteralPattern(PolarityPattern(pol, doc), sign)


def generate_default_rules(tools: Iterable[str], init_weight: float = 1.0) -> RuleSet:
    """The stock rule set for a list of tools.

    Soft rules: for each polarity a mirrored pair propagating it across
    equivalent documents, and per tool one trust rule per polarity
    mapping the tool's verdict to the document polarity.  Hard rules:
    pairwise polarity exclusion plus the requirement that every document
    carries some polarity (together: exactly one).
    """
    tools = list(tools)
    if not tools:
        raise RuleError("need at least one tool")
    rules: list[RuleTemplate] = []
    for pol in POLARITIES:
        same = LiteralPattern(SamePattern(_DI, _DJ))
        rules.append(RuleTemplate(
            f"equiv_{pol.value}_fwd", (same, _pol_lit(pol, _DJ)), _pol_lit(pol, _DI), init_weight))
        rules.append(RuleTemplate(
            f"equiv_{pol.value}_bwd", (same, _pol_lit(pol, _DI)), _pol_lit(pol, _DJ), init_weight))
    for tool in tools:
        for pol in POLARITIES:
            body = (LiteralPattern(LabelPattern(Constant(tool), pol, _D)),)
            rules.append(RuleTemplate(f"label_{tool}_{pol.value}", body, _pol_lit(pol, _D), init_weight))
    for pol in POLARITIES:
        for other in POLARITIES:
            if other is pol:
                continue
            rules.append(RuleTemplate(
                f"not_both_{pol.value}_{other.value}",
                (_pol_lit(pol, _D),), _pol_lit(other, _D, sign=False), HARD))
    # At-least-one polarity, written as an implication so the clause form
    # is the plain three-way disjunction.
    rules.append(RuleTemplate(
        "some_polarity",
        (_pol_lit(Polarity.POSITIVE, _D, sign=False), _pol_lit(Polarity.NEGATIVE, _D, sign=False)),
        _pol_lit(Polarity.NEUTRAL, _D),
        HARD))
    return RuleSet(rules, tools)


# --- DSL -----------------------------------------------------------------
#
# One rule per line:   <weight>|hard : <lit> [^ <lit>]* -> <lit>
# Literals:            [!]IsPositive(?d)  [!]Label(tb,+,?d)  [!]sameAs(?a,?b)
# '#' starts a comment; a trailing '# name=<ident>' names the rule.

_TOKEN_RE = re.compile(r"\s*(->|[!^:(),]|\?[A-Za-z_][A-Za-z0-9_]*|[+-]?\d+(?:\.\d+)?(?:[eE][+-]?\d+)?|[A-Za-z_][A-Za-z0-9_]*|\+|-|.)")

_NAME_COMMENT_RE = re.compile(r"#\s*name=([A-Za-z_][A-Za-z0-9_]*)\s*$")


class _Tokens:
    def __init__(self, text: str, line_no: int):
        self.line_no = line_no
        self.items: list[tuple[str, int]] = []  # (token, column)
        pos = 0
        while pos < len(text):
            m = _TOKEN_RE.match(text, pos)
            if not m:
                break
            tok = m.group(1)
            col = m.start(1) + 1
            if tok.strip():
                self.items.append((tok, col))
            pos = m.end()
        self.i = 0

    def peek(self) -> Optional[str]:
        return self.items[self.i][0] if self.i < len(self.items) else None

    def next(self, expected: Optional[str] = None) -> str:
        if self.i >= len(self.items):
            col = self.items[-1][1] + len(self.items[-1][0]) if self.items else 1
            want = f"expected {expected!r}" if expected else "unexpected end of rule"
            raise RuleSyntaxError(f"{want}, got end of line", self.line_no, col)
        tok, col = self.items[self.i]
        if expected is not None and tok != expected:
            raise RuleSyntaxError(f"expected {expected!r}, got {tok!r}", self.line_no, col)
        self.i += 1
        return tok

    def error(self, message: str) -> RuleSyntaxError:
        col = self.items[self.i][1] if self.i < len(self.items) else 1
        return RuleSyntaxError(message, self.line_no, col)


def _parse_term(toks: _Tokens) -> Term:
    tok = toks.next()
    if tok.startswith("?"):
        return Variable(tok)
    if re.fullmatch(r"[A-Za-z_][A-Za-z0-9_]*", tok):
        return Constant(tok)
    raise toks.error(f"expected a term, got {tok!r}")


def _parse_polarity_token(toks: _Tokens) -> Polarity:
    tok = toks.next()
    try:
        return Polarity.from_token(tok)
    except Exception:
        raise toks.error(f"expected a polarity (+, -, 0, pos, neg, neu), got {tok!r}") from None


def _parse_literal(toks: _Tokens) -> LiteralPattern:
    sign = True
    if toks.peek() == "!":
        toks.next()
        sign = False
    name_tok = toks.next()
    if name_tok in _PRED_POLARITY:
        toks.next("(")
        doc = _parse_term(toks)
        toks.next(")")
        return LiteralPattern(PolarityPattern(_PRED_POLARITY[name_tok], doc), sign)
    if name_tok == "Label":
        toks.next("(")
        tool = _parse_term(toks)
        toks.next(",")
        pol = _parse_polarity_token(toks)
        toks.next(",")
        doc = _parse_term(toks)
        toks.next(")")
        return LiteralPattern(LabelPattern(tool, pol, doc), sign)
    if name_tok == "sameAs":
        toks.next("(")
        a = _parse_term(toks)
        toks.next(",")
        b = _parse_term(toks)
        toks.next(")")
        return LiteralPattern(SamePattern(a, b), sign)
    raise toks.error(f"unknown predicate {name_tok!r}")


def _parse_rule_line(line: str, line_no: int, default_name: str) -> RuleTemplate:
    name = default_name
    m = _NAME_COMMENT_RE.search(line)
    if m:
        name = m.group(1)
        line = line[: m.start()]
    elif "#" in line:
        line = line[: line.index("#")]
    toks = _Tokens(line, line_no)

    w_tok = toks.next()
    if w_tok == "hard":
        weight = HARD
    else:
        try:
            weight = float(w_tok)
        except ValueError:
            raise RuleSyntaxError(f"expected a weight or 'hard', got {w_tok!r}",
                                  line_no, toks.items[0][1]) from None
    toks.next(":")

    lits = [_parse_literal(toks)]
    while toks.peek() == "^":
        toks.next()
        lits.append(_parse_literal(toks))
    toks.next("->")
    head = _parse_literal(toks)
    if toks.peek() is not None:
        raise toks.error(f"trailing input {toks.peek()!r}")
    try:
        return RuleTemplate(name, tuple(lits), head, weight)
    except RuleError as e:
        raise RuleSyntaxError(str(e), line_no, 1) from None


def parse_rules(text: str) -> RuleSet:
    """Parse DSL text into a RuleSet; raises RuleSyntaxError with position."""
    rules = []
    for line_no, raw in enumerate(text.splitlines(), start=1):
        stripped = raw.strip()
        if not stripped or stripped.startswith("#"):
            continue
        rules.append(_parse_rule_line(raw, line_no, default_name=f"rule{line_no}"))
    return RuleSet(rules)


def pretty_print(ruleset: RuleSet) -> str:
    """Render a RuleSet in the DSL; ``parse_rules`` round-trips the output."""
    lines = []
    for r in ruleset.rules:
        w = "hard" if r.is_hard else repr(r.weight)
        body = " ^ ".join(str(l) for l in r.body)
        lines.append(f"{w}: {body} -> {r.head}  # name={r.name}")
    return "\n".join(lines) + ("\n" if lines else "")

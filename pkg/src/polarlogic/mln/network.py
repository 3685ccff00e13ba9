"""Closed-world grounding of rule templates into a weighted clause network.

Evidence atoms (tool labels, equivalence pairs) are frozen: groundings
absent from the fact set are false.  Clauses are simplified against the
evidence at grounding time, so the network's clauses mention query atoms
only — one boolean per (document, polarity).  Groundings already
satisfied by evidence are not materialized but stay in the per-rule
satisfied-count bookkeeping, keeping rule counts faithful to the full
enumeration.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import product
from typing import Iterable, Mapping, Optional, Sequence

from ..kb import Dataset, FactSet, POLARITIES, Polarity, PolarityOf, Provenance, SameAs, ToolLabel
from ..rules import (
    Constant,
    HARD,
    LabelPattern,
    LiteralPattern,
    PolarityPattern,
    RuleSet,
    RuleTemplate,
    SamePattern,
    Variable,
)

# Per-document hard structure is always grounded under these rule names,
# matching the names used by generate_default_rules so the two dedupe.
STRUCTURAL_HARD_RULES = tuple(
    [f"not_both_{p.value}_{q.value}" for p in POLARITIES for q in POLARITIES if p is not q]
    + ["some_polarity"]
)


class GroundingError(ValueError):
    """Rule cannot be grounded against this dataset/evidence."""


@dataclass(frozen=True)
class GroundClause:
    """Disjunction over query atoms: (atom index, sign) pairs."""

    lits: tuple[tuple[int, bool], ...]
    weight: float  # HARD for constraints
    rule: str

    @property
    def is_hard(self) -> bool:
        return self.weight == HARD


class GroundNetwork:
    """Ground clauses over the query atoms of one dataset.

    Query atom order is documents in dataset order, three polarities
    each, so atom ``3*i + j`` is (document i, polarity j).
    """

    def __init__(self, docs: Sequence[str], evidence: Iterable = (),
                 soft_rule_names: Sequence[str] = ()):
        self.docs: list[str] = list(docs)
        self.doc_index = {d: i for i, d in enumerate(self.docs)}
        self.n_atoms = 3 * len(self.docs)
        self.evidence: set = set(evidence)
        self.clauses: list[GroundClause] = []
        self.rule_clauses: dict[str, list[int]] = {}
        # groundings satisfied by evidence alone (dropped from .clauses)
        self.rule_evidence_satisfied: dict[str, int] = {}
        self.soft_rule_names: list[str] = list(soft_rule_names)
        self._hard_by_lits: dict[frozenset, int] = {}

    def atom_index(self, doc: str, pol: Polarity) -> int:
        return 3 * self.doc_index[doc] + POLARITIES.index(pol)

    def atom_at(self, idx: int) -> PolarityOf:
        return PolarityOf(POLARITIES[idx % 3], self.docs[idx // 3])

    def doc_of(self, idx: int) -> str:
        return self.docs[idx // 3]

    def _register_rule(self, name: str):
        self.rule_clauses.setdefault(name, [])
        self.rule_evidence_satisfied.setdefault(name, 0)

    def add_clause(self, lits: Iterable[tuple[int, bool]], weight: float, rule: str) -> None:
        self._register_rule(rule)
        lits = tuple(lits)
        seen: dict[int, bool] = {}
        out = []
        for atom, sign in lits:
            if atom in seen:
                if seen[atom] != sign:  # x OR NOT x: tautology
                    self.rule_evidence_satisfied[rule] += 1
                    return
                continue
            seen[atom] = sign
            out.append((atom, sign))
        if not out:
            raise GroundingError(f"rule {rule!r} grounded to an empty clause")
        key = frozenset(out)
        if weight == HARD and key in self._hard_by_lits:
            # identical hard constraints from different rules share a clause
            self.rule_clauses[rule].append(self._hard_by_lits[key])
            return
        idx = len(self.clauses)
        self.clauses.append(GroundClause(tuple(out), weight, rule))
        self.rule_clauses[rule].append(idx)
        if weight == HARD:
            self._hard_by_lits[key] = idx

    def note_evidence_satisfied(self, rule: str) -> None:
        self._register_rule(rule)
        self.rule_evidence_satisfied[rule] += 1

    def hard_clause_indices(self) -> list[int]:
        return [i for i, c in enumerate(self.clauses) if c.is_hard]

    def soft_clause_indices(self) -> list[int]:
        return [i for i, c in enumerate(self.clauses) if not c.is_hard]

    def clause_satisfied(self, clause: GroundClause, world: Sequence[bool]) -> bool:
        return any(bool(world[a]) == s for a, s in clause.lits)


def count_true_groundings(net: GroundNetwork, world: Sequence[bool], rule: str) -> int:
    """Number of the rule's groundings satisfied by evidence plus ``world``."""
    if rule not in net.rule_clauses:
        raise KeyError(f"unknown rule {rule!r}")
    n = net.rule_evidence_satisfied[rule]
    for ci in net.rule_clauses[rule]:
        if net.clause_satisfied(net.clauses[ci], world):
            n += 1
    return n


def world_log_weight(net: GroundNetwork, world: Sequence[bool],
                     weights: Mapping[str, float]) -> float:
    """Sum of weight times satisfied-grounding count; -inf on any hard
    violation."""
    for ci in net.hard_clause_indices():
        if not net.clause_satisfied(net.clauses[ci], world):
            return -math.inf
    total = 0.0
    for rule in net.soft_rule_names:
        w = weights.get(rule, 0.0)
        if w != 0.0:
            total += w * count_true_groundings(net, world, rule)
    return total


def _binding_product(rule: RuleTemplate, ds: Dataset, same_pairs: list[SameAs]):
    """All variable bindings for one rule.

    Document-variable pairs appearing in a sameAs body atom range over
    the canonical evidence pairs (the mirrored rule covers the other
    direction); remaining document variables range over all documents
    and tool variables over all tools.
    """
    same_var_slots: list[tuple[str, str]] = []
    doc_vars: list[str] = []
    tool_vars: list[str] = []
    for lit in (*rule.body, rule.head):
        pat = lit.pattern
        if isinstance(pat, SamePattern) and lit in rule.body:
            if isinstance(pat.a, Variable) and isinstance(pat.b, Variable):
                slot = (pat.a.name, pat.b.name)
                if slot not in same_var_slots:
                    same_var_slots.append(slot)
        for v in _pattern_vars(pat, docs_only=True):
            if v not in doc_vars:
                doc_vars.append(v)
        for v in _pattern_vars(pat, docs_only=False):
            if v not in tool_vars:
                tool_vars.append(v)

    bound_in_pairs = {v for slot in same_var_slots for v in slot}
    free_doc_vars = [v for v in doc_vars if v not in bound_in_pairs]

    pair_choices = [same_pairs] * len(same_var_slots)
    doc_choices = [ds.documents] * len(free_doc_vars)
    tool_choices = [ds.tools] * len(tool_vars)
    for combo in product(*pair_choices, *doc_choices, *tool_choices):
        binding: dict[str, str] = {}
        ok = True
        k = 0
        for slot, pair in zip(same_var_slots, combo[: len(same_var_slots)]):
            for var, value in zip(slot, (pair.a, pair.b)):
                if binding.get(var, value) != value:
                    ok = False
                    break
                binding[var] = value
            if not ok:
                break
            k += 1
        if not ok:
            continue
        rest = combo[len(same_var_slots):]
        for var, value in zip(free_doc_vars + tool_vars, rest):
            binding[var] = value
        yield binding


def _pattern_vars(pat, docs_only: bool) -> list[str]:
    if isinstance(pat, PolarityPattern):
        slots = [pat.doc] if docs_only else []
    elif isinstance(pat, LabelPattern):
        slots = [pat.doc] if docs_only else [pat.tool]
    elif isinstance(pat, SamePattern):
        slots = [pat.a, pat.b] if docs_only else []
    else:
        return []
    return [t.name for t in slots if isinstance(t, Variable)]


def _term_value(term, binding: dict[str, str]) -> str:
    if isinstance(term, Variable):
        return binding[term.name]
    return term.value


def ground(rules: RuleSet, fs: FactSet, ds: Dataset) -> GroundNetwork:
    """Ground every rule over the dataset's constants under the closed
    world assumption, simplifying against the prior evidence in ``fs``.

    The per-document hard exclusion/completeness structure is always
    added, whether or not the rule set spells it out.
    """
    for tool in sorted(rules.vocabulary):
        if tool not in ds.tools:
            raise GroundingError(f"rule set references tool {tool!r} not present in the dataset")

    evidence = set()
    for lit in fs:
        if lit.sign and isinstance(lit.atom, (ToolLabel, SameAs)) \
                and fs.provenance(lit) is Provenance.PRIOR:
            evidence.add(lit.atom)

    soft_names = [r.name for r in rules.soft_rules()]
    net = GroundNetwork(ds.documents, evidence, soft_names)
    same_pairs = sorted((a for a in evidence if isinstance(a, SameAs)), key=str)

    for rule in rules:
        net._register_rule(rule.name)
        clause_pattern = rule.to_clause()
        for binding in _binding_product(rule, ds, same_pairs):
            _ground_one(net, rule, clause_pattern, binding, evidence)

    # structural exactly-one constraints, deduped against rule output
    for doc in ds.documents:
        idx = {p: net.atom_index(doc, p) for p in POLARITIES}
        for p in POLARITIES:
            for q in POLARITIES:
                if p is not q:
                    net.add_clause([(idx[p], False), (idx[q], False)],
                                   HARD, f"not_both_{p.value}_{q.value}")
        net.add_clause([(idx[p], True) for p in POLARITIES], HARD, "some_polarity")
    return net


def _ground_one(net: GroundNetwork, rule: RuleTemplate,
                clause_pattern: tuple[LiteralPattern, ...],
                binding: dict[str, str], evidence: set) -> None:
    lits: list[tuple[int, bool]] = []
    for lit in clause_pattern:
        pat = lit.pattern
        if isinstance(pat, PolarityPattern):
            doc = _term_value(pat.doc, binding)
            lits.append((net.atom_index(doc, pat.polarity), lit.sign))
            continue
        if isinstance(pat, LabelPattern):
            atom = ToolLabel(_term_value(pat.tool, binding), pat.polarity,
                             _term_value(pat.doc, binding))
            truth = atom in evidence
        else:
            a = _term_value(pat.a, binding)
            b = _term_value(pat.b, binding)
            truth = a != b and SameAs(a, b) in evidence
        if truth == lit.sign:  # evidence satisfies the clause outright
            net.note_evidence_satisfied(rule.name)
            return
        # false evidence literal: drop it from the disjunction
    if not lits:
        if rule.is_hard:
            raise GroundingError(
                f"hard rule {rule.name!r} is violated by the evidence (binding {binding})")
        return  # soft grounding that can never be satisfied; contributes 0
    net.add_clause(lits, rule.weight, rule.name)


def dump_network(net: GroundNetwork, weights: Optional[Mapping[str, float]] = None) -> str:
    """Human-readable clause listing, one clause per line:
    ``<weight|H> : [-]atom ...``."""
    lines = []
    for c in net.clauses:
        if c.is_hard:
            w = "H"
        else:
            w = repr(weights[c.rule]) if weights and c.rule in weights else repr(c.weight)
        parts = []
        for atom_idx, sign in c.lits:
            atom = net.atom_at(atom_idx)
            parts.append(str(atom) if sign else f"-{atom}")
        lines.append(f"{w} : " + " ".join(parts))
    return "\n".join(lines) + ("\n" if lines else "")

"""Fact instantiation, fixpoint polarity inference, and conflict derivation.

The three phases feed each other: ``instantiate`` turns a dataset into
prior facts, ``saturate`` closes them under the propagation rules, and
``derive_inconsistencies`` makes the conflicts explicit as negated
literals.  ``measure_inconsistency`` counts raw-label disagreements.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations

from .kb import (
    Dataset,
    FactSet,
    Literal,
    POLARITIES,
    PolarityOf,
    Provenance,
    SameAs,
    ToolLabel,
)


@dataclass(frozen=True)
class InconsistencyReport:
    """Counts of label disagreements and stored atom conflicts.

    in_tool_violations: (tool, same-cluster document pair) with differing
    labels.  inter_tool_violations: (document, tool pair) with differing
    labels.  conflicted_atoms: atoms stored with both signs.
    """

    in_tool_violations: int
    inter_tool_violations: int
    conflicted_atoms: int

    @property
    def consistent(self) -> bool:
        return self.conflicted_atoms == 0


def instantiate(ds: Dataset) -> FactSet:
    """Prior facts for a dataset: one label literal per (doc, tool) label
    and one canonical equivalence literal per unordered same-cluster pair.

    Enumerating all pairs inside a cluster bakes transitivity in, so the
    propagation step never needs to chain equivalences.
    """
    fs = FactSet()
    for doc, tool, pol in ds.labels():
        fs.add(Literal(ToolLabel(tool, pol, doc)), Provenance.PRIOR)
    for docs in ds.group_by_cluster().values():
        for a, b in combinations(docs, 2):
            fs.add(Literal(SameAs(a, b)), Provenance.PRIOR)
    return fs


def saturate(fs: FactSet) -> FactSet:
    """Close a fact set under polarity propagation, returning a superset.

    First every tool label asserts its document polarity; then positive
    polarity atoms spread across equivalence pairs (both directions,
    all polarities) until nothing new appears.  Only newly added atoms
    re-trigger matching, so the loop is linear in the output.
    """
    out = fs.copy()
    for lab in sorted(out.tool_labels(), key=str):
        out.add(Literal(PolarityOf(lab.polarity, lab.doc)), Provenance.INFERRED)
    # every positive polarity atom seeds propagation, including ones that
    # were already present (partially saturated input)
    frontier = sorted(out.positive_polarities(), key=str)

    neighbors: dict[str, list[str]] = {}
    for pair in sorted(out.same_as_pairs(), key=str):
        neighbors.setdefault(pair.a, []).append(pair.b)
        neighbors.setdefault(pair.b, []).append(pair.a)

    while frontier:
        atom = frontier.pop()
        for other in neighbors.get(atom.doc, ()):
            derived = PolarityOf(atom.polarity, other)
            if out.add(Literal(derived), Provenance.INFERRED):
                frontier.append(derived)
    return out


def derive_inconsistencies(fs: FactSet) -> FactSet:
    """Add the two opposing negated literals for every positive polarity atom.

    Run on a saturated fact set this surfaces every implicit conflict:
    the result is inconsistent exactly when some document carries two
    distinct positive polarity atoms.
    """
    out = fs.copy()
    for atom in sorted(fs.positive_polarities(), key=str):
        for other in POLARITIES:
            if other is atom.polarity:
                continue
            out.add(Literal(PolarityOf(other, atom.doc), sign=False), Provenance.DERIVED)
    return out


def measure_inconsistency(ds: Dataset, fs: FactSet) -> InconsistencyReport:
    """Count raw-label violations of both consistency requirements plus
    both-sign atoms in the fact set.  Pairs are unordered and counted once."""
    clusters = ds.group_by_cluster()
    in_tool = 0
    for tool in ds.tools:
        for docs in clusters.values():
            labeled = [(d, ds.label(d, tool)) for d in docs if ds.label(d, tool) is not None]
            for (_, p1), (_, p2) in combinations(labeled, 2):
                if p1 is not p2:
                    in_tool += 1
    inter_tool = 0
    for doc in ds.documents:
        labels = list(ds.labels_for_doc(doc).values())
        for p1, p2 in combinations(labels, 2):
            if p1 is not p2:
                inter_tool += 1
    return InconsistencyReport(
        in_tool_violations=in_tool,
        inter_tool_violations=inter_tool,
        conflicted_atoms=len(fs.conflicted_atoms()),
    )

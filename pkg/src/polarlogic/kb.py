"""Domain vocabulary: polarities, ground atoms, the fact store, and datasets.

Everything downstream (rule generation, saturation, grounding, voting)
works over the types defined here.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Mapping, Optional, Sequence, Union


class DataError(ValueError):
    """Invalid dataset or fact-store input."""


class Polarity(enum.Enum):
    """Sentiment class of a document."""

    POSITIVE = "pos"
    NEGATIVE = "neg"
    NEUTRAL = "neu"

    @property
    def symbol(self) -> str:
        return {"pos": "+", "neg": "-", "neu": "0"}[self.value]

    @classmethod
    def from_token(cls, token: str) -> "Polarity":
        """Parse ``pos``/``neg``/``neu`` or the short forms ``+``/``-``/``0``."""
        tok = token.strip().lower()
        for p in cls:
            if tok in (p.value, p.symbol):
                return p
        aliases = {"positive": cls.POSITIVE, "negative": cls.NEGATIVE, "neutral": cls.NEUTRAL}
        if tok in aliases:
            return aliases[tok]
        raise DataError(f"invalid polarity {token!r}")

    def __repr__(self) -> str:
        return f"Polarity.{self.name}"


POLARITIES = (Polarity.POSITIVE, Polarity.NEGATIVE, Polarity.NEUTRAL)

# Shared tie-breaking order for every argmax in the package; Negative first,
# then Positive, then Neutral.  Configurable wherever it is consumed.
DEFAULT_TIE_BREAK = (Polarity.NEGATIVE, Polarity.POSITIVE, Polarity.NEUTRAL)


def pick_max(scores: Mapping[Polarity, float], order: Sequence[Polarity] = DEFAULT_TIE_BREAK) -> Polarity:
    """Argmax over polarity scores, ties resolved by position in ``order``."""
    best = None
    best_score = None
    for p in order:
        s = scores.get(p, 0.0)
        if best_score is None or s > best_score:
            best, best_score = p, s
    return best


class Provenance(enum.Enum):
    PRIOR = "prior"
    INFERRED = "inferred"
    DERIVED = "inconsistency-derived"


@dataclass(frozen=True)
class ToolLabel:
    """A labeling tool's polarity verdict on one document."""

    tool: str
    polarity: Polarity
    doc: str

    def __str__(self) -> str:
        return f"Label({self.tool},{self.polarity.symbol},{self.doc})"


@dataclass(frozen=True)
class PolarityOf:
    """The (inferred) polarity of a document itself."""

    polarity: Polarity
    doc: str

    def __str__(self) -> str:
        name = {"pos": "IsPositive", "neg": "IsNegative", "neu": "IsNeutral"}[self.polarity.value]
        return f"{name}({self.doc})"


@dataclass(frozen=True)
class SameAs:
    """Semantic equivalence between two documents, stored with a < b."""

    a: str
    b: str

    def __post_init__(self):
        if self.a == self.b:
            raise DataError(f"sameAs requires two distinct documents, got {self.a!r} twice")
        if self.a > self.b:
            a, b = self.a, self.b
            object.__setattr__(self, "a", b)
            object.__setattr__(self, "b", a)

    def __str__(self) -> str:
        return f"sameAs({self.a},{self.b})"


Atom = Union[ToolLabel, PolarityOf, SameAs]


@dataclass(frozen=True)
class Literal:
    """A signed occurrence of an atom; ``sign=False`` is the negation."""

    atom: Atom
    sign: bool = True

    def negated(self) -> "Literal":
        return Literal(self.atom, not self.sign)

    def __str__(self) -> str:
        return str(self.atom) if self.sign else f"-{self.atom}"


class FactSet:
    """Set of signed ground atoms with per-literal provenance.

    Insertion is idempotent; the provenance recorded at first insertion
    wins.  A fact set is *inconsistent* when some atom is stored with
    both signs.
    """

    def __init__(self, literals: Iterable[tuple[Literal, Provenance]] = ()):
        self._literals: dict[Literal, Provenance] = {}
        for lit, prov in literals:
            self.add(lit, prov)

    def add(self, lit: Literal, prov: Provenance) -> bool:
        """Insert a literal; returns True when it was not already present."""
        if lit in self._literals:
            return False
        self._literals[lit] = prov
        return True

    def __contains__(self, lit: Literal) -> bool:
        return lit in self._literals

    def __len__(self) -> int:
        return len(self._literals)

    def __iter__(self) -> Iterator[Literal]:
        return iter(self._literals)

    def __eq__(self, other) -> bool:
        if not isinstance(other, FactSet):
            return NotImplemented
        return set(self._literals) == set(other._literals)

    def provenance(self, lit: Literal) -> Provenance:
        return self._literals[lit]

    def copy(self) -> "FactSet":
        fs = FactSet()
        fs._literals = dict(self._literals)
        return fs

    def polarity_atoms(self) -> set[Literal]:
        """All PolarityOf literals, both signs."""
        return {l for l in self._literals if isinstance(l.atom, PolarityOf)}

    def positive_polarities(self) -> set[PolarityOf]:
        return {l.atom for l in self._literals if isinstance(l.atom, PolarityOf) and l.sign}

    def tool_labels(self) -> set[ToolLabel]:
        return {l.atom for l in self._literals if isinstance(l.atom, ToolLabel) and l.sign}

    def same_as_pairs(self) -> set[SameAs]:
        return {l.atom for l in self._literals if isinstance(l.atom, SameAs) and l.sign}

    def conflicted_atoms(self) -> set[Atom]:
        """Atoms present with both signs."""
        pos = {l.atom for l in self._literals if l.sign}
        neg = {l.atom for l in self._literals if not l.sign}
        return pos & neg

    def is_inconsistent(self) -> bool:
        return bool(self.conflicted_atoms())


@dataclass(frozen=True)
class DocumentRecord:
    doc: str
    cluster: str
    gold: Optional[Polarity] = None


class Dataset:
    """Documents with cluster membership plus per-tool polarity labels.

    Gold labels ride along for evaluation but are deliberately kept off
    the normal accessors: reasoning code must never read them.  Use
    :meth:`gold_for_evaluation` from evaluation code only.
    """

    def __init__(
        self,
        documents: Sequence[tuple[str, str, Optional[Polarity]]],
        labels: Sequence[tuple[str, str, Polarity]],
    ):
        self._docs: list[str] = []
        self._cluster_of: dict[str, str] = {}
        self._gold: dict[str, Polarity] = {}
        for doc, cluster, gold in documents:
            if not doc:
                raise DataError("empty document id")
            if not cluster:
                raise DataError(f"empty cluster id for document {doc!r}")
            if doc in self._cluster_of:
                raise DataError(f"duplicate document id {doc!r}")
            self._docs.append(doc)
            self._cluster_of[doc] = cluster
            if gold is not None:
                self._gold[doc] = gold

        self._labels: dict[tuple[str, str], Polarity] = {}
        self._tools: list[str] = []
        for doc, tool, pol in labels:
            if doc not in self._cluster_of:
                raise DataError(f"label references unknown document {doc!r}")
            if not tool:
                raise DataError(f"empty tool id in label for document {doc!r}")
            if (doc, tool) in self._labels:
                raise DataError(f"duplicate label for document {doc!r} by tool {tool!r}")
            self._labels[(doc, tool)] = pol
            if tool not in self._tools:
                self._tools.append(tool)

    @property
    def documents(self) -> list[str]:
        return list(self._docs)

    @property
    def tools(self) -> list[str]:
        return list(self._tools)

    def __len__(self) -> int:
        return len(self._docs)

    def cluster_of(self, doc: str) -> str:
        return self._cluster_of[doc]

    def group_by_cluster(self) -> dict[str, list[str]]:
        """Partition documents by cluster id, preserving input order."""
        out: dict[str, list[str]] = {}
        for d in self._docs:
            out.setdefault(self._cluster_of[d], []).append(d)
        return out

    def label(self, doc: str, tool: str) -> Optional[Polarity]:
        return self._labels.get((doc, tool))

    def labels(self) -> list[tuple[str, str, Polarity]]:
        """All (doc, tool, polarity) triples in insertion order."""
        return [(d, t, p) for (d, t), p in self._labels.items()]

    def labels_for_doc(self, doc: str) -> dict[str, Polarity]:
        return {t: p for (d, t), p in self._labels.items() if d == doc}

    def has_gold(self) -> bool:
        return bool(self._gold)

    def gold_for_evaluation(self) -> dict[str, Polarity]:
        """Gold labels; evaluation code only.

        Saturation, learning, and inference must not call this: the
        pipeline is unsupervised by contract.
        """
        return dict(self._gold)

    def records(self) -> list[DocumentRecord]:
        return [DocumentRecord(d, self._cluster_of[d], self._gold.get(d)) for d in self._docs]

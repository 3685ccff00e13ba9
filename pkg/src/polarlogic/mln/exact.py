"""Brute-force inference oracle for small networks.

Enumerates every world (one polarity choice per document, which is the
hard exactly-one structure) as a vectorized table, then computes exact
marginals, conditional log-likelihoods, and per-rule count moments.
Used directly for small pipelines and as ground truth for the sampler.
"""

from __future__ import annotations

from typing import Mapping, Optional

import numpy as np

from ..kb import POLARITIES, Polarity
from .network import GroundNetwork

DEFAULT_ORACLE_CAP = 30  # query atoms; 3 per document


class OracleCapError(ValueError):
    """Instance too large for exhaustive enumeration."""


def _logsumexp(x: np.ndarray) -> float:
    m = np.max(x)
    if not np.isfinite(m):
        return float(m)
    return float(m + np.log(np.sum(np.exp(x - m))))


class ExactOracle:
    """Cached world table for one ground network.

    The satisfied-count matrix does not depend on weights, so repeated
    evaluations (learning iterations, finite differences) only pay for
    a matrix-vector product.
    """

    def __init__(self, net: GroundNetwork, cap: int = DEFAULT_ORACLE_CAP):
        if net.n_atoms > cap:
            raise OracleCapError(
                f"{net.n_atoms} query atoms exceed the enumeration cap of {cap}")
        self.net = net
        n_docs = len(net.docs)
        self.n_worlds = 3 ** n_docs
        idx = np.arange(self.n_worlds)
        self.choice = np.empty((self.n_worlds, n_docs), dtype=np.int8)
        for j in range(n_docs):
            self.choice[:, j] = (idx // 3 ** (n_docs - 1 - j)) % 3

        self.hard_mask = np.ones(self.n_worlds, dtype=bool)
        sat_cache: dict[int, np.ndarray] = {}
        for ci in net.hard_clause_indices():
            self.hard_mask &= self._clause_sat(net.clauses[ci].lits, sat_cache)

        self.rule_names = list(net.soft_rule_names)
        self.counts = np.zeros((len(self.rule_names), self.n_worlds), dtype=np.float64)
        for r, name in enumerate(self.rule_names):
            acc = np.full(self.n_worlds, float(net.rule_evidence_satisfied.get(name, 0)))
            for ci in net.rule_clauses.get(name, ()):
                clause = net.clauses[ci]
                if not clause.is_hard:
                    acc += self._clause_sat(clause.lits, sat_cache)
            self.counts[r] = acc

    def _atom_truth(self, atom: int) -> np.ndarray:
        return self.choice[:, atom // 3] == (atom % 3)

    def _clause_sat(self, lits, cache) -> np.ndarray:
        sat = np.zeros(self.n_worlds, dtype=bool)
        for atom, sign in lits:
            t = cache.get(atom)
            if t is None:
                t = self._atom_truth(atom)
                cache[atom] = t
            sat |= t if sign else ~t
        return sat

    def _weight_vector(self, weights: Mapping[str, float]) -> np.ndarray:
        return np.array([weights.get(r, 0.0) for r in self.rule_names])

    def log_weights(self, weights: Mapping[str, float]) -> np.ndarray:
        """Unnormalized log weight per world; hard-violating worlds -inf."""
        lw = self._weight_vector(weights) @ self.counts
        return np.where(self.hard_mask, lw, -np.inf)

    def _observed_mask(self, observed: Mapping[int, bool]) -> np.ndarray:
        mask = np.ones(self.n_worlds, dtype=bool)
        for atom, value in observed.items():
            t = self._atom_truth(atom)
            mask &= t if value else ~t
        return mask

    def distribution(self, weights: Mapping[str, float],
                     observed: Optional[Mapping[int, bool]] = None) -> np.ndarray:
        lw = self.log_weights(weights)
        if observed:
            lw = np.where(self._observed_mask(observed), lw, -np.inf)
        z = _logsumexp(lw)
        if not np.isfinite(z):
            raise ValueError("no hard-consistent world matches the conditioning")
        return np.exp(lw - z)

    def marginals(self, weights: Mapping[str, float]) -> dict[tuple[str, Polarity], float]:
        p = self.distribution(weights)
        out = {}
        for j, doc in enumerate(self.net.docs):
            for k, pol in enumerate(POLARITIES):
                out[(doc, pol)] = float(p[self.choice[:, j] == k].sum())
        return out

    def cll(self, weights: Mapping[str, float], observed: Mapping[int, bool]) -> float:
        """Exact log-probability of the observed atom values, with any
        unobserved atoms marginalized out."""
        lw = self.log_weights(weights)
        z = _logsumexp(lw)
        num = _logsumexp(np.where(self._observed_mask(observed), lw, -np.inf))
        return num - z

    def expected_counts(self, weights: Mapping[str, float],
                        observed: Optional[Mapping[int, bool]] = None
                        ) -> tuple[dict[str, float], dict[str, float]]:
        """Per-rule mean and variance of the satisfied-grounding count."""
        p = self.distribution(weights, observed)
        e = self.counts @ p
        var = (self.counts ** 2) @ p - e ** 2
        means = {r: float(e[i]) for i, r in enumerate(self.rule_names)}
        variances = {r: float(max(var[i], 0.0)) for i, r in enumerate(self.rule_names)}
        return means, variances


def exact_marginals(net: GroundNetwork, weights: Mapping[str, float],
                    cap: int = DEFAULT_ORACLE_CAP) -> dict[tuple[str, Polarity], float]:
    """Exact per-(document, polarity) marginal by full enumeration."""
    return ExactOracle(net, cap).marginals(weights)


def exact_cll(net: GroundNetwork, weights: Mapping[str, float],
              observed: Mapping[int, bool], cap: int = DEFAULT_ORACLE_CAP) -> float:
    """Exact conditional log-likelihood of an observed assignment."""
    return ExactOracle(net, cap).cll(weights, observed)

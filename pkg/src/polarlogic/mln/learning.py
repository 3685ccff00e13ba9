"""Discriminative weight learning with per-rule (diagonal) Newton steps.

The objective is the conditional log-likelihood of a training
assignment over the query atoms given the evidence.  Per iteration and
soft rule the gradient of the negative objective is the model's
expected satisfied-grounding count minus the count under the training
assignment (unobserved atoms marginalized, conditioned on the observed
ones); each weight moves by gradient over count variance, damped and
clipped.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Mapping, Optional

import numpy as np

from ..kb import FactSet, POLARITIES, PolarityOf
from .exact import DEFAULT_ORACLE_CAP, ExactOracle, OracleCapError
from .network import GroundNetwork
from .sampler import SamplerConfig, mcsat_statistics


class LearningDiverged(RuntimeError):
    """Weights left the finite range; damping/step limits too permissive."""


# How a conflicted (both-signs) polarity atom enters the training target:
#   marginalize: unobserved, integrated out during learning
#   vote:        per document, the label-majority polarity is observed true
#                (its siblings false); label-count ties stay unobserved
#   drop:        all atoms of a conflicted document are unobserved
CONFLICT_POLICIES = ("marginalize", "vote", "drop")


@dataclass(frozen=True)
class TrainingAssignment:
    """Observed truth values per query atom index; absent = unobserved."""

    observed: dict[int, bool]

    @classmethod
    def from_fact_set(cls, net: GroundNetwork, fs: FactSet,
                      conflict_policy: str = "marginalize") -> "TrainingAssignment":
        """Read training targets off a saturated, inconsistency-derived
        fact set.

        Atoms appearing only positively are observed true; only
        negatively, observed false; both signs go to the conflict
        policy.  Documents with no polarity atoms at all stay fully
        unobserved (an all-false document would contradict the hard
        completeness constraint and zero out the objective).
        """
        if conflict_policy not in CONFLICT_POLICIES:
            raise ValueError(f"unknown conflict policy {conflict_policy!r}")
        pos = {l.atom for l in fs.polarity_atoms() if l.sign}
        neg = {l.atom for l in fs.polarity_atoms() if not l.sign}
        observed: dict[int, bool] = {}
        for doc in net.docs:
            atoms = {p: PolarityOf(p, doc) for p in POLARITIES}
            present = {p for p, a in atoms.items() if a in pos or a in neg}
            if not present:
                continue
            conflicted = {p for p, a in atoms.items() if a in pos and a in neg}
            if conflicted and conflict_policy == "drop":
                continue
            if conflicted and conflict_policy == "vote":
                counts = {p: 0 for p in POLARITIES}
                for lab in fs.tool_labels():
                    if lab.doc == doc:
                        counts[lab.polarity] += 1
                best = max(counts.values())
                winners = [p for p in POLARITIES if counts[p] == best]
                if len(winners) == 1:
                    w = winners[0]
                    for p in POLARITIES:
                        observed[net.atom_index(doc, p)] = p is w
                continue
            for p in POLARITIES:
                a = atoms[p]
                if a in pos and a in neg:
                    continue  # marginalize
                if a in pos:
                    observed[net.atom_index(doc, p)] = True
                elif a in neg:
                    observed[net.atom_index(doc, p)] = False
                # absent while siblings are present: closed world
                else:
                    observed[net.atom_index(doc, p)] = False
        return cls(observed)


@dataclass(frozen=True)
class LearnOptions:
    iterations: int = 30
    damping: float = 1e-4
    max_step: float = 1.0
    oracle_cap: int = DEFAULT_ORACLE_CAP
    use_exact: Optional[bool] = None  # None: exact when under the cap
    sampler: SamplerConfig = field(default_factory=lambda: SamplerConfig(
        seed=0, num_samples=300, burn_in=50, chains=2))


def cll_gradient(oracle: ExactOracle, weights: Mapping[str, float],
                 training: TrainingAssignment) -> dict[str, float]:
    """Exact gradient of the conditional log-likelihood per soft rule:
    conditioned expected count minus unconditioned expected count."""
    e_free, _ = oracle.expected_counts(weights)
    e_cond, _ = oracle.expected_counts(weights, training.observed)
    return {r: e_cond[r] - e_free[r] for r in oracle.rule_names}


def learn_weights(net: GroundNetwork, training: TrainingAssignment,
                  init: Mapping[str, float], opts: LearnOptions = LearnOptions()
                  ) -> dict[str, float]:
    """Fit soft-rule weights; returns a new weight vector.

    Uses the enumeration oracle when the instance is under the cap (or
    ``opts.use_exact`` forces it), otherwise estimates the count moments
    by MC-SAT sampling.  Deterministic given the sampler seed.
    """
    weights = {r: float(init.get(r, 0.0)) for r in net.soft_rule_names}
    use_exact = opts.use_exact
    if use_exact is None:
        use_exact = net.n_atoms <= opts.oracle_cap
    oracle = ExactOracle(net, opts.oracle_cap) if use_exact else None

    for it in range(opts.iterations):
        if oracle is not None:
            e_free, var_free = oracle.expected_counts(weights)
            e_cond, _ = oracle.expected_counts(weights, training.observed)
        else:
            cfg = replace(opts.sampler, seed=opts.sampler.seed + 7919 * it)
            e_free, var_free, _ = mcsat_statistics(net, weights, cfg)
            e_cond = _conditioned_counts(net, weights, training, cfg)
        for r in net.soft_rule_names:
            g = e_free[r] - e_cond[r]  # gradient of the negative CLL
            step = -g / (var_free[r] + opts.damping)
            step = min(max(step, -opts.max_step), opts.max_step)
            weights[r] += step
            if not np.isfinite(weights[r]):
                raise LearningDiverged(f"weight of rule {r!r} became non-finite")
    return weights


def _conditioned_counts(net: GroundNetwork, weights: Mapping[str, float],
                        training: TrainingAssignment, cfg: SamplerConfig
                        ) -> dict[str, float]:
    """Expected per-rule counts with the observed atoms clamped.

    Fully observed assignments need no sampling: the count is just an
    evaluation.  Otherwise the observed atoms are frozen into evidence
    and the unobserved remainder is sampled.
    """
    observed = training.observed
    if len(observed) == net.n_atoms:
        world = np.zeros(net.n_atoms, dtype=bool)
        for a, v in observed.items():
            world[a] = v
        from .network import count_true_groundings
        return {r: float(count_true_groundings(net, world, r)) for r in net.soft_rule_names}
    e, _, _ = mcsat_statistics(net, weights, cfg, clamp=observed)
    return e

"""Acquisition strategies over the unlabeled target batch.

The primary strategy scores each target sample by its log-likelihood under
the target-domain mixture minus its log-likelihood under the source-domain
mixture: high scores mark samples that are representative of the new traffic
yet unlike anything already labeled. Entropy, k-center, and entropy-weighted
k-center baselines are provided for comparison on the same encoded features.
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .classifier import ClassifierModel
from .cluster import _sq_distances, weighted_kmeans
from .errors import ContractError, EmptyDatasetError
from .gmm import GmmParams, batch_log_likelihood

logger = logging.getLogger(__name__)

SCORE_EXPORT_CAP = 100_000


@dataclass
class SelectionReport:
    """Scores and the chosen prior batch for one strategy under one budget."""

    strategy: str
    scores: np.ndarray  # aligned to the unlabeled set's record order
    selected: np.ndarray  # unique indices, descending score order
    budget: int
    tie_seed: int = 0
    per_class_counts: dict[str, int] | None = None  # filled after labeling
    flags: list[str] = field(default_factory=list)

    def __post_init__(self):
        self.scores = np.asarray(self.scores, dtype=np.float64)
        self.selected = np.asarray(self.selected, dtype=np.int64)
        n = self.scores.shape[0]
        if n == 0:
            raise EmptyDatasetError("selection over an empty score vector")
        if len(np.unique(self.selected)) != self.selected.size:
            raise ContractError("selected indices must be unique")
        if self.selected.size and (self.selected.min() < 0 or self.selected.max() >= n):
            raise ContractError("selected index out of range")
        if self.selected.size != min(self.budget, n):
            raise ContractError("selection size must be min(budget, n)")
        if self.selected.size and self.selected.size < n:
            chosen = np.zeros(n, dtype=bool)
            chosen[self.selected] = True
            if self.scores[chosen].min() < self.scores[~chosen].max() - 1e-12:
                raise ContractError("selected scores must dominate unselected scores")

    def fill_class_counts(self, labels: np.ndarray, class_names: list[str]) -> None:
        """Record per-class counts once oracle labels for the batch are known."""
        counts = np.bincount(labels, minlength=len(class_names))
        self.per_class_counts = {name: int(c) for name, c in zip(class_names, counts)}

    def to_json(self, score_cap: int = SCORE_EXPORT_CAP) -> dict:
        return {
            "strategy": self.strategy,
            "budget": self.budget,
            "tie_seed": self.tie_seed,
            "selected": self.selected.tolist(),
            "scores": self.scores.tolist() if self.scores.size <= score_cap else None,
            "n_scores": int(self.scores.size),
            "per_class_counts": self.per_class_counts,
            "flags": self.flags,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "SelectionReport":
        scores = obj["scores"]
        if scores is None:
            # Scores were elided; reconstruct a consistent placeholder vector
            # that still satisfies the dominance invariant.
            scores = np.zeros(obj["n_scores"])
            scores[np.asarray(obj["selected"], dtype=np.int64)] = 1.0
        return cls(
            strategy=obj["strategy"],
            scores=np.asarray(scores, dtype=np.float64),
            selected=np.asarray(obj["selected"], dtype=np.int64),
            budget=int(obj["budget"]),
            tie_seed=int(obj.get("tie_seed", 0)),
            per_class_counts=obj.get("per_class_counts"),
            flags=list(obj.get("flags", [])),
        )

    def save(self, path: str | Path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_json(), fh, sort_keys=True)

    @classmethod
    def load(cls, path: str | Path) -> "SelectionReport":
        with open(path, encoding="utf-8") as fh:
            return cls.from_json(json.load(fh))


def informativeness_scores(
    psi_ul: GmmParams, psi_l: GmmParams, x_ul: np.ndarray
) -> np.ndarray:
    """score_i = log p(x_i | target mixture) - log p(x_i | source mixture)."""
    if psi_ul.dim != psi_l.dim:
        raise ContractError("mixtures must share a feature dimension")
    return batch_log_likelihood(psi_ul, x_ul) - batch_log_likelihood(psi_l, x_ul)


def uncertainty_scores(model: ClassifierModel, x_ul: np.ndarray) -> np.ndarray:
    """Predictive entropy of the classifier's softmax output per sample."""
    probs = model.predict_proba(x_ul)
    plogp = np.zeros_like(probs)
    mask = probs > 0
    plogp[mask] = probs[mask] * np.log(probs[mask])
    return -plogp.sum(axis=1)


def budget_size(budget_fraction: float, n_ul: int) -> int:
    """Absolute batch size for a fractional budget: max(1, floor(f * n))."""
    if not 0 < budget_fraction <= 1:
        raise ContractError("budget_fraction must lie in (0, 1]")
    return max(1, int(math.floor(budget_fraction * n_ul)))


def select_priors(
    scores: np.ndarray,
    budget_fraction: float,
    n_ul: int,
    tie_seed: int = 0,
    strategy: str = "netguard",
) -> SelectionReport:
    """Top-P indices by descending score; ties broken by a seeded shuffle."""
    scores = np.asarray(scores, dtype=np.float64)
    if scores.size == 0:
        raise EmptyDatasetError("empty score vector")
    if scores.shape != (n_ul,):
        raise ContractError("scores length must equal the unlabeled set size")
    p = budget_size(budget_fraction, n_ul)
    perm = np.random.default_rng(tie_seed).permutation(n_ul)
    order = np.lexsort((perm, -scores))
    return SelectionReport(
        strategy=strategy,
        scores=scores,
        selected=order[:p],
        budget=p,
        tie_seed=tie_seed,
    )


def _cluster_representatives(
    x_ul: np.ndarray,
    p: int,
    seed: int,
    weights: np.ndarray | None,
    strategy: str,
    flags: list[str],
) -> SelectionReport:
    """k-means with k = P; from each cluster keep the member nearest its center.

    Reported scores are -distance to the nearest chosen representative, so the
    chosen points top the ordering (ties possible at duplicates).
    """
    n = x_ul.shape[0]
    if p > n:
        raise ContractError("budget exceeds the unlabeled set size")
    rng = np.random.default_rng(seed)
    centers, assign = weighted_kmeans(x_ul, p, rng, weights=weights)

    selected = np.empty(p, dtype=np.int64)
    d2 = _sq_distances(x_ul, centers)
    for j in range(p):
        members = np.flatnonzero(assign == j)
        selected[j] = members[d2[members, j].argmin()]

    scores = -np.sqrt(_sq_distances(x_ul, x_ul[selected]).min(axis=1))
    order = selected[np.argsort(scores[selected], kind="stable")[::-1]]
    return SelectionReport(
        strategy=strategy,
        scores=scores,
        selected=order,
        budget=p,
        tie_seed=seed,
        flags=flags,
    )


def coreset_select(x_ul: np.ndarray, p: int, seed: int = 0) -> SelectionReport:
    """Diversity baseline: unweighted k-means cluster representatives."""
    return _cluster_representatives(x_ul, p, seed, None, "coreset", [])


def clue_select(
    model: ClassifierModel, x_ul: np.ndarray, p: int, seed: int = 0
) -> SelectionReport:
    """Uncertainty-and-diversity baseline: entropy-weighted k-means.

    Samples weigh cluster centroids by predictive entropy, pulling
    representatives toward uncertain regions. Zero entropy everywhere falls
    back to the unweighted clustering, flagged.
    """
    weights = uncertainty_scores(model, np.asarray(x_ul, dtype=np.float64))
    flags = []
    if not weights.any():
        flags.append("uniform-weights-fallback")
        weights = None
        logger.warning("all-zero entropies; falling back to unweighted clustering")
    elif weights.max() == weights.min():
        weights = None  # constant weights reduce exactly to the unweighted path
    return _cluster_representatives(x_ul, p, seed, weights, "clue", flags)

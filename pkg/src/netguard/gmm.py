"""Diagonal-covariance Gaussian mixtures fit by Expectation-Maximization.

One mixture is fit per domain (source and target); per-sample log-likelihood
differences between the two drive prior selection. Only diagonal covariances
are supported: that is the operating point the selection stage uses, and it
keeps every step expressible as stable elementwise numpy work.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .cluster import kmeans_plus_plus
from .errors import ContractError, InfeasibleFitError

logger = logging.getLogger(__name__)

DEFAULT_COMPONENTS = 10
VARIANCE_FLOOR = 1e-6

_LOG_2PI = float(np.log(2.0 * np.pi))


@dataclass
class GmmConfig:
    max_iters: int = 200
    tol: float = 1e-4
    seed: int = 0
    variance_floor: float = VARIANCE_FLOOR


@dataclass
class GmmParams:
    """Fitted mixture: weights, means, diagonal variances, plus fit metadata."""

    weights: np.ndarray  # (K,)
    means: np.ndarray  # (K, d)
    variances: np.ndarray  # (K, d), every entry >= variance floor
    n_iters: int = 0
    final_avg_log_likelihood: float = float("nan")
    avg_log_likelihood_path: list[float] = field(default_factory=list)
    reseed_events: int = 0

    def __post_init__(self):
        self.weights = np.asarray(self.weights, dtype=np.float64)
        self.means = np.asarray(self.means, dtype=np.float64)
        self.variances = np.asarray(self.variances, dtype=np.float64)
        if abs(self.weights.sum() - 1.0) > 1e-9:
            raise ContractError("mixture weights must sum to 1")
        if (self.variances <= 0).any():
            raise ContractError("variances must be strictly positive")

    @property
    def n_components(self) -> int:
        return self.weights.shape[0]

    @property
    def dim(self) -> int:
        return self.means.shape[1]

    def to_json(self) -> dict:
        return {
            "weights": self.weights.tolist(),
            "means": self.means.tolist(),
            "variances": self.variances.tolist(),
            "n_iters": self.n_iters,
            "final_avg_log_likelihood": self.final_avg_log_likelihood,
            "reseed_events": self.reseed_events,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "GmmParams":
        return cls(
            weights=np.asarray(obj["weights"], dtype=np.float64),
            means=np.asarray(obj["means"], dtype=np.float64),
            variances=np.asarray(obj["variances"], dtype=np.float64),
            n_iters=int(obj.get("n_iters", 0)),
            final_avg_log_likelihood=float(obj.get("final_avg_log_likelihood", "nan")),
            reseed_events=int(obj.get("reseed_events", 0)),
        )

    def save(self, path: str | Path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_json(), fh, sort_keys=True)

    @classmethod
    def load(cls, path: str | Path) -> "GmmParams":
        with open(path, encoding="utf-8") as fh:
            return cls.from_json(json.load(fh))


def _component_log_prob(params: GmmParams, x: np.ndarray) -> np.ndarray:
    """(n, K) matrix of log(pi_j) + log N(x_i | mu_j, diag sigma2_j)."""
    n = x.shape[0]
    k = params.n_components
    out = np.empty((n, k), dtype=np.float64)
    log_w = np.log(params.weights)
    for j in range(k):
        var = params.variances[j]
        log_norm = -0.5 * (np.log(var).sum() + params.dim * _LOG_2PI)
        diff = x - params.means[j]
        out[:, j] = log_w[j] + log_norm - 0.5 * ((diff * diff) / var).sum(axis=1)
    return out


def _logsumexp_rows(m: np.ndarray) -> np.ndarray:
    hi = m.max(axis=1)
    return hi + np.log(np.exp(m - hi[:, None]).sum(axis=1))


def batch_log_likelihood(params: GmmParams, data: np.ndarray) -> np.ndarray:
    """Mixture log-density of each row of `data` (log-sum-exp stabilized)."""
    data = np.asarray(data, dtype=np.float64)
    if data.ndim != 2 or data.shape[1] != params.dim:
        raise ContractError(
            f"data has shape {data.shape}, expected (n, {params.dim})"
        )
    if data.shape[0] == 0:
        return np.zeros(0)
    return _logsumexp_rows(_component_log_prob(params, data))


def log_likelihood(params: GmmParams, x: np.ndarray) -> float:
    """Mixture log-density of a single d-dimensional point."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1 or x.shape[0] != params.dim:
        raise ContractError(f"x has shape {x.shape}, expected ({params.dim},)")
    return float(batch_log_likelihood(params, x[None, :])[0])


def fit_gmm(data: np.ndarray, k: int, config: GmmConfig | None = None) -> GmmParams:
    """Fit a K-component diagonal GMM by EM.

    Initialization is k-means++ seeding on a subsample of min(n, 10*K*d)
    points; iteration stops when the average log-likelihood moves by less
    than `tol` or after `max_iters` M-steps. Components that lose all
    responsibility mass are re-seeded to a random data point (counted in
    `reseed_events`). Deterministic for a fixed seed.
    """
    cfg = config or GmmConfig()
    data = np.asarray(data, dtype=np.float64)
    if data.ndim != 2:
        raise ContractError("data must be a 2-D matrix")
    n, d = data.shape
    if d < 1:
        raise ContractError("data must have at least one feature")
    if n < k:
        raise InfeasibleFitError(f"cannot fit {k} components to {n} samples")
    if not np.isfinite(data).all():
        raise ContractError("data contains non-finite values")

    rng = np.random.default_rng(cfg.seed)
    floor = cfg.variance_floor

    if k == 1:
        # Closed-form maximum likelihood; EM would land here in one step.
        params = GmmParams(
            weights=np.ones(1),
            means=data.mean(axis=0, keepdims=True),
            variances=np.maximum(data.var(axis=0, keepdims=True), floor),
        )
        params.n_iters = 1
        params.final_avg_log_likelihood = float(batch_log_likelihood(params, data).mean())
        params.avg_log_likelihood_path = [params.final_avg_log_likelihood]
        return params

    sub_size = min(n, 10 * k * d)
    sub_idx = rng.choice(n, size=sub_size, replace=False) if sub_size < n else np.arange(n)
    subsample = data[sub_idx]
    means = subsample[kmeans_plus_plus(subsample, k, rng)].copy()
    global_var = np.maximum(data.var(axis=0), floor)
    variances = np.tile(global_var, (k, 1))
    weights = np.full(k, 1.0 / k)

    params = GmmParams(weights=weights, means=means, variances=variances)
    path: list[float] = []
    reseeds = 0
    prev_avg = None
    m_steps = 0

    for _ in range(cfg.max_iters):
        log_m = _component_log_prob(params, data)
        lse = _logsumexp_rows(log_m)
        avg_ll = float(lse.mean())
        path.append(avg_ll)
        if prev_avg is not None and abs(avg_ll - prev_avg) < cfg.tol:
            break
        prev_avg = avg_ll

        resp = np.exp(log_m - lse[:, None])  # (n, k)
        mass = resp.sum(axis=0)

        empty = np.flatnonzero(mass < 1e-10)
        for j in empty:
            # Hand a random point's full responsibility to the dead component;
            # the M-step below then re-centers it there with floored variance.
            pick = int(rng.integers(n))
            resp[:, j] = 0.0
            resp[pick, :] = 0.0
            resp[pick, j] = 1.0
            reseeds += 1
        if empty.size:
            mass = resp.sum(axis=0)
            logger.debug("re-seeded %d empty components", empty.size)

        weights = mass / mass.sum()
        means = (resp.T @ data) / mass[:, None]
        sq = (resp.T @ (data * data)) / mass[:, None]
        variances = np.maximum(sq - means * means, floor)
        if empty.size:
            variances[empty] = global_var
        params = GmmParams(weights=weights, means=means, variances=variances)
        m_steps += 1
    else:
        # Ran out of iterations: score the final parameters once more.
        path.append(float(batch_log_likelihood(params, data).mean()))

    params.n_iters = m_steps
    params.final_avg_log_likelihood = path[-1]
    params.avg_log_likelihood_path = path
    params.reseed_events = reseeds
    return params

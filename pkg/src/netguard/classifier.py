"""Flow classifiers: a small MLP and the binary logistic benign filter.

Both are trained with plain seeded gradient descent over numpy arrays so that
identical seeds reproduce identical weights, and so analytic gradients can be
verified against finite differences.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .dataset import Dataset, encode_features
from .errors import ContractError

logger = logging.getLogger(__name__)


def _softmax(logits: np.ndarray) -> np.ndarray:
    z = logits - logits.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def _sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


@dataclass
class MlpConfig:
    hidden: tuple[int, ...] = (100, 100)
    epochs: int = 50
    lr: float = 0.01
    momentum: float = 0.9
    batch_size: int = 128
    seed: int = 0
    class_weighting: bool = False  # inverse-frequency loss weights (ablation switch)


@dataclass
class ClassifierModel:
    """Fully-connected ReLU network with a softmax head.

    `classes` maps output columns to class names; callers translate back to
    their own vocabulary by name, which keeps models trained before and after
    new classes appear interoperable.
    """

    layer_sizes: list[int]
    weights: list[np.ndarray]
    biases: list[np.ndarray]
    classes: list[str]
    seed: int = 0
    epochs_run: int = 0
    final_loss: float = float("nan")
    loss_path: list[float] = field(default_factory=list)

    @property
    def n_classes(self) -> int:
        return len(self.classes)

    def _forward(self, x: np.ndarray) -> tuple[list[np.ndarray], np.ndarray]:
        """Hidden activations (post-ReLU, including input) and output logits."""
        acts = [x]
        h = x
        for w, b in zip(self.weights[:-1], self.biases[:-1]):
            h = np.maximum(h @ w + b, 0.0)
            acts.append(h)
        logits = h @ self.weights[-1] + self.biases[-1]
        return acts, logits

    def predict_proba(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        if x.ndim != 2 or x.shape[1] != self.layer_sizes[0]:
            raise ContractError(
                f"input has shape {x.shape}, expected (n, {self.layer_sizes[0]})"
            )
        if x.shape[0] == 0:
            return np.zeros((0, self.n_classes))
        return _softmax(self._forward(x)[1])

    def predict(self, x: np.ndarray) -> np.ndarray:
        """Indices into self.classes."""
        return self.predict_proba(x).argmax(axis=1)

    def to_json(self) -> dict:
        return {
            "layer_sizes": self.layer_sizes,
            "weights": [w.tolist() for w in self.weights],
            "biases": [b.tolist() for b in self.biases],
            "classes": self.classes,
            "seed": self.seed,
            "epochs_run": self.epochs_run,
            "final_loss": self.final_loss,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "ClassifierModel":
        return cls(
            layer_sizes=list(obj["layer_sizes"]),
            weights=[np.asarray(w, dtype=np.float64) for w in obj["weights"]],
            biases=[np.asarray(b, dtype=np.float64) for b in obj["biases"]],
            classes=list(obj["classes"]),
            seed=int(obj.get("seed", 0)),
            epochs_run=int(obj.get("epochs_run", 0)),
            final_loss=float(obj.get("final_loss", "nan")),
        )

    def save(self, path: str | Path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_json(), fh, sort_keys=True)

    @classmethod
    def load(cls, path: str | Path) -> "ClassifierModel":
        with open(path, encoding="utf-8") as fh:
            return cls.from_json(json.load(fh))


def _loss_and_grads(
    model: ClassifierModel,
    x: np.ndarray,
    y: np.ndarray,
    sample_weights: np.ndarray | None = None,
) -> tuple[float, list[np.ndarray], list[np.ndarray]]:
    """Mean cross-entropy and its gradients w.r.t. every weight and bias."""
    n = x.shape[0]
    acts, logits = model._forward(x)
    probs = _softmax(logits)
    w = np.ones(n) if sample_weights is None else sample_weights
    wsum = w.sum()
    eps = 1e-12
    loss = float(-(w * np.log(probs[np.arange(n), y] + eps)).sum() / wsum)

    delta = probs.copy()
    delta[np.arange(n), y] -= 1.0
    delta *= (w / wsum)[:, None]

    grads_w: list[np.ndarray] = [None] * len(model.weights)
    grads_b: list[np.ndarray] = [None] * len(model.biases)
    for layer in range(len(model.weights) - 1, -1, -1):
        grads_w[layer] = acts[layer].T @ delta
        grads_b[layer] = delta.sum(axis=0)
        if layer > 0:
            delta = (delta @ model.weights[layer].T) * (acts[layer] > 0)
    return loss, grads_w, grads_b


def train_mlp(train: Dataset, config: MlpConfig | None = None) -> ClassifierModel:
    """Mini-batch SGD with momentum on softmax cross-entropy.

    The output layer covers exactly the classes present in the training data.
    Deterministic for a fixed seed (fixed shuffle and reduction order).
    """
    cfg = config or MlpConfig()
    if not train.labeled:
        raise ContractError("training data must be labeled")
    x = encode_features(train)
    present = np.unique(train.labels)
    if present.size < 2:
        raise ContractError("training set must contain at least 2 classes")
    class_names = [train.schema.classes[k] for k in present]
    remap = {int(k): i for i, k in enumerate(present)}
    y = np.asarray([remap[int(v)] for v in train.labels], dtype=np.int64)

    rng = np.random.default_rng(cfg.seed)
    sizes = [x.shape[1], *cfg.hidden, present.size]
    weights, biases = [], []
    for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
        scale = np.sqrt(2.0 / fan_in)
        weights.append(rng.standard_normal((fan_in, fan_out)) * scale)
        biases.append(np.zeros(fan_out))
    model = ClassifierModel(
        layer_sizes=sizes, weights=weights, biases=biases, classes=class_names, seed=cfg.seed
    )

    sample_weights = None
    if cfg.class_weighting:
        freq = np.bincount(y, minlength=present.size).astype(np.float64)
        inv = freq.sum() / (freq.size * freq)
        sample_weights = inv[y]

    n = x.shape[0]
    vel_w = [np.zeros_like(w) for w in weights]
    vel_b = [np.zeros_like(b) for b in biases]
    loss_path = []
    for _ in range(cfg.epochs):
        order = rng.permutation(n)
        epoch_loss = 0.0
        n_batches = 0
        for start in range(0, n, cfg.batch_size):
            idx = order[start : start + cfg.batch_size]
            sw = None if sample_weights is None else sample_weights[idx]
            loss, gw, gb = _loss_and_grads(model, x[idx], y[idx], sw)
            epoch_loss += loss
            n_batches += 1
            for layer in range(len(weights)):
                vel_w[layer] = cfg.momentum * vel_w[layer] - cfg.lr * gw[layer]
                vel_b[layer] = cfg.momentum * vel_b[layer] - cfg.lr * gb[layer]
                model.weights[layer] += vel_w[layer]
                model.biases[layer] += vel_b[layer]
        loss_path.append(epoch_loss / n_batches)

    model.epochs_run = cfg.epochs
    model.loss_path = loss_path
    model.final_loss = loss_path[-1] if loss_path else float("nan")
    return model


# ---------------------------------------------------------------------------
# Binary logistic benign filter
# ---------------------------------------------------------------------------


@dataclass
class LogisticConfig:
    lr: float = 0.5
    epochs: int = 500
    seed: int = 0


@dataclass
class LogisticModel:
    """Benign-vs-rest logistic regression; outputs P(benign)."""

    weights: np.ndarray
    bias: float

    def predict_proba(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        if x.ndim != 2 or x.shape[1] != self.weights.shape[0]:
            raise ContractError(
                f"input has shape {x.shape}, expected (n, {self.weights.shape[0]})"
            )
        # Clip away float saturation so outputs stay strictly inside (0, 1).
        return np.clip(_sigmoid(x @ self.weights + self.bias), 1e-15, 1.0 - 1e-15)

    def to_json(self) -> dict:
        return {"weights": self.weights.tolist(), "bias": self.bias}

    @classmethod
    def from_json(cls, obj: dict) -> "LogisticModel":
        return cls(weights=np.asarray(obj["weights"], dtype=np.float64), bias=float(obj["bias"]))


def train_logistic(train: Dataset, config: LogisticConfig | None = None) -> LogisticModel:
    """Full-batch gradient descent on benign-vs-rest cross-entropy.

    The benign class comes from the schema; every other label is the negative
    class. Weights start at zero, so the fit is deterministic outright.
    """
    cfg = config or LogisticConfig()
    if not train.labeled:
        raise ContractError("training data must be labeled")
    benign = train.schema.benign_index()
    if benign is None:
        raise ContractError("schema does not designate a benign class")
    y = (train.labels == benign).astype(np.float64)
    if y.min() == y.max():
        raise ContractError("both benign and non-benign samples are required")

    x = encode_features(train)
    n, d = x.shape
    w = np.zeros(d)
    b = 0.0
    for _ in range(cfg.epochs):
        p = _sigmoid(x @ w + b)
        err = (p - y) / n
        w -= cfg.lr * (x.T @ err)
        b -= cfg.lr * float(err.sum())
    return LogisticModel(weights=w, bias=b)


# ---------------------------------------------------------------------------
# Gradient verification
# ---------------------------------------------------------------------------


@dataclass
class GradCheckResult:
    max_rel_error: float
    max_abs_error: float
    n_checked: int


def finite_difference_check(
    model: ClassifierModel,
    x: np.ndarray,
    y: np.ndarray,
    n_params: int = 40,
    h: float = 1e-5,
    seed: int = 0,
) -> GradCheckResult:
    """Compare backprop gradients to central finite differences.

    A random subset of weight/bias coordinates is perturbed by +-h; the
    relative error uses max(|analytic|, |numeric|, 1e-6) as denominator.
    """
    x = np.atleast_2d(np.asarray(x, dtype=np.float64))
    y = np.atleast_1d(np.asarray(y, dtype=np.int64))
    rng = np.random.default_rng(seed)

    _, grads_w, grads_b = _loss_and_grads(model, x, y)
    flat_params: list[tuple[str, int, tuple]] = []
    for layer, w in enumerate(model.weights):
        for pos in np.ndindex(*w.shape):
            flat_params.append(("w", layer, pos))
    for layer, b in enumerate(model.biases):
        for pos in np.ndindex(*b.shape):
            flat_params.append(("b", layer, pos))
    pick = rng.choice(len(flat_params), size=min(n_params, len(flat_params)), replace=False)

    def loss_at() -> float:
        return _loss_and_grads(model, x, y)[0]

    max_rel = 0.0
    max_abs = 0.0
    for i in pick:
        kind, layer, pos = flat_params[i]
        store = model.weights if kind == "w" else model.biases
        analytic = grads_w[layer][pos] if kind == "w" else grads_b[layer][pos]
        original = store[layer][pos]
        store[layer][pos] = original + h
        up = loss_at()
        store[layer][pos] = original - h
        down = loss_at()
        store[layer][pos] = original
        numeric = (up - down) / (2.0 * h)
        abs_err = abs(analytic - numeric)
        rel_err = abs_err / max(abs(analytic), abs(numeric), 1e-6)
        max_abs = max(max_abs, abs_err)
        max_rel = max(max_rel, rel_err)
    return GradCheckResult(max_rel_error=max_rel, max_abs_error=max_abs, n_checked=len(pick))

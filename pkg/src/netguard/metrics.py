"""Classification metrics, per-class drift magnitude, and synthetic fidelity.

The 1-D transport distances are computed exactly on the merged quantile grid
of the two empirical distributions. Grid breakpoints are kept as integers over
the common denominator n*m, so segment boundaries and quantile indices never
suffer float roundoff. Multivariate inputs are scored as the mean of exact
per-feature 1-D distances.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .dataset import Dataset
from .errors import ContractError, EmptyDatasetError, VocabularyError


# ---------------------------------------------------------------------------
# Classification metrics
# ---------------------------------------------------------------------------


@dataclass
class MetricsReport:
    """Multiclass scores plus the benign-vs-attack binarized FNR/FPR."""

    macro_f1: float
    micro_f1: float
    accuracy: float
    per_class_f1: dict[str, float]
    fnr: float | None
    fpr: float | None
    confusion: list[list[int]]
    classes: list[str]
    n: int

    def to_json(self) -> dict:
        return {
            "macro_f1": self.macro_f1,
            "micro_f1": self.micro_f1,
            "accuracy": self.accuracy,
            "per_class_f1": self.per_class_f1,
            "fnr": self.fnr,
            "fpr": self.fpr,
            "confusion": self.confusion,
            "classes": self.classes,
            "n": self.n,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "MetricsReport":
        return cls(**obj)

    def save(self, path: str | Path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_json(), fh, indent=2, sort_keys=True)

    def render(self) -> str:
        """Aligned-text table: overall row plus one row per class."""
        lines = [
            f"{'':<18}{'F1(%)':>9}{'FNR':>9}{'FPR':>9}{'Acc.(%)':>10}",
            "{:<18}{:>9.2f}{:>9}{:>9}{:>10.2f}".format(
                "overall",
                100.0 * self.macro_f1,
                "-" if self.fnr is None else f"{self.fnr:.4f}",
                "-" if self.fpr is None else f"{self.fpr:.4f}",
                100.0 * self.accuracy,
            ),
        ]
        for name in self.classes:
            if name in self.per_class_f1:
                lines.append(
                    f"{name:<18}{100.0 * self.per_class_f1[name]:>9.2f}"
                )
        return "\n".join(lines)


def classification_report(
    y_true: np.ndarray,
    y_pred: np.ndarray,
    class_vocab: list[str] | tuple[str, ...],
    benign_class: str | None = None,
) -> MetricsReport:
    """Confusion-matrix derived scores.

    Per-class F1 is one-vs-rest; macro F1 averages over classes present in
    y_true. FNR/FPR binarize benign-vs-attack with attack as the positive
    class (None when the vocabulary has no benign class or a side is empty).
    """
    y_true = np.asarray(y_true, dtype=np.int64)
    y_pred = np.asarray(y_pred, dtype=np.int64)
    if y_true.shape != y_pred.shape or y_true.ndim != 1:
        raise ContractError("y_true and y_pred must be 1-D arrays of equal length")
    n = y_true.shape[0]
    if n == 0:
        raise EmptyDatasetError("cannot score an empty prediction set")
    vocab = list(class_vocab)
    c = len(vocab)
    for arr, name in ((y_true, "y_true"), (y_pred, "y_pred")):
        if arr.min() < 0 or arr.max() >= c:
            raise VocabularyError(f"{name} contains labels outside the class vocabulary")

    confusion = np.zeros((c, c), dtype=np.int64)
    np.add.at(confusion, (y_true, y_pred), 1)

    present = np.flatnonzero(confusion.sum(axis=1) > 0)
    per_class: dict[str, float] = {}
    for k in present:
        tp = confusion[k, k]
        fp = confusion[:, k].sum() - tp
        fn = confusion[k, :].sum() - tp
        denom = 2 * tp + fp + fn
        per_class[vocab[k]] = float(2 * tp / denom) if denom else 0.0
    macro = float(np.mean([per_class[vocab[k]] for k in present]))
    accuracy = float(np.trace(confusion) / n)

    benign_idx = None
    if benign_class is not None:
        if benign_class not in vocab:
            raise VocabularyError(f"benign class {benign_class!r} not in vocabulary")
        benign_idx = vocab.index(benign_class)
    else:
        lowered = [v.lower() for v in vocab]
        if "benign" in lowered:
            benign_idx = lowered.index("benign")

    fnr = fpr = None
    if benign_idx is not None:
        true_attack = y_true != benign_idx
        pred_attack = y_pred != benign_idx
        n_attack = int(true_attack.sum())
        n_benign = n - n_attack
        if n_attack:
            fnr = float((true_attack & ~pred_attack).sum() / n_attack)
        if n_benign:
            fpr = float((~true_attack & pred_attack).sum() / n_benign)

    return MetricsReport(
        macro_f1=macro,
        micro_f1=accuracy,
        accuracy=accuracy,
        per_class_f1=per_class,
        fnr=fnr,
        fpr=fpr,
        confusion=confusion.tolist(),
        classes=vocab,
        n=n,
    )


# ---------------------------------------------------------------------------
# 1-D transport distances
# ---------------------------------------------------------------------------


def _merged_quantile_grid(a: np.ndarray, b: np.ndarray):
    """Segment widths and per-segment quantile indices for two sorted samples.

    Breakpoints i/n and j/m are merged as integers over denominator n*m, so
    the grid is exact. On the segment ending at breakpoint r/(n*m) the
    empirical quantile of `a` is a[ceil(r/m) - 1] (and symmetrically for b).
    """
    n, m = a.shape[0], b.shape[0]
    grid = np.union1d(
        np.arange(1, n + 1, dtype=np.int64) * m,
        np.arange(1, m + 1, dtype=np.int64) * n,
    )
    widths = np.diff(np.concatenate(([0], grid))) / float(n * m)
    ia = -(-grid // m) - 1
    ib = -(-grid // n) - 1
    return widths, a[ia], b[ib]


def emd_1d(samples_a: np.ndarray, samples_b: np.ndarray) -> float:
    """Exact 1-D Wasserstein-1 distance between two empirical samples."""
    a = np.sort(np.asarray(samples_a, dtype=np.float64).ravel())
    b = np.sort(np.asarray(samples_b, dtype=np.float64).ravel())
    if a.size == 0 or b.size == 0:
        raise ContractError("emd_1d requires two non-empty samples")
    widths, qa, qb = _merged_quantile_grid(a, b)
    return float(np.sum(widths * np.abs(qa - qb)))


def w2_1d(samples_a: np.ndarray, samples_b: np.ndarray) -> float:
    """Exact 1-D Wasserstein-2 distance between two empirical samples."""
    a = np.sort(np.asarray(samples_a, dtype=np.float64).ravel())
    b = np.sort(np.asarray(samples_b, dtype=np.float64).ravel())
    if a.size == 0 or b.size == 0:
        raise ContractError("w2_1d requires two non-empty samples")
    widths, qa, qb = _merged_quantile_grid(a, b)
    diff = qa - qb
    return float(np.sqrt(np.sum(widths * diff * diff)))


def w2_fidelity(real: Dataset, synthetic: Dataset) -> float:
    """Mean per-feature W2 between real and synthetic slices of one class."""
    if len(real) == 0 or len(synthetic) == 0:
        raise EmptyDatasetError("fidelity needs non-empty real and synthetic slices")
    if real.labeled and synthetic.labeled:
        ra, sa = np.unique(real.labels), np.unique(synthetic.labels)
        if ra.size != 1 or sa.size != 1 or ra[0] != sa[0]:
            raise ContractError("fidelity slices must hold one and the same class")
    d = real.continuous.shape[1]
    if d == 0:
        raise ContractError("no continuous features to score")
    return float(
        np.mean([w2_1d(real.continuous[:, i], synthetic.continuous[:, i]) for i in range(d)])
    )


# ---------------------------------------------------------------------------
# Per-class drift
# ---------------------------------------------------------------------------


@dataclass
class DriftReport:
    """Per-class drift magnitude between two domains, normalized by the max."""

    raw_emd: dict[str, float]
    normalized_emd: dict[str, float]
    reference_class: str | None  # class whose raw distance is the maximum
    absent_classes: list[str] = field(default_factory=list)
    degenerate: bool = False  # all raw distances are zero
    source_counts: dict[str, int] = field(default_factory=dict)
    target_counts: dict[str, int] = field(default_factory=dict)

    def to_json(self) -> dict:
        return {
            "raw_emd": self.raw_emd,
            "normalized_emd": self.normalized_emd,
            "reference_class": self.reference_class,
            "absent_classes": self.absent_classes,
            "degenerate": self.degenerate,
            "source_counts": self.source_counts,
            "target_counts": self.target_counts,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "DriftReport":
        return cls(**obj)

    def save(self, path: str | Path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_json(), fh, indent=2, sort_keys=True)

    def render(self, selection_counts: dict[str, int] | None = None) -> str:
        """Class distribution table with normalized drift and, when known,
        per-class selection counts."""
        header = f"{'Class':<18}{'Source':>9}{'Target':>9}{'Norm. EMD':>11}"
        if selection_counts is not None:
            header += f"{'Selected':>10}"
        lines = [header]
        for name in self.raw_emd:
            row = (
                f"{name:<18}{self.source_counts.get(name, 0):>9}"
                f"{self.target_counts.get(name, 0):>9}"
                f"{self.normalized_emd[name]:>11.4f}"
            )
            if selection_counts is not None:
                row += f"{selection_counts.get(name, 0):>10}"
            lines.append(row)
        for name in self.absent_classes:
            row = (
                f"{name:<18}{self.source_counts.get(name, 0):>9}"
                f"{self.target_counts.get(name, 0):>9}{'absent':>11}"
            )
            if selection_counts is not None:
                row += f"{selection_counts.get(name, 0):>10}"
            lines.append(row)
        return "\n".join(lines)


def class_drift(x_l: Dataset, x_ul_truth: Dataset) -> DriftReport:
    """Per-class drift: mean over continuous features of exact 1-D EMD.

    The target side is labeled through its hidden ground truth. Classes
    present on only one side are reported absent and excluded from
    normalization. Normalization divides by the maximum class distance, so
    the most-drifted class scores 1.0 (ties all at 1.0).
    """
    if x_l.labels is None:
        raise ContractError("source side must be labeled")
    tgt_labels = x_ul_truth.hidden_labels if x_ul_truth.hidden_labels is not None else x_ul_truth.labels
    if tgt_labels is None:
        raise ContractError("target side carries no ground truth")
    if x_l.schema != x_ul_truth.schema:
        raise ContractError("domains must share a schema")

    classes = x_l.schema.classes
    src_counts = {c: 0 for c in classes}
    tgt_counts = {c: 0 for c in classes}
    for c, cnt in zip(classes, np.bincount(x_l.labels, minlength=len(classes))):
        src_counts[c] = int(cnt)
    for c, cnt in zip(classes, np.bincount(tgt_labels, minlength=len(classes))):
        tgt_counts[c] = int(cnt)

    d = x_l.continuous.shape[1]
    raw: dict[str, float] = {}
    absent: list[str] = []
    for k, name in enumerate(classes):
        if src_counts[name] == 0 or tgt_counts[name] == 0:
            if src_counts[name] or tgt_counts[name]:
                absent.append(name)
            continue
        src = x_l.continuous[x_l.labels == k]
        tgt = x_ul_truth.continuous[tgt_labels == k]
        raw[name] = float(
            np.mean([emd_1d(src[:, i], tgt[:, i]) for i in range(d)])
        )
    if not raw:
        raise ContractError("no class is present on both sides")

    peak = max(raw.values())
    degenerate = peak == 0.0
    if degenerate:
        normalized = {name: 0.0 for name in raw}
        reference = None
    else:
        normalized = {name: value / peak for name, value in raw.items()}
        reference = next(name for name, value in raw.items() if value == peak)
    return DriftReport(
        raw_emd=raw,
        normalized_emd=normalized,
        reference_class=reference,
        absent_classes=absent,
        degenerate=degenerate,
        source_counts=src_counts,
        target_counts=tgt_counts,
    )

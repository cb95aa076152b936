"""Tabular flow datasets: schema, ingestion, normalization, splits, drift benchmark.

A flow record mixes categorical metadata features (protocol, flags, ...) with
continuous measurement features (packet sizes, durations, rates, ...). Datasets
are immutable-by-convention containers over numpy arrays; all randomized
operations take explicit seeds.
"""

from __future__ import annotations

import csv
import json
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import (
    ContractError,
    EmptyDatasetError,
    SchemaError,
    VocabularyError,
)

logger = logging.getLogger(__name__)

CATEGORICAL = "categorical"
CONTINUOUS = "continuous"

LABELED = "labeled"
UNLABELED_HIDDEN = "unlabeled-with-hidden-truth"
UNLABELED = "unlabeled"
LABEL_MODES = (LABELED, UNLABELED_HIDDEN, UNLABELED)


@dataclass(frozen=True)
class Feature:
    """One column of a flow table.

    kind is "categorical" (metadata; `states` is the ordered vocabulary) or
    "continuous" (measurement; `unit` is a free-form tag).
    """

    name: str
    kind: str
    states: tuple[str, ...] = ()
    unit: str = ""

    def __post_init__(self):
        if self.kind not in (CATEGORICAL, CONTINUOUS):
            raise SchemaError(f"unknown feature kind {self.kind!r} for {self.name!r}")
        if self.kind == CATEGORICAL:
            if not self.states:
                raise SchemaError(f"categorical feature {self.name!r} has no states")
            if len(set(self.states)) != len(self.states):
                raise SchemaError(f"duplicate states in feature {self.name!r}")


@dataclass(frozen=True)
class FeatureSchema:
    """Ordered feature descriptors plus the label column and class vocabulary."""

    features: tuple[Feature, ...]
    label_column: str
    classes: tuple[str, ...]
    benign_class: str | None = None

    def __post_init__(self):
        names = [f.name for f in self.features]
        if len(set(names)) != len(names):
            raise SchemaError("feature names must be unique")
        if self.label_column in names:
            raise SchemaError("label column clashes with a feature name")
        if len(set(self.classes)) != len(self.classes):
            raise SchemaError("class names must be unique")
        if self.benign_class is not None and self.benign_class not in self.classes:
            raise SchemaError(f"benign class {self.benign_class!r} not in class vocabulary")

    @property
    def continuous_features(self) -> tuple[Feature, ...]:
        return tuple(f for f in self.features if f.kind == CONTINUOUS)

    @property
    def categorical_features(self) -> tuple[Feature, ...]:
        return tuple(f for f in self.features if f.kind == CATEGORICAL)

    @property
    def n_classes(self) -> int:
        return len(self.classes)

    def class_index(self, name: str) -> int:
        try:
            return self.classes.index(name)
        except ValueError:
            raise VocabularyError(f"unknown class {name!r}") from None

    def benign_index(self) -> int | None:
        """Index of the benign class, or None when the schema has no benign notion."""
        if self.benign_class is not None:
            return self.classes.index(self.benign_class)
        for i, c in enumerate(self.classes):
            if c.lower() == "benign":
                return i
        return None

    def encoded_dim(self) -> int:
        """Width of the encoded feature space (continuous + one-hot categorical)."""
        return len(self.continuous_features) + sum(
            len(f.states) for f in self.categorical_features
        )

    def to_json(self) -> dict:
        return {
            "features": [
                {
                    "name": f.name,
                    "kind": f.kind,
                    **({"states": list(f.states)} if f.kind == CATEGORICAL else {}),
                    **({"unit": f.unit} if f.unit else {}),
                }
                for f in self.features
            ],
            "label_column": self.label_column,
            "classes": list(self.classes),
            "benign_class": self.benign_class,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "FeatureSchema":
        features = tuple(
            Feature(
                name=f["name"],
                kind=f["kind"],
                states=tuple(f.get("states", ())),
                unit=f.get("unit", ""),
            )
            for f in obj["features"]
        )
        return cls(
            features=features,
            label_column=obj["label_column"],
            classes=tuple(obj["classes"]),
            benign_class=obj.get("benign_class"),
        )

    @classmethod
    def load(cls, path: str | Path) -> "FeatureSchema":
        with open(path, encoding="utf-8") as fh:
            return cls.from_json(json.load(fh))

    def save(self, path: str | Path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_json(), fh, indent=2, sort_keys=True)


@dataclass(frozen=True)
class FlowRecord:
    """Single-record view, mainly for serialization into annotation tasks."""

    continuous: np.ndarray
    categorical: np.ndarray
    label: int | None

    def feature_map(self, schema: FeatureSchema) -> dict:
        """name -> value pairs, categorical indices resolved to state strings."""
        out: dict[str, float | str] = {}
        ci = ki = 0
        for f in schema.features:
            if f.kind == CONTINUOUS:
                out[f.name] = float(self.continuous[ci])
                ci += 1
            else:
                out[f.name] = f.states[int(self.categorical[ki])]
                ki += 1
        return out


@dataclass
class Dataset:
    """A schema-tagged collection of flow records.

    `labels` is None for unlabeled data. `hidden_labels` holds simulated-oracle
    ground truth for unlabeled sets; it must only be read through the oracle or
    the evaluation/drift reports, never by selection or training code.
    """

    schema: FeatureSchema
    continuous: np.ndarray  # (n, n_continuous) float64
    categorical: np.ndarray  # (n, n_categorical) int64
    labels: np.ndarray | None = None  # (n,) int64
    hidden_labels: np.ndarray | None = None  # (n,) int64
    provenance: str = "real"  # real | synthetic | augmented
    record_provenance: np.ndarray | None = None  # per-record tags when mixed
    dropped_rows: int = 0  # rows removed during ingestion cleaning

    def __post_init__(self):
        self.continuous = np.asarray(self.continuous, dtype=np.float64)
        self.categorical = np.asarray(self.categorical, dtype=np.int64)
        n = self.continuous.shape[0]
        if self.categorical.shape[0] != n:
            raise ContractError("continuous/categorical row counts differ")
        for arr_name in ("labels", "hidden_labels"):
            arr = getattr(self, arr_name)
            if arr is not None:
                arr = np.asarray(arr, dtype=np.int64)
                if arr.shape != (n,):
                    raise ContractError(f"{arr_name} length != record count")
                setattr(self, arr_name, arr)

    def __len__(self) -> int:
        return self.continuous.shape[0]

    @property
    def labeled(self) -> bool:
        return self.labels is not None

    def validate(self) -> None:
        """Check record-level invariants against the schema."""
        n_cont = len(self.schema.continuous_features)
        n_cat = len(self.schema.categorical_features)
        if self.continuous.shape[1] != n_cont or self.categorical.shape[1] != n_cat:
            raise SchemaError("feature column counts do not match schema")
        if self.continuous.size and not np.all(np.isfinite(self.continuous)):
            raise SchemaError("non-finite continuous values present")
        for j, f in enumerate(self.schema.categorical_features):
            col = self.categorical[:, j]
            if col.size and (col.min() < 0 or col.max() >= len(f.states)):
                raise VocabularyError(f"categorical index out of range for {f.name!r}")
        for arr in (self.labels, self.hidden_labels):
            if arr is not None and arr.size and (
                arr.min() < 0 or arr.max() >= self.schema.n_classes
            ):
                raise VocabularyError("label index outside class vocabulary")

    def class_counts(self, hidden: bool = False) -> np.ndarray:
        """Per-class record counts (length = vocabulary size)."""
        arr = self.hidden_labels if hidden else self.labels
        if arr is None:
            raise ContractError("dataset has no labels to count")
        return np.bincount(arr, minlength=self.schema.n_classes)

    def record(self, i: int) -> FlowRecord:
        label = int(self.labels[i]) if self.labels is not None else None
        return FlowRecord(self.continuous[i], self.categorical[i], label)

    def subset(self, indices: np.ndarray | list[int]) -> "Dataset":
        idx = np.asarray(indices, dtype=np.int64)
        return Dataset(
            schema=self.schema,
            continuous=self.continuous[idx],
            categorical=self.categorical[idx],
            labels=None if self.labels is None else self.labels[idx],
            hidden_labels=None if self.hidden_labels is None else self.hidden_labels[idx],
            provenance=self.provenance,
            record_provenance=(
                None if self.record_provenance is None else self.record_provenance[idx]
            ),
        )

    def with_labels(self, labels: np.ndarray) -> "Dataset":
        """Copy of this dataset with public labels attached."""
        return Dataset(
            schema=self.schema,
            continuous=self.continuous,
            categorical=self.categorical,
            labels=np.asarray(labels, dtype=np.int64),
            hidden_labels=self.hidden_labels,
            provenance=self.provenance,
            record_provenance=self.record_provenance,
        )


def concat(parts: list[Dataset], provenance: str = "augmented") -> Dataset:
    """Concatenate datasets sharing a schema, preserving per-record provenance."""
    if not parts:
        raise EmptyDatasetError("nothing to concatenate")
    schema = parts[0].schema
    for p in parts[1:]:
        if p.schema != schema:
            raise SchemaError("cannot concatenate datasets with different schemas")
    labels = None
    if all(p.labeled for p in parts):
        labels = np.concatenate([p.labels for p in parts])
    rec_prov = np.concatenate(
        [
            p.record_provenance
            if p.record_provenance is not None
            else np.full(len(p), p.provenance, dtype="<U9")
            for p in parts
        ]
    )
    return Dataset(
        schema=schema,
        continuous=np.concatenate([p.continuous for p in parts]),
        categorical=np.concatenate([p.categorical for p in parts]),
        labels=labels,
        provenance=provenance,
        record_provenance=rec_prov,
    )


# ---------------------------------------------------------------------------
# CSV ingestion / export
# ---------------------------------------------------------------------------


def load_csv(path: str | Path, schema: FeatureSchema, label_mode: str) -> Dataset:
    """Load a flow table from CSV, validating against the schema.

    Rows containing non-finite continuous values are dropped and counted.
    label_mode: "labeled" | "unlabeled-with-hidden-truth" | "unlabeled".
    """
    if label_mode not in LABEL_MODES:
        raise ContractError(f"label_mode must be one of {LABEL_MODES}")
    path = Path(path)
    if not path.exists():
        raise ContractError(f"no such file: {path}")

    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise EmptyDatasetError(f"{path} is empty") from None
        header = [h.strip() for h in header]
        col_of = {name: i for i, name in enumerate(header)}

        for f in schema.features:
            if f.name not in col_of:
                raise SchemaError(f"missing column {f.name!r} in {path}")
        need_label = label_mode in (LABELED, UNLABELED_HIDDEN)
        if need_label and schema.label_column not in col_of:
            raise SchemaError(f"missing label column {schema.label_column!r} in {path}")

        cont_feats = schema.continuous_features
        cat_feats = schema.categorical_features
        cont_cols = [col_of[f.name] for f in cont_feats]
        cat_cols = [col_of[f.name] for f in cat_feats]
        state_maps = [{s: i for i, s in enumerate(f.states)} for f in cat_feats]
        label_col = col_of.get(schema.label_column)
        class_map = {c: i for i, c in enumerate(schema.classes)}

        cont_rows: list[list[float]] = []
        cat_rows: list[list[int]] = []
        labels: list[int] = []
        dropped = 0
        for row_idx, row in enumerate(reader):
            if not row:
                continue
            try:
                cont = [float(row[c]) for c in cont_cols]
            except ValueError:
                dropped += 1
                continue
            if not all(math.isfinite(v) for v in cont):
                dropped += 1
                continue
            cats = []
            for (c, smap, feat) in zip(cat_cols, state_maps, cat_feats):
                value = row[c].strip()
                if value not in smap:
                    raise VocabularyError(
                        f"row {row_idx}: unknown state {value!r} for feature {feat.name!r}"
                    )
                cats.append(smap[value])
            if need_label:
                raw = row[label_col].strip()
                if raw not in class_map:
                    raise VocabularyError(f"row {row_idx}: unknown class {raw!r}")
                labels.append(class_map[raw])
            cont_rows.append(cont)
            cat_rows.append(cats)

    if not cont_rows:
        raise EmptyDatasetError(f"{path} contains no usable rows")
    if dropped:
        logger.info("dropped %d rows with non-finite values from %s", dropped, path)

    n = len(cont_rows)
    label_arr = np.asarray(labels, dtype=np.int64) if need_label else None
    ds = Dataset(
        schema=schema,
        continuous=np.asarray(cont_rows, dtype=np.float64).reshape(n, len(cont_feats)),
        categorical=np.asarray(cat_rows, dtype=np.int64).reshape(n, len(cat_feats)),
        labels=label_arr if label_mode == LABELED else None,
        hidden_labels=label_arr if label_mode == UNLABELED_HIDDEN else None,
        dropped_rows=dropped,
    )
    ds.validate()
    return ds


def write_csv(dataset: Dataset, path: str | Path, include_labels: bool = True) -> None:
    """Write a dataset as CSV; continuous values at full (round-trip) precision."""
    schema = dataset.schema
    with_labels = include_labels and dataset.labeled
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        header = [f.name for f in schema.features]
        if with_labels:
            header.append(schema.label_column)
        writer.writerow(header)
        for i in range(len(dataset)):
            row: list[str] = []
            ci = ki = 0
            for f in schema.features:
                if f.kind == CONTINUOUS:
                    row.append(repr(float(dataset.continuous[i, ci])))
                    ci += 1
                else:
                    row.append(f.states[int(dataset.categorical[i, ki])])
                    ki += 1
            if with_labels:
                row.append(schema.classes[int(dataset.labels[i])])
            writer.writerow(row)


# ---------------------------------------------------------------------------
# Normalization and encoding
# ---------------------------------------------------------------------------


@dataclass
class NormStats:
    """Per-continuous-feature min/max fitted on the training split only."""

    minima: np.ndarray
    maxima: np.ndarray
    constant_features: list[str] = field(default_factory=list)

    def to_json(self) -> dict:
        return {
            "minima": self.minima.tolist(),
            "maxima": self.maxima.tolist(),
            "constant_features": self.constant_features,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "NormStats":
        return cls(
            minima=np.asarray(obj["minima"], dtype=np.float64),
            maxima=np.asarray(obj["maxima"], dtype=np.float64),
            constant_features=list(obj["constant_features"]),
        )


def normalize(train: Dataset, others: list[Dataset]) -> tuple[Dataset, list[Dataset], NormStats]:
    """Min-max scale continuous features, fitting the map on `train` only.

    The same affine map is applied to `others`; drifted values may land
    outside [0, 1]. Constant training features map to 0 and are flagged.
    """
    if not train.labeled:
        raise ContractError("normalization must be fitted on a labeled training set")
    if len(train) == 0:
        raise EmptyDatasetError("cannot fit normalization on an empty dataset")

    minima = train.continuous.min(axis=0)
    maxima = train.continuous.max(axis=0)
    span = maxima - minima
    constant = span == 0
    names = [f.name for f in train.schema.continuous_features]
    flagged = [names[i] for i in np.flatnonzero(constant)]
    if flagged:
        logger.warning("constant training features mapped to 0: %s", ", ".join(flagged))
    safe_span = np.where(constant, 1.0, span)

    def apply(ds: Dataset) -> Dataset:
        scaled = (ds.continuous - minima) / safe_span
        if constant.any():
            scaled[:, constant] = 0.0
        return Dataset(
            schema=ds.schema,
            continuous=scaled,
            categorical=ds.categorical,
            labels=ds.labels,
            hidden_labels=ds.hidden_labels,
            provenance=ds.provenance,
            record_provenance=ds.record_provenance,
        )

    stats = NormStats(minima=minima, maxima=maxima, constant_features=flagged)
    return apply(train), [apply(d) for d in others], stats


# A full state flip moves sqrt(2) in plain one-hot coordinates while a
# full-range continuous move (after min-max scaling) moves 1; this factor
# puts the two on equal footing for distance-based consumers.
ONEHOT_SCALE = 1.0 / math.sqrt(2.0)


def encode_features(dataset: Dataset, onehot_scale: float = ONEHOT_SCALE) -> np.ndarray:
    """Encoded design matrix: continuous columns followed by one-hot categoricals.

    Continuous values are taken as stored; normalize first when feeding
    density models or classifiers. One-hot columns carry `onehot_scale`
    instead of 1 so categorical flips and full-range continuous moves are
    commensurate.
    """
    blocks = [dataset.continuous]
    for j, f in enumerate(dataset.schema.categorical_features):
        onehot = np.zeros((len(dataset), len(f.states)), dtype=np.float64)
        if len(dataset):
            onehot[np.arange(len(dataset)), dataset.categorical[:, j]] = onehot_scale
        blocks.append(onehot)
    return np.concatenate(blocks, axis=1) if blocks else np.zeros((len(dataset), 0))


# ---------------------------------------------------------------------------
# Stratified split
# ---------------------------------------------------------------------------


def split(dataset: Dataset, train_fraction: float, seed: int) -> tuple[Dataset, Dataset]:
    """Stratified train/test partition; exact, deterministic per seed.

    Per-class training counts follow the largest-remainder rule so the overall
    train size equals floor(train_fraction * n). Singleton classes go to the
    training side and are reported via a warning.
    """
    if not 0 < train_fraction < 1:
        raise ContractError("train_fraction must lie strictly between 0 and 1")
    if not dataset.labeled:
        raise ContractError("split requires a labeled dataset")
    n = len(dataset)
    if n < 2:
        raise ContractError("need at least 2 records to split")

    rng = np.random.default_rng(seed)
    labels = dataset.labels
    classes = np.unique(labels)
    singletons = []

    per_class_idx = {}
    quotas = {}
    remainders = {}
    for c in classes:
        idx = np.flatnonzero(labels == c)
        per_class_idx[c] = rng.permutation(idx)
        if idx.size == 1:
            singletons.append(int(c))
            quotas[c] = 1
            remainders[c] = -1.0  # already settled
        else:
            exact = train_fraction * idx.size
            quotas[c] = int(math.floor(exact))
            remainders[c] = exact - quotas[c]

    if singletons:
        logger.warning(
            "singleton classes forced into training split: %s",
            ", ".join(dataset.schema.classes[c] for c in singletons),
        )

    target_train = int(math.floor(train_fraction * n))
    deficit = target_train - sum(quotas.values())
    order = sorted(classes, key=lambda c: (-remainders[c], c))
    for c in order:
        if deficit <= 0:
            break
        if quotas[c] < per_class_idx[c].size and remainders[c] >= 0:
            quotas[c] += 1
            deficit -= 1

    train_idx = np.concatenate([per_class_idx[c][: quotas[c]] for c in classes])
    test_idx = np.concatenate([per_class_idx[c][quotas[c]:] for c in classes])
    train_idx.sort()
    test_idx.sort()
    return dataset.subset(train_idx), dataset.subset(test_idx)


# ---------------------------------------------------------------------------
# Synthetic drift benchmark
# ---------------------------------------------------------------------------


@dataclass
class DriftClass:
    """Per-class sampling recipe for the synthetic drift benchmark."""

    name: str
    source_count: int
    target_count: int
    mean: list[float]
    cov_scale: float | list[float] = 1.0
    target_shift: list[float] | None = None  # None = no drift for this class
    target_cov_scale: float | list[float] | None = None  # None = same as source
    metadata_probs: dict[str, list[float]] = field(default_factory=dict)
    target_metadata_probs: dict[str, list[float]] = field(default_factory=dict)


@dataclass
class DriftSpec:
    """Recipe for a source/target dataset pair with controlled drift.

    A class with source_count 0 is novel: present only in the target domain.
    Metadata state probabilities default to uniform over each feature's states.
    """

    continuous_features: list[str]
    metadata_features: dict[str, list[str]]  # name -> states
    classes: list[DriftClass]
    benign_class: str | None = None
    seed: int = 0

    def __post_init__(self):
        if len(self.classes) < 2:
            raise ContractError("drift spec needs at least 2 classes")
        d = len(self.continuous_features)
        for c in self.classes:
            if c.source_count < 0 or c.target_count < 0:
                raise ContractError(f"negative count for class {c.name!r}")
            if c.source_count == 0 and c.target_count == 0:
                raise ContractError(f"class {c.name!r} absent from both domains")
            if len(c.mean) != d:
                raise ContractError(f"mean dimension mismatch for class {c.name!r}")
            if c.target_shift is not None:
                if len(c.target_shift) != d:
                    raise ContractError(f"shift dimension mismatch for class {c.name!r}")
                if not all(math.isfinite(v) for v in c.target_shift):
                    raise ContractError(f"non-finite shift for class {c.name!r}")

    def schema(self) -> FeatureSchema:
        features = [Feature(name, CONTINUOUS, unit="normalized") for name in self.continuous_features]
        features += [
            Feature(name, CATEGORICAL, states=tuple(states))
            for name, states in self.metadata_features.items()
        ]
        return FeatureSchema(
            features=tuple(features),
            label_column="label",
            classes=tuple(c.name for c in self.classes),
            benign_class=self.benign_class,
        )

    def to_json(self) -> dict:
        return {
            "continuous_features": self.continuous_features,
            "metadata_features": self.metadata_features,
            "benign_class": self.benign_class,
            "seed": self.seed,
            "classes": [
                {
                    "name": c.name,
                    "source_count": c.source_count,
                    "target_count": c.target_count,
                    "mean": c.mean,
                    "cov_scale": c.cov_scale,
                    "target_shift": c.target_shift,
                    "target_cov_scale": c.target_cov_scale,
                    "metadata_probs": c.metadata_probs,
                    "target_metadata_probs": c.target_metadata_probs,
                }
                for c in self.classes
            ],
        }

    @classmethod
    def from_json(cls, obj: dict) -> "DriftSpec":
        return cls(
            continuous_features=list(obj["continuous_features"]),
            metadata_features={k: list(v) for k, v in obj["metadata_features"].items()},
            classes=[
                DriftClass(
                    name=c["name"],
                    source_count=int(c["source_count"]),
                    target_count=int(c["target_count"]),
                    mean=list(c["mean"]),
                    cov_scale=c.get("cov_scale", 1.0),
                    target_shift=c.get("target_shift"),
                    target_cov_scale=c.get("target_cov_scale"),
                    metadata_probs=c.get("metadata_probs", {}),
                    target_metadata_probs=c.get("target_metadata_probs", {}),
                )
                for c in obj["classes"]
            ],
            benign_class=obj.get("benign_class"),
            seed=int(obj.get("seed", 0)),
        )

    @classmethod
    def load(cls, path: str | Path) -> "DriftSpec":
        with open(path, encoding="utf-8") as fh:
            return cls.from_json(json.load(fh))

    def save(self, path: str | Path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_json(), fh, indent=2, sort_keys=True)


def _sample_domain(
    spec: DriftSpec,
    schema: FeatureSchema,
    target: bool,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Draw one domain. Per-class streams depend only on (seed, class), so a
    zero-shift spec with equal counts yields identical source/target draws."""
    d = len(spec.continuous_features)
    meta_names = list(spec.metadata_features.keys())
    cont_parts, cat_parts, label_parts = [], [], []
    for class_idx, c in enumerate(spec.classes):
        count = c.target_count if target else c.source_count
        if count == 0:
            continue
        rng = np.random.default_rng([spec.seed, class_idx])
        mean = np.asarray(c.mean, dtype=np.float64)
        scale = c.cov_scale
        if target:
            if c.target_shift is not None:
                mean = mean + np.asarray(c.target_shift, dtype=np.float64)
            if c.target_cov_scale is not None:
                scale = c.target_cov_scale
        scale = np.asarray(scale, dtype=np.float64)
        std = np.sqrt(np.broadcast_to(scale, (d,)).astype(np.float64))
        cont = mean + rng.standard_normal((count, d)) * std

        cats = np.zeros((count, len(meta_names)), dtype=np.int64)
        for j, name in enumerate(meta_names):
            states = spec.metadata_features[name]
            probs = c.metadata_probs.get(name)
            if target and name in c.target_metadata_probs:
                probs = c.target_metadata_probs[name]
            if probs is None:
                probs = [1.0 / len(states)] * len(states)
            probs = np.asarray(probs, dtype=np.float64)
            probs = probs / probs.sum()
            cats[:, j] = rng.choice(len(states), size=count, p=probs)

        cont_parts.append(cont)
        cat_parts.append(cats)
        label_parts.append(np.full(count, class_idx, dtype=np.int64))

    return (
        np.concatenate(cont_parts) if cont_parts else np.zeros((0, d)),
        np.concatenate(cat_parts) if cat_parts else np.zeros((0, len(meta_names)), dtype=np.int64),
        np.concatenate(label_parts) if label_parts else np.zeros(0, dtype=np.int64),
    )


def generate_drift_benchmark(spec: DriftSpec) -> tuple[Dataset, Dataset]:
    """Sample the (labeled source, unlabeled-with-hidden-truth target) pair."""
    schema = spec.schema()
    src_cont, src_cat, src_y = _sample_domain(spec, schema, target=False)
    tgt_cont, tgt_cat, tgt_y = _sample_domain(spec, schema, target=True)
    if src_y.size == 0 or tgt_y.size == 0:
        raise ContractError("both domains must contain at least one record")
    x_l = Dataset(schema=schema, continuous=src_cont, categorical=src_cat, labels=src_y)
    x_ul = Dataset(schema=schema, continuous=tgt_cont, categorical=tgt_cat, hidden_labels=tgt_y)
    x_l.validate()
    x_ul.validate()
    return x_l, x_ul

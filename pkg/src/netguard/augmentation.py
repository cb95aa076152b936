"""Conditional synthesis for under-represented attack classes.

Each minority class gets a mixture model over its continuous measurement
features; every mixture component additionally carries an empirical state
distribution per metadata feature, estimated from responsibility-weighted
counts. Sampling draws a component, then measurements from its Gaussian and
metadata states from its categorical tables, so metadata combinations vary
conditioned on the measurement mode. A benign-likeness logistic filter then
discards synthetic rows that drift into benign territory.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .classifier import LogisticModel
from .dataset import Dataset, FeatureSchema, concat, encode_features
from .errors import ContractError, EmptyDatasetError, SchemaError
from .gmm import GmmConfig, GmmParams, _component_log_prob, _logsumexp_rows, fit_gmm

logger = logging.getLogger(__name__)

MINORITY_THRESHOLD = 0.05
JITTER_SCALE = 0.01


@dataclass
class MinorityReport:
    """Class balance of a labeled set and the classes below the threshold."""

    counts: dict[str, int]
    fractions: dict[str, float]
    minority_classes: list[str]
    threshold: float

    def to_json(self) -> dict:
        return {
            "counts": self.counts,
            "fractions": self.fractions,
            "minority_classes": self.minority_classes,
            "threshold": self.threshold,
        }


def identify_minorities(
    dataset: Dataset, threshold: float = MINORITY_THRESHOLD
) -> MinorityReport:
    """Flag classes holding fewer than `threshold` of the labeled records.

    Classes absent from the data are reported with count 0 but not flagged;
    there is nothing to fit a generator on.
    """
    if not dataset.labeled:
        raise ContractError("minority identification needs a labeled dataset")
    if len(dataset) == 0:
        raise EmptyDatasetError("empty dataset")
    counts = dataset.class_counts()
    n = len(dataset)
    names = dataset.schema.classes
    fractions = {name: float(c / n) for name, c in zip(names, counts)}
    minorities = [
        name
        for name, c in zip(names, counts)
        if 0 < c and c / n < threshold
    ]
    return MinorityReport(
        counts={name: int(c) for name, c in zip(names, counts)},
        fractions=fractions,
        minority_classes=minorities,
        threshold=threshold,
    )


@dataclass
class GeneratorConfig:
    components_per_class: int = 3
    seed: int = 0


@dataclass
class ClassGenerator:
    """Fitted sub-model for one class.

    Either a mixture (with per-component metadata tables) or, for classes too
    small to fit, a jitter fallback that resamples the stored records with
    small continuous noise.
    """

    mixture: GmmParams | None
    metadata_tables: list[np.ndarray]  # per metadata feature: (K, n_states)
    fallback_continuous: np.ndarray | None = None
    fallback_categorical: np.ndarray | None = None
    n_fit_samples: int = 0
    reduced_components: bool = False

    @property
    def is_fallback(self) -> bool:
        return self.mixture is None

    def to_json(self) -> dict:
        return {
            "mixture": None if self.mixture is None else self.mixture.to_json(),
            "metadata_tables": [t.tolist() for t in self.metadata_tables],
            "fallback_continuous": (
                None if self.fallback_continuous is None else self.fallback_continuous.tolist()
            ),
            "fallback_categorical": (
                None if self.fallback_categorical is None else self.fallback_categorical.tolist()
            ),
            "n_fit_samples": self.n_fit_samples,
            "reduced_components": self.reduced_components,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "ClassGenerator":
        return cls(
            mixture=None if obj["mixture"] is None else GmmParams.from_json(obj["mixture"]),
            metadata_tables=[np.asarray(t, dtype=np.float64) for t in obj["metadata_tables"]],
            fallback_continuous=(
                None
                if obj["fallback_continuous"] is None
                else np.asarray(obj["fallback_continuous"], dtype=np.float64)
            ),
            fallback_categorical=(
                None
                if obj["fallback_categorical"] is None
                else np.asarray(obj["fallback_categorical"], dtype=np.int64)
            ),
            n_fit_samples=int(obj["n_fit_samples"]),
            reduced_components=bool(obj["reduced_components"]),
        )


@dataclass
class GeneratorModel:
    """Per-minority-class conditional synthesizer."""

    schema: FeatureSchema
    submodels: dict[str, ClassGenerator]
    seed: int = 0
    skipped_classes: list[str] = field(default_factory=list)

    def classes(self) -> list[str]:
        return list(self.submodels.keys())

    def to_json(self) -> dict:
        return {
            "schema": self.schema.to_json(),
            "submodels": {name: sub.to_json() for name, sub in self.submodels.items()},
            "seed": self.seed,
            "skipped_classes": self.skipped_classes,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "GeneratorModel":
        return cls(
            schema=FeatureSchema.from_json(obj["schema"]),
            submodels={
                name: ClassGenerator.from_json(sub) for name, sub in obj["submodels"].items()
            },
            seed=int(obj.get("seed", 0)),
            skipped_classes=list(obj.get("skipped_classes", [])),
        )

    def save(self, path: str | Path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_json(), fh, sort_keys=True)

    @classmethod
    def load(cls, path: str | Path) -> "GeneratorModel":
        with open(path, encoding="utf-8") as fh:
            return cls.from_json(json.load(fh))


def _metadata_tables(
    mixture: GmmParams, cont: np.ndarray, cats: np.ndarray, schema: FeatureSchema
) -> list[np.ndarray]:
    """Responsibility-weighted per-component state distributions."""
    log_m = _component_log_prob(mixture, cont)
    resp = np.exp(log_m - _logsumexp_rows(log_m)[:, None])  # (n, K)
    tables = []
    for j, feat in enumerate(schema.categorical_features):
        onehot = np.zeros((cont.shape[0], len(feat.states)))
        onehot[np.arange(cont.shape[0]), cats[:, j]] = 1.0
        weighted = resp.T @ onehot  # (K, n_states)
        mass = weighted.sum(axis=1, keepdims=True)
        uniform = np.full_like(weighted, 1.0 / len(feat.states))
        tables.append(np.where(mass > 0, weighted / np.where(mass > 0, mass, 1.0), uniform))
    return tables


def fit_generator(
    x_min: Dataset, schema: FeatureSchema, config: GeneratorConfig | None = None
) -> GeneratorModel:
    """Fit one sub-model per class present in the minority slice.

    Classes with fewer samples than requested components get a reduced
    component count (flagged); classes with fewer than 2 samples fall back to
    jittered resampling (flagged and listed in skipped_classes).
    """
    cfg = config or GeneratorConfig()
    if not x_min.labeled:
        raise ContractError("generator fitting needs labeled minority records")
    if len(x_min) == 0:
        raise EmptyDatasetError("no minority records to fit")
    if x_min.schema != schema:
        raise SchemaError("minority slice does not match the provided schema")

    submodels: dict[str, ClassGenerator] = {}
    skipped: list[str] = []
    for class_idx, name in enumerate(schema.classes):
        rows = np.flatnonzero(x_min.labels == class_idx)
        if rows.size == 0:
            continue
        cont = x_min.continuous[rows]
        cats = x_min.categorical[rows]
        class_seed = int(np.random.SeedSequence([cfg.seed, class_idx]).generate_state(1)[0])
        if rows.size < 2:
            logger.warning("class %s has %d sample(s); using jitter fallback", name, rows.size)
            skipped.append(name)
            submodels[name] = ClassGenerator(
                mixture=None,
                metadata_tables=[],
                fallback_continuous=cont,
                fallback_categorical=cats,
                n_fit_samples=int(rows.size),
            )
            continue
        k = min(cfg.components_per_class, rows.size)
        reduced = k < cfg.components_per_class
        if reduced:
            logger.warning("class %s: components reduced to %d (only %d samples)", name, k, rows.size)
        mixture = fit_gmm(cont, k, GmmConfig(seed=class_seed))
        submodels[name] = ClassGenerator(
            mixture=mixture,
            metadata_tables=_metadata_tables(mixture, cont, cats, schema),
            n_fit_samples=int(rows.size),
            reduced_components=reduced,
        )
    return GeneratorModel(schema=schema, submodels=submodels, seed=cfg.seed, skipped_classes=skipped)


def synthesize(
    generator: GeneratorModel, class_name: str, count: int, seed: int = 0
) -> Dataset:
    """Draw `count` schema-valid records labeled with `class_name`.

    Deterministic per (generator, class, count, seed).
    """
    if class_name not in generator.submodels:
        raise ContractError(f"generator has no sub-model for class {class_name!r}")
    if count < 0:
        raise ContractError("count must be non-negative")
    schema = generator.schema
    class_idx = schema.class_index(class_name)
    sub = generator.submodels[class_name]
    rng = np.random.default_rng(seed)
    n_cont = len(schema.continuous_features)
    n_cat = len(schema.categorical_features)

    if count == 0:
        cont = np.zeros((0, n_cont))
        cats = np.zeros((0, n_cat), dtype=np.int64)
    elif sub.is_fallback:
        base = rng.integers(sub.fallback_continuous.shape[0], size=count)
        cont = sub.fallback_continuous[base] + JITTER_SCALE * rng.standard_normal((count, n_cont))
        cats = sub.fallback_categorical[base]
    else:
        mix = sub.mixture
        comps = rng.choice(mix.n_components, size=count, p=mix.weights)
        cont = mix.means[comps] + np.sqrt(mix.variances[comps]) * rng.standard_normal(
            (count, n_cont)
        )
        cats = np.zeros((count, n_cat), dtype=np.int64)
        for j, feat in enumerate(schema.categorical_features):
            table = sub.metadata_tables[j]
            # Inverse-CDF draw per sample against its component's state table.
            cdf = np.cumsum(table[comps], axis=1)
            u = rng.random(count)
            cats[:, j] = np.minimum(
                (u[:, None] > cdf).sum(axis=1), len(feat.states) - 1
            )

    ds = Dataset(
        schema=schema,
        continuous=cont,
        categorical=cats,
        labels=np.full(count, class_idx, dtype=np.int64),
        provenance="synthetic",
    )
    ds.validate()
    return ds


@dataclass
class AugmentationReport:
    """Bookkeeping for one augmentation round."""

    ratio: float
    filter_threshold: float
    generated: dict[str, int] = field(default_factory=dict)
    retained: dict[str, int] = field(default_factory=dict)
    w2: dict[str, float] = field(default_factory=dict)  # per-class fidelity
    flags: list[str] = field(default_factory=list)

    def to_json(self) -> dict:
        return {
            "ratio": self.ratio,
            "filter_threshold": self.filter_threshold,
            "generated": self.generated,
            "retained": self.retained,
            "w2": self.w2,
            "flags": self.flags,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "AugmentationReport":
        return cls(
            ratio=float(obj["ratio"]),
            filter_threshold=float(obj["filter_threshold"]),
            generated=dict(obj.get("generated", {})),
            retained=dict(obj.get("retained", {})),
            w2=dict(obj.get("w2", {})),
            flags=list(obj.get("flags", [])),
        )

    def save(self, path: str | Path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_json(), fh, indent=2, sort_keys=True)


def filter_synthetic(
    synthetic: Dataset, benign_filter: LogisticModel, threshold: float
) -> tuple[Dataset, AugmentationReport]:
    """Keep synthetic records whose benign probability is below `threshold`."""
    if not synthetic.labeled:
        raise ContractError("synthetic batch must be labeled")
    benign = synthetic.schema.benign_index()
    if benign is not None and len(synthetic) and (synthetic.labels == benign).any():
        raise ContractError("synthetic batch must contain only non-benign classes")

    report = AugmentationReport(ratio=float("nan"), filter_threshold=threshold)
    counts = synthetic.class_counts() if len(synthetic) else None
    if counts is not None:
        for name, c in zip(synthetic.schema.classes, counts):
            if c:
                report.generated[name] = int(c)

    if len(synthetic) == 0:
        return synthetic, report
    p_benign = benign_filter.predict_proba(encode_features(synthetic))
    keep = np.flatnonzero(p_benign < threshold)
    retained = synthetic.subset(keep)
    for name, c in zip(synthetic.schema.classes, retained.class_counts()):
        if name in report.generated:
            report.retained[name] = int(c)
    return retained, report


def assemble_training_set(
    x_l: Dataset, x_p_labeled: Dataset, retained_synthetic: Dataset
) -> Dataset:
    """Concatenate original, actively-labeled, and synthetic records."""
    parts = [d for d in (x_l, x_p_labeled, retained_synthetic) if len(d) > 0]
    if not parts:
        raise EmptyDatasetError("nothing to assemble")
    for d in (x_p_labeled, retained_synthetic):
        if d.schema != x_l.schema:
            raise SchemaError("all parts must share the training schema")
        if len(d) and not d.labeled:
            raise ContractError("all parts must be labeled")
    if not x_l.labeled:
        raise ContractError("all parts must be labeled")
    return concat(parts)

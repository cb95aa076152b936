"""Closed-loop adaptation run: train, score, select, label, augment, retrain.

A run is fully described by a RunConfig and a master seed; every stage draws
its own seed from a fixed derivation so stages can be re-run in isolation and
whole runs reproduce bit-identically. With a simulated oracle the loop
completes in-process; in service mode the run parks after selection and the
annotation service resumes it once every queued task is labeled.
"""

from __future__ import annotations

import json
import logging
import time
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from . import augmentation as aug
from .classifier import ClassifierModel, LogisticConfig, MlpConfig, train_logistic, train_mlp
from .dataset import (
    Dataset,
    DriftSpec,
    FeatureSchema,
    concat,
    encode_features,
    generate_drift_benchmark,
    load_csv,
    normalize,
    split,
    write_csv,
)
from .errors import ContractError
from .gmm import GmmConfig, fit_gmm
from .metrics import DriftReport, MetricsReport, class_drift, classification_report, w2_fidelity
from .selection import (
    SelectionReport,
    budget_size,
    clue_select,
    coreset_select,
    informativeness_scores,
    select_priors,
    uncertainty_scores,
)

logger = logging.getLogger(__name__)

STRATEGIES = ("netguard", "uncertainty", "coreset", "clue", "none", "full")

_STAGE_IDS = {
    "benchmark": 0,
    "source_val_split": 1,
    "source_val_mlp": 2,
    "mlp_pre": 3,
    "gmm_source": 4,
    "gmm_target": 5,
    "tie": 6,
    "probe": 7,
    "baseline_cluster": 8,
    "generator": 9,
    "synthesize": 10,
    "logistic": 11,
    "mlp_post": 12,
    "full_split": 13,
}


def stage_seed(master: int, stage: str) -> int:
    """Deterministic per-stage seed fanned out from the master seed."""
    return int(np.random.SeedSequence([master, _STAGE_IDS[stage]]).generate_state(1)[0])


# ---------------------------------------------------------------------------
# Configuration
# ---------------------------------------------------------------------------


@dataclass
class AugmentationSettings:
    enabled: bool = True
    ratio: float = 3.0
    minority_threshold: float = 0.05
    filter_threshold: float = 0.5
    components_per_class: int = 3


@dataclass
class DegradationSettings:
    enabled: bool = True
    probe_size: int = 200
    threshold_ratio: float = 0.9


@dataclass
class RunConfig:
    """Everything needed to reproduce one adaptation round."""

    strategy: str
    budget_fraction: float | None = None
    drift_spec: dict | str | None = None  # inline spec or path to one
    csv: dict | None = None  # {"x_l", "x_ul", "schema", optional "x_ul_truth": bool}
    gmm_components: int = 10
    gmm: GmmConfig = field(default_factory=GmmConfig)
    classifier: MlpConfig = field(default_factory=MlpConfig)
    augmentation: AugmentationSettings = field(default_factory=AugmentationSettings)
    degradation: DegradationSettings = field(default_factory=DegradationSettings)
    oracle_mode: str = "simulated"  # simulated | service
    seed: int = 0
    run_id: str | None = None

    def __post_init__(self):
        if self.strategy not in STRATEGIES:
            raise ContractError(f"unknown strategy {self.strategy!r}")
        if self.strategy not in ("none", "full"):
            if self.budget_fraction is None:
                raise ContractError(f"strategy {self.strategy!r} requires a budget fraction")
        if self.oracle_mode not in ("simulated", "service"):
            raise ContractError("oracle_mode must be 'simulated' or 'service'")
        if (self.drift_spec is None) == (self.csv is None):
            raise ContractError("exactly one of drift_spec / csv must be given")

    def resolved_spec(self) -> DriftSpec | None:
        if self.drift_spec is None:
            return None
        if isinstance(self.drift_spec, (str, Path)):
            return DriftSpec.load(self.drift_spec)
        return DriftSpec.from_json(self.drift_spec)

    def to_json(self) -> dict:
        spec = self.resolved_spec()
        return {
            "strategy": self.strategy,
            "budget_fraction": self.budget_fraction,
            "drift_spec": None if spec is None else spec.to_json(),
            "csv": self.csv,
            "gmm_components": self.gmm_components,
            "gmm": {
                "max_iters": self.gmm.max_iters,
                "tol": self.gmm.tol,
                "variance_floor": self.gmm.variance_floor,
            },
            "classifier": {
                "hidden": list(self.classifier.hidden),
                "epochs": self.classifier.epochs,
                "lr": self.classifier.lr,
                "momentum": self.classifier.momentum,
                "batch_size": self.classifier.batch_size,
                "class_weighting": self.classifier.class_weighting,
            },
            "augmentation": vars(self.augmentation).copy(),
            "degradation": vars(self.degradation).copy(),
            "oracle_mode": self.oracle_mode,
            "seed": self.seed,
            "run_id": self.run_id,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "RunConfig":
        cl = obj.get("classifier", {})
        return cls(
            strategy=obj["strategy"],
            budget_fraction=obj.get("budget_fraction"),
            drift_spec=obj.get("drift_spec"),
            csv=obj.get("csv"),
            gmm_components=int(obj.get("gmm_components", 10)),
            gmm=GmmConfig(**obj.get("gmm", {})),
            classifier=MlpConfig(
                hidden=tuple(cl.get("hidden", (100, 100))),
                epochs=int(cl.get("epochs", 50)),
                lr=float(cl.get("lr", 0.01)),
                momentum=float(cl.get("momentum", 0.9)),
                batch_size=int(cl.get("batch_size", 128)),
                class_weighting=bool(cl.get("class_weighting", False)),
            ),
            augmentation=AugmentationSettings(**obj.get("augmentation", {})),
            degradation=DegradationSettings(**obj.get("degradation", {})),
            oracle_mode=obj.get("oracle_mode", "simulated"),
            seed=int(obj.get("seed", 0)),
            run_id=obj.get("run_id"),
        )

    @classmethod
    def load(cls, path: str | Path) -> "RunConfig":
        with open(path, encoding="utf-8") as fh:
            return cls.from_json(json.load(fh))


# ---------------------------------------------------------------------------
# Oracle
# ---------------------------------------------------------------------------


class SimulatedOracle:
    """Releases hidden ground truth on request, auditing every reveal."""

    def __init__(self, dataset: Dataset):
        if dataset.hidden_labels is None:
            raise ContractError("dataset carries no hidden ground truth")
        self._labels = dataset.hidden_labels
        self.reveals: dict[str, int] = {}

    def reveal(self, indices: np.ndarray, purpose: str = "selection") -> np.ndarray:
        indices = np.asarray(indices, dtype=np.int64)
        if indices.size and (indices.min() < 0 or indices.max() >= self._labels.shape[0]):
            raise ContractError("oracle index out of range")
        self.reveals[purpose] = self.reveals.get(purpose, 0) + int(indices.size)
        return self._labels[indices].copy()


def simulated_oracle(indices: np.ndarray, x_ul: Dataset) -> np.ndarray:
    """One-shot oracle call: ground-truth labels for the requested indices."""
    return SimulatedOracle(x_ul).reveal(indices)


def degradation_check(pre_metrics: MetricsReport, threshold: float) -> bool:
    """True iff the estimated macro F1 fell strictly below the threshold."""
    return pre_metrics.macro_f1 < threshold


# ---------------------------------------------------------------------------
# Run context and result
# ---------------------------------------------------------------------------


@dataclass
class PipelineContext:
    config: RunConfig
    schema: FeatureSchema
    x_l: Dataset  # raw source, labeled
    x_ul: Dataset  # raw target, unlabeled (hidden truth when simulated)
    x_l_n: Dataset  # normalized
    x_ul_n: Dataset
    x_l_enc: np.ndarray
    x_ul_enc: np.ndarray
    norm_stats: object
    model_pre: ClassifierModel
    degradation: dict | None
    oracle: SimulatedOracle | None
    stage_seconds: dict[str, float] = field(default_factory=dict)


@dataclass
class RunResult:
    run_id: str
    strategy: str
    adapted: bool
    pre_metrics: MetricsReport | None
    post_metrics: MetricsReport | None
    selection: SelectionReport | None
    augmentation: aug.AugmentationReport | None
    drift: DriftReport | None
    degradation: dict | None
    oracle_audit: dict[str, int]
    n_eval: int
    stage_seconds: dict[str, float]
    model_post: ClassifierModel | None = None

    def to_json(self, include_timing: bool = True) -> dict:
        out = {
            "run_id": self.run_id,
            "strategy": self.strategy,
            "adapted": self.adapted,
            "pre_metrics": None if self.pre_metrics is None else self.pre_metrics.to_json(),
            "post_metrics": None if self.post_metrics is None else self.post_metrics.to_json(),
            "selection": None if self.selection is None else self.selection.to_json(),
            "augmentation": None if self.augmentation is None else self.augmentation.to_json(),
            "drift": None if self.drift is None else self.drift.to_json(),
            "degradation": self.degradation,
            "oracle_audit": self.oracle_audit,
            "n_eval": self.n_eval,
        }
        if include_timing:
            out["stage_seconds"] = self.stage_seconds
        return out


class ParkedRun(Exception):
    """Raised (and caught by callers) when a service-mode run awaits labels."""

    def __init__(self, run_dir: Path, run_id: str):
        super().__init__(f"run {run_id} parked at {run_dir}, awaiting labels")
        self.run_dir = run_dir
        self.run_id = run_id


# ---------------------------------------------------------------------------
# Stages
# ---------------------------------------------------------------------------


def _timed(timers: dict, name: str, fn, *args, **kwargs):
    start = time.perf_counter()
    out = fn(*args, **kwargs)
    timers[name] = timers.get(name, 0.0) + time.perf_counter() - start
    return out


def _evaluate(
    model: ClassifierModel, x_enc: np.ndarray, y_true: np.ndarray, schema: FeatureSchema
) -> MetricsReport:
    to_schema = np.asarray([schema.class_index(c) for c in model.classes], dtype=np.int64)
    y_pred = to_schema[model.predict(x_enc)]
    benign = schema.benign_index()
    return classification_report(
        y_true,
        y_pred,
        schema.classes,
        benign_class=None if benign is None else schema.classes[benign],
    )


def _resolve_datasets(config: RunConfig) -> tuple[Dataset, Dataset]:
    spec = config.resolved_spec()
    if spec is not None:
        return generate_drift_benchmark(spec)
    csv_cfg = config.csv
    schema = FeatureSchema.load(csv_cfg["schema"])
    x_l = load_csv(csv_cfg["x_l"], schema, "labeled")
    mode = "unlabeled-with-hidden-truth" if csv_cfg.get("x_ul_truth", False) else "unlabeled"
    x_ul = load_csv(csv_cfg["x_ul"], schema, mode)
    return x_l, x_ul


def _prepare(config: RunConfig) -> PipelineContext:
    timers: dict[str, float] = {}
    x_l, x_ul = _timed(timers, "load", _resolve_datasets, config)
    schema = x_l.schema
    x_l_n, (x_ul_n,), norm_stats = _timed(timers, "normalize", normalize, x_l, [x_ul])
    x_l_enc = encode_features(x_l_n)
    x_ul_enc = encode_features(x_ul_n)

    mlp_cfg = replace(config.classifier, seed=stage_seed(config.seed, "mlp_pre"))
    model_pre = _timed(timers, "train_pre", train_mlp, x_l_n, mlp_cfg)

    oracle = SimulatedOracle(x_ul) if x_ul.hidden_labels is not None else None

    degradation = None
    budgeted = config.strategy not in ("none", "full")
    if budgeted and config.degradation.enabled:
        if oracle is None or config.oracle_mode == "service":
            degradation = {"skipped": True, "reason": "no ground truth probe available"}
        else:
            def probe_check():
                val_train, val_hold = split(
                    x_l_n, 0.8, stage_seed(config.seed, "source_val_split")
                )
                val_model = train_mlp(
                    val_train,
                    replace(config.classifier, seed=stage_seed(config.seed, "source_val_mlp")),
                )
                source_val = _evaluate(
                    val_model, encode_features(val_hold), val_hold.labels, schema
                )
                probe_rng = np.random.default_rng(stage_seed(config.seed, "probe"))
                probe_n = min(config.degradation.probe_size, len(x_ul))
                probe_idx = probe_rng.choice(len(x_ul), size=probe_n, replace=False)
                probe_y = oracle.reveal(probe_idx, purpose="probe")
                probe_report = _evaluate(model_pre, x_ul_enc[probe_idx], probe_y, schema)
                threshold = config.degradation.threshold_ratio * source_val.macro_f1
                return {
                    "skipped": False,
                    "source_val_f1": source_val.macro_f1,
                    "probe_f1": probe_report.macro_f1,
                    "probe_size": probe_n,
                    "threshold": threshold,
                    "triggered": degradation_check(probe_report, threshold),
                }

            degradation = _timed(timers, "degradation_probe", probe_check)

    return PipelineContext(
        config=config,
        schema=schema,
        x_l=x_l,
        x_ul=x_ul,
        x_l_n=x_l_n,
        x_ul_n=x_ul_n,
        x_l_enc=x_l_enc,
        x_ul_enc=x_ul_enc,
        norm_stats=norm_stats,
        model_pre=model_pre,
        degradation=degradation,
        oracle=oracle,
        stage_seconds=timers,
    )


def _select(ctx: PipelineContext) -> SelectionReport:
    config = ctx.config
    timers = ctx.stage_seconds
    n_ul = len(ctx.x_ul)
    if config.strategy == "netguard":
        psi_l = _timed(
            timers,
            "gmm_source",
            fit_gmm,
            ctx.x_l_enc,
            config.gmm_components,
            replace(config.gmm, seed=stage_seed(config.seed, "gmm_source")),
        )
        psi_ul = _timed(
            timers,
            "gmm_target",
            fit_gmm,
            ctx.x_ul_enc,
            config.gmm_components,
            replace(config.gmm, seed=stage_seed(config.seed, "gmm_target")),
        )
        scores = informativeness_scores(psi_ul, psi_l, ctx.x_ul_enc)
        return select_priors(
            scores, config.budget_fraction, n_ul, stage_seed(config.seed, "tie"), "netguard"
        )
    if config.strategy == "uncertainty":
        scores = uncertainty_scores(ctx.model_pre, ctx.x_ul_enc)
        return select_priors(
            scores, config.budget_fraction, n_ul, stage_seed(config.seed, "tie"), "uncertainty"
        )
    p = budget_size(config.budget_fraction, n_ul)
    seed = stage_seed(config.seed, "baseline_cluster")
    if config.strategy == "coreset":
        return _timed(timers, "cluster_select", coreset_select, ctx.x_ul_enc, p, seed)
    if config.strategy == "clue":
        return _timed(timers, "cluster_select", clue_select, ctx.model_pre, ctx.x_ul_enc, p, seed)
    raise ContractError(f"strategy {config.strategy!r} does not select priors")


def _finish(
    ctx: PipelineContext,
    selection: SelectionReport,
    labels: np.ndarray,
    out_dir: Path | None,
) -> RunResult:
    """Steps after labeling: update sets, augment, retrain, evaluate."""
    config = ctx.config
    schema = ctx.schema
    timers = ctx.stage_seconds
    labels = np.asarray(labels, dtype=np.int64)
    if labels.shape != selection.selected.shape:
        raise ContractError("one label per selected sample is required")

    selection.fill_class_counts(labels, list(schema.classes))
    x_p = ctx.x_ul_n.subset(selection.selected).with_labels(labels)
    x_l_prime = concat([ctx.x_l_n, x_p], provenance="real")

    augmentation_report = None
    synthetic_batches: list[Dataset] = []
    retained = Dataset(
        schema=schema,
        continuous=np.zeros((0, ctx.x_l_n.continuous.shape[1])),
        categorical=np.zeros((0, ctx.x_l_n.categorical.shape[1]), dtype=np.int64),
        labels=np.zeros(0, dtype=np.int64),
        provenance="synthetic",
    )
    if config.augmentation.enabled:
        settings = config.augmentation
        minority = aug.identify_minorities(x_l_prime, settings.minority_threshold)
        benign_idx = schema.benign_index()
        targets = [
            c
            for c in minority.minority_classes
            if benign_idx is None or schema.class_index(c) != benign_idx
        ]
        augmentation_report = aug.AugmentationReport(
            ratio=settings.ratio, filter_threshold=settings.filter_threshold
        )
        if targets:
            target_idx = [schema.class_index(c) for c in targets]
            member_mask = np.isin(x_l_prime.labels, target_idx)
            x_min = x_l_prime.subset(np.flatnonzero(member_mask))
            generator = _timed(
                timers,
                "fit_generator",
                aug.fit_generator,
                x_min,
                schema,
                aug.GeneratorConfig(
                    components_per_class=settings.components_per_class,
                    seed=stage_seed(config.seed, "generator"),
                ),
            )
            synth_parts = []
            counts_prime = x_l_prime.class_counts()
            for c in targets:
                if c not in generator.submodels:
                    continue
                want = int(settings.ratio * counts_prime[schema.class_index(c)])
                class_seed = int(
                    np.random.SeedSequence(
                        [stage_seed(config.seed, "synthesize"), schema.class_index(c)]
                    ).generate_state(1)[0]
                )
                synth_parts.append(aug.synthesize(generator, c, want, class_seed))
            if synth_parts:
                synthetic = concat(synth_parts, provenance="synthetic")
                synthetic_batches = synth_parts
                if benign_idx is not None:
                    benign_filter = _timed(
                        timers,
                        "train_filter",
                        train_logistic,
                        ctx.x_l_n,
                        LogisticConfig(seed=stage_seed(config.seed, "logistic")),
                    )
                    retained, filter_report = aug.filter_synthetic(
                        synthetic, benign_filter, settings.filter_threshold
                    )
                    augmentation_report.generated = filter_report.generated
                    augmentation_report.retained = filter_report.retained
                else:
                    retained = synthetic
                    augmentation_report.flags.append("no-benign-class-filter-skipped")
                    for name, c in zip(schema.classes, synthetic.class_counts()):
                        if c:
                            augmentation_report.generated[name] = int(c)
                            augmentation_report.retained[name] = int(c)
                for c in targets:
                    real_rows = np.flatnonzero(x_l_prime.labels == schema.class_index(c))
                    synth_rows = np.flatnonzero(retained.labels == schema.class_index(c))
                    if real_rows.size and synth_rows.size:
                        augmentation_report.w2[c] = w2_fidelity(
                            x_l_prime.subset(real_rows), retained.subset(synth_rows)
                        )
            if generator.skipped_classes:
                augmentation_report.flags.append(
                    "jitter-fallback:" + ",".join(generator.skipped_classes)
                )

    assembled = aug.assemble_training_set(ctx.x_l_n, x_p, retained)
    mlp_cfg = replace(config.classifier, seed=stage_seed(config.seed, "mlp_post"))
    model_post = _timed(timers, "train_post", train_mlp, assembled, mlp_cfg)

    eval_mask = np.ones(len(ctx.x_ul), dtype=bool)
    eval_mask[selection.selected] = False
    eval_idx = np.flatnonzero(eval_mask)

    pre_metrics = post_metrics = None
    drift = None
    if ctx.oracle is not None and eval_idx.size:
        y_eval = ctx.x_ul.hidden_labels[eval_idx]
        pre_metrics = _evaluate(ctx.model_pre, ctx.x_ul_enc[eval_idx], y_eval, schema)
        post_metrics = _evaluate(model_post, ctx.x_ul_enc[eval_idx], y_eval, schema)
        drift = _timed(timers, "drift", class_drift, ctx.x_l_n, ctx.x_ul_n)

    result = RunResult(
        run_id=config.run_id or f"run-{config.seed}",
        strategy=config.strategy,
        adapted=True,
        pre_metrics=pre_metrics,
        post_metrics=post_metrics,
        selection=selection,
        augmentation=augmentation_report,
        drift=drift,
        degradation=ctx.degradation,
        oracle_audit=dict(ctx.oracle.reveals) if ctx.oracle is not None else {},
        n_eval=int(eval_idx.size),
        stage_seconds=timers,
        model_post=model_post,
    )
    if out_dir is not None:
        _write_outputs(ctx, result, synthetic_batches, out_dir)
    return result


def _no_adaptation_result(ctx: PipelineContext, out_dir: Path | None) -> RunResult:
    """Strategies/paths that keep the source model: evaluate it and stop."""
    pre_metrics = None
    drift = None
    if ctx.oracle is not None:
        y = ctx.x_ul.hidden_labels
        pre_metrics = _evaluate(ctx.model_pre, ctx.x_ul_enc, y, ctx.schema)
        drift = class_drift(ctx.x_l_n, ctx.x_ul_n)
    result = RunResult(
        run_id=ctx.config.run_id or f"run-{ctx.config.seed}",
        strategy=ctx.config.strategy,
        adapted=False,
        pre_metrics=pre_metrics,
        post_metrics=pre_metrics,
        selection=None,
        augmentation=None,
        drift=drift,
        degradation=ctx.degradation,
        oracle_audit=dict(ctx.oracle.reveals) if ctx.oracle is not None else {},
        n_eval=len(ctx.x_ul),
        stage_seconds=ctx.stage_seconds,
        model_post=ctx.model_pre,
    )
    if out_dir is not None:
        _write_outputs(ctx, result, [], out_dir)
    return result


def _full_adaptation_result(ctx: PipelineContext, out_dir: Path | None) -> RunResult:
    """Upper-bound baseline: train on 70% of the labeled target domain."""
    config = ctx.config
    if ctx.x_ul.hidden_labels is None:
        raise ContractError("full adaptation needs target ground truth")
    labeled_target = ctx.x_ul_n.with_labels(ctx.x_ul.hidden_labels)
    tgt_train, tgt_test = split(labeled_target, 0.7, stage_seed(config.seed, "full_split"))
    mlp_cfg = replace(config.classifier, seed=stage_seed(config.seed, "mlp_post"))
    model_post = _timed(ctx.stage_seconds, "train_post", train_mlp, tgt_train, mlp_cfg)

    test_enc = encode_features(tgt_test)
    pre_metrics = _evaluate(ctx.model_pre, test_enc, tgt_test.labels, ctx.schema)
    post_metrics = _evaluate(model_post, test_enc, tgt_test.labels, ctx.schema)
    result = RunResult(
        run_id=config.run_id or f"run-{config.seed}",
        strategy="full",
        adapted=True,
        pre_metrics=pre_metrics,
        post_metrics=post_metrics,
        selection=None,
        augmentation=None,
        drift=class_drift(ctx.x_l_n, ctx.x_ul_n),
        degradation=ctx.degradation,
        oracle_audit={},
        n_eval=len(tgt_test),
        stage_seconds=ctx.stage_seconds,
        model_post=model_post,
    )
    if out_dir is not None:
        _write_outputs(ctx, result, [], out_dir)
    return result


# ---------------------------------------------------------------------------
# Output directory layout
# ---------------------------------------------------------------------------


def _dump(obj: dict, path: Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)


def _write_outputs(
    ctx: PipelineContext,
    result: RunResult,
    synthetic_batches: list[Dataset],
    out_dir: Path,
) -> None:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    _dump(ctx.config.to_json(), out_dir / "config.json")
    if result.selection is not None:
        result.selection.save(out_dir / "selection.json")
    if result.pre_metrics is not None:
        result.pre_metrics.save(out_dir / "metrics_pre.json")
    if result.post_metrics is not None:
        result.post_metrics.save(out_dir / "metrics_post.json")
    if result.drift is not None:
        result.drift.save(out_dir / "drift.json")
    if result.augmentation is not None:
        result.augmentation.save(out_dir / "augmentation.json")
    ctx.model_pre.save(out_dir / "model_pre.json")
    if result.model_post is not None:
        result.model_post.save(out_dir / "model_post.json")
    for batch in synthetic_batches:
        if len(batch):
            name = ctx.schema.classes[int(batch.labels[0])].replace(" ", "_").lower()
            write_csv(batch, out_dir / f"synthetic_{name}.csv")
    _dump(result.to_json(), out_dir / "result.json")
    _dump({"status": "completed", "run_id": result.run_id}, out_dir / "state.json")


# ---------------------------------------------------------------------------
# Entry points
# ---------------------------------------------------------------------------


def run(config: RunConfig, out_dir: str | Path | None = None) -> RunResult:
    """Execute one adaptation round.

    In service mode the run parks after selection (raising ParkedRun with the
    run directory); the annotation service resumes it via `resume_run`.
    """
    out_path = Path(out_dir) if out_dir is not None else None
    ctx = _prepare(config)

    if config.strategy == "none":
        return _no_adaptation_result(ctx, out_path)
    if config.strategy == "full":
        return _full_adaptation_result(ctx, out_path)

    if ctx.degradation is not None and not ctx.degradation.get("skipped", False):
        if not ctx.degradation["triggered"]:
            logger.info("no degradation detected; skipping adaptation")
            return _no_adaptation_result(ctx, out_path)

    selection = _select(ctx)

    if config.oracle_mode == "service":
        if out_path is None:
            raise ContractError("service mode requires an output directory")
        _park(ctx, selection, out_path)
        raise ParkedRun(out_path, config.run_id or f"run-{config.seed}")

    if ctx.oracle is None:
        raise ContractError("simulated oracle mode requires hidden ground truth")
    labels = ctx.oracle.reveal(selection.selected, purpose="selection")
    return _finish(ctx, selection, labels, out_path)


def _park(ctx: PipelineContext, selection: SelectionReport, out_dir: Path) -> None:
    """Persist everything a later resume needs, bit-exactly."""
    out_dir.mkdir(parents=True, exist_ok=True)
    schema_path = out_dir / "schema.json"
    ctx.schema.save(schema_path)
    write_csv(ctx.x_l, out_dir / "x_l.csv")
    has_truth = ctx.x_ul.hidden_labels is not None
    if has_truth:
        truth = ctx.x_ul.with_labels(ctx.x_ul.hidden_labels)
        write_csv(truth, out_dir / "x_ul.csv")
    else:
        write_csv(ctx.x_ul, out_dir / "x_ul.csv", include_labels=False)

    parked_config = replace(
        ctx.config,
        drift_spec=None,
        csv={
            "x_l": str(out_dir / "x_l.csv"),
            "x_ul": str(out_dir / "x_ul.csv"),
            "schema": str(schema_path),
            "x_ul_truth": has_truth,
        },
    )
    _dump(parked_config.to_json(), out_dir / "config.json")
    selection.save(out_dir / "selection.json")
    ctx.model_pre.save(out_dir / "model_pre.json")
    _dump(ctx.norm_stats.to_json(), out_dir / "norm_stats.json")
    _dump(
        {
            "status": "awaiting-labels",
            "run_id": ctx.config.run_id or f"run-{ctx.config.seed}",
            "n_pending": int(selection.selected.size),
        },
        out_dir / "state.json",
    )


def resume_run(run_dir: str | Path, labels_by_index: dict[int, str]) -> RunResult:
    """Resume a parked run with annotator-provided labels.

    `labels_by_index` maps sample indices (into the parked unlabeled set) to
    class names; every selected index must be covered. The adaptation path is
    identical to the simulated one, so equal label values reproduce the
    simulated run's post model bit for bit.
    """
    run_dir = Path(run_dir)
    config = RunConfig.load(run_dir / "config.json")
    selection = SelectionReport.load(run_dir / "selection.json")
    ctx = _prepare(config)

    labels = np.empty(selection.selected.size, dtype=np.int64)
    for pos, idx in enumerate(selection.selected):
        key = int(idx)
        if key not in labels_by_index:
            raise ContractError(f"missing label for selected sample {key}")
        labels[pos] = ctx.schema.class_index(labels_by_index[key])
    return _finish(ctx, selection, labels, run_dir)

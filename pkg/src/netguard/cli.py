"""Command-line entry points.

Subcommands cover the whole loop: benchmark generation, standalone training
and evaluation, prior selection, augmentation, full adaptation runs, the
annotation service, and report rendering. Exit code 0 on success (including
a parked service-mode run), 2 on contract errors.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import augmentation as aug
from .benchmarks import standard_drift_spec
from .classifier import ClassifierModel, LogisticConfig, MlpConfig, train_logistic, train_mlp
from .dataset import (
    Dataset,
    DriftSpec,
    FeatureSchema,
    NormStats,
    encode_features,
    generate_drift_benchmark,
    load_csv,
    normalize,
    write_csv,
)
from .errors import NetguardError
from .metrics import classification_report
from .pipeline import ParkedRun, RunConfig, run, stage_seed
from . import pipeline, service

logger = logging.getLogger(__name__)


def _apply_norm(ds: Dataset, stats: NormStats) -> Dataset:
    span = stats.maxima - stats.minima
    constant = span == 0
    safe = np.where(constant, 1.0, span)
    scaled = (ds.continuous - stats.minima) / safe
    if constant.any():
        scaled[:, constant] = 0.0
    return Dataset(
        schema=ds.schema,
        continuous=scaled,
        categorical=ds.categorical,
        labels=ds.labels,
        hidden_labels=ds.hidden_labels,
        provenance=ds.provenance,
    )


def _cmd_generate_benchmark(args) -> int:
    spec = standard_drift_spec() if args.standard else DriftSpec.load(args.spec)
    if args.seed is not None:
        spec.seed = args.seed
    x_l, x_ul = generate_drift_benchmark(spec)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    spec.schema().save(out / "schema.json")
    spec.save(out / "spec.json")
    write_csv(x_l, out / "x_l.csv")
    write_csv(x_ul, out / "x_ul.csv", include_labels=False)
    write_csv(x_ul.with_labels(x_ul.hidden_labels), out / "x_ul_truth.csv")
    print(f"wrote benchmark ({len(x_l)} source / {len(x_ul)} target records) to {out}")
    return 0


def _cmd_train(args) -> int:
    schema = FeatureSchema.load(args.schema)
    data = load_csv(args.data, schema, "labeled")
    data_n, _, stats = normalize(data, [])
    cfg = MlpConfig(
        hidden=tuple(int(h) for h in args.hidden.split(",") if h),
        epochs=args.epochs,
        lr=args.lr,
        seed=args.seed,
    )
    model = train_mlp(data_n, cfg)
    payload = {"model": model.to_json(), "norm_stats": stats.to_json()}
    with open(args.out, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, sort_keys=True)
    print(f"trained on {len(data)} records (final loss {model.final_loss:.4f}); saved to {args.out}")
    return 0


def _cmd_evaluate(args) -> int:
    schema = FeatureSchema.load(args.schema)
    with open(args.model, encoding="utf-8") as fh:
        payload = json.load(fh)
    model = ClassifierModel.from_json(payload["model"])
    stats = NormStats.from_json(payload["norm_stats"])
    data = load_csv(args.data, schema, "labeled")
    data_n = _apply_norm(data, stats)
    to_schema = np.asarray([schema.class_index(c) for c in model.classes])
    y_pred = to_schema[model.predict(encode_features(data_n))]
    benign = schema.benign_index()
    report = classification_report(
        data.labels,
        y_pred,
        schema.classes,
        benign_class=None if benign is None else schema.classes[benign],
    )
    print(report.render())
    if args.out:
        report.save(args.out)
    return 0


def _cmd_select(args) -> int:
    config = RunConfig.load(args.config)
    if args.seed is not None:
        config = replace(config, seed=args.seed)
    ctx = pipeline._prepare(config)
    selection = pipeline._select(ctx)
    selection.save(args.out)
    if ctx.oracle is not None:
        labels = ctx.oracle.reveal(selection.selected, purpose="selection")
        selection.fill_class_counts(labels, list(ctx.schema.classes))
        selection.save(args.out)
        drift = pipeline.class_drift(ctx.x_l_n, ctx.x_ul_n)
        print(drift.render(selection_counts=selection.per_class_counts))
    else:
        print(f"selected {selection.selected.size} samples (no ground truth for class counts)")
    print(f"selection written to {args.out}")
    return 0


def _cmd_augment(args) -> int:
    config = RunConfig.load(args.config)
    if args.seed is not None:
        config = replace(config, seed=args.seed)
    ctx = pipeline._prepare(config)
    settings = config.augmentation
    report = aug.identify_minorities(ctx.x_l_n, settings.minority_threshold)
    benign = ctx.schema.benign_index()
    targets = [
        c for c in report.minority_classes
        if benign is None or ctx.schema.class_index(c) != benign
    ]
    if not targets:
        print("no minority classes below threshold; nothing to augment")
        return 0
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    gen = aug.fit_generator(
        ctx.x_l_n.subset(
            np.flatnonzero(np.isin(ctx.x_l_n.labels, [ctx.schema.class_index(c) for c in targets]))
        ),
        ctx.schema,
        aug.GeneratorConfig(settings.components_per_class, stage_seed(config.seed, "generator")),
    )
    benign_filter = None
    if benign is not None:
        benign_filter = train_logistic(ctx.x_l_n, LogisticConfig(seed=stage_seed(config.seed, "logistic")))
    counts = ctx.x_l_n.class_counts()
    for name in targets:
        if name not in gen.submodels:
            continue
        want = int(settings.ratio * counts[ctx.schema.class_index(name)])
        synth = aug.synthesize(gen, name, want, stage_seed(config.seed, "synthesize"))
        if benign_filter is not None:
            synth, frag = aug.filter_synthetic(synth, benign_filter, settings.filter_threshold)
            print(f"{name}: generated {frag.generated.get(name, 0)}, retained {frag.retained.get(name, 0)}")
        else:
            print(f"{name}: generated {len(synth)} (no benign filter)")
        write_csv(synth, out / f"synthetic_{name.replace(' ', '_').lower()}.csv")
    gen.save(out / "generator.json")
    print(f"synthetic batches written to {out}")
    return 0


def _cmd_run(args) -> int:
    config = RunConfig.load(args.config)
    if args.seed is not None:
        config = replace(config, seed=args.seed)
    if args.strategy is not None:
        config = replace(config, strategy=args.strategy)
    if args.budget is not None:
        config = replace(config, budget_fraction=args.budget)
    try:
        result = run(config, out_dir=args.out)
    except ParkedRun as parked:
        print(f"run {parked.run_id} is awaiting labels; serve it with:")
        print(f"  netguard serve --run-dir {parked.run_dir}")
        return 0
    if result.pre_metrics is not None and result.post_metrics is not None:
        print("before adaptation:")
        print(result.pre_metrics.render())
        print("after adaptation:")
        print(result.post_metrics.render())
    print(f"artifacts written to {args.out}")
    return 0


def _cmd_serve(args) -> int:
    service.serve(
        run_dirs=args.run_dir,
        host=args.host,
        port=args.port,
        journal_dir=args.journal_dir,
        console_dir=args.console_dir,
        allow_relabel=args.allow_relabel,
    )
    return 0


def _cmd_report(args) -> int:
    run_dir = Path(args.run_dir)
    result_path = run_dir / "result.json"
    if not result_path.exists():
        raise NetguardError(f"no result.json under {run_dir}")
    with open(result_path, encoding="utf-8") as fh:
        result = json.load(fh)
    if result.get("drift"):
        drift = pipeline.DriftReport.from_json(result["drift"])
        counts = (result.get("selection") or {}).get("per_class_counts")
        print("class drift:")
        print(drift.render(selection_counts=counts))
        print()
    for phase in ("pre", "post"):
        payload = result.get(f"{phase}_metrics")
        if payload:
            print(f"{phase}-adaptation metrics:")
            print(pipeline.MetricsReport.from_json(payload).render())
            print()
    if result.get("augmentation"):
        print("augmentation:")
        print(json.dumps(result["augmentation"], indent=2, sort_keys=True))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="netguard", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate-benchmark", help="sample a drift benchmark to CSV")
    p.add_argument("--spec", help="DriftSpec JSON path")
    p.add_argument("--standard", action="store_true", help="use the shipped benchmark spec")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=_cmd_generate_benchmark)

    p = sub.add_parser("train", help="train the flow classifier on a labeled CSV")
    p.add_argument("--data", required=True)
    p.add_argument("--schema", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--hidden", default="100,100")
    p.add_argument("--epochs", type=int, default=50)
    p.add_argument("--lr", type=float, default=0.01)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(fn=_cmd_train)

    p = sub.add_parser("evaluate", help="score a trained model on a labeled CSV")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--schema", required=True)
    p.add_argument("--out")
    p.set_defaults(fn=_cmd_evaluate)

    p = sub.add_parser("select", help="score and select priors under a budget")
    p.add_argument("--config", required=True)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=_cmd_select)

    p = sub.add_parser("augment", help="synthesize minority-class samples")
    p.add_argument("--config", required=True)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=_cmd_augment)

    p = sub.add_parser("run", help="execute one closed-loop adaptation round")
    p.add_argument("--config", required=True)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--strategy", choices=pipeline.STRATEGIES, default=None)
    p.add_argument("--budget", type=float, default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=_cmd_run)

    p = sub.add_parser("serve", help="serve the annotation queue for parked runs")
    p.add_argument("--run-dir", action="append", required=True)
    p.add_argument("--host", default=os.environ.get("NETGUARD_HOST", "127.0.0.1"))
    p.add_argument("--port", type=int, default=int(os.environ.get("NETGUARD_PORT", "8787")))
    p.add_argument("--journal-dir", default=os.environ.get("NETGUARD_JOURNAL_DIR"))
    p.add_argument("--console-dir", default=os.environ.get("NETGUARD_CONSOLE_DIR"))
    p.add_argument("--allow-relabel", action="store_true")
    p.set_defaults(fn=_cmd_serve)

    p = sub.add_parser("report", help="render tables from a finished run directory")
    p.add_argument("--run-dir", required=True)
    p.set_defaults(fn=_cmd_report)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )
    try:
        return args.fn(args)
    except NetguardError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())

"""Build the live-service fixture for the console end-to-end test.

Writes, under the given directory:
  sim/     a completed simulated-oracle run
  parked/  the same run parked in service mode (10-task queue)
  truth.json   sample index -> true class name for every queued task
  meta.json    run id and class vocabulary
"""

import json
import sys
from pathlib import Path

from netguard.classifier import MlpConfig
from netguard.dataset import DriftClass, DriftSpec, generate_drift_benchmark
from netguard.pipeline import (
    AugmentationSettings,
    DegradationSettings,
    ParkedRun,
    RunConfig,
    run,
)


def console_spec():
    return DriftSpec(
        continuous_features=["f0", "f1", "f2"],
        metadata_features={"proto": ["tcp", "udp"]},
        classes=[
            DriftClass("benign", 300, 120, [0.0, 0.0, 0.0], 1.0,
                       metadata_probs={"proto": [0.9, 0.1]}),
            DriftClass("dos", 150, 60, [6.0, 0.0, 0.0], 1.0,
                       metadata_probs={"proto": [0.8, 0.2]}),
            DriftClass("novel", 0, 20, [0.0, 7.0, 7.0], 1.0,
                       metadata_probs={"proto": [0.7, 0.3]}),
        ],
        benign_class="benign",
        seed=21,
    )


def config(oracle_mode):
    return RunConfig(
        strategy="netguard",
        budget_fraction=0.05,  # 10 of the 200 target flows
        drift_spec=console_spec().to_json(),
        gmm_components=4,
        classifier=MlpConfig(hidden=(16,), epochs=15, seed=0),
        augmentation=AugmentationSettings(ratio=3.0),
        degradation=DegradationSettings(enabled=False),
        oracle_mode=oracle_mode,
        seed=21,
        run_id="console-e2e",
    )


def main(base: Path):
    base.mkdir(parents=True, exist_ok=True)
    sim_result = run(config("simulated"), out_dir=base / "sim")

    try:
        run(config("service"), out_dir=base / "parked")
        raise AssertionError("service-mode run should have parked")
    except ParkedRun:
        pass

    spec = console_spec()
    schema = spec.schema()
    _, x_ul = generate_drift_benchmark(spec)
    truth = {
        int(idx): schema.classes[int(x_ul.hidden_labels[idx])]
        for idx in sim_result.selection.selected
    }
    (base / "truth.json").write_text(json.dumps(truth, sort_keys=True))
    (base / "meta.json").write_text(
        json.dumps({"run_id": "console-e2e", "classes": list(schema.classes)})
    )
    print(f"fixture ready under {base} ({len(truth)} tasks)")


if __name__ == "__main__":
    main(Path(sys.argv[1]))

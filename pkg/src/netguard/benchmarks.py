"""Shipped desk-scale benchmarks.

`standard_drift_spec` loads the fixed six-class benchmark used by the
regression suite: moderate benign drift, two heavily drifted minority attack
classes, and one novel class present only in the target domain.

`novel_cluster_spec` builds the selection fixture with a target-only cluster
far (>= 5 sigma) from every source component.
"""

from __future__ import annotations

import json
from importlib import resources

from .dataset import DriftClass, DriftSpec

STANDARD_SPEC_RESOURCE = "standard_drift.json"


def standard_drift_spec() -> DriftSpec:
    """The in-repo drift benchmark (fixed seed 7)."""
    payload = (
        resources.files("netguard") / "data" / STANDARD_SPEC_RESOURCE
    ).read_text(encoding="utf-8")
    return DriftSpec.from_json(json.loads(payload))


def novel_cluster_spec(
    seed: int = 0,
    cluster_size: int = 30,
    cluster_offset: float = 8.0,
) -> DriftSpec:
    """Two stationary source classes plus one far target-only cluster.

    With unit variances the cluster sits >= 5 sigma from both source
    components, so every cluster point outscores every on-distribution point
    under the density-difference criterion.
    """
    d = 4
    return DriftSpec(
        continuous_features=[f"f{i}" for i in range(d)],
        metadata_features={},
        classes=[
            DriftClass(
                name="benign",
                source_count=600,
                target_count=400,
                mean=[0.0] * d,
                cov_scale=1.0,
            ),
            DriftClass(
                name="attack",
                source_count=300,
                target_count=200,
                mean=[3.0, 0.0, 0.0, 0.0],
                cov_scale=1.0,
            ),
            DriftClass(
                name="novel",
                source_count=0,
                target_count=cluster_size,
                mean=[cluster_offset] * d,
                cov_scale=1.0,
            ),
        ],
        benign_class="benign",
        seed=seed,
    )

import numpy as np
import pytest

from netguard.dataset import Dataset, Feature, FeatureSchema


@pytest.fixture
def flow_schema():
    """Small mixed schema: 3 continuous features, 2 categorical, 3 classes."""
    return FeatureSchema(
        features=(
            Feature("pkt_size", "continuous", unit="bytes"),
            Feature("duration", "continuous", unit="s"),
            Feature("rate", "continuous", unit="pkt/s"),
            Feature("protocol", "categorical", states=("http", "ftp", "ssh")),
            Feature("flag", "categorical", states=("syn", "ack")),
        ),
        label_column="label",
        classes=("benign", "dos", "botnet"),
        benign_class="benign",
    )


def make_dataset(schema, n, seed=0, labels=None, hidden=False):
    """Random schema-valid dataset; labels drawn uniformly unless given."""
    rng = np.random.default_rng(seed)
    n_cont = len(schema.continuous_features)
    cont = rng.normal(0.5, 0.2, size=(n, n_cont))
    cats = np.column_stack(
        [rng.integers(len(f.states), size=n) for f in schema.categorical_features]
    ) if schema.categorical_features else np.zeros((n, 0), dtype=np.int64)
    if labels is None:
        labels = rng.integers(schema.n_classes, size=n)
    labels = np.asarray(labels, dtype=np.int64)
    if hidden:
        return Dataset(schema=schema, continuous=cont, categorical=cats, hidden_labels=labels)
    return Dataset(schema=schema, continuous=cont, categorical=cats, labels=labels)


@pytest.fixture
def make_flow_dataset(flow_schema):
    def _make(n, seed=0, labels=None, hidden=False):
        return make_dataset(flow_schema, n, seed=seed, labels=labels, hidden=hidden)

    return _make

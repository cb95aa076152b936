import numpy as np
import pytest

from netguard.benchmarks import novel_cluster_spec, standard_drift_spec
from netguard.dataset import (
    Dataset,
    DriftClass,
    DriftSpec,
    Feature,
    FeatureSchema,
    encode_features,
    generate_drift_benchmark,
    load_csv,
    normalize,
    split,
    write_csv,
)
from netguard.errors import (
    ContractError,
    EmptyDatasetError,
    SchemaError,
    VocabularyError,
)

from conftest import make_dataset


def write_lines(path, lines):
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


class TestLoadCsv:
    def test_basic_labeled_parse(self, flow_schema, tmp_path):
        f = tmp_path / "flows.csv"
        write_lines(f, [
            "pkt_size,duration,rate,protocol,flag,label",
            "100.0,0.5,20.0,http,syn,benign",
            "900.0,3.0,5.5,ftp,ack,dos",
            "40.0,0.1,80.0,ssh,syn,botnet",
        ])
        ds = load_csv(f, flow_schema, "labeled")
        assert len(ds) == 3
        assert ds.labels.tolist() == [0, 1, 2]
        assert ds.categorical[:, 0].tolist() == [0, 1, 2]
        assert ds.continuous[1, 0] == 900.0

    def test_infinity_row_dropped_and_counted(self, flow_schema, tmp_path):
        f = tmp_path / "flows.csv"
        write_lines(f, [
            "pkt_size,duration,rate,protocol,flag,label",
            "100.0,0.5,20.0,http,syn,benign",
            "Infinity,3.0,5.5,ftp,ack,dos",
            "40.0,NaN,80.0,ssh,syn,botnet",
            "41.0,0.2,81.0,ssh,syn,botnet",
        ])
        ds = load_csv(f, flow_schema, "labeled")
        assert len(ds) == 2
        assert ds.dropped_rows == 2

    def test_cic_style_column_names_accepted(self, tmp_path):
        schema = FeatureSchema(
            features=(
                Feature("PSH Flag Count", "continuous"),
                Feature("Active Mean", "continuous"),
                Feature("Fwd IAT Mean", "continuous"),
            ),
            label_column="Label",
            classes=("Benign", "Infiltration"),
        )
        f = tmp_path / "cic.csv"
        write_lines(f, [
            "PSH Flag Count,Active Mean,Fwd IAT Mean,Label",
            "0.16,20.76,0.33,Infiltration",
            "0.0,1.5,0.1,Benign",
        ])
        ds = load_csv(f, schema, "labeled")
        assert len(ds) == 2
        assert ds.schema.features[0].name == "PSH Flag Count"

    def test_missing_column_is_schema_error(self, flow_schema, tmp_path):
        f = tmp_path / "flows.csv"
        write_lines(f, ["pkt_size,duration,protocol,flag,label", "1,2,http,syn,benign"])
        with pytest.raises(SchemaError):
            load_csv(f, flow_schema, "labeled")

    def test_unknown_state_reports_row_index(self, flow_schema, tmp_path):
        f = tmp_path / "flows.csv"
        write_lines(f, [
            "pkt_size,duration,rate,protocol,flag,label",
            "100.0,0.5,20.0,http,syn,benign",
            "100.0,0.5,20.0,gopher,syn,benign",
        ])
        with pytest.raises(VocabularyError, match="row 1"):
            load_csv(f, flow_schema, "labeled")

    def test_empty_file(self, flow_schema, tmp_path):
        f = tmp_path / "flows.csv"
        f.write_text("", encoding="utf-8")
        with pytest.raises(EmptyDatasetError):
            load_csv(f, flow_schema, "labeled")

    def test_hidden_truth_mode(self, flow_schema, tmp_path):
        f = tmp_path / "flows.csv"
        write_lines(f, [
            "pkt_size,duration,rate,protocol,flag,label",
            "100.0,0.5,20.0,http,syn,dos",
        ])
        ds = load_csv(f, flow_schema, "unlabeled-with-hidden-truth")
        assert ds.labels is None
        assert ds.hidden_labels.tolist() == [1]

    def test_round_trip_bit_exact(self, flow_schema, tmp_path, make_flow_dataset):
        ds = make_flow_dataset(50, seed=3)
        f = tmp_path / "out.csv"
        write_csv(ds, f)
        back = load_csv(f, flow_schema, "labeled")
        assert np.array_equal(back.continuous, ds.continuous)
        assert np.array_equal(back.categorical, ds.categorical)
        assert np.array_equal(back.labels, ds.labels)


class TestNormalize:
    def test_min_max_mapping(self, flow_schema):
        ds = make_dataset(flow_schema, 3, seed=0)
        ds.continuous[:, 0] = [0.0, 5.0, 10.0]
        out, _, stats = normalize(ds, [])
        assert out.continuous[:, 0].tolist() == [0.0, 0.5, 1.0]
        assert stats.minima[0] == 0.0 and stats.maxima[0] == 10.0

    def test_out_of_range_preserved_on_others(self, flow_schema):
        train = make_dataset(flow_schema, 3, seed=0)
        train.continuous[:, 0] = [0.0, 5.0, 10.0]
        other = make_dataset(flow_schema, 1, seed=1)
        other.continuous[0, 0] = 20.0
        _, (scaled,), _ = normalize(train, [other])
        assert scaled.continuous[0, 0] == 2.0

    def test_constant_feature_flagged_and_zeroed(self, flow_schema):
        train = make_dataset(flow_schema, 3, seed=0)
        train.continuous[:, 1] = 7.0
        out, _, stats = normalize(train, [])
        assert np.all(out.continuous[:, 1] == 0.0)
        assert "duration" in stats.constant_features

    def test_stats_do_not_depend_on_target(self, flow_schema):
        train = make_dataset(flow_schema, 40, seed=0)
        t1 = make_dataset(flow_schema, 40, seed=1)
        t2 = make_dataset(flow_schema, 40, seed=2)
        _, _, s1 = normalize(train, [t1])
        _, _, s2 = normalize(train, [t2])
        assert np.array_equal(s1.minima, s2.minima)
        assert np.array_equal(s1.maxima, s2.maxima)


class TestSplit:
    def test_70_30(self, flow_schema):
        ds = make_dataset(flow_schema, 100, seed=0)
        train, test = split(ds, 0.7, seed=1)
        assert len(train) == 70 and len(test) == 30

    def test_stratified_even(self, flow_schema):
        labels = np.array([0] * 10 + [1] * 10)
        ds = make_dataset(flow_schema, 20, seed=0, labels=labels)
        train, test = split(ds, 0.5, seed=4)
        assert train.class_counts().tolist()[:2] == [5, 5]
        assert test.class_counts().tolist()[:2] == [5, 5]

    def test_deterministic(self, flow_schema):
        ds = make_dataset(flow_schema, 57, seed=0)
        a1, b1 = split(ds, 0.7, seed=9)
        a2, b2 = split(ds, 0.7, seed=9)
        assert np.array_equal(a1.continuous, a2.continuous)
        assert np.array_equal(b1.labels, b2.labels)

    def test_exact_partition(self, flow_schema):
        ds = make_dataset(flow_schema, 53, seed=2)
        train, test = split(ds, 0.66, seed=3)
        assert len(train) + len(test) == 53
        key = lambda d: sorted(map(tuple, np.round(d.continuous, 12)))
        merged = sorted(key(train) + key(test))
        assert merged == key(ds)

    def test_singleton_class_goes_to_train(self, flow_schema):
        labels = np.array([0] * 20 + [1] * 20 + [2])
        ds = make_dataset(flow_schema, 41, seed=0, labels=labels)
        train, test = split(ds, 0.5, seed=0)
        assert train.class_counts()[2] == 1
        assert test.class_counts()[2] == 0

    def test_bad_fraction(self, flow_schema):
        ds = make_dataset(flow_schema, 10, seed=0)
        with pytest.raises(ContractError):
            split(ds, 1.0, seed=0)


class TestEncode:
    def test_one_hot_layout(self, flow_schema, make_flow_dataset):
        from netguard.dataset import ONEHOT_SCALE

        ds = make_flow_dataset(5, seed=0)
        enc = encode_features(ds)
        assert enc.shape == (5, flow_schema.encoded_dim())
        onehot = enc[:, 3:]
        # one active state per categorical feature, at the documented scale
        assert np.allclose(onehot.sum(axis=1), 2.0 * ONEHOT_SCALE)
        assert np.all((onehot == 0) | (onehot == ONEHOT_SCALE))

    def test_empty_dataset(self, flow_schema):
        ds = Dataset(
            schema=flow_schema,
            continuous=np.zeros((0, 3)),
            categorical=np.zeros((0, 2), dtype=np.int64),
            labels=np.zeros(0, dtype=np.int64),
        )
        assert encode_features(ds).shape == (0, flow_schema.encoded_dim())


class TestDriftBenchmark:
    def test_zero_shift_equal_counts_identical(self):
        spec = DriftSpec(
            continuous_features=["a", "b"],
            metadata_features={"proto": ["x", "y"]},
            classes=[
                DriftClass("benign", 100, 100, [0.0, 0.0]),
                DriftClass("attack", 50, 50, [5.0, 5.0]),
            ],
            benign_class="benign",
            seed=11,
        )
        x_l, x_ul = generate_drift_benchmark(spec)
        assert np.array_equal(x_l.continuous, x_ul.continuous)
        assert np.array_equal(x_l.categorical, x_ul.categorical)
        assert np.array_equal(x_l.labels, x_ul.hidden_labels)

    def test_novel_class_only_in_target(self):
        spec = novel_cluster_spec(seed=3)
        x_l, x_ul = generate_drift_benchmark(spec)
        novel = spec.schema().class_index("novel")
        assert x_l.class_counts()[novel] == 0
        assert x_ul.class_counts(hidden=True)[novel] == 30

    def test_deterministic_per_seed(self):
        a = generate_drift_benchmark(novel_cluster_spec(seed=5))
        b = generate_drift_benchmark(novel_cluster_spec(seed=5))
        assert np.array_equal(a[0].continuous, b[0].continuous)
        assert np.array_equal(a[1].continuous, b[1].continuous)

    def test_standard_spec_shape(self):
        spec = standard_drift_spec()
        assert spec.seed == 7
        assert len(spec.classes) == 6
        x_l, x_ul = generate_drift_benchmark(spec)
        counts = x_l.class_counts()
        fractions = counts / counts.sum()
        minority = [
            spec.classes[i].name
            for i in range(len(spec.classes))
            if 0 < fractions[i] < 0.05
        ]
        assert sorted(minority) == ["botnet", "web_attack"]
        novel = [c.name for c in spec.classes if c.source_count == 0]
        assert novel == ["infiltration"]

    def test_spec_json_round_trip(self, tmp_path):
        spec = standard_drift_spec()
        path = tmp_path / "spec.json"
        spec.save(path)
        back = DriftSpec.load(path)
        assert back.to_json() == spec.to_json()

    def test_invalid_specs(self):
        with pytest.raises(ContractError):
            DriftSpec(["a"], {}, [DriftClass("only", 1, 1, [0.0])])
        with pytest.raises(ContractError):
            DriftSpec(
                ["a"],
                {},
                [
                    DriftClass("x", 1, 1, [0.0], target_shift=[float("inf")]),
                    DriftClass("y", 1, 1, [0.0]),
                ],
            )


class TestSchema:
    def test_duplicate_feature_names_rejected(self):
        with pytest.raises(SchemaError):
            FeatureSchema(
                features=(Feature("a", "continuous"), Feature("a", "continuous")),
                label_column="label",
                classes=("x", "y"),
            )

    def test_benign_detection_case_insensitive(self):
        schema = FeatureSchema(
            features=(Feature("a", "continuous"),),
            label_column="label",
            classes=("Benign", "Attack"),
        )
        assert schema.benign_index() == 0

    def test_validate_catches_bad_categorical(self, flow_schema):
        ds = make_dataset(flow_schema, 4, seed=0)
        ds.categorical[0, 0] = 99
        with pytest.raises(VocabularyError):
            ds.validate()

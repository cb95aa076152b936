import itertools
import math

import numpy as np
import pytest
from scipy import stats

from netguard.dataset import Dataset, DriftClass, DriftSpec, generate_drift_benchmark
from netguard.errors import ContractError, EmptyDatasetError, VocabularyError
from netguard.metrics import (
    class_drift,
    classification_report,
    emd_1d,
    w2_1d,
    w2_fidelity,
)

from conftest import make_dataset


def lcm_expand(values, total):
    """Repeat each sorted sample total/n times: exact common-grid quantiles."""
    values = sorted(values)
    reps = total // len(values)
    return [v for v in values for _ in range(reps)]


def brute_w1(a, b):
    total = math.lcm(len(a), len(b))
    ea, eb = lcm_expand(a, total), lcm_expand(b, total)
    return sum(abs(x - y) for x, y in zip(ea, eb)) / total


def brute_w2(a, b):
    total = math.lcm(len(a), len(b))
    ea, eb = lcm_expand(a, total), lcm_expand(b, total)
    return math.sqrt(sum((x - y) ** 2 for x, y in zip(ea, eb)) / total)


def all_multisets(max_size, values=(0.0, 0.5, 1.0)):
    for size in range(1, max_size + 1):
        yield from itertools.combinations_with_replacement(values, size)


class TestClassificationReport:
    def test_perfect_predictions(self):
        y = np.array([0, 1, 2, 1, 0])
        rep = classification_report(y, y, ["benign", "dos", "scan"])
        assert rep.macro_f1 == 1.0
        assert rep.fnr == 0.0 and rep.fpr == 0.0
        assert rep.accuracy == 1.0

    def test_all_benign_predictor(self):
        y_true = np.array([0] * 50 + [1] * 50)
        y_pred = np.zeros(100, dtype=int)
        rep = classification_report(y_true, y_pred, ["benign", "attack"])
        assert rep.fnr == 1.0
        assert rep.fpr == 0.0
        assert rep.accuracy == 0.5

    def test_matches_brute_force_tally(self):
        rng = np.random.default_rng(0)
        vocab = ["benign", "a", "b"]
        for _ in range(100):
            n = 50
            y_true = rng.integers(3, size=n)
            y_pred = rng.integers(3, size=n)
            rep = classification_report(y_true, y_pred, vocab)

            confusion = [[0] * 3 for _ in range(3)]
            for t, p in zip(y_true, y_pred):
                confusion[t][p] += 1
            assert rep.confusion == confusion

            f1s = []
            for k in range(3):
                support = sum(confusion[k])
                if support == 0:
                    continue
                tp = confusion[k][k]
                fp = sum(confusion[i][k] for i in range(3)) - tp
                fn = support - tp
                f1s.append(2 * tp / (2 * tp + fp + fn) if 2 * tp + fp + fn else 0.0)
            assert rep.macro_f1 == pytest.approx(np.mean(f1s), abs=1e-15)
            assert rep.accuracy == pytest.approx(
                sum(confusion[k][k] for k in range(3)) / n, abs=1e-15
            )

            true_attack = y_true != 0
            pred_attack = y_pred != 0
            if true_attack.any():
                assert rep.fnr == pytest.approx(
                    (true_attack & ~pred_attack).sum() / true_attack.sum()
                )
            if (~true_attack).any():
                assert rep.fpr == pytest.approx(
                    (~true_attack & pred_attack).sum() / (~true_attack).sum()
                )

    def test_macro_is_mean_of_per_class(self):
        rng = np.random.default_rng(1)
        y_true = rng.integers(4, size=200)
        y_pred = rng.integers(4, size=200)
        rep = classification_report(y_true, y_pred, ["w", "x", "y", "z"])
        assert rep.macro_f1 == pytest.approx(np.mean(list(rep.per_class_f1.values())))

    def test_label_outside_vocab(self):
        with pytest.raises(VocabularyError):
            classification_report(np.array([0]), np.array([5]), ["a", "b"])

    def test_empty_inputs(self):
        with pytest.raises(EmptyDatasetError):
            classification_report(np.array([]), np.array([]), ["a"])


class TestEmd1d:
    def test_identical_multisets(self):
        assert emd_1d([1.0, 2.0, 3.0], [3.0, 1.0, 2.0]) == 0.0

    def test_unit_point_masses(self):
        assert emd_1d([0.0], [1.0]) == 1.0

    def test_two_point_case(self):
        assert emd_1d([0.0, 1.0], [0.0, 0.0]) == pytest.approx(0.5, abs=1e-15)

    def test_exhaustive_small_multisets(self):
        sets = list(all_multisets(6))
        for a in sets:
            for b in sets:
                assert emd_1d(a, b) == pytest.approx(brute_w1(a, b), abs=1e-9)

    def test_matches_scipy_on_random_samples(self):
        rng = np.random.default_rng(2)
        for _ in range(20):
            a = rng.normal(size=rng.integers(2, 40))
            b = rng.normal(size=rng.integers(2, 40))
            assert emd_1d(a, b) == pytest.approx(stats.wasserstein_distance(a, b), abs=1e-9)

    def test_symmetry_nonnegativity_triangle(self):
        rng = np.random.default_rng(3)
        for _ in range(50):
            a, b, c = (rng.normal(size=rng.integers(1, 10)) for _ in range(3))
            dab, dba = emd_1d(a, b), emd_1d(b, a)
            assert dab == pytest.approx(dba, abs=1e-12)
            assert dab >= 0
            assert dab <= emd_1d(a, c) + emd_1d(c, b) + 1e-9

    def test_empty_rejected(self):
        with pytest.raises(ContractError):
            emd_1d([], [1.0])


class TestW2:
    def test_identical(self):
        assert w2_1d([0.5, 0.1], [0.1, 0.5]) == 0.0

    def test_unit_point_masses(self):
        assert w2_1d([0.0], [1.0]) == 1.0

    def test_exhaustive_small_multisets(self):
        sets = list(all_multisets(6))
        for a in sets:
            for b in sets:
                assert w2_1d(a, b) == pytest.approx(brute_w2(a, b), abs=1e-9)

    def test_gaussian_mean_shift(self):
        rng = np.random.default_rng(4)
        a = rng.normal(0.0, 1.0, size=5000)
        b = rng.normal(0.1, 1.0, size=5000)
        assert w2_1d(a, b) == pytest.approx(0.1, abs=0.03)

    def test_triangle_and_symmetry(self):
        rng = np.random.default_rng(5)
        for _ in range(50):
            a, b, c = (rng.normal(size=rng.integers(1, 8)) for _ in range(3))
            assert w2_1d(a, b) == pytest.approx(w2_1d(b, a), abs=1e-12)
            assert w2_1d(a, b) <= w2_1d(a, c) + w2_1d(c, b) + 1e-9


class TestW2Fidelity:
    def test_identical_slices(self, flow_schema):
        real = make_dataset(flow_schema, 30, seed=0, labels=np.ones(30, dtype=int))
        assert w2_fidelity(real, real) == 0.0

    def test_mismatched_classes_rejected(self, flow_schema):
        a = make_dataset(flow_schema, 10, seed=0, labels=np.zeros(10, dtype=int))
        b = make_dataset(flow_schema, 10, seed=1, labels=np.ones(10, dtype=int))
        with pytest.raises(ContractError):
            w2_fidelity(a, b)

    def test_empty_rejected(self, flow_schema):
        real = make_dataset(flow_schema, 10, seed=0)
        empty = real.subset([])
        with pytest.raises(EmptyDatasetError):
            w2_fidelity(real, empty)


class TestClassDrift:
    def _pair(self, shifts, counts=None, seed=0):
        counts = counts or {}
        classes = [
            DriftClass(
                name,
                counts.get(name, (400, 400))[0],
                counts.get(name, (400, 400))[1],
                [0.0, 0.0],
                1.0,
                shift,
            )
            for name, shift in shifts.items()
        ]
        spec = DriftSpec(["f0", "f1"], {}, classes, seed=seed)
        return generate_drift_benchmark(spec)

    def test_identical_domains_degenerate(self):
        x_l, x_ul = self._pair({"a": None, "b": None})
        report = class_drift(x_l, x_ul)
        assert report.degenerate
        assert all(v == 0.0 for v in report.raw_emd.values())

    def test_single_shifted_class_normalizes_to_one(self):
        x_l, x_ul = self._pair({"a": None, "b": [3.0, 0.0]})
        report = class_drift(x_l, x_ul)
        assert report.normalized_emd["b"] == 1.0
        assert report.reference_class == "b"
        assert report.normalized_emd["a"] < 0.1

    def test_proportional_shifts(self):
        # Equal source/target draws per class make the shift exact: raw EMD of
        # a class shifted by delta in one feature is delta / n_features.
        x_l, x_ul = self._pair(
            {"base": None, "half": [1.0, 0.0], "full": [2.0, 0.0]},
            counts={"base": (5000, 5000), "half": (5000, 5000), "full": (5000, 5000)},
        )
        report = class_drift(x_l, x_ul)
        assert report.raw_emd["half"] == pytest.approx(0.5, abs=1e-9)
        assert report.raw_emd["full"] == pytest.approx(1.0, abs=1e-9)
        assert report.normalized_emd["half"] == pytest.approx(0.5, abs=0.05)
        assert report.normalized_emd["full"] == 1.0

    def test_absent_class_reported(self):
        classes = [
            DriftClass("a", 100, 100, [0.0, 0.0]),
            DriftClass("novel", 0, 50, [5.0, 5.0]),
        ]
        spec = DriftSpec(["f0", "f1"], {}, classes, seed=1)
        x_l, x_ul = generate_drift_benchmark(spec)
        report = class_drift(x_l, x_ul)
        assert report.absent_classes == ["novel"]
        assert "novel" not in report.normalized_emd

    def test_max_is_one_when_any_positive(self):
        x_l, x_ul = self._pair({"a": None, "b": [0.5, 0.5], "c": [2.0, 0.0]})
        report = class_drift(x_l, x_ul)
        assert max(report.normalized_emd.values()) == 1.0

    def test_render_includes_selection_counts(self):
        x_l, x_ul = self._pair({"a": None, "b": [1.0, 0.0]})
        report = class_drift(x_l, x_ul)
        table = report.render(selection_counts={"a": 3, "b": 9})
        assert "Norm. EMD" in table and "Selected" in table

import numpy as np
import pytest

from facegraph import InvalidInputError, compute_metrics, confusion, format_report
from facegraph.metrics import report_row

from oracles import naive_metrics


class TestConfusion:
    def test_perfect_predictions(self):
        labels = [0, 0, 1, 2, 2, 2]
        matrix = confusion(labels, labels, 3)
        assert np.array_equal(matrix, np.diag([2, 1, 3]))

    def test_all_predicted_zero(self):
        matrix = confusion([0, 1, 2], [0, 0, 0], 3)
        assert matrix[:, 0].sum() == 3
        assert matrix[:, 1:].sum() == 0

    def test_derived_tally(self):
        matrix = confusion([0, 0, 0, 1], [0, 0, 1, 0], 2)
        assert np.array_equal(matrix, [[2, 1], [1, 0]])

    def test_out_of_range_label(self):
        with pytest.raises(InvalidInputError):
            confusion([0, 3], [0, 1], 3)
        with pytest.raises(InvalidInputError):
            confusion([0, 1], [0, -1], 3)

    def test_length_mismatch(self):
        with pytest.raises(InvalidInputError):
            confusion([0, 1], [0], 2)


class TestComputeMetrics:
    def test_recalls_uar_war_fixture(self):
        report = compute_metrics(np.array([[3, 0], [1, 0]]), loss=0.1)
        assert np.array_equal(report.per_class_recall, [1.0, 0.0])
        assert report.uar == 0.5
        assert report.war == 0.75
        assert report.accuracy == 0.75

    def test_macro_f1_fixture(self):
        report = compute_metrics(np.array([[3, 0], [1, 0]]), loss=0.0)
        assert abs(report.macro_f1 - 0.42857142857142855) < 1e-12

    def test_perfect_balanced(self):
        report = compute_metrics(np.diag([5, 5, 5]), loss=0.0)
        assert report.accuracy == report.war == report.uar == 1.0
        assert report.macro_f1 == 1.0

    def test_war_equals_accuracy_exactly(self):
        rng = np.random.default_rng(123)
        for _ in range(200):
            c = int(rng.integers(2, 8))
            matrix = rng.integers(0, 30, size=(c, c))
            if matrix.sum() == 0:
                matrix[0, 0] = 1
            report = compute_metrics(matrix, loss=0.0)
            assert report.war == report.accuracy

    def test_matches_counting_oracle(self):
        rng = np.random.default_rng(7)
        for _ in range(30):
            n = int(rng.integers(1, 1001))
            c = int(rng.integers(2, 11))
            truth = rng.integers(0, c, size=n)
            preds = rng.integers(0, c, size=n)
            report = compute_metrics(confusion(truth, preds, c), loss=0.0)
            want = naive_metrics(truth, preds, c)
            assert report.accuracy == want["accuracy"]
            assert abs(report.uar - want["uar"]) < 1e-12
            assert abs(report.war - want["war"]) < 1e-12
            assert abs(report.macro_f1 - want["macro_f1"]) < 1e-12

    def test_balanced_uar_equals_war(self):
        rng = np.random.default_rng(17)
        for _ in range(20):
            c = int(rng.integers(2, 6))
            per_class = 24
            truth = np.repeat(np.arange(c), per_class)
            preds = rng.integers(0, c, size=c * per_class)
            report = compute_metrics(confusion(truth, preds, c), loss=0.0)
            assert abs(report.uar - report.war) <= 1e-12

    def test_fractions_in_unit_interval(self):
        rng = np.random.default_rng(29)
        for _ in range(50):
            c = int(rng.integers(1, 7))
            matrix = rng.integers(0, 9, size=(c, c))
            if matrix.sum() == 0:
                matrix[0, 0] = 1
            report = compute_metrics(matrix, loss=1.0)
            for value in (report.accuracy, report.macro_f1, report.war, report.uar):
                assert 0.0 <= value <= 1.0
            assert np.all((report.per_class_recall >= 0) & (report.per_class_recall <= 1))

    def test_zero_support_class_excluded_from_uar(self):
        # class 2 never occurs: UAR averages over the two supported classes
        report = compute_metrics(np.array([[2, 0, 0], [0, 1, 1], [0, 0, 0]]), loss=0.0)
        assert report.uar == (1.0 + 0.5) / 2.0

    def test_empty_matrix_rejected(self):
        with pytest.raises(InvalidInputError):
            compute_metrics(np.zeros((2, 2), dtype=int), loss=0.0)
        with pytest.raises(InvalidInputError):
            compute_metrics(np.zeros((0, 0), dtype=int), loss=0.0)


class TestRendering:
    def test_format_report_mentions_all_metrics(self):
        report = compute_metrics(np.array([[3, 0], [1, 0]]), loss=0.25)
        text = format_report(report, class_names=["happy", "sad"])
        for token in ("Acc", "F1-Score", "WAR", "UAR", "happy", "sad"):
            assert token in text

    def test_report_row_percentages(self):
        report = compute_metrics(np.array([[3, 0], [1, 0]]), loss=0.25)
        row = report_row(report)
        assert row["Acc"] == "75.00"
        assert row["WAR"] == "75.00"
        assert row["UAR"] == "50.00"
        assert row["loss"] == "0.250000"

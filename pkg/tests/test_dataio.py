import numpy as np
import pytest

from salp_ensemble import dataio
from salp_ensemble.core import (
    CurveSeries,
    RowSumOutOfTolerance,
    make_labels,
    make_weights,
)
from salp_ensemble.metrics import ClassMetrics, ClassReport, McNemarResult
from salp_ensemble.ssa import OptimizationResult


def write(path, text):
    path.write_text(text, encoding="utf-8")
    return path


class TestLoadPredictions:
    def test_single_row(self, tmp_path):
        p = write(
            tmp_path / "p.csv",
            "sample_id,p0,p1,p2,p3,p4\nimg_001,0.90,0.05,0.03,0.01,0.01\n",
        )
        table = dataio.load_predictions(p)
        assert table.sample_ids == ("img_001",)
        assert table.matrix.data.shape == (1, 5)

    def test_missing_column(self, tmp_path):
        p = write(tmp_path / "p.csv", "sample_id,p0,p1\nimg_001,0.5\n")
        with pytest.raises(dataio.ParseError):
            dataio.load_predictions(p)

    def test_bad_header(self, tmp_path):
        p = write(tmp_path / "p.csv", "id,a,b\nimg,0.5,0.5\n")
        with pytest.raises(dataio.ParseError):
            dataio.load_predictions(p)

    def test_row_sum_violation_propagates(self, tmp_path):
        p = write(tmp_path / "p.csv", "sample_id,p0,p1\nimg_001,0.50,0.48\n")
        with pytest.raises(RowSumOutOfTolerance):
            dataio.load_predictions(p)

    def test_duplicate_id(self, tmp_path):
        p = write(
            tmp_path / "p.csv",
            "sample_id,p0,p1\nimg_001,0.5,0.5\nimg_001,0.4,0.6\n",
        )
        with pytest.raises(dataio.DuplicateSampleId):
            dataio.load_predictions(p)

    def test_round_trip_six_decimals(self, tmp_path):
        rng = np.random.default_rng(0)
        raw = rng.random((12, 5))
        raw = np.round(raw / raw.sum(axis=1, keepdims=True), 6)
        raw[:, -1] = np.round(1.0 - raw[:, :-1].sum(axis=1), 6)
        from salp_ensemble.core import validate_prediction_matrix

        table = dataio.PredictionTable(
            tuple(f"s{i}" for i in range(12)), validate_prediction_matrix(raw)
        )
        dataio.save_predictions(table, tmp_path / "p.csv")
        back = dataio.load_predictions(tmp_path / "p.csv")
        assert back.sample_ids == table.sample_ids
        assert np.array_equal(back.matrix.data, table.matrix.data)


class TestLoadLabels:
    def test_basic(self, tmp_path):
        p = write(tmp_path / "l.csv", "sample_id,label\nimg_001,0\nimg_002,4\n")
        table = dataio.load_labels(p)
        assert table.sample_ids == ("img_001", "img_002")
        assert table.labels.labels.tolist() == [0, 4]

    def test_duplicate_id(self, tmp_path):
        p = write(tmp_path / "l.csv", "sample_id,label\na,0\na,1\n")
        with pytest.raises(dataio.DuplicateSampleId):
            dataio.load_labels(p)

    def test_non_integer_label(self, tmp_path):
        p = write(tmp_path / "l.csv", "sample_id,label\na,x\n")
        with pytest.raises(dataio.ParseError):
            dataio.load_labels(p)


class TestAlignment:
    def make_pair(self, tmp_path):
        labels = write(tmp_path / "l.csv", "sample_id,label\nb,1\na,0\n")
        preds = write(tmp_path / "p.csv", "sample_id,p0,p1\na,0.9,0.1\nb,0.2,0.8\n")
        return dataio.load_labels(labels), dataio.load_predictions(preds)

    def test_order_taken_from_labels(self, tmp_path):
        label_table, pred_table = self.make_pair(tmp_path)
        (aligned,) = dataio.align_to_labels(label_table, [pred_table])
        assert np.allclose(aligned.data, [[0.2, 0.8], [0.9, 0.1]])

    def test_missing_id(self, tmp_path):
        labels = write(tmp_path / "l.csv", "sample_id,label\na,0\nc,1\n")
        preds = write(tmp_path / "p.csv", "sample_id,p0,p1\na,0.9,0.1\nb,0.2,0.8\n")
        with pytest.raises(dataio.UnknownSampleId):
            dataio.align_to_labels(dataio.load_labels(labels), [dataio.load_predictions(preds)])

    def test_extra_id(self, tmp_path):
        labels = write(tmp_path / "l.csv", "sample_id,label\na,0\n")
        preds = write(tmp_path / "p.csv", "sample_id,p0,p1\na,0.9,0.1\nb,0.2,0.8\n")
        with pytest.raises(dataio.UnknownSampleId):
            dataio.align_to_labels(dataio.load_labels(labels), [dataio.load_predictions(preds)])


class TestStratifiedSplit:
    def test_hundred_ids_ten_test(self):
        items = [(f"i{i}", 0) for i in range(100)]
        manifest = dataio.stratified_split(items, 0.1, seed=1)
        assert len(manifest.split_entries("test")) == 10
        assert len(manifest.split_entries("train")) == 90

    def test_same_seed_identical(self):
        items = [(f"i{i}", i % 3) for i in range(50)]
        a = dataio.stratified_split(items, 0.1, seed=7)
        b = dataio.stratified_split(items, 0.1, seed=7)
        assert a == b

    def test_different_seed_differs(self):
        items = [(f"i{i}", 0) for i in range(100)]
        a = dataio.stratified_split(items, 0.1, seed=1)
        b = dataio.stratified_split(items, 0.1, seed=2)
        assert {e.image_path for e in a.split_entries("test")} != {
            e.image_path for e in b.split_entries("test")
        }

    def test_aptos_histogram_gives_366(self):
        # public APTOS class counts; 10% nearest-rounded per class totals 366
        histogram = {0: 1805, 1: 370, 2: 999, 3: 193, 4: 295}
        items = [(f"{label}_{i}", label) for label, count in histogram.items() for i in range(count)]
        manifest = dataio.stratified_split(items, 0.1, seed=0)
        assert len(manifest.split_entries("test")) == 366
        assert len(manifest.entries) == 3662

    def test_multiset_preserved(self):
        items = [(f"i{i}", i % 4) for i in range(37)]
        manifest = dataio.stratified_split(items, 0.25, seed=3)
        assert sorted(e.image_path for e in manifest.entries) == sorted(i for i, _ in items)
        assert len(manifest.split_entries("test")) + len(manifest.split_entries("train")) == 37

    def test_nonempty_class_gets_a_test_sample(self):
        items = [("solo", 2)] + [(f"i{i}", 0) for i in range(20)]
        manifest = dataio.stratified_split(items, 0.1, seed=4)
        test_labels = {e.label for e in manifest.split_entries("test")}
        assert 2 in test_labels

    def test_empty_dataset(self):
        with pytest.raises(dataio.EmptyDataset):
            dataio.stratified_split([], 0.1, seed=0)

    def test_manifest_round_trip(self, tmp_path):
        items = [(f"i{i}", i % 3) for i in range(30)]
        manifest = dataio.stratified_split(items, 0.2, seed=5)
        dataio.save_manifest(manifest, tmp_path / "m.csv")
        back = dataio.load_manifest(tmp_path / "m.csv")
        assert back == manifest


class TestWeightsFile:
    def test_round_trip(self, tmp_path):
        w = make_weights([0.123456789, 1.0, 0.0])
        dataio.save_weights(w, ["a", "b", "c"], tmp_path / "w.csv")
        names, back = dataio.load_weights(tmp_path / "w.csv")
        assert names == ("a", "b", "c")
        assert np.array_equal(back.w, w.w)


class TestReportSerialization:
    def test_curve_three_line_file(self, tmp_path):
        curve = CurveSeries(np.array([[0.0, 0.0], [1.0, 1.0]]), 0.5)
        dataio.save_report(curve, tmp_path / "c.csv")
        lines = (tmp_path / "c.csv").read_text().splitlines()
        assert len(lines) == 3
        assert lines[0].startswith("# summary=")

    def test_curve_round_trip_exact(self, tmp_path):
        rng = np.random.default_rng(1)
        x = np.sort(rng.random(17))
        y = rng.random(17)
        curve = CurveSeries(np.column_stack([x, y]), float(rng.random()))
        dataio.save_report(curve, tmp_path / "c.csv")
        back = dataio.load_curve(tmp_path / "c.csv")
        assert back.summary == curve.summary
        assert np.array_equal(back.points, curve.points)

    def test_reserialization_byte_identical(self, tmp_path):
        curve = CurveSeries(np.array([[0.0, 0.3], [0.7, 1.0]]), 1 / 3)
        dataio.save_report(curve, tmp_path / "a.csv")
        dataio.save_report(curve, tmp_path / "b.csv")
        assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()

    def test_class_report_round_trip(self, tmp_path):
        report = ClassReport(
            per_class=(
                ClassMetrics("Normal", 0.97, 1 / 3, 0.5, 180, ()),
                ClassMetrics("Mild", 0.0, 0.0, 0.0, 0, ("precision_zero_denominator",)),
            ),
            macro_precision=0.485,
            macro_recall=1 / 6,
            macro_f1=0.25,
            accuracy=326 / 366,
        )
        dataio.save_report(report, tmp_path / "r.txt")
        back = dataio.load_class_report(tmp_path / "r.txt")
        assert back == report

    def test_class_report_contains_display_accuracy(self, tmp_path):
        report = ClassReport(
            per_class=(ClassMetrics("a", 1.0, 1.0, 1.0, 5, ()),),
            macro_precision=1.0,
            macro_recall=1.0,
            macro_f1=1.0,
            accuracy=326 / 366,
        )
        dataio.save_report(report, tmp_path / "r.txt")
        assert "accuracy=0.890710\n" in (tmp_path / "r.txt").read_text()

    def test_mcnemar_round_trip(self, tmp_path):
        result = McNemarResult(20, 5, 7.84, 0.005110260660855864, "chi2_corrected")
        dataio.save_report(result, tmp_path / "m.txt")
        assert dataio.load_mcnemar(tmp_path / "m.txt") == result

    def test_history_rows_match_entries(self, tmp_path):
        history = tuple((t, -1.0 + t * 0.01) for t in range(11))
        result = OptimizationResult(np.array([0.5, 0.25]), history[-1][1], history, 110)
        dataio.save_report(result, tmp_path / "h.csv")
        lines = (tmp_path / "h.csv").read_text().splitlines()
        data_rows = [ln for ln in lines if not ln.startswith("#")]
        assert len(data_rows) == 11

    def test_history_round_trip(self, tmp_path):
        history = ((0, 0.25), (1, 0.5), (2, 2 / 3))
        result = OptimizationResult(np.array([1 / 3, 0.9]), 2 / 3, history, 30)
        dataio.save_report(result, tmp_path / "h.csv")
        back = dataio.load_history(tmp_path / "h.csv")
        assert back.history == result.history
        assert back.best_fitness == result.best_fitness
        assert np.array_equal(back.best_position, result.best_position)
        assert back.evaluations == result.evaluations

    def test_confusion_matrix_round_trip(self, tmp_path):
        counts = np.array([[5, 1], [2, 7]])
        dataio.save_confusion_matrix(counts, ("x", "y"), tmp_path / "cm.csv")
        names, back = dataio.load_confusion_matrix(tmp_path / "cm.csv")
        assert names == ("x", "y")
        assert np.array_equal(back, counts)

    def test_unserializable_type_rejected(self, tmp_path):
        with pytest.raises(Exception):
            dataio.save_report(object(), tmp_path / "x.txt")


class TestLabelsRoundTrip:
    def test_save_load(self, tmp_path):
        table = dataio.LabelTable(("a", "b", "c"), make_labels([0, 2, 1]))
        dataio.save_labels(table, tmp_path / "l.csv")
        back = dataio.load_labels(tmp_path / "l.csv")
        assert back.sample_ids == table.sample_ids
        assert np.array_equal(back.labels.labels, table.labels.labels)

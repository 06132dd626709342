import math
import os
import random
import tempfile
import unittest

import numpy as np
from scipy import stats

from swa.exceptions import (
    AllTied,
    ConstantPredictor,
    InvalidRecord,
    LengthMismatch,
    MissingMetric,
    MixedSeries,
    TooFewModels,
)
from swa.meta import (
    METRIC_NAMES,
    TABLE_METRICS,
    METRIC_ON_TARGET,
    ModelRecord,
    append_record,
    evaluate_metric,
    evaluate_series,
    kendall_tau,
    load_records,
    ols_regression,
    summarize_results,
)

series_csv = os.path.join(os.path.dirname(__file__), "fixtures", "series.csv")


def linear_records(n=5, series="s"):
    return [
        ModelRecord(series, "m%d" % i, 60 + 2 * i, metrics={"log_spectral": 1.0 + i / 2})
        for i in range(n)
    ]


class Testcases(unittest.TestCase):

    def test_ols_exact_line(self):
        slope, intercept, rmse, r2 = ols_regression([0, 1, 2], [1, 3, 5])
        self.assertAlmostEqual(slope, 2.0, places=12)
        self.assertAlmostEqual(intercept, 1.0, places=12)
        self.assertAlmostEqual(rmse, 0.0, places=12)
        self.assertAlmostEqual(r2, 1.0, places=12)

    def test_ols_hand_oracle(self):
        slope, intercept, rmse, r2 = ols_regression([0, 1, 2], [0, 0, 3])
        self.assertAlmostEqual(slope, 1.5, places=12)
        self.assertAlmostEqual(intercept, -0.5, places=12)
        self.assertAlmostEqual(rmse, math.sqrt(0.5), places=12)
        self.assertAlmostEqual(r2, 0.75, places=12)

    def test_ols_constant_y(self):
        slope, intercept, rmse, r2 = ols_regression([0, 1, 2], [4, 4, 4])
        self.assertEqual(slope, 0.0)
        self.assertAlmostEqual(rmse, 0.0)
        self.assertEqual(r2, 1.0)

    def test_ols_errors(self):
        with self.assertRaises(ConstantPredictor):
            ols_regression([1, 1, 1], [1, 2, 3])
        with self.assertRaises(LengthMismatch):
            ols_regression([1, 2, 3], [1, 2])

    def test_r2_is_pearson_squared(self):
        rng = np.random.default_rng(12)
        x = rng.normal(size=30)
        y = 2 * x + rng.normal(size=30)
        r2 = ols_regression(x, y)[3]
        r = np.corrcoef(x, y)[0, 1]
        self.assertLess(abs(r2 - r ** 2) / r ** 2, 1e-10)

    def test_kendall(self):
        self.assertAlmostEqual(kendall_tau([1, 2, 3], [1, 2, 3]), 1.0)
        self.assertAlmostEqual(kendall_tau([1, 2, 3], [3, 2, 1]), -1.0)
        self.assertAlmostEqual(kendall_tau([1, 2, 3, 4], [1, 3, 2, 4]), 4 / 6, places=12)

    def test_kendall_ties(self):
        x = [1, 2, 2, 3, 4, 4, 5]
        y = [2, 1, 3, 3, 5, 4, 6]
        # brute force tau-b
        c = d = tx = ty = 0
        for i in range(len(x)):
            for j in range(i + 1, len(x)):
                s = np.sign(x[i] - x[j]) * np.sign(y[i] - y[j])
                if x[i] == x[j] and y[i] != y[j]:
                    tx += 1
                elif y[i] == y[j] and x[i] != x[j]:
                    ty += 1
                elif s > 0:
                    c += 1
                elif s < 0:
                    d += 1
        expected = (c - d) / math.sqrt((c + d + tx) * (c + d + ty))
        self.assertAlmostEqual(kendall_tau(x, y), expected, places=12)

    def test_kendall_monotone_invariance(self):
        rng = np.random.default_rng(5)
        x = rng.uniform(0.1, 100, size=20)
        y = rng.normal(size=20)
        self.assertAlmostEqual(kendall_tau(x, y), kendall_tau(np.log10(x), y), places=12)
        self.assertAlmostEqual(kendall_tau(x, y), stats.kendalltau(x, y)[0], places=12)

    def test_kendall_all_tied(self):
        with self.assertRaises(AllTied):
            kendall_tau([1, 1, 1], [1, 2, 3])

    def test_evaluate_exact_line(self):
        result = evaluate_metric(linear_records(), "log_spectral")
        self.assertAlmostEqual(result["rmse"], 0.0, places=10)
        self.assertAlmostEqual(result["r2"], 1.0, places=10)
        self.assertAlmostEqual(abs(result["kendall_tau"]), 1.0)
        self.assertEqual(result["n"], 5)
        # error falls as the metric grows
        self.assertLess(result["slope"], 0)
        self.assertAlmostEqual(result["kendall_tau"], -1.0)

    def test_evaluate_alternating_residuals(self):
        records = []
        for i in range(6):
            error = 30.0 - 2.0 * i + (0.5 if i % 2 else -0.5)
            records.append(ModelRecord("s", "m%d" % i, 100 - error, metrics={"log_spectral": float(i)}))
        result = evaluate_metric(records, "log_spectral", target="top1_error")
        x = np.arange(6.0)
        y = np.array([100 - r["reported_top1"] for r in records])
        slope, intercept = np.polyfit(x, y, 1)
        residuals = y - (slope * x + intercept)
        self.assertAlmostEqual(result["slope"], slope, places=10)
        self.assertAlmostEqual(result["rmse"], math.sqrt(np.mean(residuals ** 2)), places=10)
        self.assertAlmostEqual(result["r2"], 1 - np.sum(residuals ** 2) / np.sum((y - y.mean()) ** 2), places=10)

    def test_confidence_band(self):
        records = []
        for i in range(6):
            records.append(ModelRecord("s", "m%d" % i, 70 + i + (0.3 if i % 2 else -0.3),
                                       metrics={"log_spectral": float(i)}))
        result = evaluate_metric(records, "log_spectral", target="top1_acc")
        self.assertEqual(len(result.plot), 6)
        for row in result.plot:
            self.assertLess(row["band_lo"], row["y_hat"])
            self.assertGreater(row["band_hi"], row["y_hat"])
        widths = [r["band_hi"] - r["band_lo"] for r in result.plot]
        # narrowest near the mean of x
        self.assertLess(min(widths[2], widths[3]), widths[0])
        self.assertEqual([r["x"] for r in result.plot], sorted(r["x"] for r in result.plot))

    def test_permutation_invariance(self):
        records = load_records(series_csv)
        resnet = [r for r in records if r.series == "resnet"]
        first = evaluate_metric(resnet, "weighted_alpha")
        shuffled = list(resnet)
        random.Random(3).shuffle(shuffled)
        second = evaluate_metric(shuffled, "weighted_alpha")
        self.assertEqual(first, second)
        self.assertEqual(first.plot, second.plot)

    def test_mixed_series(self):
        records = load_records(series_csv)
        with self.assertRaises(MixedSeries):
            evaluate_metric(records, "log_spectral")
        result = evaluate_metric(records, "log_spectral", series="vgg")
        self.assertEqual(result["series"], "vgg")
        self.assertEqual(result["n"], 4)

    def test_missing_metric(self):
        with self.assertRaises(MissingMetric):
            evaluate_metric(linear_records(), "log_nuclear")
        with self.assertRaises(MissingMetric):
            evaluate_metric(linear_records(), "log_spectral", target="top3_error")

    def test_too_few_models(self):
        with self.assertRaises(TooFewModels):
            evaluate_metric(linear_records(2), "log_spectral")
        with self.assertRaises(TooFewModels):
            evaluate_metric(linear_records(4), "log_spectral", exclude=["m0", "m1"])
        # records without the metric do not count
        with self.assertRaises(TooFewModels):
            evaluate_metric(linear_records(), "alpha_bar")

    def test_direction(self):
        normal = evaluate_metric(linear_records(), "log_spectral")
        flipped = evaluate_metric(linear_records(), "log_spectral", direction=METRIC_ON_TARGET)
        self.assertAlmostEqual(normal["slope"] * flipped["slope"], 1.0)
        self.assertEqual(normal["kendall_tau"], flipped["kendall_tau"])

    def test_targets(self):
        record = ModelRecord("s", "m", 76.5, reported_top5=93.0)
        self.assertAlmostEqual(record.target("top1_error"), 23.5)
        self.assertAlmostEqual(record.target("top1_acc"), 76.5)
        self.assertAlmostEqual(record.target("top5_error"), 7.0)
        self.assertIsNone(ModelRecord("s", "m", 76.5).target("top5_acc"))

    def test_invalid_records(self):
        with self.assertRaises(InvalidRecord):
            ModelRecord("s", "m", 120)
        with self.assertRaises(InvalidRecord):
            ModelRecord("s", "m", "abc")
        with self.assertRaises(InvalidRecord):
            ModelRecord("", "m", 50)

    def test_series_fixture(self):
        results = evaluate_series(load_records(series_csv), metrics=TABLE_METRICS, series="resnet")
        self.assertEqual([r["metric_name"] for r in results], TABLE_METRICS)
        for result in results:
            self.assertAlmostEqual(result["kendall_tau"], -1.0)

    def test_all_series(self):
        results = evaluate_series(load_records(series_csv), jobs=4)
        self.assertEqual(len(results), 8)
        self.assertEqual([r["series"] for r in results], ["resnet"] * 4 + ["vgg"] * 4)
        sequential = evaluate_series(load_records(series_csv), jobs=1)
        self.assertEqual(results, sequential)

    def test_summary(self):
        results = evaluate_series(load_records(series_csv))
        summary = summarize_results(results)
        self.assertEqual([s["metric_name"] for s in summary], TABLE_METRICS)
        for row in summary:
            self.assertEqual(row["n_series"], 2)
            self.assertAlmostEqual(row["kendall_tau_mean"], -1.0)
            self.assertAlmostEqual(row["kendall_tau_std"], 0.0)

    def test_append_record(self):
        with tempfile.TemporaryDirectory() as tmp:
            path = os.path.join(tmp, "series.csv")
            for record in linear_records(3):
                append_record(path, record)
            append_record(path, ModelRecord("s", "m1", 99, metrics={"log_spectral": 5}))
            records = load_records(path)
            self.assertEqual([r.model_id for r in records], ["m0", "m2", "m1"])
            self.assertEqual(records[2]["reported_top1"], 99.0)
            self.assertIsNone(records[0]["metrics"]["alpha_bar"])

    def test_duplicate_models(self):
        with tempfile.TemporaryDirectory() as tmp:
            path = os.path.join(tmp, "series.csv")
            with open(path, "w") as fp:
                fp.write("series,model_id,reported_top1\ns,a,50\ns,a,60\n")
            with self.assertRaises(InvalidRecord):
                load_records(path)


if __name__ == '__main__':
    unittest.main()

import json
import math
import tempfile
import unittest
from pathlib import Path

import numpy as np
import pandas as pd

from core.analysis.baseline import PERSISTENCE, SEASONAL_NAIVE, baseline_forecasts
from core.analysis.decomposition import DECOMPOSITION_COLUMNS, export_decomposition
from core.analysis.extremes import extreme_slice_mae
from core.analysis.metrics import mean_absolute_error, per_step_metrics, regression_metrics
from core.analysis.report import evaluate_forecasts, write_report
from core.analysis.thresholds import (
    ExtremeThresholds,
    category_counts,
    classify_array,
    classify_extreme,
    compute_thresholds,
    thresholds_from_moments,
)
from core.dataset.variant import ColumnInfo, VariantMatrix
from core.dataset.windows import make_windows
from core.errors import ConfigError, DataError
from core.nbeatsx.model import ForecastBatch


def _oracle(y, yhat):
    n = len(y)
    mae = sum(abs(a - b) for a, b in zip(y, yhat)) / n
    mse = sum((a - b) ** 2 for a, b in zip(y, yhat)) / n
    mean = sum(y) / n
    sst = sum((a - mean) ** 2 for a in y)
    return mae, mse, math.sqrt(mse), 1 - mse * n / sst


class TestMetrics(unittest.TestCase):
    def test_against_direct_formulas(self):
        rng = np.random.default_rng(0)
        for _ in range(1000):
            n = int(rng.integers(2, 40))
            y = rng.normal(30, 10, n)
            yhat = y + rng.normal(0, 5, n)
            report = regression_metrics(y, yhat)
            mae, mse, rmse, r2 = _oracle(list(y), list(yhat))
            for got, want in ((report.mae, mae), (report.mse, mse), (report.rmse, rmse), (report.r2, r2)):
                self.assertLessEqual(abs(got - want), 1e-12 * max(1.0, abs(want)))
            self.assertAlmostEqual(report.rmse, math.sqrt(report.mse), places=12)
            self.assertLessEqual(report.mae, report.rmse + 1e-12)

    def test_pair_order_does_not_matter(self):
        rng = np.random.default_rng(12)
        for _ in range(200):
            n = int(rng.integers(2, 60))
            y = rng.normal(30, 10, n)
            yhat = y + rng.normal(0, 4, n)
            order = rng.permutation(n)
            a = regression_metrics(y, yhat).to_dict()
            b = regression_metrics(y[order], yhat[order]).to_dict()
            for key in ("MAE", "MSE", "RMSE", "R2"):
                self.assertLessEqual(abs(a[key] - b[key]), 1e-12 * max(1.0, abs(a[key])), msg=key)

    def test_perfect_and_constant(self):
        self.assertEqual(regression_metrics([1, 2, 3], [1, 2, 3]).r2, 1.0)
        self.assertAlmostEqual(regression_metrics([1, 2, 3, 6], [3, 3, 3, 3]).r2, 0.0)
        self.assertIsNone(regression_metrics([5, 5, 5], [4, 5, 6]).r2)

    def test_bad_inputs(self):
        with self.assertRaises(DataError):
            regression_metrics([1, 2], [1, 2, 3])
        with self.assertRaises(DataError):
            regression_metrics([1], [1])

    def test_per_step(self):
        y = np.arange(12, dtype=float).reshape(4, 3)
        rows = per_step_metrics(y, y + np.array([0.0, 1.0, 2.0]))
        self.assertEqual([r["step"] for r in rows], [1, 2, 3])
        self.assertEqual([r["MAE"] for r in rows], [0.0, 1.0, 2.0])


class TestThresholds(unittest.TestCase):
    def setUp(self):
        self.t = thresholds_from_moments(28.7, 11.2)

    def test_rounded_levels(self):
        self.assertEqual((self.t.t1, self.t.t2, self.t.t3), (40, 51, 62))

    def test_boundaries_fall_in_lower_band(self):
        cases = {40: "Normal", 41: "Extreme", 51: "Extreme", 52: "VeryExtreme", 62: "VeryExtreme", 63: "HighlyExtreme"}
        for value, label in cases.items():
            self.assertEqual(classify_extreme(value, self.t), label, msg=str(value))
        self.assertEqual(list(classify_array(list(cases), self.t)), list(cases.values()))

    def test_half_rounds_up(self):
        t = thresholds_from_moments(10.5, 10.0)
        self.assertEqual((t.t1, t.t2, t.t3), (21, 31, 41))

    def test_degenerate(self):
        with self.assertRaises(DataError):
            thresholds_from_moments(30.0, 0.2)
        with self.assertRaises(DataError):
            compute_thresholds([])

    def test_counts_from_series(self):
        series = np.array([0, 10, 20, 30, 40, 100], dtype=float)
        t = compute_thresholds(series)
        self.assertAlmostEqual(t.std, float(series.std()))
        counts = category_counts(series, t)
        self.assertEqual(sum(counts.values()), 6)
        self.assertEqual(counts["HighlyExtreme"] + counts["VeryExtreme"] + counts["Extreme"], 1)

    def test_slices_nest(self):
        y = np.array([30, 45, 55, 70, 80], dtype=float)
        yhat = y - np.array([1, 2, 3, 4, 5], dtype=float)
        out = extreme_slice_mae(y, yhat, self.t)
        cumulative = {c["slice"]: c for c in out["cumulative"]}
        self.assertEqual(cumulative["gt_t1"]["n"], 4)
        self.assertAlmostEqual(cumulative["gt_t1"]["mae"], 3.5)
        self.assertEqual(cumulative["gt_t3"]["n"], 2)
        self.assertAlmostEqual(cumulative["gt_t3"]["mae"], 4.5)
        bands = {b["category"]: b for b in out["bands"]}
        self.assertEqual(bands["Normal"]["n"], 1)
        self.assertEqual(bands["VeryExtreme"]["n"], 1)
        empty = extreme_slice_mae(np.array([1.0, 2.0]), np.array([1.0, 2.0]), self.t)
        self.assertIsNone(empty["cumulative"][0]["mae"])

    def test_slice_below_every_actual_is_the_full_mae(self):
        rng = np.random.default_rng(21)
        for _ in range(100):
            y = rng.uniform(10, 80, int(rng.integers(1, 100)))
            yhat = y + rng.normal(0, 6, len(y))
            low = int(np.floor(y.min())) - 1
            t = ExtremeThresholds(mean=0.0, std=0.0, t1=low, t2=low + 200, t3=low + 300)
            cumulative = extreme_slice_mae(y, yhat, t)["cumulative"]
            self.assertEqual(cumulative[0]["n"], len(y))
            self.assertEqual(cumulative[0]["mae"], mean_absolute_error(y, yhat))


class TestBaselines(unittest.TestCase):
    def test_persistence_and_seasonal(self):
        hours = pd.date_range("2020-01-01", periods=48, freq="h")
        series = pd.Series(np.arange(48, dtype=float), index=hours)
        persistence = baseline_forecasts(series, PERSISTENCE, horizon=6)
        self.assertEqual(len(persistence), 42)
        self.assertEqual(persistence.iloc[0], 0.0)
        self.assertEqual(persistence.index[0], hours[6])
        seasonal = baseline_forecasts(series, SEASONAL_NAIVE, horizon=6)
        self.assertEqual(len(seasonal), 24)
        self.assertEqual(seasonal.loc[hours[30]], 6.0)

    def test_constant_and_random_walk(self):
        hours = pd.date_range("2020-01-01", periods=200, freq="h")
        flat = baseline_forecasts(pd.Series(np.full(200, 7.0), index=hours), PERSISTENCE)
        self.assertEqual(float(np.abs(flat - 7.0).max()), 0.0)
        walk = np.cumsum(np.random.default_rng(1).choice([-1.0, 1.0], size=200))
        series = pd.Series(walk, index=hours)
        forecast = baseline_forecasts(series, PERSISTENCE, horizon=6)
        mae = float(np.mean(np.abs(series.loc[forecast.index].to_numpy() - forecast.to_numpy())))
        self.assertAlmostEqual(mae, float(np.mean(np.abs(walk[6:] - walk[:-6]))))

    def test_gap_skips_anchors(self):
        hours = pd.date_range("2020-01-01", periods=20, freq="h").delete([5])
        series = pd.Series(np.ones(19), index=hours)
        persistence = baseline_forecasts(series, PERSISTENCE, horizon=6)
        self.assertNotIn(hours[5 + 5], persistence.index)
        self.assertEqual(len(persistence), 13)

    def test_unknown(self):
        with self.assertRaises(ConfigError):
            baseline_forecasts(pd.Series(dtype=float), "arima")


def _batch(anchors, horizon=6, seed=0) -> ForecastBatch:
    rng = np.random.default_rng(seed)
    n = len(anchors)
    trend, seasonality, exogenous = (rng.normal(size=(n, horizon)) for _ in range(3))
    return ForecastBatch(
        total=trend + seasonality + exogenous,
        trend=trend,
        seasonality=seasonality,
        exogenous=exogenous,
        anchors=pd.DatetimeIndex(anchors),
    )


class TestDecomposition(unittest.TestCase):
    def test_one_day(self):
        anchors = pd.date_range("2020-01-01", periods=72, freq="h")
        batch = _batch(anchors)
        actuals = np.arange(72 * 6, dtype=float).reshape(72, 6)
        with tempfile.TemporaryDirectory() as tmp:
            path = Path(tmp) / "decomposition.csv"
            table = export_decomposition(batch, actuals, "2020-01-02", path=str(path), step=6)
            self.assertTrue(path.exists())
        self.assertEqual(list(table.columns), DECOMPOSITION_COLUMNS)
        self.assertEqual(len(table), 24)
        self.assertEqual(table["hour"].iloc[0], pd.Timestamp("2020-01-02"))
        np.testing.assert_allclose(table["total"], table["trend"] + table["seasonality"] + table["exogenous"])
        for c in ("trend", "seasonality", "exogenous"):
            self.assertAlmostEqual(float(table[f"{c}_centered"].mean()), 0.0, places=12)
        # 2020-01-02 00:00 is six hours after anchor row 18
        self.assertEqual(table["actual"].iloc[0], actuals[18, 5])
        self.assertEqual(table["total"].iloc[0], batch.total[18, 5])

    def test_uncovered_day_or_step(self):
        batch = _batch(pd.date_range("2020-01-01", periods=30, freq="h"))
        actuals = np.zeros((30, 6))
        with self.assertRaises(DataError):
            export_decomposition(batch, actuals, "2020-01-03")
        with self.assertRaises(DataError):
            export_decomposition(batch, actuals, "2020-01-01", step=7)


class TestReport(unittest.TestCase):
    def setUp(self):
        hours = pd.date_range("2020-01-01", periods=200, freq="h")
        rng = np.random.default_rng(4)
        y = np.round(30 + 10 * np.sin(2 * np.pi * np.arange(200) / 24) + rng.normal(0, 3, 200))
        self.history = pd.Series(y, index=hours)
        matrix = VariantMatrix(
            variant="T",
            hours=hours,
            features=pd.DataFrame({"x": y}),
            target=y,
            catalog=[ColumnInfo("x", "x", "raw")],
        )
        self.windows = make_windows(matrix.slice(100, 200), 12, 6)

    def test_perfect_forecast(self):
        target = self.windows.target_raw
        zeros = np.zeros_like(target)
        batch = ForecastBatch(total=target, trend=target, seasonality=zeros, exogenous=zeros, anchors=self.windows.anchors)
        report = evaluate_forecasts(batch, self.windows, self.history)
        self.assertEqual(report["t_plus_h"]["MAE"], 0.0)
        self.assertEqual(report["windows"], 100 - 17)
        self.assertEqual(len(report["per_step"]), 6)
        self.assertEqual(report["baselines"]["persistence"]["relative_mae_improvement"], 1.0)
        self.assertEqual(report["thresholds"], compute_thresholds(self.history.to_numpy()).to_dict())
        self.assertEqual(sum(report["category_counts"].values()), len(self.windows))

    def test_written_files(self):
        target = self.windows.target_raw
        batch = ForecastBatch(
            total=target + 1.0, trend=target, seasonality=np.ones_like(target),
            exogenous=np.zeros_like(target), anchors=self.windows.anchors,
        )
        report = evaluate_forecasts(batch, self.windows, self.history)
        self.assertAlmostEqual(report["all_steps"]["MAE"], 1.0)
        with tempfile.TemporaryDirectory() as tmp:
            paths = write_report(report, tmp)
            with open(paths["json"], "r", encoding="utf-8") as f:
                self.assertEqual(json.load(f)["horizon"], 6)
            frame = pd.read_csv(paths["csv"])
        self.assertEqual(len(frame), 1 + 1 + 6 + 2)
        self.assertEqual(list(frame["scope"][:2]), ["t_plus_h", "all_steps"])


if __name__ == "__main__":
    unittest.main()

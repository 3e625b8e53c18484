"""End-to-end forecasting checks on the default synthetic scenario.

Several minutes of CPU; run with BOARDCAST_SLOW_TESTS=1.
"""
import os
import tempfile
import unittest

import numpy as np
import pandas as pd

from core.analysis.metrics import regression_metrics
from core.analysis.report import evaluate_forecasts
from core.dataset.manifest import load_manifest
from core.dataset.prepare import prepare_dataset
from core.dataset.scaler import fit_scaler
from core.dataset.variant import ColumnInfo, VariantMatrix
from core.dataset.windows import make_windows
from core.features.assemble import featurize
from core.ingest.sources import load_sources
from core.nbeatsx.config import NBeatsXConfig
from core.nbeatsx.model import predict_arrays
from core.nbeatsx.trainer import train
from core.synth.generator import generate
from core.synth.scenario import load_scenario

SLOW = os.environ.get("BOARDCAST_SLOW_TESTS") == "1"


def _fit_and_score(table: pd.DataFrame, variant: str, seed: int):
    dataset = prepare_dataset(table, load_manifest(variant), horizon=6)
    config = NBeatsXConfig(seed=seed)
    windows = dataset.windows(config.lookback)
    model, _ = train(config, windows["train"], windows["val"])
    test = windows["test"]
    forecasts = predict_arrays(model, test, dataset.scaler)
    history = pd.Series(dataset.matrix.target, index=dataset.matrix.hours)
    return evaluate_forecasts(forecasts, test, history)


@unittest.skipUnless(SLOW, "set BOARDCAST_SLOW_TESTS=1")
class TestDefaultScenario(unittest.TestCase):
    @classmethod
    def setUpClass(cls):
        with tempfile.TemporaryDirectory() as tmp:
            generate(load_scenario("default"), tmp)
            bundle = load_sources(tmp)
        cls.table = featurize(bundle, exclusions=[]).table
        cls.report = _fit_and_score(cls.table, "DS3", seed=0)

    def test_boarding_moments(self):
        boarding = self.table["boarding_count"]
        self.assertGreaterEqual(len(self.table), 18 * 30 * 24)
        self.assertAlmostEqual(boarding.mean(), 28.7, delta=28.7 * 0.25)

    def test_beats_persistence(self):
        m = self.report["t_plus_h"]
        self.assertGreaterEqual(m["R2"], 0.85)
        persistence = self.report["baselines"]["persistence"]
        self.assertGreaterEqual(persistence["relative_mae_improvement"], 0.20)

    def test_extreme_slices_stay_close(self):
        overall = self.report["t_plus_h"]["MAE"]
        for item in self.report["extreme_slices"]["cumulative"]:
            if item["n"] == 0:
                continue
            self.assertTrue(np.isfinite(item["mae"]))
            self.assertLessEqual(item["mae"], 2.0 * overall, msg=item["slice"])

    def test_richer_variant_wins_most_seeds(self):
        wins = 0
        for seed in (1, 2, 3):
            ds1 = _fit_and_score(self.table, "DS1", seed)["t_plus_h"]["MAE"]
            ds3 = _fit_and_score(self.table, "DS3", seed)["t_plus_h"]["MAE"]
            wins += int(ds3 <= ds1)
        self.assertGreaterEqual(wins, 2)


@unittest.skipUnless(SLOW, "set BOARDCAST_SLOW_TESTS=1")
class TestPureTrend(unittest.TestCase):
    def test_linear_series_is_learned(self):
        n = 3000
        hours = pd.date_range("2020-01-01", periods=n, freq="h", name="hour")
        y = 20.0 + 0.01 * np.arange(n)
        matrix = VariantMatrix(
            variant="trend",
            hours=hours,
            features=pd.DataFrame({"level": y}),
            target=y,
            catalog=[ColumnInfo("level", "level", "raw")],
        )
        train_part, val_part = matrix.slice(0, 2400), matrix.slice(2400, n)
        scaler = fit_scaler(train_part)
        config = NBeatsXConfig(max_epochs=50, dropout_p=0.0, seed=0)
        train_ws = make_windows(scaler.transform(train_part), 12, 6, scaler)
        val_ws = make_windows(scaler.transform(val_part), 12, 6, scaler)
        model, _ = train(config, train_ws, val_ws)
        forecasts = predict_arrays(model, val_ws, scaler)
        r2 = regression_metrics(val_ws.target_raw.ravel(), forecasts.total.ravel()).r2
        self.assertGreater(r2, 0.99)


if __name__ == "__main__":
    unittest.main()

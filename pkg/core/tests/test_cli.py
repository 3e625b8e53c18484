import json
import os
import tempfile
import unittest
from pathlib import Path
from unittest import mock

import pandas as pd

from core.errors import EXIT_BAD_ARGS, EXIT_BAD_DATA, EXIT_OK
from core.main import main

TINY_MODEL = {
    "stacks": [
        {"kind": "trend", "blocks": 1, "layers_per_block": 1, "hidden_widths": [16], "degree": 2},
        {"kind": "seasonality", "blocks": 1, "layers_per_block": 1, "hidden_widths": [16], "harmonics": 2},
        {"kind": "exogenous", "blocks": 1, "layers_per_block": 1, "hidden_widths": [16]},
    ],
    "learning_rate": 0.003,
    "dropout_p": 0.1,
    "batch_size": 64,
    "max_epochs": 2,
    "early_stop_patience": 1,
}


TINY_GRID = {
    "learning_rate": [0.003, 0.01],
    "dropout_p": [0.1],
    "batch_size": [64],
    "lookback": [12],
    "stacks": [{"name": "tiny", "stacks": TINY_MODEL["stacks"]}],
    "max_epochs": 1,
    "early_stop_patience": 1,
}


def _files(tmp: str):
    config = Path(tmp) / "config.json"
    config.write_text(json.dumps({
        "run": {"seed": 0, "out_dir": "runs"},
        "preprocess": {"exclude_windows": []},
        "dataset": {"split": [0.7, 0.15, 0.15], "lookback": 12, "horizon": 6},
        "model": TINY_MODEL,
        "tuning": {"pipeline_grid": "grid.json", "workers": 1},
    }), encoding="utf-8")
    (Path(tmp) / "grid.json").write_text(json.dumps(TINY_GRID), encoding="utf-8")
    scenario = Path(tmp) / "short.json"
    scenario.write_text(json.dumps({
        "name": "short",
        "start": "2021-03-01",
        "end": "2021-03-21",
        "dirty_rates": {"waiting_over_limit": 0.01, "boarding_over_limit": 0.005, "treatment_stuck": 0.005},
    }), encoding="utf-8")
    return str(config), str(scenario)


class TestCli(unittest.TestCase):
    def test_evaluate_without_checkpoint(self):
        with tempfile.TemporaryDirectory() as tmp:
            config, _ = _files(tmp)
            code = main(["--config", config, "--quiet", "evaluate", "--hourly", str(Path(tmp) / "hourly.csv"),
                         "--out", tmp])
        self.assertEqual(code, EXIT_BAD_ARGS)

    def test_missing_data_directory(self):
        with tempfile.TemporaryDirectory() as tmp:
            config, _ = _files(tmp)
            code = main(["--config", config, "--quiet", "featurize", "--data", str(Path(tmp) / "nope"), "--out", tmp])
        self.assertEqual(code, EXIT_BAD_DATA)

    def test_synth_featurize_build(self):
        with tempfile.TemporaryDirectory() as tmp:
            config, scenario = _files(tmp)
            data = Path(tmp) / "data"
            feat = Path(tmp) / "feat"
            built = Path(tmp) / "built"
            base = ["--config", config, "--quiet"]
            self.assertEqual(main(base + ["synth", "--scenario", scenario, "--seed", "4", "--out", str(data)]), EXIT_OK)
            self.assertEqual(main(base + ["featurize", "--data", str(data), "--out", str(feat)]), EXIT_OK)
            with open(data / "injections.json", "r", encoding="utf-8") as f:
                injections = json.load(f)
            with open(feat / "cleaning_report.json", "r", encoding="utf-8") as f:
                report = json.load(f)
            for rule in ("waiting_over_limit", "boarding_over_limit", "treatment_stuck"):
                self.assertEqual(report["rules"][rule]["count"], len(injections[rule]))
            self.assertEqual(report["esi_imputation"]["count"], len(injections["esi_missing"]))
            self.assertTrue((feat / "run_manifest.json").exists())

            hourly = str(feat / "hourly.csv")
            self.assertEqual(len(pd.read_csv(hourly)), 21 * 24)
            self.assertEqual(main(base + ["build", "--hourly", hourly, "--variant", "DS1", "--out", str(built)]), EXIT_OK)
            with open(built / "catalog.json", "r", encoding="utf-8") as f:
                self.assertEqual(len(json.load(f)["columns"]), 18)
            with open(built / "split.json", "r", encoding="utf-8") as f:
                split = json.load(f)
            self.assertEqual(sum(split["rows"].values()), 21 * 24 - 12)
            self.assertEqual(main(base + ["build", "--hourly", hourly, "--variant", "DS9", "--out", str(built)]),
                             EXIT_BAD_ARGS)

    def test_synth_seed_from_environment(self):
        with tempfile.TemporaryDirectory() as tmp:
            config, scenario = _files(tmp)
            seeded = Path(tmp) / "seeded"
            plain = Path(tmp) / "plain"
            with mock.patch.dict(os.environ, {"BOARDCAST_SEED": "11"}):
                code = main(["--config", config, "--quiet", "synth", "--scenario", scenario, "--out", str(seeded)])
            self.assertEqual(code, EXIT_OK)
            with mock.patch.dict(os.environ, {"BOARDCAST_SEED": ""}):
                code = main(["--config", config, "--quiet", "synth", "--scenario", scenario, "--seed", "11",
                             "--out", str(plain)])
            self.assertEqual(code, EXIT_OK)
            with open(seeded / "run_manifest.json", "r", encoding="utf-8") as f:
                self.assertEqual(json.load(f)["seed"], 11)
            self.assertEqual((seeded / "ed_tracking.csv").read_bytes(), (plain / "ed_tracking.csv").read_bytes())

    def test_pipeline_is_reproducible(self):
        with tempfile.TemporaryDirectory() as tmp:
            config, scenario = _files(tmp)
            runs = [Path(tmp) / "a", Path(tmp) / "b"]
            for out in runs:
                code = main(["--config", config, "--quiet", "pipeline", "--scenario", scenario, "--seed", "3",
                             "--out", str(out)])
                self.assertEqual(code, EXIT_OK)
            for name in ("metrics.json", "checkpoint.zip", "hourly.csv", "history.csv"):
                self.assertEqual((runs[0] / name).read_bytes(), (runs[1] / name).read_bytes(), msg=name)
            with open(runs[0] / "run_manifest.json", "r", encoding="utf-8") as f:
                manifest = json.load(f)
            self.assertEqual(manifest["seed"], 3)
            self.assertIn("checkpoint", manifest["outputs"])
            self.assertTrue(list(runs[0].glob("decomposition_*.csv")))

            for variant in ("DS1", "DS2", "DS3", "DS4", "DS5"):
                for name in ("matrix.csv", "catalog.json", "split.json", "scaler.json"):
                    rel = Path("variants") / variant / name
                    self.assertEqual((runs[0] / rel).read_bytes(), (runs[1] / rel).read_bytes(), msg=str(rel))
                self.assertIn(f"{variant}_catalog", manifest["outputs"])
            with open(runs[0] / "variants" / "DS1" / "catalog.json", "r", encoding="utf-8") as f:
                self.assertEqual(len(json.load(f)["columns"]), 18)

            self.assertIn("tuning_trials", manifest["outputs"])
            self.assertIn("tuning_best", manifest["outputs"])
            trials = [pd.read_csv(out / "tuning" / "trials.csv").drop(columns=["wall_seconds"]) for out in runs]
            self.assertEqual(len(trials[0]), 2)
            self.assertEqual(list(trials[0]["seed"].sort_values()), [3, 4])
            pd.testing.assert_frame_equal(trials[0], trials[1])
            for i in range(2):
                rel = Path("tuning") / "trial_history" / f"trial_{i:03d}.csv"
                self.assertEqual((runs[0] / rel).read_bytes(), (runs[1] / rel).read_bytes(), msg=str(rel))

            metrics = json.loads((runs[0] / "metrics.json").read_text(encoding="utf-8"))
            self.assertEqual(metrics["segment"], "test")
            self.assertEqual(len(metrics["per_step"]), 6)

            evaluated = Path(tmp) / "eval"
            code = main(["--config", config, "--quiet", "evaluate", "--hourly", str(runs[0] / "hourly.csv"),
                         "--checkpoint", str(runs[0] / "checkpoint.zip"), "--out", str(evaluated)])
            self.assertEqual(code, EXIT_OK)
            self.assertEqual((evaluated / "metrics.json").read_bytes(), (runs[0] / "metrics.json").read_bytes())


if __name__ == "__main__":
    unittest.main()

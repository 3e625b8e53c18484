import json
import os
import tempfile
import unittest
from pathlib import Path
from unittest.mock import patch

import pandas as pd

from core.config import SEED_ENV, AppConfig, load_config
from core.errors import ConfigError


def _write(tmp: str, data) -> str:
    path = Path(tmp) / "config.json"
    path.write_text(json.dumps(data), encoding="utf-8")
    return str(path)


class TestAppConfig(unittest.TestCase):
    def test_shipped_config(self):
        config = load_config()
        self.assertEqual(config.split_fractions(), (0.7, 0.15, 0.15))
        self.assertEqual(config.cleaning_limits()["treatment_max_hours"], 5112.0)
        windows = config.exclusion_windows()
        self.assertEqual(windows, [(pd.Timestamp("2020-04-01"), pd.Timestamp("2020-07-31 23:00"))])
        self.assertTrue(config.manifest_dir().endswith("manifests"))

    def test_fallbacks(self):
        with tempfile.TemporaryDirectory() as tmp:
            config = AppConfig.from_file(_write(tmp, {"dataset": {"lookback": "many"}, "tuning": {"workers": 0}}))
            self.assertEqual(config.tuning_workers(), 1)
            self.assertEqual(config.rolling_alignment(), "centered")
            self.assertEqual(config.run_out_dir(), str(Path(tmp) / "../runs"))
            self.assertIsNone(config.run_log_file())
            with self.assertRaises(ConfigError):
                config.model_config(seed=0)

    def test_missing_or_bad_file(self):
        with self.assertRaises(ConfigError):
            AppConfig.from_file("/no/such/config.json")
        with tempfile.TemporaryDirectory() as tmp:
            bad = Path(tmp) / "bad.json"
            bad.write_text("{not json", encoding="utf-8")
            with self.assertRaises(ConfigError):
                AppConfig.from_file(str(bad))
            with self.assertRaises(ConfigError):
                AppConfig.from_file(_write(tmp, [1, 2]))

    def test_malformed_exclusion_windows(self):
        with tempfile.TemporaryDirectory() as tmp:
            config = AppConfig.from_file(_write(tmp, {"preprocess": {"exclude_windows": [{"from": "2020-01-01"}]}}))
            with self.assertRaises(ConfigError):
                config.exclusion_windows()
            empty = AppConfig.from_file(_write(tmp, {"preprocess": {"exclude_windows": []}}))
            self.assertEqual(empty.exclusion_windows(), [])

    def test_model_section_merges_dataset_shape(self):
        with tempfile.TemporaryDirectory() as tmp:
            config = AppConfig.from_file(_write(tmp, {
                "dataset": {"lookback": 24, "horizon": 3},
                "model": {"learning_rate": 0.01, "max_epochs": 7},
            }))
            model = config.model_config(seed=9)
        self.assertEqual((model.lookback, model.horizon), (24, 3))
        self.assertEqual(model.learning_rate, 0.01)
        self.assertEqual(model.max_epochs, 7)
        self.assertEqual(model.seed, 9)


class TestEnv(unittest.TestCase):
    def test_environment_wins(self):
        config = AppConfig({"env_vars": {"BOARDCAST_TOKEN": "from-file"}}, Path("."))
        with patch.dict(os.environ, {"BOARDCAST_TOKEN": "from-env"}):
            self.assertEqual(config.get_env("BOARDCAST_TOKEN"), "from-env")
        with patch.dict(os.environ, {}, clear=True):
            self.assertEqual(config.get_env("BOARDCAST_TOKEN"), "from-file")
            self.assertEqual(config.get_env("OTHER", "x"), "x")

    def test_seed_from_environment(self):
        config = AppConfig({"run": {"seed": 4}}, Path("."))
        with patch.dict(os.environ, {SEED_ENV: "17"}):
            self.assertEqual(config.run_seed(), 17)
            self.assertEqual(config.model_config().seed, 17)
        with patch.dict(os.environ, {}, clear=True):
            self.assertEqual(config.run_seed(), 4)
        with patch.dict(os.environ, {SEED_ENV: "abc"}):
            with self.assertRaises(ConfigError):
                config.run_seed()


if __name__ == "__main__":
    unittest.main()

import tempfile
import unittest
from pathlib import Path

import pandas as pd

from core.dataset.manifest import load_manifest
from core.dataset.prepare import prepare_dataset
from core.errors import ConfigError
from core.nbeatsx.config import NBeatsXConfig
from core.tests.helpers import make_hourly_table
from core.tuning.grid_search import (
    STATUS_ABORTED,
    STATUS_OK,
    GridSpec,
    grid_search,
    load_grid,
    write_results,
)

TINY_STACKS = [
    {"kind": "trend", "blocks": 1, "layers_per_block": 1, "hidden_widths": [8], "degree": 2},
    {"kind": "exogenous", "blocks": 1, "layers_per_block": 1, "hidden_widths": [8]},
]


def _grid(**kw) -> GridSpec:
    data = {
        "learning_rate": [0.003, 0.01],
        "dropout_p": [0.0],
        "batch_size": [32],
        "lookback": [12],
        "stacks": [{"name": "tiny", "stacks": TINY_STACKS}],
        "max_epochs": 2,
        "early_stop_patience": 1,
    }
    data.update(kw)
    return GridSpec.from_dict(data)


class TestGridSpec(unittest.TestCase):
    def test_cells_in_fixed_order(self):
        grid = GridSpec.from_dict({
            "learning_rate": [0.001, 0.01],
            "dropout_p": [0.0, 0.2],
            "lookback": [12, 24],
            "stacks": [{"name": "a", "stacks": TINY_STACKS}, {"name": "b"}],
        })
        cells = grid.cells()
        self.assertEqual(len(cells), len(grid))
        self.assertEqual(len(cells), 16)
        self.assertEqual([c[4] for c in cells[:2]], [0.001, 0.01])
        self.assertEqual(cells[0][0].name, "a")
        self.assertEqual(cells[-1][0].name, "b")
        self.assertEqual(len(cells[-1][0].stacks), 3)

    def test_scalar_axes_and_empty_axis(self):
        grid = GridSpec.from_dict({"learning_rate": 0.01})
        self.assertEqual(grid.learning_rate, [0.01])
        with self.assertRaises(ConfigError):
            GridSpec.from_dict({"dropout_p": []})

    def test_shipped_grid(self):
        grid = load_grid(str(Path(__file__).resolve().parents[1] / "grids" / "default.json"))
        self.assertEqual(len(grid), 8)
        with self.assertRaises(ConfigError):
            load_grid("no/such/grid.json")


class TestGridSearch(unittest.TestCase):
    @classmethod
    def setUpClass(cls):
        cls.dataset = prepare_dataset(make_hourly_table(400), load_manifest("DS1"), horizon=6)

    def test_trials_ranked_with_offset_seeds(self):
        results = grid_search(_grid(), self.dataset, NBeatsXConfig(), base_seed=10)
        self.assertEqual(len(results), 2)
        self.assertEqual(sorted(r.seed for r in results), [10, 11])
        self.assertEqual([r.rank for r in results], [1, 2])
        self.assertTrue(all(r.status == STATUS_OK for r in results))
        self.assertLessEqual(results[0].val_metrics["MAE"], results[1].val_metrics["MAE"])
        for r in results:
            self.assertEqual(r.seed, 10 + r.index)
            self.assertEqual(r.config.seed, r.seed)
            self.assertLessEqual(r.history_summary["epochs_run"], 2)

    def test_workers_do_not_change_results(self):
        serial = grid_search(_grid(), self.dataset, base_seed=3, workers=1)
        parallel = grid_search(_grid(), self.dataset, base_seed=3, workers=2)
        self.assertEqual(
            [(r.index, r.val_metrics, r.history) for r in serial],
            [(r.index, r.val_metrics, r.history) for r in parallel],
        )

    def test_short_validation_aborts_trial(self):
        results = grid_search(_grid(lookback=[12, 200], learning_rate=[0.003]), self.dataset)
        by_lookback = {r.params["lookback"]: r for r in results}
        self.assertEqual(by_lookback[12].status, STATUS_OK)
        self.assertEqual(by_lookback[200].status, STATUS_ABORTED)
        self.assertEqual(results[-1].params["lookback"], 200)

    def test_written_results(self):
        results = grid_search(_grid(), self.dataset)
        with tempfile.TemporaryDirectory() as tmp:
            paths = write_results(results, tmp)
            trials = pd.read_csv(paths["trials"])
            histories = sorted(p.name for p in Path(paths["history_dir"]).iterdir())
        self.assertEqual(list(trials["rank"]), [1, 2])
        self.assertIn("val_MAE", trials.columns)
        self.assertEqual(histories, ["trial_000.csv", "trial_001.csv"])


if __name__ == "__main__":
    unittest.main()

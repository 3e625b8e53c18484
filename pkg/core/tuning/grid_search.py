import itertools
import json
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple

import pandas as pd

from core.analysis.metrics import regression_metrics
from core.dataset.prepare import PreparedDataset
from core.errors import ConfigError, TrainingDivergedError
from core.nbeatsx.config import NBeatsXConfig, StackSpec, default_stacks
from core.nbeatsx.model import predict_arrays
from core.nbeatsx.trainer import train
from core.runlog import log

STATUS_OK = "ok"
STATUS_ABORTED = "aborted"


@dataclass
class StackChoice:
    name: str
    stacks: List[StackSpec]


@dataclass
class GridSpec:
    learning_rate: List[float] = field(default_factory=lambda: [0.003])
    dropout_p: List[float] = field(default_factory=lambda: [0.1])
    batch_size: List[int] = field(default_factory=lambda: [128])
    lookback: List[int] = field(default_factory=lambda: [12])
    stacks: List[StackChoice] = field(default_factory=lambda: [StackChoice("default", default_stacks())])
    max_epochs: Optional[int] = None
    early_stop_patience: Optional[int] = None

    def __len__(self) -> int:
        return len(self.learning_rate) * len(self.dropout_p) * len(self.batch_size) * len(self.lookback) * len(self.stacks)

    def validate(self) -> None:
        if len(self) == 0:
            raise ConfigError("Grid is empty: every axis needs at least one value")

    def cells(self) -> List[Tuple[StackChoice, int, int, float, float]]:
        """Cartesian product in a fixed order: stacks, lookback, batch size, dropout, learning rate."""
        return list(itertools.product(self.stacks, self.lookback, self.batch_size, self.dropout_p, self.learning_rate))

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "GridSpec":
        def _list(key: str, cast, default: List) -> List:
            value = data.get(key, default)
            if not isinstance(value, list):
                value = [value]
            return [cast(v) for v in value]

        choices = []
        for i, item in enumerate(data.get("stacks") or [{"name": "default"}]):
            if not isinstance(item, dict):
                raise ConfigError(f"Grid stack choice must be an object: {item!r}")
            specs = item.get("stacks")
            choices.append(StackChoice(
                name=str(item.get("name") or f"stacks{i}"),
                stacks=[StackSpec.from_dict(s) for s in specs] if specs else default_stacks(),
            ))
        grid = cls(
            learning_rate=_list("learning_rate", float, [0.003]),
            dropout_p=_list("dropout_p", float, [0.1]),
            batch_size=_list("batch_size", int, [128]),
            lookback=_list("lookback", int, [12]),
            stacks=choices,
            max_epochs=int(data["max_epochs"]) if data.get("max_epochs") else None,
            early_stop_patience=int(data["early_stop_patience"]) if data.get("early_stop_patience") is not None else None,
        )
        grid.validate()
        return grid


def load_grid(path: str) -> GridSpec:
    p = Path(path)
    if not p.exists():
        raise ConfigError(f"Grid file not found: {path}")
    with open(p, "r", encoding="utf-8-sig") as f:
        return GridSpec.from_dict(json.load(f))


@dataclass
class TrialResult:
    index: int
    seed: int
    params: Dict[str, Any]
    status: str = STATUS_OK
    reason: str = ""
    val_metrics: Optional[Dict[str, Any]] = None
    history_summary: Dict[str, Any] = field(default_factory=dict)
    history: List[Dict[str, Any]] = field(default_factory=list)
    wall_seconds: float = 0.0
    rank: int = 0
    config: Optional[NBeatsXConfig] = None

    def sort_key(self) -> Tuple:
        if self.status != STATUS_OK or not self.val_metrics:
            return (1, 0.0, 0.0, self.index)
        return (0, self.val_metrics["MAE"], self.val_metrics["MSE"], self.index)

    def to_row(self) -> Dict[str, Any]:
        m = self.val_metrics or {}
        return {
            "rank": self.rank,
            "trial": self.index,
            "status": self.status,
            "seed": self.seed,
            **self.params,
            "val_MAE": m.get("MAE"),
            "val_MSE": m.get("MSE"),
            "val_RMSE": m.get("RMSE"),
            "val_R2": m.get("R2"),
            "epochs_run": self.history_summary.get("epochs_run"),
            "best_epoch": self.history_summary.get("best_epoch"),
            "wall_seconds": round(self.wall_seconds, 3),
            "reason": self.reason,
        }


def _run_trial(
    index: int,
    cell: Tuple[StackChoice, int, int, float, float],
    grid: GridSpec,
    dataset: PreparedDataset,
    base: NBeatsXConfig,
    base_seed: int,
    verbose: bool,
) -> TrialResult:
    choice, lookback, batch_size, dropout_p, lr = cell
    seed = base_seed + index
    params = {
        "learning_rate": lr,
        "dropout_p": dropout_p,
        "batch_size": batch_size,
        "lookback": lookback,
        "stacks": choice.name,
    }
    result = TrialResult(index=index, seed=seed, params=params)
    started = time.perf_counter()
    try:
        config = base.with_overrides(
            learning_rate=lr,
            dropout_p=dropout_p,
            batch_size=batch_size,
            lookback=lookback,
            stacks=choice.stacks,
            seed=seed,
            horizon=dataset.horizon,
            max_epochs=grid.max_epochs,
            early_stop_patience=grid.early_stop_patience,
        )
        result.config = config
        windows = dataset.windows(lookback)
        if len(windows["train"]) == 0 or len(windows["val"]) < 2:
            result.status = STATUS_ABORTED
            result.reason = "not enough train or validation windows"
            return result
        model, history = train(config, windows["train"], windows["val"])
        forecasts = predict_arrays(model, windows["val"], dataset.scaler)
        result.val_metrics = regression_metrics(windows["val"].target_raw[:, -1], forecasts.total[:, -1]).to_dict()
        result.history_summary = history.summary()
        result.history = history.to_dicts()
    except TrainingDivergedError as e:
        result.status = STATUS_ABORTED
        result.reason = f"diverged: {e}"
        result.history = list(e.history)
    except ConfigError as e:
        result.status = STATUS_ABORTED
        result.reason = f"invalid config: {e}"
    finally:
        result.wall_seconds = time.perf_counter() - started
    if verbose:
        mae = result.val_metrics["MAE"] if result.val_metrics else None
        log(f"[Tune] trial {index} {params} status={result.status} val_MAE={mae}")
    return result


def rank_results(results: Sequence[TrialResult]) -> List[TrialResult]:
    """Completed trials by validation MAE, then MSE, then trial index; aborted trials last."""
    ranked = sorted(results, key=lambda r: r.sort_key())
    for i, r in enumerate(ranked, start=1):
        r.rank = i
    return ranked


def grid_search(
    grid: GridSpec,
    dataset: PreparedDataset,
    base_config: Optional[NBeatsXConfig] = None,
    base_seed: int = 0,
    workers: int = 1,
    verbose: bool = False,
) -> List[TrialResult]:
    """Train every grid cell once with seed ``base_seed + trial_index``."""
    grid.validate()
    base = base_config or NBeatsXConfig()
    cells = grid.cells()
    for lookback in grid.lookback:
        dataset.windows(lookback)
    if verbose:
        log(f"[Tune] {len(cells)} trial(s) on {dataset.variant}, workers={max(1, workers)}")
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            futures = [
                pool.submit(_run_trial, i, cell, grid, dataset, base, base_seed, verbose) for i, cell in enumerate(cells)
            ]
            results = [f.result() for f in futures]
    else:
        results = [_run_trial(i, cell, grid, dataset, base, base_seed, verbose) for i, cell in enumerate(cells)]
    return rank_results(results)


def write_results(results: Sequence[TrialResult], out_dir: str) -> Dict[str, str]:
    out = Path(out_dir)
    hist_dir = out / "trial_history"
    hist_dir.mkdir(parents=True, exist_ok=True)
    trials_path = out / "trials.csv"
    pd.DataFrame([r.to_row() for r in results]).to_csv(trials_path, index=False, lineterminator="\n")
    for r in results:
        pd.DataFrame(r.history, columns=["epoch", "train_loss", "val_loss"]).to_csv(
            hist_dir / f"trial_{r.index:03d}.csv", index=False, lineterminator="\n"
        )
    return {"trials": str(trials_path), "history_dir": str(hist_dir)}

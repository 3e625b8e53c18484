import json
from pathlib import Path
from typing import Dict, List, Optional

import numpy as np
import pandas as pd

from core.analysis.baseline import BASELINES, baseline_forecasts
from core.analysis.extremes import extreme_slice_mae
from core.analysis.metrics import per_step_metrics, regression_metrics
from core.analysis.thresholds import ExtremeThresholds, category_counts, compute_thresholds
from core.dataset.windows import WindowSet
from core.nbeatsx.model import ForecastBatch


def evaluate_forecasts(
    forecasts: ForecastBatch,
    windows: WindowSet,
    history: pd.Series,
    thresholds: Optional[ExtremeThresholds] = None,
) -> Dict:
    """Metrics at t+H, over all steps and per step, extreme slices and baseline comparison.

    ``history`` is the raw target indexed by hour; it feeds the thresholds
    (unless given) and the baselines.
    """
    horizon = windows.horizon
    actual = windows.target_raw
    predicted = forecasts.total
    final_y = actual[:, -1]
    final_yhat = predicted[:, -1]
    thresholds = thresholds or compute_thresholds(history.to_numpy())

    report: Dict = {
        "horizon": horizon,
        "windows": len(windows),
        "t_plus_h": regression_metrics(final_y, final_yhat).to_dict(),
        "all_steps": regression_metrics(actual.ravel(), predicted.ravel()).to_dict(),
        "per_step": per_step_metrics(actual, predicted),
        "thresholds": thresholds.to_dict(),
        "extreme_slices": extreme_slice_mae(final_y, final_yhat, thresholds),
        "category_counts": category_counts(final_y, thresholds),
        "baselines": {},
    }

    target_hours = windows.target_hours(horizon)
    model_at = pd.Series(final_yhat, index=target_hours)
    actual_at = pd.Series(final_y, index=target_hours)
    for kind in BASELINES:
        base = baseline_forecasts(history, kind, horizon)
        common = target_hours[target_hours.isin(base.index)]
        if len(common) < 2:
            report["baselines"][kind] = {"metrics": None, "model_mae_same_hours": None}
            continue
        base_metrics = regression_metrics(actual_at.loc[common], base.loc[common])
        model_metrics = regression_metrics(actual_at.loc[common], model_at.loc[common])
        improvement = None
        if base_metrics.mae > 0:
            improvement = 1.0 - model_metrics.mae / base_metrics.mae
        report["baselines"][kind] = {
            "metrics": base_metrics.to_dict(),
            "model_mae_same_hours": model_metrics.mae,
            "relative_mae_improvement": improvement,
        }
    return report


def _metric_rows(report: Dict) -> List[Dict]:
    rows = [dict(scope="t_plus_h", step=report["horizon"], **report["t_plus_h"])]
    rows.append(dict(scope="all_steps", step=0, **report["all_steps"]))
    for item in report["per_step"]:
        row = {k: v for k, v in item.items() if k != "step"}
        rows.append(dict(scope="per_step", step=item["step"], **row))
    for kind, item in report["baselines"].items():
        if item["metrics"]:
            rows.append(dict(scope=f"baseline_{kind}", step=report["horizon"], **item["metrics"]))
    return rows


def write_report(report: Dict, out_dir: str, name: str = "metrics") -> Dict[str, str]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    json_path = out / f"{name}.json"
    csv_path = out / f"{name}.csv"
    with open(json_path, "w", encoding="utf-8") as f:
        json.dump(report, f, ensure_ascii=False, indent=2, sort_keys=True)
    pd.DataFrame(_metric_rows(report), columns=["scope", "step", "MAE", "MSE", "RMSE", "R2", "n"]).to_csv(
        csv_path, index=False, lineterminator="\n"
    )
    return {"json": str(json_path), "csv": str(csv_path)}

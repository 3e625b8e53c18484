from pathlib import Path
from typing import Optional

import numpy as np
import pandas as pd

from core.errors import DataError
from core.ingest.timeline import ONE_HOUR
from core.nbeatsx.model import ForecastBatch

COMPONENTS = ("trend", "seasonality", "exogenous")
DECOMPOSITION_COLUMNS = ["hour", "actual", "total", *COMPONENTS, *[f"{c}_centered" for c in COMPONENTS]]


def export_decomposition(
    forecasts: ForecastBatch,
    actuals: np.ndarray,
    day,
    path: Optional[str] = None,
    step: Optional[int] = None,
) -> pd.DataFrame:
    """24-row table of the step-ahead forecast for every hour of ``day``.

    ``actuals`` is the (N, H) raw target array aligned with ``forecasts``.
    Centered columns subtract each component's mean over the day.
    """
    horizon = forecasts.total.shape[1] if len(forecasts) else int(step or 0)
    step = int(step or horizon)
    if not 1 <= step <= horizon:
        raise DataError(f"Step {step} outside horizon 1..{horizon}")
    start = pd.Timestamp(day).normalize()
    hours = pd.date_range(start, periods=24, freq=ONE_HOUR)
    position = pd.Series(np.arange(len(forecasts)), index=forecasts.anchors)
    wanted = hours - step * ONE_HOUR
    missing = [str(h) for h, a in zip(hours, wanted) if a not in position.index]
    if missing:
        raise DataError(
            f"Forecasts do not cover {start.date()}: {len(missing)} hour(s) missing",
            detail={"missing": missing[:24]},
        )
    rows = position.loc[wanted].to_numpy()
    col = step - 1
    table = pd.DataFrame({
        "hour": hours,
        "actual": np.asarray(actuals)[rows, col],
        "total": forecasts.total[rows, col],
        "trend": forecasts.trend[rows, col],
        "seasonality": forecasts.seasonality[rows, col],
        "exogenous": forecasts.exogenous[rows, col],
    })
    for c in COMPONENTS:
        table[f"{c}_centered"] = table[c] - table[c].mean()
    if path:
        Path(path).parent.mkdir(parents=True, exist_ok=True)
        table.to_csv(path, index=False, date_format="%Y-%m-%d %H:%M:%S", lineterminator="\n")
    return table[DECOMPOSITION_COLUMNS]

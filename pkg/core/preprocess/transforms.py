from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from core.errors import DataError
from core.ingest.timeline import ONE_HOUR
from core.runlog import log

WARMUP_COLUMN = "warmup"

WEATHER_CATEGORIES = ("Clear", "Clouds", "Rain", "Thunderstorm", "Others")
WEATHER_GROUPS = {
    "Clear": "Clear",
    "Clouds": "Clouds",
    "Mist": "Clouds",
    "Rain": "Rain",
    "Drizzle": "Rain",
    "Thunderstorm": "Thunderstorm",
    "Fog": "Others",
    "Haze": "Others",
    "Snow": "Others",
    "Smoke": "Others",
}

COVID_WINDOW = (pd.Timestamp("2020-04-01 00:00:00"), pd.Timestamp("2020-07-31 23:00:00"))

ALIGN_CENTERED = "centered"
ALIGN_TRAILING = "trailing"


def group_weather(condition_raw: str) -> str:
    try:
        return WEATHER_GROUPS[condition_raw]
    except KeyError:
        raise DataError(f"Unknown weather condition: {condition_raw!r}")


def weather_column(category: str) -> str:
    return f"weather_{category.lower()}"


WEATHER_ONE_HOT_COLUMNS = [weather_column(c) for c in WEATHER_CATEGORIES]


def one_hot_weather(status: pd.Series) -> pd.DataFrame:
    out = pd.DataFrame(index=status.index)
    for category in WEATHER_CATEGORIES:
        out[weather_column(category)] = (status == category).astype(np.int64)
    return out


@dataclass(frozen=True)
class LagSpec:
    column: str
    lags: int = 12
    rolling_window: Optional[int] = None
    alignment: str = ALIGN_CENTERED

    def validate(self) -> None:
        if int(self.lags) < 1:
            raise DataError(f"Lag window must be >= 1 for {self.column}")
        if self.rolling_window is not None and int(self.rolling_window) < 2:
            raise DataError(f"Rolling window must be >= 2 for {self.column}")
        if self.alignment not in (ALIGN_CENTERED, ALIGN_TRAILING):
            raise DataError(f"Unknown rolling alignment: {self.alignment}")


def lag_column(column: str, k: int) -> str:
    return f"{column}_lag_{k}"


def rolling_column(column: str, window: int) -> str:
    return f"{column}_roll_{window}"


def _on_full_grid(table: pd.DataFrame, column: str) -> pd.Series:
    """Column values on the complete hourly grid; excluded hours become NaN."""
    if column not in table.columns:
        raise DataError(f"Column not found: {column}")
    if table.empty:
        return table[column].astype(float)
    grid = pd.date_range(table.index.min(), table.index.max(), freq=ONE_HOUR)
    return table[column].astype(float).reindex(grid)


def _mark_warmup(table: pd.DataFrame, columns: Sequence[str]) -> pd.DataFrame:
    incomplete = table[list(columns)].isna().any(axis=1)
    if WARMUP_COLUMN in table.columns:
        table[WARMUP_COLUMN] = table[WARMUP_COLUMN].astype(bool) | incomplete
    else:
        table[WARMUP_COLUMN] = incomplete
    return table


def exclude_window(table: pd.DataFrame, start=COVID_WINDOW[0], end=COVID_WINDOW[1]) -> pd.DataFrame:
    """Drop rows inside the closed window [start, end] and record the gap."""
    s, e = pd.Timestamp(start), pd.Timestamp(end)
    inside = (table.index >= s) & (table.index <= e)
    out = table.loc[~inside].copy()
    gaps: List[Tuple[str, str]] = list(table.attrs.get("gaps", []))
    if inside.any():
        gaps.append((str(s), str(e)))
    out.attrs["gaps"] = gaps
    return out


def add_lags(table: pd.DataFrame, spec: LagSpec) -> pd.DataFrame:
    spec.validate()
    if spec.lags >= len(table):
        raise DataError(f"Lag window {spec.lags} must be shorter than the table ({len(table)} rows)")
    full = _on_full_grid(table, spec.column)
    out = table.copy()
    names = []
    for k in range(1, spec.lags + 1):
        name = lag_column(spec.column, k)
        out[name] = full.shift(k).reindex(table.index).to_numpy()
        names.append(name)
    return _mark_warmup(out, names)


def add_rolling_mean(table: pd.DataFrame, spec: LagSpec) -> pd.DataFrame:
    """Rolling mean of ``spec.column``; the centered window for row t spans t - W//2 .. t - W//2 + W - 1."""
    spec.validate()
    window = int(spec.rolling_window or 0)
    if window < 2:
        raise DataError(f"Rolling window missing for {spec.column}")
    if window > len(table):
        raise DataError(f"Rolling window {window} exceeds table length {len(table)}")
    full = _on_full_grid(table, spec.column)
    trailing = full.rolling(window=window, min_periods=window).mean()
    if spec.alignment == ALIGN_CENTERED:
        log(
            f"[Preprocess][WARNING] centered rolling mean on {spec.column} (W={window}) reads "
            f"{(window - 1) // 2} future hour(s); set preprocess.rolling_alignment=trailing for deployment"
        )
        rolled = trailing.shift(-((window - 1) // 2))
    else:
        rolled = trailing
    out = table.copy()
    name = rolling_column(spec.column, window)
    out[name] = rolled.reindex(table.index).to_numpy()
    return _mark_warmup(out, [name])


def exclusion_windows_from_config(items: Optional[List]) -> List[Tuple[pd.Timestamp, pd.Timestamp]]:
    if items is None:
        return [COVID_WINDOW]
    out = []
    for item in items:
        if isinstance(item, dict):
            out.append((pd.Timestamp(item["from"]), pd.Timestamp(item["to"])))
        else:
            out.append((pd.Timestamp(item[0]), pd.Timestamp(item[1])))
    return out


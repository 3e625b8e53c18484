from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from core.cleaner.visit_cleaner import CleaningReport, VisitCleaner
from core.errors import DataError
from core.features.flow import HourlySeries, compute_flow_series, extreme_indicator
from core.ingest.records import CalendarFlags, WeatherObservation
from core.ingest.sources import SourceBundle
from core.ingest.timeline import HourIndex, build_hour_index
from core.preprocess.transforms import WEATHER_CATEGORIES, exclude_window, group_weather

CALENDAR_COLUMNS = ["year", "month", "day_of_month", "day_of_week", "hour_of_day"]
FLOW_COLUMNS = [
    "boarding_count",
    "boarding_count_esi12",
    "boarding_count_esi3",
    "boarding_count_esi45",
    "avg_boarding_time",
    "waiting_count",
    "waiting_count_esi12",
    "waiting_count_esi3",
    "waiting_count_esi45",
    "avg_waiting_time",
    "treatment_count",
    "avg_treatment_time",
    "extreme_indicator",
]
CONTEXT_COLUMNS = ["hospital_census", "temperature_f", "weather_raw", "weather_status", "holiday", "game1", "game2"]
HOURLY_COLUMNS = CALENDAR_COLUMNS + FLOW_COLUMNS + CONTEXT_COLUMNS
BINARY_COLUMNS = {"extreme_indicator", "holiday", "game1", "game2"}
TARGET_COLUMN = "boarding_count"


def _weather_frame(weather: Sequence[WeatherObservation], hours: pd.DatetimeIndex) -> pd.DataFrame:
    if not weather:
        return pd.DataFrame({"temperature_f": np.nan, "weather_raw": "", "weather_status": ""}, index=hours)
    obs = pd.DataFrame(
        {
            "temperature_f": [w.temperature_f for w in weather],
            "weather_raw": [w.condition_raw for w in weather],
        },
        index=pd.DatetimeIndex([w.hour for w in weather]),
    )
    obs = obs[~obs.index.duplicated(keep="last")].sort_index()
    # Missing hours take the previous observation; hours before the first one take the first.
    aligned = obs.reindex(hours).ffill().bfill()
    aligned["weather_status"] = [group_weather(c) for c in aligned["weather_raw"]]
    return aligned


def assemble_hourly_records(
    series: Dict[str, HourlySeries],
    weather: Sequence[WeatherObservation],
    calendar: CalendarFlags,
    hour_index: HourIndex,
) -> pd.DataFrame:
    """One row per hour of ``hour_index`` holding every engineered feature."""
    hours = hour_index.hours
    table = pd.DataFrame(index=hours)
    table.index.name = "hour"
    table["year"] = hours.year.astype(np.int64)
    table["month"] = hours.month.astype(np.int64)
    table["day_of_month"] = hours.day.astype(np.int64)
    table["day_of_week"] = hours.dayofweek.astype(np.int64)
    table["hour_of_day"] = hours.hour.astype(np.int64)
    for name, s in series.items():
        if len(s.values) != len(hours):
            raise DataError(f"Series {name} has length {len(s.values)}, hour index has {len(hours)}")
        table[name] = s.values
    wx = _weather_frame(weather, hours)
    for col in ("temperature_f", "weather_raw", "weather_status"):
        table[col] = wx[col].to_numpy()
    dates = hours.date
    table["holiday"] = np.array([d in calendar.holiday_dates for d in dates], dtype=np.int64)
    table["game1"] = np.array([d in calendar.game1_dates for d in dates], dtype=np.int64)
    table["game2"] = np.array([d in calendar.game2_dates for d in dates], dtype=np.int64)
    return table[[c for c in HOURLY_COLUMNS if c in table.columns]]


def default_hour_index(bundle: SourceBundle) -> HourIndex:
    """Study window: the weather feed's hour range, else the span of ED arrivals."""
    if bundle.weather:
        first = bundle.weather[0].hour
        last = bundle.weather[-1].hour
    elif bundle.visits:
        first = min(v.arrival_time for v in bundle.visits)
        last = max(v.arrival_time for v in bundle.visits)
    else:
        raise DataError("No ED visits or weather rows to derive an hour index from")
    return build_hour_index(pd.Timestamp(first).floor("h"), pd.Timestamp(last).floor("h"))


@dataclass
class FeaturizeResult:
    table: pd.DataFrame
    report: CleaningReport
    hour_index: HourIndex


def featurize(
    bundle: SourceBundle,
    cleaner: Optional[VisitCleaner] = None,
    exclusions: Optional[List[Tuple[pd.Timestamp, pd.Timestamp]]] = None,
    hour_index: Optional[HourIndex] = None,
) -> FeaturizeResult:
    """Clean, impute, compute flow series, assemble, drop excluded windows, flag extremes."""
    cleaner = cleaner or VisitCleaner()
    kept, report = cleaner.clean_visits(bundle.visits)
    kept = cleaner.impute_esi(kept, report)
    index = hour_index or default_hour_index(bundle)
    series = compute_flow_series(kept, bundle.stays, index)
    table = assemble_hourly_records(series, bundle.weather, bundle.calendar, index)
    for start, end in exclusions or []:
        table = exclude_window(table, start, end)
    boarding = HourlySeries("boarding_count", "count", table.index, table["boarding_count"].to_numpy())
    flags = extreme_indicator(boarding)
    table["extreme_indicator"] = flags.values
    return FeaturizeResult(table=table[[c for c in HOURLY_COLUMNS if c in table.columns]], report=report, hour_index=index)


def write_hourly_table(table: pd.DataFrame, path: str) -> None:
    table.to_csv(path, index=True, date_format="%Y-%m-%d %H:%M:%S", lineterminator="\n", float_format="%.10g")


def read_hourly_table(path: str) -> pd.DataFrame:
    table = pd.read_csv(path, parse_dates=["hour"], keep_default_na=False, na_values=[""])
    table = table.set_index("hour")
    for col in ("weather_raw", "weather_status"):
        if col in table.columns:
            table[col] = table[col].fillna("").astype(str)
    return table


def describe_hourly(table: pd.DataFrame) -> Dict[str, Dict]:
    """Mean, std, min and max per numeric column, weather shares, and binary event counts."""
    out: Dict[str, Dict] = {"numeric": {}, "weather_status": {}, "events": {}}
    out["date_range"] = {"start": str(table.index.min()), "end": str(table.index.max()), "rows": int(len(table))}
    for col in table.columns:
        if col in BINARY_COLUMNS:
            out["events"][col] = int(table[col].sum())
        elif col in CALENDAR_COLUMNS or col in ("weather_raw", "weather_status"):
            continue
        else:
            v = table[col].astype(float)
            out["numeric"][col] = {
                "mean": round(float(v.mean()), 4),
                "std": round(float(v.std(ddof=0)), 4),
                "min": round(float(v.min()), 4),
                "max": round(float(v.max()), 4),
            }
    if "weather_status" in table.columns and len(table):
        shares = table["weather_status"].value_counts(normalize=True)
        out["weather_status"] = {c: round(float(shares.get(c, 0.0)) * 100.0, 2) for c in WEATHER_CATEGORIES}
    if "holiday" in table.columns:
        out["event_days"] = {
            col: int(pd.Series(table.index.date[table[col].to_numpy() == 1]).nunique())
            for col in ("holiday", "game1", "game2") if col in table.columns
        }
    return out

import numpy as np
import pandas as pd

from core.features.assemble import HOURLY_COLUMNS


def make_hourly_table(n_hours: int = 400, start: str = "2019-03-01", seed: int = 0) -> pd.DataFrame:
    """Hourly feature table with every assembled column and a daily boarding cycle."""
    rng = np.random.default_rng(seed)
    hours = pd.date_range(start, periods=n_hours, freq="h", name="hour")
    phase = 2 * np.pi * hours.hour.to_numpy() / 24.0
    boarding = np.round(30 + 10 * np.sin(phase) + rng.normal(0, 2, n_hours)).clip(0)
    table = pd.DataFrame(index=hours)
    table["year"] = hours.year
    table["month"] = hours.month
    table["day_of_month"] = hours.day
    table["day_of_week"] = hours.dayofweek
    table["hour_of_day"] = hours.hour
    table["boarding_count"] = boarding.astype(np.int64)
    for g, share in (("esi12", 0.3), ("esi3", 0.5), ("esi45", 0.2)):
        table[f"boarding_count_{g}"] = np.round(boarding * share).astype(np.int64)
    table["avg_boarding_time"] = 300 + 20 * rng.standard_normal(n_hours)
    table["waiting_count"] = rng.poisson(8, n_hours)
    for g in ("esi12", "esi3", "esi45"):
        table[f"waiting_count_{g}"] = rng.poisson(3, n_hours)
    table["avg_waiting_time"] = 40 + 5 * rng.standard_normal(n_hours)
    table["treatment_count"] = rng.poisson(25, n_hours)
    table["avg_treatment_time"] = 180 + 15 * rng.standard_normal(n_hours)
    cutoff = boarding.mean() + boarding.std()
    table["extreme_indicator"] = (boarding > cutoff).astype(np.int64)
    table["hospital_census"] = rng.poisson(600, n_hours)
    table["temperature_f"] = np.round(60 + 15 * np.sin(phase) + rng.normal(0, 3, n_hours), 1)
    conditions = rng.choice(["Clear", "Clouds", "Rain"], size=n_hours, p=[0.6, 0.3, 0.1])
    table["weather_raw"] = conditions
    table["weather_status"] = conditions
    days = hours.normalize()
    table["holiday"] = (days == days[0] + pd.Timedelta(days=3)).astype(np.int64)
    table["game1"] = (hours.dayofweek == 5).astype(np.int64)
    table["game2"] = np.zeros(n_hours, dtype=np.int64)
    return table[HOURLY_COLUMNS]

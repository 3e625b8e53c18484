from typing import Dict

import pandas as pd

from core.errors import ConfigError
from core.ingest.timeline import ONE_HOUR

PERSISTENCE = "persistence"
SEASONAL_NAIVE = "seasonal_naive_24h"
BASELINES = (PERSISTENCE, SEASONAL_NAIVE)


def baseline_forecasts(series: pd.Series, kind: str, horizon: int = 6) -> pd.Series:
    """Forecast for each target hour t+H, indexed by that target hour.

    persistence: y(t); seasonal_naive_24h: y(t+H-24). Anchors whose source
    hour is missing (series start or an excluded window) are skipped.
    """
    if kind == PERSISTENCE:
        lag_hours = horizon
    elif kind == SEASONAL_NAIVE:
        lag_hours = 24
    else:
        raise ConfigError(f"Unknown baseline: {kind}")
    targets = series.index
    sources = targets - lag_hours * ONE_HOUR
    values = series.reindex(sources).to_numpy()
    out = pd.Series(values, index=targets, name=kind)
    return out.dropna()


def all_baselines(series: pd.Series, horizon: int = 6) -> Dict[str, pd.Series]:
    return {kind: baseline_forecasts(series, kind, horizon) for kind in BASELINES}

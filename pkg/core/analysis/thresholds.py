import math
from dataclasses import dataclass
from typing import Dict, Sequence

import numpy as np

from core.errors import DataError

NORMAL = "Normal"
EXTREME = "Extreme"
VERY_EXTREME = "VeryExtreme"
HIGHLY_EXTREME = "HighlyExtreme"
CATEGORIES = (NORMAL, EXTREME, VERY_EXTREME, HIGHLY_EXTREME)


def _round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


@dataclass(frozen=True)
class ExtremeThresholds:
    mean: float
    std: float
    t1: int
    t2: int
    t3: int

    def to_dict(self) -> Dict:
        return {"mean": self.mean, "std": self.std, "t1": self.t1, "t2": self.t2, "t3": self.t3}


def thresholds_from_moments(mean: float, std: float) -> ExtremeThresholds:
    t1, t2, t3 = (_round_half_up(mean + k * std) for k in (1, 2, 3))
    if not t1 < t2 < t3:
        raise DataError(
            f"Degenerate extreme thresholds {t1}/{t2}/{t3} (mean={mean}, std={std})",
            detail={"mean": mean, "std": std},
        )
    return ExtremeThresholds(float(mean), float(std), t1, t2, t3)


def compute_thresholds(series: Sequence[float]) -> ExtremeThresholds:
    """Integer thresholds round(mean + k*std), k = 1, 2, 3, population std."""
    values = np.asarray(series, dtype=np.float64)
    if values.size == 0:
        raise DataError("Cannot compute thresholds of an empty series")
    return thresholds_from_moments(float(values.mean()), float(values.std()))


def classify_extreme(value: float, thresholds: ExtremeThresholds) -> str:
    if value <= thresholds.t1:
        return NORMAL
    if value <= thresholds.t2:
        return EXTREME
    if value <= thresholds.t3:
        return VERY_EXTREME
    return HIGHLY_EXTREME


def classify_array(values: Sequence[float], thresholds: ExtremeThresholds) -> np.ndarray:
    v = np.asarray(values, dtype=np.float64)
    bins = np.array([thresholds.t1, thresholds.t2, thresholds.t3], dtype=np.float64)
    # right=True puts a value equal to a threshold in the lower band.
    codes = np.digitize(v, bins, right=True)
    return np.array(CATEGORIES, dtype=object)[codes]


def category_counts(values: Sequence[float], thresholds: ExtremeThresholds) -> Dict[str, int]:
    labels = classify_array(values, thresholds)
    return {c: int(np.sum(labels == c)) for c in CATEGORIES}

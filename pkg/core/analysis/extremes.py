from typing import Dict, List

import numpy as np

from core.analysis.metrics import _pair, mean_absolute_error
from core.analysis.thresholds import CATEGORIES, ExtremeThresholds, classify_array


def extreme_slice_mae(y, yhat, thresholds: ExtremeThresholds) -> Dict[str, List[Dict]]:
    """MAE on hours whose actual value exceeds t1, t2, t3, plus the disjoint bands.

    Cumulative slices nest (> t1 includes > t2). Empty slices report ``mae`` None.
    """
    y, yhat = _pair(y, yhat)
    cumulative = []
    for label, t in (("gt_t1", thresholds.t1), ("gt_t2", thresholds.t2), ("gt_t3", thresholds.t3)):
        mask = y > t
        cumulative.append({
            "slice": label,
            "threshold": t,
            "n": int(mask.sum()),
            "mae": mean_absolute_error(y[mask], yhat[mask]) if mask.any() else None,
        })
    labels = classify_array(y, thresholds)
    bands = []
    for category in CATEGORIES:
        mask = labels == category
        bands.append({
            "category": category,
            "n": int(mask.sum()),
            "mae": mean_absolute_error(y[mask], yhat[mask]) if mask.any() else None,
        })
    return {"cumulative": cumulative, "bands": bands}

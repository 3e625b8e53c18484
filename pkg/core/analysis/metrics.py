from dataclasses import dataclass
from typing import Dict, List, Optional

import numpy as np

from core.errors import DataError


@dataclass(frozen=True)
class MetricsReport:
    mae: float
    mse: float
    rmse: float
    r2: Optional[float]
    n: int

    def to_dict(self) -> Dict:
        return {"MAE": self.mae, "MSE": self.mse, "RMSE": self.rmse, "R2": self.r2, "n": self.n}


def _pair(y, yhat) -> tuple:
    y = np.asarray(y, dtype=np.float64).ravel()
    yhat = np.asarray(yhat, dtype=np.float64).ravel()
    if y.shape != yhat.shape:
        raise DataError(f"Length mismatch: {len(y)} actuals vs {len(yhat)} predictions")
    return y, yhat


def regression_metrics(y, yhat) -> MetricsReport:
    """MAE, MSE, RMSE and R2 = 1 - SSE/SST; R2 is None for a constant ``y``."""
    y, yhat = _pair(y, yhat)
    if len(y) < 2:
        raise DataError(f"Need at least 2 points for metrics, got {len(y)}")
    err = y - yhat
    mse = float(np.mean(err * err))
    sst = float(np.sum((y - y.mean()) ** 2))
    r2 = None if sst == 0.0 else 1.0 - float(np.sum(err * err)) / sst
    return MetricsReport(
        mae=float(np.mean(np.abs(err))),
        mse=mse,
        rmse=float(np.sqrt(mse)),
        r2=r2,
        n=int(len(y)),
    )


def mean_absolute_error(y, yhat) -> Optional[float]:
    y, yhat = _pair(y, yhat)
    if len(y) == 0:
        return None
    return float(np.mean(np.abs(y - yhat)))


def per_step_metrics(target: np.ndarray, predicted: np.ndarray) -> List[Dict]:
    """Metrics for each horizon step h = 1..H of (N, H) arrays."""
    out = []
    for h in range(target.shape[1]):
        report = regression_metrics(target[:, h], predicted[:, h]).to_dict()
        report["step"] = h + 1
        out.append(report)
    return out

from dataclasses import dataclass, field, replace
from typing import Dict, List

import numpy as np

from core.dataset.variant import VariantMatrix
from core.errors import DataError


@dataclass
class Scaler:
    """Train-only standardization of continuous columns plus the target."""

    mean: Dict[str, float] = field(default_factory=dict)
    std: Dict[str, float] = field(default_factory=dict)
    target_mean: float = 0.0
    target_std: float = 1.0

    @property
    def scaled_columns(self) -> List[str]:
        return list(self.mean.keys())

    def transform(self, matrix: VariantMatrix) -> VariantMatrix:
        features = matrix.features.copy()
        for col in self.scaled_columns:
            if col in features.columns:
                features[col] = (features[col].to_numpy() - self.mean[col]) / self.std[col]
        return replace(matrix, features=features)

    def scale_target(self, y: np.ndarray) -> np.ndarray:
        return (np.asarray(y, dtype=np.float64) - self.target_mean) / self.target_std

    def inverse_target(self, y: np.ndarray) -> np.ndarray:
        return np.asarray(y, dtype=np.float64) * self.target_std + self.target_mean

    def to_dict(self) -> Dict:
        return {
            "mean": dict(self.mean),
            "std": dict(self.std),
            "target_mean": self.target_mean,
            "target_std": self.target_std,
        }

    @classmethod
    def from_dict(cls, data: Dict) -> "Scaler":
        return cls(
            mean={k: float(v) for k, v in (data.get("mean") or {}).items()},
            std={k: float(v) for k, v in (data.get("std") or {}).items()},
            target_mean=float(data.get("target_mean", 0.0)),
            target_std=float(data.get("target_std", 1.0)),
        )


def fit_scaler(train: VariantMatrix) -> Scaler:
    if len(train) == 0:
        raise DataError("Cannot fit a scaler on an empty training segment")
    scaler = Scaler()
    for info in train.catalog:
        if info.binary:
            continue
        values = train.features[info.name].to_numpy(dtype=np.float64)
        std = float(values.std())
        if std == 0.0:
            continue
        scaler.mean[info.name] = float(values.mean())
        scaler.std[info.name] = std
    t_std = float(np.std(train.target))
    scaler.target_mean = float(np.mean(train.target))
    scaler.target_std = t_std if t_std > 0 else 1.0
    return scaler


def apply_scaler(scaler: Scaler, matrix: VariantMatrix) -> VariantMatrix:
    return scaler.transform(matrix)

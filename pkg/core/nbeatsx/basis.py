from dataclasses import dataclass

import numpy as np

from core.errors import ConfigError


@dataclass(frozen=True)
class BasisPair:
    backcast: np.ndarray
    forecast: np.ndarray

    @property
    def size(self) -> int:
        return self.forecast.shape[0]


def _polynomial(p: int, n: int) -> np.ndarray:
    t = np.arange(n, dtype=np.float64) / n
    return np.stack([np.power(t, i) for i in range(p + 1)])


def _fourier(k_max: int, n: int) -> np.ndarray:
    t = np.arange(n, dtype=np.float64)
    rows = [np.ones(n)]
    for k in range(1, k_max + 1):
        rows.append(np.cos(2.0 * np.pi * k * t / n))
        rows.append(np.sin(2.0 * np.pi * k * t / n))
    return np.stack(rows)


def trend_basis(p: int, lookback: int, horizon: int) -> BasisPair:
    """Rows (t/n)^i for i = 0..p over the lookback and the horizon."""
    if p < 0:
        raise ConfigError(f"Trend degree must be >= 0, got {p}")
    return BasisPair(_polynomial(p, lookback), _polynomial(p, horizon))


def seasonality_basis(k_max: int, lookback: int, horizon: int) -> BasisPair:
    """Constant row plus cos/sin pairs for harmonics 1..K; 2K+1 rows."""
    if k_max < 1:
        raise ConfigError(f"Harmonics must be >= 1, got {k_max}")
    return BasisPair(_fourier(k_max, lookback), _fourier(k_max, horizon))

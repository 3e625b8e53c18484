from dataclasses import dataclass
from typing import Iterator, Optional

import numpy as np
import pandas as pd

from core.dataset.scaler import Scaler
from core.dataset.variant import VariantMatrix
from core.ingest.timeline import ONE_HOUR, to_epoch_seconds


@dataclass(frozen=True)
class SupervisedWindow:
    inputs: np.ndarray
    history: np.ndarray
    exo_future: np.ndarray
    target: np.ndarray
    target_raw: np.ndarray
    anchor: pd.Timestamp


@dataclass
class WindowSet:
    """Stacked supervised windows; index ``i`` gives one ``SupervisedWindow``.

    Shapes: inputs (N, L, F), history (N, L), exo_future (N, H, Fx),
    target and target_raw (N, H). ``history`` and ``target`` are in model
    units, ``target_raw`` in patient counts.
    """

    inputs: np.ndarray
    history: np.ndarray
    exo_future: np.ndarray
    target: np.ndarray
    target_raw: np.ndarray
    anchors: pd.DatetimeIndex

    def __len__(self) -> int:
        return len(self.anchors)

    def __getitem__(self, i: int) -> SupervisedWindow:
        return SupervisedWindow(
            inputs=self.inputs[i],
            history=self.history[i],
            exo_future=self.exo_future[i],
            target=self.target[i],
            target_raw=self.target_raw[i],
            anchor=self.anchors[i],
        )

    def __iter__(self) -> Iterator[SupervisedWindow]:
        for i in range(len(self)):
            yield self[i]

    @property
    def lookback(self) -> int:
        return self.inputs.shape[1]

    @property
    def horizon(self) -> int:
        return self.target.shape[1]

    @property
    def n_features(self) -> int:
        return self.inputs.shape[2]

    @property
    def n_exo(self) -> int:
        return self.exo_future.shape[2]

    def take(self, idx: np.ndarray) -> "WindowSet":
        return WindowSet(
            inputs=self.inputs[idx],
            history=self.history[idx],
            exo_future=self.exo_future[idx],
            target=self.target[idx],
            target_raw=self.target_raw[idx],
            anchors=self.anchors[idx],
        )

    def target_hours(self, step: int) -> pd.DatetimeIndex:
        return self.anchors + step * ONE_HOUR


def _empty(lookback: int, horizon: int, n_features: int, n_exo: int) -> WindowSet:
    return WindowSet(
        inputs=np.zeros((0, lookback, n_features)),
        history=np.zeros((0, lookback)),
        exo_future=np.zeros((0, horizon, n_exo)),
        target=np.zeros((0, horizon)),
        target_raw=np.zeros((0, horizon)),
        anchors=pd.DatetimeIndex([], name="anchor"),
    )


def make_windows(
    segment: VariantMatrix,
    lookback: int = 12,
    horizon: int = 6,
    scaler: Optional[Scaler] = None,
) -> WindowSet:
    """One window per anchor whose lookback and horizon rows are consecutive hours.

    The anchor is the last lookback row; targets are the H rows after it.
    """
    n = len(segment)
    exo_cols = segment.known_future_columns()
    n_features = len(segment.columns)
    if n < lookback + horizon:
        return _empty(lookback, horizon, n_features, len(exo_cols))

    seconds = to_epoch_seconds(segment.hours)
    # breaks[i] counts non-hourly steps among rows 0..i.
    step_ok = np.diff(seconds) == 3600
    breaks = np.concatenate([[0], np.cumsum(~step_ok)])
    candidates = np.arange(lookback - 1, n - horizon)
    first = candidates - lookback + 1
    last = candidates + horizon
    anchors = candidates[breaks[last] == breaks[first]]
    if len(anchors) == 0:
        return _empty(lookback, horizon, n_features, len(exo_cols))

    x = segment.features[segment.columns].to_numpy(dtype=np.float64)
    x_exo = segment.features[exo_cols].to_numpy(dtype=np.float64) if exo_cols else np.zeros((n, 0))
    y_raw = np.asarray(segment.target, dtype=np.float64)
    y = scaler.scale_target(y_raw) if scaler is not None else y_raw.copy()

    back = anchors[:, None] + np.arange(-lookback + 1, 1)[None, :]
    ahead = anchors[:, None] + np.arange(1, horizon + 1)[None, :]
    return WindowSet(
        inputs=x[back],
        history=y[back],
        exo_future=x_exo[ahead],
        target=y[ahead],
        target_raw=y_raw[ahead],
        anchors=pd.DatetimeIndex(segment.hours[anchors], name="anchor"),
    )

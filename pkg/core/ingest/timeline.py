from dataclasses import dataclass
from datetime import datetime
from typing import Sequence, Union

import numpy as np
import pandas as pd

from core.errors import DataError

ONE_HOUR = pd.Timedelta(hours=1)

TimeLike = Union[str, datetime, pd.Timestamp]


@dataclass(frozen=True)
class HourIndex:
    start: pd.Timestamp
    end: pd.Timestamp
    hours: pd.DatetimeIndex

    def __len__(self) -> int:
        return len(self.hours)

    def seconds(self) -> np.ndarray:
        return to_epoch_seconds(self.hours)


def _is_hour_aligned(ts: pd.Timestamp) -> bool:
    return ts.minute == 0 and ts.second == 0 and ts.microsecond == 0 and ts.nanosecond == 0


def build_hour_index(start: TimeLike, end: TimeLike) -> HourIndex:
    """Inclusive hourly range between two hour-aligned bounds."""
    s = pd.Timestamp(start)
    e = pd.Timestamp(end)
    if not (_is_hour_aligned(s) and _is_hour_aligned(e)):
        raise DataError(f"Hour index bounds must be hour-aligned: {s} .. {e}")
    if e < s:
        raise DataError(f"Hour index start {s} is after end {e}")
    hours = pd.date_range(s, e, freq=ONE_HOUR)
    hours.name = "hour"
    return HourIndex(s, e, hours)


def to_epoch_seconds(values: Union[Sequence[datetime], pd.DatetimeIndex, np.ndarray]) -> np.ndarray:
    arr = np.asarray(values, dtype="datetime64[s]")
    return arr.astype(np.int64)

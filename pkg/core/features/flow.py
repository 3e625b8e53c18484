from dataclasses import dataclass
from datetime import datetime
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from core.errors import DataError
from core.ingest.records import OB_MARKER, InpatientStay, VisitTimeline
from core.ingest.timeline import HourIndex, to_epoch_seconds

PHASE_BOARDING = "boarding"
PHASE_WAITING = "waiting"
PHASE_TREATMENT = "treatment"
PHASES = (PHASE_BOARDING, PHASE_WAITING, PHASE_TREATMENT)

ESI_G12 = "G12"
ESI_G3 = "G3"
ESI_G45 = "G45"
ESI_GROUPS = (ESI_G12, ESI_G3, ESI_G45)

UNITS_COUNT = "count"
UNITS_MINUTES = "minutes"
UNITS_FLAG = "flag"


@dataclass(frozen=True)
class HourlySeries:
    name: str
    units: str
    hours: pd.DatetimeIndex
    values: np.ndarray

    def __post_init__(self) -> None:
        if len(self.values) != len(self.hours):
            raise DataError(f"Series {self.name} has {len(self.values)} values for {len(self.hours)} hours")

    def to_series(self) -> pd.Series:
        return pd.Series(self.values, index=self.hours, name=self.name)


def esi_group(esi) -> Optional[str]:
    if esi in (1, 2):
        return ESI_G12
    if esi == 3 or esi == OB_MARKER:
        return ESI_G3
    if esi in (4, 5):
        return ESI_G45
    return None


def phase_interval(visit: VisitTimeline, phase: str) -> Optional[Tuple[datetime, datetime]]:
    """Half-open [start, end) interval of a phase, or None when a milestone is absent."""
    if phase == PHASE_BOARDING:
        start, end = visit.bed_request_time, visit.checkout_time
    elif phase == PHASE_WAITING:
        start, end = visit.waiting_start, visit.waiting_end
    elif phase == PHASE_TREATMENT:
        start, end = visit.treatment_start, visit.treatment_end
    else:
        raise DataError(f"Unknown phase: {phase}")
    if start is None or end is None:
        return None
    return start, end


def _phase_bounds(visits: Sequence[VisitTimeline], phase: str, esi_filter: Optional[str]) -> Tuple[np.ndarray, np.ndarray]:
    starts: List[datetime] = []
    ends: List[datetime] = []
    for visit in visits:
        if esi_filter is not None and esi_group(visit.esi) != esi_filter:
            continue
        interval = phase_interval(visit, phase)
        if interval is None:
            continue
        starts.append(interval[0])
        ends.append(interval[1])
    if not starts:
        empty = np.zeros(0, dtype=np.int64)
        return empty, empty
    return to_epoch_seconds(starts), to_epoch_seconds(ends)


def _snapshot_sweep(starts: np.ndarray, ends: np.ndarray, hours: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Count and summed start time of intervals with start <= h < end at every h.

    Needs start <= end per interval. Both sums come from sorted event lists:
    #(start <= h) - #(end <= h), and the start sums of the same two sets.
    """
    if len(starts) == 0:
        return np.zeros(len(hours), dtype=np.int64), np.zeros(len(hours), dtype=np.int64)
    by_start = np.argsort(starts, kind="stable")
    by_end = np.argsort(ends, kind="stable")
    start_sorted = starts[by_start]
    end_sorted = ends[by_end]
    cum_start = np.concatenate([[0], np.cumsum(start_sorted)])
    cum_start_by_end = np.concatenate([[0], np.cumsum(starts[by_end])])
    opened = np.searchsorted(start_sorted, hours, side="right")
    closed = np.searchsorted(end_sorted, hours, side="right")
    count = opened - closed
    start_sum = cum_start[opened] - cum_start_by_end[closed]
    return count.astype(np.int64), start_sum.astype(np.int64)


def _series_name(phase: str, suffix: str, esi_filter: Optional[str]) -> str:
    base = f"{phase}_{suffix}"
    return f"{base}_esi{esi_filter[1:].lower()}" if esi_filter else base


def hourly_phase_count(
    visits: Sequence[VisitTimeline],
    phase: str,
    hour_index: HourIndex,
    esi_filter: Optional[str] = None,
) -> HourlySeries:
    starts, ends = _phase_bounds(visits, phase, esi_filter)
    count, _ = _snapshot_sweep(starts, ends, hour_index.seconds())
    return HourlySeries(_series_name(phase, "count", esi_filter), UNITS_COUNT, hour_index.hours, count)


def hourly_avg_elapsed(visits: Sequence[VisitTimeline], phase: str, hour_index: HourIndex) -> HourlySeries:
    """Mean minutes since phase start over visits in phase at each hour; 0 when nobody is."""
    starts, ends = _phase_bounds(visits, phase, None)
    hours = hour_index.seconds()
    count, start_sum = _snapshot_sweep(starts, ends, hours)
    elapsed_seconds = count * hours - start_sum
    avg = np.zeros(len(hours), dtype=np.float64)
    busy = count > 0
    avg[busy] = elapsed_seconds[busy] / count[busy] / 60.0
    return HourlySeries(f"avg_{phase}_time", UNITS_MINUTES, hour_index.hours, avg)


def hourly_census(stays: Sequence[InpatientStay], hour_index: HourIndex) -> HourlySeries:
    if stays:
        starts = to_epoch_seconds([s.arrival for s in stays])
        ends = to_epoch_seconds([s.discharge for s in stays])
    else:
        starts = ends = np.zeros(0, dtype=np.int64)
    count, _ = _snapshot_sweep(starts, ends, hour_index.seconds())
    return HourlySeries("hospital_census", UNITS_COUNT, hour_index.hours, count)


def extreme_indicator(series: HourlySeries, name: str = "extreme_indicator") -> HourlySeries:
    values = np.asarray(series.values, dtype=np.float64)
    if len(values) == 0:
        raise DataError(f"Cannot flag extremes on empty series {series.name}")
    cutoff = values.mean() + values.std()
    flags = (values > cutoff).astype(np.int64)
    return HourlySeries(name, UNITS_FLAG, series.hours, flags)


def compute_flow_series(
    visits: Sequence[VisitTimeline],
    stays: Sequence[InpatientStay],
    hour_index: HourIndex,
) -> Dict[str, HourlySeries]:
    """Every engineered flow series except the extreme indicator, keyed by column name."""
    out: Dict[str, HourlySeries] = {}
    for phase in PHASES:
        s = hourly_phase_count(visits, phase, hour_index)
        out[s.name] = s
        if phase != PHASE_TREATMENT:
            for group in ESI_GROUPS:
                g = hourly_phase_count(visits, phase, hour_index, esi_filter=group)
                out[g.name] = g
        a = hourly_avg_elapsed(visits, phase, hour_index)
        out[a.name] = a
    census = hourly_census(stays, hour_index)
    out[census.name] = census
    return out

from dataclasses import dataclass, field
from datetime import date, datetime
from typing import Any, Dict, Generic, List, Optional, Set, Tuple, TypeVar, Union

OB_MARKER = "OB"
ESI_LEVELS = {1, 2, 3, 4, 5}
RAW_WEATHER_CONDITIONS = (
    "Clouds", "Clear", "Rain", "Mist", "Thunderstorm",
    "Drizzle", "Fog", "Haze", "Snow", "Smoke",
)

EsiValue = Union[int, str]

# Machine-readable rejection reasons.
REASON_MISSING_FIELD = "missing_required_field"
REASON_BAD_TIMESTAMP = "unparseable_timestamp"
REASON_NON_MONOTONIC = "non_monotonic_timestamps"
REASON_INVALID_ESI = "invalid_esi"
REASON_UNKNOWN_CONDITION = "unknown_condition"
REASON_BAD_TEMPERATURE = "invalid_temperature"
REASON_BAD_DATE = "unparseable_date"
REASON_DUPLICATE_HOUR = "duplicate_hour_superseded"
REASON_BAD_ENCODING = "invalid_encoding"


@dataclass(frozen=True)
class VisitTimeline:
    visit_id: str
    arrival_time: datetime
    checkout_time: datetime
    waiting_start: Optional[datetime] = None
    waiting_end: Optional[datetime] = None
    treatment_start: Optional[datetime] = None
    treatment_end: Optional[datetime] = None
    bed_request_time: Optional[datetime] = None
    esi: Optional[EsiValue] = None

    def milestones(self) -> List[Tuple[str, Optional[datetime]]]:
        return [
            ("arrival", self.arrival_time),
            ("waiting_start", self.waiting_start),
            ("waiting_end", self.waiting_end),
            ("treatment_start", self.treatment_start),
            ("treatment_end", self.treatment_end),
            ("bed_request", self.bed_request_time),
            ("checkout", self.checkout_time),
        ]

    def violation(self) -> Optional[str]:
        """Return the reason code of the first broken invariant, or None."""
        present = [ts for _, ts in self.milestones() if ts is not None]
        for prev, cur in zip(present, present[1:]):
            if cur < prev:
                return REASON_NON_MONOTONIC
        if self.esi is not None and self.esi != OB_MARKER and self.esi not in ESI_LEVELS:
            return REASON_INVALID_ESI
        return None


@dataclass(frozen=True)
class InpatientStay:
    visit_id: str
    arrival: datetime
    discharge: datetime


@dataclass(frozen=True)
class WeatherObservation:
    hour: datetime
    condition_raw: str
    temperature_f: float


@dataclass(frozen=True)
class CalendarFlags:
    holiday_dates: frozenset = field(default_factory=frozenset)
    game1_dates: frozenset = field(default_factory=frozenset)
    game2_dates: frozenset = field(default_factory=frozenset)

    def counts(self) -> Dict[str, int]:
        return {
            "holidays": len(self.holiday_dates),
            "game1": len(self.game1_dates),
            "game2": len(self.game2_dates),
        }

    @staticmethod
    def flagged(dates: Set[date], hour: datetime) -> int:
        return 1 if hour.date() in dates else 0


@dataclass(frozen=True)
class Rejection:
    source: str
    row: int
    reason: str
    detail: str = ""

    def to_dict(self) -> Dict[str, Any]:
        return {"source": self.source, "row": self.row, "reason": self.reason, "detail": self.detail}


T = TypeVar("T")


@dataclass
class ParseResult(Generic[T]):
    records: List[T]
    rejections: List[Rejection]
    rows: int

    @property
    def converted(self) -> int:
        return len(self.records)

    def reason_counts(self) -> Dict[str, int]:
        counts: Dict[str, int] = {}
        for r in self.rejections:
            counts[r.reason] = counts.get(r.reason, 0) + 1
        return counts

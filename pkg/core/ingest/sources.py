import io
from dataclasses import dataclass, field
from datetime import date, datetime
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import pandas as pd

from core.errors import SourceReadError
from core.ingest.records import (
    OB_MARKER,
    RAW_WEATHER_CONDITIONS,
    REASON_BAD_DATE,
    REASON_BAD_ENCODING,
    REASON_BAD_TEMPERATURE,
    REASON_BAD_TIMESTAMP,
    REASON_DUPLICATE_HOUR,
    REASON_INVALID_ESI,
    REASON_MISSING_FIELD,
    REASON_NON_MONOTONIC,
    REASON_UNKNOWN_CONDITION,
    CalendarFlags,
    InpatientStay,
    ParseResult,
    Rejection,
    VisitTimeline,
    WeatherObservation,
)

TIMESTAMP_FORMAT = "%Y-%m-%d %H:%M:%S"
DATE_FORMAT = "%Y-%m-%d"

ED_TRACKING_COLUMNS = [
    "visit_id", "arrival", "waiting_start", "waiting_end", "treatment_start",
    "treatment_end", "bed_request", "checkout", "esi",
]
INPATIENT_COLUMNS = ["visit_id", "arrival", "discharge"]
WEATHER_COLUMNS = ["hour", "condition", "temperature_f"]

SOURCE_FILES = {
    "ed_tracking": "ed_tracking.csv",
    "inpatient": "inpatient.csv",
    "weather": "weather.csv",
    "holidays": "holidays.csv",
    "game1": "game1.csv",
    "game2": "game2.csv",
}

Source = Union[bytes, str, Path, io.IOBase]

_CONDITION_LOOKUP = {c.lower(): c for c in RAW_WEATHER_CONDITIONS}


class _RowError(Exception):
    def __init__(self, reason: str, detail: str = "") -> None:
        super().__init__(detail or reason)
        self.reason = reason
        self.detail = detail


def _read_bytes(source: Source, name: str) -> bytes:
    try:
        if isinstance(source, bytes):
            return source
        if isinstance(source, (str, Path)):
            return Path(source).read_bytes()
        raw = source.read()
        return raw.encode("utf-8") if isinstance(raw, str) else raw
    except Exception as e:
        raise SourceReadError(f"Cannot read {name} source: {e}", source=name) from e


def _read_table(source: Source, name: str, columns: Sequence[str]) -> pd.DataFrame:
    raw = _read_bytes(source, name)
    if not raw.strip():
        return pd.DataFrame(columns=list(columns))
    try:
        # Undecodable bytes become U+FFFD here and reject only the rows that carry them.
        text = raw.decode("utf-8-sig", errors="replace")
        df = pd.read_csv(io.StringIO(text), dtype=str, keep_default_na=False)
    except Exception as e:
        raise SourceReadError(f"Cannot parse {name} as delimited text: {e}", source=name) from e
    df.columns = [str(c).strip() for c in df.columns]
    missing = [c for c in columns if c not in df.columns]
    if missing:
        raise SourceReadError(f"{name} is missing columns: {', '.join(missing)}", source=name)
    return df


def _check_encoding(row: Dict[str, Any]) -> None:
    for key, value in row.items():
        if "\ufffd" in str(value):
            raise _RowError(REASON_BAD_ENCODING, f"{key} holds bytes that are not UTF-8")


def parse_timestamp(value: Any) -> Optional[datetime]:
    """Parse the documented timestamp format; empty string means missing."""
    s = str(value or "").strip()
    if not s:
        return None
    for fmt in (TIMESTAMP_FORMAT, "%Y-%m-%d %H:%M", "%Y-%m-%dT%H:%M:%S"):
        try:
            return datetime.strptime(s, fmt)
        except ValueError:
            pass
    raise _RowError(REASON_BAD_TIMESTAMP, f"bad timestamp {s!r}")


def _required_timestamp(row: Dict[str, str], key: str) -> datetime:
    ts = parse_timestamp(row.get(key, ""))
    if ts is None:
        raise _RowError(REASON_MISSING_FIELD, f"{key} is empty")
    return ts


def parse_esi(value: Any) -> Optional[Union[int, str]]:
    s = str(value or "").strip()
    if not s:
        return None
    if s.upper() == OB_MARKER:
        return OB_MARKER
    try:
        f = float(s)
    except ValueError:
        raise _RowError(REASON_INVALID_ESI, f"esi {s!r}")
    if f != int(f) or int(f) not in {1, 2, 3, 4, 5}:
        raise _RowError(REASON_INVALID_ESI, f"esi {s!r}")
    return int(f)


def format_timestamp(ts: Optional[datetime]) -> str:
    return ts.strftime(TIMESTAMP_FORMAT) if ts is not None else ""


def parse_ed_tracking(source: Source) -> ParseResult[VisitTimeline]:
    df = _read_table(source, "ed_tracking", ED_TRACKING_COLUMNS)
    visits: List[VisitTimeline] = []
    rejections: List[Rejection] = []
    for i, row in enumerate(df.to_dict("records"), start=1):
        try:
            _check_encoding(row)
            visit_id = str(row.get("visit_id", "")).strip()
            if not visit_id:
                raise _RowError(REASON_MISSING_FIELD, "visit_id is empty")
            visit = VisitTimeline(
                visit_id=visit_id,
                arrival_time=_required_timestamp(row, "arrival"),
                waiting_start=parse_timestamp(row.get("waiting_start")),
                waiting_end=parse_timestamp(row.get("waiting_end")),
                treatment_start=parse_timestamp(row.get("treatment_start")),
                treatment_end=parse_timestamp(row.get("treatment_end")),
                bed_request_time=parse_timestamp(row.get("bed_request")),
                checkout_time=_required_timestamp(row, "checkout"),
                esi=parse_esi(row.get("esi")),
            )
            reason = visit.violation()
            if reason:
                raise _RowError(reason, visit_id)
            visits.append(visit)
        except _RowError as e:
            rejections.append(Rejection("ed_tracking", i, e.reason, e.detail))
    return ParseResult(visits, rejections, len(df))


def serialize_ed_tracking(visits: Sequence[VisitTimeline]) -> bytes:
    rows = []
    for v in visits:
        rows.append({
            "visit_id": v.visit_id,
            "arrival": format_timestamp(v.arrival_time),
            "waiting_start": format_timestamp(v.waiting_start),
            "waiting_end": format_timestamp(v.waiting_end),
            "treatment_start": format_timestamp(v.treatment_start),
            "treatment_end": format_timestamp(v.treatment_end),
            "bed_request": format_timestamp(v.bed_request_time),
            "checkout": format_timestamp(v.checkout_time),
            "esi": "" if v.esi is None else str(v.esi),
        })
    df = pd.DataFrame(rows, columns=ED_TRACKING_COLUMNS)
    return df.to_csv(index=False, lineterminator="\n").encode("utf-8")


def parse_inpatient(source: Source) -> ParseResult[InpatientStay]:
    df = _read_table(source, "inpatient", INPATIENT_COLUMNS)
    stays: List[InpatientStay] = []
    rejections: List[Rejection] = []
    for i, row in enumerate(df.to_dict("records"), start=1):
        try:
            _check_encoding(row)
            visit_id = str(row.get("visit_id", "")).strip()
            if not visit_id:
                raise _RowError(REASON_MISSING_FIELD, "visit_id is empty")
            arrival = _required_timestamp(row, "arrival")
            discharge = _required_timestamp(row, "discharge")
            if discharge < arrival:
                raise _RowError(REASON_NON_MONOTONIC, visit_id)
            stays.append(InpatientStay(visit_id, arrival, discharge))
        except _RowError as e:
            rejections.append(Rejection("inpatient", i, e.reason, e.detail))
    return ParseResult(stays, rejections, len(df))


def serialize_inpatient(stays: Sequence[InpatientStay]) -> bytes:
    df = pd.DataFrame(
        [{"visit_id": s.visit_id, "arrival": format_timestamp(s.arrival), "discharge": format_timestamp(s.discharge)} for s in stays],
        columns=INPATIENT_COLUMNS,
    )
    return df.to_csv(index=False, lineterminator="\n").encode("utf-8")


def parse_weather(source: Source) -> ParseResult[WeatherObservation]:
    """Parse hourly weather; for a repeated hour the later row wins."""
    df = _read_table(source, "weather", WEATHER_COLUMNS)
    by_hour: Dict[datetime, Tuple[int, WeatherObservation]] = {}
    rejections: List[Rejection] = []
    for i, row in enumerate(df.to_dict("records"), start=1):
        try:
            _check_encoding(row)
            hour = _required_timestamp(row, "hour").replace(minute=0, second=0, microsecond=0)
            cond_raw = str(row.get("condition", "")).strip()
            condition = _CONDITION_LOOKUP.get(cond_raw.lower())
            if condition is None:
                raise _RowError(REASON_UNKNOWN_CONDITION, cond_raw)
            temp_raw = str(row.get("temperature_f", "")).strip()
            try:
                temperature = float(temp_raw)
            except ValueError:
                raise _RowError(REASON_BAD_TEMPERATURE, temp_raw)
            if temperature != temperature:
                raise _RowError(REASON_BAD_TEMPERATURE, temp_raw)
            if hour in by_hour:
                prev_row, _ = by_hour[hour]
                rejections.append(Rejection("weather", prev_row, REASON_DUPLICATE_HOUR, format_timestamp(hour)))
            by_hour[hour] = (i, WeatherObservation(hour, condition, temperature))
        except _RowError as e:
            rejections.append(Rejection("weather", i, e.reason, e.detail))
    observations = [obs for _, (_, obs) in sorted(by_hour.items())]
    rejections.sort(key=lambda r: r.row)
    return ParseResult(observations, rejections, len(df))


def serialize_weather(observations: Sequence[WeatherObservation]) -> bytes:
    df = pd.DataFrame(
        [{"hour": format_timestamp(o.hour), "condition": o.condition_raw, "temperature_f": o.temperature_f} for o in observations],
        columns=WEATHER_COLUMNS,
    )
    return df.to_csv(index=False, lineterminator="\n", float_format="%.1f").encode("utf-8")


def _parse_date_lines(source: Optional[Source], name: str) -> Tuple[frozenset, List[Rejection]]:
    if source is None:
        return frozenset(), []
    text = _read_bytes(source, name).decode("utf-8-sig", errors="replace")
    dates = set()
    rejections: List[Rejection] = []
    row = 0
    for line in text.splitlines():
        s = line.strip().strip(",")
        if not s:
            continue
        if row == 0 and s.lower() == "date":
            continue
        row += 1
        try:
            dates.add(datetime.strptime(s, DATE_FORMAT).date())
        except ValueError:
            rejections.append(Rejection(name, row, REASON_BAD_DATE, s))
    return frozenset(dates), rejections


def parse_calendar(
    holiday_source: Optional[Source],
    game1_source: Optional[Source],
    game2_source: Optional[Source],
) -> Tuple[CalendarFlags, List[Rejection]]:
    holidays, r1 = _parse_date_lines(holiday_source, "holidays")
    game1, r2 = _parse_date_lines(game1_source, "game1")
    game2, r3 = _parse_date_lines(game2_source, "game2")
    return CalendarFlags(holidays, game1, game2), r1 + r2 + r3


def serialize_dates(dates: Sequence[date]) -> bytes:
    lines = ["date"] + [d.strftime(DATE_FORMAT) for d in sorted(set(dates))]
    return ("\n".join(lines) + "\n").encode("utf-8")


@dataclass
class SourceBundle:
    visits: List[VisitTimeline]
    stays: List[InpatientStay]
    weather: List[WeatherObservation]
    calendar: CalendarFlags
    rejections: List[Rejection] = field(default_factory=list)
    row_counts: Dict[str, int] = field(default_factory=dict)

    def rejection_summary(self) -> Dict[str, Dict[str, int]]:
        out: Dict[str, Dict[str, int]] = {}
        for r in self.rejections:
            out.setdefault(r.source, {})
            out[r.source][r.reason] = out[r.source].get(r.reason, 0) + 1
        return out


def load_sources(directory: str) -> SourceBundle:
    root = Path(directory)
    if not root.is_dir():
        raise SourceReadError(f"Source directory not found: {directory}", source=str(directory))

    def _path(key: str) -> Path:
        return root / SOURCE_FILES[key]

    def _optional(key: str) -> Optional[Path]:
        p = _path(key)
        return p if p.exists() else None

    ed = parse_ed_tracking(_path("ed_tracking"))
    inpatient = parse_inpatient(_path("inpatient"))
    weather = parse_weather(_path("weather"))
    calendar, cal_rejections = parse_calendar(_optional("holidays"), _optional("game1"), _optional("game2"))
    return SourceBundle(
        visits=ed.records,
        stays=inpatient.records,
        weather=weather.records,
        calendar=calendar,
        rejections=ed.rejections + inpatient.rejections + weather.rejections + cal_rejections,
        row_counts={"ed_tracking": ed.rows, "inpatient": inpatient.rows, "weather": weather.rows},
    )

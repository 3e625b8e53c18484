from .records import CalendarFlags, InpatientStay, ParseResult, Rejection, VisitTimeline, WeatherObservation
from .sources import (
    SourceBundle,
    load_sources,
    parse_calendar,
    parse_ed_tracking,
    parse_inpatient,
    parse_weather,
    serialize_ed_tracking,
)
from .timeline import HourIndex, build_hour_index

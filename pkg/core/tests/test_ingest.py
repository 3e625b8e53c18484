import tempfile
import unittest
from datetime import date, datetime
from pathlib import Path

from core.errors import DataError, SourceReadError
from core.ingest.records import (
    OB_MARKER,
    REASON_BAD_DATE,
    REASON_BAD_ENCODING,
    REASON_BAD_TEMPERATURE,
    REASON_BAD_TIMESTAMP,
    REASON_DUPLICATE_HOUR,
    REASON_INVALID_ESI,
    REASON_MISSING_FIELD,
    REASON_NON_MONOTONIC,
    REASON_UNKNOWN_CONDITION,
)
from core.ingest.sources import (
    load_sources,
    parse_calendar,
    parse_ed_tracking,
    parse_inpatient,
    parse_weather,
    serialize_dates,
    serialize_ed_tracking,
)
from core.ingest.timeline import build_hour_index

ED_HEADER = "visit_id,arrival,waiting_start,waiting_end,treatment_start,treatment_end,bed_request,checkout,esi\n"


class TestEdTracking(unittest.TestCase):
    def test_good_rows_and_rejections(self):
        text = ED_HEADER + "".join([
            "V1,2021-01-01 10:00:00,2021-01-01 10:00:00,2021-01-01 11:00:00,2021-01-01 11:00:00,2021-01-01 13:00:00,2021-01-01 13:00:00,2021-01-01 20:00:00,2\n",
            "V2,2021-01-01 10:05:00,,,,,,2021-01-01 12:00:00,\n",
            ",2021-01-01 10:00:00,,,,,,2021-01-01 12:00:00,3\n",
            "V4,yesterday,,,,,,2021-01-01 12:00:00,3\n",
            "V5,2021-01-01 10:00:00,2021-01-01 10:00:00,2021-01-01 09:00:00,,,,2021-01-01 12:00:00,3\n",
            "V6,2021-01-01 10:00:00,,,,,,2021-01-01 12:00:00,7\n",
            "V7,2021-01-01 10:00:00,,,,,,2021-01-01 12:00:00,ob\n",
            "V8,2021-01-01 10:00:00,,,,,,,3\n",
        ])
        result = parse_ed_tracking(text.encode("utf-8"))
        self.assertEqual(result.rows, 8)
        self.assertEqual([v.visit_id for v in result.records], ["V1", "V2", "V7"])
        self.assertEqual(result.records[0].esi, 2)
        self.assertIsNone(result.records[1].esi)
        self.assertEqual(result.records[2].esi, OB_MARKER)
        reasons = {r.row: r.reason for r in result.rejections}
        self.assertEqual(reasons, {
            3: REASON_MISSING_FIELD,
            4: REASON_BAD_TIMESTAMP,
            5: REASON_NON_MONOTONIC,
            6: REASON_INVALID_ESI,
            8: REASON_MISSING_FIELD,
        })
        self.assertEqual(result.converted + len(result.rejections), result.rows)

    def test_serialize_then_parse_keeps_visits(self):
        text = ED_HEADER + (
            "V1,2021-03-01 08:10:00,2021-03-01 08:10:00,2021-03-01 09:00:00,2021-03-01 09:00:00,"
            "2021-03-01 11:30:00,2021-03-01 11:30:00,2021-03-01 19:00:00,OB\n"
            "V2,2021-03-01 08:20:00,2021-03-01 08:20:00,2021-03-01 08:50:00,2021-03-01 08:50:00,"
            "2021-03-01 10:00:00,,2021-03-01 10:00:00,\n"
        )
        first = parse_ed_tracking(text.encode("utf-8")).records
        again = parse_ed_tracking(serialize_ed_tracking(first)).records
        self.assertEqual(first, again)

    def test_missing_column_is_fatal(self):
        with self.assertRaises(SourceReadError):
            parse_ed_tracking(b"visit_id,arrival\nV1,2021-01-01 00:00:00\n")

    def test_unreadable_path_is_fatal(self):
        with self.assertRaises(SourceReadError):
            parse_ed_tracking(Path("/nonexistent/ed_tracking.csv"))

    def test_undecodable_bytes_reject_only_their_row(self):
        raw = (
            ED_HEADER.encode("utf-8")
            + b"\xffV1,2021-01-01 10:00:00,,,,,,2021-01-01 12:00:00,3\n"
            + b"V2,2021-01-01 10:05:00,,,,,,2021-01-01 12:00:00,2\n"
        )
        result = parse_ed_tracking(raw)
        self.assertEqual(result.rows, 2)
        self.assertEqual([v.visit_id for v in result.records], ["V2"])
        self.assertEqual([(r.row, r.reason) for r in result.rejections], [(1, REASON_BAD_ENCODING)])
        inpatient = parse_inpatient(b"visit_id,arrival,discharge\nI1,2021-01-01 00:00:00,2021-01-0\xfe 00:00:00\n")
        self.assertEqual(inpatient.records, [])
        self.assertEqual(inpatient.rejections[0].reason, REASON_BAD_ENCODING)


class TestOtherSources(unittest.TestCase):
    def test_inpatient_rejects_discharge_before_arrival(self):
        text = (
            "visit_id,arrival,discharge\n"
            "I1,2021-01-01 00:00:00,2021-01-03 00:00:00\n"
            "I2,2021-01-02 00:00:00,2021-01-01 00:00:00\n"
        )
        result = parse_inpatient(text.encode("utf-8"))
        self.assertEqual(len(result.records), 1)
        self.assertEqual(result.rejections[0].reason, REASON_NON_MONOTONIC)

    def test_weather_later_duplicate_wins(self):
        text = (
            "hour,condition,temperature_f\n"
            "2021-01-01 00:00:00,Clear,40.0\n"
            "2021-01-01 01:00:00,Rain,41.5\n"
            "2021-01-01 01:00:00,snow,30.0\n"
            "2021-01-01 02:00:00,Volcano,30.0\n"
            "2021-01-01 03:00:00,Clear,warm\n"
        )
        result = parse_weather(text.encode("utf-8"))
        self.assertEqual([o.hour.hour for o in result.records], [0, 1])
        self.assertEqual(result.records[1].condition_raw, "Snow")
        self.assertEqual(result.records[1].temperature_f, 30.0)
        self.assertEqual(
            [(r.row, r.reason) for r in result.rejections],
            [(2, REASON_DUPLICATE_HOUR), (4, REASON_UNKNOWN_CONDITION), (5, REASON_BAD_TEMPERATURE)],
        )

    def test_calendar_dates_and_bad_lines(self):
        holidays = serialize_dates([date(2021, 12, 25), date(2021, 1, 1)])
        self.assertEqual(holidays, b"date\n2021-01-01\n2021-12-25\n")
        flags, rejections = parse_calendar(holidays, b"date\n2021-09-11\nnot-a-date\n", None)
        self.assertEqual(flags.counts(), {"holidays": 2, "game1": 1, "game2": 0})
        self.assertEqual(len(rejections), 1)
        self.assertEqual(rejections[0].reason, REASON_BAD_DATE)

    def test_load_sources_reads_standard_names(self):
        with tempfile.TemporaryDirectory() as tmp:
            root = Path(tmp)
            (root / "ed_tracking.csv").write_text(
                ED_HEADER + "V1,2021-01-01 10:00:00,,,,,,2021-01-01 12:00:00,3\n", encoding="utf-8"
            )
            (root / "inpatient.csv").write_text("visit_id,arrival,discharge\n", encoding="utf-8")
            (root / "weather.csv").write_text(
                "hour,condition,temperature_f\n2021-01-01 00:00:00,Clear,40\nbad,Clear,40\n", encoding="utf-8"
            )
            (root / "holidays.csv").write_text("date\n2021-01-01\n", encoding="utf-8")
            bundle = load_sources(tmp)
        self.assertEqual(len(bundle.visits), 1)
        self.assertEqual(bundle.stays, [])
        self.assertEqual(len(bundle.weather), 1)
        self.assertEqual(bundle.calendar.counts()["holidays"], 1)
        self.assertEqual(bundle.row_counts, {"ed_tracking": 1, "inpatient": 0, "weather": 2})
        self.assertEqual(bundle.rejection_summary(), {"weather": {REASON_BAD_TIMESTAMP: 1}})

    def test_load_sources_missing_directory(self):
        with self.assertRaises(SourceReadError):
            load_sources("/nonexistent/boardcast-data")


class TestHourIndex(unittest.TestCase):
    def test_inclusive_bounds(self):
        index = build_hour_index("2021-01-01 00:00:00", "2021-01-02 23:00:00")
        self.assertEqual(len(index), 48)
        self.assertEqual(index.seconds()[1] - index.seconds()[0], 3600)

    def test_rejects_unaligned_or_reversed_bounds(self):
        with self.assertRaises(DataError):
            build_hour_index("2021-01-01 00:30:00", "2021-01-02 00:00:00")
        with self.assertRaises(DataError):
            build_hour_index(datetime(2021, 1, 2), datetime(2021, 1, 1))


if __name__ == "__main__":
    unittest.main()

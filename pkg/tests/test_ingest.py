from pathlib import Path

import numpy as np
import numpy.testing as npt
import pytest

from durationlab.errors import EmptySeriesError, InvalidArgumentError, RecordParseError
from durationlab.ingest import (
    BUY,
    CANONICAL_SCHEMA,
    RAW_SCHEMA,
    EventSchema,
    SessionCalendar,
    filter_to_sessions,
    load_calendar,
    make_event_series,
    parse_event_stream,
    split_by_direction,
    write_event_csv,
)

from .conftest import clock


def test_parse_counts_malformed_records(raw_text):
    series = parse_event_stream(raw_text, RAW_SCHEMA, symbol="000001")
    assert series.report.raw_records == 10
    assert series.report.malformed == 1
    assert len(series) == 9

    (err,) = series.report.errors
    assert isinstance(err, RecordParseError)
    assert err.line == 7
    assert err.field == "time"


def test_filter_keeps_session_bounds_inclusive(events):
    assert events.report.removed == 3
    assert events.report.retained == len(events) == 6

    # 11:30:00 and 15:00:00 sit exactly on a close
    assert clock(11, 30) in events.centis
    assert clock(15, 0) in events.centis
    assert clock(12, 0) not in events.centis
    assert np.all(events.calendar.session_of(events.centis) >= 0)


def test_events_sorted_and_stable(events):
    order = np.lexsort((events.centis, events.dates))
    npt.assert_array_equal(order, np.arange(len(events)))
    # the two 13:00:00 events keep their input order (buy first)
    same = np.flatnonzero(events.centis == clock(13, 0))
    npt.assert_array_equal(events.directions[same], [BUY, -1])


def test_canonical_round_trip(events, tmp_path: Path):
    path = tmp_path / "events.csv"
    write_event_csv(events, path)
    reread = parse_event_stream(path, CANONICAL_SCHEMA, symbol="000001")
    assert reread.same_events(events)
    assert reread.report.malformed == 0


def test_event_view(events):
    first = events.events[0]
    assert first.direction == "buy"
    assert first.symbol == "000001"
    assert str(first.date) == "2003-01-02"


def test_unknown_direction_is_malformed():
    series = parse_event_stream("2003-01-02,09:31:00,X\n2003-01-02,09:32:00,S\n", RAW_SCHEMA)
    assert series.report.malformed == 1
    assert series.report.errors[0].field == "direction"
    assert len(series) == 1


def test_empty_stream_raises():
    with pytest.raises(EmptySeriesError):
        parse_event_stream("", RAW_SCHEMA)
    with pytest.raises(EmptySeriesError):
        parse_event_stream("garbage,line,Z\n", RAW_SCHEMA)


def test_missing_column_raises():
    schema = EventSchema(direction="side")
    with pytest.raises(InvalidArgumentError):
        parse_event_stream("date,time,direction\n2003-01-02,09:31:00,B\n", schema)


def test_custom_schema_seconds_and_codes():
    schema = EventSchema(date="day", time="t", direction="side", time_format="seconds", buy_codes=("BID",), sell_codes=("ASK",))
    text = "day,t,side\n2003-01-02,34260.25,bid\n2003-01-02,34200,ASK\n"
    series = parse_event_stream(text, schema)
    npt.assert_array_equal(series.centis, [3420000, 3426025])
    npt.assert_array_equal(series.directions, [-1, BUY])


def test_minute_index():
    cal = SessionCalendar.default()
    assert cal.minutes_per_day == 240
    times = [clock(9, 30), clock(9, 30, 59.99), clock(9, 31), clock(11, 30), clock(13, 0), clock(15, 0)]
    npt.assert_array_equal(cal.minute_of(times), [1, 1, 2, 120, 121, 240])
    with pytest.raises(InvalidArgumentError):
        cal.minute_of([clock(12, 0)])


def test_load_calendar_file(tmp_path: Path):
    path = tmp_path / "cal.toml"
    path.write_text('sessions = [["10:00", "12:00"]]\ndays = ["2003-01-02", "2003-01-06"]\n', encoding="utf-8")
    cal = load_calendar(path)
    assert cal.minutes_per_day == 120
    npt.assert_array_equal(
        cal.includes_day(np.array(["2003-01-02", "2003-01-03"], dtype="datetime64[D]")), [True, False]
    )

    series = make_event_series(
        np.array(["2003-01-02", "2003-01-03"], dtype="datetime64[D]"),
        [clock(10, 30), clock(10, 30)],
        [1, -1],
        calendar=cal,
    )
    kept = filter_to_sessions(series)
    assert len(kept) == 1
    assert kept.trading_days() == 2

    with pytest.raises(FileNotFoundError):
        load_calendar(tmp_path / "missing.toml")


def test_invalid_calendar():
    with pytest.raises(InvalidArgumentError):
        SessionCalendar(sessions=((100, 50),))
    with pytest.raises(InvalidArgumentError):
        SessionCalendar(sessions=((0, 100), (50, 200)))


def test_split_by_direction(events):
    buy, sell = split_by_direction(events)
    assert len(buy) + len(sell) == len(events)
    assert np.all(buy.directions == BUY)
    assert np.all(sell.directions != BUY)

"""Event stream ingest: parsing, session calendars, filtering and direction split."""

import io
import re
import tomllib
from dataclasses import dataclass, field, replace
from datetime import date as Date
from pathlib import Path
from typing import Iterator, Literal, TextIO

import numpy as np
import pandas as pd

from .console import Console
from .errors import EmptySeriesError, InvalidArgumentError, RecordParseError

BUY = 1
SELL = -1
DIRECTION_NAMES = {BUY: "buy", SELL: "sell"}
CANONICAL_CODES = {BUY: "B", SELL: "S"}

DEFAULT_CALENDAR_NAME = "default-szse2003"
# Continuous double auction, seconds since midnight
SZSE2003_SESSIONS = ((9 * 3600 + 30 * 60, 11 * 3600 + 30 * 60), (13 * 3600, 15 * 3600))

_CLOCK_RE = re.compile(r"^(\d{1,2}):(\d{2}):(\d{2}(?:\.\d+)?)$")

console = Console("INGEST")


def _clock_to_seconds(text: str) -> int:
    """Parse an "HH:MM" or "HH:MM:SS" session bound to whole seconds."""
    parts = [int(p) for p in text.split(":")]
    while len(parts) < 3:
        parts.append(0)
    h, m, s = parts
    return h * 3600 + m * 60 + s


@dataclass(frozen=True)
class SessionCalendar:
    """Trading sessions (seconds since midnight) and an optional ordered day list.

    Session bounds are inclusive on both ends. When ``days`` is empty every
    date seen in the data is treated as a trading day.
    """

    sessions: tuple[tuple[int, int], ...] = SZSE2003_SESSIONS
    days: tuple[Date, ...] = ()

    def __post_init__(self) -> None:
        if not self.sessions:
            raise InvalidArgumentError("Calendar needs at least one session")
        prev_close = -1
        for open_s, close_s in self.sessions:
            if not 0 <= open_s < close_s <= 24 * 3600:
                raise InvalidArgumentError(f"Invalid session ({open_s}, {close_s})")
            if open_s <= prev_close:
                raise InvalidArgumentError("Sessions must be disjoint and ordered")
            prev_close = close_s
        if list(self.days) != sorted(set(self.days)):
            raise InvalidArgumentError("Calendar days must be strictly increasing")

    @classmethod
    def default(cls) -> "SessionCalendar":
        return cls()

    @property
    def minutes_per_day(self) -> int:
        return sum((c - o) // 60 for o, c in self.sessions)

    def _minute_offsets(self) -> np.ndarray:
        widths = [(c - o) // 60 for o, c in self.sessions]
        return np.concatenate(([0], np.cumsum(widths)[:-1])).astype(np.int64)

    def session_of(self, centis: np.ndarray) -> np.ndarray:
        """Session index for each time of day in hundredths of a second, -1 outside."""
        centis = np.asarray(centis, dtype=np.int64)
        out = np.full(centis.shape, -1, dtype=np.int64)
        for k, (open_s, close_s) in enumerate(self.sessions):
            inside = (centis >= open_s * 100) & (centis <= close_s * 100)
            out[inside] = k
        return out

    def minute_of(self, centis: np.ndarray) -> np.ndarray:
        """1-based trading-minute index; the close instant belongs to the last minute."""
        centis = np.asarray(centis, dtype=np.int64)
        sessions = self.session_of(centis)
        if np.any(sessions < 0):
            raise InvalidArgumentError("minute_of called on times outside the sessions")
        opens = np.array([o for o, _ in self.sessions], dtype=np.int64)[sessions]
        widths = np.array([(c - o) // 60 for o, c in self.sessions], dtype=np.int64)[sessions]
        within = (centis - opens * 100) // 6000
        within = np.minimum(within, widths - 1)
        return self._minute_offsets()[sessions] + within + 1

    def includes_day(self, dates: np.ndarray) -> np.ndarray:
        dates = np.asarray(dates, dtype="datetime64[D]")
        if not self.days:
            return np.ones(dates.shape, dtype=bool)
        return np.isin(dates, np.array(self.days, dtype="datetime64[D]"))


def load_calendar(source: str | Path = DEFAULT_CALENDAR_NAME) -> SessionCalendar:
    """Load a calendar from a TOML file, or return the default two-session day.

    The file holds ``sessions = [["09:30", "11:30"], ...]`` and optionally
    ``days = ["2003-01-02", ...]``. Missing trading days are simply left out.
    """
    if str(source) == DEFAULT_CALENDAR_NAME:
        return SessionCalendar.default()
    path = Path(source)
    if not path.is_file():
        raise FileNotFoundError(f"Calendar file not found: {path}")
    with path.open("rb") as f:
        raw = tomllib.load(f)
    sessions = tuple(
        (_clock_to_seconds(str(o)), _clock_to_seconds(str(c))) for o, c in raw["sessions"]
    )
    days = tuple(Date.fromisoformat(str(d)) for d in raw.get("days", []))
    return SessionCalendar(sessions=sessions, days=days)


@dataclass(frozen=True)
class EventSchema:
    """Column mapping for delimited event files.

    ``columns`` names the fields of a header-less file; leave it ``None`` when
    the file carries a header row.
    """

    date: str = "date"
    time: str = "time"
    direction: str = "direction"
    time_format: Literal["clock", "seconds"] = "clock"
    buy_codes: tuple[str, ...] = ("B", "BUY", "1")
    sell_codes: tuple[str, ...] = ("S", "SELL", "-1")
    delimiter: str = ","
    columns: tuple[str, ...] | None = None


RAW_SCHEMA = EventSchema(columns=("date", "time", "direction"))
CANONICAL_SCHEMA = EventSchema(time="seconds", time_format="seconds")


@dataclass
class IngestReport:
    """Record bookkeeping: raw = retained + removed + malformed."""

    raw_records: int = 0
    malformed: int = 0
    removed: int = 0
    errors: list[RecordParseError] = field(default_factory=list)

    @property
    def retained(self) -> int:
        return self.raw_records - self.malformed - self.removed

    def to_dict(self) -> dict[str, object]:
        return {
            "raw_records": self.raw_records,
            "retained": self.retained,
            "removed": self.removed,
            "malformed": self.malformed,
            "errors": [str(e) for e in self.errors],
        }


@dataclass(frozen=True)
class Event:
    timestamp: float
    date: Date
    direction: str
    symbol: str


@dataclass(frozen=True, eq=False)
class EventSeries:
    """Time-ordered events of one symbol.

    Times are kept as integer hundredths of a second since midnight next to the
    trading date, so durations can be formed exactly.
    """

    dates: np.ndarray
    centis: np.ndarray
    directions: np.ndarray
    symbol: str = ""
    calendar: SessionCalendar = field(default_factory=SessionCalendar.default)
    report: IngestReport = field(default_factory=IngestReport)

    def __len__(self) -> int:
        return int(self.centis.size)

    @property
    def timestamps(self) -> np.ndarray:
        """Absolute times in seconds (epoch-based, 0.01 s resolution)."""
        day_seconds = self.dates.astype("datetime64[s]").astype(np.int64)
        return day_seconds + self.centis / 100.0

    @property
    def events(self) -> list[Event]:
        return list(self)

    def __iter__(self) -> Iterator[Event]:
        stamps = self.timestamps
        for i in range(len(self)):
            yield Event(
                timestamp=float(stamps[i]),
                date=self.dates[i].astype(object),
                direction=DIRECTION_NAMES[int(self.directions[i])],
                symbol=self.symbol,
            )

    def trading_days(self) -> int:
        if self.calendar.days:
            return len(self.calendar.days)
        return int(np.unique(self.dates).size)

    def select(self, mask: np.ndarray) -> "EventSeries":
        return replace(
            self,
            dates=self.dates[mask],
            centis=self.centis[mask],
            directions=self.directions[mask],
        )

    def same_events(self, other: "EventSeries") -> bool:
        return (
            np.array_equal(self.dates, other.dates)
            and np.array_equal(self.centis, other.centis)
            and np.array_equal(self.directions, other.directions)
        )


def make_event_series(
    dates: np.ndarray,
    centis: np.ndarray,
    directions: np.ndarray,
    symbol: str = "",
    calendar: SessionCalendar | None = None,
    report: IngestReport | None = None,
) -> EventSeries:
    """Build an EventSeries, stable-sorting by (date, time of day)."""
    dates = np.asarray(dates, dtype="datetime64[D]")
    centis = np.asarray(centis, dtype=np.int64)
    directions = np.asarray(directions, dtype=np.int8)
    if not (dates.shape == centis.shape == directions.shape):
        raise InvalidArgumentError("dates, centis and directions must align")
    if np.any(~np.isin(directions, (BUY, SELL))):
        raise InvalidArgumentError("Every event needs a buy or sell direction")
    order = np.lexsort((centis, dates))
    return EventSeries(
        dates=dates[order],
        centis=centis[order],
        directions=directions[order],
        symbol=symbol,
        calendar=calendar or SessionCalendar.default(),
        report=report or IngestReport(raw_records=int(centis.size)),
    )


def _read_frame(raw: TextIO | str | Path, schema: EventSchema) -> pd.DataFrame:
    if isinstance(raw, Path):
        source: TextIO | Path = raw
    elif isinstance(raw, str):
        source = io.StringIO(raw)
    else:
        source = raw
    try:
        return pd.read_csv(
            source,
            sep=schema.delimiter,
            dtype=str,
            keep_default_na=False,
            header=None if schema.columns else 0,
            names=list(schema.columns) if schema.columns else None,
            skipinitialspace=True,
        )
    except pd.errors.EmptyDataError:
        return pd.DataFrame(columns=[schema.date, schema.time, schema.direction])


def _parse_times(values: pd.Series, time_format: str) -> tuple[np.ndarray, np.ndarray]:
    """Return (centis, ok) for each raw time-of-day string."""
    text = values.str.strip()
    if time_format == "seconds":
        seconds = pd.to_numeric(text, errors="coerce").to_numpy(dtype=float)
        ok = np.isfinite(seconds) & (seconds >= 0) & (seconds < 24 * 3600)
        centis = np.where(ok, np.rint(np.nan_to_num(seconds) * 100), 0).astype(np.int64)
        return centis, ok

    parts = text.str.extract(_CLOCK_RE)
    hours = pd.to_numeric(parts[0], errors="coerce").to_numpy(dtype=float)
    minutes = pd.to_numeric(parts[1], errors="coerce").to_numpy(dtype=float)
    seconds = pd.to_numeric(parts[2], errors="coerce").to_numpy(dtype=float)
    ok = (
        np.isfinite(hours)
        & np.isfinite(minutes)
        & np.isfinite(seconds)
        & (hours < 24)
        & (minutes < 60)
        & (seconds < 60)
    )
    total = np.nan_to_num(hours) * 3600 + np.nan_to_num(minutes) * 60 + np.nan_to_num(seconds)
    centis = np.where(ok, np.rint(total * 100), 0).astype(np.int64)
    return centis, ok


def parse_event_stream(
    raw: TextIO | str | Path,
    schema: EventSchema = RAW_SCHEMA,
    symbol: str = "",
    calendar: SessionCalendar | None = None,
    debug: bool = False,
) -> EventSeries:
    """Parse delimited event records into a time-sorted EventSeries.

    Malformed records are collected as RecordParseError entries on the
    series report rather than raised; the rest of the stream is kept.

    Args:
        raw: Path, file object, or the text itself.
        schema: Column mapping and direction codes.
        symbol: Equity identifier attached to the series.
        calendar: Calendar to attach; defaults to the two-session day.
        debug: Print per-record errors.

    Raises:
        EmptySeriesError: The stream has no records, or none parse.
        InvalidArgumentError: A schema column is missing from the file.
    """
    frame = _read_frame(raw, schema)
    if frame.empty:
        raise EmptySeriesError("Event stream contains no records")

    for col in (schema.date, schema.time, schema.direction):
        if col not in frame.columns:
            raise InvalidArgumentError(f"Column '{col}' not found; have {list(frame.columns)}")

    first_line = 1 if schema.columns else 2
    lines = np.arange(len(frame)) + first_line

    dates = pd.to_datetime(frame[schema.date].str.strip(), format="%Y-%m-%d", errors="coerce")
    date_ok = dates.notna().to_numpy()
    centis, time_ok = _parse_times(frame[schema.time], schema.time_format)

    codes = frame[schema.direction].str.strip().str.upper()
    buy = codes.isin([c.upper() for c in schema.buy_codes]).to_numpy()
    sell = codes.isin([c.upper() for c in schema.sell_codes]).to_numpy()
    dir_ok = buy | sell

    errors: list[RecordParseError] = []
    for i in np.flatnonzero(~(date_ok & time_ok & dir_ok)):
        if not date_ok[i]:
            err = RecordParseError(int(lines[i]), schema.date, f"bad date {frame[schema.date].iat[i]!r}")
        elif not time_ok[i]:
            err = RecordParseError(int(lines[i]), schema.time, f"unparseable time {frame[schema.time].iat[i]!r}")
        else:
            err = RecordParseError(
                int(lines[i]), schema.direction, f"unknown direction code {frame[schema.direction].iat[i]!r}"
            )
        errors.append(err)
        if debug:
            console.warn(err)

    good = date_ok & time_ok & dir_ok
    report = IngestReport(raw_records=len(frame), malformed=len(errors), errors=errors)
    if errors:
        console.warn(f"{symbol or 'stream'}: {len(errors)} malformed record(s) skipped")
    if not good.any():
        raise EmptySeriesError("No record in the stream could be parsed")

    directions = np.where(buy, BUY, SELL).astype(np.int8)
    return make_event_series(
        dates.to_numpy(dtype="datetime64[D]")[good],
        centis[good],
        directions[good],
        symbol=symbol,
        calendar=calendar,
        report=report,
    )


def write_event_csv(series: EventSeries, path: Path | TextIO) -> None:
    """Write the canonical event file: date, seconds-of-day, direction."""
    frame = pd.DataFrame(
        {
            "date": np.datetime_as_string(series.dates, unit="D"),
            "seconds": [f"{c / 100:.2f}" for c in series.centis],
            "direction": [CANONICAL_CODES[int(d)] for d in series.directions],
        }
    )
    if isinstance(path, Path):
        path.parent.mkdir(parents=True, exist_ok=True)
    frame.to_csv(path, index=False, lineterminator="\n")


def filter_to_sessions(series: EventSeries, calendar: SessionCalendar | None = None) -> EventSeries:
    """Keep only events inside a session (inclusive bounds) on a calendar day.

    Call-auction, lunch-pause and after-close events are removed and counted
    on the report.
    """
    calendar = calendar or series.calendar
    keep = (calendar.session_of(series.centis) >= 0) & calendar.includes_day(series.dates)
    removed = int(np.count_nonzero(~keep))
    report = replace(series.report, removed=series.report.removed + removed, errors=list(series.report.errors))
    return replace(series.select(keep), calendar=calendar, report=report)


def split_by_direction(series: EventSeries) -> tuple[EventSeries, EventSeries]:
    """Partition into (buy, sell) series, each keeping time order."""
    is_buy = series.directions == BUY
    buy = replace(series.select(is_buy), report=IngestReport(raw_records=int(is_buy.sum())))
    sell = replace(series.select(~is_buy), report=IngestReport(raw_records=int((~is_buy).sum())))
    return buy, sell

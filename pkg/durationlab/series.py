"""Duration series: session-aware differencing, summaries, rescaling and pooling."""

from dataclasses import dataclass, replace
from pathlib import Path
from typing import Literal, Sequence

import numpy as np
import pandas as pd

from .errors import DegenerateSeriesError, EmptySeriesError, InvalidArgumentError
from .ingest import EventSeries

DurationClass = Literal["all", "buy", "sell"]
CLASSES: tuple[DurationClass, ...] = ("all", "buy", "sell")


def _segment_ids(dates: np.ndarray, sessions: np.ndarray) -> np.ndarray:
    """Dense ids for (date, session) pairs, in order of first appearance."""
    _, day_idx = np.unique(dates, return_inverse=True)
    key = day_idx.astype(np.int64) * (int(sessions.max(initial=0)) + 1) + sessions
    _, seg = np.unique(key, return_inverse=True)
    return seg.astype(np.int64)


@dataclass(frozen=True, eq=False)
class DurationSeries:
    """Inter-event waiting times of one symbol and direction class.

    Durations are integer hundredths of a second. ``dates``/``sessions``
    identify the session each duration lives in, ``minutes`` the trading
    minute (1-based) of its closing event.
    """

    centis: np.ndarray
    dates: np.ndarray
    minutes: np.ndarray
    sessions: np.ndarray
    symbol: str = ""
    direction_class: DurationClass = "all"
    n_events: int = 0

    def __len__(self) -> int:
        return int(self.centis.size)

    @property
    def durations(self) -> np.ndarray:
        """Durations in seconds."""
        return self.centis / 100.0

    @property
    def zero_count(self) -> int:
        return int(np.count_nonzero(self.centis == 0))

    @property
    def segments(self) -> np.ndarray:
        return _segment_ids(self.dates, self.sessions)

    def positive(self) -> np.ndarray:
        """Strictly positive durations in seconds, the sample used for fitting."""
        values = self.durations
        return values[values > 0]

    def with_values(self, seconds: np.ndarray) -> "AdjustedSeries":
        return AdjustedSeries(
            values=np.asarray(seconds, dtype=float),
            dates=self.dates,
            minutes=self.minutes,
            sessions=self.sessions,
            symbol=self.symbol,
            direction_class=self.direction_class,
        )


@dataclass(frozen=True, eq=False)
class AdjustedSeries:
    """Real-valued durations sharing the tags of a DurationSeries (e.g. deseasonalized)."""

    values: np.ndarray
    dates: np.ndarray
    minutes: np.ndarray
    sessions: np.ndarray
    symbol: str = ""
    direction_class: DurationClass = "all"

    def __len__(self) -> int:
        return int(self.values.size)

    @property
    def durations(self) -> np.ndarray:
        return self.values

    @property
    def segments(self) -> np.ndarray:
        return _segment_ids(self.dates, self.sessions)


@dataclass(frozen=True)
class SummaryStats:
    n_events: int
    zero_count: int
    mean: float
    std: float
    events_per_day: float
    cv: float

    def to_dict(self) -> dict[str, float | int]:
        return {
            "N": self.n_events,
            "N0": self.zero_count,
            "mean_tau": self.mean,
            "sigma": self.std,
            "N_T": self.events_per_day,
            "cv": self.cv,
        }


@dataclass(frozen=True, eq=False)
class RescaledSeries:
    """Dimensionless durations g = tau / sigma with their session segments."""

    values: np.ndarray
    sigma: float
    segments: np.ndarray
    symbol: str = ""
    direction_class: DurationClass = "all"

    def __len__(self) -> int:
        return int(self.values.size)

    @property
    def zero_count(self) -> int:
        return int(np.count_nonzero(self.values == 0))


@dataclass(frozen=True, eq=False)
class EnsembleSeries:
    """Pooled rescaled durations of several symbols.

    ``segments`` are globally unique, so successor pairs can be restricted to
    one symbol's own session.
    """

    values: np.ndarray
    symbols: np.ndarray
    segments: np.ndarray

    def __len__(self) -> int:
        return int(self.values.size)

    def member(self, symbol: str) -> np.ndarray:
        return self.values[self.symbols == symbol]


def compute_durations(series: EventSeries, direction_class: DurationClass = "all") -> DurationSeries:
    """Difference consecutive events that share a session of the same day.

    No duration spans the lunch pause or an overnight gap. Each duration is
    tagged with the trading minute of its second event.

    Raises:
        InvalidArgumentError: Events lie outside the calendar sessions.
        EmptySeriesError: No session holds two or more events.
    """
    calendar = series.calendar
    sessions = calendar.session_of(series.centis)
    if np.any(sessions < 0):
        raise InvalidArgumentError("Series must be filtered to sessions before differencing")

    same = (series.dates[1:] == series.dates[:-1]) & (sessions[1:] == sessions[:-1])
    if not same.any():
        raise EmptySeriesError(f"{series.symbol or 'series'}: fewer than 2 events in every session")

    diffs = (series.centis[1:] - series.centis[:-1])[same]
    closing = np.flatnonzero(same) + 1
    return DurationSeries(
        centis=diffs.astype(np.int64),
        dates=series.dates[closing],
        minutes=calendar.minute_of(series.centis[closing]),
        sessions=sessions[closing],
        symbol=series.symbol,
        direction_class=direction_class,
        n_events=len(series),
    )


def summarize(ds: DurationSeries, n_days: int) -> SummaryStats:
    """Summary statistics: N, N0, mean, sample std, mean events per day.

    Zero durations are included in the mean and std.
    """
    if n_days <= 0:
        raise InvalidArgumentError("n_days must be positive")
    if len(ds) == 0:
        raise EmptySeriesError("Cannot summarize an empty duration series")
    values = ds.durations
    mean = float(values.mean())
    std = float(values.std(ddof=1)) if len(ds) > 1 else 0.0
    n_events = ds.n_events or len(ds) + int(np.unique(ds.segments).size)
    return SummaryStats(
        n_events=n_events,
        zero_count=ds.zero_count,
        mean=mean,
        std=std,
        events_per_day=n_events / n_days,
        cv=std / mean if mean > 0 else float("nan"),
    )


def rescale(ds: DurationSeries | AdjustedSeries | RescaledSeries, sigma: float | None = None) -> RescaledSeries:
    """Divide durations by the series' sample standard deviation (or ``sigma``).

    Raises:
        DegenerateSeriesError: sigma is zero (all durations identical).
    """
    if isinstance(ds, RescaledSeries):
        values, segments = ds.values, ds.segments
    else:
        values, segments = np.asarray(ds.durations, dtype=float), ds.segments
    if values.size < 2 and sigma is None:
        raise DegenerateSeriesError("Need at least two durations to estimate sigma")
    sigma = float(values.std(ddof=1)) if sigma is None else float(sigma)
    if not sigma > 0:
        raise DegenerateSeriesError(f"{ds.symbol or 'series'}: sigma is zero, cannot rescale")
    return RescaledSeries(
        values=values / sigma,
        sigma=sigma,
        segments=segments,
        symbol=ds.symbol,
        direction_class=ds.direction_class,
    )


def rescale_samples(samples: np.ndarray, symbol: str = "") -> RescaledSeries:
    """Rescale a bare sample (one session, no tags), e.g. synthetic draws."""
    samples = np.asarray(samples, dtype=float)
    series = RescaledSeries(
        values=samples, sigma=1.0, segments=np.zeros(samples.size, dtype=np.int64), symbol=symbol
    )
    return rescale(series)


def pool_ensemble(members: Sequence[RescaledSeries]) -> EnsembleSeries:
    """Concatenate rescaled members, tagging each value with its symbol.

    Raises:
        InvalidArgumentError: ``members`` is empty.
    """
    if not members:
        raise InvalidArgumentError("pool_ensemble needs at least one member")
    values, symbols, segments = [], [], []
    offset = 0
    for i, member in enumerate(members):
        values.append(member.values)
        symbols.append(np.full(len(member), member.symbol or f"member{i}", dtype=object))
        local = np.unique(member.segments, return_inverse=True)[1] if len(member) else member.segments
        segments.append(local + offset)
        offset += int(local.max(initial=-1)) + 1
    return EnsembleSeries(
        values=np.concatenate(values),
        symbols=np.concatenate(symbols),
        segments=np.concatenate(segments).astype(np.int64),
    )


def durations_frame(ds: DurationSeries) -> pd.DataFrame:
    """index, duration_s, date, minute_index, session; durations printed with two decimals."""
    return pd.DataFrame(
        {
            "index": np.arange(len(ds)),
            "duration_s": [f"{c / 100:.2f}" for c in ds.centis],
            "date": np.datetime_as_string(ds.dates, unit="D"),
            "minute_index": ds.minutes,
            "session": ds.sessions,
        }
    )


def write_durations(ds: DurationSeries, path: Path) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    durations_frame(ds).to_csv(path, index=False, lineterminator="\n")


def read_durations(path: Path, symbol: str = "", direction_class: DurationClass = "all") -> DurationSeries:
    if not Path(path).is_file():
        raise FileNotFoundError(f"Duration file not found: {path}")
    frame = pd.read_csv(path, dtype={"duration_s": str, "date": str})
    if frame.empty:
        raise EmptySeriesError(f"{path}: no durations")
    centis = np.rint(frame["duration_s"].astype(float).to_numpy() * 100).astype(np.int64)
    sessions = frame["session"].to_numpy(dtype=np.int64) if "session" in frame else np.zeros(len(frame), np.int64)
    ds = DurationSeries(
        centis=centis,
        dates=frame["date"].to_numpy(dtype="datetime64[D]"),
        minutes=frame["minute_index"].to_numpy(dtype=np.int64),
        sessions=sessions,
        symbol=symbol or Path(path).stem,
        direction_class=direction_class,
    )
    return replace(ds, n_events=len(ds) + int(np.unique(ds.segments).size))

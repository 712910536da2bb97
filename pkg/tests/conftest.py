import numpy as np
import pytest

from durationlab.ingest import RAW_SCHEMA, filter_to_sessions, make_event_series, parse_event_stream

# 10 records: one malformed, three outside the sessions (pre-open, lunch, after close)
RAW_TEXT = """\
2003-01-02,09:30:00,B
2003-01-02,09:30:01.5,S
2003-01-02,09:29:59,B
2003-01-02,11:30:00,S
2003-01-02,12:00:00,B
2003-01-02,13:00:00,B
2003-01-02,bad,B
2003-01-02,13:00:00,S
2003-01-03,15:00:00,B
2003-01-03,15:00:01,S
"""


@pytest.fixture
def raw_text() -> str:
    return RAW_TEXT


@pytest.fixture
def events():
    return filter_to_sessions(parse_event_stream(RAW_TEXT, RAW_SCHEMA, symbol="000001"))


def clock(h: int, m: int, s: float = 0.0) -> int:
    """Time of day in hundredths of a second."""
    return int(round((h * 3600 + m * 60 + s) * 100))


def two_sided_stream(seed: int = 0, n_days: int = 3, per_session: int = 400):
    """Random two-sided stream with several events per session, some simultaneous."""
    rng = np.random.default_rng(seed)
    dates, centis, directions = [], [], []
    for d in range(n_days):
        day = np.datetime64("2003-01-02") + d
        for open_c, close_c in ((clock(9, 30), clock(11, 30)), (clock(13, 0), clock(15, 0))):
            times = rng.integers(open_c, close_c + 1, per_session)
            # a few exact repeats produce zero durations
            times[: per_session // 20] = times[per_session // 20 : 2 * (per_session // 20)]
            dates.append(np.full(per_session, day))
            centis.append(times)
            directions.append(rng.choice([1, -1], per_session))
    return make_event_series(
        np.concatenate(dates), np.concatenate(centis), np.concatenate(directions), symbol="SYN"
    )

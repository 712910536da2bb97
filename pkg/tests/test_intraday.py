import numpy as np
import numpy.testing as npt
import pytest

from durationlab.errors import InvalidArgumentError, MissingProfileError
from durationlab.fractal import dfa
from durationlab.intraday import (
    IntradayConfig,
    IntradayProfile,
    adjust_durations,
    fit_profile_polynomial,
    intraday_mean_profile,
    write_profile,
)
from durationlab.series import AdjustedSeries, DurationSeries, compute_durations
from durationlab.synthetic import gen_event_stream, gen_poisson_durations, intraday_modulation


def duration_series(centis, dates, minutes) -> DurationSeries:
    minutes = np.asarray(minutes, dtype=np.int64)
    return DurationSeries(
        centis=np.asarray(centis, dtype=np.int64),
        dates=np.asarray(dates, dtype="datetime64[D]"),
        minutes=minutes,
        sessions=(minutes > 120).astype(np.int64),
    )


@pytest.fixture
def small_series() -> DurationSeries:
    # day 1: minute 1 -> 1 s, 3 s; minute 2 -> 6 s. day 2: minute 1 -> 4 s
    return duration_series(
        [100, 300, 600, 400],
        ["2003-01-02", "2003-01-02", "2003-01-02", "2003-01-03"],
        [1, 1, 2, 1],
    )


def test_two_stage_profile(small_series):
    profile = intraday_mean_profile(small_series)
    assert profile.n_days == 2
    assert profile.value(1) == pytest.approx(3.0)
    assert profile.value(2) == pytest.approx(6.0)
    assert np.isnan(profile.value(3))
    npt.assert_array_equal(profile.day_counts[:3], [2, 1, 0])
    assert profile.defined.sum() == 2


def test_all_days_averaging(small_series):
    profile = intraday_mean_profile(small_series, n_days=2, config=IntradayConfig(averaging="all_days"))
    assert profile.value(1) == pytest.approx(3.0)
    assert profile.value(2) == pytest.approx(3.0)


def test_minute_tags_checked():
    with pytest.raises(InvalidArgumentError):
        intraday_mean_profile(duration_series([100], ["2003-01-02"], [241]))
    with pytest.raises(InvalidArgumentError):
        intraday_mean_profile(duration_series([0], ["2003-01-02"], [5]))


def test_adjust_divides_by_minute_value(small_series):
    adjusted = adjust_durations(small_series, intraday_mean_profile(small_series))
    assert isinstance(adjusted, AdjustedSeries)
    npt.assert_allclose(adjusted.durations, [1 / 3, 1.0, 1.0, 4 / 3])
    npt.assert_array_equal(adjusted.minutes, small_series.minutes)

    other = duration_series([100, 200], ["2003-01-02", "2003-01-02"], [1, 3])
    with pytest.raises(MissingProfileError):
        adjust_durations(other, intraday_mean_profile(small_series))


def test_polynomial_recovers_quadratic():
    minutes = np.arange(1, 241, dtype=float)
    means = 15.4 - 0.24 * minutes + 0.001 * minutes**2
    profile = IntradayProfile(means=means, day_counts=np.ones(240, dtype=np.int64), n_days=1)
    fit = fit_profile_polynomial(profile, degree=2)
    npt.assert_allclose(fit.coefficients, [15.4, -0.24, 0.001], rtol=1e-6)
    npt.assert_allclose(fit.residuals, 0.0, atol=1e-9)

    high = fit_profile_polynomial(profile, degree=6)
    npt.assert_allclose(high.fitted, means, rtol=1e-8)

    sparse = IntradayProfile(
        means=np.r_[np.ones(3), np.full(237, np.nan)], day_counts=np.ones(240, dtype=np.int64), n_days=1
    )
    with pytest.raises(InvalidArgumentError):
        fit_profile_polynomial(sparse, degree=6)


@pytest.fixture(scope="module")
def modulated_durations() -> DurationSeries:
    stream = gen_event_stream(
        gen_poisson_durations(1 / 3, 120_000, seed=5),
        n_days=20,
        seed=6,
        modulation=intraday_modulation("inverse_u", 0.5),
    )
    return compute_durations(stream)


def test_modulation_shows_in_profile(modulated_durations):
    profile = intraday_mean_profile(modulated_durations)
    fit = fit_profile_polynomial(profile)
    ratio = fit.fitted[119] / fit.fitted[0]
    assert 1.3 < ratio < 1.7
    assert profile.variation() > 0.05


def test_adjusted_profile_is_flat(modulated_durations, tmp_path):
    profile = intraday_mean_profile(modulated_durations)
    adjusted = adjust_durations(modulated_durations, profile)
    flat = intraday_mean_profile(adjusted)
    npt.assert_allclose(flat.means[flat.defined], 1.0, rtol=1e-9)

    path = tmp_path / "profile.csv"
    write_profile(profile.with_fit(fit_profile_polynomial(profile)), path)
    header = path.read_text().splitlines()[0]
    assert header == "minute,mean_duration,n_days,poly_fit"


@pytest.mark.slow
def test_adjustment_barely_moves_hurst_without_seasonality():
    stream = gen_event_stream(gen_poisson_durations(1 / 3, 120_000, seed=7), n_days=20, seed=8)
    ds = compute_durations(stream)
    adjusted = adjust_durations(ds, intraday_mean_profile(ds))
    assert abs(dfa(ds.durations).H - dfa(adjusted.durations).H) < 0.03

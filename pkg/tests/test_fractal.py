import math

import numpy as np
import numpy.testing as npt
import pytest

from durationlab.errors import InvalidArgumentError, SingularWindowError, SpectrumWarning
from durationlab.fractal import (
    DEFAULT_Q_GRID,
    dfa,
    fluctuation_function,
    fluctuation_surface,
    legendre_spectrum,
    mfdfa,
    profile,
    scale_grid,
    scaling_exponent,
    segment_fluctuations,
)
from durationlab.synthetic import cascade_hurst, cascade_width, gen_binomial_cascade, gen_fgn, make_rng, spawn_seeds

POWER_SCALES = [2**k for k in range(5, 15)]


def test_profile_needs_length():
    npt.assert_array_equal(profile(np.ones(100)), np.arange(1, 101))
    with pytest.raises(InvalidArgumentError):
        profile(np.ones(79))
    with pytest.raises(InvalidArgumentError):
        profile(np.r_[np.ones(100), np.nan])


def test_scale_grid():
    grid = scale_grid(1000)
    assert grid.scales[0] == 20
    assert grid.scales[-1] == 250
    assert np.all(np.diff(grid.scales) > 0)
    with pytest.raises(InvalidArgumentError):
        scale_grid(1000, smin=10)
    with pytest.raises(InvalidArgumentError):
        scale_grid(1000, smax=251)
    with pytest.raises(InvalidArgumentError):
        scale_grid(60)


def test_scale_grid_tiles_the_series():
    npt.assert_array_equal(scale_grid(2**16).scales, POWER_SCALES)
    grid = scale_grid(100_000)
    assert np.all(100_000 % grid.scales == 0)
    assert grid.scales[0] == 20
    assert grid.scales[-1] == 25_000
    # a prime length has no divisors in range
    prime = scale_grid(10_007)
    assert prime.scales[0] == 20
    assert prime.scales[-1] == 2_501
    assert len(prime) > 20


def test_windows_cover_both_ends():
    y = np.cumsum(make_rng(0).standard_normal(100))
    assert segment_fluctuations(y, 30).size == 6
    npt.assert_array_equal(segment_fluctuations(np.arange(100.0), 30), np.zeros(6))
    with pytest.raises(InvalidArgumentError):
        segment_fluctuations(y, 101)


def test_fluctuation_function_orders():
    r = np.array([1.0, 4.0])
    assert fluctuation_function(r, 2) == pytest.approx(math.sqrt(8.5))
    assert fluctuation_function(r, 0) == pytest.approx(2.0)
    assert fluctuation_function(r, -2) == pytest.approx((17 / 32) ** -0.5)
    assert fluctuation_function(np.array([0.0, 1.0]), 2) == pytest.approx(math.sqrt(0.5))
    with pytest.raises(SingularWindowError):
        fluctuation_function(np.array([1.0, 0.0]), -1)
    with pytest.raises(SingularWindowError):
        fluctuation_function(np.array([0.0, 1.0]), 0)


def test_singular_window_names_scale():
    with pytest.raises(SingularWindowError) as excinfo:
        fluctuation_surface(np.ones(200), q_grid=(-1.0, 2.0), grid=[20, 25, 30, 40, 50])
    assert excinfo.value.scale == 20
    assert excinfo.value.window == 0


def test_scaling_exponent_exact_power_law():
    scales = np.array([20, 40, 80, 160, 320])
    slope, stderr = scaling_exponent(scales, 3.0 * scales**0.7)
    assert slope == pytest.approx(0.7)
    assert stderr == pytest.approx(0.0, abs=1e-12)
    with pytest.raises(InvalidArgumentError):
        scaling_exponent(scales[:4], scales[:4] ** 0.5)


def test_legendre_of_constant_h():
    q = np.array(DEFAULT_Q_GRID, dtype=float)
    spectrum = legendre_spectrum(q, np.full(q.size, 0.5))
    npt.assert_allclose(spectrum.alpha, 0.5)
    npt.assert_allclose(spectrum.f_alpha, 1.0)
    npt.assert_allclose(spectrum.mass_exponent, q * 0.5 - 1)
    assert spectrum.delta_alpha == pytest.approx(0.0)
    assert spectrum.monotone


def test_legendre_identity():
    q = np.array(DEFAULT_Q_GRID, dtype=float)
    a, b = 0.4, 0.3
    h = np.full(q.size, a)
    h[q != 0] += b / q[q != 0]
    spectrum = legendre_spectrum(q, h)
    npt.assert_allclose(spectrum.alpha, a, atol=1e-8)
    npt.assert_allclose(spectrum.f_alpha[q != 0], 1 - b, atol=1e-8)
    assert spectrum.f_alpha[q == 0] == pytest.approx(1.0)
    assert spectrum.delta_alpha < 1e-2


def test_legendre_flags_increasing_alpha():
    q = np.array([-1.0, 0.0, 1.0, 2.0])
    with pytest.warns(SpectrumWarning):
        spectrum = legendre_spectrum(q, 0.5 + 0.1 * q)
    assert not spectrum.monotone


def test_white_noise_hurst():
    result = dfa(make_rng(1).standard_normal(2**16))
    assert result.H == pytest.approx(0.5, abs=0.05)
    assert result.stderr < 0.02


def test_fgn_hurst():
    assert dfa(gen_fgn(0.9, 100_000, seed=2)).H == pytest.approx(0.9, abs=0.05)


def test_dfa_matches_mfdfa_at_two():
    x = gen_fgn(0.7, 20_000, seed=3)
    single = dfa(x)
    multi = mfdfa(x, q_grid=(-2, 0, 2, 4))
    assert multi.H == pytest.approx(single.H, rel=1e-12)
    npt.assert_array_equal(multi.surface.scales, single.scales)

    without_two = mfdfa(x, q_grid=(-1, 1, 3))
    assert without_two.H == pytest.approx(single.H, rel=1e-12)


def test_monofractal_h_is_flat():
    result = mfdfa(gen_fgn(0.6, 2**16, seed=4), q_grid=(-3, -2, -1, 0, 1, 2, 3))
    assert np.ptp(result.h) < 0.1
    assert len(result.exponent_rows()) == 7
    assert {"H", "stderr", "delta_alpha", "monotone_alpha"} == result.to_dict().keys()


def test_binomial_cascade_hurst():
    result = mfdfa(gen_binomial_cascade(0.3, 16))
    npt.assert_array_equal(result.surface.scales, POWER_SCALES)
    nonzero = result.q_grid != 0
    npt.assert_allclose(result.h[nonzero], cascade_hurst(result.q_grid[nonzero], 0.3), atol=0.05)
    assert result.delta_alpha == pytest.approx(cascade_width(0.3), abs=0.1)
    # h(q) decreases for a multifractal
    assert np.all(np.diff(result.h[result.q_grid >= 1]) < 0)


@pytest.mark.slow
def test_white_noise_hurst_many_trials():
    estimates = np.array([dfa(make_rng(s).standard_normal(2**16)).H for s in spawn_seeds(39, 20)])
    assert np.all(np.abs(estimates - 0.5) < 0.03)
    assert np.mean(estimates) == pytest.approx(0.5, abs=0.02)


@pytest.mark.slow
def test_fgn_hurst_many_trials():
    estimates = np.array([dfa(gen_fgn(0.9, 2**16, s)).H for s in spawn_seeds(40, 20)])
    assert np.all((estimates >= 0.85) & (estimates <= 0.95))
    assert np.mean(estimates) == pytest.approx(0.9, abs=0.02)


@pytest.mark.slow
def test_monofractal_full_grid():
    result = mfdfa(gen_fgn(0.8, 2**16, seed=41))
    assert np.ptp(result.h) < 0.1


@pytest.mark.slow
def test_shuffled_cascade_is_still_multifractal():
    result = mfdfa(gen_binomial_cascade(0.3, 18, seed=9, shuffle=True), q_grid=(1, 2, 3, 4))
    assert np.ptp(result.h) > 0.2

"""Detrended fluctuation analysis, its multifractal generalization and singularity spectra."""

import math
import warnings
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.special import logsumexp
from scipy.stats import linregress

from .errors import InvalidArgumentError, SingularWindowError, SpectrumWarning

DEFAULT_Q_GRID: tuple[float, ...] = (-6, -5, -4, -3, -2, -1, -0.5, 0, 0.5, 1, 2, 3, 4, 5, 6)
MIN_SCALE = 20
MIN_SERIES_LENGTH = 4 * MIN_SCALE
MIN_REGRESSION_SCALES = 5
MIN_ALIGNED_SCALES = 8
ZERO_RESIDUAL_RTOL = 1e-12


@dataclass(frozen=True)
class FractalConfig:
    """Settings for DFA and MF-DFA.

    Attributes:
        q_grid: Moment orders.
        n_scales: Log-spaced scales requested before integer rounding.
        smin: Smallest window size.
        smax: Largest window size; None means N // 4.
        detrend_order: Degree of the polynomial removed in each window.
        spectrum_tol: Allowed increase of alpha(q) before the spectrum is flagged.
    """

    q_grid: tuple[float, ...] = DEFAULT_Q_GRID
    n_scales: int = 30
    smin: int = MIN_SCALE
    smax: int | None = None
    detrend_order: int = 1
    spectrum_tol: float = 1e-3


DEFAULT_FRACTAL_CONFIG = FractalConfig()


@dataclass(frozen=True, eq=False)
class ScaleGrid:
    scales: np.ndarray

    def __post_init__(self) -> None:
        if self.scales.ndim != 1 or self.scales.size == 0 or np.any(np.diff(self.scales) <= 0):
            raise InvalidArgumentError("Scales must be a non-empty, strictly increasing sequence")

    def __len__(self) -> int:
        return int(self.scales.size)


@dataclass(frozen=True, eq=False)
class FluctuationSurface:
    """F_q(s) for every q (rows) and scale (columns)."""

    q_grid: np.ndarray
    scales: np.ndarray
    F: np.ndarray
    detrend_order: int

    def row(self, q: float) -> np.ndarray:
        idx = np.flatnonzero(self.q_grid == q)
        if idx.size == 0:
            raise InvalidArgumentError(f"q = {q} is not on the grid")
        return self.F[idx[0]]

    def to_rows(self) -> list[dict[str, float]]:
        return [
            {"s": int(s), "q": float(q), "F": float(self.F[i, j])}
            for i, q in enumerate(self.q_grid)
            for j, s in enumerate(self.scales)
        ]


@dataclass(frozen=True, eq=False)
class SingularitySpectrum:
    alpha: np.ndarray
    f_alpha: np.ndarray
    delta_alpha: float
    mass_exponent: np.ndarray
    monotone: bool


@dataclass(frozen=True, eq=False)
class DfaResult:
    H: float
    stderr: float
    scales: np.ndarray
    F: np.ndarray
    detrend_order: int

    def to_dict(self) -> dict[str, float | int]:
        return {"H": self.H, "stderr": self.stderr, "detrend_order": self.detrend_order}


@dataclass(frozen=True, eq=False)
class MultifractalResult:
    """Generalized Hurst exponents and the singularity spectrum.

    Attributes:
        surface: Fluctuation functions behind the fits.
        h: h(q) per q on the grid.
        h_stderr: Regression standard error of each h(q).
        spectrum: alpha(q), f(alpha), the width and tau(q) = q h(q) - 1.
        H: h(2), the DFA exponent.
        H_stderr: Its standard error.
    """

    surface: FluctuationSurface
    h: np.ndarray
    h_stderr: np.ndarray
    spectrum: SingularitySpectrum
    H: float
    H_stderr: float

    @property
    def q_grid(self) -> np.ndarray:
        return self.surface.q_grid

    @property
    def delta_alpha(self) -> float:
        return self.spectrum.delta_alpha

    def exponent_rows(self) -> list[dict[str, float]]:
        return [
            {"q": float(q), "h": float(h), "stderr": float(e), "tau": float(t)}
            for q, h, e, t in zip(self.q_grid, self.h, self.h_stderr, self.spectrum.mass_exponent)
        ]

    def spectrum_rows(self) -> list[dict[str, float]]:
        return [
            {"q": float(q), "alpha": float(a), "f_alpha": float(f)}
            for q, a, f in zip(self.q_grid, self.spectrum.alpha, self.spectrum.f_alpha)
        ]

    def to_dict(self) -> dict[str, float | bool]:
        return {
            "H": self.H,
            "stderr": self.H_stderr,
            "delta_alpha": self.delta_alpha,
            "monotone_alpha": self.spectrum.monotone,
        }


def profile(series: np.ndarray, min_length: int = MIN_SERIES_LENGTH) -> np.ndarray:
    """Cumulative sums y_i = x_1 + ... + x_i.

    Raises:
        InvalidArgumentError: Fewer than ``min_length`` points or non-finite input.
    """
    x = np.asarray(series, dtype=float).ravel()
    if x.size < min_length:
        raise InvalidArgumentError(f"Series of length {x.size} is shorter than {min_length}")
    if not np.all(np.isfinite(x)):
        raise InvalidArgumentError("Series contains non-finite values")
    return np.cumsum(x)


def scale_grid(
    n: int,
    smin: int = MIN_SCALE,
    smax: int | None = None,
    n_scales: int = 30,
) -> ScaleGrid:
    """Log-spaced integer window sizes in [smin, smax], deduplicated after rounding.

    Each log-spaced target snaps to the nearest (in log) window size that
    divides N, so every window tiles the series without a remainder. When
    fewer than ``MIN_ALIGNED_SCALES`` such sizes result, the targets are
    rounded to integers instead. For N = 2^k this gives the dyadic scales.

    Raises:
        InvalidArgumentError: smin below the minimum scale, smax above N/4, or
            an empty range.
    """
    smax = n // 4 if smax is None else int(smax)
    if smin < MIN_SCALE:
        raise InvalidArgumentError(f"smin must be at least {MIN_SCALE}, got {smin}")
    if smax > n // 4:
        raise InvalidArgumentError(f"smax {smax} exceeds N/4 = {n // 4}")
    if smax < smin:
        raise InvalidArgumentError(f"Empty scale range [{smin}, {smax}] for N = {n}")
    raw = np.logspace(math.log10(smin), math.log10(smax), n_scales)

    candidates = np.arange(smin, smax + 1, dtype=np.int64)
    divisors = candidates[n % candidates == 0]
    if divisors.size >= MIN_ALIGNED_SCALES:
        distance = np.abs(np.log(raw)[:, None] - np.log(divisors)[None, :])
        aligned = np.unique(divisors[np.argmin(distance, axis=1)])
        if aligned.size >= MIN_ALIGNED_SCALES:
            return ScaleGrid(aligned)
    return ScaleGrid(np.unique(np.rint(raw).astype(np.int64)))


def _windows(y: np.ndarray, s: int) -> np.ndarray:
    n_s = y.size // s
    head = y[: n_s * s].reshape(n_s, s)
    tail = y[y.size - n_s * s :].reshape(n_s, s)
    return np.vstack([head, tail])


def segment_fluctuations(y: np.ndarray, s: int, detrend_order: int = 1) -> np.ndarray:
    """r.m.s. detrending residual in 2 * floor(N/s) windows of the profile.

    The first floor(N/s) windows tile y from the start and the rest tile it
    from the end, so the remainder is covered once from each side.
    Residuals below round-off are reported as exactly zero.

    Raises:
        InvalidArgumentError: s > N or s < detrend_order + 2.
    """
    y = np.asarray(y, dtype=float)
    if detrend_order < 0:
        raise InvalidArgumentError("detrend_order must be non-negative")
    if s > y.size:
        raise InvalidArgumentError(f"Scale {s} exceeds series length {y.size}")
    if s < detrend_order + 2:
        raise InvalidArgumentError(f"Scale {s} too small for detrend order {detrend_order}")

    windows = _windows(y, s)
    x = np.arange(s, dtype=float) - (s - 1) / 2.0
    design = np.vander(x, detrend_order + 1)
    coef, *_ = np.linalg.lstsq(design, windows.T, rcond=None)
    residuals = windows.T - design @ coef
    r = np.sqrt(np.mean(residuals**2, axis=0))

    magnitude = np.maximum(np.max(np.abs(windows), axis=1), 1.0)
    r[r <= ZERO_RESIDUAL_RTOL * magnitude] = 0.0
    return r


def fluctuation_function(r: np.ndarray, q: float) -> float:
    """q-th order average of window fluctuations; geometric mean at q = 0.

    Raises:
        InvalidArgumentError: Empty or negative fluctuations.
        SingularWindowError: A zero fluctuation with q <= 0.
    """
    r = np.asarray(r, dtype=float)
    if r.size == 0 or np.any(r < 0) or not np.all(np.isfinite(r)):
        raise InvalidArgumentError("Fluctuations must be a non-empty array of finite non-negative values")
    if q <= 0:
        zero = np.flatnonzero(r == 0)
        if zero.size:
            raise SingularWindowError(int(zero[0]))
        ln_r = np.log(r)
        if q == 0:
            return float(np.exp(ln_r.mean()))
        return float(np.exp((logsumexp(q * ln_r) - math.log(r.size)) / q))
    return float(np.mean(r**q) ** (1.0 / q))


def scaling_exponent(scales: np.ndarray, F: np.ndarray) -> tuple[float, float]:
    """OLS slope of ln F against ln s, and the standard error of the slope.

    Raises:
        InvalidArgumentError: Fewer than five scales or a non-positive F.
    """
    scales = np.asarray(scales, dtype=float)
    F = np.asarray(F, dtype=float)
    if scales.size != F.size:
        raise InvalidArgumentError("scales and F must have the same length")
    if scales.size < MIN_REGRESSION_SCALES:
        raise InvalidArgumentError(f"Need at least {MIN_REGRESSION_SCALES} scales, got {scales.size}")
    if np.any(~(F > 0)):
        raise InvalidArgumentError("Fluctuation values must be strictly positive")
    fit = linregress(np.log(scales), np.log(F))
    return float(fit.slope), float(fit.stderr)


def _resolve_grid(n: int, grid: ScaleGrid | Sequence[int] | None, config: FractalConfig) -> ScaleGrid:
    if grid is None:
        return scale_grid(n, config.smin, config.smax, config.n_scales)
    if isinstance(grid, ScaleGrid):
        return grid
    return ScaleGrid(np.asarray(grid, dtype=np.int64))


def fluctuation_surface(
    series: np.ndarray,
    q_grid: Sequence[float] = DEFAULT_Q_GRID,
    grid: ScaleGrid | Sequence[int] | None = None,
    detrend_order: int = 1,
    config: FractalConfig = DEFAULT_FRACTAL_CONFIG,
) -> FluctuationSurface:
    """F_q(s) over the q grid and the scale grid, scales processed in increasing order.

    Raises:
        SingularWindowError: Zero fluctuation in some window with q <= 0; the
            error names the window and the scale.
    """
    y = profile(series)
    grid = _resolve_grid(y.size, grid, config)
    qs = np.asarray(q_grid, dtype=float)
    F = np.empty((qs.size, len(grid)))
    for j, s in enumerate(grid.scales):
        r = segment_fluctuations(y, int(s), detrend_order)
        for i, q in enumerate(qs):
            try:
                F[i, j] = fluctuation_function(r, float(q))
            except SingularWindowError as e:
                raise SingularWindowError(e.window, scale=int(s)) from None
    return FluctuationSurface(q_grid=qs, scales=grid.scales, F=F, detrend_order=detrend_order)


def _side_slopes(q: np.ndarray, tau: np.ndarray) -> np.ndarray:
    """d tau / dq from a cubic spline on each side of q = 0.

    The q < 0 and q > 0 branches are interpolated separately. A branch with a
    single point borrows q = 0 when the grid has it, otherwise the whole grid.
    """
    slopes = np.empty_like(q)
    zero = q == 0
    for side in (q < 0, q > 0):
        if not side.any():
            continue
        support = side | zero if side.sum() < 2 else side
        if support.sum() < 2:
            support = np.ones_like(side)
        spline = CubicSpline(q[support], tau[support])
        slopes[side] = spline(q[side], 1)
    return slopes


def legendre_spectrum(q_grid: Sequence[float], h: Sequence[float], tol: float = 1e-3) -> SingularitySpectrum:
    """Singularity spectrum from h(q).

    With the mass exponent tau(q) = q h(q) - 1, alpha = tau'(q) and
    f = q alpha - tau, which equal h + q h' and q^2 h' + 1. tau' comes from
    cubic splines fitted separately for q < 0 and q > 0; at q = 0 alpha is h(0)
    and f is 1.

    Raises:
        InvalidArgumentError: Fewer than three q points or an unsorted grid.

    Warns:
        SpectrumWarning: alpha(q) increases somewhere by more than ``tol``.
    """
    q = np.asarray(q_grid, dtype=float)
    h = np.asarray(h, dtype=float)
    if q.size < 3 or q.size != h.size:
        raise InvalidArgumentError("Need h on at least three q points")
    if np.any(np.diff(q) <= 0):
        raise InvalidArgumentError("q grid must be strictly increasing")

    mass_exponent = q * h - 1.0
    alpha = _side_slopes(q, mass_exponent)
    zero = q == 0
    alpha[zero] = h[zero]
    f_alpha = q * alpha - mass_exponent
    monotone = bool(np.all(np.diff(alpha) <= tol))
    if not monotone:
        warnings.warn(
            f"alpha(q) is not monotone (largest increase {np.max(np.diff(alpha)):.3g})",
            SpectrumWarning,
            stacklevel=2,
        )
    return SingularitySpectrum(
        alpha=alpha,
        f_alpha=f_alpha,
        delta_alpha=float(alpha.max() - alpha.min()),
        mass_exponent=mass_exponent,
        monotone=monotone,
    )


def dfa(
    series: np.ndarray,
    grid: ScaleGrid | Sequence[int] | None = None,
    detrend_order: int = 1,
    config: FractalConfig = DEFAULT_FRACTAL_CONFIG,
) -> DfaResult:
    """Second-order fluctuation function and its scaling exponent H."""
    surface = fluctuation_surface(series, (2.0,), grid, detrend_order, config)
    H, stderr = scaling_exponent(surface.scales, surface.F[0])
    return DfaResult(H=H, stderr=stderr, scales=surface.scales, F=surface.F[0], detrend_order=detrend_order)


def mfdfa(
    series: np.ndarray,
    q_grid: Sequence[float] | None = None,
    grid: ScaleGrid | Sequence[int] | None = None,
    detrend_order: int | None = None,
    config: FractalConfig = DEFAULT_FRACTAL_CONFIG,
) -> MultifractalResult:
    """Full MF-DFA: profile, window fluctuations, F_q(s), h(q) and the Legendre spectrum.

    H is h(2) when q = 2 is on the grid, otherwise a separate DFA run.
    """
    q_grid = config.q_grid if q_grid is None else q_grid
    order = config.detrend_order if detrend_order is None else detrend_order
    qs = np.asarray(sorted(float(q) for q in q_grid))

    surface = fluctuation_surface(series, qs, grid, order, config)
    fits = [scaling_exponent(surface.scales, row) for row in surface.F]
    h = np.array([slope for slope, _ in fits])
    h_stderr = np.array([err for _, err in fits])
    spectrum = legendre_spectrum(qs, h, config.spectrum_tol)

    if np.any(qs == 2.0):
        k = int(np.flatnonzero(qs == 2.0)[0])
        H, H_stderr = float(h[k]), float(h_stderr[k])
    else:
        single = dfa(series, surface.scales, order, config)
        H, H_stderr = single.H, single.stderr

    return MultifractalResult(surface=surface, h=h, h_stderr=h_stderr, spectrum=spectrum, H=H, H_stderr=H_stderr)

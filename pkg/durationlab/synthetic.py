"""Seeded generators with analytically known properties, used as ground truth."""

import math
from dataclasses import dataclass, field
from datetime import date as Date
from typing import Any, Callable, Literal

import numpy as np
from scipy.special import log_ndtr

from .errors import InvalidArgumentError, ParameterError
from .families.qexp import QExpParams
from .families.weibull import WeibullParams
from .ingest import BUY, SELL, EventSeries, IngestReport, SessionCalendar, make_event_series

GeneratorKind = Literal["poisson", "weibull_iid", "qexp_iid", "fgn", "longmem_weibull", "binomial_cascade"]
KINDS: tuple[GeneratorKind, ...] = ("poisson", "weibull_iid", "qexp_iid", "fgn", "longmem_weibull", "binomial_cascade")
MAX_CASCADE_LEVELS = 26
DEFAULT_START_DATE = Date(2003, 1, 2)

Seed = int | np.random.SeedSequence


def make_rng(seed: Seed) -> np.random.Generator:
    """Counter-based generator; the same seed always yields the same stream."""
    sequence = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    return np.random.Generator(np.random.Philox(sequence))


def spawn_seeds(seed: int, n: int) -> list[np.random.SeedSequence]:
    """Independent child seeds for parallel realizations."""
    return np.random.SeedSequence(seed).spawn(n)


def _check_length(n: int) -> None:
    if n <= 0:
        raise InvalidArgumentError(f"Length must be positive, got {n}")


def gen_poisson_durations(rate: float, n: int, seed: Seed) -> np.ndarray:
    """Exponential waiting times with mean 1/rate."""
    if not rate > 0:
        raise ParameterError(f"rate must be positive, got {rate}")
    _check_length(n)
    return make_rng(seed).exponential(1.0 / rate, n)


def weibull_quantile(log_survival: np.ndarray, alpha: float, beta: float) -> np.ndarray:
    """Weibull inverse CDF written in terms of ln S = ln(1 - F)."""
    return alpha * (-log_survival) ** (1.0 / beta)


def gen_weibull_iid(alpha: float, beta: float, n: int, seed: Seed) -> np.ndarray:
    """Inverse-CDF Weibull draws."""
    WeibullParams(alpha, beta)
    _check_length(n)
    return alpha * make_rng(seed).standard_exponential(n) ** (1.0 / beta)


def qexp_quantile(survival: np.ndarray, mu: float, q: float) -> np.ndarray:
    """Inverse of S(tau) = [1 + (q - 1) tau / mu]^(1 / (1 - q))."""
    return mu * np.expm1((1.0 - q) * np.log(survival)) / (q - 1.0)


def gen_qexp_iid(mu: float, q: float, n: int, seed: Seed) -> np.ndarray:
    """Inverse-CDF q-exponential draws.

    Raises:
        ParameterError: q >= 2, where the distribution has no finite mean.
    """
    QExpParams(mu, q)
    if q >= 2:
        raise ParameterError(f"q-exponential with q = {q} >= 2 is non-normalizable as a duration model")
    _check_length(n)
    survival = 1.0 - make_rng(seed).random(n)
    return qexp_quantile(survival, mu, q)


def fgn_autocovariance(H: float, k: np.ndarray) -> np.ndarray:
    k = np.abs(np.asarray(k, dtype=float))
    return 0.5 * (np.abs(k + 1) ** (2 * H) - 2 * k ** (2 * H) + np.abs(k - 1) ** (2 * H))


def gen_fgn(H: float, n: int, seed: Seed) -> np.ndarray:
    """Unit-variance fractional Gaussian noise by circulant embedding (Davies-Harte).

    Raises:
        ParameterError: H outside (0, 1), or a negative circulant eigenvalue.
    """
    if not 0 < H < 1:
        raise ParameterError(f"Hurst exponent must lie in (0, 1), got {H}")
    _check_length(n)
    rng = make_rng(seed)

    gamma = fgn_autocovariance(H, np.arange(n + 1))
    row = np.concatenate([gamma, gamma[n - 1 : 0 : -1]])
    m = row.size
    eigenvalues = np.fft.fft(row).real
    floor = -1e-10 * np.max(np.abs(eigenvalues))
    if np.any(eigenvalues < floor):
        raise ParameterError(f"Circulant embedding is not positive definite for H = {H}, n = {n}")
    eigenvalues = np.clip(eigenvalues, 0.0, None)

    z1 = rng.standard_normal(n + 1)
    z2 = rng.standard_normal(n + 1)
    w = np.empty(m, dtype=complex)
    w[0] = math.sqrt(eigenvalues[0] / m) * z1[0]
    w[n] = math.sqrt(eigenvalues[n] / m) * z2[0]
    w[1:n] = np.sqrt(eigenvalues[1:n] / (2 * m)) * (z1[1:n] + 1j * z2[1:n])
    w[n + 1 :] = np.conj(w[1:n][::-1])
    return np.fft.fft(w).real[:n]


def gen_longmem_weibull(alpha: float, beta: float, H: float, n: int, seed: Seed) -> np.ndarray:
    """Weibull marginal with fGn long memory through a Gaussian copula.

    Each fGn value z maps to the Weibull quantile of Phi(z), computed as
    alpha * (-ln Phi(-z))^(1/beta) for accuracy in both tails.
    """
    WeibullParams(alpha, beta)
    z = gen_fgn(H, n, seed)
    return weibull_quantile(log_ndtr(-z), alpha, beta)


def gen_binomial_cascade(p: float, levels: int, seed: Seed | None = None, shuffle: bool = False) -> np.ndarray:
    """Binomial multiplicative cascade of length 2**levels with unit total mass.

    Every cell splits its mass into fractions p (left) and 1 - p (right); with
    ``shuffle`` the orientation of each split is drawn at random.

    Raises:
        ParameterError: p outside (0, 1).
        InvalidArgumentError: levels outside 0..26.
    """
    if not 0 < p < 1:
        raise ParameterError(f"Cascade weight must lie in (0, 1), got {p}")
    if not 0 <= levels <= MAX_CASCADE_LEVELS:
        raise InvalidArgumentError(f"levels must lie in 0..{MAX_CASCADE_LEVELS}, got {levels}")
    rng = make_rng(0 if seed is None else seed) if shuffle else None

    mass = np.ones(1)
    for _ in range(levels):
        left = np.full(mass.size, p)
        if rng is not None:
            left = np.where(rng.random(mass.size) < 0.5, p, 1.0 - p)
        split = np.empty(2 * mass.size)
        split[0::2] = mass * left
        split[1::2] = mass * (1.0 - left)
        mass = split
    return mass


def cascade_hurst(q: np.ndarray | float, p: float) -> np.ndarray:
    """Closed-form generalized Hurst exponent h(q) of the binomial cascade."""
    q = np.asarray(q, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        h = 1.0 / q - np.log(p**q + (1.0 - p) ** q) / (q * math.log(2.0))
    limit = -(math.log(p) + math.log(1.0 - p)) / (2.0 * math.log(2.0))
    return np.where(q == 0, limit, h)


def cascade_width(p: float) -> float:
    """Spectrum width over all q: log2 of max(p, 1-p) / min(p, 1-p)."""
    return abs(math.log2((1.0 - p) / p))


def _trading_days(calendar: SessionCalendar, n_days: int, start: Date) -> np.ndarray:
    if calendar.days:
        if n_days > len(calendar.days):
            raise InvalidArgumentError(f"Calendar lists {len(calendar.days)} days, {n_days} requested")
        return np.array(calendar.days[:n_days], dtype="datetime64[D]")
    return np.busday_offset(np.datetime64(start, "D"), np.arange(n_days), roll="forward")


def gen_event_stream(
    durations: np.ndarray,
    calendar: SessionCalendar | None = None,
    n_days: int = 1,
    seed: Seed = 0,
    modulation: Callable[[np.ndarray], np.ndarray] | None = None,
    symbol: str = "",
    buy_fraction: float = 0.5,
    start: Date = DEFAULT_START_DATE,
) -> EventSeries:
    """Lay waiting times onto the session calendar as a two-sided event stream.

    Durations are consumed in order. Within a session each event follows the
    previous one after the next duration; the first event of a session comes
    one duration after the open. With ``modulation`` every trading minute j
    runs on a clock slowed by m(j), so waiting times inside minute j are
    stretched by m(j). Directions are buy with probability ``buy_fraction``.
    The stream ends early when the durations run out.

    Raises:
        InvalidArgumentError: Negative durations, non-positive modulation or
            a bad ``buy_fraction``.
    """
    calendar = calendar or SessionCalendar.default()
    durations = np.asarray(durations, dtype=float)
    if np.any(durations < 0) or not np.all(np.isfinite(durations)):
        raise InvalidArgumentError("Durations must be finite and non-negative")
    if not 0 <= buy_fraction <= 1:
        raise InvalidArgumentError("buy_fraction must lie in [0, 1]")
    if n_days <= 0:
        raise InvalidArgumentError("n_days must be positive")

    clock = np.cumsum(durations)
    days = _trading_days(calendar, n_days, start)
    minute_offset = 0
    session_clocks = []
    for open_s, close_s in calendar.sessions:
        width = (close_s - open_s) // 60
        real_edges = np.append(open_s + 60.0 * np.arange(width), float(close_s))
        minutes = minute_offset + np.arange(1, width + 1)
        factor = np.ones(width) if modulation is None else np.asarray(modulation(minutes), dtype=float)
        if factor.shape != (width,) or np.any(~(factor > 0)):
            raise InvalidArgumentError("Modulation must be positive at every trading minute")
        theta_edges = np.concatenate(([0.0], np.cumsum(np.diff(real_edges) / factor)))
        session_clocks.append((real_edges, theta_edges, close_s))
        minute_offset += width

    all_dates, all_centis = [], []
    pos = 0
    for day in days:
        for real_edges, theta_edges, close_s in session_clocks:
            if pos >= clock.size:
                break
            base = clock[pos - 1] if pos > 0 else 0.0
            end = int(np.searchsorted(clock, base + theta_edges[-1], side="right"))
            theta = clock[pos:end] - base
            pos = max(end, pos + 1)
            real = np.interp(theta, theta_edges, real_edges)
            centis = np.minimum(np.rint(real * 100).astype(np.int64), close_s * 100)
            all_dates.append(np.full(centis.size, day))
            all_centis.append(centis)

    dates = np.concatenate(all_dates) if all_dates else np.array([], dtype="datetime64[D]")
    centis = np.concatenate(all_centis) if all_centis else np.array([], dtype=np.int64)
    rng = make_rng(seed)
    directions = np.where(rng.random(centis.size) < buy_fraction, BUY, SELL).astype(np.int8)
    return make_event_series(
        dates,
        centis,
        directions,
        symbol=symbol,
        calendar=calendar,
        report=IngestReport(raw_records=int(centis.size)),
    )


@dataclass(frozen=True)
class GeneratorSpec:
    """A named generator, its parameters, the output length and the seed.

    For ``binomial_cascade`` the length must be a power of two; ``params``
    holds ``p`` and optionally ``shuffle``.
    """

    kind: GeneratorKind
    params: dict[str, Any] = field(default_factory=dict)
    n: int = 100_000
    seed: Seed = 0

    def __post_init__(self) -> None:
        if self.kind not in KINDS:
            raise InvalidArgumentError(f"Unknown generator kind '{self.kind}'; available: {list(KINDS)}")
        _check_length(self.n)
        if self.kind == "binomial_cascade" and self.n & (self.n - 1):
            raise InvalidArgumentError(f"Cascade length must be a power of two, got {self.n}")


def _param(spec: GeneratorSpec, name: str) -> float:
    try:
        return float(spec.params[name])
    except KeyError:
        raise InvalidArgumentError(f"Generator '{spec.kind}' needs parameter '{name}'") from None


def generate(spec: GeneratorSpec) -> np.ndarray:
    """Dispatch a GeneratorSpec to its generator."""
    match spec.kind:
        case "poisson":
            return gen_poisson_durations(_param(spec, "rate"), spec.n, spec.seed)
        case "weibull_iid":
            return gen_weibull_iid(_param(spec, "alpha"), _param(spec, "beta"), spec.n, spec.seed)
        case "qexp_iid":
            return gen_qexp_iid(_param(spec, "mu"), _param(spec, "q"), spec.n, spec.seed)
        case "fgn":
            return gen_fgn(_param(spec, "H"), spec.n, spec.seed)
        case "longmem_weibull":
            return gen_longmem_weibull(
                _param(spec, "alpha"), _param(spec, "beta"), _param(spec, "H"), spec.n, spec.seed
            )
        case "binomial_cascade":
            levels = spec.n.bit_length() - 1
            shuffle = bool(spec.params.get("shuffle", False))
            return gen_binomial_cascade(_param(spec, "p"), levels, spec.seed, shuffle)
    raise InvalidArgumentError(f"Unknown generator kind '{spec.kind}'")


def intraday_modulation(
    shape: Literal["inverse_u", "u"] = "inverse_u", amplitude: float = 0.5, minutes_per_day: int = 240
) -> Callable[[np.ndarray], np.ndarray]:
    """Multiplicative minute-of-day factor m(j) for gen_event_stream.

    "inverse_u" peaks at midday, "u" at the open and the close; ``amplitude``
    is the peak excess over 1.
    """
    if amplitude < 0:
        raise InvalidArgumentError("amplitude must be non-negative")
    if shape not in ("inverse_u", "u"):
        raise InvalidArgumentError(f"Unknown modulation shape '{shape}'")

    def modulation(minutes: np.ndarray) -> np.ndarray:
        bump = np.sin(np.pi * (np.asarray(minutes, dtype=float) - 0.5) / minutes_per_day)
        return 1.0 + amplitude * (bump if shape == "inverse_u" else 1.0 - bump)

    return modulation

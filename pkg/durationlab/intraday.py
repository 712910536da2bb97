"""Minute-of-day duration profiles and multiplicative deseasonalization."""

from dataclasses import dataclass, field
from pathlib import Path
from typing import Literal

import numpy as np
import pandas as pd
from numpy.polynomial import Polynomial

from .errors import InvalidArgumentError, MissingProfileError
from .series import AdjustedSeries, DurationSeries

DayAveraging = Literal["days_with_data", "all_days"]
MINUTES_PER_DAY = 240


@dataclass(frozen=True)
class IntradayConfig:
    """Settings for the intraday profile.

    Attributes:
        degree: Polynomial degree for the smooth profile fit.
        averaging: "days_with_data" averages minute means over the days that
            have the minute; "all_days" divides their sum by the number of
            trading days.
        minutes_per_day: Trading minutes in one calendar day.
    """

    degree: int = 6
    averaging: DayAveraging = "days_with_data"
    minutes_per_day: int = MINUTES_PER_DAY


DEFAULT_INTRADAY_CONFIG = IntradayConfig()


@dataclass(frozen=True, eq=False)
class ProfileFit:
    polynomial: Polynomial
    coefficients: np.ndarray
    fitted: np.ndarray
    residuals: np.ndarray


@dataclass(frozen=True, eq=False)
class IntradayProfile:
    """Cross-day mean duration per trading minute.

    ``means[j - 1]`` is the profile at minute j; undefined minutes hold NaN.
    ``day_counts`` counts the days contributing to each minute.
    """

    means: np.ndarray
    day_counts: np.ndarray
    n_days: int
    fit: ProfileFit | None = field(default=None)

    @property
    def minutes(self) -> np.ndarray:
        return np.arange(1, self.means.size + 1)

    @property
    def defined(self) -> np.ndarray:
        return np.isfinite(self.means)

    def value(self, minute: int) -> float:
        return float(self.means[minute - 1])

    def variation(self) -> float:
        """Coefficient of variation across defined minutes."""
        values = self.means[self.defined]
        return float(values.std(ddof=1) / values.mean())

    def with_fit(self, fit: "ProfileFit") -> "IntradayProfile":
        return IntradayProfile(means=self.means, day_counts=self.day_counts, n_days=self.n_days, fit=fit)

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(
            {
                "minute": self.minutes,
                "mean_duration": self.means,
                "n_days": self.day_counts,
                "poly_fit": self.fit.fitted if self.fit is not None else np.full(self.means.size, np.nan),
            }
        )


def intraday_mean_profile(
    ds: DurationSeries | AdjustedSeries,
    n_days: int | None = None,
    config: IntradayConfig = DEFAULT_INTRADAY_CONFIG,
) -> IntradayProfile:
    """Two-stage minute profile: mean per (day, minute), then across days.

    Each duration belongs to the minute of its closing event. Minutes that no
    day covers, or whose mean is not positive, are undefined.

    Raises:
        InvalidArgumentError: A minute tag outside the trading day, or no
            minute defined at all.
    """
    minutes = np.asarray(ds.minutes, dtype=np.int64)
    n_minutes = config.minutes_per_day
    if minutes.size and (minutes.min() < 1 or minutes.max() > n_minutes):
        raise InvalidArgumentError(f"Minute tags must lie in 1..{n_minutes}")

    frame = pd.DataFrame({"date": ds.dates, "minute": minutes, "tau": np.asarray(ds.durations, dtype=float)})
    per_day = frame.groupby(["date", "minute"], sort=True)["tau"].mean()
    by_minute = per_day.groupby(level="minute")
    day_counts = by_minute.size().reindex(range(1, n_minutes + 1), fill_value=0)

    if n_days is None:
        n_days = int(frame["date"].nunique())
    if config.averaging == "all_days":
        if n_days <= 0:
            raise InvalidArgumentError("n_days must be positive")
        means = by_minute.sum() / n_days
    else:
        means = by_minute.mean()
    means = means.reindex(range(1, n_minutes + 1)).to_numpy(dtype=float)
    means[~(means > 0)] = np.nan

    if not np.isfinite(means).any():
        raise InvalidArgumentError("Every minute of the profile is undefined")
    return IntradayProfile(means=means, day_counts=day_counts.to_numpy(dtype=np.int64), n_days=n_days)


def adjust_durations(ds: DurationSeries | AdjustedSeries, profile: IntradayProfile) -> AdjustedSeries:
    """Divide every duration by the profile value of its minute.

    Raises:
        MissingProfileError: A minute in the series has no profile value.
    """
    minutes = np.asarray(ds.minutes, dtype=np.int64)
    if minutes.size and (minutes.min() < 1 or minutes.max() > profile.means.size):
        bad = minutes[(minutes < 1) | (minutes > profile.means.size)][0]
        raise MissingProfileError(int(bad))
    scale = profile.means[minutes - 1]
    missing = ~np.isfinite(scale)
    if missing.any():
        raise MissingProfileError(int(minutes[np.argmax(missing)]))

    values = np.asarray(ds.durations, dtype=float) / scale
    if isinstance(ds, DurationSeries):
        return ds.with_values(values)
    return AdjustedSeries(
        values=values,
        dates=ds.dates,
        minutes=ds.minutes,
        sessions=ds.sessions,
        symbol=ds.symbol,
        direction_class=ds.direction_class,
    )


def fit_profile_polynomial(profile: IntradayProfile, degree: int = 6) -> ProfileFit:
    """Least-squares polynomial in the minute index over defined minutes.

    ``coefficients`` are in increasing powers of the raw minute index;
    ``fitted`` is evaluated at every minute of the day.

    Raises:
        InvalidArgumentError: Fewer than degree + 1 defined minutes.
        numpy.linalg.LinAlgError: Rank-deficient design.
    """
    if degree < 0:
        raise InvalidArgumentError("degree must be non-negative")
    x = profile.minutes[profile.defined].astype(float)
    y = profile.means[profile.defined]
    if x.size < degree + 1:
        raise InvalidArgumentError(f"Degree {degree} needs at least {degree + 1} defined minutes, got {x.size}")

    poly, (_, rank, _, _) = Polynomial.fit(x, y, degree, full=True)
    if rank < degree + 1:
        raise np.linalg.LinAlgError(f"Rank-deficient profile design (rank {rank} < {degree + 1})")

    return ProfileFit(
        polynomial=poly,
        coefficients=poly.convert().coef,
        fitted=poly(profile.minutes.astype(float)),
        residuals=y - poly(x),
    )


def write_profile(profile: IntradayProfile, path: Path) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    profile.to_frame().to_csv(path, index=False, float_format="%.10g", lineterminator="\n")

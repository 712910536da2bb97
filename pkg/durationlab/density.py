"""Log-binned empirical densities, fit residuals and scaling-collapse metrics."""

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import DegenerateSeriesError, InfiniteResidualError, InvalidArgumentError

DEFAULT_BINS_PER_DECADE = 20
MIN_DENSITY_SAMPLES = 100


@dataclass(frozen=True, eq=False)
class DensityEstimate:
    """Histogram density on log-spaced bins.

    Attributes:
        edges: Bin edges, length n_bins + 1.
        centers: Geometric bin centers.
        density: Probability per unit tau (count / (n * width)).
        counts: Samples per bin.
        n_samples: Sample size used for normalization.
    """

    edges: np.ndarray
    centers: np.ndarray
    density: np.ndarray
    counts: np.ndarray
    n_samples: int

    @property
    def widths(self) -> np.ndarray:
        return np.diff(self.edges)

    @property
    def nonempty(self) -> np.ndarray:
        return self.counts > 0

    @property
    def empty_bins(self) -> np.ndarray:
        return np.flatnonzero(self.counts == 0)

    def integral(self) -> float:
        return float(np.sum(self.density * self.widths))

    def trimmed(self) -> tuple[np.ndarray, np.ndarray]:
        """(centers, density) over non-empty bins."""
        mask = self.nonempty
        return self.centers[mask], self.density[mask]

    def rescaled(self, sigma: float) -> "DensityEstimate":
        """Apply tau -> tau/sigma, P -> sigma P."""
        return DensityEstimate(
            edges=self.edges / sigma,
            centers=self.centers / sigma,
            density=self.density * sigma,
            counts=self.counts,
            n_samples=self.n_samples,
        )


def _check_samples(samples: np.ndarray, minimum: int) -> np.ndarray:
    samples = np.asarray(samples, dtype=float).ravel()
    if samples.size < minimum:
        raise InvalidArgumentError(f"Need at least {minimum} samples, got {samples.size}")
    if np.any(~np.isfinite(samples)) or np.any(samples <= 0):
        raise InvalidArgumentError("Density samples must be finite and strictly positive")
    return samples


def log_edges(lo: float, hi: float, bins_per_decade: int = DEFAULT_BINS_PER_DECADE) -> np.ndarray:
    if bins_per_decade <= 0:
        raise InvalidArgumentError("bins_per_decade must be positive")
    if not (0 < lo < hi):
        raise DegenerateSeriesError(f"Cannot bin the range [{lo}, {hi}]")
    n_bins = max(1, math.ceil(bins_per_decade * math.log10(hi / lo) - 1e-9))
    edges = np.logspace(math.log10(lo), math.log10(hi), n_bins + 1)
    edges[0], edges[-1] = lo, hi
    return edges


def empirical_density(
    samples: np.ndarray,
    bins_per_decade: int = DEFAULT_BINS_PER_DECADE,
    edges: np.ndarray | None = None,
    min_samples: int = MIN_DENSITY_SAMPLES,
) -> DensityEstimate:
    """Log-binned probability density of positive samples.

    Without ``edges`` the bins span [min sample, max sample] and the density
    integrates to 1. With explicit edges, samples outside them are dropped but
    still count toward n.

    Raises:
        InvalidArgumentError: Too few samples or a non-positive sample.
        DegenerateSeriesError: All samples equal (a single degenerate bin).
    """
    samples = _check_samples(samples, min_samples)
    if edges is None:
        lo, hi = float(samples.min()), float(samples.max())
        if lo == hi:
            raise DegenerateSeriesError("All samples are equal; density is a single degenerate bin")
        edges = log_edges(lo, hi, bins_per_decade)
    edges = np.asarray(edges, dtype=float)
    if edges.ndim != 1 or edges.size < 2 or np.any(np.diff(edges) <= 0):
        raise InvalidArgumentError("edges must be strictly increasing")

    counts, _ = np.histogram(samples, bins=edges)
    density = counts / (samples.size * np.diff(edges))
    return DensityEstimate(
        edges=edges,
        centers=np.sqrt(edges[:-1] * edges[1:]),
        density=density,
        counts=counts,
        n_samples=int(samples.size),
    )


def common_edges(samples: Sequence[np.ndarray], bins_per_decade: int = DEFAULT_BINS_PER_DECADE) -> np.ndarray:
    """Shared log-spaced grid covering every member's positive support."""
    if not samples:
        raise InvalidArgumentError("common_edges needs at least one sample")
    arrays = [np.asarray(s, dtype=float) for s in samples]
    positives = [a[a > 0] for a in arrays]
    if any(p.size == 0 for p in positives):
        raise InvalidArgumentError("Every member needs positive samples")
    lo = min(float(p.min()) for p in positives)
    hi = max(float(p.max()) for p in positives)
    return log_edges(lo, hi, bins_per_decade)


def bulk_fraction(samples: np.ndarray, lo: float, hi: float) -> float:
    """Share of the sample inside [lo, hi]."""
    samples = np.asarray(samples, dtype=float)
    if samples.size == 0:
        raise InvalidArgumentError("bulk_fraction of an empty sample")
    return float(np.mean((samples >= lo) & (samples <= hi)))


def residual_rms(density: DensityEstimate, model: Callable[[np.ndarray], np.ndarray]) -> float:
    """Root-mean-square of log10(empirical) - log10(model) over non-empty bins.

    Raises:
        InvalidArgumentError: No non-empty bin.
        InfiniteResidualError: The model is zero (or not finite) at a non-empty bin.
    """
    centers, values = density.trimmed()
    if centers.size == 0:
        raise InvalidArgumentError("residual_rms needs at least one non-empty bin")
    predicted = np.asarray(model(centers), dtype=float)
    bad = ~(np.isfinite(predicted) & (predicted > 0))
    if np.any(bad):
        raise InfiniteResidualError(float(centers[np.argmax(bad)]))
    residuals = np.log10(values) - np.log10(predicted)
    return float(np.sqrt(np.mean(residuals**2)))


def collapse_metric(densities: Sequence[DensityEstimate], min_count: int = 50) -> float:
    """Mean over shared bins of the cross-member std of log10 density.

    A bin is shared when every member has at least ``min_count`` samples in
    it. Smaller is a better collapse; identical densities give 0.

    Raises:
        InvalidArgumentError: Fewer than two densities, mismatched grids, or no
            overlapping support.
    """
    if len(densities) < 2:
        raise InvalidArgumentError("collapse_metric needs at least two densities")
    edges = densities[0].edges
    for d in densities[1:]:
        if d.edges.shape != edges.shape or not np.allclose(d.edges, edges, rtol=1e-12, atol=0):
            raise InvalidArgumentError("Densities must be re-binned to one shared grid")

    counts = np.vstack([d.counts for d in densities])
    shared = np.all(counts >= max(min_count, 1), axis=0)
    if not shared.any():
        raise InvalidArgumentError("Densities have no overlapping support")

    logs = np.log10(np.vstack([d.density[shared] for d in densities]))
    return float(np.mean(np.std(logs, axis=0)))

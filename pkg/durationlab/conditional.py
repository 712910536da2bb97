"""Octile-conditioned successor statistics of pooled rescaled durations."""

import warnings
from dataclasses import dataclass

import numpy as np

from .density import DEFAULT_BINS_PER_DECADE, DensityEstimate, common_edges, empirical_density
from .errors import DegeneratePartitionWarning, EmptyConditionError, InvalidArgumentError
from .series import EnsembleSeries
from .synthetic import make_rng

N_GROUPS = 8


@dataclass(frozen=True, eq=False)
class OctilePartition:
    """Eight equal-count value ranges of a pooled sample.

    Attributes:
        lower: Smallest value in each group.
        upper: Largest value in each group.
        counts: Members per group; sizes differ by at most one.
        labels: Group index (0-based) of every ensemble value.
    """

    lower: np.ndarray
    upper: np.ndarray
    counts: np.ndarray
    labels: np.ndarray

    @property
    def n_groups(self) -> int:
        return int(self.counts.size)

    @property
    def degenerate(self) -> bool:
        """True when two groups share a boundary value (ties across a cut)."""
        return bool(np.any(np.diff(self.upper) <= 0) or np.any(self.upper[:-1] >= self.lower[1:]))

    def group_values(self, values: np.ndarray, i: int) -> np.ndarray:
        return values[self.labels == i - 1]


@dataclass(frozen=True, eq=False)
class ConditionalCurve:
    """Conditional successor means against the mean of each predecessor group.

    ``g0`` holds the mean of group Q_i, ``mean`` the mean successor value,
    ``stderr`` its standard error and ``counts`` the number of successor pairs.
    """

    g0: np.ndarray
    mean: np.ndarray
    stderr: np.ndarray
    counts: np.ndarray

    def pooled_mean(self) -> float:
        return float(np.sum(self.mean * self.counts) / np.sum(self.counts))

    def to_rows(self) -> list[dict[str, float | int]]:
        return [
            {"i": i + 1, "g0_mean": float(g), "cond_mean": float(m), "stderr": float(e), "n": int(c)}
            for i, (g, m, e, c) in enumerate(zip(self.g0, self.mean, self.stderr, self.counts))
        ]


def partition_octiles(ensemble: EnsembleSeries | np.ndarray) -> OctilePartition:
    """Sort the pooled sample and cut it into eight groups of equal size.

    Equal values keep their pooled order (stable sort), so a run of ties
    crossing a cut is split between neighboring groups and sizes stay within
    one of each other. Boundary ties are not pushed into the lower group:
    with centisecond durations tie runs are long, and moving them would break
    the equal-size groups the conditional densities are compared on.

    Raises:
        InvalidArgumentError: Fewer than 8 values.

    Warns:
        DegeneratePartitionWarning: Neighboring groups share a boundary value.
    """
    values = ensemble.values if isinstance(ensemble, EnsembleSeries) else np.asarray(ensemble, dtype=float)
    n = values.size
    if n < N_GROUPS:
        raise InvalidArgumentError(f"Octile partition needs at least {N_GROUPS} values, got {n}")

    order = np.argsort(values, kind="stable")
    ranks = np.empty(n, dtype=np.int64)
    ranks[order] = np.arange(n)
    labels = ranks * N_GROUPS // n

    counts = np.bincount(labels, minlength=N_GROUPS)
    lower = np.array([values[labels == i].min() for i in range(N_GROUPS)])
    upper = np.array([values[labels == i].max() for i in range(N_GROUPS)])
    partition = OctilePartition(lower=lower, upper=upper, counts=counts, labels=labels)

    if partition.degenerate:
        warnings.warn(
            f"Octile boundaries are not distinct: upper bounds {upper.tolist()}",
            DegeneratePartitionWarning,
            stacklevel=2,
        )
    return partition


def _successor_pairs(ensemble: EnsembleSeries) -> tuple[np.ndarray, np.ndarray]:
    """Indices (prev, next) of consecutive values inside one session of one symbol."""
    same = ensemble.segments[1:] == ensemble.segments[:-1]
    prev = np.flatnonzero(same)
    return prev, prev + 1


def _successors(ensemble: EnsembleSeries, partition: OctilePartition, i: int) -> np.ndarray:
    if not 1 <= i <= partition.n_groups:
        raise InvalidArgumentError(f"Group index must be in 1..{partition.n_groups}, got {i}")
    prev, nxt = _successor_pairs(ensemble)
    successors = ensemble.values[nxt[partition.labels[prev] == i - 1]]
    if successors.size == 0:
        raise EmptyConditionError(f"Group Q{i} has no successors")
    return successors


def conditional_density(
    ensemble: EnsembleSeries,
    i: int,
    edges: np.ndarray | None = None,
    bins_per_decade: int = DEFAULT_BINS_PER_DECADE,
    partition: OctilePartition | None = None,
) -> DensityEstimate:
    """Density of g(t) given that g(t-1) belongs to group Q_i (1-based).

    Zero successors are left out, as for the unconditional fits. Without
    ``edges`` the grid spans the positive support of the whole ensemble, so
    the eight densities are directly comparable.

    Raises:
        EmptyConditionError: Group i has no positive successor.
    """
    partition = partition or partition_octiles(ensemble)
    successors = _successors(ensemble, partition, i)
    positive = successors[successors > 0]
    if positive.size == 0:
        raise EmptyConditionError(f"Group Q{i} has no positive successors")
    if edges is None:
        edges = common_edges([ensemble.values], bins_per_decade)
    return empirical_density(positive, edges=edges, min_samples=1)


def conditional_mean_curve(ensemble: EnsembleSeries, partition: OctilePartition | None = None) -> ConditionalCurve:
    """Mean successor value per predecessor octile.

    Raises:
        EmptyConditionError: Some group has no successors.
    """
    partition = partition or partition_octiles(ensemble)
    g0 = np.empty(partition.n_groups)
    mean = np.empty_like(g0)
    stderr = np.empty_like(g0)
    counts = np.empty(partition.n_groups, dtype=np.int64)

    for k in range(partition.n_groups):
        successors = _successors(ensemble, partition, k + 1)
        g0[k] = partition.group_values(ensemble.values, k + 1).mean()
        mean[k] = successors.mean()
        counts[k] = successors.size
        stderr[k] = successors.std(ddof=1) / np.sqrt(successors.size) if successors.size > 1 else 0.0

    return ConditionalCurve(g0=g0, mean=mean, stderr=stderr, counts=counts)


def curve_slope(curve: ConditionalCurve) -> tuple[float, float]:
    """Weighted least-squares slope of the conditional means against g0, with its standard error.

    Weights are inverse standard errors, so the slope error follows from the
    stated uncertainties rather than the scatter.

    Raises:
        InvalidArgumentError: A point has a zero standard error.
    """
    if np.any(curve.stderr <= 0):
        raise InvalidArgumentError("Every curve point needs a positive standard error")
    coef, cov = np.polyfit(curve.g0, curve.mean, 1, w=1.0 / curve.stderr, cov="unscaled")
    return float(coef[0]), float(np.sqrt(cov[0, 0]))


def shuffle_within_symbols(ensemble: EnsembleSeries, seed: int = 0) -> EnsembleSeries:
    """Permute values inside each symbol, keeping symbol and segment tags in place."""
    rng = make_rng(seed)
    values = ensemble.values.copy()
    for symbol in sorted(set(ensemble.symbols.tolist())):
        idx = np.flatnonzero(ensemble.symbols == symbol)
        values[idx] = values[rng.permutation(idx)]
    return EnsembleSeries(values=values, symbols=ensemble.symbols, segments=ensemble.segments)

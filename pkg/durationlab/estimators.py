"""Weibull and q-exponential estimators: maximum likelihood and log-density least squares."""

import math
from dataclasses import dataclass, field
from typing import Any, Literal

import numpy as np
from scipy.special import logsumexp, softmax

from .console import Console
from .criterion import DEFAULT_FIT_CONFIG, FitConfig, log_density_residuals, negative_log_likelihood
from .density import DensityEstimate, empirical_density, residual_rms
from .errors import ConvergenceError, InvalidArgumentError
from .families import Family, get_family
from .families.qexp import QExpParams, qexp_pdf
from .families.weibull import WeibullParams, weibull_pdf
from .utils.executor import RunOutcome, gauss_newton, minimize_lbfgs

Estimator = Literal["mle", "nlse"]
FAMILIES = ("weibull", "qexp")
ESTIMATORS: tuple[Estimator, ...] = ("mle", "nlse")

console = Console("FIT")

__all__ = [
    "FitResult",
    "QExpParams",
    "WeibullParams",
    "compare_models",
    "fit",
    "fit_qexp_mle",
    "fit_qexp_nlse",
    "fit_weibull_mle",
    "fit_weibull_nlse",
    "qexp_pdf",
    "weibull_pdf",
]


@dataclass(frozen=True)
class FitResult:
    """One family fitted by one estimator.

    Attributes:
        family: "weibull" or "qexp".
        estimator: "mle" or "nlse".
        params: WeibullParams or QExpParams.
        chi: r.m.s. of log10-density residuals over non-empty bins.
        n: Sample size (NLSE: samples behind the density).
        iterations: Iterations used by the winning start.
        grad_norm: Final gradient norm (profile-equation residual for Weibull MLE).
        converged: Whether the winning start met its tolerance.
        objective: Final mean negative log-likelihood (MLE) or residual sum of squares (NLSE).
        starts: Per-start outcome summaries.
    """

    family: str
    estimator: str
    params: Any
    chi: float
    n: int
    iterations: int
    grad_norm: float
    converged: bool
    objective: float
    starts: list[dict[str, Any]] = field(default_factory=list)

    def to_row(self) -> dict[str, Any]:
        return {
            "family": self.family,
            "estimator": self.estimator,
            **self.params.as_dict(),
            "chi": self.chi,
            "n": self.n,
            "iterations": self.iterations,
            "grad_norm": self.grad_norm,
            "converged": self.converged,
        }


def _fit_samples(samples: np.ndarray, config: FitConfig, allow_zero: bool) -> np.ndarray:
    samples = np.asarray(samples, dtype=float).ravel()
    if samples.size < config.min_samples:
        raise InvalidArgumentError(f"Need at least {config.min_samples} samples, got {samples.size}")
    if np.any(~np.isfinite(samples)):
        raise InvalidArgumentError("Samples must be finite")
    if allow_zero and np.any(samples < 0):
        raise InvalidArgumentError("Samples must be non-negative")
    if not allow_zero and np.any(samples <= 0):
        raise InvalidArgumentError("Samples must be strictly positive")
    return samples


def _weibull_profile(beta: float, ln_y: np.ndarray) -> float:
    """Profile score in beta for log-samples centered at zero; increasing in beta."""
    weights = softmax(beta * ln_y)
    return float(np.dot(weights, ln_y)) - 1.0 / beta


def fit_weibull_mle(samples: np.ndarray, config: FitConfig = DEFAULT_FIT_CONFIG) -> FitResult:
    """Maximum-likelihood Weibull fit via the one-dimensional profile equation.

    The samples are divided by their geometric mean first, which makes the
    estimate exactly scale-equivariant. beta solves the monotone profile
    equation by bisection on a verified bracket; alpha follows in closed form.

    Raises:
        InvalidArgumentError: Fewer than ``min_samples`` or a non-positive sample.
        ConvergenceError: No sign change found, or bisection hit the iteration cap.
    """
    samples = _fit_samples(samples, config, allow_zero=False)
    ln_x = np.log(samples)
    ln_g = float(ln_x.mean())
    ln_y = ln_x - ln_g
    if np.ptp(ln_y) == 0:
        raise ConvergenceError("All samples equal; Weibull shape is unbounded", {"n": samples.size})

    lo, hi = 1.0, 1.0
    f_lo = f_hi = _weibull_profile(1.0, ln_y)
    expansions = 0
    while f_lo > 0 and expansions < 60:
        lo /= 2.0
        f_lo = _weibull_profile(lo, ln_y)
        expansions += 1
    while f_hi < 0 and expansions < 120:
        hi *= 2.0
        f_hi = _weibull_profile(hi, ln_y)
        expansions += 1
    if not (f_lo <= 0 <= f_hi):
        raise ConvergenceError(
            "Weibull profile equation shows no sign change",
            {"bracket": (lo, hi), "values": (f_lo, f_hi), "expansions": expansions},
        )

    iterations = 0
    converged = False
    while iterations < config.max_iter:
        iterations += 1
        mid = 0.5 * (lo + hi)
        if _weibull_profile(mid, ln_y) < 0:
            lo = mid
        else:
            hi = mid
        if hi - lo < config.tol * max(1.0, lo):
            converged = True
            break
    if not converged:
        raise ConvergenceError(
            "Weibull profile bisection did not converge",
            {"iterations": iterations, "bracket": (lo, hi)},
        )

    beta = 0.5 * (lo + hi)
    ln_alpha_y = (logsumexp(beta * ln_y) - math.log(ln_y.size)) / beta
    params = WeibullParams(alpha=math.exp(ln_g + ln_alpha_y), beta=beta)

    density = empirical_density(samples, config.bins_per_decade, min_samples=1)
    family = get_family("weibull")
    nll = float(-np.mean(np.log(weibull_pdf(samples, params))))
    return FitResult(
        family="weibull",
        estimator="mle",
        params=params,
        chi=residual_rms(density, family.density(params)),
        n=int(samples.size),
        iterations=iterations,
        grad_norm=abs(_weibull_profile(beta, ln_y)),
        converged=True,
        objective=nll,
    )


def _summarize_start(start: np.ndarray, outcome: RunOutcome | None, error: str | None = None) -> dict[str, Any]:
    entry: dict[str, Any] = {"start": start.tolist()}
    if outcome is None:
        entry["error"] = error
    else:
        entry.update(
            theta=outcome.theta.tolist(),
            objective=outcome.loss,
            iterations=outcome.iterations,
            converged=outcome.converged,
            reason=outcome.reason,
        )
    return entry


def _best_outcome(runs: list[tuple[np.ndarray, RunOutcome | None]], what: str, log: list[dict[str, Any]]) -> RunOutcome:
    finite = [o for _, o in runs if o is not None and math.isfinite(o.loss)]
    if not finite:
        raise ConvergenceError(f"{what}: every start failed", {"starts": log})
    return min(finite, key=lambda o: o.loss)


def fit_qexp_mle(samples: np.ndarray, config: FitConfig = DEFAULT_FIT_CONFIG) -> FitResult:
    """Maximum-likelihood q-exponential fit by multi-start L-BFGS.

    Works on theta = (ln mu, ln(q - 1)), which keeps mu > 0 and q > 1.
    Zero samples are allowed (the density is finite at 0).

    Raises:
        InvalidArgumentError: Too few samples or a negative sample.
        ConvergenceError: Every start diverged, or the best start stalled with a
            large gradient.
    """
    samples = _fit_samples(samples, config, allow_zero=True)
    family = get_family("qexp")
    criterion = negative_log_likelihood(family, samples)

    runs: list[tuple[np.ndarray, RunOutcome | None]] = []
    log: list[dict[str, Any]] = []
    for start in family.initial_guesses(samples, np.ones_like(samples), config.n_perturbed):
        try:
            outcome = minimize_lbfgs(criterion, start, config.max_iter, config.tol, config.grad_tol)
            runs.append((start, outcome))
            log.append(_summarize_start(start, outcome))
        except ValueError as e:
            runs.append((start, None))
            log.append(_summarize_start(start, None, str(e)))
            console.debug(f"q-exponential MLE start {start} failed: {e}")

    best = _best_outcome(runs, "q-exponential MLE", log)
    if not best.converged and best.grad_norm > 1e-4:
        raise ConvergenceError(
            "q-exponential MLE did not converge",
            {"iterations": best.iterations, "grad_norm": best.grad_norm, "starts": log},
        )

    params = family.to_params(best.theta)
    positive = samples[samples > 0]
    density = empirical_density(positive, config.bins_per_decade, min_samples=1)
    return FitResult(
        family="qexp",
        estimator="mle",
        params=params,
        chi=residual_rms(density, family.density(params)),
        n=int(samples.size),
        iterations=best.iterations,
        grad_norm=best.grad_norm,
        converged=best.converged,
        objective=best.loss,
        starts=log,
    )


def _fit_nlse(family: Family, density: DensityEstimate, config: FitConfig) -> FitResult:
    centers, values = density.trimmed()
    if centers.size < config.min_bins:
        raise InvalidArgumentError(f"NLSE needs at least {config.min_bins} non-empty bins, got {centers.size}")

    residuals = log_density_residuals(family, centers, np.log10(values))
    weights = density.counts[density.nonempty].astype(float)

    runs: list[tuple[np.ndarray, RunOutcome | None]] = []
    log: list[dict[str, Any]] = []
    for start in family.initial_guesses(centers, weights, config.n_perturbed):
        try:
            outcome = gauss_newton(
                residuals,
                start,
                config.max_iter,
                tol=config.tol,
                damping=config.damping,
                damping_factor=config.damping_factor,
            )
            runs.append((start, outcome))
            log.append(_summarize_start(start, outcome))
        except (ValueError, RuntimeError) as e:
            runs.append((start, None))
            log.append(_summarize_start(start, None, str(e)))
            console.debug(f"{family.name} NLSE start {start} failed: {e}")

    best = _best_outcome(runs, f"{family.name} NLSE", log)
    params = family.to_params(best.theta)
    return FitResult(
        family=family.name,
        estimator="nlse",
        params=params,
        chi=residual_rms(density, family.density(params)),
        n=int(density.counts.sum()),
        iterations=best.iterations,
        grad_norm=best.grad_norm,
        converged=best.converged,
        objective=best.loss,
        starts=log,
    )


def fit_weibull_nlse(density: DensityEstimate, config: FitConfig = DEFAULT_FIT_CONFIG) -> FitResult:
    """Least-squares Weibull fit in log10-density space over non-empty bins."""
    return _fit_nlse(get_family("weibull"), density, config)


def fit_qexp_nlse(density: DensityEstimate, config: FitConfig = DEFAULT_FIT_CONFIG) -> FitResult:
    """Least-squares q-exponential fit in log10-density space over non-empty bins."""
    return _fit_nlse(get_family("qexp"), density, config)


def fit(samples: np.ndarray, family: str, estimator: str, config: FitConfig = DEFAULT_FIT_CONFIG) -> FitResult:
    """Fit one family with one estimator to raw samples; zero samples are dropped first."""
    get_family(family)
    samples = np.asarray(samples, dtype=float)
    positive = samples[samples > 0]
    if estimator == "mle":
        return fit_weibull_mle(positive, config) if family == "weibull" else fit_qexp_mle(positive, config)
    if estimator == "nlse":
        density = empirical_density(positive, config.bins_per_decade)
        return fit_weibull_nlse(density, config) if family == "weibull" else fit_qexp_nlse(density, config)
    raise InvalidArgumentError(f"Unknown estimator '{estimator}'")


def compare_models(samples: np.ndarray, config: FitConfig = DEFAULT_FIT_CONFIG) -> dict[str, dict[str, Any]]:
    """Fit both families by both estimators and name the smaller-chi family per estimator."""
    out: dict[str, dict[str, Any]] = {}
    for estimator in ESTIMATORS:
        fits = {name: fit(samples, name, estimator, config) for name in FAMILIES}
        out[estimator] = {
            "fits": fits,
            "better": min(fits, key=lambda name: fits[name].chi),
        }
    return out

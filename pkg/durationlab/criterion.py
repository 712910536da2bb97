import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
import torch

from .families import Family

LN10 = math.log(10.0)


@dataclass(frozen=True)
class FitConfig:
    """Settings shared by the MLE and NLSE estimators.

    Attributes:
        bins_per_decade: Log-spaced bins per factor of ten for densities.
        tol: Stop when the largest parameter change falls below this.
        max_iter: Iteration cap per start.
        grad_tol: Gradient-norm stop for quasi-Newton ascent.
        n_perturbed: Perturbed starts added to the base start.
        damping: Initial Levenberg-Marquardt damping.
        damping_factor: Damping multiplier on a rejected step.
        min_samples: Smallest sample accepted by the likelihood fits.
        min_bins: Smallest number of non-empty bins accepted by NLSE.
    """

    bins_per_decade: int = 20
    tol: float = 1e-8
    max_iter: int = 200
    grad_tol: float = 1e-10
    n_perturbed: int = 4
    damping: float = 1e-3
    damping_factor: float = 10.0
    min_samples: int = 100
    min_bins: int = 10


DEFAULT_FIT_CONFIG = FitConfig()


def negative_log_likelihood(family: Family, samples: np.ndarray) -> Callable[[torch.Tensor], torch.Tensor]:
    """Mean negative log-likelihood of ``samples`` as a function of theta."""
    tau = torch.as_tensor(samples, dtype=torch.float64)

    def criterion(theta: torch.Tensor) -> torch.Tensor:
        return -torch.mean(family.log_pdf(theta, tau))

    return criterion


def log_density_residuals(
    family: Family, centers: np.ndarray, log10_density: np.ndarray
) -> Callable[[torch.Tensor], torch.Tensor]:
    """Residuals log10(model) - log10(empirical) at bin centers, unweighted."""
    tau = torch.as_tensor(centers, dtype=torch.float64)
    target = torch.as_tensor(log10_density, dtype=torch.float64)

    def residuals(theta: torch.Tensor) -> torch.Tensor:
        return family.log_pdf(theta, tau) / LN10 - target

    return residuals

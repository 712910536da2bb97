import math
from dataclasses import dataclass

import numpy as np
import torch

from ..errors import ParameterError
from .guard import support

FAMILY_NAME = "weibull"
PARAM_NAMES = ("alpha", "beta")
EULER_GAMMA = 0.5772156649015329


@dataclass(frozen=True)
class WeibullParams:
    """Scale alpha (units of tau) and shape beta (dimensionless)."""

    alpha: float
    beta: float

    def __post_init__(self) -> None:
        if not (self.alpha > 0 and self.beta > 0):
            raise ParameterError(f"Weibull needs alpha > 0 and beta > 0, got {self}")

    def as_dict(self) -> dict[str, float]:
        return {"alpha": self.alpha, "beta": self.beta}

    def mean(self) -> float:
        return self.alpha * math.gamma(1.0 + 1.0 / self.beta)


@support(strict=True)
def weibull_pdf(tau: np.ndarray, params: WeibullParams) -> np.ndarray:
    """Weibull density beta alpha^-beta tau^(beta-1) exp[-(tau/alpha)^beta]."""
    z = tau / params.alpha
    return params.beta / params.alpha * z ** (params.beta - 1.0) * np.exp(-(z**params.beta))


def log_pdf(theta: torch.Tensor, tau: torch.Tensor) -> torch.Tensor:
    """Natural-log density with theta = (ln alpha, ln beta)."""
    ln_alpha, ln_beta = theta[0], theta[1]
    beta = torch.exp(ln_beta)
    ln_z = torch.log(tau) - ln_alpha
    return ln_beta - ln_alpha + (beta - 1.0) * ln_z - torch.exp(beta * ln_z)


def to_params(theta: np.ndarray) -> WeibullParams:
    return WeibullParams(alpha=float(np.exp(theta[0])), beta=float(np.exp(theta[1])))


def from_params(params: WeibullParams) -> np.ndarray:
    return np.array([math.log(params.alpha), math.log(params.beta)])


def initial_guesses(tau: np.ndarray, weights: np.ndarray, n_perturbed: int) -> list[np.ndarray]:
    """Log-moment start: var(ln tau) = pi^2 / (6 beta^2), plus perturbed copies."""
    w = weights / weights.sum()
    ln_tau = np.log(tau)
    m = float(np.sum(w * ln_tau))
    v = float(np.sum(w * (ln_tau - m) ** 2))
    beta0 = math.pi / math.sqrt(6.0 * v) if v > 0 else 1.0
    alpha0 = math.exp(m + EULER_GAMMA / beta0)
    base = from_params(WeibullParams(alpha0, beta0))
    offsets = [(0.0, 0.0), (-0.7, 0.0), (0.7, 0.0), (0.0, -0.4), (0.0, 0.4), (-0.7, 0.4), (0.7, -0.4)]
    return [base + np.array(o) for o in offsets[: n_perturbed + 1]]

import math
from dataclasses import dataclass

import numpy as np
import torch

from ..errors import ParameterError
from .guard import support

FAMILY_NAME = "qexp"
PARAM_NAMES = ("mu", "q")


@dataclass(frozen=True)
class QExpParams:
    """Scale mu and Tsallis index q > 1."""

    mu: float
    q: float

    def __post_init__(self) -> None:
        if not (self.mu > 0 and self.q > 1):
            raise ParameterError(f"q-exponential needs mu > 0 and q > 1, got {self}")

    def as_dict(self) -> dict[str, float]:
        return {"mu": self.mu, "q": self.q}


def qexp_density(tau: np.ndarray, mu: float, q: float) -> np.ndarray:
    """Unchecked q-exponential formula for any q != 1 inside its support."""
    base = np.log1p((q - 1.0) * np.asarray(tau, dtype=float) / mu)
    return np.exp(-(q / (q - 1.0)) * base) / mu


@support(strict=False)
def qexp_pdf(tau: np.ndarray, params: QExpParams) -> np.ndarray:
    """q-exponential density (1/mu)[1 + (1-q)(-tau/mu)]^(q/(1-q)).

    The exponent is q/(1-q), not the more common 1/(1-q).
    """
    return qexp_density(tau, params.mu, params.q)


def log_pdf(theta: torch.Tensor, tau: torch.Tensor) -> torch.Tensor:
    """Natural-log density with theta = (ln mu, ln(q - 1))."""
    ln_mu, ln_qm1 = theta[0], theta[1]
    qm1 = torch.exp(ln_qm1)
    return -ln_mu - ((1.0 + qm1) / qm1) * torch.log1p(qm1 * tau / torch.exp(ln_mu))


def to_params(theta: np.ndarray) -> QExpParams:
    return QExpParams(mu=float(np.exp(theta[0])), q=1.0 + float(np.exp(theta[1])))


def from_params(params: QExpParams) -> np.ndarray:
    return np.array([math.log(params.mu), math.log(params.q - 1.0)])


def initial_guesses(tau: np.ndarray, weights: np.ndarray, n_perturbed: int) -> list[np.ndarray]:
    """Start at (mu = sample mean, q = 1.5) plus perturbed copies."""
    mean = float(np.sum(weights * tau) / weights.sum())
    starts = [(mean, 1.5), (0.5 * mean, 1.3), (0.5 * mean, 1.8), (2.0 * mean, 1.3), (2.0 * mean, 1.8), (mean, 1.1)]
    return [from_params(QExpParams(mu, q)) for mu, q in starts[: n_perturbed + 1]]

from typing import Callable

import torch
from torch import nn


class ParamVector(nn.Module):
    """A free parameter vector evaluated against an objective.

    Wraps unconstrained distribution parameters (theta) as a learnable
    parameter so torch optimizers can drive them.
    """

    def __init__(self, func: Callable[[torch.Tensor], torch.Tensor], start: torch.Tensor) -> None:
        """Initialize the parameter model.

        Args:
            func: Objective mapping theta to a scalar (minimized).
            start: Initial theta.
        """
        super().__init__()
        self.func = func
        self.theta: torch.Tensor = nn.Parameter(
            start.to(dtype=torch.float64, copy=True),
            requires_grad=True,
        )

    def forward(self) -> torch.Tensor:
        """Evaluate the objective at the current theta."""
        return self.func(self.theta)

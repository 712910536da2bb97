from dataclasses import dataclass
from typing import Callable

import numpy as np
import torch

from ..console import Console
from .model import ParamVector

console = Console("EXECUTOR")


@dataclass(frozen=True)
class RunOutcome:
    """Result of one optimizer run from one start.

    Attributes:
        theta: Final unconstrained parameters.
        loss: Final objective value.
        iterations: Steps taken.
        grad_norm: Euclidean norm of the final gradient.
        converged: Whether a stopping tolerance was met before the cap.
        trajectory: Array [iterations + 1, dim] of visited theta.
        reason: Why the run stopped.
    """

    theta: np.ndarray
    loss: float
    iterations: int
    grad_norm: float
    converged: bool
    trajectory: np.ndarray
    reason: str = ""


def execute_steps(
    model: ParamVector,
    optimizer: torch.optim.Optimizer,
    num_iters: int,
    tol: float,
    grad_tol: float,
) -> tuple[torch.Tensor, int, bool]:
    """Run closure-based optimizer steps and record the trajectory.

    Args:
        model: The parameter model to optimize.
        optimizer: Optimizer needing a closure (L-BFGS).
        num_iters: Maximum number of steps.
        tol: Stop when the largest parameter change falls below this.
        grad_tol: Stop when the gradient norm falls below this.

    Returns:
        (trajectory [steps + 1, dim], steps taken, converged flag).
    """
    cords = [model.theta.detach().clone()]

    def closure():
        optimizer.zero_grad()

        loss = model()
        loss.backward()

        return loss

    converged = False
    steps = 0
    for i in range(1, num_iters + 1):
        optimizer.step(closure)
        steps = i
        cords.append(model.theta.detach().clone())

        change = torch.max(torch.abs(cords[-1] - cords[-2])).item()
        grad = model.theta.grad
        grad_norm = torch.linalg.vector_norm(grad).item() if grad is not None else float("inf")
        if change < tol or grad_norm < grad_tol:
            converged = True
            break

    return torch.stack(cords), steps, converged


def minimize_lbfgs(
    criterion: Callable[[torch.Tensor], torch.Tensor],
    start: np.ndarray,
    num_iters: int,
    tol: float = 1e-8,
    grad_tol: float = 1e-10,
) -> RunOutcome:
    """Quasi-Newton minimization of a smooth scalar criterion from one start.

    Raises:
        ValueError: If the optimizer produces NaN or Inf values.
    """
    model = ParamVector(criterion, torch.as_tensor(start, dtype=torch.float64))
    optimizer = torch.optim.LBFGS(
        model.parameters(),
        lr=1.0,
        max_iter=1,
        history_size=20,
        tolerance_grad=grad_tol,
        tolerance_change=tol * 1e-4,
        line_search_fn="strong_wolfe",
    )

    steps, iterations, converged = execute_steps(model, optimizer, num_iters, tol, grad_tol)

    if not torch.isfinite(steps).all():
        raise ValueError("Optimizer generated NaN or Inf values.")

    model.zero_grad()
    loss = model()
    loss.backward()
    grad = model.theta.grad
    return RunOutcome(
        theta=model.theta.detach().numpy().copy(),
        loss=float(loss.item()),
        iterations=iterations,
        grad_norm=float(torch.linalg.vector_norm(grad).item()) if grad is not None else float("nan"),
        converged=converged,
        trajectory=steps.numpy(),
        reason="tolerance met" if converged else "iteration cap reached",
    )


def gauss_newton(
    residuals: Callable[[torch.Tensor], torch.Tensor],
    start: np.ndarray,
    num_iters: int,
    tol: float = 1e-8,
    damping: float = 1e-3,
    damping_factor: float = 10.0,
    max_damping: float = 1e12,
) -> RunOutcome:
    """Damped Gauss-Newton (Levenberg-Marquardt) on a residual vector.

    The Jacobian comes from autograd. A step is accepted only when it lowers
    the sum of squares; otherwise damping grows by ``damping_factor``. When
    damping passes ``max_damping`` without an accepted step the run stops as
    stalled and is not reported as converged.

    Raises:
        ValueError: If the residuals are not finite at the start.
    """
    theta = torch.as_tensor(start, dtype=torch.float64).clone()
    jacobian = torch.func.jacrev(residuals)

    r = residuals(theta)
    if not torch.isfinite(r).all():
        raise ValueError("Residuals are not finite at the start point.")
    cost = float(torch.sum(r**2).item())
    cords = [theta.clone()]
    lam = damping
    converged = False
    reason = "iteration cap reached"
    iterations = 0
    grad = torch.zeros_like(theta)

    for i in range(1, num_iters + 1):
        iterations = i
        J = jacobian(theta)
        grad = J.T @ r
        if torch.linalg.vector_norm(grad).item() < 1e-14:
            converged, reason = True, "gradient vanished"
            break
        A = J.T @ J
        accepted = False
        first_step = True
        while lam <= max_damping:
            lhs = A + lam * torch.diag(torch.diagonal(A)) + 1e-15 * torch.eye(theta.numel(), dtype=theta.dtype)
            step = torch.linalg.solve(lhs, -grad)
            if first_step and torch.max(torch.abs(step)).item() < tol:
                converged, reason = True, "step below tolerance"
                break
            first_step = False
            trial = theta + step
            r_trial = residuals(trial)
            trial_cost = float(torch.sum(r_trial**2).item()) if torch.isfinite(r_trial).all() else float("inf")
            if trial_cost <= cost:
                theta, r, cost = trial, r_trial, trial_cost
                lam = max(lam / damping_factor, 1e-12)
                accepted = True
                break
            lam *= damping_factor
        if converged:
            break
        if not accepted:
            reason = f"stalled: damping exceeded {max_damping:g} without a decrease"
            console.warn(f"Levenberg-Marquardt {reason} at theta={theta.tolist()}")
            break
        cords.append(theta.clone())

        if torch.max(torch.abs(step)).item() < tol:
            converged, reason = True, "step below tolerance"
            break

    return RunOutcome(
        theta=theta.numpy().copy(),
        loss=cost,
        iterations=iterations,
        grad_norm=float(torch.linalg.vector_norm(grad).item()),
        converged=converged,
        trajectory=torch.stack(cords).numpy(),
        reason=reason,
    )

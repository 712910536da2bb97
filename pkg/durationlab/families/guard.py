from functools import wraps
from typing import Callable

import numpy as np

from ..errors import InvalidArgumentError


def support(strict: bool):
    """Decorator that checks a density's tau argument against its support.

    Args:
        strict: Require tau > 0 (densities diverging at 0); otherwise tau >= 0.

    Returns:
        Decorator that validates tau and evaluates the wrapped density on a float array.
    """

    def decorator(func: Callable):
        @wraps(func)
        def wrapper(tau, params, *args, **kwargs):
            tau_arr = np.asarray(tau, dtype=float)
            bad = tau_arr <= 0 if strict else tau_arr < 0
            if np.any(bad) or np.any(~np.isfinite(tau_arr)):
                bound = "> 0" if strict else ">= 0"
                raise InvalidArgumentError(f"{func.__name__}: tau must be finite and {bound}")
            out = func(tau_arr, params, *args, **kwargs)
            return float(out) if np.ndim(tau) == 0 else out

        return wrapper

    return decorator

"""Finite-difference oracles for analytic gradients"""
from typing import Callable

import numpy as np


def central_difference_gradient(
    f: Callable[[np.ndarray], float],
    x: np.ndarray,
    h: float = 1e-5,
) -> np.ndarray:
    """
    Numerical gradient of scalar f at x by central differences.

    Args:
        f: function of an array shaped like x
        x: evaluation point (not modified)
        h: step size

    Returns:
        Array shaped like x with (f(x + h e_i) - f(x - h e_i)) / 2h per entry
    """
    x = np.array(x, dtype=float, copy=True)
    grad = np.zeros_like(x)
    flat = x.reshape(-1)
    grad_flat = grad.reshape(-1)
    for i in range(flat.size):
        original = flat[i]
        flat[i] = original + h
        f_plus = f(x)
        flat[i] = original - h
        f_minus = f(x)
        flat[i] = original
        grad_flat[i] = (f_plus - f_minus) / (2.0 * h)
    return grad


def relative_error(analytic: np.ndarray, numeric: np.ndarray, floor: float = 1e-8) -> float:
    """Max abs difference scaled by the larger of the two gradients' max magnitudes."""
    analytic = np.asarray(analytic, dtype=float)
    numeric = np.asarray(numeric, dtype=float)
    scale = max(np.max(np.abs(analytic)), np.max(np.abs(numeric)), floor)
    return float(np.max(np.abs(analytic - numeric)) / scale)

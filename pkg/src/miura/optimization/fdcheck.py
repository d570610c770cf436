"""
Central finite differences for checking analytic gradients, Jacobians and
Hessian-vector products of the energy and constraint assemblies.
"""
import logging
from typing import Callable

import numpy as np

logger = logging.getLogger(__name__)

ArrayFn = Callable[[np.ndarray], np.ndarray]


def finite_difference(func: Callable[[np.ndarray], float], x0: np.ndarray, eps: float = 1e-6) -> np.ndarray:
    """
    Centered-difference gradient of a scalar function with respect to every
    entry of x0, with step size eps.
    """
    x0 = np.asarray(x0, dtype=float)
    n = len(x0)
    logger.debug("finite difference gradient over %d dofs (eps=%g)", n, eps)
    grad = np.zeros(n)
    for j in range(n):
        x = np.copy(x0)
        x[j] = x0[j] + eps
        fplus = func(x)
        x[j] = x0[j] - eps
        fminus = func(x)
        grad[j] = (fplus - fminus) / (2 * eps)
    return grad


def directional(func: ArrayFn, x0: np.ndarray, d: np.ndarray, eps: float = 1e-6) -> np.ndarray:
    """(func(x0 + eps d) - func(x0 - eps d)) / (2 eps) for scalar or array valued func."""
    x0 = np.asarray(x0, dtype=float)
    fplus = np.asarray(func(x0 + eps * d), dtype=float)
    fminus = np.asarray(func(x0 - eps * d), dtype=float)
    return (fplus - fminus) / (2 * eps)


def relative_error(analytic: np.ndarray, approx: np.ndarray, floor: float = 1e-8) -> float:
    """max |a - b| / max(|b|_inf, floor)."""
    analytic = np.atleast_1d(np.asarray(analytic, dtype=float))
    approx = np.atleast_1d(np.asarray(approx, dtype=float))
    scale = max(float(np.max(np.abs(approx))) if approx.size else 0.0, floor)
    return float(np.max(np.abs(analytic - approx))) / scale if analytic.size else 0.0


def random_directions(n: int, count: int, rng: np.random.Generator) -> np.ndarray:
    d = rng.standard_normal((count, n))
    return d / np.linalg.norm(d, axis=1, keepdims=True)


def check_gradient(func: Callable[[np.ndarray], float], grad: np.ndarray, x0: np.ndarray,
                   directions: np.ndarray, eps: float = 1e-6) -> float:
    """Largest relative mismatch of grad . d against the centered difference along each direction."""
    grad = np.asarray(grad, dtype=float)
    analytic = directions @ grad
    approx = np.array([directional(func, x0, d, eps) for d in directions])
    err = relative_error(analytic, approx)
    logger.debug("gradient check over %d directions: rel err %.3e", len(directions), err)
    return err


def check_jacobian(func: ArrayFn, J, x0: np.ndarray, directions: np.ndarray, eps: float = 1e-6) -> float:
    """Largest relative mismatch of J d against centered differences of the residual vector."""
    worst = 0.0
    for d in directions:
        worst = max(worst, relative_error(J @ d, directional(func, x0, d, eps)))
    logger.debug("jacobian check over %d directions: rel err %.3e", len(directions), worst)
    return worst


def check_hessian(grad_func: ArrayFn, H, x0: np.ndarray, directions: np.ndarray, eps: float = 1e-6) -> float:
    """Largest relative mismatch of H d against centered differences of the gradient."""
    worst = 0.0
    for d in directions:
        worst = max(worst, relative_error(H @ d, directional(grad_func, x0, d, eps)))
    logger.debug("hessian check over %d directions: rel err %.3e", len(directions), worst)
    return worst

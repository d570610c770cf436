"""Discrete Beltrami coefficients of the planar map V0 -> y on the fixed triangulation.

On a triangle t the map is affine, f|t(x, y) = (a x + b y + r, c x + d y + q),
so the coefficients (a, b, c, d) are linear in the image vertices. With the
rest shape fixed this gives per-triangle weight vectors ``wa``, ``wb`` such
that a = wa . X, b = wb . X, c = wa . Y, d = wb . Y for the image vertex
coordinates X, Y of the triangle.
"""
import logging
import math
from dataclasses import dataclass

import numpy as np
from scipy.sparse import csr_matrix

from ..core.errors import SingularTriangleError
from ..geometry.pattern import QuadPattern, signed_areas
from .assembly import scatter_gradient, scatter_hessian

logger = logging.getLogger(__name__)

REST_AREA_TOL = 1e-14
POLE_ETA = 1e-18

# |mu|^2 = num / den with num = (a-d)^2 + (b+c)^2 and den = (a+d)^2 + (c-b)^2
_NUM_BASIS = np.array([[1.0, 0.0, 0.0, -1.0], [0.0, 1.0, 1.0, 0.0]])
_DEN_BASIS = np.array([[1.0, 0.0, 0.0, 1.0], [0.0, -1.0, 1.0, 0.0]])
_NUM_HESS = 2.0 * _NUM_BASIS.T @ _NUM_BASIS
_DEN_HESS = 2.0 * _DEN_BASIS.T @ _DEN_BASIS


@dataclass(frozen=True)
class BeltramiField:
    mu: np.ndarray
    grad_coeffs: np.ndarray
    mean_abs: float
    max_abs: float
    foldover_count: int


def triangle_affine(rest: np.ndarray, image: np.ndarray) -> tuple[float, float, float, float]:
    """(a, b, c, d) of the affine map taking the rest triangle onto the image."""
    rest = np.asarray(rest, dtype=float)
    image = np.asarray(image, dtype=float)
    E = np.array([rest[1] - rest[0], rest[2] - rest[0]])
    area = 0.5 * float(np.linalg.det(E))
    if abs(area) <= REST_AREA_TOL:
        raise SingularTriangleError(-1, area)
    D = np.array([image[1] - image[0], image[2] - image[0]])
    ab = np.linalg.solve(E, D[:, 0])
    cd = np.linalg.solve(E, D[:, 1])
    return float(ab[0]), float(ab[1]), float(cd[0]), float(cd[1])


def mu_from_coeffs(coeffs: np.ndarray) -> np.ndarray:
    a, b, c, d = (coeffs[..., k] for k in range(4))
    return ((a - d) + 1j * (c + b)) / ((a + d) + 1j * (c - b))


class BeltramiOperator:
    """Precomputed rest-shape data for one pattern."""

    def __init__(self, pattern: QuadPattern) -> None:
        self.tris = pattern.tris
        self.n_vertices = pattern.n_vertices
        areas = signed_areas(pattern.vertices0, self.tris)
        bad = np.flatnonzero(np.abs(areas) <= REST_AREA_TOL)
        if bad.size:
            raise SingularTriangleError(int(bad[0]), float(areas[bad[0]]))
        P = pattern.vertices0[self.tris]
        E = np.stack([P[:, 1] - P[:, 0], P[:, 2] - P[:, 0]], axis=1)
        Minv = np.linalg.inv(E)
        # rows of Minv map (f(beta) - f(alpha), f(gamma) - f(alpha)) to (d/dx, d/dy)
        self.wa = np.stack([-Minv[:, 0, 0] - Minv[:, 0, 1], Minv[:, 0, 0], Minv[:, 0, 1]], axis=1)
        self.wb = np.stack([-Minv[:, 1, 0] - Minv[:, 1, 1], Minv[:, 1, 0], Minv[:, 1, 1]], axis=1)
        # (T, 4, 6) map from local coords (x0, y0, x1, y1, x2, y2) to (a, b, c, d)
        A = np.zeros((len(self.tris), 4, 6))
        A[:, 0, 0::2] = self.wa
        A[:, 1, 0::2] = self.wb
        A[:, 2, 1::2] = self.wa
        A[:, 3, 1::2] = self.wb
        self.A = A

    def coefficients(self, y: np.ndarray) -> np.ndarray:
        z = np.asarray(y, dtype=float).reshape(-1, 2)[self.tris].reshape(len(self.tris), 6)
        return np.einsum("tij,tj->ti", self.A, z)

    def field(self, y: np.ndarray) -> BeltramiField:
        coeffs = self.coefficients(y)
        mu = mu_from_coeffs(coeffs)
        mag = np.abs(mu)
        return BeltramiField(mu=mu, grad_coeffs=coeffs, mean_abs=float(mag.mean()),
                             max_abs=float(mag.max()), foldover_count=int(np.count_nonzero(mag >= 1.0)))

    def energy(self, y: np.ndarray, hessian: bool = True) -> tuple[float, np.ndarray, csr_matrix | None]:
        """E_mu = mean |mu_t|^2 with a pole guard on the denominator."""
        u = self.coefficients(y)
        un = np.einsum("ij,tj->ti", _NUM_BASIS, u)
        ud = np.einsum("ij,tj->ti", _DEN_BASIS, u)
        num = np.sum(un * un, axis=1)
        D = np.sum(ud * ud, axis=1) + POLE_ETA
        F = num / D
        n_t = len(self.tris)
        value = float(F.sum() / n_t)

        g_num = 2.0 * un @ _NUM_BASIS
        g_den = 2.0 * ud @ _DEN_BASIS
        gF = g_num / D[:, None] - (num / D ** 2)[:, None] * g_den
        g_local = np.einsum("tj,tjk->tk", gF, self.A).reshape(n_t, 3, 2)
        grad = scatter_gradient(self.n_vertices, self.tris, g_local) / n_t
        if not hessian:
            return value, grad, None

        D1, D2, D3 = D[:, None, None], (D ** 2)[:, None, None], (D ** 3)[:, None, None]
        cross = np.einsum("ti,tj->tij", g_num, g_den)
        HF = (_NUM_HESS[None] / D1 - (cross + cross.transpose(0, 2, 1)) / D2
              - num[:, None, None] * _DEN_HESS[None] / D2
              + 2.0 * num[:, None, None] * np.einsum("ti,tj->tij", g_den, g_den) / D3)
        H_local = np.einsum("tia,tij,tjb->tab", self.A, HF, self.A).reshape(n_t, 3, 2, 3, 2)
        H = scatter_hessian(self.n_vertices, self.tris, H_local) / n_t
        return value, grad, H


def beltrami(pattern: QuadPattern, y: np.ndarray) -> BeltramiField:
    return BeltramiOperator(pattern).field(y)


def energy_mu(pattern: QuadPattern, y: np.ndarray) -> tuple[float, np.ndarray, csr_matrix]:
    return BeltramiOperator(pattern).energy(y)


def dilation(maxmu: float) -> float:
    """K = (1 + |mu|_inf) / (1 - |mu|_inf); infinite once |mu| reaches 1."""
    if maxmu < 0:
        raise ValueError(f"|mu| cannot be negative: {maxmu}")
    if maxmu >= 1.0:
        return math.inf
    return (1.0 + maxmu) / (1.0 - maxmu)

"""Planarity and developability residuals on the folded pattern.

Residual order is fixed: one planarity row per quad in quad index order, then
one developability row per interior vertex in vertex index order.
"""
import logging
import math
from dataclasses import dataclass

import numpy as np
from scipy.sparse import csr_matrix

from ..core.errors import DegenerateFanError
from ..geometry.pattern import FoldedState, QuadPattern, fold
from ..geometry.surface import OffsetPair
from .assembly import pullback, scatter_hessian, scatter_jacobian

logger = logging.getLogger(__name__)

TWO_PI = 2.0 * math.pi
EDGE_TOL = 1e-14

# u = b - a, v = c - a, w = d - a in terms of the corners (a, b, c, d)
_PLANAR_MAP = np.array([[-1.0, 1.0, 0.0, 0.0], [-1.0, 0.0, 1.0, 0.0], [-1.0, 0.0, 0.0, 1.0]])
# e1 = p1 - v, e2 = p2 - v in terms of (v, p1, p2)
_ANGLE_MAP = np.array([[-1.0, 1.0, 0.0], [-1.0, 0.0, 1.0]])


def skew(v: np.ndarray) -> np.ndarray:
    """[v]x with [v]x w = v x w, batched over leading axes."""
    S = np.zeros(v.shape[:-1] + (3, 3))
    S[..., 0, 1], S[..., 0, 2] = -v[..., 2], v[..., 1]
    S[..., 1, 0], S[..., 1, 2] = v[..., 2], -v[..., 0]
    S[..., 2, 0], S[..., 2, 1] = -v[..., 1], v[..., 0]
    return S


def planarity(q: np.ndarray) -> np.ndarray:
    """[(b - a) x (c - a)] . (d - a) for corners stacked on axis -2."""
    q = np.asarray(q, dtype=float)
    a, b, c, d = q[..., 0, :], q[..., 1, :], q[..., 2, :], q[..., 3, :]
    return np.einsum("...i,...i->...", np.cross(b - a, c - a), d - a)


def planarity_derivatives(q: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Residual, gradient (E, 4, 3) and Hessian (E, 4, 3, 4, 3) with respect to the corners."""
    a = q[:, 0]
    u, v, w = q[:, 1] - a, q[:, 2] - a, q[:, 3] - a
    g = np.einsum("ei,ei->e", u, np.cross(v, w))
    g_uvw = np.stack([np.cross(v, w), np.cross(w, u), np.cross(u, v)], axis=1)
    H_uvw = np.zeros((len(q), 3, 3, 3, 3))
    H_uvw[:, 0, :, 1, :] = -skew(w)
    H_uvw[:, 0, :, 2, :] = skew(v)
    H_uvw[:, 1, :, 2, :] = -skew(u)
    H_uvw[:, 1, :, 0, :] = np.swapaxes(H_uvw[:, 0, :, 1, :], -1, -2)
    H_uvw[:, 2, :, 0, :] = np.swapaxes(H_uvw[:, 0, :, 2, :], -1, -2)
    H_uvw[:, 2, :, 1, :] = np.swapaxes(H_uvw[:, 1, :, 2, :], -1, -2)
    grad = np.einsum("rp,eri->epi", _PLANAR_MAP, g_uvw)
    hess = np.einsum("rp,sq,erisj->epiqj", _PLANAR_MAP, _PLANAR_MAP, H_uvw)
    return g, grad, hess


def corner_angles(e1: np.ndarray, e2: np.ndarray) -> np.ndarray:
    return np.arctan2(np.linalg.norm(np.cross(e1, e2), axis=-1), np.einsum("...i,...i->...", e1, e2))


def developability(v: np.ndarray, fan: np.ndarray) -> float:
    """2 pi minus the corner angles at v; ``fan`` holds one (p1, p2) point pair per incident face."""
    v = np.asarray(v, dtype=float)
    fan = np.asarray(fan, dtype=float)
    if len(fan) < 3:
        raise DegenerateFanError(f"a vertex fan needs at least 3 faces, got {len(fan)}")
    e1, e2 = fan[:, 0] - v, fan[:, 1] - v
    if np.any(np.linalg.norm(e1, axis=-1) <= EDGE_TOL) or np.any(np.linalg.norm(e2, axis=-1) <= EDGE_TOL):
        raise DegenerateFanError("zero-length edge in vertex fan")
    return float(TWO_PI - corner_angles(e1, e2).sum())


def angle_derivatives(e1: np.ndarray, e2: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """theta = atan2(|e1 x e2|, e1 . e2): value, gradient (E, 2, 3), Hessian (E, 2, 3, 2, 3) in (e1, e2)."""
    n = len(e1)
    x = np.cross(e1, e2)
    s = np.linalg.norm(x, axis=-1)
    c = np.einsum("ei,ei->e", e1, e2)
    theta = np.arctan2(s, c)
    xh = np.divide(x, s[:, None], out=np.zeros_like(x), where=s[:, None] > 0)

    # dx/de1 = -[e2]x, dx/de2 = [e1]x
    Dx = np.concatenate([-skew(e2), skew(e1)], axis=-1)
    grad_s = np.einsum("eij,ei->ej", Dx, xh)
    grad_c = np.concatenate([e2, e1], axis=-1)
    P = np.eye(3)[None] - np.einsum("ei,ej->eij", xh, xh)
    s_safe = np.where(s > 0, s, 1.0)
    hess_s = np.einsum("eia,eij,ejb->eab", Dx, P, Dx) / s_safe[:, None, None]
    hess_s[:, 0:3, 3:6] += -skew(xh)
    hess_s[:, 3:6, 0:3] += skew(xh)
    hess_c = np.zeros((n, 6, 6))
    hess_c[:, 0:3, 3:6] = np.eye(3)
    hess_c[:, 3:6, 0:3] = np.eye(3)

    r2 = s * s + c * c
    t_s, t_c = c / r2, -s / r2
    t_ss = -2.0 * s * c / r2 ** 2
    t_cc = -t_ss
    t_sc = (s * s - c * c) / r2 ** 2
    grad = t_s[:, None] * grad_s + t_c[:, None] * grad_c
    outer = lambda p, q: np.einsum("ei,ej->eij", p, q)
    hess = (t_s[:, None, None] * hess_s + t_c[:, None, None] * hess_c
            + t_ss[:, None, None] * outer(grad_s, grad_s) + t_cc[:, None, None] * outer(grad_c, grad_c)
            + t_sc[:, None, None] * (outer(grad_s, grad_c) + outer(grad_c, grad_s)))
    return theta, grad.reshape(n, 2, 3), hess.reshape(n, 2, 3, 2, 3)


@dataclass(frozen=True, eq=False)
class ConstraintSet:
    g: np.ndarray
    J: csr_matrix
    n_planarity: int
    n_vertices: int
    plan_idx: np.ndarray
    plan_hess: np.ndarray | None
    dev_idx: np.ndarray
    dev_hess: np.ndarray | None

    @property
    def g_planarity(self) -> np.ndarray:
        return self.g[: self.n_planarity]

    @property
    def g_develop(self) -> np.ndarray:
        return self.g[self.n_planarity:]

    def hessian_contraction(self, lam: np.ndarray) -> csr_matrix:
        """sum_i lam_i Hess(g_i) with respect to y."""
        if self.plan_hess is None:
            raise ValueError("constraint set was assembled without curvature terms")
        lam = np.asarray(lam, dtype=float)
        H = scatter_hessian(self.n_vertices, self.plan_idx, self.plan_hess, lam[: self.n_planarity])
        if len(self.dev_idx):
            H = H + scatter_hessian(self.n_vertices, self.dev_idx, self.dev_hess, lam[self.n_planarity:])
        return ((H + H.T) * 0.5).tocsr()


def _fan_index(pattern: QuadPattern) -> np.ndarray:
    """(I, 9) local vertex lists: the centre, then (p1, p2) for each of the four corners."""
    nb = pattern.corner_neighbors().reshape(len(pattern.interior), 8)
    return np.concatenate([pattern.interior[:, None], nb], axis=1)


def assemble_folded(pattern: QuadPattern, folded: FoldedState, hessian: bool = True) -> ConstraintSet:
    P = folded.positions
    n_v = pattern.n_vertices
    n_q = pattern.n_quads
    n_c = pattern.n_constraints

    # planarity rows
    qidx = pattern.quads
    gq, grad_q, hess_q = planarity_derivatives(P[qidx])
    gl_q, Hl_q = pullback(folded, qidx, grad_q, hess_q if hessian else None)

    # developability rows
    fidx = _fan_index(pattern)
    n_i = len(fidx)
    nb = pattern.corner_neighbors()
    v = P[pattern.interior][:, None, :]
    e1 = P[nb[..., 0]] - v
    e2 = P[nb[..., 1]] - v
    lengths = np.concatenate([np.linalg.norm(e1, axis=-1), np.linalg.norm(e2, axis=-1)], axis=-1)
    if n_i and np.any(lengths <= EDGE_TOL):
        bad = int(pattern.interior[np.flatnonzero(np.any(lengths <= EDGE_TOL, axis=1))[0]])
        raise DegenerateFanError(f"zero-length edge in the fan of vertex {bad}")
    theta, g_th, h_th = angle_derivatives(e1.reshape(-1, 3), e2.reshape(-1, 3))
    gd = TWO_PI - theta.reshape(n_i, 4).sum(axis=1)

    # residual -theta per corner, over local vertices (v, p1, p2)
    g_corner = -np.einsum("rp,eri->epi", _ANGLE_MAP, g_th).reshape(n_i, 4, 3, 3)
    grad_f = np.zeros((n_i, 9, 3))
    grad_f[:, 0] = g_corner[:, :, 0].sum(axis=1)
    grad_f[:, 1::2] = g_corner[:, :, 1]
    grad_f[:, 2::2] = g_corner[:, :, 2]
    hess_f = None
    if hessian:
        h_corner = -np.einsum("rp,sq,erisj->epiqj", _ANGLE_MAP, _ANGLE_MAP, h_th)
        h_corner = h_corner.reshape(n_i, 4, 3, 3, 3, 3)
        hess_f = np.zeros((n_i, 9, 3, 9, 3))
        for k in range(4):
            slots = (0, 1 + 2 * k, 2 + 2 * k)
            for s, ls in enumerate(slots):
                for t, lt in enumerate(slots):
                    hess_f[:, ls, :, lt, :] += h_corner[:, k, s, :, t, :]
    gl_f, Hl_f = pullback(folded, fidx, grad_f, hess_f)

    g = np.concatenate([gq, gd])
    Jq = scatter_jacobian(n_v, qidx, gl_q, 0, n_c)
    Jf = scatter_jacobian(n_v, fidx, gl_f, n_q, n_c)
    J = (Jq + Jf).tocsr()
    return ConstraintSet(g=g, J=J, n_planarity=n_q, n_vertices=n_v, plan_idx=qidx, plan_hess=Hl_q,
                         dev_idx=fidx, dev_hess=Hl_f)


def assemble(pattern: QuadPattern, pair: OffsetPair, y: np.ndarray) -> ConstraintSet:
    return assemble_folded(pattern, fold(pattern, pair, y))


def residuals(pattern: QuadPattern, positions: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """(g_planarity, g_develop) from raw folded positions, without derivatives."""
    gq = planarity(positions[pattern.quads])
    nb = pattern.corner_neighbors()
    v = positions[pattern.interior][:, None, :]
    th = corner_angles(positions[nb[..., 0]] - v, positions[nb[..., 1]] - v)
    return gq, TWO_PI - th.sum(axis=1)


def normalized_planarity(pattern: QuadPattern, positions: np.ndarray) -> np.ndarray:
    """Planarity residual divided by the cube of each quad's mean edge length."""
    q = positions[pattern.quads]
    mean_edge = np.mean(np.linalg.norm(q - np.roll(q, -1, axis=1), axis=-1), axis=1)
    return planarity(q) / mean_edge ** 3

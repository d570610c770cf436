"""Objective rho1 E_l + rho2 E_mu + rho3 E_c with exact gradient and sparse Hessian in y."""
import logging
from dataclasses import dataclass, field

import numpy as np
from scipy.sparse import csr_matrix, diags

from ..core.errors import DegenerateEdgeError
from ..geometry.pattern import FoldedState, QuadPattern, fold
from ..geometry.surface import OffsetPair, Rect
from .assembly import pullback, scatter_gradient, scatter_hessian
from .qc import BeltramiOperator

logger = logging.getLogger(__name__)

TERMS = ("length", "mu", "center")


def symmetrize(H: csr_matrix) -> csr_matrix:
    return ((H + H.T) * 0.5).tocsr()


@dataclass(frozen=True)
class EnergyValue:
    """Total E with gradient, Hessian and the unweighted term values."""
    value: float
    gradient: np.ndarray
    hessian: csr_matrix | None
    terms: dict = field(default_factory=dict)


@dataclass(eq=False)
class EnergyModel:
    pattern: QuadPattern
    weights: tuple[float, float, float]
    ref_lengths: np.ndarray
    center: tuple[float, float]
    ranges: tuple[float, float]

    def __post_init__(self) -> None:
        if any(w < 0 for w in self.weights):
            raise ValueError(f"energy weights must be non-negative: {self.weights}")
        if np.any(self.ref_lengths <= 0):
            raise DegenerateEdgeError("reference edge lengths must be positive")
        self._beltrami = BeltramiOperator(self.pattern)

    @classmethod
    def from_pattern(cls, pattern: QuadPattern, pair: OffsetPair,
                     weights: tuple[float, float, float] = (1.0, 0.1, 0.01),
                     center: tuple[float, float] | None = None,
                     domain: Rect | None = None) -> "EnergyModel":
        """Reference lengths from the initial folded pattern P0; centre defaults to V0's bounding box centre."""
        P0 = fold(pattern, pair, pattern.vertices0).positions
        a, b = pattern.edges[:, 0], pattern.edges[:, 1]
        ref = np.linalg.norm(P0[a] - P0[b], axis=1)
        if center is None:
            lo, hi = pattern.vertices0.min(axis=0), pattern.vertices0.max(axis=0)
            center = (float(0.5 * (lo[0] + hi[0])), float(0.5 * (lo[1] + hi[1])))
        domain = domain or pair.chart.domain
        return cls(pattern=pattern, weights=tuple(float(w) for w in weights), ref_lengths=ref,
                   center=(float(center[0]), float(center[1])), ranges=domain.extent)

    @property
    def beltrami(self) -> BeltramiOperator:
        return self._beltrami

    def with_weights(self, weights: tuple[float, float, float]) -> "EnergyModel":
        return EnergyModel(self.pattern, tuple(float(w) for w in weights), self.ref_lengths,
                           self.center, self.ranges)

    def total(self, folded: FoldedState, hessian: bool = True) -> EnergyValue:
        y = folded.source_y
        rho = self.weights
        El, gl, Hl = energy_length(self.pattern, folded, self, hessian)
        Em, gm, Hm = self._beltrami.energy(y, hessian)
        Ec, gc, Hc = energy_center(self.pattern, y, self)
        value = rho[0] * El + rho[1] * Em + rho[2] * Ec
        grad = rho[0] * gl + rho[1] * gm + rho[2] * gc
        H = None
        if hessian:
            H = symmetrize(rho[0] * Hl + rho[1] * Hm + rho[2] * Hc)
        return EnergyValue(value=float(value), gradient=grad, hessian=H,
                           terms={"length": El, "mu": Em, "center": Ec})


def edge_lengths(pattern: QuadPattern, positions: np.ndarray) -> np.ndarray:
    d = positions[pattern.edges[:, 0]] - positions[pattern.edges[:, 1]]
    return np.linalg.norm(d, axis=1)


def length_energy_value(pattern: QuadPattern, positions: np.ndarray, ref_lengths: np.ndarray) -> float:
    """E_l from raw positions, without derivatives."""
    L = edge_lengths(pattern, positions)
    return float(np.sum((L - ref_lengths) ** 2 / (2.0 * ref_lengths)) / len(L))


def energy_length(pattern: QuadPattern, folded: FoldedState, model: EnergyModel,
                  hessian: bool = True) -> tuple[float, np.ndarray, csr_matrix | None]:
    """E_l = (1/|L|) sum (L_f - L_0)^2 / (2 L_0) over 3D edge lengths of the folded pattern."""
    P = folded.positions
    idx = pattern.edges
    d = P[idx[:, 0]] - P[idx[:, 1]]
    L = np.linalg.norm(d, axis=1)
    if np.any(L <= 0.0):
        raise DegenerateEdgeError(f"zero-length folded edge {int(np.flatnonzero(L <= 0.0)[0])}")
    L0 = model.ref_lengths
    n_e = len(L)
    value = float(np.sum((L - L0) ** 2 / (2.0 * L0)) / n_e)

    u = d / L[:, None]
    g1 = (L - L0) / L0
    grad_d = g1[:, None] * u
    grad_p = np.stack([grad_d, -grad_d], axis=1)
    hess_p = None
    if hessian:
        uu = np.einsum("ei,ej->eij", u, u)
        Hd = (1.0 / L0)[:, None, None] * uu + (g1 / L)[:, None, None] * (np.eye(3)[None] - uu)
        hess_p = np.empty((n_e, 2, 3, 2, 3))
        hess_p[:, 0, :, 0, :] = Hd
        hess_p[:, 1, :, 1, :] = Hd
        hess_p[:, 0, :, 1, :] = -Hd
        hess_p[:, 1, :, 0, :] = -Hd
    g_local, H_local = pullback(folded, idx, grad_p, hess_p)
    grad = scatter_gradient(pattern.n_vertices, idx, g_local) / n_e
    H = scatter_hessian(pattern.n_vertices, idx, H_local) / n_e if hessian else None
    return value, grad, H


def energy_center(pattern: QuadPattern, y: np.ndarray, model: EnergyModel) -> tuple[float, np.ndarray, csr_matrix]:
    """E_c = (1/|V|) sum ((v_x - c_x)/R_x)^2 + ((v_y - c_y)/R_y)^2 over all deformed vertices."""
    y = np.asarray(y, dtype=float).reshape(-1, 2)
    n_v = len(y)
    scale = 1.0 / np.array(model.ranges) ** 2
    r = y - np.array(model.center)
    value = float(np.sum(r * r * scale) / n_v)
    grad = (2.0 * r * scale / n_v).ravel()
    H = diags(np.tile(2.0 * scale / n_v, n_v)).tocsr()
    return value, grad, H


def total_energy(pattern: QuadPattern, pair: OffsetPair, y: np.ndarray, model: EnergyModel) -> EnergyValue:
    return model.total(fold(pattern, pair, y))

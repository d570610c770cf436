"""Chain-rule pull-back of per-element derivatives from folded positions to y.

Elements (edges, quads, vertex fans) reference ``k`` vertices each. Their
derivatives with respect to the 3D positions are pulled back through the
vertex-local fold Jacobians and scattered into the 2|V| degrees of freedom
``(2 v, 2 v + 1)``. Duplicate indices are summed by the sparse constructors.
"""
import numpy as np
from scipy.sparse import coo_matrix, csr_matrix

from ..geometry.pattern import FoldedState


def pullback(folded: FoldedState, idx: np.ndarray, grad_p: np.ndarray,
             hess_p: np.ndarray | None = None) -> tuple[np.ndarray, np.ndarray | None]:
    """Local gradients (E, k, 2) and Hessians (E, k, 2, k, 2) with respect to y.

    grad_p: (E, k, 3) derivatives with respect to the referenced positions.
    hess_p: (E, k, 3, k, 3) second derivatives, or None to skip the Hessian.
    """
    if not folded.has_derivatives:
        raise ValueError("folded state carries no derivative caches")
    J = folded.jac[idx]
    g = np.einsum("ekc,ekca->eka", grad_p, J)
    if hess_p is None:
        return g, None
    H = np.einsum("ekca,ekcld,eldb->ekalb", J, hess_p, J)
    curv = np.einsum("ekc,ekcab->ekab", grad_p, folded.hess[idx])
    k = idx.shape[1]
    for s in range(k):
        H[:, s, :, s, :] += curv[:, s]
    return g, H


def dof_index(idx: np.ndarray) -> np.ndarray:
    """(E, k) vertex indices -> (E, k, 2) degree-of-freedom indices."""
    return 2 * idx[..., None] + np.arange(2)


def scatter_gradient(n_vertices: int, idx: np.ndarray, g_local: np.ndarray,
                     weights: np.ndarray | None = None) -> np.ndarray:
    vals = g_local if weights is None else g_local * weights[:, None, None]
    out = np.zeros(2 * n_vertices)
    np.add.at(out, dof_index(idx).ravel(), vals.ravel())
    return out


def scatter_hessian(n_vertices: int, idx: np.ndarray, H_local: np.ndarray,
                    weights: np.ndarray | None = None) -> csr_matrix:
    e, k = idx.shape
    dof = dof_index(idx).reshape(e, 2 * k)
    rows = np.repeat(dof, 2 * k, axis=1).ravel()
    cols = np.tile(dof, (1, 2 * k)).ravel()
    vals = H_local.reshape(e, 2 * k, 2 * k)
    if weights is not None:
        vals = vals * weights[:, None, None]
    n = 2 * n_vertices
    return coo_matrix((vals.ravel(), (rows, cols)), shape=(n, n)).tocsr()


def scatter_jacobian(n_vertices: int, idx: np.ndarray, g_local: np.ndarray,
                     row_offset: int = 0, n_rows: int | None = None) -> csr_matrix:
    """One sparse row per element from its local gradient."""
    e, k = idx.shape
    rows = np.repeat(np.arange(e) + row_offset, 2 * k)
    cols = dof_index(idx).reshape(e, 2 * k).ravel()
    shape = (n_rows if n_rows is not None else e + row_offset, 2 * n_vertices)
    return coo_matrix((g_local.reshape(e, 2 * k).ravel(), (rows, cols)), shape=shape).tocsr()

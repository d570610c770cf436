"""Initial Miura parameter pattern, its connectivity, and folded states.

Vertex (i, j) of an m x n pattern (i rows, j columns) has index
``i * (n + 1) + j``. Quad (i, j) has index ``i * n + j`` and corners
``(i, j), (i, j+1), (i+1, j+1), (i+1, j)``, counterclockwise in the parameter
domain. Odd columns form the lower set V_l.
"""
import logging
from dataclasses import dataclass, field, replace

import numpy as np

from ..core.errors import InvalidPatternError
from .surface import OffsetPair, Rect

logger = logging.getLogger(__name__)

DEFAULT_SKEW_RATIO = 0.3


@dataclass(frozen=True, eq=False)
class QuadPattern:
    vertices0: np.ndarray
    quads: np.ndarray
    tris: np.ndarray
    edges: np.ndarray
    interior: np.ndarray
    fan_quads: np.ndarray
    fan_corners: np.ndarray
    lower_mask: np.ndarray
    dims: tuple[int, int]
    skew: float = 0.0
    _edge_faces: np.ndarray = field(default=None, repr=False)

    @property
    def n_vertices(self) -> int:
        return len(self.vertices0)

    @property
    def n_quads(self) -> int:
        return len(self.quads)

    @property
    def n_constraints(self) -> int:
        return len(self.quads) + len(self.interior)

    @classmethod
    def from_grid(cls, dims: tuple[int, int], vertices0: np.ndarray, skew: float = 0.0) -> "QuadPattern":
        """Connectivity of an m x n grid over the given parameter positions."""
        m, n = dims
        if m < 2 or n < 2:
            raise InvalidPatternError(f"pattern dims must be at least (2, 2), got {dims}")
        vertices0 = np.asarray(vertices0, dtype=float)
        if vertices0.shape != ((m + 1) * (n + 1), 2):
            raise InvalidPatternError(f"expected {(m + 1) * (n + 1)} planar vertices, got {vertices0.shape}")
        vid = np.arange((m + 1) * (n + 1)).reshape(m + 1, n + 1)
        quads = np.stack([vid[:-1, :-1], vid[:-1, 1:], vid[1:, 1:], vid[1:, :-1]], axis=-1).reshape(-1, 4)
        horizontal = np.stack([vid[:, :-1], vid[:, 1:]], axis=-1).reshape(-1, 2)
        vertical = np.stack([vid[:-1, :], vid[1:, :]], axis=-1).reshape(-1, 2)
        edges = np.concatenate([horizontal, vertical])

        qid = np.arange(m * n).reshape(m, n)
        ii, jj = np.meshgrid(np.arange(1, m), np.arange(1, n), indexing="ij")
        interior = vid[ii, jj].ravel()
        fan_quads = np.stack([qid[ii, jj], qid[ii, jj - 1], qid[ii - 1, jj - 1], qid[ii - 1, jj]],
                             axis=-1).reshape(-1, 4)
        fan_corners = np.tile(np.arange(4), (len(interior), 1))
        lower_mask = np.tile(np.arange(n + 1) % 2 == 1, m + 1)

        pattern = cls(vertices0=vertices0, quads=quads, tris=np.empty((0, 3), dtype=int), edges=edges,
                      interior=interior, fan_quads=fan_quads, fan_corners=fan_corners,
                      lower_mask=lower_mask, dims=(m, n), skew=float(skew))
        pattern = replace(pattern, tris=triangulate(pattern))
        _check_convex(pattern)
        return pattern

    def corner_neighbors(self) -> np.ndarray:
        """(I, 4, 2) vertex pairs spanning each fan corner: (next, previous) in quad order."""
        q = self.quads[self.fan_quads]
        k = self.fan_corners
        nxt = np.take_along_axis(q, ((k + 1) % 4)[..., None], axis=-1)[..., 0]
        prv = np.take_along_axis(q, ((k + 3) % 4)[..., None], axis=-1)[..., 0]
        return np.stack([nxt, prv], axis=-1)

    def edge_faces(self) -> np.ndarray:
        """(L, 2) quad indices incident to each edge; -1 marks a boundary side.

        Column 0 is the quad that traverses the edge as (edges[l, 0], edges[l, 1])
        in its counterclockwise order, or -1 if no such quad exists.
        """
        if self._edge_faces is not None:
            return self._edge_faces
        index = {(int(a), int(b)): l for l, (a, b) in enumerate(self.edges)}
        faces = np.full((len(self.edges), 2), -1, dtype=int)
        for qi, quad in enumerate(self.quads):
            for k in range(4):
                a, b = int(quad[k]), int(quad[(k + 1) % 4])
                if (a, b) in index:
                    faces[index[(a, b)], 0] = qi
                else:
                    faces[index[(b, a)], 1] = qi
        object.__setattr__(self, "_edge_faces", faces)
        return faces

    def interior_edges(self) -> np.ndarray:
        faces = self.edge_faces()
        return np.flatnonzero((faces[:, 0] >= 0) & (faces[:, 1] >= 0))


def build_initial(dims: tuple[int, int], domain: Rect, skew: float | None = None,
                  fill: float = 0.9) -> QuadPattern:
    """Parallelogram tessellation centred in ``domain``, odd rows shifted by ``skew``.

    Without an explicit skew the shift is 0.3 of the column width and the
    column width shrinks so the whole tessellation spans ``fill`` of the x extent.
    """
    m, n = dims
    if m < 2 or n < 2:
        raise InvalidPatternError(f"pattern dims must be at least (2, 2), got {dims}")
    sx, sy = domain.extent
    if skew is None:
        w = fill * sx / (n + DEFAULT_SKEW_RATIO)
        delta = DEFAULT_SKEW_RATIO * w
    else:
        w = fill * sx / n
        delta = float(skew)
    h = fill * sy / m
    if abs(delta) >= w:
        raise InvalidPatternError(f"skew {delta:.4g} must be smaller than the column width {w:.4g}")
    if n * w + abs(delta) > sx * (1 + 1e-12):
        raise InvalidPatternError(f"skewed pattern ({n * w + abs(delta):.4g}) does not fit the domain width {sx:.4g}")
    cx, cy = domain.center
    x0 = cx - 0.5 * (n * w + delta)
    y0 = cy - 0.5 * m * h
    i, j = np.meshgrid(np.arange(m + 1), np.arange(n + 1), indexing="ij")
    vertices0 = np.stack([x0 + j * w + (i % 2) * delta, y0 + i * h], axis=-1).reshape(-1, 2)
    pattern = QuadPattern.from_grid(dims, vertices0, skew=delta)
    logger.debug("initial pattern %dx%d: w=%.4g h=%.4g skew=%.4g", m, n, w, h, delta)
    return pattern


def triangulate(pattern: QuadPattern) -> np.ndarray:
    """Split each quad along its shorter diagonal; equal diagonals split along (a, c)."""
    V = pattern.vertices0
    a, b, c, d = (pattern.quads[:, k] for k in range(4))
    ac = np.sum((V[c] - V[a]) ** 2, axis=1)
    bd = np.sum((V[d] - V[b]) ** 2, axis=1)
    use_ac = ac <= bd * (1.0 + 1e-12)
    t1 = np.where(use_ac[:, None], np.stack([a, b, c], axis=1), np.stack([a, b, d], axis=1))
    t2 = np.where(use_ac[:, None], np.stack([a, c, d], axis=1), np.stack([b, c, d], axis=1))
    tris = np.empty((2 * len(a), 3), dtype=int)
    tris[0::2], tris[1::2] = t1, t2
    return tris


def signed_areas(points: np.ndarray, tris: np.ndarray) -> np.ndarray:
    p = points[tris]
    e1, e2 = p[:, 1] - p[:, 0], p[:, 2] - p[:, 0]
    return 0.5 * (e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0])


def _check_convex(pattern: QuadPattern) -> None:
    V = pattern.vertices0[pattern.quads]
    for k in range(4):
        e1 = V[:, (k + 1) % 4] - V[:, k]
        e2 = V[:, (k + 2) % 4] - V[:, (k + 1) % 4]
        turn = e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0]
        if np.any(turn <= 0):
            bad = int(np.flatnonzero(turn <= 0)[0])
            raise InvalidPatternError(f"quad {bad} is not strictly convex and counterclockwise")


@dataclass(frozen=True, eq=False)
class FoldedState:
    """P(f): offset positions of every vertex with per-vertex derivative caches.

    ``jac[i]`` is the 3x2 block dP_i/dy_i and ``hess[i]`` the 3x2x2 second
    derivatives; both are None for states built from raw positions.
    """
    positions: np.ndarray
    source_y: np.ndarray | None = None
    jac: np.ndarray | None = None
    hess: np.ndarray | None = None

    @classmethod
    def from_positions(cls, positions: np.ndarray, source_y: np.ndarray | None = None) -> "FoldedState":
        return cls(positions=np.asarray(positions, dtype=float), source_y=source_y)

    @property
    def has_derivatives(self) -> bool:
        return self.jac is not None


def fold(pattern: QuadPattern, pair: OffsetPair, y: np.ndarray) -> FoldedState:
    y = np.asarray(y, dtype=float).reshape(-1, 2)
    sign = np.where(pattern.lower_mask, -1.0, 1.0)
    pos, d1, d2 = pair.offset_jet(y, sign)
    jac = np.swapaxes(d1, 1, 2)
    hess = np.empty((len(y), 3, 2, 2))
    hess[:, :, 0, 0] = d2[:, 0]
    hess[:, :, 0, 1] = d2[:, 1]
    hess[:, :, 1, 0] = d2[:, 1]
    hess[:, :, 1, 1] = d2[:, 2]
    return FoldedState(positions=pos, source_y=y.copy(), jac=jac, hess=hess)

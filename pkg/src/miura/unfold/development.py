"""Isometric development of a folded quad pattern and mountain/valley crease labels.

Quads are laid out breadth-first over the quad adjacency graph. Each quad is
mapped into its best-fit plane, oriented counterclockwise, and moved rigidly so
its shared edge lands on the already placed image of that edge. A vertex keeps
its first placement; later placements only contribute to ``consistency_error``.
"""
import logging
import math
from dataclasses import dataclass
from typing import Literal

import networkx as nx
import numpy as np

from ..core.errors import DegenerateFaceError, InvalidPatternError, PlanarityGateError
from ..geometry.pattern import FoldedState, QuadPattern
from ..optimization.constraints import planarity

logger = logging.getLogger(__name__)

CreaseKind = Literal["mountain", "valley", "flat"]
CREASE_TOL = 1e-6
NORMAL_TOL = 1e-14


@dataclass(frozen=True)
class Crease:
    edge: int
    vertices: tuple[int, int]
    dihedral: float
    kind: CreaseKind


@dataclass(frozen=True, eq=False)
class Development:
    flat_positions: np.ndarray
    consistency_error: float
    crease_types: list[Crease]
    seed: int = 0
    placement_error: float = 0.0
    congruence_error: float = 0.0
    diameter: float = 0.0

    def counts(self) -> dict[str, int]:
        out = {"mountain": 0, "valley": 0, "flat": 0}
        for c in self.crease_types:
            out[c.kind] += 1
        return out


def quad_graph(pattern: QuadPattern) -> nx.Graph:
    """Quads as nodes, one edge per shared interior edge (attribute ``edge``)."""
    G = nx.Graph()
    G.add_nodes_from(range(pattern.n_quads))
    faces = pattern.edge_faces()
    for l in pattern.interior_edges():
        G.add_edge(int(faces[l, 0]), int(faces[l, 1]), edge=int(l))
    return G


def plane_coordinates(corners: np.ndarray) -> np.ndarray:
    """In-plane coordinates of a quad in its best-fit plane, counterclockwise."""
    c = corners - corners.mean(axis=0)
    _, _, vt = np.linalg.svd(c)
    uv = c @ vt[:2].T
    x, y = uv[:, 0], uv[:, 1]
    if np.dot(x, np.roll(y, -1)) - np.dot(np.roll(x, -1), y) < 0:
        uv[:, 1] = -uv[:, 1]
    return uv


def _rotation(angle: float) -> np.ndarray:
    c, s = math.cos(angle), math.sin(angle)
    return np.array([[c, -s], [s, c]])


def _align(local: np.ndarray, lp: int, lq: int, target_p: np.ndarray, target_q: np.ndarray) -> np.ndarray:
    """Rigidly move ``local`` so its edge (lp, lq) matches the target edge in midpoint and direction."""
    src = local[lq] - local[lp]
    dst = target_q - target_p
    R = _rotation(math.atan2(dst[1], dst[0]) - math.atan2(src[1], src[0]))
    moved = local @ R.T
    shift = 0.5 * (target_p + target_q) - 0.5 * (moved[lp] + moved[lq])
    return moved + shift


def _congruence_defect(pattern: QuadPattern, positions: np.ndarray, flat: np.ndarray) -> float:
    q = pattern.quads
    pairs = [(0, 1), (1, 2), (2, 3), (3, 0), (0, 2), (1, 3)]
    worst = 0.0
    for a, b in pairs:
        l3 = np.linalg.norm(positions[q[:, a]] - positions[q[:, b]], axis=1)
        l2 = np.linalg.norm(flat[q[:, a]] - flat[q[:, b]], axis=1)
        worst = max(worst, float(np.max(np.abs(l3 - l2))))
    return worst


def develop(pattern: QuadPattern, folded: FoldedState, gate: float = 1e-6, seed: int = 0) -> Development:
    P = np.asarray(folded.positions, dtype=float)
    g = planarity(P[pattern.quads])
    worst = float(np.max(np.abs(g)))
    if worst > gate:
        raise PlanarityGateError(f"quad {int(np.argmax(np.abs(g)))} planarity {worst:.3e} exceeds the gate {gate:.1e}")
    if not 0 <= seed < pattern.n_quads:
        raise InvalidPatternError(f"seed quad {seed} out of range [0, {pattern.n_quads})")
    G = quad_graph(pattern)
    if not nx.is_connected(G):
        raise InvalidPatternError("quad adjacency graph is disconnected")

    flat = np.full((pattern.n_vertices, 2), np.nan)
    placed = np.zeros(pattern.n_vertices, dtype=bool)
    placement = 0.0

    def place(quad: int, coords: np.ndarray) -> None:
        nonlocal placement
        for k, v in enumerate(pattern.quads[quad]):
            if placed[v]:
                placement = max(placement, float(np.linalg.norm(coords[k] - flat[v])))
            else:
                flat[v] = coords[k]
                placed[v] = True

    place(seed, plane_coordinates(P[pattern.quads[seed]]))
    for parent, child in nx.bfs_edges(G, seed):
        l = G.edges[parent, child]["edge"]
        p, q = (int(v) for v in pattern.edges[l])
        corners = list(pattern.quads[child])
        local = plane_coordinates(P[pattern.quads[child]])
        coords = _align(local, corners.index(p), corners.index(q), flat[p], flat[q])
        place(child, coords)

    congruence = _congruence_defect(pattern, P, flat)
    consistency = max(placement, congruence)
    lo, hi = P.min(axis=0), P.max(axis=0)
    diameter = float(np.linalg.norm(hi - lo))
    creases = classify_creases(pattern, folded)
    logger.info("developed %d quads from seed %d: consistency error %.3e (diameter %.3g)",
                pattern.n_quads, seed, consistency, diameter)
    return Development(flat_positions=flat, consistency_error=consistency, crease_types=creases, seed=seed,
                       placement_error=placement, congruence_error=congruence, diameter=diameter)


def quad_normals(pattern: QuadPattern, positions: np.ndarray) -> np.ndarray:
    """Unit normals (c - a) x (d - b) of every quad."""
    q = positions[pattern.quads]
    n = np.cross(q[:, 2] - q[:, 0], q[:, 3] - q[:, 1])
    norm = np.linalg.norm(n, axis=1)
    scale = np.max(np.linalg.norm(q - q.mean(axis=1, keepdims=True), axis=-1), axis=1) ** 2
    bad = np.flatnonzero(norm <= NORMAL_TOL * np.maximum(scale, 1.0))
    if bad.size:
        raise DegenerateFaceError(f"quad {int(bad[0])} has a degenerate normal")
    return n / norm[:, None]


def classify_creases(pattern: QuadPattern, folded: FoldedState, tol: float = CREASE_TOL) -> list[Crease]:
    """Dihedral angle and mountain/valley label of every interior edge, seen from the +n side."""
    P = np.asarray(folded.positions, dtype=float)
    normals = quad_normals(pattern, P)
    faces = pattern.edge_faces()
    out: list[Crease] = []
    for l in pattern.interior_edges():
        a, b = (int(v) for v in pattern.edges[l])
        n1, n2 = normals[faces[l, 0]], normals[faces[l, 1]]
        e = P[b] - P[a]
        e = e / np.linalg.norm(e)
        x = np.cross(n1, n2)
        bend = math.atan2(math.copysign(float(np.linalg.norm(x)), float(x @ e)), float(n1 @ n2))
        dihedral = math.pi - bend
        if dihedral < math.pi - tol:
            kind: CreaseKind = "mountain"
        elif dihedral > math.pi + tol:
            kind = "valley"
        else:
            kind = "flat"
        out.append(Crease(edge=int(l), vertices=(a, b), dihedral=dihedral, kind=kind))
    return out


def rigid_discrepancy(A: np.ndarray, B: np.ndarray) -> float:
    """max |R A_i + t - B_i| after the best proper rigid 2D alignment of A onto B."""
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float)
    ca, cb = A.mean(axis=0), B.mean(axis=0)
    U, _, Vt = np.linalg.svd((A - ca).T @ (B - cb))
    D = np.diag([1.0, np.sign(np.linalg.det(Vt.T @ U.T))])
    R = Vt.T @ D @ U.T
    return float(np.max(np.linalg.norm((A - ca) @ R.T + cb - B, axis=1)))

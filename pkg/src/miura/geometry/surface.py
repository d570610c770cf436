"""Parametric target surfaces, their normal fields and the epsilon-offset pair.

Every chart works on arrays of parameter points with shape ``(..., 2)`` and
returns partials stacked along a derivative axis:

* ``d1``: ``(..., 2, 3)`` ordered (x, y)
* ``d2``: ``(..., 3, 3)`` ordered (xx, xy, yy)
* ``d3``: ``(..., 4, 3)`` ordered (xxx, xxy, xyy, yyy)

Third partials are only needed for the second derivatives of the unit normal,
which the offset maps inherit.
"""
import logging
import math
from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import ClassVar, Dict, Literal

import numpy as np

from ..core.errors import ConfigError, DomainError, SingularChartError

logger = logging.getLogger(__name__)

Side = Literal["upper", "lower"]
IMMERSION_TOL = 1e-12


@dataclass(frozen=True)
class Rect:
    x0: float
    x1: float
    y0: float
    y1: float

    @property
    def extent(self) -> tuple[float, float]:
        return (self.x1 - self.x0, self.y1 - self.y0)

    @property
    def center(self) -> tuple[float, float]:
        return (0.5 * (self.x0 + self.x1), 0.5 * (self.y0 + self.y1))

    def contains(self, p: np.ndarray, tol: float = 1e-12) -> np.ndarray:
        p = np.asarray(p, dtype=float)
        sx, sy = self.extent
        return ((p[..., 0] >= self.x0 - tol * sx) & (p[..., 0] <= self.x1 + tol * sx)
                & (p[..., 1] >= self.y0 - tol * sy) & (p[..., 1] <= self.y1 + tol * sy))

    def bounds(self, margin: float = 0.0) -> tuple[np.ndarray, np.ndarray]:
        """Lower and upper corners of the rectangle shrunk by margin (a fraction of each side)."""
        sx, sy = self.extent
        return (np.array([self.x0 + margin * sx, self.y0 + margin * sy]),
                np.array([self.x1 - margin * sx, self.y1 - margin * sy]))

    def scaled(self, factor: float) -> "Rect":
        cx, cy = self.center
        hx, hy = 0.5 * factor * self.extent[0], 0.5 * factor * self.extent[1]
        return Rect(cx - hx, cx + hx, cy - hy, cy + hy)

    def grid(self, k: int) -> np.ndarray:
        xs = np.linspace(self.x0, self.x1, k)
        ys = np.linspace(self.y0, self.y1, k)
        X, Y = np.meshgrid(xs, ys, indexing="xy")
        return np.stack([X.ravel(), Y.ravel()], axis=-1)


@dataclass(frozen=True)
class ChartJet:
    position: np.ndarray
    d1: np.ndarray
    d2: np.ndarray
    d3: np.ndarray


def _vec(shape: tuple, *comps) -> np.ndarray:
    return np.stack([np.broadcast_to(np.asarray(c, dtype=float), shape) for c in comps], axis=-1)


def _stack(*vecs: np.ndarray) -> np.ndarray:
    return np.stack(vecs, axis=-2)


class SurfaceChart(ABC):
    """phi: R -> R^3 on an axis-aligned rectangle R."""

    kind: ClassVar[str]
    defaults: ClassVar[Dict[str, float]] = {}

    def __init__(self, domain: Rect | None = None, **params: float) -> None:
        unknown = set(params) - set(self.defaults)
        if unknown:
            raise ConfigError(f"unknown parameters for surface {self.kind!r}: {sorted(unknown)}")
        self.domain = domain or Rect(-1.0, 1.0, -1.0, 1.0)
        self.params = {**self.defaults, **{k: float(v) for k, v in params.items()}}

    def __repr__(self) -> str:
        return f"{type(self).__name__}(domain={self.domain}, params={self.params})"

    @abstractmethod
    def _jet(self, x: np.ndarray, y: np.ndarray) -> ChartJet: ...

    def jet(self, p: np.ndarray) -> ChartJet:
        p = np.asarray(p, dtype=float)
        inside = self.domain.contains(p)
        if not np.all(inside):
            bad = np.asarray(p)[~inside] if p.ndim > 1 else p
            raise DomainError(f"parameter point(s) outside {self.domain}: {np.atleast_2d(bad)[:3].tolist()}")
        return self._jet(p[..., 0], p[..., 1])

    def evaluate(self, p: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        j = self.jet(p)
        return j.position, j.d1, j.d2

    def normal(self, p: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        n, dn, _ = self.normal_jet(p)
        return n, dn

    def normal_jet(self, p: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Unit normal n = (phi_x x phi_y)/|.| with first and second partials."""
        return _normal_from_jet(self.jet(p))


def _normal_from_jet(j: ChartJet) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    px, py = j.d1[..., 0, :], j.d1[..., 1, :]
    pxx, pxy, pyy = j.d2[..., 0, :], j.d2[..., 1, :], j.d2[..., 2, :]
    pxxx, pxxy, pxyy, pyyy = (j.d3[..., k, :] for k in range(4))

    N = np.cross(px, py)
    Nd = [np.cross(pxx, py) + np.cross(px, pxy),
          np.cross(pxy, py) + np.cross(px, pyy)]
    Ndd = {
        (0, 0): np.cross(pxxx, py) + 2.0 * np.cross(pxx, pxy) + np.cross(px, pxxy),
        (0, 1): np.cross(pxxy, py) + np.cross(pxx, pyy) + np.cross(px, pxyy),
        (1, 1): np.cross(pxyy, py) + 2.0 * np.cross(pxy, pyy) + np.cross(px, pyyy),
    }
    m = np.linalg.norm(N, axis=-1)
    if np.any(m < IMMERSION_TOL):
        raise SingularChartError(f"degenerate immersion: |phi_x x phi_y| = {float(np.min(m)):.3e}")
    mm = m[..., None]
    n = N / mm
    md = [np.sum(n * Nd[i], axis=-1)[..., None] for i in range(2)]
    nd = [(Nd[i] - n * md[i]) / mm for i in range(2)]
    ndd = []
    for (i, k) in ((0, 0), (0, 1), (1, 1)):
        m_ik = (np.sum(Nd[i] * Nd[k], axis=-1)[..., None] + np.sum(N * Ndd[(i, k)], axis=-1)[..., None]
                - md[i] * md[k]) / mm
        ndd.append((Ndd[(i, k)] - nd[i] * md[k] - nd[k] * md[i] - n * m_ik) / mm)
    return n, _stack(*nd), _stack(*ndd)


class FlatChart(SurfaceChart):
    kind = "flat"

    def _jet(self, x, y):
        s = np.shape(x)
        z = np.zeros(s)
        return ChartJet(_vec(s, x, y, z), _stack(_vec(s, 1, 0, 0), _vec(s, 0, 1, 0)),
                        np.zeros(s + (3, 3)), np.zeros(s + (4, 3)))


class SaddleChart(SurfaceChart):
    """z = k (x^2 - y^2)."""
    kind = "saddle"
    defaults = {"k": 0.5}

    def _jet(self, x, y):
        k, s = self.params["k"], np.shape(x)
        pos = _vec(s, x, y, k * (x * x - y * y))
        d1 = _stack(_vec(s, 1, 0, 2 * k * x), _vec(s, 0, 1, -2 * k * y))
        d2 = _stack(_vec(s, 0, 0, 2 * k), _vec(s, 0, 0, 0), _vec(s, 0, 0, -2 * k))
        return ChartJet(pos, d1, d2, np.zeros(s + (4, 3)))


class BowlChart(SurfaceChart):
    """z = k (x^2 + y^2)."""
    kind = "bowl"
    defaults = {"k": 0.5}

    def _jet(self, x, y):
        k, s = self.params["k"], np.shape(x)
        pos = _vec(s, x, y, k * (x * x + y * y))
        d1 = _stack(_vec(s, 1, 0, 2 * k * x), _vec(s, 0, 1, 2 * k * y))
        d2 = _stack(_vec(s, 0, 0, 2 * k), _vec(s, 0, 0, 0), _vec(s, 0, 0, 2 * k))
        return ChartJet(pos, d1, d2, np.zeros(s + (4, 3)))


class WaveChart(SurfaceChart):
    """z = A sin(omega x)."""
    kind = "wave"
    defaults = {"A": 0.3, "omega": math.pi}

    def _jet(self, x, y):
        A, w, s = self.params["A"], self.params["omega"], np.shape(x)
        sn, cs = np.sin(w * x), np.cos(w * x)
        zero = _vec(s, 0, 0, 0)
        pos = _vec(s, x, y, A * sn)
        d1 = _stack(_vec(s, 1, 0, A * w * cs), _vec(s, 0, 1, 0))
        d2 = _stack(_vec(s, 0, 0, -A * w * w * sn), zero, zero)
        d3 = _stack(_vec(s, 0, 0, -A * w ** 3 * cs), zero, zero, zero)
        return ChartJet(pos, d1, d2, d3)


class TunnelChart(SurfaceChart):
    """Cylinder patch (x, r sin(alpha y), r cos(alpha y)); the normal points away from the axis."""
    kind = "tunnel"
    defaults = {"r": 1.0, "alpha": math.pi / 3}

    def _jet(self, x, y):
        r, a, s = self.params["r"], self.params["alpha"], np.shape(x)
        sn, cs = np.sin(a * y), np.cos(a * y)
        zero = _vec(s, 0, 0, 0)
        pos = _vec(s, x, r * sn, r * cs)
        d1 = _stack(_vec(s, 1, 0, 0), _vec(s, 0, r * a * cs, -r * a * sn))
        d2 = _stack(zero, zero, _vec(s, 0, -r * a * a * sn, -r * a * a * cs))
        d3 = _stack(zero, zero, zero, _vec(s, 0, -r * a ** 3 * cs, r * a ** 3 * sn))
        return ChartJet(pos, d1, d2, d3)


class HelicoidChart(SurfaceChart):
    """(rho(x) cos t, rho(x) sin t, c t) with rho = rho0 + rho1 x and t = theta_scale y."""
    kind = "helicoid"
    defaults = {"rho0": 1.0, "rho1": 0.4, "theta_scale": math.pi / 2, "c": 0.3}

    def _jet(self, x, y):
        p = self.params
        r0, r1, ts, c = p["rho0"], p["rho1"], p["theta_scale"], p["c"]
        s = np.shape(x)
        t = ts * y
        rho = r0 + r1 * x
        sn, cs = np.sin(t), np.cos(t)
        zero = _vec(s, 0, 0, 0)
        pos = _vec(s, rho * cs, rho * sn, c * t)
        d1 = _stack(_vec(s, r1 * cs, r1 * sn, 0), _vec(s, -rho * ts * sn, rho * ts * cs, c * ts))
        d2 = _stack(zero,
                    _vec(s, -r1 * ts * sn, r1 * ts * cs, 0),
                    _vec(s, -rho * ts ** 2 * cs, -rho * ts ** 2 * sn, 0))
        d3 = _stack(zero, zero,
                    _vec(s, -r1 * ts ** 2 * cs, -r1 * ts ** 2 * sn, 0),
                    _vec(s, rho * ts ** 3 * sn, -rho * ts ** 3 * cs, 0))
        return ChartJet(pos, d1, d2, d3)


def principal_curvature_bound(chart: SurfaceChart, samples: int = 25) -> float:
    """max |kappa| over a sample grid, from the first and second fundamental forms."""
    p = chart.domain.grid(samples)
    j = chart.jet(p)
    n, _, _ = _normal_from_jet(j)
    px, py = j.d1[:, 0], j.d1[:, 1]
    E, F, G = (px * px).sum(-1), (px * py).sum(-1), (py * py).sum(-1)
    L, M, N = (j.d2[:, 0] * n).sum(-1), (j.d2[:, 1] * n).sum(-1), (j.d2[:, 2] * n).sum(-1)
    det = E * G - F * F
    K = (L * N - M * M) / det
    H = (E * N - 2 * F * M + G * L) / (2 * det)
    return float(np.max(np.abs(H) + np.sqrt(np.maximum(H * H - K, 0.0))))


@dataclass(frozen=True)
class OffsetPair:
    """phi^u = phi + eps n and phi^l = phi - eps n around one chart."""

    chart: SurfaceChart
    epsilon: float

    def __post_init__(self) -> None:
        if self.epsilon < 0:
            raise ConfigError(f"epsilon must be non-negative, got {self.epsilon}")
        kmax = principal_curvature_bound(self.chart)
        if self.epsilon > 0 and kmax > 0 and self.epsilon * kmax >= 1.0:
            raise SingularChartError(
                f"epsilon={self.epsilon} reaches the focal distance {1.0 / kmax:.4g} of {self.chart.kind}")
        logger.debug("offset pair %s eps=%g, min focal distance %s", self.chart.kind, self.epsilon,
                     "inf" if kmax == 0 else f"{1.0 / kmax:.4g}")

    @staticmethod
    def sign(side: Side) -> float:
        if side == "upper":
            return 1.0
        if side == "lower":
            return -1.0
        raise ValueError(f"side must be 'upper' or 'lower', got {side!r}")

    def offset_evaluate(self, side: Side, p: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        return self.offset_jet(p, self.sign(side))

    def offset_jet(self, p: np.ndarray, sign: np.ndarray | float) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Offset map with per-point sign (+1 upper, -1 lower) and its partials."""
        j = self.chart.jet(p)
        n, dn, ddn = _normal_from_jet(j)
        se = self.epsilon * np.asarray(sign, dtype=float)
        se3 = np.reshape(se, np.shape(se) + (1,))
        se33 = se3[..., None]
        return j.position + se3 * n, j.d1 + se33 * dn, j.d2 + se33 * ddn

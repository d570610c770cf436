import logging
from abc import ABC, abstractmethod
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, Iterable, Optional, Sequence

import numpy as np
import pandas as pd
import svgwrite
import yaml

from ..core.errors import ArtifactError
from ..geometry.surface import Rect

logger = logging.getLogger(__name__)

FLOAT_FMT = "{:.17g}"
DIMS_TAG = "# miura-dims"
SVG_MARGIN = 0.02
SVG_SIZE = 800.0


@dataclass(frozen=True, eq=False)
class ObjMesh:
    positions: np.ndarray
    quads: np.ndarray
    uv: Optional[np.ndarray] = None
    dims: Optional[tuple[int, int]] = None


class AbstractRepository(ABC):
    @abstractmethod
    def save_mesh(self, path: Path, mesh: ObjMesh) -> Path: ...

    @abstractmethod
    def load_mesh(self, path: Path) -> ObjMesh: ...

    @abstractmethod
    def save_table(self, path: Path, df: pd.DataFrame) -> Path: ...

    @abstractmethod
    def save_manifest(self, path: Path, doc: Dict[str, Any]) -> Path: ...

    @abstractmethod
    def load_manifest(self, path: Path) -> Dict[str, Any]: ...


class FileArtifactRepository(AbstractRepository):
    """OBJ meshes, SVG drawings, CSV tables and YAML manifests under one directory."""

    def __init__(self, root: str | Path) -> None:
        self.root = Path(root)

    def path(self, name: str | Path) -> Path:
        p = Path(name)
        return p if p.is_absolute() else self.root / p

    def _prepare(self, name: str | Path) -> Path:
        p = self.path(name)
        try:
            p.parent.mkdir(parents=True, exist_ok=True)
        except OSError as e:
            raise ArtifactError(f"cannot create {p.parent}: {e}") from e
        return p

    # meshes
    def save_mesh(self, path: str | Path, mesh: ObjMesh) -> Path:
        p = self._prepare(path)
        lines = []
        if mesh.dims is not None:
            lines.append(f"{DIMS_TAG} {mesh.dims[0]} {mesh.dims[1]}")
        lines += ["v " + " ".join(FLOAT_FMT.format(c) for c in v) for v in mesh.positions]
        if mesh.uv is not None:
            lines += ["vt " + " ".join(FLOAT_FMT.format(c) for c in t) for t in mesh.uv]
            lines += ["f " + " ".join(f"{i + 1}/{i + 1}" for i in q) for q in mesh.quads]
        else:
            lines += ["f " + " ".join(str(i + 1) for i in q) for q in mesh.quads]
        try:
            p.write_text("\n".join(lines) + "\n", encoding="utf-8")
        except OSError as e:
            raise ArtifactError(f"cannot write {p}: {e}") from e
        logger.debug("wrote %s (%d vertices, %d faces)", p, len(mesh.positions), len(mesh.quads))
        return p

    def load_mesh(self, path: str | Path) -> ObjMesh:
        p = self.path(path)
        try:
            text = p.read_text(encoding="utf-8")
        except OSError as e:
            raise ArtifactError(f"cannot read {p}: {e}") from e
        verts, uvs, faces, dims = [], [], [], None
        for lineno, line in enumerate(text.splitlines(), start=1):
            parts = line.split()
            if not parts:
                continue
            try:
                if line.startswith(DIMS_TAG):
                    dims = (int(parts[2]), int(parts[3]))
                elif parts[0] == "v":
                    verts.append([float(x) for x in parts[1:4]])
                elif parts[0] == "vt":
                    uvs.append([float(x) for x in parts[1:3]])
                elif parts[0] == "f":
                    faces.append([int(tok.split("/")[0]) - 1 for tok in parts[1:]])
            except (ValueError, IndexError) as e:
                raise ArtifactError(f"{p}:{lineno}: malformed OBJ record {line!r}") from e
        if any(len(f) != 4 for f in faces):
            raise ArtifactError(f"{p}: only quad faces are supported")
        uv = np.array(uvs, dtype=float) if uvs else None
        if uv is not None and len(uv) != len(verts):
            raise ArtifactError(f"{p}: {len(uv)} texture records for {len(verts)} vertices")
        return ObjMesh(positions=np.array(verts, dtype=float), quads=np.array(faces, dtype=int).reshape(-1, 4),
                       uv=uv, dims=dims)

    # tables
    def save_table(self, path: str | Path, df: pd.DataFrame) -> Path:
        p = self._prepare(path)
        try:
            df.to_csv(p, index=False, float_format="%.17g")
        except OSError as e:
            raise ArtifactError(f"cannot write {p}: {e}") from e
        return p

    def load_table(self, path: str | Path) -> pd.DataFrame:
        p = self.path(path)
        try:
            return pd.read_csv(p)
        except (OSError, pd.errors.ParserError) as e:
            raise ArtifactError(f"cannot read {p}: {e}") from e

    # manifests
    def save_manifest(self, path: str | Path, doc: Dict[str, Any]) -> Path:
        p = self._prepare(path)
        try:
            with open(p, "w", encoding="utf-8") as f:
                yaml.safe_dump(doc, f, sort_keys=False, allow_unicode=True)
        except OSError as e:
            raise ArtifactError(f"cannot write {p}: {e}") from e
        return p

    def load_manifest(self, path: str | Path) -> Dict[str, Any]:
        p = self.path(path)
        try:
            with open(p, "r", encoding="utf-8") as f:
                doc = yaml.safe_load(f)
        except OSError as e:
            raise ArtifactError(f"cannot read {p}: {e}") from e
        except yaml.YAMLError as e:
            raise ArtifactError(f"malformed manifest {p}: {e}") from e
        if not isinstance(doc, dict):
            raise ArtifactError(f"manifest {p} must be a mapping")
        return doc

    # drawings
    def save_parameter_svg(self, path: str | Path, quads: np.ndarray, domain: Rect,
                           layers: Sequence[tuple[str, np.ndarray, str]],
                           tris: Optional[np.ndarray] = None, flagged: Optional[np.ndarray] = None) -> Path:
        """Quad outlines of each (id, y, colour) layer over the domain rectangle.

        Triangles of the last layer selected by ``flagged`` are filled red.
        """
        view = _Viewport(domain.x0, domain.y0, domain.x1, domain.y1)
        dwg = view.drawing(self._prepare(path))
        dwg.add(dwg.polygon(points=view.points(np.array([[domain.x0, domain.y0], [domain.x1, domain.y0],
                                                          [domain.x1, domain.y1], [domain.x0, domain.y1]])),
                            stroke="#999", fill="none", stroke_width=0.5))
        if tris is not None and flagged is not None and np.any(flagged):
            y = layers[-1][1]
            g = dwg.g(id="foldover", fill="#d11", stroke="none", fill_opacity=0.8)
            for t in tris[np.asarray(flagged, dtype=bool)]:
                g.add(dwg.polygon(points=view.points(y[t])))
            dwg.add(g)
        for gid, y, colour in layers:
            g = dwg.g(id=gid, stroke=colour, fill="none", stroke_width=0.6)
            for q in quads:
                g.add(dwg.polygon(points=view.points(y[q])))
            dwg.add(g)
        return _save(dwg)

    def save_crease_svg(self, path: str | Path, flat: np.ndarray,
                        creases: Iterable[tuple[tuple[int, int], str]], boundary: np.ndarray) -> Path:
        """Mountain creases solid red, valley creases dashed blue, flat creases and boundary grey."""
        lo, hi = flat.min(axis=0), flat.max(axis=0)
        view = _Viewport(lo[0], lo[1], hi[0], hi[1])
        dwg = view.drawing(self._prepare(path))
        styles = {
            "mountain": dict(stroke="#c0392b", stroke_width=0.8),
            "valley": dict(stroke="#2e5fa8", stroke_width=0.8, stroke_dasharray="4,2"),
            "flat": dict(stroke="#999", stroke_width=0.5),
        }
        groups = {kind: dwg.g(id=kind, **style) for kind, style in styles.items()}
        outline = dwg.g(id="boundary", stroke="#111", stroke_width=0.8)
        for a, b in boundary:
            outline.add(dwg.line(start=view.point(flat[a]), end=view.point(flat[b])))
        for (a, b), kind in creases:
            groups[kind].add(dwg.line(start=view.point(flat[a]), end=view.point(flat[b])))
        dwg.add(outline)
        for g in groups.values():
            dwg.add(g)
        return _save(dwg)


class _Viewport:
    """Maps a model-space box, padded by 2% per side, onto a fixed canvas with y pointing up."""

    def __init__(self, x0: float, y0: float, x1: float, y1: float) -> None:
        w, h = max(x1 - x0, 1e-12), max(y1 - y0, 1e-12)
        self.x0, self.y1 = x0 - SVG_MARGIN * w, y1 + SVG_MARGIN * h
        span = max(w, h) * (1 + 2 * SVG_MARGIN)
        self.scale = SVG_SIZE / span
        self.width = (1 + 2 * SVG_MARGIN) * w * self.scale
        self.height = (1 + 2 * SVG_MARGIN) * h * self.scale

    def point(self, p: np.ndarray) -> tuple[float, float]:
        return (float((p[0] - self.x0) * self.scale), float((self.y1 - p[1]) * self.scale))

    def points(self, pts: np.ndarray) -> list[tuple[float, float]]:
        return [self.point(p) for p in pts]

    def drawing(self, path: Path) -> svgwrite.Drawing:
        dwg = svgwrite.Drawing(str(path), profile="tiny", size=(f"{self.width:.2f}", f"{self.height:.2f}"))
        dwg.attribs["viewBox"] = f"0 0 {self.width:.6f} {self.height:.6f}"
        return dwg


def _save(dwg: svgwrite.Drawing) -> Path:
    try:
        dwg.save()
    except OSError as e:
        raise ArtifactError(f"cannot write {dwg.filename}: {e}") from e
    return Path(dwg.filename)

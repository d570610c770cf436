import xml.etree.ElementTree as ET

import numpy as np
import pandas as pd
import pytest
from numpy.testing import assert_array_equal

from miura.core.errors import ArtifactError
from miura.data.entities import RunManifest
from miura.data.repository import FileArtifactRepository, ObjMesh
from miura.geometry.pattern import build_initial
from miura.geometry.surface import Rect

SVG_NS = "{http://www.w3.org/2000/svg}"


@pytest.fixture
def repo(tmp_path):
    return FileArtifactRepository(tmp_path / "artifacts")


@pytest.fixture
def pattern():
    return build_initial((3, 4), Rect(-1, 1, -1, 1))


def test_mesh_with_planar_coordinates_is_lossless(repo, pattern, rng):
    P = rng.standard_normal((pattern.n_vertices, 3)) / 3.0
    y = pattern.vertices0 + 1e-3 * rng.standard_normal(pattern.vertices0.shape)
    repo.save_mesh("m.obj", ObjMesh(P, pattern.quads, uv=y, dims=pattern.dims))
    mesh = repo.load_mesh("m.obj")
    assert_array_equal(mesh.positions, P)
    assert_array_equal(mesh.uv, y)
    assert_array_equal(mesh.quads, pattern.quads)
    assert mesh.dims == (3, 4)
    text = (repo.root / "m.obj").read_text(encoding="utf-8")
    assert text.startswith("# miura-dims 3 4\nv ")
    assert "f 1/1 2/2 7/7 6/6" in text


def test_mesh_without_planar_coordinates(repo, pattern):
    P = np.column_stack([pattern.vertices0, np.zeros(pattern.n_vertices)])
    repo.save_mesh("plain.obj", ObjMesh(P, pattern.quads))
    mesh = repo.load_mesh("plain.obj")
    assert mesh.uv is None and mesh.dims is None
    assert_array_equal(mesh.quads, pattern.quads)


@pytest.mark.parametrize("body", ["v 0 0 0\nv 1 0 x\n", "v 0 0 0\nv 1 0 0\nv 1 1 0\nf 1 2 3\n",
                                  "v 0 0 0\nvt 0 0\nvt 1 1\nf 1 1 1 1\n"])
def test_malformed_meshes_raise_artifact_error(repo, body):
    repo.root.mkdir(parents=True)
    (repo.root / "bad.obj").write_text(body, encoding="utf-8")
    with pytest.raises(ArtifactError):
        repo.load_mesh("bad.obj")


def test_missing_files_raise_artifact_error(repo):
    with pytest.raises(ArtifactError):
        repo.load_mesh("absent.obj")
    with pytest.raises(ArtifactError):
        repo.load_manifest("absent.yaml")


def test_table_round_trip_keeps_full_precision(repo):
    df = pd.DataFrame({"epsilon": [0.05, 0.1], "mean_mu": [1.0 / 3.0, np.pi * 1e-9], "status": ["a", "b"]})
    repo.save_table("t.csv", df)
    back = repo.load_table("t.csv")
    assert back["mean_mu"].tolist() == df["mean_mu"].tolist()
    assert back["status"].tolist() == ["a", "b"]


def test_manifest_drops_unset_fields_and_round_trips(repo):
    m = RunManifest(config={"alias": "x"}, version="0.1.0", status="converged", artifacts={"metrics": "m.csv"},
                    metrics={"E_l": 0.1 + 0.2}, solver_message="")
    doc = m.to_dict()
    assert "started_at" not in doc and "resources" not in doc
    repo.save_manifest("manifest.yaml", doc)
    back = repo.load_manifest("manifest.yaml")
    assert back == doc
    assert RunManifest.from_dict(back).metrics["E_l"] == 0.1 + 0.2


def test_parameter_drawing_layers_and_foldover(repo, pattern):
    flagged = np.zeros(len(pattern.tris), dtype=bool)
    flagged[3] = True
    p = repo.save_parameter_svg("p.svg", pattern.quads, Rect(-1, 1, -1, 1),
                                [("initial", pattern.vertices0, "#bbb"), ("optimized", pattern.vertices0, "#111")],
                                tris=pattern.tris, flagged=flagged)
    root = ET.parse(p).getroot()
    assert root.tag == f"{SVG_NS}svg"
    ids = {g.get("id"): g for g in root.iter(f"{SVG_NS}g")}
    assert set(ids) == {"initial", "optimized", "foldover"}
    assert len(ids["optimized"]) == pattern.n_quads
    assert len(ids["foldover"]) == 1


def test_crease_drawing_groups(repo, pattern):
    creases = [((5, 6), "mountain"), ((6, 7), "valley"), ((1, 6), "flat")]
    boundary = np.array([[0, 1], [1, 2]])
    p = repo.save_crease_svg("c.svg", pattern.vertices0, creases, boundary)
    root = ET.parse(p).getroot()
    ids = {g.get("id"): g for g in root.iter(f"{SVG_NS}g")}
    assert [len(ids[k]) for k in ("mountain", "valley", "flat", "boundary")] == [1, 1, 1, 2]
    assert ids["valley"].get("stroke-dasharray") == "4,2"

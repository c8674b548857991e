"""Parity tests: the compiled kernels and the numpy fallback must agree
exactly, since either can be selected at import time."""

import numpy as np
import pytest

from heritage3d.meshkit import _kernels_py
from heritage3d.meshkit import kernels
from heritage3d.meshkit.primitives import building_geometry, icosphere_geometry

compiled = pytest.importorskip(
    "heritage3d.meshkit._kernels", reason="compiled kernels not built"
)

BACKENDS = {"cython": compiled, "python": _kernels_py}


def point_sets():
    rng = np.random.default_rng(20260809)
    scattered = np.ascontiguousarray(rng.uniform(-5, 9, size=(4000, 3)))
    with_dups = np.ascontiguousarray(np.vstack([scattered, scattered[::3]]))
    ico_pos, _ = icosphere_geometry(3)
    return {
        "scattered": scattered,
        "with_duplicates": with_dups,
        "icosphere": np.ascontiguousarray(ico_pos.astype(np.float64)),
    }


@pytest.mark.parametrize("name", ["scattered", "with_duplicates", "icosphere"])
@pytest.mark.parametrize("grid", ["weld", "coarse"])
def test_grid_labels_parity(name, grid):
    points = point_sets()[name]
    origin = points.min(axis=0)
    if grid == "weld":
        inv_cell, max_coord = 1e6, kernels.UNBOUNDED
    else:
        extent = float((points.max(axis=0) - origin).max())
        inv_cell, max_coord = 8.0 / extent, 7
    la, ca = compiled.grid_labels(points, *origin, inv_cell, max_coord)
    lb, cb = _kernels_py.grid_labels(points, *origin, inv_cell, max_coord)
    assert ca == cb
    assert np.array_equal(la, lb)


def test_labels_are_first_occurrence_ordered():
    points = np.array(
        [[0.0, 0, 0], [5.0, 0, 0], [0.0, 0, 0], [9.0, 0, 0], [5.0, 0, 0]]
    )
    for impl in BACKENDS.values():
        labels, count = impl.grid_labels(points, 0.0, 0.0, 0.0, 1e6, kernels.UNBOUNDED)
        assert count == 3
        assert labels.tolist() == [0, 1, 0, 2, 1]


def test_duplicate_points_share_labels():
    points = np.zeros((10, 3))
    for impl in BACKENDS.values():
        labels, count = impl.grid_labels(points, 0.0, 0.0, 0.0, 1e6, kernels.UNBOUNDED)
        assert count == 1 and set(labels.tolist()) == {0}


def test_clamping_bounds_cells():
    points = np.array([[0.0, 0, 0], [1.0, 1, 1], [0.5, 0.5, 0.5]])
    for impl in BACKENDS.values():
        labels, count = impl.grid_labels(points, 0.0, 0.0, 0.0, 1.0, 0)
        # max_coord 0 forces every point into cell (0,0,0)
        assert count == 1


@pytest.mark.parametrize("impl_name", list(BACKENDS))
def test_edges_closed_vs_open(impl_name):
    impl = BACKENDS[impl_name]
    _, ico_idx = icosphere_geometry(2)
    tris = ico_idx.reshape(-1, 3).astype(np.int64)
    assert impl.edges_all_shared_twice(np.ascontiguousarray(tris)) is True
    assert impl.edges_all_shared_twice(np.ascontiguousarray(tris[:-1])) is False


def test_edge_parity_on_large_mesh():
    positions, indices = building_geometry(20, 4)
    from heritage3d.meshkit.geometry import weld_labels

    labels, _ = weld_labels(positions.astype(np.float64))
    tris = np.ascontiguousarray(labels[indices.reshape(-1, 3)])
    assert compiled.edges_all_shared_twice(tris) == _kernels_py.edges_all_shared_twice(tris) == True


def test_centroid_parity():
    points = point_sets()["with_duplicates"]
    origin = points.min(axis=0)
    labels, count = compiled.grid_labels(points, *origin, 2.0, kernels.UNBOUNDED)
    a = compiled.label_centroids(points, labels, count)
    b = _kernels_py.label_centroids(points, np.asarray(labels), count)
    assert np.allclose(a, b, rtol=0, atol=1e-12)


def test_centroid_of_exact_cluster():
    points = np.array([[0.0, 0, 0], [2.0, 0, 0], [0.0, 4, 0], [2.0, 4, 0]])
    labels = np.zeros(4, dtype=np.int64)
    for impl in BACKENDS.values():
        centroid = impl.label_centroids(points, labels, 1)
        assert np.allclose(centroid, [[1.0, 2.0, 0.0]])


def test_empty_inputs():
    empty_pts = np.zeros((0, 3))
    empty_tris = np.zeros((0, 3), dtype=np.int64)
    for impl in BACKENDS.values():
        labels, count = impl.grid_labels(empty_pts, 0.0, 0.0, 0.0, 1.0, 10)
        assert len(labels) == 0 and count == 0
        assert impl.edges_all_shared_twice(empty_tris) is True


def test_env_override_selects_python(tmp_path):
    import subprocess
    import sys

    code = (
        "from heritage3d.meshkit import kernels; print(kernels.backend_name())"
    )
    out = subprocess.run(
        [sys.executable, "-c", code],
        env={"HERITAGE3D_PURE_PYTHON": "1", "PATH": "/usr/bin:/bin"},
        capture_output=True,
        text=True,
        cwd=tmp_path,
    )
    assert out.stdout.strip() == "python"

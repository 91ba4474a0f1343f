import numpy as np
import pytest

from tubemesh.geometry import SurfaceMesh, dice, surface_metrics, tube_mesh


def test_identical_meshes():
    mesh = tube_mesh(np.random.default_rng(0).uniform(0.8, 1.5, (16, 6)), dz=0.5)
    assert surface_metrics(mesh, mesh) == (0.0, 0.0)


def test_concentric_cylinders():
    inner = tube_mesh(np.full((64, 10), 1.0), dz=0.5)
    outer = tube_mesh(np.full((64, 10), 1.2), dz=0.5)
    msd, hd = surface_metrics(inner, outer, exclude_ends=True)

    assert msd == pytest.approx(0.2, abs=0.02)
    assert hd == pytest.approx(0.2, abs=0.02)


def test_metrics_are_symmetric():
    rng = np.random.default_rng(4)
    a = tube_mesh(rng.uniform(0.8, 1.5, (16, 6)), dz=0.5)
    b = tube_mesh(rng.uniform(0.8, 1.5, (16, 6)), dz=0.5)

    assert surface_metrics(a, b) == pytest.approx(surface_metrics(b, a))


def test_empty_mesh_rejected():
    mesh = tube_mesh(np.ones((8, 3)), dz=0.5)
    empty = SurfaceMesh(vertices=np.zeros((0, 3)), faces=np.zeros((0, 3), dtype=np.int64))

    with pytest.raises(ValueError, match="non-empty meshes"):
        surface_metrics(mesh, empty)


def test_dice_values():
    a = np.zeros((4, 4), dtype=bool)
    b = np.zeros((4, 4), dtype=bool)
    assert dice(a, b) == 1.0

    a[0, :2] = True
    assert dice(a, b) == 0.0

    b[0, 1:3] = True
    assert dice(a, b) == pytest.approx(0.5)


def test_dice_shape_mismatch():
    with pytest.raises(ValueError, match="mask shapes differ"):
        dice(np.zeros((2, 2)), np.zeros((2, 3)))

import numpy as np
import pytest

from tubemesh.geometry import RadialField, build_mesh_stack, build_meshes, fan_area, tube_mesh


def _random_field(seed, n_theta=16, length=6):
    rng = np.random.default_rng(seed)
    shape = (n_theta, length)
    return RadialField(
        r_l=rng.uniform(0.5, 2.0, shape),
        r_cp=rng.uniform(0, 0.5, shape),
        r_ncp=rng.uniform(0, 0.5, shape),
    )


def test_cylinder_counts():
    mesh = tube_mesh(np.ones((16, 10)), dz=0.5)

    assert len(mesh.vertices) == 160
    assert len(mesh.faces) == 320
    assert mesh.euler_characteristic() == 0


def test_vertices_sit_on_rays():
    radii = np.full((4, 2), 2.0)
    mesh = tube_mesh(radii, dz=0.5)

    np.testing.assert_allclose(mesh.vertices[1], [0.0, 2.0, 0.0], atol=1e-12)
    np.testing.assert_allclose(mesh.vertices[4], [2.0, 0.0, 0.5], atol=1e-12)


def test_no_plaque_outer_equals_lumen():
    r_l = np.full((16, 4), 1.1)
    lumen, outer = build_meshes(RadialField(r_l, np.zeros_like(r_l), np.zeros_like(r_l)))

    np.testing.assert_array_equal(lumen.vertices, outer.vertices)
    np.testing.assert_array_equal(lumen.faces, outer.faces)


@pytest.mark.parametrize("seed", range(50))
def test_tube_topology(seed):
    field = _random_field(seed, n_theta=int(3 + seed % 14), length=int(2 + seed % 7))
    for mesh in build_mesh_stack(field).values():
        counts = mesh.edge_face_counts()
        rings = {0, field.length - 1}
        for (u, v), n in counts.items():
            zu, zv = u // field.n_theta, v // field.n_theta
            on_boundary = zu == zv and zu in rings
            assert n == (1 if on_boundary else 2)
        assert mesh.euler_characteristic() == 0
        degrees = mesh.vertex_degrees().reshape(field.length, field.n_theta)
        if field.length > 2:
            assert np.all(degrees[1:-1] == 6)


def test_outer_wall_never_inside_lumen():
    stack = build_mesh_stack(_random_field(0))
    r = {name: np.hypot(m.vertices[:, 0], m.vertices[:, 1]) for name, m in stack.items()}

    assert np.all(r["lumen_ncp"] >= r["lumen"] - 1e-12)
    assert np.all(r["outer"] >= r["lumen_ncp"] - 1e-12)


def test_frustum_volume():
    length = 11
    radii = np.tile(np.linspace(2.0, 1.0, length), (16, 1))
    mesh = tube_mesh(radii, dz=0.5)
    areas = fan_area(radii)
    a0, a1 = areas[:-1], areas[1:]
    expected = (0.5 / 3 * (a0 + a1 + np.sqrt(a0 * a1))).sum()

    assert mesh.enclosed_volume() == pytest.approx(expected, rel=1e-2)


def test_prism_volume():
    mesh = tube_mesh(np.ones((16, 5)), dz=0.5)
    assert mesh.enclosed_volume() == pytest.approx(8 * np.sin(np.pi / 8) * 2.0, rel=1e-9)


def test_negative_radius_rejected():
    with pytest.raises(ValueError, match="negative radius"):
        tube_mesh(-np.ones((8, 3)), dz=0.5)


def test_single_slice_rejected():
    with pytest.raises(ValueError, match="at least 2 slices"):
        tube_mesh(np.ones((8, 1)), dz=0.5)

import numpy as np
import pytest

from tubemesh.geometry import (
    RadialField,
    cross_section_areas,
    fan_area,
    polygon_deficit,
    shoelace_area,
)


def _field(r_l, r_cp=None, r_ncp=None):
    r_l = np.asarray(r_l, dtype=float)
    return RadialField(
        r_l=r_l,
        r_cp=np.zeros_like(r_l) if r_cp is None else r_cp,
        r_ncp=np.zeros_like(r_l) if r_ncp is None else r_ncp,
    )


def test_unit_lumen_sixteen_rays():
    areas = cross_section_areas(_field(np.ones((16, 4))))

    np.testing.assert_allclose(areas.a_l, 8 * np.sin(np.pi / 8), atol=1e-12)
    assert areas.a_l[0] == pytest.approx(3.0615, abs=1e-4)


@pytest.mark.parametrize("n_theta", [3, 8, 16, 64])
@pytest.mark.parametrize("radius", [0.3, 1.0, 2.5])
def test_constant_radius_formula(n_theta, radius):
    expected = 0.5 * n_theta * radius**2 * np.sin(2 * np.pi / n_theta)
    assert fan_area(np.full(n_theta, radius)) == pytest.approx(expected, abs=1e-12)


def test_zero_plaque():
    areas = cross_section_areas(_field(np.full((16, 3), 1.2)))

    assert not areas.a_cp.any()
    assert not areas.a_ncp.any()


@pytest.mark.parametrize("seed", range(10))
def test_fan_area_matches_shoelace(seed):
    radii = np.random.default_rng(seed).uniform(0.2, 3.0, size=16)
    assert fan_area(radii) == pytest.approx(shoelace_area(radii), abs=1e-12)


@pytest.mark.parametrize("seed", range(10))
def test_decomposition_identity(seed):
    rng = np.random.default_rng(seed)
    shape = (16, 7)
    field = _field(rng.uniform(0.5, 2.0, shape), rng.uniform(0, 0.6, shape), rng.uniform(0, 0.6, shape))
    areas = cross_section_areas(field)

    np.testing.assert_allclose(areas.outer, fan_area(field.outer), atol=1e-9)
    assert np.all(areas.a_cp >= 0) and np.all(areas.a_ncp >= 0)


def test_plaque_never_shrinks_outer_area():
    rng = np.random.default_rng(3)
    r_l = rng.uniform(0.5, 2.0, (16, 5))
    bare = cross_section_areas(_field(r_l))
    plaque = cross_section_areas(_field(r_l, rng.uniform(0, 0.5, r_l.shape), rng.uniform(0, 0.5, r_l.shape)))

    assert np.all(plaque.outer >= bare.outer)


@pytest.mark.parametrize("n_theta", [8, 16, 64, 256])
def test_polygon_deficit_convergence(n_theta):
    ratio = fan_area(np.full(n_theta, 1.3)) / (np.pi * 1.3**2)
    assert ratio == pytest.approx(polygon_deficit(n_theta), abs=1e-12)
    assert polygon_deficit(2 * n_theta) > polygon_deficit(n_theta)

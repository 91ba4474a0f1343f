import numpy as np
import pytest

from tubemesh.geometry import (
    LABEL_LUMEN,
    cross_section_areas,
    dice,
    polygon_deficit,
    recover_lumen_radii,
    unwrap,
    voxelize,
)
from tubemesh.phantom import (
    HuPalette,
    LesionSpec,
    PhantomSpec,
    generate,
    lumen_area_ratio,
    narrowing_depth,
    truth_of,
)

QUIET = HuPalette(lumen_spread=0, wall_spread=0, cp_spread=0, ncp_spread=0, background_spread=0)


def _spec(**kwargs) -> PhantomSpec:
    defaults = dict(length=10.0, radius_start=1.5, radius_end=1.5)
    defaults.update(kwargs)
    return PhantomSpec(**defaults)


def test_healthy_phantom_has_no_plaque():
    mpr, truth = generate(_spec())

    assert np.all(truth.field.r_cp == 0)
    assert np.all(truth.field.r_ncp == 0)
    assert np.all(truth.stenosis == 0)
    assert truth.grade == 0
    assert mpr.voxels.shape == (127, 127, 20)
    assert mpr.center_index == 63


def test_sixty_percent_narrowing_is_grade_three():
    lesion = LesionSpec(kind="NCP", z_center=5.0, z_length=4.0, arc_degrees=360, stenosis=0.6)
    truth = truth_of(_spec(lesions=[lesion]))

    assert truth.stenosis.max() == pytest.approx(60.0, abs=1e-6)
    assert int(np.argmax(truth.stenosis)) == 10
    assert truth.grade == 3
    assert np.all(truth.field.r_ncp[:, 10] > 0)


def test_eccentric_narrowing_reaches_requested_stenosis():
    lesion = LesionSpec(kind="CP", z_center=5.0, z_length=4.0, arc_degrees=200, stenosis=0.3)
    truth = truth_of(_spec(lesions=[lesion]))

    assert truth.stenosis[10] == pytest.approx(30.0, abs=1e-6)
    # plaque only on the lesion side
    assert truth.field.r_cp[8, 10] == 0
    assert truth.field.r_cp[0, 10] > 0


def test_mixed_lesion_fills_both_shells():
    lesion = LesionSpec(kind="mixed", z_center=5.0, z_length=4.0, thickness=0.6, ncp_fraction=0.5)
    truth = truth_of(_spec(lesions=[lesion]))

    assert truth.field.r_ncp[0, 10] == pytest.approx(0.3)
    assert truth.field.r_cp[0, 10] == pytest.approx(0.3)
    assert truth.field.plaque_class[0, 10] == 3


def test_occlusion_is_grade_five():
    lesion = LesionSpec(
        kind="NCP", z_center=5.0, z_length=6.0, arc_degrees=360, stenosis=1.0, occlusion_length=2.0
    )
    truth = truth_of(_spec(lesions=[lesion]))

    assert truth.grade == 5
    assert truth.occluded[10]
    assert np.all(truth.field.r_l[:, 10] == 0)


def test_full_stenosis_requires_occlusion_core():
    with pytest.raises(ValueError, match="occlusion_length"):
        LesionSpec(kind="CP", z_center=5.0, z_length=4.0, stenosis=1.0)


def test_narrow_lumen_rejected():
    with pytest.raises(ValueError, match="below 0.3 mm"):
        truth_of(_spec(radius_start=0.25, radius_end=0.25))


def test_outer_wall_limit_rejected():
    lesion = LesionSpec(kind="CP", z_center=5.0, z_length=4.0, thickness=5.0)
    with pytest.raises(ValueError, match="outer wall"):
        truth_of(_spec(lesions=[lesion]))


def test_lesion_outside_vessel_rejected():
    with pytest.raises(ValueError, match="outside the vessel length"):
        _spec(lesions=[LesionSpec(kind="CP", z_center=9.0, z_length=4.0)])


def test_narrowing_depth_concentric():
    depth = narrowing_depth(2.0, np.ones(16), 0.75)
    assert depth == pytest.approx(2.0 * (1 - np.sqrt(0.25)))


def test_narrowing_depth_unreachable():
    profile = np.zeros(16)
    profile[0] = 1.0
    with pytest.raises(ValueError, match="not reachable|intrusion"):
        narrowing_depth(1.0, profile, 0.5)


def test_generate_is_deterministic():
    lesion = LesionSpec(kind="CP", z_center=5.0, z_length=4.0)
    first, _ = generate(_spec(lesions=[lesion], seed=7))
    second, _ = generate(_spec(lesions=[lesion], seed=7))
    other, _ = generate(_spec(lesions=[lesion], seed=8))

    np.testing.assert_array_equal(first.voxels, second.voxels)
    assert not np.array_equal(first.voxels, other.voxels)


def test_noiseless_regions_take_palette_values():
    mpr, _ = generate(_spec(noise_sigma=0, palette=QUIET))

    assert mpr.voxels[63, 63, 0] == pytest.approx(350.0)
    assert mpr.voxels[0, 0, 0] == pytest.approx(60.0)


def test_noiseless_ray_threshold_recovers_lumen():
    spec = _spec(noise_sigma=0, palette=QUIET, radius_start=1.8, radius_end=1.2)
    mpr, truth = generate(spec)
    cyl = unwrap(mpr, n_theta=16)

    recovered = recover_lumen_radii(cyl, threshold=(350.0 + 60.0) / 2)

    error = np.abs(recovered - truth.field.r_l)
    assert error.mean() < 0.08
    # half a ray step plus half a voxel of bilinear blur
    assert error.max() <= 0.15


def test_noiseless_recovered_lumen_overlaps_truth():
    lesion = LesionSpec(kind="NCP", z_center=5.0, z_length=5.0, arc_degrees=180, stenosis=0.3)
    mpr, truth = generate(_spec(noise_sigma=0, palette=QUIET, lesions=[lesion]))
    recovered = recover_lumen_radii(unwrap(mpr, n_theta=16), threshold=(350.0 + 30.0) / 2)
    estimate = truth.field.with_radii(r_l=recovered, r_cp=np.zeros_like(recovered), r_ncp=np.zeros_like(recovered))

    score = dice(voxelize(estimate).mask(LABEL_LUMEN), voxelize(truth.field).mask(LABEL_LUMEN))

    assert score > 0.97


def test_truth_areas_match_analytic_lumen():
    ratio = lumen_area_ratio(_spec())
    np.testing.assert_allclose(ratio, polygon_deficit(16), rtol=1e-5)

    lesion = LesionSpec(kind="NCP", z_center=5.0, z_length=4.0, arc_degrees=180, stenosis=0.3)
    ratio = lumen_area_ratio(_spec(n_theta=32, lesions=[lesion]))
    assert np.abs(ratio - 1).max() < 0.02


def test_truth_area_decomposition():
    lesion = LesionSpec(kind="mixed", z_center=5.0, z_length=4.0, stenosis=0.2)
    truth = truth_of(_spec(lesions=[lesion]))
    areas = cross_section_areas(truth.field)

    assert np.all(areas.a_cp >= 0) and np.all(areas.a_ncp >= 0)
    assert areas.total_plaque.max() > 0

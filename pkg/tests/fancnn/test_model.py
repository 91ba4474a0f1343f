import numpy as np
import pytest

from tubemesh.errors import ShapeError
from tubemesh.fancnn import FanCnn, FanCnnConfig, fancnn_loss
from tubemesh.geometry import CylindricalVolume
from tubemesh.nn import Tensor


def _model(seed=0, n_theta=8):
    return FanCnn(FanCnnConfig(n_theta=n_theta), np.random.default_rng(seed))


def _cyl(seed, n_theta=8, length=12, n_radius=32):
    samples = np.random.default_rng(seed).normal(150.0, 200.0, (n_theta, n_radius, length))
    return CylindricalVolume(samples=samples, dr=0.2)


def test_output_shapes_and_probabilities():
    out = _model().predict(_cyl(0))

    assert out.radii.shape == (3, 8, 12)
    assert out.class_probs.shape == (4, 8, 12)
    np.testing.assert_allclose(out.class_probs.sum(axis=0), 1.0, atol=1e-9)
    assert out.classes.shape == (8, 12)


@pytest.mark.parametrize("seed", range(10))
def test_theta_rotation_equivariance(seed):
    model = _model(seed)
    cyl = _cyl(seed + 100)
    shift = 1 + seed % 7
    rotated = CylindricalVolume(samples=np.roll(cyl.samples, shift, axis=0), dr=0.2)

    out = model.predict(cyl)
    out_rotated = model.predict(rotated)
    np.testing.assert_allclose(out_rotated.radii, np.roll(out.radii, shift, axis=1), atol=1e-9)
    np.testing.assert_allclose(out_rotated.class_probs, np.roll(out.class_probs, shift, axis=1), atol=1e-9)


def test_slices_outside_receptive_field_do_not_matter():
    model = _model(3)
    cyl = _cyl(1, length=24)
    changed = cyl.samples.copy()
    changed[:, :, 20:] += 500.0

    out = model.predict(cyl)
    out_changed = model.predict(CylindricalVolume(samples=changed, dr=0.2))
    # seven 3x3x3 stages reach seven slices
    np.testing.assert_array_equal(out.radii[:, :, :13], out_changed.radii[:, :, :13])
    assert not np.allclose(out.radii[:, :, 20:], out_changed.radii[:, :, 20:])


def test_single_slice_artery():
    out = _model().predict(_cyl(2, length=1))
    assert out.radii.shape == (3, 8, 1)


def test_wrong_ray_length_rejected():
    with pytest.raises(ShapeError, match="radius axis has extent 30"):
        _model().predict(_cyl(0, n_radius=30))


def test_wrong_ray_count_rejected():
    with pytest.raises(ShapeError, match="theta axis has extent 16"):
        _model(n_theta=8).predict(_cyl(0, n_theta=16))


def test_stack_must_reach_one_radial_position():
    with pytest.raises(ValueError, match="radial extent of 3"):
        FanCnnConfig(final_kernel=4)


def test_predict_restores_training_mode():
    model = _model()
    model.predict(_cyl(0))
    assert model.training


def _loss_closure(model, seed):
    rng = np.random.default_rng(seed)
    x = Tensor(model.normalise(rng.normal(150.0, 200.0, (2, 1, 8, 32, 12))))
    target_radii = rng.uniform(0.0, 2.0, (2, 3, 8, 12))
    target_radii[:, 1:] *= rng.random((2, 2, 8, 12)) > 0.5
    target_class = rng.integers(0, 4, (2, 8, 12))

    def loss():
        radii, logits = model(x)
        return fancnn_loss(radii, logits, target_radii, target_class)[0]

    return loss


@pytest.mark.parametrize(
    "seed", [0, *(pytest.param(s, marks=pytest.mark.slow) for s in range(1, 5))]
)
def test_loss_gradient_matches_finite_differences(seed, gradient_error):
    model = _model(seed)
    error = gradient_error(_loss_closure(model, seed), model.parameters(), samples=3, seed=seed)
    assert error < 1e-4


def test_parameter_names_are_layer_paths():
    names = [p.name for p in _model().parameters()]

    assert names[0] == "radial_convs.0.weight"
    assert "cyl_convs.6.weight" in names
    assert names[-2:] == ["class_head.weight", "class_head.bias"]

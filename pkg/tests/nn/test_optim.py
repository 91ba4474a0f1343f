import numpy as np
import pytest

from tubemesh.errors import GradientError
from tubemesh.nn import AdamW, OptimizerConfig, Parameter, learning_rate_at


def test_zero_gradient_zero_decay_leaves_parameters():
    p = Parameter(np.array([1.0, -2.0]))
    p.grad = np.zeros(2)
    AdamW([p], OptimizerConfig(weight_decay=0.0)).step(epoch=0)

    np.testing.assert_array_equal(p.data, [1.0, -2.0])


def test_single_step_matches_hand_computation():
    config = OptimizerConfig(learning_rate=0.01, weight_decay=0.1, beta1=0.9, beta2=0.999, epsilon=1e-8)
    p = Parameter(np.array([0.5]))
    p.grad = np.array([1.0])

    AdamW([p], config).step(epoch=0)

    m_hat = (0.1 * 1.0) / (1 - 0.9)
    v_hat = (0.001 * 1.0) / (1 - 0.999)
    expected = 0.5 * (1 - 0.01 * 0.1) - 0.01 * m_hat / (np.sqrt(v_hat) + 1e-8)
    assert p.data[0] == pytest.approx(expected, abs=1e-12)


def test_decay_does_not_enter_moments():
    p = Parameter(np.array([3.0]))
    p.grad = np.array([0.0])
    AdamW([p], OptimizerConfig(weight_decay=0.5)).step(epoch=0)

    assert p.m[0] == 0.0 and p.v[0] == 0.0
    assert p.data[0] == pytest.approx(3.0 * (1 - 0.01 * 0.5))


@pytest.mark.parametrize(
    "epoch, expected",
    [(0, 0.01), (2999, 0.01), (3000, 1e-3), (4500, 1e-4), (5000, 1e-5), (6000, 1e-5)],
)
def test_milestone_schedule(epoch, expected):
    config = OptimizerConfig(milestones=[3000, 4000, 5000])
    assert learning_rate_at(config, epoch) == pytest.approx(expected)


def test_step_returns_learning_rate():
    p = Parameter(np.ones(1))
    p.grad = np.ones(1)
    assert AdamW([p], OptimizerConfig(milestones=[1])).step(epoch=1) == pytest.approx(1e-3)


def test_nan_gradient_aborts_step():
    p = Parameter(np.ones(2), name="head.weight")
    p.grad = np.array([np.nan, 0.0])
    with pytest.raises(GradientError, match="head.weight"):
        AdamW([p], OptimizerConfig()).step(epoch=0)
    np.testing.assert_array_equal(p.data, [1.0, 1.0])


@pytest.mark.parametrize("gamma", [0.0, 1.0, 1.5])
def test_gamma_must_lie_in_unit_interval(gamma):
    with pytest.raises(ValueError, match="gamma"):
        OptimizerConfig(gamma=gamma)


def test_milestones_must_increase():
    with pytest.raises(ValueError, match="strictly increasing"):
        OptimizerConfig(milestones=[5, 5])


def test_unknown_keys_rejected():
    with pytest.raises(ValueError):
        OptimizerConfig(lr=0.1)

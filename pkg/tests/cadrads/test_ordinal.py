import numpy as np
import pytest

from tubemesh.cadrads import decode_grade, encode, ordinal_loss, patient_grade, worst_artery
from tubemesh.nn import Tensor


def test_grade_three_encoding():
    np.testing.assert_array_equal(encode(3), [1, 1, 1, 0, 0])
    np.testing.assert_array_equal(encode(0), [0, 0, 0, 0, 0])


def test_encoding_rejects_unknown_grade():
    with pytest.raises(ValueError, match="must lie in"):
        encode(6)


@pytest.mark.parametrize("grade", range(6))
def test_decode_inverts_clamped_encoding(grade):
    assert decode_grade(np.clip(encode(grade), 1e-12, 1 - 1e-12)) == grade


def test_decode_counts_outputs_above_half():
    assert decode_grade(np.array([0.9, 0.8, 0.6, 0.2, 0.1])) == 3
    assert decode_grade(np.full(5, 0.49)) == 0
    np.testing.assert_array_equal(decode_grade(np.array([[0.9] * 5, [0.1] * 5])), [5, 0])


@pytest.mark.parametrize("seed", range(20))
def test_decode_is_monotone(seed):
    rng = np.random.default_rng(seed)
    outputs = rng.random(5)
    raised = outputs.copy()
    raised[rng.integers(5)] += rng.random()

    assert decode_grade(raised) >= decode_grade(outputs)


def _naive_bce(p, grade):
    total = 0.0
    for i in range(5):
        y = 1.0 if i < grade else 0.0
        q = min(max(p[i], 1e-12), 1 - 1e-12)
        total += -(y * np.log(q) + (1 - y) * np.log(1 - q))
    return total / 5


@pytest.mark.parametrize("seed", range(100))
def test_loss_matches_per_output_cross_entropy(seed):
    rng = np.random.default_rng(seed)
    batch = int(rng.integers(1, 5))
    p = rng.random((batch, 5))
    grades = rng.integers(0, 6, batch)

    loss = ordinal_loss(Tensor(p), grades).item()
    expected = np.mean([_naive_bce(p[k], grades[k]) for k in range(batch)])

    assert loss == pytest.approx(expected, abs=1e-12)


def test_loss_vanishes_at_the_encoding():
    p = np.stack([encode(g) for g in range(6)])
    assert ordinal_loss(Tensor(p), range(6)).item() < 1e-11


def test_loss_shape_mismatch():
    with pytest.raises(ValueError, match="outputs have shape"):
        ordinal_loss(Tensor(np.full((2, 5), 0.5)), [1, 2, 3])


def test_patient_takes_worst_artery():
    outputs = np.stack([np.clip(encode(g), 0.1, 0.9) for g in (0, 2, 1)])

    assert patient_grade(outputs) == 2
    assert patient_grade(outputs[[2, 0, 1]]) == 2
    assert patient_grade(outputs[:1]) == 0


def test_patient_without_arteries():
    with pytest.raises(ValueError, match="at least one artery"):
        patient_grade(np.empty((0, 5)))


def test_worst_artery_tie_break():
    outputs = np.array(
        [
            [0.9, 0.6, 0.1, 0.1, 0.1],
            [0.9, 0.9, 0.4, 0.1, 0.1],
            [0.7, 0.1, 0.1, 0.1, 0.1],
        ]
    )
    assert worst_artery(outputs) == 1
    assert worst_artery(np.array([[0.6] * 5, [0.6] * 5])) == 0

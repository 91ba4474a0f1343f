import numpy as np
import pytest

from tubemesh.metrics import (
    ConfusionMatrix,
    accuracy,
    kappa_confidence_interval,
    mcc,
    one_off_accuracy,
    weighted_kappa,
)

HOLD_OUT = ConfusionMatrix(
    np.array(
        [
            [121, 17, 0, 0, 0, 0],
            [11, 40, 10, 1, 0, 0],
            [3, 14, 32, 7, 6, 0],
            [0, 1, 6, 14, 2, 0],
            [0, 0, 1, 4, 7, 0],
            [0, 0, 0, 0, 3, 0],
        ]
    )
)
EXTERNAL = ConfusionMatrix(
    np.array(
        [
            [259, 54, 1, 0, 0, 0],
            [11, 76, 55, 16, 0, 0],
            [0, 8, 53, 35, 3, 0],
            [0, 1, 16, 29, 11, 0],
            [0, 0, 1, 13, 13, 0],
            [0, 0, 0, 0, 3, 0],
        ]
    )
)


def _labels(cm: ConfusionMatrix) -> tuple[np.ndarray, np.ndarray]:
    i, j = np.indices(cm.counts.shape)
    return np.repeat(i.ravel(), cm.counts.ravel()), np.repeat(j.ravel(), cm.counts.ravel())


def test_hold_out_statistics():
    assert HOLD_OUT.total == 300
    assert weighted_kappa(HOLD_OUT) == pytest.approx(0.75, abs=0.005)
    assert accuracy(HOLD_OUT) == pytest.approx(214 / 300)
    assert one_off_accuracy(HOLD_OUT) == pytest.approx(0.96, abs=0.005)
    assert mcc(HOLD_OUT) == pytest.approx(0.59, abs=0.01)


def test_external_statistics():
    assert EXTERNAL.total == 658
    assert weighted_kappa(EXTERNAL) == pytest.approx(0.71, abs=0.005)
    assert accuracy(EXTERNAL) == pytest.approx(0.65, abs=0.005)
    assert one_off_accuracy(EXTERNAL) == pytest.approx(0.97, abs=0.005)


def test_identity_matrix():
    cm = ConfusionMatrix(np.eye(6, dtype=int) * 3)

    assert weighted_kappa(cm) == 1.0
    assert mcc(cm) == pytest.approx(1.0)
    assert accuracy(cm) == 1.0


def test_single_cell_matrix():
    counts = np.zeros((6, 6), dtype=int)
    counts[2, 2] = 5
    cm = ConfusionMatrix(counts)

    assert weighted_kappa(cm) == 1.0
    assert mcc(cm) == 0.0


def _naive_kappa(counts):
    k = len(counts)
    total = sum(map(sum, counts))
    rows = [sum(counts[i]) for i in range(k)]
    cols = [sum(counts[i][j] for i in range(k)) for j in range(k)]
    observed = expected = 0.0
    for i in range(k):
        for j in range(k):
            w = abs(i - j) / (k - 1)
            observed += w * counts[i][j] / total
            expected += w * rows[i] * cols[j] / total**2
    return 1 - observed / expected


def _naive_mcc(counts):
    k = len(counts)
    numerator = 0.0
    for a in range(k):
        for b in range(k):
            for c in range(k):
                numerator += counts[a][a] * counts[b][c] - counts[a][b] * counts[c][a]
    left = right = 0.0
    for a in range(k):
        row_a = sum(counts[a])
        col_a = sum(counts[i][a] for i in range(k))
        left += row_a * sum(sum(counts[b]) for b in range(k) if b != a)
        right += col_a * sum(sum(counts[i][b] for i in range(k)) for b in range(k) if b != a)
    return numerator / (left * right) ** 0.5


@pytest.mark.parametrize("seed", range(100))
def test_statistics_match_loop_oracles(seed):
    rng = np.random.default_rng(seed)
    k = int(rng.integers(2, 7))
    counts = rng.integers(0, 12, (k, k))
    counts[0, 0] += 1
    counts[-1, -1] += 1
    cm = ConfusionMatrix(counts)
    as_lists = counts.tolist()

    assert weighted_kappa(cm) == pytest.approx(_naive_kappa(as_lists), abs=1e-9)
    assert mcc(cm) == pytest.approx(_naive_mcc(as_lists), abs=1e-9)
    assert one_off_accuracy(cm) >= accuracy(cm)


@pytest.mark.parametrize("seed", range(10))
def test_relabelling_invariance(seed):
    rng = np.random.default_rng(seed)
    counts = rng.integers(0, 10, (5, 5)) + np.eye(5, dtype=int)
    order = rng.permutation(5)
    reverse = np.arange(5)[::-1]

    assert mcc(ConfusionMatrix(counts[np.ix_(order, order)])) == pytest.approx(mcc(ConfusionMatrix(counts)))
    # linear weights only depend on |i - j|, which a reversal keeps
    assert weighted_kappa(ConfusionMatrix(counts[np.ix_(reverse, reverse)])) == pytest.approx(
        weighted_kappa(ConfusionMatrix(counts))
    )


def test_from_labels_counts_pairs():
    cm = ConfusionMatrix.from_labels([0, 0, 3, 5], [0, 1, 3, 4])

    assert cm.counts[0, 0] == 1 and cm.counts[0, 1] == 1 and cm.counts[5, 4] == 1
    assert cm.total == 4
    with pytest.raises(ValueError, match=r"labels must lie in \[0, 5\]"):
        ConfusionMatrix.from_labels([6], [0])


def test_invalid_matrices():
    with pytest.raises(ValueError, match="square"):
        ConfusionMatrix(np.ones((2, 3)))
    with pytest.raises(ValueError, match="empty"):
        ConfusionMatrix(np.zeros((3, 3)))
    with pytest.raises(ValueError, match="nonnegative"):
        ConfusionMatrix(np.array([[1, -1], [0, 1]]))


def test_kappa_interval_brackets_the_estimate():
    reference, predicted = _labels(HOLD_OUT)
    low, high = kappa_confidence_interval(reference, predicted, resamples=300, seed=1)

    assert low < weighted_kappa(HOLD_OUT) < high
    assert high - low < 0.2
    assert kappa_confidence_interval(reference, predicted, resamples=300, seed=1) == (low, high)

import numpy as np
import pytest

from tubemesh.metrics import PairedMeasurements, bland_altman, icc


def _anova_icc(x, y):
    n = len(x)
    rows = [(a + b) / 2 for a, b in zip(x, y)]
    grand = sum(rows) / n
    col_x, col_y = sum(x) / n, sum(y) / n
    ss_total = sum((v - grand) ** 2 for v in list(x) + list(y))
    ss_rows = 2 * sum((r - grand) ** 2 for r in rows)
    ss_cols = n * ((col_x - grand) ** 2 + (col_y - grand) ** 2)
    ms_rows = ss_rows / (n - 1)
    ms_cols = ss_cols
    ms_error = (ss_total - ss_rows - ss_cols) / (n - 1)
    return (ms_rows - ms_error) / (ms_rows + ms_error + 2 * (ms_cols - ms_error) / n)


def test_identical_raters_agree_perfectly():
    values = np.array([1.0, 4.0, 2.5, 8.0])
    assert icc(PairedMeasurements(values, values)) == pytest.approx(1.0)


def test_bias_is_penalised():
    reference = np.arange(10.0)
    pairs = PairedMeasurements(reference, reference + 5.0)

    assert icc(pairs) < 0.8
    assert icc(pairs) == pytest.approx(_anova_icc(reference, reference + 5.0), abs=1e-12)


@pytest.mark.parametrize("seed", range(100))
def test_icc_matches_anova_sums(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(2, 15))
    x = rng.normal(50, 10, n)
    y = x + rng.normal(rng.normal(), 5, n)

    assert icc(PairedMeasurements(x, y)) == pytest.approx(_anova_icc(x, y), abs=1e-9)


@pytest.mark.parametrize("seed", range(10))
def test_icc_invariant_under_shared_affine_map(seed):
    rng = np.random.default_rng(seed)
    x = rng.normal(0, 1, 12)
    y = x + rng.normal(0.3, 0.5, 12)
    scale, shift = rng.uniform(0.5, 5), rng.normal(0, 10)

    assert icc(PairedMeasurements(scale * x + shift, scale * y + shift)) == pytest.approx(
        icc(PairedMeasurements(x, y)), abs=1e-9
    )


def test_constant_raters():
    assert icc(PairedMeasurements(np.full(4, 2.0), np.full(4, 2.0))) == 1.0
    with pytest.raises(ValueError, match="undefined"):
        icc(PairedMeasurements(np.full(4, 2.0), np.full(4, 3.0)))


def test_too_few_pairs():
    with pytest.raises(ValueError, match="at least 2 pairs"):
        icc(PairedMeasurements([1.0], [1.0]))


def test_length_mismatch():
    with pytest.raises(ValueError, match="differ in length"):
        PairedMeasurements([1.0, 2.0], [1.0])


def test_bland_altman_of_identical_arrays():
    result = bland_altman(PairedMeasurements([1.0, 2.0, 3.0], [1.0, 2.0, 3.0]))
    assert (result.bias, result.lower, result.upper) == (0.0, 0.0, 0.0)


def test_bland_altman_symmetric_differences():
    result = bland_altman(PairedMeasurements.from_pairs([(0.0, 1.0), (0.0, -1.0)]))

    assert result.bias == 0.0
    assert result.upper == pytest.approx(1.96 * np.sqrt(2))
    assert result.lower == pytest.approx(-1.96 * np.sqrt(2))


@pytest.mark.parametrize("seed", range(100))
def test_bland_altman_matches_loop(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(2, 12))
    x, y = rng.normal(size=n), rng.normal(size=n)
    d = [b - a for a, b in zip(x, y)]
    mean = sum(d) / n
    sd = (sum((v - mean) ** 2 for v in d) / (n - 1)) ** 0.5

    result = bland_altman(PairedMeasurements(x, y))
    assert result.bias == pytest.approx(mean, abs=1e-9)
    assert result.upper == pytest.approx(mean + 1.96 * sd, abs=1e-9)

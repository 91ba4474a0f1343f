import numpy as np
import pytest

from tubemesh.cadrads import GraderConfig, prepare_signal
from tubemesh.errors import ShapeError
from tubemesh.geometry import AreaSignalSet


def _areas(a_l, a_cp=None, a_ncp=None) -> AreaSignalSet:
    a_l = np.asarray(a_l, dtype=np.float64)
    zeros = np.zeros_like(a_l)
    return AreaSignalSet(a_l, zeros if a_cp is None else a_cp, zeros if a_ncp is None else a_ncp)


def test_constant_lumen_has_no_change():
    signal = prepare_signal(_areas(np.full(40, 7.0)))

    assert signal.lumen_pct_change.shape == (512,)
    assert not signal.lumen_pct_change.any()
    assert signal.valid_length == 40


def test_halving_area_gives_minus_half():
    a_l = np.full(10, 8.0)
    a_l[5:] = 4.0
    signal = prepare_signal(_areas(a_l))

    assert signal.lumen_pct_change[4] == pytest.approx(-0.5)
    assert np.count_nonzero(signal.lumen_pct_change) == 1


def test_plaque_channel_combines_both_types():
    signal = prepare_signal(_areas(np.full(6, 5.0), a_cp=np.full(6, 0.5), a_ncp=np.arange(6.0)))

    np.testing.assert_allclose(signal.total_plaque_area[:6], 0.5 + np.arange(6.0))
    assert not signal.total_plaque_area[6:].any()
    assert signal.channels.shape == (2, 512)


def test_narrow_slices_are_masked():
    a_l = np.full(12, 5.0)
    a_l[4:7] = np.pi * 0.5**2
    signal = prepare_signal(_areas(a_l, a_cp=np.ones(12)))

    assert not signal.total_plaque_area[4:7].any()
    assert signal.total_plaque_area[3] == 1.0 and signal.total_plaque_area[7] == 1.0
    # run ends carry no change across the masked gap
    assert not signal.lumen_pct_change[:12].any()


def test_diameter_threshold():
    narrow, wide = np.pi * 0.7**2, np.pi * 0.8**2
    signal = prepare_signal(_areas([narrow, wide, 5.0]), GraderConfig())

    assert signal.valid_length == 3
    assert signal.lumen_pct_change[0] == 0.0
    assert signal.lumen_pct_change[1] == pytest.approx((5.0 - wide) / wide)
    assert signal.total_plaque_area[0] == 0.0


def test_appended_empty_slices_change_nothing():
    rng = np.random.default_rng(2)
    a_l = rng.uniform(3.0, 9.0, 50)
    a_cp = rng.uniform(0.0, 1.0, 50)
    short = prepare_signal(_areas(a_l, a_cp=a_cp))
    long = prepare_signal(_areas(a_l, a_cp=a_cp).padded(30))

    np.testing.assert_array_equal(short.channels, long.channels)
    assert short.valid_length == long.valid_length == 50


def test_occluded_artery_keeps_zero_channels():
    signal = prepare_signal(_areas(np.zeros(20)))

    assert signal.valid_length == 0
    assert not signal.channels.any()


def test_long_signal_rejected():
    with pytest.raises(ShapeError, match="513 slices"):
        prepare_signal(_areas(np.full(513, 5.0)))

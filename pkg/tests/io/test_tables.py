import numpy as np
import polars as pl
import pytest

from tubemesh.geometry import AreaSignalSet, RadialField, cross_section_areas
from tubemesh.io import (
    read_areas_csv,
    read_field_csv,
    read_patient_signals,
    reorder_columns,
    write_areas_csv,
    write_field_csv,
    write_patient_signals,
)


@pytest.fixture
def field():
    rng = np.random.default_rng(1)
    shape = (16, 5)
    return RadialField(
        r_l=rng.uniform(0.5, 2.0, shape),
        r_cp=rng.uniform(0, 0.4, shape) * (rng.random(shape) > 0.5),
        r_ncp=rng.uniform(0, 0.4, shape) * (rng.random(shape) > 0.5),
    )


def test_field_csv_layout(field, tmp_path):
    path = write_field_csv(field, tmp_path / "field.csv")
    df = pl.read_csv(path)

    assert df.columns == ["theta_index", "z_index", "r_l", "r_cp", "r_ncp", "class"]
    assert df.height == 80


def test_field_csv_restores_field(field, tmp_path):
    path = write_field_csv(field, tmp_path / "field.csv")
    shuffled = pl.read_csv(path).sample(fraction=1.0, shuffle=True, seed=3)
    shuffled.write_csv(path)
    restored = read_field_csv(path)

    np.testing.assert_array_equal(restored.r_l, field.r_l)
    np.testing.assert_array_equal(restored.plaque_class, field.plaque_class)


def test_field_csv_missing_vertex(field, tmp_path):
    path = write_field_csv(field, tmp_path / "field.csv")
    pl.read_csv(path).slice(1).write_csv(path)

    with pytest.raises(ValueError, match="has 79 rows, expected 80"):
        read_field_csv(path)


def test_field_csv_missing_column(tmp_path):
    path = tmp_path / "field.csv"
    pl.DataFrame({"theta_index": [0], "z_index": [0], "r_l": [1.0]}).write_csv(path)

    with pytest.raises(ValueError, match=r"missing required columns: \['r_cp', 'r_ncp', 'class'\]"):
        read_field_csv(path)


def test_area_columns_are_case_insensitive(field, tmp_path):
    areas = cross_section_areas(field)
    path = write_areas_csv(areas, tmp_path / "areas.csv")
    df = pl.read_csv(path)
    df.rename({"a_l": " A_L "}).write_csv(path)

    restored = read_areas_csv(path)
    np.testing.assert_array_equal(restored.a_l, areas.a_l)


def test_patient_signals(tmp_path):
    arteries = {
        "LAD": AreaSignalSet(a_l=np.array([3.0, 2.5]), a_cp=np.zeros(2), a_ncp=np.array([0.0, 0.4])),
        "RCA": AreaSignalSet(a_l=np.array([4.0, 4.0, 3.9]), a_cp=np.zeros(3), a_ncp=np.zeros(3)),
    }
    restored = read_patient_signals(write_patient_signals(arteries, tmp_path / "p.csv"))

    assert list(restored) == ["LAD", "RCA"]
    np.testing.assert_array_equal(restored["LAD"].a_ncp, [0.0, 0.4])
    assert restored["RCA"].length == 3


def test_reorder_columns_keeps_extras():
    df = pl.DataFrame({"b": [1], "extra": [2], "a": [3]})
    assert reorder_columns(df, ["a", "b", "missing"]).columns == ["a", "b", "extra"]

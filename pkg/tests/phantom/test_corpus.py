import numpy as np
import pytest

from tubemesh.io import read_patient_signals
from tubemesh.phantom import (
    PhantomCorpusConfig,
    allocate_grades,
    generate_corpus,
    generate_patients,
    load_corpus,
    parse_grade_mix,
    read_manifest,
    sample_spec,
    truth_of,
)

SMALL = PhantomCorpusConfig(length=16.0, patient_length=(30.0, 40.0))


def test_parse_grade_mix():
    assert parse_grade_mix("0:1, 3:2,5:0.5") == {0: 1.0, 3: 2.0, 5: 0.5}


@pytest.mark.parametrize("text", ["6:1", "0:-1", "0:0", "3"])
def test_parse_grade_mix_rejects(text):
    with pytest.raises(ValueError):
        parse_grade_mix(text)


def test_config_rejects_unknown_keys():
    with pytest.raises(ValueError, match="extra"):
        PhantomCorpusConfig(n_phantoms=3)


def test_allocate_grades_is_exact():
    rng = np.random.default_rng(0)
    grades = allocate_grades(10, {0: 1.0, 3: 1.0, 5: 2.0}, rng)

    assert len(grades) == 10
    assert grades.count(5) == 5
    assert grades.count(0) + grades.count(3) == 5
    assert abs(grades.count(0) - grades.count(3)) == 1


@pytest.mark.parametrize("grade", range(6))
@pytest.mark.parametrize("seed", range(4))
def test_sampled_spec_hits_target_grade(grade, seed):
    spec = sample_spec(np.random.default_rng(seed), grade, SMALL)

    assert truth_of(spec).grade == grade


def test_generate_corpus_writes_manifest(tmp_path):
    config = SMALL.model_copy(update={"grade_mix": {0: 1.0, 2: 1.0, 4: 1.0}})
    manifest = generate_corpus(tmp_path, 3, seed=11, config=config)

    assert manifest.height == 3
    assert sorted(manifest.get_column("grade").to_list()) == [0, 2, 4]
    assert read_manifest(tmp_path).equals(manifest)
    for row in manifest.iter_rows(named=True):
        for key in ("phantom", "truth", "profile", "spec"):
            assert (tmp_path / row[key]).exists()

    arteries = load_corpus(tmp_path)
    assert [entry[0] for entry in arteries] == manifest.get_column("id").to_list()
    for (_, mpr, truth), grade in zip(arteries, manifest.get_column("grade").to_list()):
        assert truth.grade == grade
        assert mpr.length == truth.field.length


def test_generate_corpus_independent_of_threads(tmp_path):
    one = generate_corpus(tmp_path / "one", 3, seed=5, config=SMALL, threads=1)
    two = generate_corpus(tmp_path / "two", 3, seed=5, config=SMALL, threads=2)

    assert one.equals(two)
    for name in one.get_column("truth").to_list():
        assert (tmp_path / "one" / name).read_bytes() == (tmp_path / "two" / name).read_bytes()


def test_generate_patients(tmp_path):
    manifest = generate_patients(tmp_path, 4, seed=3, config=SMALL)

    assert manifest.height == 4
    for row in manifest.iter_rows(named=True):
        assert row["grade"] == max(row["artery_grades"])
        signals = read_patient_signals(tmp_path / row["signals"])
        assert list(signals) == row["arteries"] == ["LAD", "LCX", "RCA"]


def test_missing_manifest(tmp_path):
    with pytest.raises(FileNotFoundError, match="no corpus manifest"):
        read_manifest(tmp_path)

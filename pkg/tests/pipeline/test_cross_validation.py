import json

import polars as pl
import pytest

from tubemesh.cadrads import GraderConfig, GraderTrainConfig
from tubemesh.fancnn import FanCnnConfig, FanCnnTrainConfig
from tubemesh.metrics import MetricsConfig
from tubemesh.phantom import PhantomCorpusConfig, generate_corpus, generate_patients
from tubemesh.pipeline import cross_validate_grading, train_grading, train_segmentation
from tubemesh.pipeline.cli import main

PHANTOM = PhantomCorpusConfig(length=12.0, patient_length=(12.0, 14.0), max_lesions=1)
TRAIN = GraderTrainConfig(epochs=1, batch_size=2, ensemble=1)


@pytest.fixture(scope="module")
def patients(tmp_path_factory):
    root = tmp_path_factory.mktemp("patients")
    generate_patients(root, 6, seed=4, config=PHANTOM)
    return root


def test_fold_training_holds_out_the_test_patients(patients, tmp_path):
    paths = train_grading(patients, tmp_path, GraderConfig(), TRAIN, [7], folds=3, fold=1, split_seed=2)
    split = json.loads((tmp_path / "split.json").read_text())

    assert len(paths) == 1
    assert (split["folds"], split["fold"]) == (3, 1)
    assert len(split["test"]) == 2
    assert not set(split["train"]) & set(split["test"])
    assert len(split["train"]) + len(split["test"]) == 6


def test_plain_training_writes_no_split(patients, tmp_path):
    train_grading(patients, tmp_path, GraderConfig(), TRAIN, [7])
    assert not (tmp_path / "split.json").exists()


def test_segmentation_fold_training(tmp_path):
    corpus = tmp_path / "arteries"
    generate_corpus(corpus, 4, seed=1, config=PHANTOM)
    model = FanCnnConfig(features=4, cyl_convs=2, final_kernel=16)

    train_segmentation(
        corpus, tmp_path / "model", model, FanCnnTrainConfig(epochs=0, ensemble=1), [3], folds=2, fold=0
    )
    split = json.loads((tmp_path / "model" / "split.json").read_text())

    assert sorted(split["train"] + split["test"]) == [f"artery_{i:04d}" for i in range(4)]
    assert len(split["test"]) == 2


def test_cross_validation_grades_every_patient_once(patients, tmp_path):
    metrics = MetricsConfig(kappa_resamples=50)
    report = cross_validate_grading(patients, tmp_path, GraderConfig(), TRAIN, [7], folds=3, metrics=metrics)
    grades = pl.read_csv(tmp_path / "cv_grades.csv")

    assert report.patients == 6
    assert grades.height == 6
    assert grades.get_column("id").n_unique() == 6
    assert sorted(grades.get_column("fold").unique().to_list()) == [0, 1, 2]
    assert json.loads((tmp_path / "cv_report.json").read_text())["patients"] == 6


def test_cli_cross_validation(patients, tmp_path, capsys):
    config = tmp_path / "config.json"
    config.write_text(json.dumps({"cadrads": {"train": TRAIN.model_dump()}, "metrics": {"kappa_resamples": 50}}))

    args = ["cadrads", "cv", "--corpus", str(patients), "--out", str(tmp_path / "cv"), "--folds", "2"]
    code = main(["--config", str(config), *args])

    assert code == 0
    assert json.loads(capsys.readouterr().out)["patients"] == 6


def test_cli_rejects_a_fold_outside_the_split(patients, tmp_path):
    args = ["cadrads", "train", "--corpus", str(patients), "--out", str(tmp_path), "--folds", "3", "--fold", "3"]
    assert main(args) == 2

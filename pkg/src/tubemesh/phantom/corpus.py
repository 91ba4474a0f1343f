"""
Phantom corpora on disk.

Two kinds are written, each with a row-per-entry JSON manifest:

* segmentation corpora: one MPR volume (TMPR1) per artery plus its truth
  field and per-slice truth profile (CSV);
* grading corpora: patients of several arteries, stored as truth area
  signals only, with the patient-level CAD-RADS grade.
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import polars as pl
from pydantic import BaseModel, ConfigDict, Field, field_validator

from tubemesh.geometry.areas import cross_section_areas
from tubemesh.geometry.types import MprVolume
from tubemesh.io.binary import read_mpr, write_mpr
from tubemesh.io.frames import require_columns
from tubemesh.io.tables import read_field_csv, write_field_csv, write_patient_signals
from tubemesh.phantom.generate import generate, truth_of
from tubemesh.phantom.grading import stenosis_to_grade
from tubemesh.phantom.spec import LesionSpec, PhantomSpec, PhantomTruth

log = logging.getLogger(__name__)

MANIFEST_NAME = "manifest.json"
ARTERY_NAMES = ("LAD", "LCX", "RCA")
PROFILE_COLUMNS = ["z_index", "reference_radius", "stenosis", "occluded"]

# stenosis fractions drawn for the culprit lesion of each grade
GRADE_STENOSIS = {
    1: (0.05, 0.22),
    2: (0.28, 0.47),
    3: (0.52, 0.67),
    4: (0.72, 0.85),
}


class PhantomCorpusConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    train_arteries: int = Field(64, ge=0)
    test_arteries: int = Field(16, ge=0)
    train_patients: int = Field(200, ge=0)
    test_patients: int = Field(60, ge=0)
    arteries_per_patient: int = Field(3, ge=1)
    length: float = Field(30.0, gt=0)
    patient_length: tuple[float, float] = (30.0, 60.0)
    radius: tuple[float, float] = (1.4, 2.0)
    taper: tuple[float, float] = (0.7, 0.95)
    max_lesions: int = Field(3, ge=1)
    n_theta: int = Field(16, ge=3)
    noise_sigma: float = Field(20.0, ge=0)
    grade_mix: dict[int, float] = Field(default_factory=lambda: {g: 1.0 for g in range(6)})

    @field_validator("grade_mix")
    @classmethod
    def _valid_mix(cls, mix: dict[int, float]) -> dict[int, float]:
        return check_grade_mix(mix)


def check_grade_mix(mix: dict[int, float]) -> dict[int, float]:
    bad = [g for g in mix if g not in range(6)]
    if bad:
        raise ValueError(f"grade mix keys must be CAD-RADS grades 0..5, got {bad}")
    if any(w < 0 for w in mix.values()) or sum(mix.values()) <= 0:
        raise ValueError(f"grade mix weights must be nonnegative with a positive sum, got {mix}")
    return mix


def parse_grade_mix(text: str) -> dict[int, float]:
    """
    Parse ``"0:1,3:2,5:0.5"`` into ``{0: 1.0, 3: 2.0, 5: 0.5}``.

    Example:
        >>> parse_grade_mix("0:1, 4:3")
        {0: 1.0, 4: 3.0}
    """
    mix: dict[int, float] = {}
    for item in filter(None, (part.strip() for part in text.split(","))):
        grade, sep, weight = item.partition(":")
        if not sep:
            raise ValueError(f"grade mix entry '{item}' is not of the form grade:weight")
        mix[int(grade)] = float(weight)
    return check_grade_mix(mix)


def allocate_grades(count: int, mix: dict[int, float], rng: np.random.Generator) -> list[int]:
    """
    Exactly ``count`` grades in proportion to ``mix`` (largest remainder),
    in shuffled order.
    """
    grades = sorted(mix)
    weights = np.array([mix[g] for g in grades], dtype=np.float64)
    expected = count * weights / weights.sum()
    counts = np.floor(expected).astype(np.int64)
    order = np.argsort(-(expected - counts), kind="stable")
    counts[order[: count - counts.sum()]] += 1
    allocation = np.repeat(grades, counts)
    rng.shuffle(allocation)
    return [int(g) for g in allocation]


def _lesion(
    rng: np.random.Generator, grade: int, center: float, room: float, dz: float
) -> LesionSpec:
    kind = str(rng.choice(["CP", "NCP", "mixed"]))
    center = round(center / dz) * dz
    common = dict(
        kind=kind,
        z_center=center,
        theta_center=float(rng.uniform(0.0, 2.0 * np.pi)),
        thickness=float(rng.uniform(0.2, 0.8)),
        ncp_fraction=float(rng.uniform(0.3, 0.7)),
    )
    if grade == 5:
        occlusion = float(rng.uniform(1.0, 1.0 + min(3.0, room / 3.0)))
        return LesionSpec(
            **common,
            z_length=float(min(room, occlusion + rng.uniform(4.0, 6.0))),
            arc_degrees=360.0,
            stenosis=1.0,
            occlusion_length=occlusion,
        )
    low, high = GRADE_STENOSIS.get(grade, (0.0, 0.0))
    stenosis = float(rng.uniform(low, high))
    arc = 360.0 if stenosis > 0.45 else float(rng.uniform(90.0, 300.0))
    return LesionSpec(
        **common,
        z_length=float(rng.uniform(min(3.0, room), min(8.0, room))),
        arc_degrees=arc,
        stenosis=stenosis,
    )


def sample_spec(
    rng: np.random.Generator,
    grade: int,
    config: PhantomCorpusConfig,
    *,
    length: float | None = None,
    seed: int = 0,
) -> PhantomSpec:
    """
    A random artery whose worst lesion falls in the stenosis bin of ``grade``.

    Grade 0 arteries are plaque free. Other arteries get up to
    ``config.max_lesions`` lesions in disjoint z segments: one culprit at the
    target grade and milder ones below its bin.
    """
    length = config.length if length is None else length
    radius = float(rng.uniform(*config.radius))
    base = dict(
        length=length,
        radius_start=radius,
        radius_end=radius * float(rng.uniform(*config.taper)),
        noise_sigma=config.noise_sigma,
        n_theta=config.n_theta,
        seed=seed,
    )
    if grade == 0:
        return PhantomSpec(**base)

    dz = PhantomSpec.model_fields["dz"].default
    n_lesions = int(rng.integers(1, config.max_lesions + 1))
    margin = 1.0
    segment = (length - 2 * margin) / n_lesions
    culprit = int(rng.integers(n_lesions))
    lesions = []
    for i in range(n_lesions):
        lesion_grade = grade if i == culprit else int(rng.integers(0, min(grade, 4)))
        center = margin + (i + 0.5) * segment
        lesions.append(_lesion(rng, lesion_grade, center, segment - 2 * dz, dz))

    try:
        return _validated(PhantomSpec(**base, lesions=lesions))
    except ValueError:
        # fall back to concentric narrowing when an arc cannot reach the bin
        widened = [lesion.model_copy(update={"arc_degrees": 360.0}) for lesion in lesions]
        return _validated(PhantomSpec(**base, lesions=widened))


def _validated(spec: PhantomSpec) -> PhantomSpec:
    truth_of(spec)
    return spec


@dataclass(frozen=True)
class CorpusEntry:
    id: str
    grade: int
    max_stenosis: float
    phantom: str
    truth: str
    profile: str
    spec: str


def write_truth(truth: PhantomTruth, field_path: Path, profile_path: Path) -> None:
    write_field_csv(truth.field, field_path)
    pl.DataFrame(
        {
            "z_index": np.arange(truth.field.length),
            "reference_radius": truth.reference_radius,
            "stenosis": truth.stenosis,
            "occluded": truth.occluded,
        }
    ).write_csv(profile_path)


def read_truth(field_path: str | Path, profile_path: str | Path, dz: float = 0.5) -> PhantomTruth:
    field = read_field_csv(field_path, dz=dz)
    profile = require_columns(pl.read_csv(profile_path), PROFILE_COLUMNS, str(profile_path)).sort("z_index")
    stenosis = profile.get_column("stenosis").to_numpy()
    return PhantomTruth(
        field=field,
        reference_radius=profile.get_column("reference_radius").to_numpy(),
        stenosis=stenosis,
        grade=stenosis_to_grade(float(stenosis.max())),
        occluded=profile.get_column("occluded").to_numpy().astype(bool),
    )


def _child_seeds(seed: int, count: int) -> list[int]:
    return [int(s.generate_state(1)[0]) for s in np.random.SeedSequence(seed).spawn(count)]


def _write_artery(out_dir: Path, index: int, grade: int, seed: int, config: PhantomCorpusConfig) -> CorpusEntry:
    rng = np.random.default_rng(seed)
    spec = sample_spec(rng, grade, config, seed=seed)
    mpr, truth = generate(spec)
    entry_id = f"artery_{index:04d}"
    entry = CorpusEntry(
        id=entry_id,
        grade=truth.grade,
        max_stenosis=float(truth.stenosis.max()),
        phantom=f"{entry_id}.mpr",
        truth=f"{entry_id}.field.csv",
        profile=f"{entry_id}.profile.csv",
        spec=f"{entry_id}.spec.json",
    )
    write_mpr(mpr, out_dir / entry.phantom)
    write_truth(truth, out_dir / entry.truth, out_dir / entry.profile)
    (out_dir / entry.spec).write_text(spec.model_dump_json(indent=2))
    return entry


def generate_corpus(
    out_dir: str | Path,
    count: int,
    seed: int,
    config: PhantomCorpusConfig | None = None,
    *,
    threads: int = 1,
) -> pl.DataFrame:
    """
    Write ``count`` artery phantoms and their manifest to ``out_dir``.

    Grades are allocated exactly from ``config.grade_mix``; every phantom has
    its own seed spawned from ``seed``, so the corpus does not depend on the
    thread count.

    Returns
    -------
    pl.DataFrame
        The manifest, one row per phantom.
    """
    config = config or PhantomCorpusConfig()
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(seed)
    grades = allocate_grades(count, config.grade_mix, rng)
    seeds = _child_seeds(seed, count)
    log.info(f"Generating {count} phantoms into {out_dir} with {threads} thread(s)")

    with ThreadPoolExecutor(max_workers=max(threads, 1)) as pool:
        entries = list(
            pool.map(lambda i: _write_artery(out_dir, i, grades[i], seeds[i], config), range(count))
        )
    manifest = _entries_frame(entries)
    manifest.write_json(out_dir / MANIFEST_NAME)
    log.info(f"Grade distribution: {_distribution(manifest)}")
    return manifest


def _entries_frame(entries: list[CorpusEntry]) -> pl.DataFrame:
    schema = {
        "id": pl.Utf8,
        "grade": pl.Int64,
        "max_stenosis": pl.Float64,
        "phantom": pl.Utf8,
        "truth": pl.Utf8,
        "profile": pl.Utf8,
        "spec": pl.Utf8,
    }
    return pl.DataFrame([vars(e) for e in entries], schema=schema)


def _distribution(manifest: pl.DataFrame) -> dict[int, int]:
    counts = manifest.group_by("grade").len().sort("grade")
    return dict(zip(counts.get_column("grade").to_list(), counts.get_column("len").to_list()))


def read_manifest(corpus_dir: str | Path) -> pl.DataFrame:
    path = Path(corpus_dir) / MANIFEST_NAME
    if not path.exists():
        raise FileNotFoundError(f"no corpus manifest at '{path}'")
    return pl.read_json(path)


def load_artery(corpus_dir: str | Path, row: dict) -> tuple[MprVolume, PhantomTruth]:
    corpus_dir = Path(corpus_dir)
    mpr = read_mpr(corpus_dir / row["phantom"])
    truth = read_truth(corpus_dir / row["truth"], corpus_dir / row["profile"], dz=mpr.through_plane_spacing)
    return mpr, truth


def load_corpus(corpus_dir: str | Path) -> list[tuple[str, MprVolume, PhantomTruth]]:
    """Every artery of a segmentation corpus as (id, volume, truth)."""
    manifest = read_manifest(corpus_dir)
    return [(row["id"], *load_artery(corpus_dir, row)) for row in manifest.iter_rows(named=True)]


def sample_patient(
    rng: np.random.Generator, grade: int, config: PhantomCorpusConfig, n_arteries: int | None = None
) -> dict[str, PhantomSpec]:
    """
    Artery specs of one patient whose worst artery has CAD-RADS ``grade``;
    the other arteries draw grades at or below it.
    """
    n_arteries = config.arteries_per_patient if n_arteries is None else n_arteries
    names = [ARTERY_NAMES[i] if i < len(ARTERY_NAMES) else f"A{i}" for i in range(n_arteries)]
    culprit = int(rng.integers(n_arteries))
    specs = {}
    for i, name in enumerate(names):
        artery_grade = grade if i == culprit else int(rng.integers(0, grade + 1))
        length = float(rng.uniform(*config.patient_length))
        specs[name] = sample_spec(rng, artery_grade, config, length=length)
    return specs


def _write_patient(out_dir: Path, index: int, grade: int, seed: int, config: PhantomCorpusConfig) -> dict:
    rng = np.random.default_rng(seed)
    specs = sample_patient(rng, grade, config)
    truths = {name: truth_of(spec) for name, spec in specs.items()}
    patient_id = f"patient_{index:04d}"
    signals = f"{patient_id}.csv"
    write_patient_signals({name: cross_section_areas(t.field) for name, t in truths.items()}, out_dir / signals)
    artery_grades = [t.grade for t in truths.values()]
    return {
        "id": patient_id,
        "grade": max(artery_grades),
        "signals": signals,
        "arteries": list(truths),
        "artery_grades": artery_grades,
    }


def generate_patients(
    out_dir: str | Path,
    count: int,
    seed: int,
    config: PhantomCorpusConfig | None = None,
    *,
    threads: int = 1,
) -> pl.DataFrame:
    """
    Write a grading corpus: ``count`` patients as truth area signals, one
    CSV per patient, with their patient-level grades in the manifest.
    """
    config = config or PhantomCorpusConfig()
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(seed)
    grades = allocate_grades(count, config.grade_mix, rng)
    seeds = _child_seeds(seed, count)
    log.info(f"Generating {count} phantom patients into {out_dir}")

    with ThreadPoolExecutor(max_workers=max(threads, 1)) as pool:
        rows = list(pool.map(lambda i: _write_patient(out_dir, i, grades[i], seeds[i], config), range(count)))
    manifest = pl.DataFrame(
        rows,
        schema={
            "id": pl.Utf8,
            "grade": pl.Int64,
            "signals": pl.Utf8,
            "arteries": pl.List(pl.Utf8),
            "artery_grades": pl.List(pl.Int64),
        },
    )
    manifest.write_json(out_dir / MANIFEST_NAME)
    log.info(f"Grade distribution: {_distribution(manifest)}")
    return manifest

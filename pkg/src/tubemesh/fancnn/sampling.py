"""
Balanced patch sampling for FanCNN training.

A patch is a window of ``patch_slices`` slices centred on a slice that
shows the requested category. The artery is mirrored at its ends before
windowing, re-unwrapped about a jittered centerline and optionally flipped
in θ and z; the truth field follows every step.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from tubemesh.fancnn.config import CATEGORIES, FanCnnConfig, FanCnnTrainConfig
from tubemesh.geometry.recenter import ray_exit_distances, recenter_field
from tubemesh.geometry.types import CylindricalVolume, MprVolume, RadialField
from tubemesh.geometry.unwrap import unwrap
from tubemesh.nn.functional import symmetric_indices

log = logging.getLogger(__name__)


def slice_categories(field: RadialField) -> dict[str, np.ndarray]:
    """
    Slices showing each category: "none" for slices without any plaque
    vertex, otherwise slices holding at least one vertex of that class.
    """
    classes = field.plaque_class
    return {
        "none": np.flatnonzero((classes == 0).all(axis=0)),
        "CP": np.flatnonzero((classes == 1).any(axis=0)),
        "NCP": np.flatnonzero((classes == 2).any(axis=0)),
        "mixed": np.flatnonzero((classes == 3).any(axis=0)),
    }


class PatchCorpus:
    """Training arteries with, per category, every (artery, slice) site showing it."""

    def __init__(self, arteries: Sequence[tuple[MprVolume, RadialField]]):
        self.arteries = list(arteries)
        sites: dict[str, list[tuple[int, int]]] = {c: [] for c in CATEGORIES}
        for index, (mpr, field) in enumerate(self.arteries):
            if mpr.length != field.length:
                raise ValueError(f"artery {index}: volume has {mpr.length} slices, truth field {field.length}")
            for category, slices in slice_categories(field).items():
                sites[category].extend((index, int(z)) for z in slices)
        self.sites = {c: np.array(s, dtype=np.int64).reshape(-1, 2) for c, s in sites.items()}

    def __len__(self) -> int:
        return len(self.arteries)

    def counts(self) -> dict[str, int]:
        return {c: len(s) for c, s in self.sites.items()}

    def require_all_categories(self) -> None:
        missing = [c for c, s in self.sites.items() if len(s) == 0]
        if missing:
            raise ValueError(f"the training corpus has no slices of categories {missing}")


@dataclass(frozen=True)
class PatchBatch:
    inputs: np.ndarray
    radii: np.ndarray
    classes: np.ndarray


def window_indices(length: int, center: int, slices: int) -> np.ndarray:
    """Slice indices of a window centred on ``center``, mirrored past the ends."""
    half = slices // 2
    return symmetric_indices(length, half)[center : center + 2 * half + 1]


def field_window(field: RadialField, z_indices: np.ndarray) -> RadialField:
    return RadialField(
        r_l=field.r_l[:, z_indices],
        r_cp=field.r_cp[:, z_indices],
        r_ncp=field.r_ncp[:, z_indices],
        dz=field.dz,
    )


def flip_patch(
    cyl: CylindricalVolume, field: RadialField, *, theta: bool, z: bool
) -> tuple[CylindricalVolume, RadialField]:
    """
    Mirror a patch and its truth. A θ flip maps ray v to ray (−v) mod N_θ,
    a z flip reverses the slices.
    """
    samples = cyl.samples
    radii = [field.r_l, field.r_cp, field.r_ncp]
    if theta:
        order = (-np.arange(field.n_theta)) % field.n_theta
        samples = samples[order]
        radii = [r[order] for r in radii]
    if z:
        samples = samples[:, :, ::-1]
        radii = [r[:, ::-1] for r in radii]
    flipped = RadialField(r_l=radii[0], r_cp=radii[1], r_ncp=radii[2], dz=field.dz)
    return CylindricalVolume(samples=np.ascontiguousarray(samples), dr=cyl.dr), flipped


MAX_JITTER_DRAWS = 32


def lumen_contains(field: RadialField, origin: tuple[float, float]) -> bool:
    """Whether ``origin`` lies inside the lumen polygon of every open slice."""
    open_slices = (field.r_l > 0).any(axis=0)
    if not open_slices.any():
        return True
    exits = ray_exit_distances(field.r_l[:, open_slices], origin, np.zeros(1))
    return bool((exits > 0).all())


def draw_origin(field: RadialField, max_jitter: float, rng: np.random.Generator) -> tuple[float, float]:
    """
    Centerline shift drawn uniformly from the disc of radius ``max_jitter``.

    A draw whose origin falls outside the lumen of an open slice of the
    window is redrawn from the full disc. After ``MAX_JITTER_DRAWS`` misses
    the patch keeps the centerline.
    """
    if max_jitter <= 0:
        return (0.0, 0.0)
    for _ in range(MAX_JITTER_DRAWS):
        radius = max_jitter * np.sqrt(rng.random())
        angle = 2.0 * np.pi * rng.random()
        origin = (float(radius * np.cos(angle)), float(radius * np.sin(angle)))
        if lumen_contains(field, origin):
            return origin
    log.debug(f"No jittered origin inside the lumen after {MAX_JITTER_DRAWS} draws, keeping the centerline")
    return (0.0, 0.0)


def sample_patch(
    corpus: PatchCorpus,
    category: str,
    rng: np.random.Generator,
    model: FanCnnConfig,
    train: FanCnnTrainConfig,
) -> tuple[CylindricalVolume, RadialField]:
    """
    Draw one augmented training patch whose central slice shows ``category``.

    Raises
    ------
    ValueError
        If the corpus holds no slice of ``category``.
    """
    sites = corpus.sites.get(category)
    if sites is None:
        raise ValueError(f"unknown category '{category}', expected one of {CATEGORIES}")
    if len(sites) == 0:
        raise ValueError(f"no '{category}' slices in the training corpus")
    artery, center = sites[rng.integers(len(sites))]
    mpr, field = corpus.arteries[artery]
    z_indices = window_indices(field.length, int(center), train.patch_slices)
    window = field_window(field, z_indices)

    origin = draw_origin(window, train.max_jitter, rng)
    flip_theta = rng.random() < train.flip_probability
    flip_z = rng.random() < train.flip_probability

    cyl = unwrap(mpr, model.n_theta, model.n_radius, model.dr, origin=origin, z_indices=z_indices)
    target = recenter_field(window, origin)
    return flip_patch(cyl, target, theta=flip_theta, z=flip_z)


def balanced_categories(batch_size: int, rng: np.random.Generator) -> list[str]:
    """An equal share of every category in random order."""
    share = batch_size // len(CATEGORIES)
    order = rng.permutation(np.repeat(np.arange(len(CATEGORIES)), share))
    return [CATEGORIES[i] for i in order]


def sample_batch(
    corpus: PatchCorpus,
    rng: np.random.Generator,
    model: FanCnnConfig,
    train: FanCnnTrainConfig,
) -> PatchBatch:
    inputs, radii, classes = [], [], []
    for category in balanced_categories(train.batch_size, rng):
        cyl, target = sample_patch(corpus, category, rng, model, train)
        inputs.append(cyl.samples)
        radii.append(np.stack([target.r_l, target.r_cp, target.r_ncp]))
        classes.append(target.plaque_class)
    return PatchBatch(
        inputs=np.stack(inputs)[:, None],
        radii=np.stack(radii),
        classes=np.stack(classes),
    )

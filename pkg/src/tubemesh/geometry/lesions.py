import logging
from dataclasses import dataclass
from typing import Literal

import numpy as np
from scipy import ndimage

from tubemesh.geometry.types import RadialField
from tubemesh.geometry.voxelize import DEFAULT_SPACING, voxelize

log = logging.getLogger(__name__)

PlaqueKind = Literal["CP", "NCP", "total"]

LESION_MIN_RADIUS = 0.15


@dataclass(frozen=True)
class Lesion:
    plaque: str
    vertices: frozenset[tuple[int, int]]
    volume: float

    @property
    def z_span(self) -> tuple[int, int]:
        zs = [z for _, z in self.vertices]
        return min(zs), max(zs)

    def overlaps(self, other: "Lesion") -> bool:
        return not self.vertices.isdisjoint(other.vertices)


def plaque_radius(field: RadialField, plaque: PlaqueKind) -> np.ndarray:
    if plaque == "CP":
        return field.r_cp
    if plaque == "NCP":
        return field.r_ncp
    if plaque == "total":
        return field.r_cp + field.r_ncp
    raise ValueError(f"unknown plaque kind '{plaque}', expected CP, NCP or total")


def label_components(mask: np.ndarray) -> tuple[np.ndarray, int]:
    """
    4-connected components of a boolean (θ, z) mask where θ wraps around.

    Returns
    -------
    tuple[np.ndarray, int]
        Component ids (0 = background, 1..n consecutive) and the count n.
    """
    labels, count = ndimage.label(mask)
    if count == 0 or mask.shape[0] < 2:
        return labels, count

    parent = list(range(count + 1))

    def find(i: int) -> int:
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    # join components touching across the θ seam
    first, last = labels[0], labels[-1]
    for a, b in zip(first, last):
        if a and b:
            ra, rb = find(int(a)), find(int(b))
            if ra != rb:
                parent[max(ra, rb)] = min(ra, rb)

    roots = np.array([find(i) for i in range(count + 1)])
    unique_roots = np.unique(roots[1:])
    remap = np.zeros(count + 1, dtype=np.int64)
    for new_id, root in enumerate(unique_roots, start=1):
        remap[roots == root] = new_id
    remap[0] = 0
    return remap[labels], len(unique_roots)


def _component_volume(
    field: RadialField,
    plaque: PlaqueKind,
    member: np.ndarray,
    spacing: tuple[float, float, float],
) -> float:
    zs = np.flatnonzero(member.any(axis=0))
    restricted = field.with_radii(
        r_cp=np.where(member, field.r_cp, 0.0) if plaque in ("CP", "total") else np.zeros_like(field.r_cp),
        r_ncp=np.where(member, field.r_ncp, 0.0) if plaque in ("NCP", "total") else np.zeros_like(field.r_ncp),
    )
    vox = voxelize(restricted, spacing, z_range=(int(zs.min()) - 1, int(zs.max()) + 2))
    volumes = vox.volumes
    return volumes["cp"] if plaque == "CP" else volumes["ncp"] if plaque == "NCP" else volumes["total"]


def extract_lesions(
    field: RadialField,
    plaque: PlaqueKind = "total",
    min_radius: float = LESION_MIN_RADIUS,
    spacing: tuple[float, float, float] = DEFAULT_SPACING,
) -> list[Lesion]:
    """
    Connected plaque lesions of one artery.

    Vertices whose plaque radius exceeds ``min_radius`` are grouped into
    4-connected components on the (θ, z) grid with θ wraparound; each lesion
    carries its vertex set and the voxelized plaque volume of its radii.
    """
    radius = plaque_radius(field, plaque)
    labels, count = label_components(radius > min_radius)
    lesions = []
    for component in range(1, count + 1):
        member = labels == component
        vs, zs = np.nonzero(member)
        vertices = frozenset(zip(vs.tolist(), zs.tolist()))
        volume = _component_volume(field, plaque, member, spacing)
        lesions.append(Lesion(plaque=plaque, vertices=vertices, volume=volume))
    log.debug(f"Found {len(lesions)} {plaque} lesions above {min_radius} mm")
    return lesions

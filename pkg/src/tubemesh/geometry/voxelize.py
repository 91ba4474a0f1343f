import logging
from dataclasses import dataclass

import numpy as np

from tubemesh.geometry.areas import fan_area
from tubemesh.geometry.types import LABEL_BACKGROUND, LABEL_CP, LABEL_LUMEN, LABEL_NCP, RadialField

log = logging.getLogger(__name__)

DEFAULT_SPACING = (0.1, 0.1, 0.5)


@dataclass(frozen=True)
class Voxelization:
    labels: np.ndarray
    spacing: tuple[float, float, float]
    z_offset: float

    @property
    def voxel_volume(self) -> float:
        return float(np.prod(self.spacing))

    def volume(self, label: int) -> float:
        return float(np.count_nonzero(self.labels == label)) * self.voxel_volume

    @property
    def volumes(self) -> dict[str, float]:
        cp = self.volume(LABEL_CP)
        ncp = self.volume(LABEL_NCP)
        return {"lumen": self.volume(LABEL_LUMEN), "cp": cp, "ncp": ncp, "total": cp + ncp}

    def mask(self, *labels: int) -> np.ndarray:
        return np.isin(self.labels, labels)


def _ray_weights(phi: np.ndarray, n_theta: int):
    """Bracketing ray indices and the angle past the lower ray."""
    delta = 2.0 * np.pi / n_theta
    position = np.mod(phi, 2.0 * np.pi) / delta
    v0 = np.floor(position).astype(np.int64) % n_theta
    v1 = (v0 + 1) % n_theta
    alpha = (position - np.floor(position)) * delta
    return v0, v1, alpha, delta


def chord_boundary(r0: np.ndarray, r1: np.ndarray, alpha: np.ndarray, delta: float) -> np.ndarray:
    """
    Radius at angle ``alpha`` past ray 0 of the straight edge joining the
    vertices ``r0`` (on ray 0) and ``r1`` (on ray 1).
    """
    denom = r0 * np.sin(alpha) + r1 * np.sin(delta - alpha)
    safe = np.where(denom > 0, denom, 1.0)
    return np.where(denom > 0, r0 * r1 * np.sin(delta) / safe, 0.0)


def label_polar(
    rho: np.ndarray,
    phi: np.ndarray,
    r_l: np.ndarray,
    r_lumen_ncp: np.ndarray,
    r_outer: np.ndarray,
) -> np.ndarray:
    """
    Tissue label of points given in polar coordinates about the centerline.

    The boundary arrays are indexed ``[v, ...]`` by ray and broadcast against
    the points along the remaining axes; a point is inside a shell when its
    radius is strictly below the chord boundary.
    """
    n_theta = r_l.shape[0]
    v0, v1, alpha, delta = _ray_weights(phi, n_theta)

    def boundary(radii):
        if radii.ndim == 1:
            return chord_boundary(radii[v0], radii[v1], alpha, delta)
        r0 = np.take_along_axis(radii, v0, axis=0)
        r1 = np.take_along_axis(radii, v1, axis=0)
        return chord_boundary(r0, r1, alpha, delta)

    labels = np.full(rho.shape, LABEL_BACKGROUND, dtype=np.uint8)
    labels[rho < boundary(r_outer)] = LABEL_CP
    labels[rho < boundary(r_lumen_ncp)] = LABEL_NCP
    labels[rho < boundary(r_l)] = LABEL_LUMEN
    return labels


def label_slice(field: RadialField, z_index: int, x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Labels of in-plane points (mm about the centerline) in one field slice."""
    rho = np.hypot(x, y)
    phi = np.arctan2(y, x)
    return label_polar(
        rho,
        phi,
        field.r_l[:, z_index],
        field.lumen_ncp[:, z_index],
        field.outer[:, z_index],
    )


def voxelize(
    field: RadialField,
    spacing: tuple[float, float, float] = DEFAULT_SPACING,
    *,
    half_extent: float = 6.4,
    z_range: tuple[int, int] | None = None,
) -> Voxelization:
    """
    Label a regular voxel grid from the nested radial surfaces.

    Parameters
    ----------
    field : RadialField
        Radii on the (θ, z) grid; slice ``z`` sits at ``z * field.dz`` mm.
    spacing : tuple[float, float, float], optional
        Voxel size in mm (x, y, z), by default 0.1 × 0.1 × 0.5.
    half_extent : float, optional
        In-plane half width of the grid in mm, by default 6.4.
    z_range : tuple[int, int] | None, optional
        Field slices ``[start, stop)`` to cover, by default all. Each slice
        owns the slab ``[(z - ½) dz, (z + ½) dz)``.

    Returns
    -------
    Voxelization
        Mutually exclusive labels (background, lumen, CP, NCP) and volumes.

    Notes
    -----
    Boundaries between rays are the straight polygon edges and are linear
    in z between slices, so the voxel volume converges to the prismatic
    volume of the triangle-fan areas as the spacing shrinks.
    """
    sx, sy, sz = spacing
    if min(spacing) <= 0:
        raise ValueError(f"voxel spacing must be positive, got {spacing}")
    start, stop = z_range if z_range is not None else (0, field.length)
    start, stop = max(start, 0), min(stop, field.length)

    nx = int(round(2 * half_extent / sx))
    ny = int(round(2 * half_extent / sy))
    x = (np.arange(nx) + 0.5) * sx - half_extent
    y = (np.arange(ny) + 0.5) * sy - half_extent
    gx, gy = np.meshgrid(x, y, indexing="ij")
    rho = np.hypot(gx, gy)
    phi = np.arctan2(gy, gx)

    z_low = (start - 0.5) * field.dz
    nz = max(int(round((stop - start) * field.dz / sz)), 0)
    z_mm = z_low + (np.arange(nz) + 0.5) * sz
    t = np.clip(z_mm / field.dz, 0.0, field.length - 1)
    z0 = np.minimum(np.floor(t).astype(np.int64), field.length - 1)
    z1 = np.minimum(z0 + 1, field.length - 1)
    w = t - z0

    shells = (field.r_l, field.lumen_ncp, field.outer)
    labels = np.zeros((nx, ny, nz), dtype=np.uint8)
    for k in range(nz):
        bounds = [(1.0 - w[k]) * s[:, z0[k]] + w[k] * s[:, z1[k]] for s in shells]
        labels[:, :, k] = label_polar(rho, phi, *bounds)
    return Voxelization(labels=labels, spacing=(sx, sy, sz), z_offset=z_low)


def prismatic_volume(field: RadialField) -> float:
    """Σ_z a_outer(z) · dz, the volume voxelization converges to."""
    return float(fan_area(field.outer).sum() * field.dz)

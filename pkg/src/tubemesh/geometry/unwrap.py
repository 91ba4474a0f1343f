import logging

import numpy as np
from scipy.ndimage import map_coordinates

from tubemesh.geometry.types import CylindricalVolume, MprVolume, theta_angles

log = logging.getLogger(__name__)


def unwrap(
    mpr: MprVolume,
    n_theta: int = 16,
    n_radius: int = 32,
    dr: float = 0.2,
    *,
    origin: tuple[float, float] = (0.0, 0.0),
    z_indices: np.ndarray | None = None,
) -> CylindricalVolume:
    """
    Resample an MPR volume along equiangular rays cast from the centerline.

    Parameters
    ----------
    mpr : MprVolume
        Straightened artery volume.
    n_theta : int, optional
        Number of rays per slice, by default 16.
    n_radius : int, optional
        Samples per ray, by default 32; sample k lies at radius ``k * dr``.
    dr : float, optional
        Radial step in mm, by default 0.2.
    origin : tuple[float, float], optional
        In-plane offset (mm) of the ray origin from the centerline, used to
        jitter the centerline during training, by default (0, 0). Samples
        pushed past the volume edge by the offset take the nearest edge value.
    z_indices : np.ndarray | None, optional
        Slices to unwrap, in output order (may repeat slices to mirror-pad),
        by default every slice.

    Returns
    -------
    CylindricalVolume
        Samples of shape ``(n_theta, n_radius, len(z_indices))``; each value is
        the bilinear interpolation of its slice at the polar sample point.

    Raises
    ------
    ValueError
        If the farthest sample would leave the in-plane extent of the volume.
    """
    if n_theta < 1 or n_radius < 1 or dr <= 0:
        raise ValueError(f"invalid ray grid: n_theta={n_theta}, n_radius={n_radius}, dr={dr}")
    reach = (n_radius - 1) * dr
    if reach > mpr.half_extent + 1e-9:
        raise ValueError(
            f"maximum sampled radius {reach:.3f} mm exceeds the MPR in-plane extent "
            f"{mpr.half_extent:.3f} mm"
        )
    if z_indices is None:
        z_indices = np.arange(mpr.length)
    z_indices = np.asarray(z_indices, dtype=np.int64)
    if z_indices.size and (z_indices.min() < 0 or z_indices.max() >= mpr.length):
        raise ValueError(f"z_indices must lie in [0, {mpr.length - 1}]")

    angles = theta_angles(n_theta)
    radii = np.arange(n_radius) * dr
    px = origin[0] + radii[None, :] * np.cos(angles)[:, None]
    py = origin[1] + radii[None, :] * np.sin(angles)[:, None]
    c = mpr.center_index
    xi = np.broadcast_to((c + px / mpr.in_plane_spacing)[:, :, None], (n_theta, n_radius, z_indices.size))
    yi = np.broadcast_to((c + py / mpr.in_plane_spacing)[:, :, None], xi.shape)
    zi = np.broadcast_to(z_indices[None, None, :].astype(np.float64), xi.shape)
    samples = map_coordinates(mpr.voxels.astype(np.float64), [xi, yi, zi], order=1, mode="nearest")
    return CylindricalVolume(samples=samples, dr=dr)


def recover_lumen_radii(cyl: CylindricalVolume, threshold: float) -> np.ndarray:
    """
    Lumen radius per ray from the first crossing of ``threshold`` along the
    intensity profile, refined by linear interpolation between samples.

    Rays that never cross return the last sampled radius.
    """
    profiles = cyl.samples
    below = profiles < threshold
    # first sample index past the lumen (k >= 1)
    below[:, 0, :] = False
    crossed = below.any(axis=1)
    k = np.where(crossed, below.argmax(axis=1), cyl.n_radius - 1)
    k = np.clip(k, 1, cyl.n_radius - 1)
    inner = np.take_along_axis(profiles, (k - 1)[:, None, :], axis=1)[:, 0, :]
    outer = np.take_along_axis(profiles, k[:, None, :], axis=1)[:, 0, :]
    denom = np.where(inner != outer, inner - outer, 1.0)
    frac = np.clip((inner - threshold) / denom, 0.0, 1.0)
    radius = (k - 1 + frac) * cyl.dr
    return np.where(crossed, radius, (cyl.n_radius - 1) * cyl.dr)

import numpy as np

from tubemesh.geometry.types import RadialField, theta_angles
from tubemesh.geometry.voxelize import _ray_weights, chord_boundary


def ray_exit_distances(
    radii: np.ndarray,
    origin: tuple[float, float],
    angles: np.ndarray,
    *,
    step: float = 0.05,
    iterations: int = 40,
) -> np.ndarray:
    """
    Distance from ``origin`` along each direction in ``angles`` to the first
    point where the ray leaves the star polygon of every slice of ``radii``.

    The crossing is bracketed on a grid of ``step`` mm and refined by
    bisection. Rays whose origin lies outside the polygon get 0.

    Returns
    -------
    np.ndarray
        Shape ``(len(angles), L)``.
    """
    radii = np.asarray(radii, dtype=np.float64)
    ox, oy = origin
    n_theta, length = radii.shape
    ux = np.cos(angles)[None, :, None]
    uy = np.sin(angles)[None, :, None]
    slices = np.arange(length)[None, None, :]

    def inside(distance: np.ndarray) -> np.ndarray:
        # distance broadcasts against (K, rays, L)
        px = ox + distance * ux
        py = oy + distance * uy
        v0, v1, alpha, delta = _ray_weights(np.arctan2(py, px), n_theta)
        return np.hypot(px, py) < chord_boundary(radii[v0, slices], radii[v1, slices], alpha, delta)

    reach = float(radii.max(initial=0.0)) + np.hypot(ox, oy) + 2 * step
    grid = np.arange(int(np.ceil(reach / step)) + 1) * step
    on_grid = inside(grid[:, None, None])
    exits = np.argmax(~on_grid, axis=0)
    lo = grid[np.maximum(exits - 1, 0)][None]
    hi = grid[exits][None]
    for _ in range(iterations):
        mid = 0.5 * (lo + hi)
        keep = inside(mid)
        lo = np.where(keep, mid, lo)
        hi = np.where(keep, hi, mid)
    return np.where(on_grid[0], lo[0], 0.0)


def recenter_field(field: RadialField, origin: tuple[float, float]) -> RadialField:
    """
    Radial field of the same nested surfaces seen from rays cast at
    ``origin`` (mm, in-plane) instead of the centerline.

    Shell thicknesses are differences of consecutive exit distances, so a
    ray that starts inside plaque gets a zero lumen radius.
    """
    if origin[0] == 0.0 and origin[1] == 0.0:
        return field
    angles = theta_angles(field.n_theta)
    t_l, t_n, t_o = (ray_exit_distances(r, origin, angles) for r in (field.r_l, field.lumen_ncp, field.outer))
    r_ncp = np.maximum(t_n - t_l, 0.0)
    r_cp = np.maximum(t_o - t_n, 0.0)
    return RadialField(
        r_l=t_l,
        r_cp=np.where(r_cp < 1e-9, 0.0, r_cp),
        r_ncp=np.where(r_ncp < 1e-9, 0.0, r_ncp),
        dz=field.dz,
    )

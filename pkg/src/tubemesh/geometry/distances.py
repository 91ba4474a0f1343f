import numpy as np
from scipy.spatial import cKDTree

from tubemesh.geometry.types import SurfaceMesh


def _directed_distances(source: np.ndarray, target: np.ndarray) -> np.ndarray:
    distances, _ = cKDTree(target).query(source, k=1)
    return distances


def surface_metrics(
    a: SurfaceMesh,
    b: SurfaceMesh,
    samples_per_face: int = 8,
    *,
    exclude_ends: bool = False,
) -> tuple[float, float]:
    """
    Symmetric mean surface distance and Hausdorff distance between meshes.

    Both surfaces are sampled on a barycentric grid and every sample is
    matched to the nearest sample of the other surface.

    Parameters
    ----------
    a, b : SurfaceMesh
        Non-empty meshes in the same frame.
    samples_per_face : int, optional
        Grid steps per triangle edge, by default 8.
    exclude_ends : bool, optional
        Drop samples in the first and last slice interval of each tube, by
        default False.

    Returns
    -------
    tuple[float, float]
        ``(MSD, HD)`` in mm.
    """
    if len(a.faces) == 0 or len(b.faces) == 0:
        raise ValueError("surface metrics need two non-empty meshes")
    pa = a.sample_points(samples_per_face)
    pb = b.sample_points(samples_per_face)
    if exclude_ends:
        pa = _trim_ends(pa, a)
        pb = _trim_ends(pb, b)
    ab = _directed_distances(pa, pb)
    ba = _directed_distances(pb, pa)
    msd = 0.5 * (ab.mean() + ba.mean())
    hd = max(ab.max(), ba.max())
    return float(msd), float(hd)


def _trim_ends(points: np.ndarray, mesh: SurfaceMesh) -> np.ndarray:
    z = np.unique(np.round(mesh.vertices[:, 2], 9))
    if len(z) < 3:
        return points
    keep = (points[:, 2] >= z[1] - 1e-9) & (points[:, 2] <= z[-2] + 1e-9)
    return points[keep]


def dice(mask_a: np.ndarray, mask_b: np.ndarray) -> float:
    """
    Dice similarity ``2|A∩B| / (|A| + |B|)`` of two boolean masks.

    Two empty masks score 1, one empty mask scores 0.
    """
    mask_a = np.asarray(mask_a, dtype=bool)
    mask_b = np.asarray(mask_b, dtype=bool)
    if mask_a.shape != mask_b.shape:
        raise ValueError(f"mask shapes differ: {mask_a.shape} vs {mask_b.shape}")
    total = int(mask_a.sum()) + int(mask_b.sum())
    if total == 0:
        return 1.0
    return 2.0 * int(np.logical_and(mask_a, mask_b).sum()) / total

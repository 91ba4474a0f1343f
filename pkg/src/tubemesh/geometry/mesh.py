import numpy as np

from tubemesh.geometry.types import RadialField, SurfaceMesh, theta_angles


def tube_faces(n_theta: int, length: int) -> np.ndarray:
    """
    Triangles joining consecutive rings of an uncapped tube with vertex index
    ``z * n_theta + v``; θ wraps and every quad is split along the same
    diagonal, so interior vertices have degree 6. Normals point outward.
    """
    v = np.arange(n_theta)
    v_next = (v + 1) % n_theta
    faces = []
    for z in range(length - 1):
        a = z * n_theta + v
        b = z * n_theta + v_next
        c = (z + 1) * n_theta + v_next
        d = (z + 1) * n_theta + v
        faces.append(np.stack([a, b, c], axis=1))
        faces.append(np.stack([a, c, d], axis=1))
    return np.concatenate(faces, axis=0) if faces else np.zeros((0, 3), dtype=np.int64)


def tube_mesh(radii: np.ndarray, dz: float) -> SurfaceMesh:
    """Surface through the vertices at ``radii[v, z]`` on ray ``v`` of slice ``z``."""
    radii = np.asarray(radii, dtype=np.float64)
    if (radii < 0).any():
        raise ValueError(f"negative radius in mesh input (min {radii.min():.4g} mm)")
    n_theta, length = radii.shape
    if length < 2:
        raise ValueError(f"a tube mesh needs at least 2 slices, got L={length}")
    angles = theta_angles(n_theta)
    x = radii * np.cos(angles)[:, None]
    y = radii * np.sin(angles)[:, None]
    z = np.broadcast_to(np.arange(length) * dz, radii.shape)
    # vertex order: slice-major, ray-minor
    vertices = np.stack([x.T.ravel(), y.T.ravel(), z.T.ravel()], axis=1)
    return SurfaceMesh(vertices=vertices, faces=tube_faces(n_theta, length))


def build_meshes(field: RadialField) -> tuple[SurfaceMesh, SurfaceMesh]:
    """
    Lumen and outer-wall meshes of a radial field.

    Returns
    -------
    tuple[SurfaceMesh, SurfaceMesh]
        ``(lumen, outer)`` where the outer wall sits at ``r_l + r_cp + r_ncp``.
    """
    return tube_mesh(field.r_l, field.dz), tube_mesh(field.outer, field.dz)


def build_mesh_stack(field: RadialField) -> dict[str, SurfaceMesh]:
    """All three nested surfaces: lumen, lumen + NCP and the outer wall."""
    return {
        "lumen": tube_mesh(field.r_l, field.dz),
        "lumen_ncp": tube_mesh(field.lumen_ncp, field.dz),
        "outer": tube_mesh(field.outer, field.dz),
    }

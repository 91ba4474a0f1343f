import numpy as np

from tubemesh.geometry.types import AreaSignalSet, RadialField, theta_angles


def fan_area(radii: np.ndarray) -> np.ndarray:
    """
    Enclosed area of the star polygon whose vertices sit at ``radii[v]`` on
    equiangular rays, by triangulating every consecutive vertex pair with the
    centerline: ``A = ½ Σ_v ρ_v ρ_{v+1} sin(2π/N_θ)``.

    ``radii`` has shape ``(N_θ, ...)``; the result drops the first axis.
    """
    radii = np.asarray(radii, dtype=np.float64)
    n_theta = radii.shape[0]
    return 0.5 * np.sin(2.0 * np.pi / n_theta) * (radii * np.roll(radii, -1, axis=0)).sum(axis=0)


def shoelace_area(radii: np.ndarray) -> float:
    """Shoelace area of the explicit Cartesian polygon for one slice of radii."""
    angles = theta_angles(len(radii))
    x = radii * np.cos(angles)
    y = radii * np.sin(angles)
    return 0.5 * abs(float(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1))))


def cross_section_areas(field: RadialField) -> AreaSignalSet:
    """
    Per-slice lumen, CP and NCP areas.

    Areas up to the lumen, the NCP shell and the outer wall are computed with
    the triangle fan and then decomposed by subtraction, so
    ``a_l + a_cp + a_ncp`` equals the outer-wall area.
    """
    a_lumen = fan_area(field.r_l)
    a_lumen_ncp = fan_area(field.lumen_ncp)
    a_outer = fan_area(field.outer)
    return AreaSignalSet(
        a_l=a_lumen,
        a_cp=a_outer - a_lumen_ncp,
        a_ncp=a_lumen_ncp - a_lumen,
        dz=field.dz,
    )


def polygon_deficit(n_theta: int) -> float:
    """Ratio of a regular N-gon's area to its circumscribed circle's."""
    return 0.5 * n_theta * np.sin(2.0 * np.pi / n_theta) / np.pi

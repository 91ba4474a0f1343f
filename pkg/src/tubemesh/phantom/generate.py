import logging

import numpy as np

from tubemesh.geometry.areas import fan_area
from tubemesh.geometry.types import (
    LABEL_BACKGROUND,
    LABEL_CP,
    LABEL_LUMEN,
    LABEL_NCP,
    MprVolume,
    RadialField,
    theta_angles,
)
from tubemesh.geometry.voxelize import label_polar
from tubemesh.phantom.grading import stenosis_profile, stenosis_to_grade
from tubemesh.phantom.spec import (
    MAX_OUTER_RADIUS,
    MIN_LUMEN_RADIUS,
    LesionSpec,
    PhantomSpec,
    PhantomTruth,
)

log = logging.getLogger(__name__)


def narrowing_depth(radius: float, profile: np.ndarray, stenosis: float) -> float:
    """
    Peak radial intrusion ``d`` such that the polygon with vertices
    ``radius − d · profile[v]`` loses ``stenosis`` of the area of the
    regular polygon of ``radius``.

    The fan area is quadratic in ``d``; the smaller root is returned.

    Raises
    ------
    ValueError
        If no intrusion with this angular profile removes that much area.
    """
    if stenosis <= 0.0:
        return 0.0
    g = np.asarray(profile, dtype=np.float64)
    g_next = np.roll(g, -1)
    c0 = g.size * radius**2
    c1 = radius * float((g + g_next).sum())
    c2 = float((g * g_next).sum())
    if c1 <= 0.0:
        raise ValueError("lesion arc covers no ray; it cannot narrow the lumen")
    if c2 == 0.0:
        depth = c0 * stenosis / c1
    else:
        disc = c1**2 - 4.0 * c2 * c0 * stenosis
        if disc < 0.0:
            raise ValueError(
                f"a {stenosis:.0%} stenosis is not reachable over this lesion arc; widen the arc"
            )
        depth = (c1 - np.sqrt(disc)) / (2.0 * c2)
    if depth > radius + 1e-12:
        raise ValueError(
            f"a {stenosis:.0%} stenosis needs an intrusion of {depth:.3f} mm into a {radius:.3f} mm lumen"
        )
    return float(depth)


def _add_plaque(lesion: LesionSpec, plaque: np.ndarray, r_ncp: np.ndarray, r_cp: np.ndarray) -> None:
    if lesion.kind == "CP":
        r_cp += plaque
    elif lesion.kind == "NCP":
        r_ncp += plaque
    else:
        r_ncp += lesion.ncp_fraction * plaque
        r_cp += (1.0 - lesion.ncp_fraction) * plaque


def analytic_field(spec: PhantomSpec, n_theta: int | None = None) -> tuple[RadialField, np.ndarray]:
    """
    Sample the generator's radial geometry on an ``n_theta`` × L grid.

    Returns the field and the per-slice occlusion mask.

    Raises
    ------
    ValueError
        If the lumen falls below 0.3 mm outside an occluded lesion or the
        outer wall reaches 6.2 mm.
    """
    n_theta = spec.n_theta if n_theta is None else n_theta
    theta = theta_angles(n_theta)
    z = spec.z
    r_ref = spec.reference_radius()

    r_l = np.tile(r_ref, (n_theta, 1))
    r_ncp = np.zeros_like(r_l)
    r_cp = np.zeros_like(r_l)
    occluded = np.zeros(z.size, dtype=bool)
    exempt = np.zeros(z.size, dtype=bool)

    for lesion in spec.lesions:
        g = lesion.theta_profile(theta)
        b = lesion.z_profile(z)
        if lesion.occlusion_length > 0:
            lost = np.tile(r_ref * b, (n_theta, 1))
            core = lesion.occluded(z)
            lost[:, core] = r_l[:, core]
            occluded |= core
            exempt |= b > 0
        else:
            center = int(np.argmin(np.abs(z - lesion.z_center)))
            depth = narrowing_depth(float(r_ref[center]), g, lesion.stenosis)
            lost = depth * np.outer(g, b)
        lost = np.minimum(lost, r_l)
        r_l -= lost
        _add_plaque(lesion, lost + lesion.thickness * np.outer(g, b), r_ncp, r_cp)

    r_l = np.where(r_l < 1e-12, 0.0, r_l)
    field = RadialField(r_l=r_l, r_cp=r_cp, r_ncp=r_ncp, dz=spec.dz)

    open_slices = ~exempt
    if open_slices.any() and field.r_l[:, open_slices].min() < MIN_LUMEN_RADIUS:
        raise ValueError(
            f"lumen radius falls to {field.r_l[:, open_slices].min():.3f} mm, "
            f"below {MIN_LUMEN_RADIUS} mm outside an occlusion"
        )
    if field.outer.max() >= MAX_OUTER_RADIUS:
        raise ValueError(f"outer wall reaches {field.outer.max():.3f} mm, must stay below {MAX_OUTER_RADIUS} mm")
    return field, occluded


def truth_of(spec: PhantomSpec) -> PhantomTruth:
    field, occluded = analytic_field(spec)
    r_ref = spec.reference_radius()
    stenosis = stenosis_profile(field, r_ref)
    return PhantomTruth(
        field=field,
        reference_radius=r_ref,
        stenosis=stenosis,
        grade=stenosis_to_grade(float(stenosis.max())),
        occluded=occluded,
    )


def paint(field: RadialField, spec: PhantomSpec, hu: dict[str, float]) -> np.ndarray:
    """Noise-free HU volume: each voxel center takes the value of its region."""
    n = int(round(spec.fov / spec.in_plane_spacing))
    coords = (np.arange(n) - (n - 1) / 2.0) * spec.in_plane_spacing
    gx, gy = np.meshgrid(coords, coords, indexing="ij")
    rho = np.hypot(gx, gy)
    phi = np.arctan2(gy, gx)

    lut = np.zeros(4)
    lut[LABEL_BACKGROUND] = hu["background"]
    lut[LABEL_LUMEN] = hu["lumen"]
    lut[LABEL_CP] = hu["cp"]
    lut[LABEL_NCP] = hu["ncp"]

    voxels = np.empty((n, n, field.length), dtype=np.float64)
    for k in range(field.length):
        outer = field.outer[:, k]
        labels = label_polar(rho, phi, field.r_l[:, k], field.lumen_ncp[:, k], outer)
        plane = lut[labels]
        if spec.wall_thickness > 0:
            shell = outer + spec.wall_thickness
            wall = (labels == LABEL_BACKGROUND) & (label_polar(rho, phi, shell, shell, shell) != LABEL_BACKGROUND)
            plane[wall] = hu["wall"]
        voxels[:, :, k] = plane
    return voxels


def generate(spec: PhantomSpec) -> tuple[MprVolume, PhantomTruth]:
    """
    Render a straightened vessel phantom and its exact truth.

    Regions follow the same chord boundaries as ``geometry.voxelize``; each
    phantom draws its tissue means from the palette spreads and then adds
    Gaussian voxel noise, all from one generator seeded by ``spec.seed``.
    """
    truth = truth_of(spec)
    rng = np.random.default_rng(spec.seed)
    hu = spec.palette.draw(rng)
    voxels = paint(truth.field, spec, hu)
    if spec.noise_sigma > 0:
        voxels += rng.normal(0.0, spec.noise_sigma, size=voxels.shape)
    log.debug(
        f"phantom seed={spec.seed}: {truth.field.length} slices, {len(spec.lesions)} lesions, "
        f"max stenosis {truth.stenosis.max():.1f}%, grade {truth.grade}"
    )
    mpr = MprVolume(
        voxels=voxels.astype(np.float32),
        in_plane_spacing=spec.in_plane_spacing,
        through_plane_spacing=spec.dz,
    )
    return mpr, truth


def lumen_area_ratio(spec: PhantomSpec, dense_theta: int = 4096) -> np.ndarray:
    """Per-slice fan lumen area at ``spec.n_theta`` over a dense-ray reference."""
    coarse, _ = analytic_field(spec)
    dense, _ = analytic_field(spec, n_theta=dense_theta)
    return fan_area(coarse.r_l) / np.maximum(fan_area(dense.r_l), 1e-300)

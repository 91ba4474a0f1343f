from .areas import cross_section_areas, fan_area, polygon_deficit, shoelace_area
from .distances import dice, surface_metrics
from .lesions import LESION_MIN_RADIUS, Lesion, extract_lesions, label_components, plaque_radius
from .mesh import build_mesh_stack, build_meshes, tube_mesh
from .recenter import ray_exit_distances, recenter_field
from .types import (
    CLASS_CP,
    CLASS_MIXED,
    CLASS_NCP,
    CLASS_NONE,
    LABEL_BACKGROUND,
    LABEL_CP,
    LABEL_LUMEN,
    LABEL_NCP,
    AreaSignalSet,
    CylindricalVolume,
    MprVolume,
    RadialField,
    SurfaceMesh,
    class_from_radii,
    theta_angles,
)
from .unwrap import recover_lumen_radii, unwrap
from .voxelize import Voxelization, label_polar, label_slice, prismatic_volume, voxelize

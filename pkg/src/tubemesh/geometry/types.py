from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from tubemesh.errors import ShapeError

CLASS_NONE = 0
CLASS_CP = 1
CLASS_NCP = 2
CLASS_MIXED = 3
CLASS_NAMES = ("none", "CP", "NCP", "mixed")

LABEL_BACKGROUND = 0
LABEL_LUMEN = 1
LABEL_CP = 2
LABEL_NCP = 3


def theta_angles(n_theta: int) -> np.ndarray:
    """Ray angles θ^v = 2πv/N_θ."""
    return 2.0 * np.pi * np.arange(n_theta) / n_theta


def class_from_radii(r_cp: np.ndarray, r_ncp: np.ndarray, threshold: float = 0.0) -> np.ndarray:
    """none / CP / NCP / mixed from which plaque radii exceed ``threshold``."""
    return (np.asarray(r_cp) > threshold).astype(np.int64) + 2 * (
        np.asarray(r_ncp) > threshold
    ).astype(np.int64)


@dataclass(frozen=True)
class MprVolume:
    """
    Straightened artery volume; the centerline passes through the in-plane
    center of every slice.
    """

    voxels: np.ndarray
    in_plane_spacing: float = 0.1
    through_plane_spacing: float = 0.5

    def __post_init__(self):
        if self.voxels.ndim != 3:
            raise ShapeError(f"MPR voxels must be (X, Y, L), got shape {self.voxels.shape}")
        if self.voxels.shape[0] != self.voxels.shape[1]:
            raise ShapeError(
                f"MPR slices must be square, got X={self.voxels.shape[0]} Y={self.voxels.shape[1]}"
            )
        if self.in_plane_spacing <= 0 or self.through_plane_spacing <= 0:
            raise ValueError("MPR spacings must be positive")

    @property
    def length(self) -> int:
        return self.voxels.shape[2]

    @property
    def center_index(self) -> float:
        return (self.voxels.shape[0] - 1) / 2.0

    @property
    def half_extent(self) -> float:
        """Distance in mm from the centerline to the outermost voxel center."""
        return self.center_index * self.in_plane_spacing


@dataclass(frozen=True)
class CylindricalVolume:
    samples: np.ndarray
    dr: float = 0.2

    def __post_init__(self):
        if self.samples.ndim != 3:
            raise ShapeError(f"cylindrical samples must be (N_θ, R, L), got {self.samples.shape}")

    @property
    def n_theta(self) -> int:
        return self.samples.shape[0]

    @property
    def n_radius(self) -> int:
        return self.samples.shape[1]

    @property
    def length(self) -> int:
        return self.samples.shape[2]

    @property
    def angles(self) -> np.ndarray:
        return theta_angles(self.n_theta)

    @property
    def radii(self) -> np.ndarray:
        return np.arange(self.n_radius) * self.dr


@dataclass(frozen=True)
class RadialField:
    """
    Per-vertex radial extents on the (θ, z) grid, nested inside out as
    lumen, NCP shell, CP shell.
    """

    r_l: np.ndarray
    r_cp: np.ndarray
    r_ncp: np.ndarray
    plaque_class: np.ndarray = None
    dz: float = 0.5

    def __post_init__(self):
        shape = np.shape(self.r_l)
        for name in ("r_cp", "r_ncp"):
            if np.shape(getattr(self, name)) != shape:
                raise ShapeError(f"{name} has shape {np.shape(getattr(self, name))}, expected {shape}")
        if len(shape) != 2:
            raise ShapeError(f"radial field must be (N_θ, L), got shape {shape}")
        for name in ("r_l", "r_cp", "r_ncp"):
            values = np.asarray(getattr(self, name), dtype=np.float64)
            if not np.isfinite(values).all():
                raise ValueError(f"{name} contains non-finite radii")
            if (values < 0).any():
                raise ValueError(f"{name} contains negative radii (min {values.min():.4g} mm)")
            object.__setattr__(self, name, values)
        if self.plaque_class is None:
            object.__setattr__(self, "plaque_class", class_from_radii(self.r_cp, self.r_ncp))
        else:
            labels = np.asarray(self.plaque_class, dtype=np.int64)
            if labels.shape != shape:
                raise ShapeError(f"plaque_class has shape {labels.shape}, expected {shape}")
            if ((labels < 0) | (labels > 3)).any():
                raise ValueError("plaque_class values must lie in {0, 1, 2, 3}")
            object.__setattr__(self, "plaque_class", labels)

    @property
    def n_theta(self) -> int:
        return self.r_l.shape[0]

    @property
    def length(self) -> int:
        return self.r_l.shape[1]

    @property
    def lumen_ncp(self) -> np.ndarray:
        return self.r_l + self.r_ncp

    @property
    def outer(self) -> np.ndarray:
        return self.r_l + self.r_ncp + self.r_cp

    def with_radii(self, r_l=None, r_cp=None, r_ncp=None, plaque_class=None) -> RadialField:
        return RadialField(
            r_l=self.r_l if r_l is None else r_l,
            r_cp=self.r_cp if r_cp is None else r_cp,
            r_ncp=self.r_ncp if r_ncp is None else r_ncp,
            plaque_class=plaque_class,
            dz=self.dz,
        )

    def slices(self, start: int, stop: int) -> RadialField:
        return RadialField(
            self.r_l[:, start:stop],
            self.r_cp[:, start:stop],
            self.r_ncp[:, start:stop],
            self.plaque_class[:, start:stop],
            dz=self.dz,
        )


@dataclass(frozen=True)
class SurfaceMesh:
    vertices: np.ndarray
    faces: np.ndarray

    def __post_init__(self):
        vertices = np.asarray(self.vertices, dtype=np.float64).reshape(-1, 3)
        faces = np.asarray(self.faces, dtype=np.int64).reshape(-1, 3)
        if faces.size and (faces.min() < 0 or faces.max() >= len(vertices)):
            raise ValueError(
                f"face indices must lie in [0, {len(vertices) - 1}], got [{faces.min()}, {faces.max()}]"
            )
        object.__setattr__(self, "vertices", vertices)
        object.__setattr__(self, "faces", faces)

    def edge_face_counts(self) -> dict[tuple[int, int], int]:
        counts: dict[tuple[int, int], int] = {}
        for a, b, c in self.faces:
            for u, v in ((a, b), (b, c), (c, a)):
                key = (min(u, v), max(u, v))
                counts[key] = counts.get(key, 0) + 1
        return counts

    def euler_characteristic(self) -> int:
        return len(self.vertices) - len(self.edge_face_counts()) + len(self.faces)

    def vertex_degrees(self) -> np.ndarray:
        degree = np.zeros(len(self.vertices), dtype=np.int64)
        for u, v in self.edge_face_counts():
            degree[u] += 1
            degree[v] += 1
        return degree

    def face_areas(self) -> np.ndarray:
        a, b, c = (self.vertices[self.faces[:, i]] for i in range(3))
        return 0.5 * np.linalg.norm(np.cross(b - a, c - a), axis=1)

    def boundary_loops(self) -> list[list[int]]:
        """Open boundary loops, each as an ordered vertex list following face orientation."""
        directed = set()
        for a, b, c in self.faces:
            directed.update({(a, b), (b, c), (c, a)})
        nxt = {u: v for (u, v) in directed if (v, u) not in directed}
        loops = []
        while nxt:
            start, _ = next(iter(nxt.items()))
            loop = [start]
            current = nxt.pop(start)
            while current != start:
                loop.append(current)
                current = nxt.pop(current)
            loops.append(loop)
        return loops

    def enclosed_volume(self) -> float:
        """
        Volume enclosed by the surface, with every open boundary loop closed
        by a fan to its centroid.
        """
        tris = [self.vertices[self.faces]]
        for loop in self.boundary_loops():
            pts = self.vertices[loop]
            centroid = pts.mean(axis=0)
            nxt = np.roll(pts, -1, axis=0)
            # boundary half-edge u->v belongs to a face; the cap uses v->u
            cap = np.stack([np.broadcast_to(centroid, pts.shape), nxt, pts], axis=1)
            tris.append(cap)
        tris = np.concatenate(tris, axis=0)
        signed = np.einsum("ij,ij->i", tris[:, 0], np.cross(tris[:, 1], tris[:, 2])).sum() / 6.0
        return float(abs(signed))

    def sample_points(self, samples_per_face: int) -> np.ndarray:
        """
        Points on a regular barycentric grid with ``samples_per_face`` steps per
        edge on every face (vertices and edges included).
        """
        n = max(int(samples_per_face), 1)
        ij = [(i, j) for i in range(n + 1) for j in range(n + 1 - i)]
        bary = np.array([(i / n, j / n, 1.0 - (i + j) / n) for i, j in ij])
        corners = self.vertices[self.faces]
        return np.einsum("kc,fcd->fkd", bary, corners).reshape(-1, 3)


@dataclass(frozen=True)
class AreaSignalSet:
    """Per-slice cross-sectional areas in mm²."""

    a_l: np.ndarray
    a_cp: np.ndarray
    a_ncp: np.ndarray
    dz: float = 0.5

    def __post_init__(self):
        for name in ("a_l", "a_cp", "a_ncp"):
            values = np.asarray(getattr(self, name), dtype=np.float64).ravel()
            object.__setattr__(self, name, values)
        if not (len(self.a_l) == len(self.a_cp) == len(self.a_ncp)):
            raise ShapeError(
                f"area signals differ in length: a_l={len(self.a_l)} a_cp={len(self.a_cp)} a_ncp={len(self.a_ncp)}"
            )

    @property
    def length(self) -> int:
        return len(self.a_l)

    @property
    def outer(self) -> np.ndarray:
        return self.a_l + self.a_cp + self.a_ncp

    @property
    def total_plaque(self) -> np.ndarray:
        return self.a_cp + self.a_ncp

    def padded(self, extra: int) -> AreaSignalSet:
        zeros = np.zeros(extra)
        return AreaSignalSet(
            np.concatenate([self.a_l, zeros]),
            np.concatenate([self.a_cp, zeros]),
            np.concatenate([self.a_ncp, zeros]),
            dz=self.dz,
        )

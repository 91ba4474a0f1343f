"""
Mesh and volume files: Wavefront OBJ and the TMPR1 MPR container.

TMPR1 layout: magic ``TMPR1``, an 8-byte little-endian header length, a JSON
header with ``shape`` and spacings, then little-endian float32 voxels in
row-major order.
"""

import json
import struct
from pathlib import Path

import numpy as np

from tubemesh.errors import CheckpointError
from tubemesh.geometry.types import MprVolume, SurfaceMesh

MPR_MAGIC = b"TMPR1"


def write_obj(mesh: SurfaceMesh, path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = [f"v {x:.6f} {y:.6f} {z:.6f}" for x, y, z in mesh.vertices]
    lines += [f"f {a + 1} {b + 1} {c + 1}" for a, b, c in mesh.faces]
    path.write_text("\n".join(lines) + "\n")
    return path


def read_obj(path: str | Path) -> SurfaceMesh:
    vertices, faces = [], []
    for line in Path(path).read_text().splitlines():
        parts = line.split()
        if not parts:
            continue
        if parts[0] == "v":
            vertices.append([float(p) for p in parts[1:4]])
        elif parts[0] == "f":
            faces.append([int(p.split("/")[0]) - 1 for p in parts[1:4]])
    return SurfaceMesh(vertices=np.array(vertices).reshape(-1, 3), faces=np.array(faces, dtype=np.int64).reshape(-1, 3))


def write_mpr(mpr: MprVolume, path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    header = json.dumps(
        {
            "shape": list(mpr.voxels.shape),
            "in_plane_spacing": mpr.in_plane_spacing,
            "through_plane_spacing": mpr.through_plane_spacing,
        },
        sort_keys=True,
    ).encode("utf-8")
    with path.open("wb") as fh:
        fh.write(MPR_MAGIC)
        fh.write(struct.pack("<Q", len(header)))
        fh.write(header)
        fh.write(np.ascontiguousarray(mpr.voxels, dtype="<f4").tobytes())
    return path


def read_mpr(path: str | Path) -> MprVolume:
    raw = Path(path).read_bytes()
    if not raw.startswith(MPR_MAGIC):
        raise CheckpointError(f"'{path}' is not a TMPR1 volume (bad magic)")
    offset = len(MPR_MAGIC)
    (length,) = struct.unpack_from("<Q", raw, offset)
    offset += 8
    header = json.loads(raw[offset : offset + length].decode("utf-8"))
    shape = tuple(header["shape"])
    voxels = np.frombuffer(raw[offset + length :], dtype="<f4")
    if voxels.size != int(np.prod(shape)):
        raise CheckpointError(f"'{path}' holds {voxels.size} voxels, header declares {shape}")
    return MprVolume(
        voxels=voxels.reshape(shape).astype(np.float64),
        in_plane_spacing=float(header["in_plane_spacing"]),
        through_plane_spacing=float(header["through_plane_spacing"]),
    )

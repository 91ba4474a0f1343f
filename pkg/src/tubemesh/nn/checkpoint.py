"""
TMNN1 parameter checkpoints.

Layout: the magic bytes ``TMNN1``, an 8-byte little-endian manifest length,
the UTF-8 JSON manifest, then every tensor listed in the manifest as raw
little-endian float64 values in manifest order.
"""

import json
import logging
import struct
from pathlib import Path
from typing import Any

import numpy as np

from tubemesh.errors import CheckpointError
from tubemesh.nn.layers import Module

log = logging.getLogger(__name__)

MAGIC = b"TMNN1"
FORMAT_VERSION = 1


def save_checkpoint(
    path: str | Path,
    module: Module,
    *,
    kind: str,
    epoch: int,
    seed: int,
    config: dict[str, Any] | None = None,
) -> Path:
    path = Path(path)
    entries = []
    chunks = []
    for name, p in module.named_parameters():
        entries.append({"name": name, "shape": list(p.shape), "role": "parameter"})
        chunks.append(p.data)
    for name, buf in module.named_buffers():
        entries.append({"name": name, "shape": list(buf.shape), "role": "buffer"})
        chunks.append(buf)

    manifest = {
        "version": FORMAT_VERSION,
        "kind": kind,
        "epoch": epoch,
        "seed": seed,
        "config": config or {},
        "layers": entries,
    }
    header = json.dumps(manifest, sort_keys=True).encode("utf-8")
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<Q", len(header)))
        fh.write(header)
        for chunk in chunks:
            fh.write(np.ascontiguousarray(chunk, dtype="<f8").tobytes())
    log.debug(f"Saved {kind} checkpoint with {len(entries)} tensors to {path}")
    return path


def read_manifest(path: str | Path) -> tuple[dict[str, Any], bytes]:
    raw = Path(path).read_bytes()
    if not raw.startswith(MAGIC):
        raise CheckpointError(f"'{path}' is not a TMNN1 checkpoint (bad magic)")
    offset = len(MAGIC)
    (length,) = struct.unpack_from("<Q", raw, offset)
    offset += 8
    manifest = json.loads(raw[offset : offset + length].decode("utf-8"))
    if manifest.get("version") != FORMAT_VERSION:
        raise CheckpointError(
            f"checkpoint '{path}' has version {manifest.get('version')}, expected {FORMAT_VERSION}"
        )
    return manifest, raw[offset + length :]


def load_checkpoint(path: str | Path, module: Module, *, kind: str | None = None) -> dict[str, Any]:
    """
    Restore parameters and buffers of ``module`` in place.

    Returns
    -------
    dict
        The checkpoint manifest (kind, epoch, seed, config, layers).

    Raises
    ------
    CheckpointError
        On bad magic, version or kind mismatch, or when the tensor names and
        shapes differ from the module's.
    """
    manifest, payload = read_manifest(path)
    if kind is not None and manifest["kind"] != kind:
        raise CheckpointError(f"checkpoint '{path}' holds a '{manifest['kind']}' model, expected '{kind}'")

    targets: dict[str, tuple[str, Any]] = {}
    for name, p in module.named_parameters():
        targets[name] = ("parameter", p)
    for name, buf in module.named_buffers():
        targets[name] = ("buffer", buf)

    names = [entry["name"] for entry in manifest["layers"]]
    if sorted(names) != sorted(targets):
        missing = sorted(set(targets) - set(names))
        extra = sorted(set(names) - set(targets))
        raise CheckpointError(f"checkpoint layers do not match model: missing={missing} unexpected={extra}")

    if len(payload) % 8:
        raise CheckpointError(f"checkpoint '{path}' payload is not a whole number of float64 values")
    values = np.frombuffer(payload, dtype="<f8")
    offset = 0
    for entry in manifest["layers"]:
        shape = tuple(entry["shape"])
        size = int(np.prod(shape)) if shape else 1
        if offset + size > values.size:
            raise CheckpointError(f"checkpoint '{path}' is truncated at layer '{entry['name']}'")
        chunk = values[offset : offset + size].reshape(shape)
        offset += size
        role, target = targets[entry["name"]]
        if tuple(target.shape) != shape:
            raise CheckpointError(
                f"layer '{entry['name']}' has shape {shape} in checkpoint, model expects {tuple(target.shape)}"
            )
        if role == "parameter":
            target.assign(chunk)
        else:
            target[...] = chunk
    if offset != values.size:
        raise CheckpointError(f"checkpoint '{path}' has {values.size - offset} trailing values")
    return manifest

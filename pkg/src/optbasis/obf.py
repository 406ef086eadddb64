"""Binary basis files: a fixed little-endian layout plus a JSON sidecar.

Layout of an .obf file::

    bytes 0..3    magic "OBAS"
    bytes 4..7    format version, u32
    bytes 8..15   n_dofs, u64
    bytes 16..23  rank, u64
    byte  24      problem family tag, u8
    then          singular values, rank f64
    then          left vectors, n_dofs x rank f64, column-major
    then          right vectors, n_dofs x rank f64, column-major

All scalars little-endian.  The sidecar <stem>.meta.json carries the full
experiment configuration and basis metadata; reading tolerates a missing
sidecar, writing always produces one.  Write-then-read reproduces arrays
bit for bit.
"""

from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

from .basis import SVDBasis

MAGIC = b"OBAS"
FORMAT_VERSION = 1
_HEADER = struct.Struct("<4sIQQB")

FAMILY_TAGS = {
    "identity": 0,
    "elliptic": 1,
    "rte": 2,
    "semilinear_elliptic": 3,
    "semilinear_rte": 4,
}
TAG_FAMILIES = {v: k for k, v in FAMILY_TAGS.items()}


def sidecar_path(path):
    return Path(path).with_suffix(".meta.json")


def write_basis(path, basis: SVDBasis, config_dict=None):
    """Write a basis and its metadata sidecar; returns the sidecar path."""
    path = Path(path)
    family = basis.meta.get("family", "identity")
    if family not in FAMILY_TAGS:
        raise ValueError(f"unknown problem family '{family}'")
    header = _HEADER.pack(MAGIC, FORMAT_VERSION, basis.n_dofs, basis.rank,
                          FAMILY_TAGS[family])
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(np.ascontiguousarray(basis.singular_values, dtype="<f8").tobytes())
        fh.write(np.asfortranarray(basis.left_vectors, dtype="<f8").tobytes(order="F"))
        fh.write(np.asfortranarray(basis.right_vectors, dtype="<f8").tobytes(order="F"))

    meta = {
        "format_version": FORMAT_VERSION,
        "family": family,
        "n_dofs": basis.n_dofs,
        "rank": basis.rank,
        "basis_meta": _jsonable(basis.meta),
        "config": config_dict,
    }
    side = sidecar_path(path)
    side.write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")
    return side


def read_basis(path):
    """Read a basis file back; metadata comes from the sidecar when present."""
    path = Path(path)
    blob = path.read_bytes()
    if len(blob) < _HEADER.size:
        raise IOError(f"{path}: truncated basis file")
    magic, version, n_dofs, rank, tag = _HEADER.unpack_from(blob)
    if magic != MAGIC:
        raise IOError(f"{path}: bad magic {magic!r}")
    if version != FORMAT_VERSION:
        raise IOError(f"{path}: unsupported format version {version}")
    if tag not in TAG_FAMILIES:
        raise IOError(f"{path}: unknown problem family tag {tag}")
    need = _HEADER.size + 8 * rank * (1 + 2 * n_dofs)
    if len(blob) != need:
        raise IOError(f"{path}: expected {need} bytes, found {len(blob)}")

    offset = _HEADER.size
    lam = np.frombuffer(blob, dtype="<f8", count=rank, offset=offset).copy()
    offset += 8 * rank
    left = np.frombuffer(blob, dtype="<f8", count=n_dofs * rank, offset=offset)
    left = left.reshape((n_dofs, rank), order="F").copy()
    offset += 8 * n_dofs * rank
    right = np.frombuffer(blob, dtype="<f8", count=n_dofs * rank, offset=offset)
    right = right.reshape((n_dofs, rank), order="F").copy()

    meta = {"family": TAG_FAMILIES[tag]}
    side = sidecar_path(path)
    if side.exists():
        stored = json.loads(side.read_text())
        meta.update(stored.get("basis_meta") or {})
        meta["family"] = stored.get("family", meta["family"])
        if stored.get("config") is not None:
            meta["config"] = stored["config"]
    return SVDBasis(int(n_dofs), int(rank), lam, left, right, meta)


def _jsonable(d):
    out = {}
    for key, value in d.items():
        if isinstance(value, (np.integer,)):
            out[key] = int(value)
        elif isinstance(value, (np.floating,)):
            out[key] = float(value)
        else:
            out[key] = value
    return out

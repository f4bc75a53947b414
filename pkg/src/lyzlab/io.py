"""Binary field files, 17-digit JSON and atomic writes.

Field file layout (little-endian):

    offset 0   4 bytes  magic b"LYZF"
    offset 4   u16      version (1)
    offset 6   u8       kind (0 scalar, 1 Hermitian)
    offset 7   u8       complex dimension n
    offset 8   u32      points per axis N
    offset 12  float64  payload

Scalar payloads hold N^{2n} values in row-major grid order.  Hermitian
payloads hold, per point, the n real diagonal entries followed by the
(re, im) pairs of the strict upper triangle in row order.
"""

from __future__ import annotations

import json
import math
import os
import struct
import tempfile
from pathlib import Path

import numpy as np

from .torus import HermitianField, ScalarField, make_grid

__all__ = [
    "FieldFormatError",
    "MAGIC",
    "VERSION",
    "encode_field",
    "decode_field",
    "write_field",
    "read_field",
    "atomic_write",
    "dumps",
    "write_json",
    "read_json",
    "write_state",
]

MAGIC = b"LYZF"
VERSION = 1
_HEADER = struct.Struct("<4sHBBI")


class FieldFormatError(OSError):
    """A field file is truncated, has the wrong magic, or an unknown kind."""


def encode_field(f) -> bytes:
    grid = f.grid
    if isinstance(f, ScalarField):
        kind, payload = 0, f.values
    elif isinstance(f, HermitianField):
        kind, payload = 1, f.packed()
    else:
        raise TypeError(f"cannot encode {type(f).__name__}")
    head = _HEADER.pack(MAGIC, VERSION, kind, grid.n, grid.N)
    return head + np.ascontiguousarray(payload, dtype="<f8").tobytes()


def decode_field(data: bytes):
    if len(data) < _HEADER.size:
        raise FieldFormatError("file shorter than the header")
    magic, version, kind, n, N = _HEADER.unpack_from(data)
    if magic != MAGIC:
        raise FieldFormatError(f"bad magic {magic!r}")
    if version != VERSION:
        raise FieldFormatError(f"unsupported version {version}")
    if kind not in (0, 1):
        raise FieldFormatError(f"unknown kind {kind}")
    try:
        grid = make_grid(n, N)
    except (ValueError, MemoryError) as exc:
        raise FieldFormatError(str(exc)) from exc
    width = 1 if kind == 0 else n * n
    expected = grid.npts * width * 8
    body = data[_HEADER.size :]
    if len(body) != expected:
        raise FieldFormatError(f"payload has {len(body)} bytes, expected {expected}")
    arr = np.frombuffer(body, dtype="<f8").astype(float)
    if kind == 0:
        return ScalarField(grid, arr.reshape(grid.shape))
    return HermitianField.from_packed(grid, arr.reshape(grid.npts, width))


def atomic_write(path, data) -> Path:
    """Write bytes or text through a temporary file in the target directory."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    if isinstance(data, str):
        data = data.encode("utf-8")
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        umask = os.umask(0)
        os.umask(umask)
        os.chmod(tmp, 0o666 & ~umask)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def write_field(path, f) -> Path:
    return atomic_write(path, encode_field(f))


def read_field(path):
    with open(path, "rb") as fh:
        return decode_field(fh.read())


def _float(x: float) -> str:
    if math.isnan(x):
        return '"nan"'
    if math.isinf(x):
        return '"inf"' if x > 0 else '"-inf"'
    s = format(x, ".17g")
    if not any(ch in s for ch in ".en"):
        s += ".0"
    return s


def _encode(obj, indent: int, level: int) -> str:
    pad = " " * (indent * (level + 1))
    end = " " * (indent * level)
    if obj is None or isinstance(obj, (bool, np.bool_)):
        return "null" if obj is None else ("true" if obj else "false")
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return _float(float(obj))
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, np.ndarray):
        return _encode(obj.tolist(), indent, level)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k))}: {_encode(v, indent, level + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        items = [pad + _encode(v, indent, level + 1) for v in obj]
        return "[\n" + ",\n".join(items) + "\n" + end + "]"
    if hasattr(obj, "to_dict"):
        return _encode(obj.to_dict(), indent, level)
    raise TypeError(f"cannot serialise {type(obj).__name__}")


def dumps(obj, indent: int = 2) -> str:
    """JSON with every float printed to 17 significant digits."""
    return _encode(obj, indent, 0) + "\n"


def write_json(path, obj) -> Path:
    return atomic_write(path, dumps(obj))


def read_json(path):
    with open(path, "r", encoding="utf-8") as fh:
        return json.load(fh)


def write_state(directory, state, stem: str = "u_final", monitors: dict | None = None):
    """Field file for u plus a JSON sidecar with t, c and the solver record."""
    directory = Path(directory)
    field_path = write_field(directory / f"{stem}.lyzf", state.u)
    sidecar = {
        "t": state.t,
        "c": state.c,
        "iterations": state.iterations,
        "converged": state.converged,
        "res_sup": state.res_sup,
        "monitors": monitors or {},
    }
    json_path = write_json(directory / f"{stem}.json", sidecar)
    return field_path, json_path

"""Binary and text serialization of matrices and of composite containers.

ELMM matrix layout (all little-endian)::

    b"ELMM" | version u32 | rows u64 | cols u64 | rows*cols float64, row-major

A container bundles a JSON meta block with a sequence of named matrices::

    b"ELMC" | version u32 | meta_len u64 | meta (UTF-8 JSON) | ELMM ...

The meta block carries an ``"arrays"`` list naming the matrices in the
order they follow.
"""

import io as _io
import json
import struct

import numpy as np

MATRIX_MAGIC = b"ELMM"
CONTAINER_MAGIC = b"ELMC"
FORMAT_VERSION = 1

_HEADER = struct.Struct("<4sIQQ")
_CONTAINER_HEADER = struct.Struct("<4sIQ")


class FormatError(ValueError):
    pass


def write_matrix(fh, a):
    a = np.asarray(a, dtype="<f8")
    if a.ndim == 1:
        a = a.reshape(1, -1)
    if a.ndim != 2:
        raise FormatError(f"only 2-D arrays can be written, got ndim={a.ndim}")
    rows, cols = a.shape
    fh.write(_HEADER.pack(MATRIX_MAGIC, FORMAT_VERSION, rows, cols))
    fh.write(np.ascontiguousarray(a).tobytes(order="C"))


def read_matrix(fh):
    raw = fh.read(_HEADER.size)
    if len(raw) != _HEADER.size:
        raise FormatError("truncated matrix header")
    magic, version, rows, cols = _HEADER.unpack(raw)
    if magic != MATRIX_MAGIC:
        raise FormatError(f"bad matrix magic {magic!r}")
    if version != FORMAT_VERSION:
        raise FormatError(f"unsupported matrix format version {version}")
    nbytes = rows * cols * 8
    data = fh.read(nbytes)
    if len(data) != nbytes:
        raise FormatError("truncated matrix payload")
    return np.frombuffer(data, dtype="<f8").astype(np.float64).reshape(rows, cols)


def matrix_to_bytes(a):
    buf = _io.BytesIO()
    write_matrix(buf, a)
    return buf.getvalue()


def matrix_from_bytes(data):
    return read_matrix(_io.BytesIO(data))


def save_matrix(path, a):
    with open(path, "wb") as fh:
        write_matrix(fh, a)


def load_matrix(path):
    with open(path, "rb") as fh:
        return read_matrix(fh)


def save_csv(path, a):
    """Headerless CSV, one matrix row per line, shortest round-trip floats."""
    a = np.asarray(a, dtype=np.float64)
    if a.ndim == 1:
        a = a.reshape(1, -1)
    with open(path, "w", newline="") as fh:
        for row in a:
            fh.write(",".join(repr(float(v)) for v in row))
            fh.write("\r\n")


def load_csv(path):
    return np.loadtxt(path, delimiter=",", dtype=np.float64, ndmin=2)


def write_container(fh, meta, arrays):
    """Write ``meta`` (JSON-serializable dict) and ``arrays`` (name -> matrix)."""
    meta = dict(meta)
    meta["arrays"] = list(arrays)
    blob = json.dumps(meta, sort_keys=True, indent=1).encode("utf-8")
    fh.write(_CONTAINER_HEADER.pack(CONTAINER_MAGIC, FORMAT_VERSION, len(blob)))
    fh.write(blob)
    for name in meta["arrays"]:
        write_matrix(fh, arrays[name])


def read_container(fh):
    raw = fh.read(_CONTAINER_HEADER.size)
    if len(raw) != _CONTAINER_HEADER.size:
        raise FormatError("truncated container header")
    magic, version, meta_len = _CONTAINER_HEADER.unpack(raw)
    if magic != CONTAINER_MAGIC:
        raise FormatError(f"bad container magic {magic!r}")
    if version != FORMAT_VERSION:
        raise FormatError(f"unsupported container version {version}")
    meta = json.loads(fh.read(meta_len).decode("utf-8"))
    arrays = {name: read_matrix(fh) for name in meta["arrays"]}
    return meta, arrays


def save_container(path, meta, arrays):
    with open(path, "wb") as fh:
        write_container(fh, meta, arrays)


def load_container(path):
    with open(path, "rb") as fh:
        return read_container(fh)

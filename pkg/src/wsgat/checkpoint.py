"""Parameter checkpoint file: length-prefixed named float64 arrays.

Layout (all integers little-endian):
    magic   : 5 bytes b"WSGT1"
    count   : uint32, number of arrays
    per array:
        name_len : uint32
        name     : name_len bytes, UTF-8
        ndim     : uint32
        dims     : ndim * uint64
        data     : prod(dims) * float64, little-endian, C order
"""

from __future__ import annotations

import struct

import numpy as np

MAGIC = b"WSGT1"


def save_arrays(path, arrays):
    """arrays: dict name -> ndarray (stored as float64)."""
    with open(path, "wb") as f:
        f.write(MAGIC)
        f.write(struct.pack("<I", len(arrays)))
        for name in sorted(arrays):
            arr = np.asarray(arrays[name]).astype("<f8", order="C", copy=False)
            encoded = name.encode("utf-8")
            f.write(struct.pack("<I", len(encoded)))
            f.write(encoded)
            f.write(struct.pack("<I", arr.ndim))
            for dim in arr.shape:
                f.write(struct.pack("<Q", dim))
            f.write(arr.tobytes())


def load_arrays(path):
    with open(path, "rb") as f:
        if f.read(5) != MAGIC:
            raise ValueError(f"{path}: not a wsgat checkpoint")
        (count,) = struct.unpack("<I", f.read(4))
        out = {}
        for _ in range(count):
            (name_len,) = struct.unpack("<I", f.read(4))
            name = f.read(name_len).decode("utf-8")
            (ndim,) = struct.unpack("<I", f.read(4))
            shape = tuple(struct.unpack("<Q", f.read(8))[0] for _ in range(ndim))
            n = int(np.prod(shape)) if shape else 1
            data = np.frombuffer(f.read(8 * n), dtype="<f8").reshape(shape)
            out[name] = np.array(data)  # writable copy
        return out

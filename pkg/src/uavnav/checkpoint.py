"""Binary checkpoint format for named float32 arrays.

Layout (all integers little-endian):

    magic    8 bytes  b"TENSCKPT"
    version  uint32   currently 1
    count    uint32   number of arrays
    then per array:
      name_len uint16, name utf-8 bytes
      ndim     uint8,  dims uint32 each
      payload  float32 little-endian, C order
"""

from __future__ import annotations

import struct

import numpy as np

MAGIC = b"TENSCKPT"
VERSION = 1


class CheckpointError(ValueError):
    """Raised on malformed or truncated checkpoint files."""


def save_arrays(path, arrays):
    """Write a name -> float32 array mapping. Order is preserved."""
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<II", VERSION, len(arrays)))
        for name, arr in arrays.items():
            arr = np.ascontiguousarray(arr, dtype=np.float32)
            encoded = name.encode("utf-8")
            if len(encoded) > 0xFFFF:
                raise CheckpointError(f"array name too long: {name[:40]}...")
            fh.write(struct.pack("<H", len(encoded)))
            fh.write(encoded)
            fh.write(struct.pack("<B", arr.ndim))
            for dim in arr.shape:
                fh.write(struct.pack("<I", dim))
            fh.write(arr.astype("<f4", copy=False).tobytes(order="C"))


def load_arrays(path):
    """Read a checkpoint written by :func:`save_arrays`."""
    with open(path, "rb") as fh:
        blob = fh.read()

    def take(n, what):
        nonlocal offset
        if offset + n > len(blob):
            raise CheckpointError(f"truncated checkpoint while reading {what}")
        piece = blob[offset : offset + n]
        offset += n
        return piece

    offset = 0
    if take(8, "magic") != MAGIC:
        raise CheckpointError("bad magic bytes, not a checkpoint file")
    version, count = struct.unpack("<II", take(8, "header"))
    if version != VERSION:
        raise CheckpointError(f"unsupported checkpoint version {version}")
    arrays = {}
    for _ in range(count):
        (name_len,) = struct.unpack("<H", take(2, "name length"))
        name = take(name_len, "name").decode("utf-8")
        (ndim,) = struct.unpack("<B", take(1, "rank"))
        shape = tuple(
            struct.unpack("<I", take(4, f"dim of {name}"))[0] for _ in range(ndim)
        )
        size = 1
        for dim in shape:
            size *= dim
        payload = take(4 * size, f"payload of {name}")
        arrays[name] = np.frombuffer(payload, dtype="<f4").reshape(shape).astype(
            np.float32, copy=True
        )
    if offset != len(blob):
        raise CheckpointError(f"{len(blob) - offset} trailing bytes after last array")
    return arrays

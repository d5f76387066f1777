"""Reader/writer for the .nncw weight-file format.

Implements the published byte layout directly (magic NNCW, version u16,
32-byte config fingerprint, record count u32, record table of
name/shape/dtype/offset/nbytes entries, then a raw little-endian float32
payload).  Self-contained on purpose: this tool talks to the codec runtime
only through its documented file formats and CLI.
"""

from __future__ import annotations

import math
import struct
from pathlib import Path

import numpy as np

MAGIC = b"NNCW"
VERSION = 1
DTYPE_F32 = 0


class NncwError(ValueError):
    pass


def write(path: str | Path, records: dict[str, np.ndarray],
          fingerprint: bytes) -> None:
    if len(fingerprint) != 32:
        raise NncwError(f"fingerprint must be 32 bytes, got {len(fingerprint)}")
    table = bytearray()
    payload = bytearray()
    for name, arr in records.items():
        arr = np.ascontiguousarray(arr, dtype=np.float32)
        raw = arr.astype("<f4", copy=False).tobytes()
        nb = name.encode("utf-8")
        table += struct.pack("<H", len(nb)) + nb
        table += struct.pack("<B", arr.ndim)
        table += struct.pack(f"<{arr.ndim}I", *arr.shape)
        table += struct.pack("<BQQ", DTYPE_F32, len(payload), len(raw))
        payload += raw
    head = MAGIC + struct.pack("<H", VERSION) + fingerprint
    head += struct.pack("<I", len(records))
    Path(path).write_bytes(bytes(head) + bytes(table) + bytes(payload))


def read(path: str | Path) -> tuple[bytes, dict[str, np.ndarray]]:
    buf = Path(path).read_bytes()
    pos = 0

    def take(n):
        nonlocal pos
        if pos + n > len(buf):
            raise NncwError(f"{path}: truncated")
        b = buf[pos:pos + n]
        pos += n
        return b

    if take(4) != MAGIC:
        raise NncwError(f"{path}: bad magic")
    (version,) = struct.unpack("<H", take(2))
    if version != VERSION:
        raise NncwError(f"{path}: unsupported version {version}")
    fingerprint = take(32)
    (count,) = struct.unpack("<I", take(4))
    entries = []
    for _ in range(count):
        (nlen,) = struct.unpack("<H", take(2))
        name = take(nlen).decode("utf-8")
        (ndim,) = struct.unpack("<B", take(1))
        shape = struct.unpack(f"<{ndim}I", take(4 * ndim)) if ndim else ()
        dtype, offset, nbytes = struct.unpack("<BQQ", take(17))
        if dtype != DTYPE_F32:
            raise NncwError(f"{path}: {name!r}: unsupported dtype {dtype}")
        if nbytes != 4 * math.prod(shape):
            raise NncwError(f"{path}: {name!r}: byte length mismatch")
        entries.append((name, shape, offset, nbytes))
    out = {}
    for name, shape, offset, nbytes in entries:
        lo = pos + offset
        if lo + nbytes > len(buf):
            raise NncwError(f"{path}: {name!r}: payload overrun")
        out[name] = np.frombuffer(buf[lo:lo + nbytes], dtype="<f4").reshape(shape)
    return fingerprint, out

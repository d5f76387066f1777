"""Self-describing binary weight files (.nncw).

Layout, all little-endian:

    magic   4 bytes  b"NNCW"
    version u16      (currently 1)
    fprint  32 bytes sha256 of the canonical config text
    count   u32      number of tensor records
    table   per record:
        name_len u16, name utf-8,
        ndim u8, shape u32 * ndim,
        dtype u8 (0 = float32),
        offset u64 (into payload), nbytes u64
    payload raw float32 data, concatenated in table order

Weight maps are plain ``{name: float32 ndarray}`` dicts.  v1 stores float32
only; wider dtypes are downcast by the checkpoint converter before they get
here.
"""

from __future__ import annotations

import math
import struct
from pathlib import Path

import numpy as np

from .config import CodecConfig, fingerprint
from .generator import GeneratorGraph, shape_plan

F32 = np.float32
MAGIC = b"NNCW"
VERSION = 1
DTYPE_F32 = 0


class WeightError(ValueError):
    pass


def random_init(graph: GeneratorGraph, seed: int) -> dict[str, np.ndarray]:
    """Deterministic synthetic weights: conv weights uniform in
    [-1/sqrt(fan_in), 1/sqrt(fan_in)] with fan_in = in_channels * kernel,
    biases zero, snake alphas one."""
    rng = np.random.default_rng(seed)
    out: dict[str, np.ndarray] = {}
    for name, shape in shape_plan(graph).items():
        if name.endswith(".weight"):
            fan_in = shape[1] * shape[2]
            bound = 1.0 / math.sqrt(fan_in)
            out[name] = rng.uniform(-bound, bound, size=shape).astype(F32)
        elif name.endswith(".bias"):
            out[name] = np.zeros(shape, dtype=F32)
        elif name.endswith(".alpha"):
            out[name] = np.ones(shape, dtype=F32)
        else:
            raise WeightError(f"unrecognized parameter kind: {name}")
    return out


def merge(*maps: dict[str, np.ndarray]) -> dict[str, np.ndarray]:
    """Combine per-graph weight maps; duplicate names must not collide."""
    out: dict[str, np.ndarray] = {}
    for m in maps:
        for k, v in m.items():
            if k in out:
                raise WeightError(f"duplicate weight name {k!r}")
            out[k] = v
    return out


def save(path: str | Path, weights: dict[str, np.ndarray],
         config: CodecConfig) -> None:
    names = list(weights.keys())
    table = bytearray()
    payload = bytearray()
    for name in names:
        arr = np.ascontiguousarray(weights[name], dtype=F32)
        raw = arr.astype("<f4", copy=False).tobytes()
        nb = name.encode("utf-8")
        table += struct.pack("<H", len(nb)) + nb
        table += struct.pack("<B", arr.ndim)
        table += struct.pack(f"<{arr.ndim}I", *arr.shape)
        table += struct.pack("<BQQ", DTYPE_F32, len(payload), len(raw))
        payload += raw
    head = MAGIC + struct.pack("<H", VERSION) + fingerprint(config)
    head += struct.pack("<I", len(names))
    Path(path).write_bytes(bytes(head) + bytes(table) + bytes(payload))


class _Reader:
    def __init__(self, buf: bytes):
        self.buf = buf
        self.pos = 0

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.buf):
            raise WeightError("truncated weight file")
        b = self.buf[self.pos:self.pos + n]
        self.pos += n
        return b

    def unpack(self, fmt: str):
        return struct.unpack(fmt, self.take(struct.calcsize(fmt)))


def read_records(path: str | Path) -> tuple[bytes, dict[str, np.ndarray]]:
    """Parse a .nncw file; returns (config fingerprint, name -> array)."""
    buf = Path(path).read_bytes()
    r = _Reader(buf)
    if r.take(4) != MAGIC:
        raise WeightError(f"{path}: bad magic (not a weight file)")
    (version,) = r.unpack("<H")
    if version != VERSION:
        raise WeightError(f"{path}: unsupported version {version}")
    fprint = r.take(32)
    (count,) = r.unpack("<I")
    entries = []
    for _ in range(count):
        (name_len,) = r.unpack("<H")
        name = r.take(name_len).decode("utf-8")
        (ndim,) = r.unpack("<B")
        shape = r.unpack(f"<{ndim}I") if ndim else ()
        dtype, offset, nbytes = r.unpack("<BQQ")
        if dtype != DTYPE_F32:
            raise WeightError(f"{path}: record {name!r} has unsupported dtype {dtype}")
        expect = 4 * math.prod(shape) if shape else 4
        if nbytes != 4 * math.prod(shape):
            raise WeightError(
                f"{path}: record {name!r} byte length {nbytes} != 4*prod{shape}")
        entries.append((name, shape, offset, nbytes))
    payload_start = r.pos
    out: dict[str, np.ndarray] = {}
    for name, shape, offset, nbytes in entries:
        if name in out:
            raise WeightError(f"{path}: duplicate record name {name!r}")
        lo = payload_start + offset
        if lo + nbytes > len(buf):
            raise WeightError(f"{path}: record {name!r} overruns the payload")
        arr = np.frombuffer(buf[lo:lo + nbytes], dtype="<f4").reshape(shape)
        out[name] = arr.astype(F32)
    return fprint, out


def load(path: str | Path, graph: GeneratorGraph, *,
         config: CodecConfig | None = None,
         force: bool = False) -> tuple[dict[str, np.ndarray], list[str]]:
    """Load and validate weights for a graph.

    Returns (weights, warnings); warnings list records present in the file
    but unused by the graph.  Raises on missing records, shape mismatches
    and (unless force) config fingerprint mismatches."""
    cfg = config or graph.config
    fprint, records = read_records(path)
    if fprint != fingerprint(cfg) and not force:
        raise WeightError(
            f"{path}: config fingerprint mismatch (file was written for a "
            "different configuration; pass force=True / --force to override)")
    plan = shape_plan(graph)
    missing = [k for k in plan if k not in records]
    if missing:
        raise WeightError(f"{path}: missing record for node {missing[0]!r}"
                          + (f" (+{len(missing)-1} more)" if len(missing) > 1 else ""))
    for key, shape in plan.items():
        got = tuple(records[key].shape)
        if got != shape:
            raise WeightError(
                f"{path}: record {key!r} has shape {got}, graph requires {shape}")
    warnings = [f"unused record {k!r}" for k in records if k not in plan]
    return {k: records[k] for k in plan}, warnings

"""Bit-exact token bitstream (.nncb): self-describing header plus tightly
bit-packed frames.

Header, all multi-byte fields little-endian:

    magic    4 bytes  b"NNCB"
    version  u16      (currently 1)
    sample_rate_hz        u32
    stride_product        u32   audio samples per frame (hop)
    num_codebooks         u16
    levels   u16 count, then count * u16
    original_sample_count u64   pre-padding audio length; decode trims to it
    flags    u32     bit0 = decoder_causal

Payload: token indices written frame-major, each index MSB-first in exactly
bits_per_token bits; zero-padded to a byte boundary at end of stream only.
The frame count is implied: ceil(original_sample_count / stride_product).
There are no per-frame sync markers; frames are fixed-size and seekable by
arithmetic.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from typing import Iterator

import numpy as np

from .config import CodecConfig, FsqSpec, bits_per_token

MAGIC = b"NNCB"
VERSION = 1
FLAG_DECODER_CAUSAL = 1


class BitstreamError(ValueError):
    pass


@dataclass(frozen=True)
class BitstreamHeader:
    sample_rate_hz: int
    stride_product: int
    num_codebooks: int
    levels: tuple[int, ...]
    original_sample_count: int
    decoder_causal: bool
    version: int = VERSION

    @property
    def fsq(self) -> FsqSpec:
        return FsqSpec(num_codebooks=self.num_codebooks, levels=self.levels)

    @property
    def bits_per_token(self) -> int:
        return self.fsq.bits_per_token

    @property
    def num_frames(self) -> int:
        return -(-self.original_sample_count // self.stride_product)

    @property
    def frame_bits(self) -> int:
        return self.num_codebooks * self.bits_per_token

    def payload_bytes(self) -> int:
        return (self.num_frames * self.frame_bits + 7) // 8

    @classmethod
    def for_config(cls, config: CodecConfig,
                   original_sample_count: int) -> "BitstreamHeader":
        return cls(
            sample_rate_hz=config.sample_rate_hz,
            stride_product=config.hop_samples,
            num_codebooks=config.fsq.num_codebooks,
            levels=tuple(config.fsq.levels),
            original_sample_count=int(original_sample_count),
            decoder_causal=config.decoder_causal,
        )


def header_bytes(h: BitstreamHeader) -> bytes:
    out = MAGIC + struct.pack("<H", h.version)
    out += struct.pack("<IIH", h.sample_rate_hz, h.stride_product, h.num_codebooks)
    out += struct.pack("<H", len(h.levels))
    out += struct.pack(f"<{len(h.levels)}H", *h.levels)
    out += struct.pack("<Q", h.original_sample_count)
    out += struct.pack("<I", FLAG_DECODER_CAUSAL if h.decoder_causal else 0)
    return out


def parse_header(data: bytes) -> tuple[BitstreamHeader, int]:
    """Returns (header, payload offset)."""
    if len(data) < 18 or data[:4] != MAGIC:
        raise BitstreamError("bad magic: not a token bitstream")
    (version,) = struct.unpack_from("<H", data, 4)
    if version != VERSION:
        raise BitstreamError(f"unsupported bitstream version {version}")
    sr, hop, n_books = struct.unpack_from("<IIH", data, 6)
    (n_levels,) = struct.unpack_from("<H", data, 16)
    pos = 18
    if len(data) < pos + 2 * n_levels + 12:
        raise BitstreamError("truncated header")
    levels = struct.unpack_from(f"<{n_levels}H", data, pos)
    pos += 2 * n_levels
    (orig,) = struct.unpack_from("<Q", data, pos)
    pos += 8
    (flags,) = struct.unpack_from("<I", data, pos)
    pos += 4
    if hop <= 0 or n_books <= 0 or not levels or any(lv < 2 for lv in levels):
        raise BitstreamError("header describes an invalid code space")
    h = BitstreamHeader(sample_rate_hz=sr, stride_product=hop,
                        num_codebooks=n_books, levels=tuple(levels),
                        original_sample_count=orig,
                        decoder_causal=bool(flags & FLAG_DECODER_CAUSAL))
    return h, pos


# --------------------------------------------------------------------------
# Frame packing.
# --------------------------------------------------------------------------

def _tokens_to_bits(frames: np.ndarray, spec: FsqSpec) -> np.ndarray:
    """(n, C) indices -> flat uint8 bit array, MSB-first per token."""
    bpt = spec.bits_per_token
    flat = np.asarray(frames, dtype=np.int64).reshape(-1)
    if flat.size and (flat.min() < 0 or flat.max() >= spec.codes_per_codebook):
        raise BitstreamError(
            f"token index out of range [0, {spec.codes_per_codebook})")
    shifts = np.arange(bpt - 1, -1, -1, dtype=np.int64)
    return ((flat[:, None] >> shifts) & 1).astype(np.uint8).reshape(-1)


def _bits_to_tokens(bits: np.ndarray, n_frames: int, spec: FsqSpec) -> np.ndarray:
    bpt = spec.bits_per_token
    need = n_frames * spec.num_codebooks * bpt
    if bits.size < need:
        raise BitstreamError(
            f"payload truncated: need {need} bits, have {bits.size}")
    weights = (1 << np.arange(bpt - 1, -1, -1, dtype=np.int64))
    toks = bits[:need].reshape(-1, bpt).astype(np.int64) @ weights
    toks = toks.reshape(n_frames, spec.num_codebooks)
    if toks.size and toks.max() >= spec.codes_per_codebook:
        raise BitstreamError(
            f"decoded token index {int(toks.max())} out of range "
            f"[0, {spec.codes_per_codebook})")
    return toks


def pack_frame(frame: np.ndarray, spec: FsqSpec) -> bytes:
    """One frame -> its packed bits, zero-padded to a byte boundary.
    (Within a stream, frames are packed back to back without padding.)"""
    frame = np.asarray(frame, dtype=np.int64).reshape(1, -1)
    if frame.shape[1] != spec.num_codebooks:
        raise BitstreamError(
            f"frame has {frame.shape[1]} tokens, spec has {spec.num_codebooks}")
    return np.packbits(_tokens_to_bits(frame, spec)).tobytes()


def unpack_frame(data: bytes, spec: FsqSpec) -> np.ndarray:
    bits = np.unpackbits(np.frombuffer(data, dtype=np.uint8))
    return _bits_to_tokens(bits, 1, spec)[0]


def pack_frames(frames: np.ndarray, spec: FsqSpec) -> bytes:
    """(n, C) frames -> frame-major packed payload, padded to a byte at the
    end of the stream only."""
    frames = np.asarray(frames, dtype=np.int64)
    if frames.ndim != 2 or frames.shape[1] != spec.num_codebooks:
        raise BitstreamError(
            f"frames must be (n, {spec.num_codebooks}), got {frames.shape}")
    if frames.shape[0] == 0:
        return b""
    return np.packbits(_tokens_to_bits(frames, spec)).tobytes()


def unpack_frames(data: bytes, n_frames: int, spec: FsqSpec) -> np.ndarray:
    bits = np.unpackbits(np.frombuffer(data, dtype=np.uint8))
    return _bits_to_tokens(bits, n_frames, spec)


# --------------------------------------------------------------------------
# Whole streams.
# --------------------------------------------------------------------------

def write_stream(header: BitstreamHeader, frames: np.ndarray) -> bytes:
    frames = np.asarray(frames, dtype=np.int64)
    if frames.ndim != 2 or frames.shape[1] != header.num_codebooks:
        raise BitstreamError(
            f"frames must be (n, {header.num_codebooks}), got {frames.shape}")
    if frames.shape[0] != header.num_frames:
        raise BitstreamError(
            f"header implies {header.num_frames} frames "
            f"(original_sample_count {header.original_sample_count}, hop "
            f"{header.stride_product}), got {frames.shape[0]}")
    return header_bytes(header) + pack_frames(frames, header.fsq)


def read_stream(data: bytes) -> tuple[BitstreamHeader, Iterator[np.ndarray]]:
    """Parse a stream; yields one (num_codebooks,) frame at a time, never
    buffering more than one frame's worth of decoded payload."""
    header, pos = parse_header(data)
    payload = data[pos:]
    if len(payload) != header.payload_bytes():
        raise BitstreamError(
            f"payload is {len(payload)} bytes, header implies "
            f"{header.payload_bytes()} ({header.num_frames} frames)")

    spec = header.fsq
    fb = header.frame_bits

    def gen() -> Iterator[np.ndarray]:
        bitpos = 0
        for _ in range(header.num_frames):
            lo_byte, hi_byte = bitpos // 8, (bitpos + fb + 7) // 8
            bits = np.unpackbits(
                np.frombuffer(payload[lo_byte:hi_byte], dtype=np.uint8))
            off = bitpos - lo_byte * 8
            yield _bits_to_tokens(bits[off:off + fb], 1, spec)[0]
            bitpos += fb

    return header, gen()


def read_all_frames(data: bytes) -> tuple[BitstreamHeader, np.ndarray]:
    """Parse a stream into a dense (n, C) token matrix in one shot."""
    header, pos = parse_header(data)
    payload = data[pos:]
    if len(payload) != header.payload_bytes():
        raise BitstreamError(
            f"payload is {len(payload)} bytes, header implies "
            f"{header.payload_bytes()} ({header.num_frames} frames)")
    bits = np.unpackbits(np.frombuffer(payload, dtype=np.uint8))
    return header, _bits_to_tokens(bits, header.num_frames, header.fsq)

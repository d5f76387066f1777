"""Minimal WAV container support: mono PCM16 and IEEE float32.

Samples cross this boundary as float32 in [-1, 1].  Anything beyond these
two encodings is rejected with a remediation hint rather than guessed at.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

F32 = np.float32

WAVE_FORMAT_PCM = 1
WAVE_FORMAT_IEEE_FLOAT = 3
WAVE_FORMAT_EXTENSIBLE = 0xFFFE


class AudioIOError(ValueError):
    pass


@dataclass
class WavData:
    samples: np.ndarray       # float32 (n,) mono or (n, ch) multichannel
    sample_rate_hz: int

    @property
    def num_channels(self) -> int:
        return 1 if self.samples.ndim == 1 else self.samples.shape[1]


def read_wav(path: str | Path) -> WavData:
    raw = Path(path).read_bytes()
    if len(raw) < 12 or raw[:4] != b"RIFF" or raw[8:12] != b"WAVE":
        raise AudioIOError(f"{path}: not a RIFF/WAVE file")
    pos = 12
    fmt = None
    data = None
    while pos + 8 <= len(raw):
        cid = raw[pos:pos + 4]
        (size,) = struct.unpack_from("<I", raw, pos + 4)
        body = raw[pos + 8: pos + 8 + size]
        if cid == b"fmt ":
            fmt = body
        elif cid == b"data":
            data = body
        pos += 8 + size + (size & 1)   # chunks are word-aligned
    if fmt is None or data is None:
        raise AudioIOError(f"{path}: missing fmt or data chunk")
    if len(fmt) < 16:
        raise AudioIOError(f"{path}: malformed fmt chunk")
    tag, channels, rate, _, _, bits = struct.unpack_from("<HHIIHH", fmt, 0)
    if tag == WAVE_FORMAT_EXTENSIBLE and len(fmt) >= 40:
        (tag,) = struct.unpack_from("<H", fmt, 24)  # subformat GUID leads with the tag
    if tag == WAVE_FORMAT_PCM and bits == 16:
        ints = np.frombuffer(data, dtype="<i2")
        samples = (ints.astype(F32) / F32(32768.0))
    elif tag == WAVE_FORMAT_IEEE_FLOAT and bits == 32:
        samples = np.frombuffer(data, dtype="<f4").astype(F32)
    else:
        raise AudioIOError(
            f"{path}: unsupported WAV encoding (format tag {tag}, {bits} bits); "
            "convert to mono PCM16 or float32 first")
    if channels < 1:
        raise AudioIOError(f"{path}: zero channels")
    if channels > 1:
        usable = (samples.size // channels) * channels
        samples = samples[:usable].reshape(-1, channels)
    return WavData(samples=samples, sample_rate_hz=rate)


def write_wav(path: str | Path, samples: np.ndarray, sample_rate_hz: int,
              pcm16: bool = False) -> None:
    samples = np.asarray(samples, dtype=F32).reshape(-1)
    if pcm16:
        clipped = np.clip(samples, -1.0, 1.0 - 1.0 / 32768.0)
        payload = np.rint(clipped * 32768.0).astype("<i2").tobytes()
        tag, bits = WAVE_FORMAT_PCM, 16
    else:
        payload = samples.astype("<f4").tobytes()
        tag, bits = WAVE_FORMAT_IEEE_FLOAT, 32
    block = bits // 8
    fmt = struct.pack("<HHIIHH", tag, 1, sample_rate_hz,
                      sample_rate_hz * block, block, bits)
    chunks = b"fmt " + struct.pack("<I", len(fmt)) + fmt
    chunks += b"data" + struct.pack("<I", len(payload)) + payload
    if len(payload) & 1:
        chunks += b"\x00"
    out = b"RIFF" + struct.pack("<I", 4 + len(chunks)) + b"WAVE" + chunks
    Path(path).write_bytes(out)


def downmix(samples: np.ndarray) -> np.ndarray:
    """Average channels to mono."""
    samples = np.asarray(samples, dtype=F32)
    if samples.ndim == 1:
        return samples
    return samples.mean(axis=1, dtype=np.float64).astype(F32)


def resample_linear(samples: np.ndarray, src_rate: int, dst_rate: int) -> np.ndarray:
    """Linear-interpolation resampler (quality is secondary to simplicity)."""
    samples = np.asarray(samples, dtype=F32).reshape(-1)
    if src_rate == dst_rate or samples.size == 0:
        return samples
    n_out = int(round(samples.size * dst_rate / src_rate))
    src_pos = np.arange(n_out, dtype=np.float64) * src_rate / dst_rate
    return np.interp(src_pos, np.arange(samples.size), samples).astype(F32)

"""Finite scalar quantization: continuous latents <-> per-codebook indices.

Each codebook quantizes a contiguous slice of the latent vector (codebook 0
first).  Per dimension i, the latent value is bounded to [-1, 1] with a hard
clip, mapped to the digit scale via d_i = round((v+1)/2 * (levels_i - 1)),
and the digits form a mixed-radix index, least-significant dimension first.

Rounding is round-half-even (the native numpy/python rule).  The binding
contract is the FSQ consistency law: every dequantized center re-quantizes
to exactly its own code.  A hard clip keeps the law exact for the outermost
levels, where a saturating curve such as tanh would pull center values
inward and break idempotence.
"""

from __future__ import annotations

import numpy as np

from .config import FsqSpec

F32 = np.float32


class FsqError(ValueError):
    pass


def _radix_weights(levels: tuple[int, ...]) -> np.ndarray:
    """Mixed-radix place values, least-significant dimension first."""
    w = np.ones(len(levels), dtype=np.int64)
    for i in range(1, len(levels)):
        w[i] = w[i - 1] * levels[i - 1]
    return w


def codes_to_indices(digits: np.ndarray, spec: FsqSpec) -> np.ndarray:
    """(..., dims) digit arrays -> (...) integer indices."""
    digits = np.asarray(digits, dtype=np.int64)
    levels = np.asarray(spec.levels, dtype=np.int64)
    if digits.shape[-1] != len(spec.levels):
        raise FsqError(f"expected {len(spec.levels)} digits, got {digits.shape[-1]}")
    if np.any(digits < 0) or np.any(digits >= levels):
        raise FsqError("digit out of range for level vector "
                       f"{spec.levels}")
    return digits @ _radix_weights(spec.levels)


def indices_to_digits(indices: np.ndarray, spec: FsqSpec) -> np.ndarray:
    """(...) integer indices -> (..., dims) digit arrays."""
    indices = np.asarray(indices, dtype=np.int64)
    total = spec.codes_per_codebook
    if np.any(indices < 0) or np.any(indices >= total):
        raise FsqError(f"index out of range [0, {total})")
    out = np.empty(indices.shape + (len(spec.levels),), dtype=np.int64)
    rem = indices
    for i, lv in enumerate(spec.levels):
        out[..., i] = rem % lv
        rem = rem // lv
    return out


def quantize(latent: np.ndarray, spec: FsqSpec) -> np.ndarray:
    """Latents (..., latent_dim) -> token frames (..., num_codebooks).

    Values are clipped to [-1, 1]; +-inf saturate to the outermost codes.
    NaN is rejected."""
    latent = np.asarray(latent, dtype=np.float64)
    if latent.shape[-1] != spec.latent_dim:
        raise FsqError(
            f"latent dim {latent.shape[-1]} != spec latent_dim {spec.latent_dim}")
    if np.any(np.isnan(latent)):
        raise FsqError("latent contains NaN")
    dims = spec.dims_per_codebook
    levels = np.asarray(spec.levels, dtype=np.float64)
    shaped = latent.reshape(latent.shape[:-1] + (spec.num_codebooks, dims))
    v = np.clip(shaped, -1.0, 1.0)
    digits = np.rint((v + 1.0) * 0.5 * (levels - 1.0)).astype(np.int64)
    return codes_to_indices(digits, spec)


def dequantize(frames: np.ndarray, spec: FsqSpec) -> np.ndarray:
    """Token frames (..., num_codebooks) -> center latents (..., latent_dim),
    every component in [-1, 1]."""
    frames = np.asarray(frames, dtype=np.int64)
    if frames.shape[-1] != spec.num_codebooks:
        raise FsqError(
            f"expected {spec.num_codebooks} codebooks, got {frames.shape[-1]}")
    digits = indices_to_digits(frames, spec)
    levels = np.asarray(spec.levels, dtype=np.float64)
    v = 2.0 * digits / (levels - 1.0) - 1.0
    return v.reshape(frames.shape[:-1] + (spec.latent_dim,)).astype(F32)


def quantize_frames(latents: np.ndarray, spec: FsqSpec) -> np.ndarray:
    """(num_frames, latent_dim) float -> (num_frames, num_codebooks) int64."""
    return quantize(latents, spec)


def dequantize_frames(tokens: np.ndarray, spec: FsqSpec) -> np.ndarray:
    return dequantize(tokens, spec)

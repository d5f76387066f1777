"""Training losses as pure functions, plus the reconstruction metrics that
need no external models.

Speaker embeddings are inputs here, never computed: the embedding file
format is one vector per line, space-separated decimal floats.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np


class MetricError(ValueError):
    pass


# --------------------------------------------------------------------------
# Cosine similarity and the speaker-consistency loss.
# --------------------------------------------------------------------------

def cosine_similarity(a: np.ndarray, b: np.ndarray) -> float:
    a = np.asarray(a, dtype=np.float64).reshape(-1)
    b = np.asarray(b, dtype=np.float64).reshape(-1)
    if a.shape != b.shape:
        raise MetricError(f"embedding lengths differ: {a.size} vs {b.size}")
    na, nb = np.linalg.norm(a), np.linalg.norm(b)
    if na == 0.0 or nb == 0.0:
        raise MetricError("cosine similarity undefined for zero-norm vectors")
    return float(np.dot(a, b) / (na * nb))


def scl(gt_embeddings: Sequence[np.ndarray], gen_embeddings: Sequence[np.ndarray],
        alpha: float = 0.1) -> float:
    """Speaker-consistency loss: -(alpha/n) * sum cos_sim(gt_i, gen_i).
    Range [-alpha, +alpha]; -alpha when all pairs align perfectly."""
    if alpha <= 0:
        raise MetricError(f"alpha must be positive, got {alpha}")
    if len(gt_embeddings) != len(gen_embeddings):
        raise MetricError(
            f"list lengths differ: {len(gt_embeddings)} vs {len(gen_embeddings)}")
    if not gt_embeddings:
        raise MetricError("empty embedding lists")
    total = sum(cosine_similarity(g, h)
                for g, h in zip(gt_embeddings, gen_embeddings))
    return -alpha * total / len(gt_embeddings)


# --------------------------------------------------------------------------
# GAN losses over externally supplied discriminator outputs.
# --------------------------------------------------------------------------

def squared_gan_losses(real_scores, fake_scores) -> tuple[float, float]:
    """Least-squares GAN objectives:
    d_loss = mean((real-1)^2) + mean(fake^2); g_loss = mean((fake-1)^2)."""
    real = np.asarray(real_scores, dtype=np.float64).reshape(-1)
    fake = np.asarray(fake_scores, dtype=np.float64).reshape(-1)
    if real.size == 0 or fake.size == 0:
        raise MetricError("score lists must be nonempty")
    d_loss = float(np.mean((real - 1.0) ** 2) + np.mean(fake ** 2))
    g_loss = float(np.mean((fake - 1.0) ** 2))
    return d_loss, g_loss


def feature_matching(real_feats: Sequence[np.ndarray],
                     fake_feats: Sequence[np.ndarray]) -> float:
    """Mean over layers of the mean absolute feature difference."""
    if len(real_feats) != len(fake_feats):
        raise MetricError(
            f"layer counts differ: {len(real_feats)} vs {len(fake_feats)}")
    if not real_feats:
        raise MetricError("empty feature lists")
    per_layer = []
    for i, (r, f) in enumerate(zip(real_feats, fake_feats)):
        r = np.asarray(r, dtype=np.float64)
        f = np.asarray(f, dtype=np.float64)
        if r.shape != f.shape:
            raise MetricError(
                f"layer {i} shapes differ: {r.shape} vs {f.shape}")
        per_layer.append(float(np.mean(np.abs(r - f))))
    return float(np.mean(per_layer))


# --------------------------------------------------------------------------
# Log-mel spectrogram distance.
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class MelSpec:
    """STFT + mel filterbank settings.

    Defaults are this tool's documented convention (the metric itself fixes
    no parameters), so absolute values are comparable only within-tool."""
    sample_rate_hz: int = 22050
    n_fft: int = 1024
    hop: int = 256
    win: int = 1024
    n_mels: int = 80
    fmin: float = 0.0
    fmax: float = 11025.0
    log_floor: float = 1e-5

    def __post_init__(self):
        if self.n_mels < 1:
            raise MetricError("n_mels must be >= 1")
        if self.fmax > self.sample_rate_hz / 2:
            raise MetricError(
                f"fmax {self.fmax} exceeds Nyquist {self.sample_rate_hz / 2}")
        if self.win > self.n_fft:
            raise MetricError("window longer than n_fft")
        if self.hop <= 0:
            raise MetricError("hop must be positive")
        if self.log_floor <= 0:
            raise MetricError("log_floor must be positive")


def _hz_to_mel(f):
    """Slaney mel scale: linear below 1 kHz, logarithmic above."""
    f = np.asarray(f, dtype=np.float64)
    mel = f / (200.0 / 3.0)
    log_region = f >= 1000.0
    mel = np.where(log_region,
                   15.0 + np.log(np.maximum(f, 1000.0) / 1000.0) / np.log(6.4) * 27.0,
                   mel)
    return mel


def _mel_to_hz(m):
    m = np.asarray(m, dtype=np.float64)
    f = m * (200.0 / 3.0)
    log_region = m >= 15.0
    f = np.where(log_region, 1000.0 * np.exp(np.log(6.4) * (m - 15.0) / 27.0), f)
    return f


def mel_filterbank(spec: MelSpec) -> np.ndarray:
    """(n_mels, n_fft//2 + 1) Slaney-style triangular filters,
    area-normalized (each filter scaled by 2 / band width in Hz)."""
    n_bins = spec.n_fft // 2 + 1
    fft_hz = np.arange(n_bins) * spec.sample_rate_hz / spec.n_fft
    mel_pts = np.linspace(_hz_to_mel(spec.fmin), _hz_to_mel(spec.fmax),
                          spec.n_mels + 2)
    hz_pts = _mel_to_hz(mel_pts)
    fb = np.zeros((spec.n_mels, n_bins), dtype=np.float64)
    for m in range(spec.n_mels):
        lo, ctr, hi = hz_pts[m], hz_pts[m + 1], hz_pts[m + 2]
        up = (fft_hz - lo) / max(ctr - lo, 1e-12)
        down = (hi - fft_hz) / max(hi - ctr, 1e-12)
        fb[m] = np.maximum(0.0, np.minimum(up, down))
        fb[m] *= 2.0 / (hi - lo)
    return fb


def log_mel(audio: np.ndarray, spec: MelSpec) -> np.ndarray:
    """(n_mels, n_frames) natural-log mel power spectrogram.

    Frames start at sample 0 and advance by ``hop`` (no centering); the
    signal is zero-padded so the last partial window is kept.  Power is
    |STFT|^2 with a periodic Hann window, floored at ``log_floor``."""
    audio = np.asarray(audio, dtype=np.float64).reshape(-1)
    if audio.size == 0:
        raise MetricError("empty audio")
    n_frames = max(1, -(-audio.size // spec.hop))
    need = (n_frames - 1) * spec.hop + spec.win
    padded = np.zeros(need, dtype=np.float64)
    padded[:audio.size] = audio
    idx = np.arange(spec.win)[None, :] + spec.hop * np.arange(n_frames)[:, None]
    frames = padded[idx]
    window = 0.5 - 0.5 * np.cos(2.0 * np.pi * np.arange(spec.win) / spec.win)
    spect = np.fft.rfft(frames * window, n=spec.n_fft, axis=1)
    power = np.abs(spect) ** 2
    mel_power = power @ mel_filterbank(spec).T
    return np.log(np.maximum(mel_power, spec.log_floor)).T


def mel_distance(a: np.ndarray, b: np.ndarray,
                 spec: MelSpec | None = None) -> float:
    """Mean absolute difference of log mel-spectrograms.  The shorter signal
    is zero-padded to the longer; symmetric and nonnegative."""
    spec = spec or MelSpec()
    a = np.asarray(a, dtype=np.float64).reshape(-1)
    b = np.asarray(b, dtype=np.float64).reshape(-1)
    if a.size == 0 or b.size == 0:
        raise MetricError("empty audio")
    n = max(a.size, b.size)
    if a.size < n:
        a = np.pad(a, (0, n - a.size))
    if b.size < n:
        b = np.pad(b, (0, n - b.size))
    return float(np.mean(np.abs(log_mel(a, spec) - log_mel(b, spec))))


# --------------------------------------------------------------------------
# Embedding files: one vector per line, space-separated floats.
# --------------------------------------------------------------------------

def load_embeddings(path: str | Path) -> list[np.ndarray]:
    out = []
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = line.strip()
        if not line:
            continue
        try:
            vec = np.array([float(tok) for tok in line.split()], dtype=np.float64)
        except ValueError as e:
            raise MetricError(f"{path}:{lineno}: {e}") from None
        out.append(vec)
    if not out:
        raise MetricError(f"{path}: no embedding vectors found")
    return out


def save_embeddings(path: str | Path, embeddings: Sequence[np.ndarray]) -> None:
    lines = [" ".join(repr(float(v)) for v in np.asarray(e).reshape(-1))
             for e in embeddings]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")

"""Stateful chunked encode/decode sessions and latency accounting.

Sessions wrap a generator Session with hop bookkeeping: the encoder buffers
a partial hop of input samples and emits one token frame per completed hop;
the decoder emits exactly hop_samples audio samples per pushed frame.  For
fully causal graphs, concatenated session output over any chunking is
bit-identical to the one-shot offline pass.

Noncausal graphs refuse streaming outright: their lookahead cost is the
point, so it is surfaced as an error (and as the token-buffering component
of the latency report) instead of being hidden behind approximation.
"""

from __future__ import annotations

import statistics
import time
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .config import CodecConfig, frame_rate_of
from .fsq import dequantize_frames, quantize_frames
from .generator import (F32, GeneratorGraph, Runner, build_decoder,
                        decode_latents, lookahead_frames, pad_to_hop)

__all__ = [
    "StreamingError", "EncoderSession", "DecoderSession", "LatencyReport",
    "measure_latency",
]


class StreamingError(RuntimeError):
    pass


def _require_causal(graph: GeneratorGraph, config: CodecConfig, role: str):
    if graph.fully_causal:
        return
    need = lookahead_frames(graph, config)
    raise StreamingError(
        f"{role} graph is not causal: streaming would require a lookahead of "
        f"{float(need):.2f} frames; decode offline instead or use a causal config")


class EncoderSession:
    """Streaming audio -> token frames for a fully causal encoder."""

    def __init__(self, runner: Runner):
        if runner.graph.direction != "encoder":
            raise StreamingError("EncoderSession needs an encoder runner")
        self.config = runner.graph.config
        _require_causal(runner.graph, self.config, "encoder")
        self.hop = self.config.hop_samples
        self._sess = runner.session()
        self._pending = np.zeros(0, dtype=F32)
        self.samples_consumed = 0
        self.frames_emitted = 0

    def push_samples(self, samples: np.ndarray) -> np.ndarray:
        """Feed any number of samples; returns (k, num_codebooks) token
        frames, one per completed hop.  Leftovers stay buffered."""
        samples = np.asarray(samples, dtype=F32).reshape(-1)
        self.samples_consumed += samples.size
        if self._pending.size:
            samples = np.concatenate([self._pending, samples])
        n_frames = samples.size // self.hop
        cut = n_frames * self.hop
        self._pending = samples[cut:].copy()
        if n_frames == 0:
            return np.zeros((0, self.config.fsq.num_codebooks), dtype=np.int64)
        latents = self._sess.process(
            np.ascontiguousarray(samples[:cut, None]), final=False)
        self.frames_emitted += latents.shape[0]
        return quantize_frames(latents, self.config.fsq)

    def finalize(self) -> np.ndarray:
        """Zero-pad the buffered partial hop (if any) and emit its frame."""
        if not self._pending.size:
            return np.zeros((0, self.config.fsq.num_codebooks), dtype=np.int64)
        tail = pad_to_hop(self._pending, self.hop)
        self._pending = np.zeros(0, dtype=F32)
        latents = self._sess.process(
            np.ascontiguousarray(tail[:, None]), final=False)
        self.frames_emitted += latents.shape[0]
        return quantize_frames(latents, self.config.fsq)

    @property
    def pending_samples(self) -> int:
        return self._pending.size


class DecoderSession:
    """Streaming token frames -> audio for a fully causal decoder."""

    def __init__(self, runner: Runner):
        if runner.graph.direction != "decoder":
            raise StreamingError("DecoderSession needs a decoder runner")
        self.config = runner.graph.config
        _require_causal(runner.graph, self.config, "decoder")
        self.hop = self.config.hop_samples
        self._sess = runner.session()
        self.frames_consumed = 0
        self.samples_emitted = 0

    def push_frames(self, frames: np.ndarray) -> np.ndarray:
        """Feed (k, num_codebooks) token frames; returns exactly k * hop
        samples."""
        frames = np.asarray(frames, dtype=np.int64)
        if frames.ndim == 1:
            frames = frames[None, :]
        latents = dequantize_frames(frames, self.config.fsq)
        out = self._sess.process(np.ascontiguousarray(latents), final=False)
        self.frames_consumed += frames.shape[0]
        self.samples_emitted += out.shape[0]
        if out.shape[0] != frames.shape[0] * self.hop:
            raise StreamingError(
                f"internal: emitted {out.shape[0]} samples for "
                f"{frames.shape[0]} frames (hop {self.hop})")
        return np.ascontiguousarray(out[:, 0])

    def push_frame(self, frame: np.ndarray) -> np.ndarray:
        return self.push_frames(np.asarray(frame)[None, :])


# --------------------------------------------------------------------------
# Latency measurement.
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class LatencyReport:
    ttfa_ms: float                 # buffering + compute, first token to first sample
    ttfa_compute_ms: float         # first-audio compute component
    ttfa_buffering_ms: float       # algorithmic token-buffering component
    rtf: float                     # processing time / emitted audio duration
    frames_buffered_before_first_output: int
    frames_per_sec: float
    runs: int


def measure_latency(config: CodecConfig, weights: dict[str, np.ndarray],
                    token_arrival_fps: Optional[float] = None,
                    runs: int = 5, rtf_frames: int = 25,
                    seed: int = 0) -> LatencyReport:
    """Measure decoder time-to-first-audio and real-time factor.

    ``token_arrival_fps`` models the schedule on which frames become
    available (None = instant).  The token-buffering component of TTFA is
    algorithmic: lookahead_frames / arrival rate (0 for causal decoders,
    and 0 under instant arrival).  Wall-clock components use a monotonic
    clock and report the median of ``runs`` runs."""
    if runs < 1:
        raise ValueError("runs must be >= 1")
    graph = build_decoder(config)
    runner = Runner(graph, weights)
    fps = float(frame_rate_of(config))
    hop = config.hop_samples
    rng = np.random.default_rng(seed)
    codes = config.fsq.codes_per_codebook
    tokens = rng.integers(0, codes, size=(rtf_frames, config.fsq.num_codebooks))

    causal = graph.fully_causal
    look = lookahead_frames(graph, config)
    if causal:
        frames_buffered = 1
        buffering_ms = 0.0
    else:
        frames_buffered = 1 + int(np.ceil(float(look)))
        rate = token_arrival_fps if token_arrival_fps else fps
        buffering_ms = float(look) / rate * 1000.0

    first_ms: list[float] = []
    total_ms: list[float] = []
    for _ in range(runs):
        if causal:
            sess = DecoderSession(runner)
            t0 = time.perf_counter()
            sess.push_frame(tokens[0])
            first = time.perf_counter()
            for i in range(1, rtf_frames):
                sess.push_frame(tokens[i])
            done = time.perf_counter()
            first_ms.append((first - t0) * 1000.0)
            total_ms.append((done - t0) * 1000.0)
        else:
            need = min(frames_buffered, rtf_frames)
            t0 = time.perf_counter()
            decode_latents(runner, dequantize_frames(tokens[:need], config.fsq))
            first = time.perf_counter()
            decode_latents(runner, dequantize_frames(tokens, config.fsq))
            done = time.perf_counter()
            first_ms.append((first - t0) * 1000.0)
            total_ms.append((done - first) * 1000.0)

    compute_first = statistics.median(first_ms)
    proc_ms = statistics.median(total_ms)
    audio_s = rtf_frames * hop / config.sample_rate_hz
    return LatencyReport(
        ttfa_ms=buffering_ms + compute_first,
        ttfa_compute_ms=compute_first,
        ttfa_buffering_ms=buffering_ms,
        rtf=(proc_ms / 1000.0) / audio_s,
        frames_buffered_before_first_output=frames_buffered,
        frames_per_sec=fps,
        runs=runs,
    )

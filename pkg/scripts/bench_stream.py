#!/usr/bin/env python3
"""Measure encode/decode throughput and decoder latency for one config.

Example:
    python scripts/bench_stream.py --config 12.5fps-1.1kbps-causal --seconds 3
"""

import argparse
import time

import numpy as np

from nanocodec import fsq
from nanocodec.config import get_config
from nanocodec.generator import (Runner, build_decoder, build_encoder,
                                 decode_latents, encode_audio)
from nanocodec.streaming import measure_latency
from nanocodec.weights import merge, random_init


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--config", default="12.5fps-1.1kbps-causal")
    ap.add_argument("--seconds", type=float, default=3.0)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    cfg = get_config(args.config)
    enc_g, dec_g = build_encoder(cfg), build_decoder(cfg)
    w = merge(random_init(enc_g, args.seed), random_init(dec_g, args.seed + 1))
    enc_r, dec_r = Runner(enc_g, w), Runner(dec_g, w)

    rng = np.random.default_rng(args.seed)
    n = int(args.seconds * cfg.sample_rate_hz)
    audio = rng.uniform(-1, 1, n).astype(np.float32)

    t0 = time.perf_counter()
    latents = encode_audio(enc_r, audio)
    t_enc = time.perf_counter() - t0
    tokens = fsq.quantize_frames(latents, cfg.fsq)
    t0 = time.perf_counter()
    out = decode_latents(dec_r, fsq.dequantize_frames(tokens, cfg.fsq))
    t_dec = time.perf_counter() - t0

    dur = n / cfg.sample_rate_hz
    print(f"config={cfg.name}")
    print(f"audio_seconds={dur:.3f} frames={tokens.shape[0]}")
    print(f"encode_s={t_enc:.3f} encode_rtf={t_enc / dur:.3f}")
    print(f"decode_s={t_dec:.3f} decode_rtf={t_dec / dur:.3f}")

    if cfg.decoder_causal:
        rep = measure_latency(cfg, w, runs=5, rtf_frames=min(25, tokens.shape[0]))
        print(f"ttfa_ms={rep.ttfa_ms:.2f} (compute {rep.ttfa_compute_ms:.2f} "
              f"+ buffering {rep.ttfa_buffering_ms:.2f})")
        print(f"streaming_rtf={rep.rtf:.3f} "
              f"frames_buffered={rep.frames_buffered_before_first_output}")
    assert out.shape[0] == tokens.shape[0] * cfg.hop_samples


if __name__ == "__main__":
    main()

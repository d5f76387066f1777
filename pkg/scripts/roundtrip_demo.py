#!/usr/bin/env python3
"""End-to-end demo: synthesize a test tone, run encode -> bitstream ->
decode with random weights, and report rates and reconstruction stats.

With random (untrained) weights the output is not speech-quality audio;
the demo shows the plumbing: exact length preservation, bitrate accounting,
and streaming equivalence.
"""

import argparse
from pathlib import Path

import numpy as np

from nanocodec import audio_io, fsq
from nanocodec.bitstream import BitstreamHeader, read_all_frames, write_stream
from nanocodec.config import get_config, rate_report
from nanocodec.generator import (Runner, build_decoder, build_encoder,
                                 decode_latents, encode_audio)
from nanocodec.metrics import MelSpec, mel_distance
from nanocodec.streaming import DecoderSession, EncoderSession
from nanocodec.weights import merge, random_init


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--config", default="12.5fps-1.1kbps-causal")
    ap.add_argument("--seconds", type=float, default=1.0)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--keep", metavar="DIR", help="write wav/nncb files here")
    args = ap.parse_args()

    cfg = get_config(args.config)
    rr = rate_report(cfg)
    enc_g, dec_g = build_encoder(cfg), build_decoder(cfg)
    w = merge(random_init(enc_g, args.seed), random_init(dec_g, args.seed + 1))
    enc_r, dec_r = Runner(enc_g, w), Runner(dec_g, w)

    sr = cfg.sample_rate_hz
    n = int(args.seconds * sr)
    t = np.arange(n) / sr
    audio = (0.5 * np.sin(2 * np.pi * 220 * t) *
             np.exp(-t * 0.5)).astype(np.float32)

    latents = encode_audio(enc_r, audio)
    tokens = fsq.quantize_frames(latents, cfg.fsq)
    stream = write_stream(BitstreamHeader.for_config(cfg, n), tokens)
    header, tokens2 = read_all_frames(stream)
    out = decode_latents(dec_r, fsq.dequantize_frames(tokens2, cfg.fsq))
    out = out[:header.original_sample_count]

    print(f"config={cfg.name}  fps={float(rr.frames_per_sec):.4g}  "
          f"bitrate={float(rr.bitrate_bps) / 1000:.4g} kbps")
    print(f"input_samples={n}  frames={tokens.shape[0]}  "
          f"stream_bytes={len(stream)}")
    print(f"effective_kbps={len(stream) * 8 / args.seconds / 1000:.4f} "
          "(includes header)")
    print(f"output_samples={out.size}  length_preserved={out.size == n}")
    print(f"mel_distance_vs_input={mel_distance(audio, out, MelSpec()):.4f} "
          "(random weights; not a quality claim)")

    if cfg.fully_causal:
        es, ds = EncoderSession(enc_r), DecoderSession(dec_r)
        stitched = []
        for lo in range(0, n, 1000):
            tk = es.push_samples(audio[lo:lo + 1000])
            if tk.size:
                stitched.append(ds.push_frames(tk))
        tk = es.finalize()
        if tk.size:
            stitched.append(ds.push_frames(tk))
        stitched = np.concatenate(stitched)[:n]
        full = decode_latents(dec_r, fsq.dequantize_frames(tokens, cfg.fsq))[:n]
        print(f"streaming_bit_identical={np.array_equal(stitched, full)}")

    if args.keep:
        d = Path(args.keep)
        d.mkdir(parents=True, exist_ok=True)
        audio_io.write_wav(d / "input.wav", audio, sr)
        (d / "tokens.nncb").write_bytes(stream)
        audio_io.write_wav(d / "decoded.wav", out, sr)
        print(f"wrote input.wav, tokens.nncb, decoded.wav to {d}")


if __name__ == "__main__":
    main()

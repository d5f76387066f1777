"""Command-line surface: encode, decode, info, analyze, eval, bench,
gen-weights.

Reports are line-oriented ``key=value`` text for scripting; ``--json`` emits
the same data as one JSON object.  Output files are written to a temp file
and atomically renamed, so a failed command never leaves a partial file.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import tempfile
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import audio_io, bitstream, fsq, metrics, weights as weights_io
from .config import (CodecConfig, ConfigError, config_text, fingerprint,
                     get_config, rate_report, validate)
from .generator import (Runner, build_decoder, build_encoder, decode_latents,
                        encode_audio, lookahead_frames, parameter_count,
                        shape_plan)
from .streaming import measure_latency

PAPER_ENCODER_PARAMS = 30_400_000
PAPER_DECODER_PARAMS = 31_600_000


class CliError(RuntimeError):
    pass


def _atomic_write(path: Path, data: bytes) -> None:
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=str(path.parent or Path(".")),
                               prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except OSError:
            pass
        raise


def _emit(report: dict, as_json: bool) -> None:
    if as_json:
        print(json.dumps(report, indent=2, sort_keys=True))
        return
    for key, val in report.items():
        if isinstance(val, dict):
            for k2, v2 in val.items():
                print(f"{key}.{k2}={v2}")
        else:
            print(f"{key}={val}")


def _frac_str(x: Fraction, digits: int = 4) -> str:
    return f"{float(x):.{digits}g}" if x.denominator != 1 else str(x.numerator)


def _load_model_weights(path: str, config: CodecConfig, force: bool):
    enc_g, dec_g = build_encoder(config), build_decoder(config)
    fprint, records = weights_io.read_records(path)
    if fprint != fingerprint(config) and not force:
        raise CliError(
            f"{path}: weight file fingerprint does not match config "
            f"{config.name!r} (use --force to override)")
    plan = {}
    plan.update(shape_plan(enc_g))
    plan.update(shape_plan(dec_g))
    for key, shape in plan.items():
        if key not in records:
            raise CliError(f"{path}: missing record for node {key!r}")
        if tuple(records[key].shape) != shape:
            raise CliError(f"{path}: record {key!r} has shape "
                           f"{tuple(records[key].shape)}, graph requires {shape}")
    for key in records:
        if key not in plan:
            print(f"warning: unused record {key!r}", file=sys.stderr)
    return enc_g, dec_g, records


def _read_mono(path: str, config: CodecConfig, resample: bool, downmix: bool):
    wav = audio_io.read_wav(path)
    samples = wav.samples
    if samples.ndim == 2:
        if not downmix:
            raise CliError(
                f"{path} has {samples.shape[1]} channels; pass --downmix to "
                "average them to mono")
        samples = audio_io.downmix(samples)
    if wav.sample_rate_hz != config.sample_rate_hz:
        if not resample:
            raise CliError(
                f"{path} is {wav.sample_rate_hz} Hz but the config wants "
                f"{config.sample_rate_hz} Hz; pass --resample to convert")
        samples = audio_io.resample_linear(samples, wav.sample_rate_hz,
                                           config.sample_rate_hz)
    return samples


# --------------------------------------------------------------------------
# Subcommands.
# --------------------------------------------------------------------------

def cmd_encode(args) -> dict:
    config = get_config(args.config)
    enc_g, _, records = _load_model_weights(args.weights, config, args.force)
    samples = _read_mono(getattr(args, "in"), config, args.resample, args.downmix)
    if samples.size == 0:
        raise CliError("input audio is empty")
    runner = Runner(enc_g, records)
    latents = encode_audio(runner, samples)
    tokens = fsq.quantize_frames(latents, config.fsq)
    header = bitstream.BitstreamHeader.for_config(config, samples.size)
    _atomic_write(Path(args.out), bitstream.write_stream(header, tokens))
    return {
        "config": config.name,
        "frames": int(tokens.shape[0]),
        "tokens": int(tokens.size),
        "original_samples": int(samples.size),
        "out": str(args.out),
    }


def cmd_decode(args) -> dict:
    config = get_config(args.config)
    data = Path(getattr(args, "in")).read_bytes()
    header, tokens = bitstream.read_all_frames(data)
    if (header.stride_product != config.hop_samples
            or header.num_codebooks != config.fsq.num_codebooks
            or tuple(header.levels) != tuple(config.fsq.levels)
            or header.sample_rate_hz != config.sample_rate_hz):
        raise CliError(
            f"bitstream header (hop {header.stride_product}, "
            f"{header.num_codebooks} codebooks, levels {header.levels}) does "
            f"not match config {config.name!r}")
    _, dec_g, records = _load_model_weights(args.weights, config, args.force)
    runner = Runner(dec_g, records)
    latents = fsq.dequantize_frames(tokens, config.fsq)
    samples = decode_latents(runner, latents)
    samples = samples[:header.original_sample_count]
    buf_path = Path(args.out)
    tmp = tempfile.NamedTemporaryFile(delete=False, dir=str(buf_path.parent or "."),
                                      suffix=".tmp")
    tmp.close()
    audio_io.write_wav(tmp.name, samples, config.sample_rate_hz, pcm16=args.pcm16)
    os.replace(tmp.name, buf_path)
    return {
        "config": config.name,
        "frames": int(tokens.shape[0]),
        "samples": int(samples.size),
        "out": str(args.out),
    }


def cmd_info(args) -> dict:
    report: dict = {}
    if args.config:
        config = get_config(args.config)
        rr = rate_report(config)
        report["config"] = {
            key: val for key, val in
            (line.split(" = ") for line in config_text(config).strip().splitlines())
        }
        report["rates"] = {
            "frames_per_sec": _frac_str(rr.frames_per_sec, 6),
            "frames_per_sec_exact": str(rr.frames_per_sec),
            "tokens_per_sec": _frac_str(rr.tokens_per_sec, 6),
            "bits_per_token": rr.bits_per_token,
            "bitrate_bps": _frac_str(rr.bitrate_bps, 6),
            "hop_samples": rr.hop_samples,
        }
        report["valid"] = "ok" if not validate(config) else "; ".join(validate(config))
    if args.weights:
        fprint, records = weights_io.read_records(args.weights)
        report["weights_fingerprint"] = fprint.hex()
        report["records"] = {
            name: "x".join(map(str, arr.shape)) + f" f32 ({arr.nbytes}B)"
            for name, arr in records.items()
        }
        report["total_parameters"] = int(sum(a.size for a in records.values()))
    if not report:
        raise CliError("info: pass --config and/or --weights")
    return report


def cmd_analyze(args) -> dict:
    config = get_config(args.config)
    rr = rate_report(config)
    enc_g, dec_g = build_encoder(config), build_decoder(config)
    enc_params, dec_params = parameter_count(enc_g), parameter_count(dec_g)
    enc_look = lookahead_frames(enc_g, config)
    dec_look = lookahead_frames(dec_g, config)
    total_look = enc_look + dec_look
    report = {
        "config": config.name,
        "frames_per_sec": _frac_str(rr.frames_per_sec, 6),
        "tokens_per_sec": _frac_str(rr.tokens_per_sec, 6),
        "bits_per_token": rr.bits_per_token,
        "bitrate_bps": _frac_str(rr.bitrate_bps, 6),
        "hop_samples": rr.hop_samples,
        "encoder_parameters": enc_params,
        "decoder_parameters": dec_params,
        "encoder_parameters_vs_published": round(enc_params / PAPER_ENCODER_PARAMS, 4),
        "decoder_parameters_vs_published": round(dec_params / PAPER_DECODER_PARAMS, 4),
        "lookahead_frames": float(total_look),
        "lookahead_ms": float(total_look / rr.frames_per_sec * 1000),
        "encoder_lookahead_frames": float(enc_look),
        "decoder_lookahead_frames": float(dec_look),
        "encoder_causal": config.encoder_causal,
        "decoder_causal": config.decoder_causal,
    }
    if args.json:
        plan = {}
        plan.update(shape_plan(enc_g))
        plan.update(shape_plan(dec_g))
        report["config_fingerprint"] = fingerprint(config).hex()
        report["shape_plan"] = {k: list(v) for k, v in plan.items()}
        report["config_text"] = config_text(config)
    return report


def cmd_eval(args) -> dict:
    ref = audio_io.read_wav(args.ref)
    deg = audio_io.read_wav(args.deg)
    ref_s = audio_io.downmix(ref.samples)
    deg_s = audio_io.downmix(deg.samples)
    if ref.sample_rate_hz != deg.sample_rate_hz:
        raise CliError(
            f"sample rates differ: {ref.sample_rate_hz} vs {deg.sample_rate_hz}")
    if ref_s.size != deg_s.size:
        print(f"warning: lengths differ ({ref_s.size} vs {deg_s.size}); "
              "the shorter signal is zero-padded", file=sys.stderr)
    spec = metrics.MelSpec(sample_rate_hz=ref.sample_rate_hz,
                           fmax=ref.sample_rate_hz / 2)
    report = {"mel_distance": round(metrics.mel_distance(ref_s, deg_s, spec), 6)}
    if bool(args.ref_emb) != bool(args.deg_emb):
        raise CliError("pass both --ref-emb and --deg-emb, or neither")
    if args.ref_emb:
        ref_e = metrics.load_embeddings(args.ref_emb)
        deg_e = metrics.load_embeddings(args.deg_emb)
        if len(ref_e) != len(deg_e):
            raise CliError(
                f"embedding counts differ: {len(ref_e)} vs {len(deg_e)}")
        sims = [metrics.cosine_similarity(a, b) for a, b in zip(ref_e, deg_e)]
        report["secs"] = round(float(np.mean(sims)), 6)
    return report


def cmd_bench(args) -> dict:
    config = get_config(args.config)
    if args.weights:
        _, dec_g, records = _load_model_weights(args.weights, config, args.force)
    else:
        enc_g, dec_g = build_encoder(config), build_decoder(config)
        records = weights_io.merge(weights_io.random_init(enc_g, args.seed),
                                   weights_io.random_init(dec_g, args.seed + 1))
    rep = measure_latency(config, records,
                          token_arrival_fps=args.arrival_fps,
                          runs=args.runs, rtf_frames=args.frames,
                          seed=args.seed)
    return {
        "config": config.name,
        "ttfa_ms": round(rep.ttfa_ms, 3),
        "ttfa_compute_ms": round(rep.ttfa_compute_ms, 3),
        "ttfa_buffering_ms": round(rep.ttfa_buffering_ms, 3),
        "rtf": round(rep.rtf, 5),
        "frames_buffered_before_first_output":
            rep.frames_buffered_before_first_output,
        "frames_per_sec": round(rep.frames_per_sec, 4),
        "runs": rep.runs,
    }


def cmd_gen_weights(args) -> dict:
    config = get_config(args.config)
    enc_g, dec_g = build_encoder(config), build_decoder(config)
    wmap = weights_io.merge(weights_io.random_init(enc_g, args.seed),
                            weights_io.random_init(dec_g, args.seed + 1))
    out_path = Path(args.out)
    fd, tmp = tempfile.mkstemp(dir=str(out_path.parent or Path(".")),
                               prefix=f".{out_path.name}.", suffix=".tmp")
    os.close(fd)
    try:
        weights_io.save(tmp, wmap, config)
        os.replace(tmp, out_path)
    except BaseException:
        try:
            os.unlink(tmp)
        except OSError:
            pass
        raise
    total = sum(int(np.prod(v.shape)) for v in wmap.values())
    return {"config": config.name, "seed": args.seed,
            "tensors": len(wmap), "parameters": total, "out": str(args.out)}


# --------------------------------------------------------------------------
# Parser.
# --------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="nanocodec",
        description="Streaming neural audio codec runtime (encode, decode, "
                    "analyze, benchmark).")
    sub = p.add_subparsers(dest="command", required=True)

    def add_common(sp):
        sp.add_argument("--json", action="store_true",
                        help="emit the report as JSON")

    sp = sub.add_parser("encode", help="WAV -> token bitstream (.nncb)")
    sp.add_argument("--config", required=True, help="builtin name or config file")
    sp.add_argument("--weights", required=True)
    sp.add_argument("--in", required=True, metavar="WAV")
    sp.add_argument("--out", required=True, metavar="NNCB")
    sp.add_argument("--resample", action="store_true",
                    help="linearly resample input to the config rate")
    sp.add_argument("--downmix", action="store_true",
                    help="average multichannel input to mono")
    sp.add_argument("--force", action="store_true",
                    help="ignore weight-file fingerprint mismatch")
    add_common(sp)
    sp.set_defaults(fn=cmd_encode)

    sp = sub.add_parser("decode", help="token bitstream (.nncb) -> WAV")
    sp.add_argument("--config", required=True)
    sp.add_argument("--weights", required=True)
    sp.add_argument("--in", required=True, metavar="NNCB")
    sp.add_argument("--out", required=True, metavar="WAV")
    sp.add_argument("--pcm16", action="store_true",
                    help="write 16-bit PCM instead of float32")
    sp.add_argument("--force", action="store_true")
    add_common(sp)
    sp.set_defaults(fn=cmd_decode)

    sp = sub.add_parser("info", help="print a config and/or weight-file table")
    sp.add_argument("--config")
    sp.add_argument("--weights")
    add_common(sp)
    sp.set_defaults(fn=cmd_info)

    sp = sub.add_parser("analyze",
                        help="rates, parameter counts, lookahead for a config")
    sp.add_argument("--config", required=True)
    add_common(sp)
    sp.set_defaults(fn=cmd_analyze)

    sp = sub.add_parser("eval", help="compare a reference WAV and a decoded WAV")
    sp.add_argument("--ref", required=True)
    sp.add_argument("--deg", required=True)
    sp.add_argument("--ref-emb", help="reference speaker-embedding file")
    sp.add_argument("--deg-emb", help="degraded speaker-embedding file")
    add_common(sp)
    sp.set_defaults(fn=cmd_eval)

    sp = sub.add_parser("bench", help="decoder TTFA / RTF measurement")
    sp.add_argument("--config", required=True)
    sp.add_argument("--weights", help="weight file (defaults to seeded random)")
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--arrival-fps", type=float, default=None,
                    help="token arrival schedule (default: instant)")
    sp.add_argument("--frames", type=int, default=25)
    sp.add_argument("--runs", type=int, default=5)
    sp.add_argument("--force", action="store_true")
    add_common(sp)
    sp.set_defaults(fn=cmd_bench)

    sp = sub.add_parser("gen-weights",
                        help="write a reproducible random weight file")
    sp.add_argument("--config", required=True)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--out", required=True)
    add_common(sp)
    sp.set_defaults(fn=cmd_gen_weights)

    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        report = args.fn(args)
    except (CliError, ConfigError, OSError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    _emit(report, getattr(args, "json", False))
    return 0


if __name__ == "__main__":
    sys.exit(main())

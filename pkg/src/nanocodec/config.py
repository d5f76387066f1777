"""Codec configurations and the frame-rate / token-rate / bitrate arithmetic.

A :class:`CodecConfig` is the single source of truth for one codec variant:
sample rate, encoder stride schedule, channel widths, FSQ code space and
causality flags.  All rate arithmetic is exact (``fractions.Fraction``), so
22050/1024 is carried as a rational and only rounded for display.
"""

from __future__ import annotations

import hashlib
import math
import os
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path


class ConfigError(ValueError):
    """Raised for malformed or unknown codec configurations."""


@dataclass(frozen=True)
class FsqSpec:
    """Finite-scalar-quantization code space: per-dimension level counts,
    replicated over ``num_codebooks`` parallel codebooks."""

    num_codebooks: int
    levels: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "levels", tuple(int(v) for v in self.levels))

    @property
    def dims_per_codebook(self) -> int:
        return len(self.levels)

    @property
    def latent_dim(self) -> int:
        return self.num_codebooks * len(self.levels)

    @property
    def codes_per_codebook(self) -> int:
        return math.prod(self.levels)

    @property
    def bits_per_token(self) -> int:
        return bits_per_token(self.codes_per_codebook)


def bits_per_token(codes_per_codebook: int) -> int:
    """Bits needed to store one token index: ceil(log2(codes))."""
    if codes_per_codebook < 2:
        raise ConfigError(f"need at least 2 codes, got {codes_per_codebook}")
    return (codes_per_codebook - 1).bit_length()


@dataclass(frozen=True)
class CodecConfig:
    name: str
    sample_rate_hz: int
    encoder_strides: tuple[int, ...]
    encoder_initial_channels: int
    decoder_initial_channels: int
    fsq: FsqSpec
    encoder_causal: bool
    decoder_causal: bool
    residual_dilations: tuple[int, ...] = (1, 3, 5)
    residual_kernel_size: int = 3

    def __post_init__(self):
        object.__setattr__(self, "encoder_strides",
                           tuple(int(s) for s in self.encoder_strides))
        object.__setattr__(self, "residual_dilations",
                           tuple(int(d) for d in self.residual_dilations))

    @property
    def hop_samples(self) -> int:
        """Audio samples represented by one latent frame."""
        return math.prod(self.encoder_strides)

    @property
    def decoder_upsample_rates(self) -> tuple[int, ...]:
        """Exactly the encoder strides, reversed."""
        return tuple(reversed(self.encoder_strides))

    @property
    def num_stages(self) -> int:
        return len(self.encoder_strides)

    @property
    def bottleneck_channels(self) -> int:
        """Channel width entering the quantizer bottleneck projection."""
        return self.encoder_initial_channels * 2 ** self.num_stages

    @property
    def fully_causal(self) -> bool:
        return self.encoder_causal and self.decoder_causal


@dataclass(frozen=True)
class RateReport:
    frames_per_sec: Fraction
    tokens_per_sec: Fraction
    bits_per_token: int
    bitrate_bps: Fraction
    hop_samples: int


def frame_rate_of(config: CodecConfig) -> Fraction:
    """Latent frames per second: sample_rate / product(strides), exact."""
    if not config.encoder_strides:
        raise ConfigError("empty stride schedule")
    if any(s <= 0 for s in config.encoder_strides):
        raise ConfigError(f"non-positive stride in {config.encoder_strides}")
    if config.sample_rate_hz <= 0:
        raise ConfigError(f"non-positive sample rate {config.sample_rate_hz}")
    return Fraction(config.sample_rate_hz, config.hop_samples)


def rate_report(config: CodecConfig) -> RateReport:
    fps = frame_rate_of(config)
    tps = fps * config.fsq.num_codebooks
    bpt = config.fsq.bits_per_token
    return RateReport(
        frames_per_sec=fps,
        tokens_per_sec=tps,
        bits_per_token=bpt,
        bitrate_bps=tps * bpt,
        hop_samples=config.hop_samples,
    )


def validate(config: CodecConfig) -> list[str]:
    """Check every config invariant; returns all violations (empty = ok)."""
    v: list[str] = []
    if not config.name:
        v.append("empty name")
    if config.sample_rate_hz <= 0:
        v.append(f"non-positive sample rate {config.sample_rate_hz}")
    if not config.encoder_strides:
        v.append("empty stride schedule")
    for s in config.encoder_strides:
        if s <= 0:
            v.append(f"non-positive stride {s}")
    if config.encoder_initial_channels <= 0:
        v.append("non-positive encoder_initial_channels")
    if config.decoder_initial_channels <= 0:
        v.append("non-positive decoder_initial_channels")
    if config.num_stages and config.decoder_initial_channels % 2 ** config.num_stages:
        v.append(
            f"decoder_initial_channels {config.decoder_initial_channels} not "
            f"divisible by 2^{config.num_stages} (halved once per stage)")
    if config.fsq.num_codebooks <= 0:
        v.append("non-positive codebook count")
    if not config.fsq.levels:
        v.append("empty level vector")
    for lv in config.fsq.levels:
        if lv < 2:
            v.append(f"FSQ level {lv} < 2")
    if not config.residual_dilations:
        v.append("empty residual dilation list")
    for d in config.residual_dilations:
        if d <= 0:
            v.append(f"non-positive dilation {d}")
    if config.residual_kernel_size <= 0 or config.residual_kernel_size % 2 == 0:
        v.append(f"residual kernel size {config.residual_kernel_size} "
                 "must be a positive odd integer")
    return v


def validate_or_raise(config: CodecConfig) -> CodecConfig:
    violations = validate(config)
    if violations:
        raise ConfigError(f"invalid config {config.name!r}: " + "; ".join(violations))
    return config


# --------------------------------------------------------------------------
# Built-in configurations: one per published rate/causality combination.
# --------------------------------------------------------------------------

_LEVELS_2016 = (8, 7, 6, 6)
# 65536- and 4032-code level vectors are assumptions (only the code counts
# are published): 16^4 = 65536 keeps four dims per codebook; 8*8*7*9 = 4032.
_LEVELS_65536 = (16, 16, 16, 16)
_LEVELS_4032 = (8, 8, 7, 9)

_STRIDES = {
    "21.5": (2, 2, 4, 8, 8),
    "25": (2, 3, 3, 7, 7),
    "12.5": (2, 3, 6, 7, 7),
    "6.25": (3, 4, 6, 7, 7),
}


def _mk(name, fps_key, n_books, levels, enc_causal, dec_causal):
    return CodecConfig(
        name=name,
        sample_rate_hz=22050,
        encoder_strides=_STRIDES[fps_key],
        encoder_initial_channels=24,
        decoder_initial_channels=864,
        fsq=FsqSpec(num_codebooks=n_books, levels=levels),
        encoder_causal=enc_causal,
        decoder_causal=dec_causal,
    )


def builtin_configs() -> list[CodecConfig]:
    """Every published configuration row, in its published causality
    variant(s).  Suffix grammar: no suffix = fully noncausal,
    ``-causal`` = fully causal, ``-partialcausal`` = noncausal encoder with
    causal decoder."""
    return [
        _mk("21.5fps-1.89kbps", "21.5", 8, _LEVELS_2016, False, False),
        _mk("21.5fps-1.89kbps-partialcausal", "21.5", 8, _LEVELS_2016, False, True),
        _mk("25fps-1.1kbps-partialcausal", "25", 4, _LEVELS_2016, False, True),
        _mk("12.5fps-1.1kbps", "12.5", 8, _LEVELS_2016, False, False),
        _mk("12.5fps-1.1kbps-causal", "12.5", 8, _LEVELS_2016, True, True),
        _mk("12.5fps-1.1kbps-partialcausal", "12.5", 8, _LEVELS_2016, False, True),
        _mk("6.25fps-1.1kbps-partialcausal", "6.25", 16, _LEVELS_2016, False, True),
        _mk("12.5fps-1.78kbps-partialcausal", "12.5", 13, _LEVELS_2016, False, True),
        _mk("12.5fps-0.8kbps-partialcausal", "12.5", 4, _LEVELS_65536, False, True),
        _mk("12.5fps-0.6kbps-partialcausal", "12.5", 4, _LEVELS_4032, False, True),
    ]


def get_config(name: str) -> CodecConfig:
    """Look up a builtin config by name, or load one from a file path.

    The environment variable ``NANOCODEC_CONFIG_DIR`` adds a search
    directory for ``<name>.cfg`` files."""
    for c in builtin_configs():
        if c.name == name:
            return c
    p = Path(name)
    if p.is_file():
        return load_config_file(p)
    cfg_dir = os.environ.get("NANOCODEC_CONFIG_DIR")
    if cfg_dir:
        cand = Path(cfg_dir) / f"{name}.cfg"
        if cand.is_file():
            return load_config_file(cand)
    raise ConfigError(f"unknown config {name!r} (not a builtin, file, or "
                      f"$NANOCODEC_CONFIG_DIR entry)")


# --------------------------------------------------------------------------
# Flat key/value config files.
# --------------------------------------------------------------------------

_LIST_FIELDS = {"encoder_strides", "residual_dilations", "fsq.levels"}
_INT_FIELDS = {"sample_rate_hz", "encoder_initial_channels",
               "decoder_initial_channels", "residual_kernel_size",
               "fsq.num_codebooks"}
_BOOL_FIELDS = {"encoder_causal", "decoder_causal"}


def _parse_bool(s: str) -> bool:
    low = s.strip().lower()
    if low in ("true", "1", "yes"):
        return True
    if low in ("false", "0", "no"):
        return False
    raise ConfigError(f"not a boolean: {s!r}")


def parse_config_text(text: str) -> CodecConfig:
    kv: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, val = line.split("=", 1)
        kv[key.strip()] = val.strip()

    def pop(key, default=None):
        if key in kv:
            return kv.pop(key)
        if default is None:
            raise ConfigError(f"missing required field {key!r}")
        return default

    def ints(s):
        parts = s.replace(",", " ").split()
        return tuple(int(p) for p in parts)

    cfg = CodecConfig(
        name=pop("name"),
        sample_rate_hz=int(pop("sample_rate_hz")),
        encoder_strides=ints(pop("encoder_strides")),
        encoder_initial_channels=int(pop("encoder_initial_channels")),
        decoder_initial_channels=int(pop("decoder_initial_channels")),
        fsq=FsqSpec(num_codebooks=int(pop("fsq.num_codebooks")),
                    levels=ints(pop("fsq.levels"))),
        encoder_causal=_parse_bool(pop("encoder_causal")),
        decoder_causal=_parse_bool(pop("decoder_causal")),
        residual_dilations=ints(pop("residual_dilations", "1 3 5")),
        residual_kernel_size=int(pop("residual_kernel_size", "3")),
    )
    if kv:
        raise ConfigError(f"unknown config fields: {sorted(kv)}")
    return validate_or_raise(cfg)


def load_config_file(path: str | Path) -> CodecConfig:
    return parse_config_text(Path(path).read_text(encoding="utf-8"))


def config_text(config: CodecConfig) -> str:
    """Canonical flat key/value serialization (also the fingerprint input)."""
    lines = [
        f"name = {config.name}",
        f"sample_rate_hz = {config.sample_rate_hz}",
        "encoder_strides = " + ",".join(map(str, config.encoder_strides)),
        f"encoder_initial_channels = {config.encoder_initial_channels}",
        f"decoder_initial_channels = {config.decoder_initial_channels}",
        f"fsq.num_codebooks = {config.fsq.num_codebooks}",
        "fsq.levels = " + ",".join(map(str, config.fsq.levels)),
        f"encoder_causal = {str(config.encoder_causal).lower()}",
        f"decoder_causal = {str(config.decoder_causal).lower()}",
        "residual_dilations = " + ",".join(map(str, config.residual_dilations)),
        f"residual_kernel_size = {config.residual_kernel_size}",
    ]
    return "\n".join(lines) + "\n"


def fingerprint(config: CodecConfig) -> bytes:
    """32-byte digest binding a weight file to its config."""
    return hashlib.sha256(config_text(config).encode("utf-8")).digest()

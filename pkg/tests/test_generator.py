import math
from fractions import Fraction

import numpy as np
import pytest

from nanocodec.config import CodecConfig, ConfigError, FsqSpec, builtin_configs, get_config
from nanocodec.generator import (ConvNode, GraphError, Runner,
                                 build_decoder, build_encoder,
                                 decode_latents, encode_audio,
                                 lookahead_frames, lookahead_ms,
                                 parameter_count, shape_plan)
from nanocodec.weights import random_init

from conftest import tiny_config

F32 = np.float32


def _channels_of(graph):
    trail = []
    for node in graph.nodes:
        if isinstance(node, ConvNode):
            trail.append((node.spec.in_channels, node.spec.out_channels))
    return trail


def test_encoder_channel_trajectory_12_5():
    g = build_encoder(get_config("12.5fps-1.1kbps-partialcausal"))
    convs = list(g.conv_nodes())
    downs = [c for c in convs if c.name.startswith("enc.down")]
    assert [(c.spec.in_channels, c.spec.out_channels) for c in downs] == \
        [(24, 48), (48, 96), (96, 192), (192, 384), (384, 768)]
    proj = convs[-1]
    assert proj.name == "enc.proj"
    assert proj.spec.in_channels == 768
    assert proj.spec.out_channels == 32  # 8 codebooks x 4 dims


def test_decoder_channel_trajectory_12_5():
    g = build_decoder(get_config("12.5fps-1.1kbps-partialcausal"))
    convs = list(g.conv_nodes())
    ups = [c for c in convs if c.name.startswith("dec.up")]
    assert [(c.spec.in_channels, c.spec.out_channels) for c in ups] == \
        [(864, 432), (432, 216), (216, 108), (108, 54), (54, 27)]
    assert [c.spec.stride for c in ups] == [7, 7, 6, 3, 2]  # reversed strides
    post = convs[-1]
    assert post.name == "dec.post" and post.spec.out_channels == 1


@pytest.mark.parametrize("name", [c.name for c in builtin_configs()])
def test_channel_rules_all_builtins(name):
    cfg = get_config(name)
    enc, dec = build_encoder(cfg), build_decoder(cfg)
    downs = [c for c in enc.conv_nodes() if c.name.startswith("enc.down")]
    ch = cfg.encoder_initial_channels
    for c in downs:
        assert (c.spec.in_channels, c.spec.out_channels) == (ch, 2 * ch)
        ch *= 2
    ups = [c for c in dec.conv_nodes() if c.name.startswith("dec.up")]
    dch = cfg.decoder_initial_channels
    for c, rate in zip(ups, cfg.decoder_upsample_rates):
        assert (c.spec.in_channels, c.spec.out_channels) == (dch, dch // 2)
        assert c.spec.stride == rate and c.spec.kernel_size == 2 * rate
        dch //= 2


def test_causal_config_makes_every_node_causal():
    cfg = get_config("12.5fps-1.1kbps-causal")
    for g in (build_encoder(cfg), build_decoder(cfg)):
        assert all(c.spec.causal for c in g.conv_nodes())
        assert g.fully_causal


def test_partial_causal_split():
    cfg = get_config("12.5fps-1.1kbps-partialcausal")
    assert not build_encoder(cfg).fully_causal
    assert build_decoder(cfg).fully_causal


def test_build_rejects_invalid_config():
    bad = CodecConfig(
        name="bad", sample_rate_hz=22050, encoder_strides=(0, 2),
        encoder_initial_channels=4, decoder_initial_channels=16,
        fsq=FsqSpec(2, (5, 4)), encoder_causal=True, decoder_causal=True)
    with pytest.raises(ConfigError):
        build_encoder(bad)


def test_node_names_unique():
    cfg = get_config("12.5fps-1.1kbps")
    plan = {}
    for g in (build_encoder(cfg), build_decoder(cfg)):
        for k in shape_plan(g):
            assert k not in plan
            plan[k] = True


# --------------------------------------------------------------------------
# Inference passes.
# --------------------------------------------------------------------------

def test_encode_frame_counts(tiny, tiny_runners):
    enc, _ = tiny_runners
    hop = tiny.hop_samples
    rng = np.random.default_rng(0)
    lat = encode_audio(enc, rng.uniform(-1, 1, hop).astype(F32))
    assert lat.shape == (1, tiny.fsq.latent_dim)
    lat = encode_audio(enc, rng.uniform(-1, 1, hop + 1).astype(F32))
    assert lat.shape[0] == 2
    lat = encode_audio(enc, rng.uniform(-1, 1, 10 * hop).astype(F32))
    assert lat.shape[0] == 10


def test_full_size_frame_count_one_second():
    cfg = get_config("12.5fps-1.1kbps-causal")
    enc_g = build_encoder(cfg)
    runner = Runner(enc_g, random_init(enc_g, 0))
    audio = np.random.default_rng(1).uniform(-1, 1, 22050).astype(F32)
    lat = encode_audio(runner, audio)
    assert lat.shape == (13, 32)  # ceil(22050 / 1764)


def test_zero_audio_zero_weights_gives_zero_latents(tiny):
    enc_g = build_encoder(tiny)
    w = {k: np.zeros(s, F32) if not k.endswith(".alpha") else np.ones(s, F32)
         for k, s in shape_plan(enc_g).items()}
    runner = Runner(enc_g, w)
    lat = encode_audio(runner, np.zeros(tiny.hop_samples * 3, F32))
    assert np.all(lat == 0)


def test_decode_lengths(tiny, tiny_runners):
    _, dec = tiny_runners
    hop = tiny.hop_samples
    rng = np.random.default_rng(0)
    for frames in (1, 2, 10):
        lat = rng.uniform(-1, 1, (frames, tiny.fsq.latent_dim)).astype(F32)
        out = decode_latents(dec, lat)
        assert out.shape == (frames * hop,)
        assert np.all(np.isfinite(out))
    assert decode_latents(dec, np.zeros((0, tiny.fsq.latent_dim), F32)).size == 0


def test_decode_dim_mismatch(tiny_runners):
    _, dec = tiny_runners
    with pytest.raises(GraphError, match="latents"):
        decode_latents(dec, np.zeros((3, 7), F32))


def test_roundtrip_length_algebra(tiny, tiny_runners):
    enc, dec = tiny_runners
    hop = tiny.hop_samples
    rng = np.random.default_rng(3)
    for n in (1, hop - 1, hop, hop + 1, 5 * hop + 2):
        lat = encode_audio(enc, rng.uniform(-1, 1, n).astype(F32))
        out = decode_latents(dec, lat)
        assert out.size == -(-n // hop) * hop


def test_determinism_bitwise(tiny, tiny_runners):
    enc, dec = tiny_runners
    rng = np.random.default_rng(4)
    audio = rng.uniform(-1, 1, 4 * tiny.hop_samples).astype(F32)
    a = encode_audio(enc, audio)
    b = encode_audio(enc, audio)
    assert np.array_equal(a, b)
    assert np.array_equal(decode_latents(dec, a), decode_latents(dec, b))


def test_causal_latents_ignore_future(tiny):
    cfg = tiny_config()
    enc_g = build_encoder(cfg)
    runner = Runner(enc_g, random_init(enc_g, 5))
    hop = cfg.hop_samples
    rng = np.random.default_rng(6)
    audio = rng.uniform(-1, 1, 8 * hop).astype(F32)
    lat = encode_audio(runner, audio)
    audio2 = audio.copy()
    audio2[5 * hop:] = 0.77
    lat2 = encode_audio(runner, audio2)
    assert np.array_equal(lat[:5], lat2[:5])


def test_decoder_output_bounded(tiny_runners, tiny):
    _, dec = tiny_runners
    rng = np.random.default_rng(7)
    lat = rng.uniform(-1, 1, (20, tiny.fsq.latent_dim)).astype(F32)
    out = decode_latents(dec, lat)
    assert np.all(np.abs(out) < 1.0)  # tanh clamp


# --------------------------------------------------------------------------
# Lookahead and parameter counting.
# --------------------------------------------------------------------------

def test_lookahead_zero_iff_causal():
    for cfg in builtin_configs():
        enc, dec = build_encoder(cfg), build_decoder(cfg)
        assert (lookahead_frames(enc, cfg) == 0) == cfg.encoder_causal
        assert (lookahead_frames(dec, cfg) == 0) == cfg.decoder_causal


def test_lookahead_noncausal_21_5_near_published_window():
    cfg = get_config("21.5fps-1.89kbps")
    total = lookahead_frames(build_encoder(cfg), cfg) + \
        lookahead_frames(build_decoder(cfg), cfg)
    assert Fraction(3) <= total <= Fraction(7)
    ms = float(lookahead_ms(build_encoder(cfg), cfg) +
               lookahead_ms(build_decoder(cfg), cfg))
    assert 3 / 21.54 * 1000 < ms < 7 / 21.53 * 1000


def test_partial_causal_decoder_contributes_zero():
    cfg = get_config("12.5fps-1.1kbps-partialcausal")
    assert lookahead_frames(build_decoder(cfg), cfg) == 0
    assert lookahead_frames(build_encoder(cfg), cfg) > 0


def test_parameter_count_single_conv():
    cfg = tiny_config()
    g = build_encoder(cfg)
    plan = shape_plan(g)
    # one conv node's contribution: in*out*k + out
    assert math.prod(plan["enc.pre.weight"]) + plan["enc.pre.bias"][0] == \
        1 * 4 * 7 + 4
    assert parameter_count(g) == sum(math.prod(s) for s in plan.values())


def test_parameter_count_monotone_in_kernel_size():
    base = tiny_config()
    bigger = CodecConfig(
        name="k5", sample_rate_hz=base.sample_rate_hz,
        encoder_strides=base.encoder_strides,
        encoder_initial_channels=base.encoder_initial_channels,
        decoder_initial_channels=base.decoder_initial_channels,
        fsq=base.fsq, encoder_causal=True, decoder_causal=True,
        residual_kernel_size=5)
    assert parameter_count(build_encoder(bigger)) > \
        parameter_count(build_encoder(base))
    assert parameter_count(build_decoder(bigger)) > \
        parameter_count(build_decoder(base))


def test_runner_rejects_missing_and_misshapen_weights(tiny):
    enc_g = build_encoder(tiny)
    w = random_init(enc_g, 0)
    broken = dict(w)
    broken.pop("enc.pre.weight")
    with pytest.raises(GraphError, match="enc.pre.weight"):
        Runner(enc_g, broken)
    broken = dict(w)
    broken["enc.pre.weight"] = broken["enc.pre.weight"].transpose(1, 0, 2)
    with pytest.raises(GraphError, match="shape"):
        Runner(enc_g, broken)

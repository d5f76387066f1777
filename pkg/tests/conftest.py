import numpy as np
import pytest

from nanocodec.config import CodecConfig, FsqSpec
from nanocodec.generator import Runner, build_decoder, build_encoder
from nanocodec.weights import merge, random_init


def tiny_config(enc_causal=True, dec_causal=True, name="tiny"):
    """Two-stage miniature codec; fast enough for exhaustive property tests."""
    return CodecConfig(
        name=name,
        sample_rate_hz=16000,
        encoder_strides=(2, 3),
        encoder_initial_channels=4,
        decoder_initial_channels=16,
        fsq=FsqSpec(num_codebooks=2, levels=(5, 4)),
        encoder_causal=enc_causal,
        decoder_causal=dec_causal,
    )


@pytest.fixture(scope="session")
def tiny():
    return tiny_config()


@pytest.fixture(scope="session")
def tiny_runners(tiny):
    enc_g, dec_g = build_encoder(tiny), build_decoder(tiny)
    w = merge(random_init(enc_g, 11), random_init(dec_g, 12))
    return Runner(enc_g, w), Runner(dec_g, w)


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(2024)

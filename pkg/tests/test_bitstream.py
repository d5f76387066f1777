import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nanocodec.bitstream import (BitstreamError, BitstreamHeader,
                                 header_bytes, pack_frame, pack_frames,
                                 parse_header, read_all_frames, read_stream,
                                 unpack_frame, unpack_frames, write_stream)
from nanocodec.config import FsqSpec, builtin_configs, get_config, rate_report

SPEC_2016 = FsqSpec(8, (8, 7, 6, 6))


def _header(config_name="12.5fps-1.1kbps-partialcausal", orig=22050):
    return BitstreamHeader.for_config(get_config(config_name), orig)


def test_all_zero_frame_packs_to_zero_bits():
    out = pack_frame(np.zeros(8, dtype=np.int64), SPEC_2016)
    assert len(out) == 11  # 88 bits
    assert out == b"\x00" * 11


def test_max_index_bit_pattern():
    assert 2015 == 0b11111011111
    spec = FsqSpec(1, (8, 7, 6, 6))
    out = pack_frame(np.array([2015]), spec)
    bits = np.unpackbits(np.frombuffer(out, np.uint8))[:11]
    assert "".join(map(str, bits)) == "11111011111"


def test_pack_unpack_single_frame(rng):
    frame = rng.integers(0, 2016, size=8)
    assert np.array_equal(unpack_frame(pack_frame(frame, SPEC_2016), SPEC_2016),
                          frame)


def test_pack_rejects_out_of_range():
    with pytest.raises(BitstreamError, match="range"):
        pack_frame(np.array([2016] * 8), SPEC_2016)


def test_unpack_rejects_truncated():
    data = pack_frame(np.zeros(8, dtype=np.int64), SPEC_2016)
    with pytest.raises(BitstreamError, match="truncated"):
        unpack_frame(data[:-2], SPEC_2016)


@pytest.mark.parametrize("name", sorted({c.name for c in builtin_configs()}))
def test_round_trip_random_frames_every_builtin(name, rng):
    cfg = get_config(name)
    frames = rng.integers(0, cfg.fsq.codes_per_codebook,
                          size=(500, cfg.fsq.num_codebooks))
    payload = pack_frames(frames, cfg.fsq)
    assert len(payload) == (frames.size * cfg.fsq.bits_per_token + 7) // 8
    assert np.array_equal(unpack_frames(payload, 500, cfg.fsq), frames)


def test_header_round_trip():
    h = _header()
    data = header_bytes(h)
    h2, pos = parse_header(data + b"extra")
    assert pos == len(data)
    assert h2 == h


def test_header_is_byte_identical_across_writes():
    assert header_bytes(_header()) == header_bytes(_header())


def test_header_bad_magic_and_version():
    with pytest.raises(BitstreamError, match="magic"):
        parse_header(b"XXXX" + bytes(40))
    data = bytearray(header_bytes(_header()))
    data[4] = 99
    with pytest.raises(BitstreamError, match="version"):
        parse_header(bytes(data))


def test_stream_zero_frames():
    h = _header(orig=0)
    data = write_stream(h, np.zeros((0, 8), dtype=np.int64))
    h2, frames = read_stream(data)
    assert h2.num_frames == 0
    assert list(frames) == []


def test_stream_frame_count_mismatch():
    h = _header(orig=22050)  # implies 13 frames
    with pytest.raises(BitstreamError, match="frames"):
        write_stream(h, np.zeros((12, 8), dtype=np.int64))


def test_stream_payload_size_check(rng):
    h = _header(orig=5 * 1764)
    frames = rng.integers(0, 2016, size=(5, 8))
    data = write_stream(h, frames)
    with pytest.raises(BitstreamError, match="payload"):
        read_stream(data[:-1])
    with pytest.raises(BitstreamError, match="payload"):
        read_stream(data + b"\x00")


def test_measured_file_sizes_match_arithmetic(rng):
    for cfg in builtin_configs():
        n = 13
        h = BitstreamHeader.for_config(cfg, n * cfg.hop_samples)
        frames = rng.integers(0, cfg.fsq.codes_per_codebook,
                              size=(n, cfg.fsq.num_codebooks))
        data = write_stream(h, frames)
        head_len = len(header_bytes(h))
        expect = head_len + (n * cfg.fsq.num_codebooks *
                             cfg.fsq.bits_per_token + 7) // 8
        assert len(data) == expect


def test_one_second_payload_at_1_78kbps(rng):
    cfg = get_config("12.5fps-1.78kbps-partialcausal")
    h = BitstreamHeader.for_config(cfg, 22050)
    assert h.num_frames == 13
    frames = rng.integers(0, 2016, size=(13, 13))
    payload = pack_frames(frames, cfg.fsq)
    assert len(payload) == 233  # ceil(13*13*11 / 8)


def test_streamed_read_yields_written_frames(rng):
    cfg = get_config("12.5fps-0.6kbps-partialcausal")
    n = 40
    h = BitstreamHeader.for_config(cfg, n * cfg.hop_samples)
    frames = rng.integers(0, 4032, size=(n, 4))
    data = write_stream(h, frames)
    h2, it = read_stream(data)
    got = np.stack(list(it))
    assert np.array_equal(got, frames)
    h3, dense = read_all_frames(data)
    assert np.array_equal(dense, frames)


def test_long_run_bitrate_converges(rng):
    cfg = get_config("12.5fps-1.1kbps-partialcausal")
    rr = rate_report(cfg)
    seconds = 60
    n = int(seconds * float(rr.frames_per_sec))
    frames = rng.integers(0, 2016, size=(n, 8))
    payload_bits = len(pack_frames(frames, cfg.fsq)) * 8
    ideal = float(rr.bitrate_bps) * seconds
    assert abs(payload_bits - ideal) <= cfg.fsq.num_codebooks * rr.bits_per_token + 8


@given(st.integers(0, 2 ** 31), st.integers(1, 60))
@settings(max_examples=30, deadline=None)
def test_round_trip_property(seed, n):
    rng = np.random.default_rng(seed)
    cfg = get_config("12.5fps-0.8kbps-partialcausal")
    frames = rng.integers(0, 65536, size=(n, 4))
    h = BitstreamHeader.for_config(cfg, n * cfg.hop_samples)
    h2, dense = read_all_frames(write_stream(h, frames))
    assert h2 == h
    assert np.array_equal(dense, frames)


def test_header_original_count_invariant():
    h = _header(orig=22050)
    assert h.original_sample_count <= h.num_frames * h.stride_product
    assert h.num_frames * h.stride_product - h.original_sample_count < h.stride_product

import numpy as np
import pytest

from nncw_convert.nncw import NncwError, read, write


def test_round_trip(tmp_path):
    rng = np.random.default_rng(0)
    records = {
        "a.weight": rng.standard_normal((3, 2, 5)).astype(np.float32),
        "a.bias": rng.standard_normal(3).astype(np.float32),
        "b.alpha": rng.standard_normal(7).astype(np.float32),
    }
    fp = bytes(range(32))
    p = tmp_path / "t.nncw"
    write(p, records, fp)
    fp2, got = read(p)
    assert fp2 == fp
    assert list(got) == list(records)
    for k in records:
        assert np.array_equal(got[k], records[k])


def test_write_is_deterministic(tmp_path):
    records = {"x": np.ones((2, 2), np.float32)}
    fp = bytes(32)
    p1, p2 = tmp_path / "1.nncw", tmp_path / "2.nncw"
    write(p1, records, fp)
    write(p2, records, fp)
    assert p1.read_bytes() == p2.read_bytes()


def test_bad_fingerprint_length(tmp_path):
    with pytest.raises(NncwError):
        write(tmp_path / "x.nncw", {}, b"short")


def test_read_rejects_garbage(tmp_path):
    p = tmp_path / "junk.nncw"
    p.write_bytes(b"NOPE" + bytes(64))
    with pytest.raises(NncwError, match="magic"):
        read(p)
    good = tmp_path / "good.nncw"
    write(good, {"x": np.zeros(4, np.float32)}, bytes(32))
    data = good.read_bytes()
    bad = tmp_path / "trunc.nncw"
    bad.write_bytes(data[:-3])
    with pytest.raises(NncwError):
        read(bad)

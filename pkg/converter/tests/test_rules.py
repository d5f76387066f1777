import numpy as np
import pytest

from nncw_convert.rules import (NameMapRule, RuleError, apply_transform,
                                map_names, parse_rules)


def test_parse_basic_rules():
    rules = parse_rules("""
        # comment line
        model.* => {0}
        enc_blk?.weight => enc.block{0}.weight transpose
    """)
    assert len(rules) == 2
    assert rules[0].transform == "none"
    assert rules[1].transform == "transpose"


def test_parse_errors():
    with pytest.raises(RuleError, match="expected"):
        parse_rules("just a line\n")
    with pytest.raises(RuleError, match="no rules"):
        parse_rules("# only comments\n")
    with pytest.raises(RuleError, match="transform"):
        parse_rules("a => b rot13\n")


def test_glob_captures():
    rule = NameMapRule("net.*.layer?.weight", "{0}.l{1}.weight")
    assert rule.match("net.enc.pre.layer3.weight") == "enc.pre.l3.weight"
    assert rule.match("net.enc.pre.layer3.bias") is None


def test_capture_out_of_range():
    rule = NameMapRule("a.*", "{1}")
    with pytest.raises(RuleError, match="capture"):
        rule.match("a.x")


def test_first_match_wins():
    rules = parse_rules("special => mapped.special\n* => {0}\n")
    mapped, unmapped = map_names(["special", "other"], rules)
    assert mapped == {"special": ("mapped.special", "none"),
                      "other": ("other", "none")}
    assert unmapped == []


def test_unmapped_collected():
    rules = parse_rules("enc.* => enc.{0}\n")
    mapped, unmapped = map_names(["enc.a", "dec.b"], rules)
    assert list(mapped) == ["enc.a"]
    assert unmapped == ["dec.b"]


def test_transforms():
    arr = np.arange(24, dtype=np.float32).reshape(2, 3, 4)
    t = apply_transform(arr, "transpose")
    assert t.shape == (3, 2, 4)
    assert np.array_equal(t, arr.swapaxes(0, 1))
    f = apply_transform(arr, "flip_kernel")
    assert np.array_equal(f, arr[..., ::-1])
    assert apply_transform(arr, "none") is arr
    with pytest.raises(RuleError):
        apply_transform(np.zeros(3, np.float32), "transpose")

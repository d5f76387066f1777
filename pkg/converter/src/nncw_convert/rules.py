"""Name-mapping rules: checkpoint tensor names -> codec node names.

Rules files are line-oriented:

    # comment
    <pattern> => <target> [transform]

``pattern`` is a glob over source names; each ``*`` captures the matched
text and can be referenced in ``target`` as {0}, {1}, ...  ``transform``
is one of ``none`` (default), ``transpose`` (swap the first two axes, e.g.
(in, out, k) transposed-conv layouts) or ``flip_kernel`` (reverse the last
axis).  The first matching rule wins.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from pathlib import Path

import numpy as np

TRANSFORMS = ("none", "transpose", "flip_kernel")


class RuleError(ValueError):
    pass


@dataclass(frozen=True)
class NameMapRule:
    pattern: str
    target: str
    transform: str = "none"

    def __post_init__(self):
        if self.transform not in TRANSFORMS:
            raise RuleError(
                f"unknown transform {self.transform!r} (expected one of "
                f"{', '.join(TRANSFORMS)})")
        object.__setattr__(self, "_regex", _compile_glob(self.pattern))

    def match(self, source_name: str):
        """Target name if this rule matches, else None."""
        m = self._regex.fullmatch(source_name)
        if not m:
            return None
        try:
            return self.target.format(*m.groups())
        except (IndexError, KeyError) as e:
            raise RuleError(
                f"target template {self.target!r} references capture {e} "
                f"but pattern {self.pattern!r} has {len(m.groups())}") from None


def _compile_glob(pattern: str) -> re.Pattern:
    out = []
    for ch in pattern:
        if ch == "*":
            out.append("(.*)")
        elif ch == "?":
            out.append("(.)")
        else:
            out.append(re.escape(ch))
    return re.compile("".join(out))


def apply_transform(arr: np.ndarray, transform: str) -> np.ndarray:
    if transform == "none":
        return arr
    if transform == "transpose":
        if arr.ndim < 2:
            raise RuleError(f"transpose needs >= 2 axes, got shape {arr.shape}")
        return np.ascontiguousarray(np.swapaxes(arr, 0, 1))
    if transform == "flip_kernel":
        return np.ascontiguousarray(arr[..., ::-1])
    raise RuleError(f"unknown transform {transform!r}")


def parse_rules(text: str) -> list[NameMapRule]:
    rules = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=>" not in line:
            raise RuleError(f"line {lineno}: expected 'pattern => target "
                            f"[transform]', got {raw!r}")
        lhs, rhs = line.split("=>", 1)
        parts = rhs.split()
        if not parts or len(parts) > 2:
            raise RuleError(f"line {lineno}: malformed right-hand side {rhs!r}")
        target = parts[0]
        transform = parts[1] if len(parts) == 2 else "none"
        rules.append(NameMapRule(lhs.strip(), target, transform))
    if not rules:
        raise RuleError("rules file contains no rules")
    return rules


def load_rules(path: str | Path) -> list[NameMapRule]:
    return parse_rules(Path(path).read_text(encoding="utf-8"))


def map_names(source_names, rules) -> tuple[dict[str, tuple[str, str]], list[str]]:
    """Apply the first matching rule to every source name.

    Returns ({source: (target, transform)}, [unmapped sources])."""
    mapped: dict[str, tuple[str, str]] = {}
    unmapped: list[str] = []
    for name in source_names:
        for rule in rules:
            target = rule.match(name)
            if target is not None:
                mapped[name] = (target, rule.transform)
                break
        else:
            unmapped.append(name)
    return mapped, unmapped

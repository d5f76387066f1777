"""Conversion pipeline: checkpoint -> rules -> shape plan -> .nncw."""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import nncw
from .ckpt import load_checkpoint
from .plan import fetch_plan
from .rules import NameMapRule, apply_transform, map_names


class ConvertError(RuntimeError):
    pass


@dataclass
class ConversionReport:
    config: str
    mapped: dict[str, str] = field(default_factory=dict)     # source -> node
    unmapped_sources: list[str] = field(default_factory=list)
    downcast: list[str] = field(default_factory=list)
    out_path: str = ""

    def lines(self) -> list[str]:
        out = [f"config={self.config}", f"mapped={len(self.mapped)}"]
        out += [f"map.{src}={dst}" for src, dst in sorted(self.mapped.items())]
        out += [f"unmapped.{name}=" for name in self.unmapped_sources]
        out += [f"downcast.{name}=float32" for name in self.downcast]
        if self.out_path:
            out.append(f"out={self.out_path}")
        return out


def _candidates(node: str, shape, leftovers: dict[str, np.ndarray]) -> list[str]:
    """Unassigned source tensors whose element count matches the node."""
    want = int(np.prod(shape)) if shape else 1
    return sorted(name for name, arr in leftovers.items() if arr.size == want)


def convert(checkpoint_path: str | Path, config: str,
            rules: list[NameMapRule], out_path: str | Path | None,
            codec_cli: str = "nanocodec") -> ConversionReport:
    """Map a checkpoint onto a config's shape plan and write a .nncw file.

    ``out_path=None`` runs in report-only mode (nothing written)."""
    plan = fetch_plan(config, codec_cli=codec_cli)
    source = load_checkpoint(checkpoint_path)
    mapping, unmapped = map_names(sorted(source), rules)

    by_node: dict[str, tuple[str, str]] = {}
    for src, (node, transform) in mapping.items():
        if node not in plan.shapes:
            # matched a rule but resolves to nothing in this graph
            # (optimizer state under a catch-all rule, etc.)
            unmapped.append(src)
            continue
        if node in by_node:
            raise ConvertError(
                f"node {node!r} is matched by two sources: "
                f"{by_node[node][0]!r} and {src!r}; fix the rules file")
        by_node[node] = (src, transform)

    unmapped = sorted(unmapped)
    report = ConversionReport(config=plan.config_name,
                              unmapped_sources=unmapped)
    records: dict[str, np.ndarray] = {}
    leftovers = {name: arr for name, arr in source.items()
                 if name in unmapped}
    for node, shape in plan.shapes.items():
        if node not in by_node:
            cands = _candidates(node, shape, leftovers)
            hint = f"; unmapped tensors with matching size: {cands}" if cands \
                else "; no unmapped tensor has a matching size"
            raise ConvertError(
                f"no checkpoint tensor resolves to node {node!r} "
                f"(shape {tuple(shape)}){hint}")
        src, transform = by_node[node]
        arr = apply_transform(source[src], transform)
        if tuple(arr.shape) != tuple(shape):
            raise ConvertError(
                f"{src!r} -> {node!r}: shape {tuple(arr.shape)} after "
                f"transform {transform!r} does not match plan {tuple(shape)}")
        if arr.dtype != np.float32:
            report.downcast.append(src)
            arr = arr.astype(np.float32)
        records[node] = arr
        report.mapped[src] = node

    if out_path is not None:
        nncw.write(out_path, records, plan.fingerprint)
        report.out_path = str(out_path)
    return report

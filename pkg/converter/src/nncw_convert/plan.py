"""Obtain a config's weight-shape plan from the codec CLI.

The runtime's ``analyze --json`` output carries the node-name grammar
(shape plan), the canonical config text, and the config fingerprint; this
module shells out to it so the converter never links against runtime
internals.
"""

from __future__ import annotations

import json
import shutil
import subprocess
from dataclasses import dataclass


class PlanError(RuntimeError):
    pass


@dataclass(frozen=True)
class ShapePlan:
    config_name: str
    shapes: dict[str, tuple[int, ...]]   # node parameter name -> shape
    fingerprint: bytes
    config_text: str


def fetch_plan(config: str, codec_cli: str = "nanocodec") -> ShapePlan:
    exe = shutil.which(codec_cli)
    if exe is None:
        raise PlanError(
            f"{codec_cli!r} not found on PATH; install the codec runtime "
            "(it provides the shape plan via 'analyze --json')")
    proc = subprocess.run(
        [exe, "analyze", "--config", config, "--json"],
        capture_output=True, text=True)
    if proc.returncode != 0:
        raise PlanError(
            f"'{codec_cli} analyze --config {config}' failed: "
            f"{proc.stderr.strip() or proc.stdout.strip()}")
    try:
        data = json.loads(proc.stdout)
        shapes = {name: tuple(shape)
                  for name, shape in data["shape_plan"].items()}
        return ShapePlan(
            config_name=data["config"],
            shapes=shapes,
            fingerprint=bytes.fromhex(data["config_fingerprint"]),
            config_text=data["config_text"],
        )
    except (KeyError, ValueError) as e:
        raise PlanError(f"unexpected analyze output: {e}") from None

"""Checkpoint loading: .npz natively, PyTorch files via torch when present."""

from __future__ import annotations

from pathlib import Path

import numpy as np


class CheckpointError(ValueError):
    pass


def _flatten_state_dict(obj, prefix="") -> dict:
    """Unwrap common checkpoint wrappers down to a flat name->tensor map."""
    if hasattr(obj, "items"):
        items = dict(obj)
        for key in ("state_dict", "model", "model_state_dict"):
            inner = items.get(key)
            if hasattr(inner, "items") and inner:
                return _flatten_state_dict(inner, prefix)
        return {f"{prefix}{k}": v for k, v in items.items()}
    raise CheckpointError("checkpoint does not contain a tensor dictionary")


def _to_array(value) -> np.ndarray:
    if isinstance(value, np.ndarray):
        return value
    # torch tensors (and anything else exposing .detach/.numpy)
    if hasattr(value, "detach"):
        value = value.detach()
    if hasattr(value, "cpu"):
        value = value.cpu()
    if hasattr(value, "numpy"):
        return value.numpy()
    return np.asarray(value)


def load_checkpoint(path: str | Path) -> dict[str, np.ndarray]:
    path = Path(path)
    if not path.is_file():
        raise CheckpointError(f"{path}: no such file")
    if path.suffix == ".npz":
        with np.load(path) as z:
            raw = {k: z[k] for k in z.files}
    else:
        try:
            import torch
        except ImportError:
            raise CheckpointError(
                f"{path}: loading {path.suffix!r} checkpoints requires torch "
                "(pip install torch), or export the checkpoint as .npz")
        blob = torch.load(path, map_location="cpu", weights_only=False)
        raw = _flatten_state_dict(blob)
    out = {}
    for name, value in raw.items():
        arr = _to_array(value)
        if arr.dtype.kind not in "fiu":
            continue  # skip non-numeric entries (step counters as objects etc.)
        out[name] = arr
    if not out:
        raise CheckpointError(f"{path}: no numeric tensors found")
    return out

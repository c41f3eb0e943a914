"""Checkpoint bundles: a manifest plus one tensor file per parameter."""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np
import torch

from ..core.io import load_tensor, save_tensor
from ..errors import DataError
from .network import DualBranchNet, ModelConfig

__all__ = ["save_checkpoint", "load_checkpoint"]

FORMAT = "nova-checkpoint-1"


def _file_name(param_name: str) -> str:
    return param_name.replace(".", "__") + ".nvt"


def save_checkpoint(path, net: DualBranchNet, frozen=(), meta: dict | None = None) -> None:
    """Write the model under ``path``: manifest.json + params/*.nvt."""
    root = Path(path)
    (root / "params").mkdir(parents=True, exist_ok=True)
    entries = []
    for name, p in net.named_parameters():
        data = p.detach().cpu().numpy().astype(np.float32)
        save_tensor(root / "params" / _file_name(name), data)
        entries.append(
            {
                "name": name,
                "shape": list(data.shape),
                "group": net.group_of(name),
                "frozen": net.group_of(name) in frozen,
            }
        )
    manifest = {
        "format": FORMAT,
        "model": net.cfg.to_dict(),
        "frozen_groups": sorted(frozen),
        "parameters": entries,
        "meta": meta or {},
    }
    (root / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True))


def load_checkpoint(path):
    """Rebuild (net, frozen groups, meta) from a checkpoint directory."""
    root = Path(path)
    manifest_path = root / "manifest.json"
    if not manifest_path.is_file():
        raise DataError(f"no manifest.json under {root}")
    manifest = json.loads(manifest_path.read_text())
    if manifest.get("format") != FORMAT:
        raise DataError(f"unsupported checkpoint format {manifest.get('format')!r}")

    cfg = ModelConfig(**manifest["model"])
    net = DualBranchNet(cfg)
    state = net.state_dict()
    for entry in manifest["parameters"]:
        name = entry["name"]
        if name not in state:
            raise DataError(f"checkpoint parameter {name!r} not in model")
        blob = load_tensor(root / "params" / _file_name(name))
        if list(blob.data.shape) != entry["shape"]:
            raise DataError(
                f"{name}: stored shape {list(blob.data.shape)} != manifest {entry['shape']}"
            )
        if tuple(blob.data.shape) != tuple(state[name].shape):
            raise DataError(
                f"{name}: shape {tuple(blob.data.shape)} != model {tuple(state[name].shape)}"
            )
        state[name] = torch.tensor(blob.data)
    net.load_state_dict(state)
    return net, tuple(manifest.get("frozen_groups", ())), manifest.get("meta", {})

"""Model checkpoints: one MMX1 matrix per parameter plus a JSON manifest."""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from ..errors import EmbeddingFormatError
from ..text_features import read_matrix, write_matrix
from .tensor import Tensor

MANIFEST = "manifest.json"


def save_checkpoint(params: dict[str, Tensor], out_dir, seed: int,
                    meta: dict | None = None) -> None:
    """Write every parameter tensor and a manifest listing names/shapes/seed.

    1-D tensors are stored as single-row matrices; the manifest keeps the true
    shape so loading restores it.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    entries = []
    for name, p in params.items():
        data = p.data
        mat = data.reshape(1, -1) if data.ndim == 1 else data
        fname = f"{name}.mmx"
        write_matrix(mat, out / fname)
        entries.append({"name": name, "shape": list(data.shape), "file": fname})
    manifest = {"tensors": entries, "seed": int(seed), "meta": meta or {}}
    (out / MANIFEST).write_text(json.dumps(manifest, indent=2) + "\n", encoding="utf-8")


def load_checkpoint(in_dir) -> tuple[dict[str, Tensor], dict]:
    """Load a checkpoint directory back into named trainable tensors."""
    root = Path(in_dir)
    path = root / MANIFEST
    if not path.exists():
        raise EmbeddingFormatError(f"{root}: missing {MANIFEST}")
    manifest = json.loads(path.read_text(encoding="utf-8"))
    params: dict[str, Tensor] = {}
    for entry in manifest["tensors"]:
        mat = read_matrix(root / entry["file"])
        data = mat.reshape(entry["shape"])
        if list(data.shape) != entry["shape"]:
            raise EmbeddingFormatError(
                f"{entry['file']}: shape {data.shape} != manifest {entry['shape']}")
        params[entry["name"]] = Tensor(np.ascontiguousarray(data), requires_grad=True)
    return params, manifest

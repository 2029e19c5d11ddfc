"""Run a model over an image folder and write the prediction CSV.

The manifest and prediction CSV formats are the coupling point to the
ensemble pipeline (see its docs/formats.md); this module parses and emits
them directly so the two packages stay decoupled at the file boundary.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
import torch
from PIL import Image


@dataclass(frozen=True)
class ManifestRow:
    image_path: str
    label: int
    split: str


class ManifestError(ValueError):
    pass


def read_manifest(path: str | Path) -> list[ManifestRow]:
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    idx = 0
    if lines and lines[0].startswith("# seed="):
        idx = 1
    if idx >= len(lines) or lines[idx].split(",") != ["image_path", "label", "split"]:
        raise ManifestError(f"{path}: expected header image_path,label,split")
    rows = []
    for lineno, line in enumerate(lines[idx + 1:], start=idx + 2):
        if not line:
            continue
        parts = line.split(",")
        if len(parts) != 3:
            raise ManifestError(f"{path}:{lineno}: expected 3 columns")
        rows.append(ManifestRow(parts[0], int(parts[1]), parts[2]))
    if not rows:
        raise ManifestError(f"{path}: no entries")
    return rows


def load_image_tensor(path: str | Path, side: int) -> torch.Tensor:
    """RGB image as a (3, side, side) float tensor in [0, 1]."""
    with Image.open(path) as pil:
        rgb = pil.convert("RGB").resize((side, side), Image.BILINEAR)
    arr = np.asarray(rgb, dtype=np.float32) / 255.0
    return torch.from_numpy(arr).permute(2, 0, 1)


def export_predictions(
    model: torch.nn.Module,
    image_dir: str | Path,
    manifest_path: str | Path,
    out_csv: str | Path,
    split: str = "test",
    input_size: int = 64,
    batch_size: int = 8,
) -> list[str]:
    """Write one 6-decimal probability row per manifest image of ``split``.

    Returns the list of unreadable image paths (the CSV still covers every
    readable one); callers decide the exit status.
    """
    rows = [r for r in read_manifest(manifest_path) if r.split == split]
    if not rows:
        raise ManifestError(f"manifest has no '{split}' entries")
    image_dir = Path(image_dir)

    ids: list[str] = []
    tensors: list[torch.Tensor] = []
    failures: list[str] = []
    for row in rows:
        path = image_dir / row.image_path
        try:
            tensors.append(load_image_tensor(path, input_size))
            ids.append(row.image_path)
        except OSError as exc:
            failures.append(f"{path}: {exc}")

    model.eval()
    outputs: list[np.ndarray] = []
    with torch.no_grad():
        for start in range(0, len(tensors), batch_size):
            batch = torch.stack(tensors[start: start + batch_size])
            outputs.append(model(batch).double().numpy())
    probs = np.concatenate(outputs) if outputs else np.empty((0, 0))

    with open(out_csv, "w", encoding="utf-8", newline="\n") as fh:
        k = probs.shape[1] if probs.size else 0
        fh.write("sample_id," + ",".join(f"p{i}" for i in range(k)) + "\n")
        for sample_id, row in zip(ids, probs):
            fh.write(sample_id + "," + ",".join(f"{p:.6f}" for p in row) + "\n")
    return failures

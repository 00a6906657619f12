"""Batch heatmap export: images through the network, TPHM files out."""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import torch
import torch.nn.functional as F
from PIL import Image

from .model import load_checkpoint
from .tphm import write_tphm


class ExportError(Exception):
    pass


@dataclass(frozen=True)
class ExportJob:
    model_path: Path
    images: tuple[Path, ...]
    out_dir: Path
    device: str = "cpu"

    def __post_init__(self):
        if not self.images:
            raise ExportError("no input images")
        if self.device not in ("cpu", "cuda"):
            raise ExportError(f"unknown device {self.device!r}")
        if self.device == "cuda" and not torch.cuda.is_available():
            raise ExportError("cuda requested but not available")


def _load_rgb(path: Path) -> np.ndarray:
    try:
        with Image.open(path) as img:
            return np.asarray(img.convert("RGB"), dtype=np.uint8)
    except (OSError, ValueError) as exc:
        raise ExportError(f"cannot read image {path}: {exc}") from None


def predict_text_prob(model, rgb: np.ndarray,
                      device: str = "cpu") -> np.ndarray:
    """(H, W, 3) uint8 -> (H, W) float32 text probability."""
    x = torch.from_numpy(rgb.astype(np.float32) / 255.0)
    x = x.permute(2, 0, 1).unsqueeze(0).to(device)
    with torch.no_grad():
        logits = model(x)
    if logits.shape[2:] != x.shape[2:]:
        raise ExportError(
            f"network output {tuple(logits.shape[2:])} does not match "
            f"input {tuple(x.shape[2:])} after resize-back")
    probs = F.softmax(logits, dim=1)
    return probs[0, 1].cpu().numpy().astype(np.float32)


def export_heatmaps(job: ExportJob) -> list[Path]:
    """One <stem>.tphm per input image; returns written paths in order."""
    model = load_checkpoint(job.model_path, job.device)
    job.out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    for img_path in job.images:
        rgb = _load_rgb(img_path)
        prob = predict_text_prob(model, rgb, job.device)
        if prob.shape != rgb.shape[:2]:
            raise ExportError(
                f"{img_path.name}: heatmap {prob.shape} does not match "
                f"image {rgb.shape[:2]}")
        out = job.out_dir / f"{img_path.stem}.tphm"
        write_tphm(prob, out)
        written.append(out)
    return written

"""Train the tiny network on rendered scene / heatmap pairs.

Training data is a directory of ``<stem>.png`` images with matching
``<stem>.tphm`` target maps (as produced by a synthetic scene renderer);
targets are binarized at 0.5 into non-text/text classes. All scenes must
share one resolution. Runs in seconds on a CPU for small corpora; see the
README for the recommended recipe when fine-tuning a full-size backbone
on real data instead.

Usage: python3 -m fcn_exporter.train DATA_DIR OUT_CHECKPOINT [--steps N]
"""

from __future__ import annotations

import argparse
import struct
import sys
from pathlib import Path

import numpy as np
import torch
import torch.nn.functional as F
from PIL import Image

from .model import TinyTextFCN, save_checkpoint
from .tphm import MAGIC


def read_tphm(path: str | Path) -> np.ndarray:
    blob = Path(path).read_bytes()
    if blob[:4] != MAGIC or len(blob) < 12:
        raise ValueError(f"{path}: not a TPHM file")
    w, h = struct.unpack("<II", blob[4:12])
    data = np.frombuffer(blob[12:], dtype="<f4")
    if data.size != w * h:
        raise ValueError(f"{path}: payload size mismatch")
    return data.reshape(h, w).copy()


def load_pairs(data_dir: str | Path) -> tuple[torch.Tensor, torch.Tensor]:
    """Stack all (image, binary target) pairs found in the directory."""
    data_dir = Path(data_dir)
    images, targets = [], []
    for png in sorted(data_dir.glob("*.png")):
        tphm = png.with_suffix(".tphm")
        if not tphm.is_file():
            continue
        with Image.open(png) as img:
            rgb = np.asarray(img.convert("RGB"), dtype=np.uint8)
        target = read_tphm(tphm)
        if target.shape != rgb.shape[:2]:
            raise ValueError(f"{png.name}: target size differs from image")
        images.append(torch.from_numpy(rgb.astype(np.float32) / 255.0)
                      .permute(2, 0, 1))
        targets.append(torch.from_numpy((target > 0.5).astype(np.int64)))
    if not images:
        raise ValueError(f"no .png/.tphm pairs under {data_dir}")
    shapes = {tuple(t.shape) for t in targets}
    if len(shapes) > 1:
        raise ValueError(f"scenes must share one resolution, got {shapes}")
    return torch.stack(images), torch.stack(targets)


def train(data_dir: str | Path, out_path: str | Path, steps: int = 600,
          batch: int = 4, lr: float = 0.01, momentum: float = 0.9,
          weight_decay: float = 5e-4, width: int = 16,
          seed: int = 0, device: str = "cpu") -> float:
    """SGD on pixel cross-entropy; returns the final batch loss."""
    torch.manual_seed(seed)
    images, targets = load_pairs(data_dir)
    images, targets = images.to(device), targets.to(device)
    model = TinyTextFCN(width=width).to(device)
    model.train()
    opt = torch.optim.SGD(model.parameters(), lr=lr, momentum=momentum,
                          weight_decay=weight_decay)
    n = images.shape[0]
    loss = torch.zeros(())
    for _ in range(steps):
        idx = torch.randint(0, n, (min(batch, n),))
        logits = model(images[idx])
        loss = F.cross_entropy(logits, targets[idx])
        opt.zero_grad()
        loss.backward()
        opt.step()
    model.eval()
    save_checkpoint(model, out_path)
    return float(loss.detach())


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        description="Train the tiny text segmentation network.")
    parser.add_argument("data_dir")
    parser.add_argument("out_checkpoint")
    parser.add_argument("--steps", type=int, default=600)
    parser.add_argument("--batch", type=int, default=4)
    parser.add_argument("--lr", type=float, default=0.01)
    parser.add_argument("--width", type=int, default=16)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args(argv)
    try:
        loss = train(args.data_dir, args.out_checkpoint, steps=args.steps,
                     batch=args.batch, lr=args.lr, width=args.width,
                     seed=args.seed)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(f"saved {args.out_checkpoint} (final loss {loss:.4f})")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())

"""Small fully convolutional two-class segmentation network.

Four conv layers with one stride-2 downsampling step; logits are
bilinearly upsampled back to the input resolution, so the output always
matches the input dimensions. Channel 0 is non-text, channel 1 is text.
"""

from __future__ import annotations

from pathlib import Path

import torch
import torch.nn.functional as F
from torch import nn

ARCH = "tiny-fcn-v1"


class TinyTextFCN(nn.Module):
    def __init__(self, width: int = 16):
        super().__init__()
        self.width = width
        self.conv1 = nn.Conv2d(3, width, 3, padding=1)
        self.conv2 = nn.Conv2d(width, 2 * width, 3, stride=2, padding=1)
        self.conv3 = nn.Conv2d(2 * width, 2 * width, 3, padding=1)
        self.head = nn.Conv2d(2 * width, 2, 1)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        """(N, 3, H, W) in [0, 1] -> (N, 2, H, W) logits."""
        h, w = x.shape[2], x.shape[3]
        x = x - 0.5
        x = F.relu(self.conv1(x))
        x = F.relu(self.conv2(x))
        x = F.relu(self.conv3(x))
        logits = self.head(x)
        return F.interpolate(logits, size=(h, w), mode="bilinear",
                             align_corners=False)


def save_checkpoint(model: TinyTextFCN, path: str | Path) -> None:
    torch.save({"arch": ARCH, "width": model.width,
                "state_dict": model.state_dict()}, path)


def load_checkpoint(path: str | Path,
                    device: str = "cpu") -> TinyTextFCN:
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"checkpoint not found: {path}")
    blob = torch.load(path, map_location=device, weights_only=True)
    if not isinstance(blob, dict) or blob.get("arch") != ARCH:
        raise ValueError(f"{path.name}: not a {ARCH} checkpoint")
    model = TinyTextFCN(width=int(blob["width"]))
    model.load_state_dict(blob["state_dict"])
    model.to(device)
    model.eval()
    return model

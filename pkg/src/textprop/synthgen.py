"""Deterministic synthetic scene generator.

A scene is a gray background (flat, gradient or noisy) with a handful of
pseudo-words: rows of solid rectangles sharing ink value, glyph size and
gap, placed without overlap. Alongside the rendered image the generator
emits the exact word boxes as ground truth and a text-probability
heatmap built from the glyph indicator (optionally blurred and corrupted
with clipped Gaussian noise).

Everything is driven by one seeded stream (see rng): a given
(seed, config) pair reproduces its scene bit for bit on any platform.
The draw order is part of the contract: background kind (one uniform
draw under "mix"), base level, background noise grid (if noisy), then
per word its geometry, ink value and placement attempts, and finally
the heatmap noise.

Noisy backgrounds use blocky noise: one Gaussian per grain-sized cell,
upsampled. Per-pixel noise rarely survives the region detector's
minimum area, while grains of a few pixels yield the stable clutter
blobs that ranking strategies are meant to cope with.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy import ndimage

from .evaluation import GroundTruth, GtEntry, write_icdar_gt
from .imaging import BoundingBox, ColorImage, Heatmap, save_heatmap, save_image_png
from .rng import Xoshiro256StarStar

BACKGROUNDS = ("flat", "gradient", "noise")


@dataclass(frozen=True)
class SceneConfig:
    width: int = 320
    height: int = 240
    n_words: int = 4
    glyph_min: int = 10
    glyph_max: int = 18
    background: str = "mix"     # flat | gradient | noise | mix
    bg_level: int = 160
    bg_noise_sigma: float = 22.0
    bg_noise_grain: int = 2     # cell size of the blocky background noise
    heatmap_sigma: float = 0.0  # additive noise std on the heatmap
    heatmap_blur: float = 0.0   # gaussian blur std, in pixels

    def __post_init__(self):
        if self.width < 32 or self.height < 32:
            raise ValueError("scene must be at least 32x32")
        if not 0 < self.glyph_min <= self.glyph_max:
            raise ValueError("need 0 < glyph_min <= glyph_max")
        if self.background not in BACKGROUNDS + ("mix",):
            raise ValueError(f"unknown background {self.background!r}")
        if self.bg_noise_grain < 1:
            raise ValueError("bg_noise_grain must be >= 1")
        if self.heatmap_sigma < 0 or self.heatmap_blur < 0:
            raise ValueError("heatmap sigma/blur must be non-negative")


@dataclass(frozen=True)
class Scene:
    image: ColorImage
    heatmap: Heatmap
    gt: GroundTruth


def _background(rng: Xoshiro256StarStar, cfg: SceneConfig) -> tuple[np.ndarray, int]:
    kind = cfg.background
    if kind == "mix":
        r = rng.uniform()
        kind = "flat" if r < 0.3 else "gradient" if r < 0.55 else "noise"
    level = max(40, min(215, cfg.bg_level + rng.randint(-30, 30)))

    h, w = cfg.height, cfg.width
    if kind == "flat":
        bg = np.full((h, w), float(level))
    elif kind == "gradient":
        ramp = np.linspace(level - 35.0, level + 35.0, w if rng.uniform() < 0.5 else h)
        bg = np.broadcast_to(ramp, (h, w)).copy() if ramp.size == w \
            else np.broadcast_to(ramp[:, None], (h, w)).copy()
    else:
        g = cfg.bg_noise_grain
        nh, nw = (h + g - 1) // g, (w + g - 1) // g
        coarse = rng.gaussian_array(nh * nw, cfg.bg_noise_sigma).reshape(nh, nw)
        noise = np.repeat(np.repeat(coarse, g, axis=0), g, axis=1)[:h, :w]
        bg = level + noise
    return np.clip(np.rint(bg), 0, 255).astype(np.uint8), level


def _ink_value(rng: Xoshiro256StarStar, level: int) -> int:
    dark_ok = level >= 110
    bright_ok = level <= 145
    if dark_ok and bright_ok:
        dark = rng.uniform() < 0.5
    else:
        dark = dark_ok
    if dark:
        return rng.randint(0, level - 90)
    return rng.randint(level + 90, 255)


def generate_scene(seed: int, cfg: SceneConfig | None = None) -> Scene:
    cfg = cfg or SceneConfig()
    rng = Xoshiro256StarStar(seed)
    w, h = cfg.width, cfg.height

    bg, level = _background(rng, cfg)
    img = np.repeat(bg[:, :, None], 3, axis=2)
    glyphs = np.zeros((h, w), dtype=bool)

    margin = 3
    occupied: list[tuple[int, int, int, int]] = []
    entries: list[GtEntry] = []
    for _ in range(cfg.n_words):
        gh = rng.randint(cfg.glyph_min, cfg.glyph_max)
        gw = max(3, int(round(gh * rng.uniform_range(0.5, 0.85))))
        n_glyphs = rng.randint(2, 8)
        gap = max(2, int(round(gw * rng.uniform_range(0.3, 0.5))))
        ink = _ink_value(rng, level)

        word_w = n_glyphs * gw + (n_glyphs - 1) * gap
        if word_w + 2 * margin >= w or gh + 2 * margin >= h:
            continue

        for _ in range(100):
            x = rng.randint(margin, w - word_w - margin)
            y = rng.randint(margin, h - gh - margin)
            cand = (x - 2, y - 2, x + word_w + 2, y + gh + 2)
            if all(cand[2] <= ox0 or ox1 <= cand[0] or
                   cand[3] <= oy0 or oy1 <= cand[1]
                   for ox0, oy0, ox1, oy1 in occupied):
                break
        else:
            continue

        for k in range(n_glyphs):
            xk = x + k * (gw + gap)
            img[y:y + gh, xk:xk + gw] = ink
            glyphs[y:y + gh, xk:xk + gw] = True
        occupied.append(cand)
        entries.append(GtEntry(bbox=BoundingBox(x, y, x + word_w, y + gh)))

    hm = glyphs.astype(np.float64)
    if cfg.heatmap_blur > 0:
        hm = ndimage.gaussian_filter(hm, sigma=cfg.heatmap_blur)
    if cfg.heatmap_sigma > 0:
        hm = hm + rng.gaussian_array(h * w, cfg.heatmap_sigma).reshape(h, w)
    hm = np.clip(hm, 0.0, 1.0)

    return Scene(image=ColorImage(img),
                 heatmap=Heatmap(hm.astype(np.float32)),
                 gt=GroundTruth(entries=tuple(entries)))


def write_scene(scene: Scene, out_dir: str | Path, stem: str) -> None:
    """Write <stem>.png / <stem>.tphm / <stem>.txt into out_dir."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    save_image_png(scene.image, out / f"{stem}.png")
    save_heatmap(scene.heatmap, out / f"{stem}.tphm")
    write_icdar_gt(scene.gt, out / f"{stem}.txt")

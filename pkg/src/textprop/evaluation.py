"""Ground truth parsing and detection-rate evaluation.

Detection rate at budget N: the fraction of ground-truth boxes (not
marked don't-care) that overlap at least one of the first N proposals
with IoU at or above the threshold. Matching is independent per box; one
proposal may cover several ground-truth boxes. Corpus scores pool boxes
across images (micro-average).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

from .imaging import BoundingBox, iou
from .ranking import RankedList


class GroundTruthParseError(ValueError):
    pass


@dataclass(frozen=True)
class GtEntry:
    bbox: BoundingBox
    dont_care: bool = False


@dataclass(frozen=True)
class GroundTruth:
    entries: tuple[GtEntry, ...] = ()

    @property
    def n_evaluated(self) -> int:
        return sum(1 for e in self.entries if not e.dont_care)

    def evaluated_boxes(self) -> list[BoundingBox]:
        return [e.bbox for e in self.entries if not e.dont_care]


@dataclass(frozen=True)
class RecallCurve:
    strategy: str
    tau: float
    iou_thresh: float
    points: tuple[tuple[int, float], ...]    # (budget, detection_rate)

    def rate_at(self, budget: int) -> float:
        for n, r in self.points:
            if n == budget:
                return r
        raise KeyError(f"budget {budget} not in curve")


def _quad_to_bbox(coords: list[float]) -> BoundingBox:
    xs = coords[0::2]
    ys = coords[1::2]
    x0, x1 = int(math.floor(min(xs))), int(math.ceil(max(xs)))
    y0, y1 = int(math.floor(min(ys))), int(math.ceil(max(ys)))
    # Degenerate (zero extent) quads still denote a location; keep 1px.
    if x1 <= x0:
        x1 = x0 + 1
    if y1 <= y0:
        y1 = y0 + 1
    return BoundingBox(x0, y0, x1, y1)


def parse_icdar_gt(path: str | Path,
                   clip_to: tuple[int, int] | None = None) -> GroundTruth:
    """Parse one per-image annotation file.

    Each non-empty line: 8 comma-separated quad coordinates followed by a
    transcription (which itself may contain commas). Transcription "###"
    marks the box don't-care. A UTF-8 BOM is tolerated. With ``clip_to``
    (width, height), boxes are clipped to the image; boxes entirely
    outside are dropped.
    """
    path = Path(path)
    text = path.read_text(encoding="utf-8-sig")
    entries: list[GtEntry] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        parts = line.split(",")
        if len(parts) < 9:
            raise GroundTruthParseError(
                f"{path.name}:{lineno}: expected 8 coordinates and a "
                f"transcription, got {len(parts)} fields")
        try:
            coords = [float(tok) for tok in parts[:8]]
        except ValueError as exc:
            raise GroundTruthParseError(
                f"{path.name}:{lineno}: bad coordinate: {exc}") from None
        transcription = ",".join(parts[8:])
        bbox = _quad_to_bbox(coords)
        if clip_to is not None:
            clipped = bbox.clip(clip_to[0], clip_to[1])
            if clipped is None:
                continue
            bbox = clipped
        entries.append(GtEntry(bbox=bbox, dont_care=transcription == "###"))
    return GroundTruth(entries=tuple(entries))


def write_icdar_gt(gt: GroundTruth, path: str | Path) -> None:
    """Write ground truth in the same per-image line format parse reads."""
    lines = []
    for e in gt.entries:
        b = e.bbox
        word = "###" if e.dont_care else "text"
        lines.append(f"{b.x0},{b.y0},{b.x1},{b.y0},{b.x1},{b.y1},{b.x0},{b.y1},{word}")
    Path(path).write_text("\n".join(lines) + ("\n" if lines else ""),
                          encoding="utf-8")


def parse_cocotext_gt(path: str | Path) -> dict[str, GroundTruth]:
    """Parse a COCO-Text style JSON dump into per-image ground truth.

    Annotations live under "anns" with fields bbox [x, y, w, h],
    image_id and legibility; "legible" instances are evaluated, anything
    else becomes don't-care. Images without a single legible instance are
    omitted from the result. Keys are image file stems when "imgs" metadata
    is present, else the stringified image id.
    """
    path = Path(path)
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise GroundTruthParseError(f"{path.name}: invalid JSON: {exc}") from None
    if "anns" not in doc:
        raise GroundTruthParseError(f"{path.name}: missing 'anns' section")

    imgs = doc.get("imgs", {})

    def key_of(image_id) -> str:
        meta = imgs.get(str(image_id))
        if meta and "file_name" in meta:
            return Path(meta["file_name"]).stem
        return str(image_id)

    per_image: dict[str, list[GtEntry]] = {}
    for ann_id in sorted(doc["anns"], key=str):
        ann = doc["anns"][ann_id]
        for need in ("bbox", "image_id", "legibility"):
            if need not in ann:
                raise GroundTruthParseError(
                    f"{path.name}: annotation {ann_id} missing '{need}'")
        x, y, w, h = (float(v) for v in ann["bbox"])
        if w <= 0 or h <= 0:
            continue
        bbox = BoundingBox(int(math.floor(x)), int(math.floor(y)),
                           int(math.ceil(x + w)), int(math.ceil(y + h)))
        dont_care = ann["legibility"] != "legible"
        per_image.setdefault(key_of(ann["image_id"]), []).append(
            GtEntry(bbox=bbox, dont_care=dont_care))

    return {
        k: GroundTruth(entries=tuple(v))
        for k, v in sorted(per_image.items())
        if any(not e.dont_care for e in v)
    }


def first_match_ranks(ranked: RankedList, gt: GroundTruth,
                      iou_thresh: float) -> list[int | None]:
    """For each evaluated GT box, the 1-based rank of the first proposal
    matching it at the IoU threshold, or None if never matched."""
    boxes = gt.evaluated_boxes()
    ranks: list[int | None] = [None] * len(boxes)
    remaining = len(boxes)
    for r, prop in enumerate(ranked.proposals, start=1):
        if remaining == 0:
            break
        for i, g in enumerate(boxes):
            if ranks[i] is None and iou(prop.bbox, g) >= iou_thresh:
                ranks[i] = r
                remaining -= 1
    return ranks


def detection_rate(ranked: RankedList, gt: GroundTruth, budget: int,
                   iou_thresh: float = 0.5) -> float:
    """Fraction of evaluated GT boxes matched within the first ``budget``
    proposals. Zero evaluated boxes yields 0.0."""
    ranks = first_match_ranks(ranked, gt, iou_thresh)
    if not ranks:
        return 0.0
    hit = sum(1 for r in ranks if r is not None and r <= budget)
    return hit / len(ranks)


def recall_curve(ranked: RankedList, gt: GroundTruth, budgets: list[int],
                 iou_thresh: float = 0.5) -> RecallCurve:
    return corpus_recall_curve([(ranked, gt)], budgets, iou_thresh)


def corpus_recall_curve(items: list[tuple[RankedList, GroundTruth]],
                        budgets: list[int],
                        iou_thresh: float = 0.5) -> RecallCurve:
    """Micro-averaged curve: GT boxes pooled across all images."""
    if not budgets or sorted(budgets) != list(budgets):
        raise ValueError("budgets must be a non-empty ascending list")
    strategy = items[0][0].strategy if items else "bas"
    tau = items[0][0].tau if items else 0.0
    all_ranks: list[int | None] = []
    for ranked, gt in items:
        all_ranks.extend(first_match_ranks(ranked, gt, iou_thresh))
    total = len(all_ranks)
    points = []
    for n in budgets:
        if total == 0:
            points.append((n, 0.0))
        else:
            hit = sum(1 for r in all_ranks if r is not None and r <= n)
            points.append((n, hit / total))
    return RecallCurve(strategy=strategy, tau=tau, iou_thresh=iou_thresh,
                       points=tuple(points))

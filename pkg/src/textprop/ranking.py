"""Proposal ranking strategies.

Three orderings over the same hypothesis set:

- ``bas``: structural quality score, descending.
- ``mtp``: mean text probability inside the proposal box, descending.
- ``sup``: suppression; drop proposals whose mean text probability falls
  strictly below a threshold ``tau``, keep the survivors in ``bas`` order.
  With ``tau == 0`` nothing is dropped and the result equals ``bas``
  element for element.

All orderings share one total tie-break so output is reproducible:
higher quality first, then smaller box area, then lexicographic box
coordinates ``(x0, y0, x1, y1)``.
"""

from __future__ import annotations

from dataclasses import dataclass

from .grouping import Dendrogram, Proposal
from .imaging import BoundingBox, IntegralImage, box_mean
from .mser import Region


@dataclass(frozen=True)
class RankedList:
    strategy: str
    tau: float
    proposals: tuple[Proposal, ...]

    def __len__(self) -> int:
        return len(self.proposals)

    def top(self, n: int) -> tuple[Proposal, ...]:
        if n < 0:
            raise ValueError("budget must be non-negative")
        return self.proposals[:n]


def _bas_key(p: Proposal):
    b = p.bbox
    return (-p.quality, b.area, b.x0, b.y0, b.x1, b.y1)


def _mtp_key(p: Proposal):
    b = p.bbox
    return (-p.mtp, -p.quality, b.area, b.x0, b.y0, b.x1, b.y1)


def rank_bas(proposals: list[Proposal]) -> RankedList:
    ordered = sorted(proposals, key=_bas_key)
    return RankedList(strategy="bas", tau=0.0, proposals=tuple(ordered))


def _fill_mtp(proposals: list[Proposal], integral: IntegralImage,
              mtps: dict[BoundingBox, float] | None) -> list[Proposal]:
    out = []
    for p in proposals:
        if mtps is not None:
            m = mtps[p.bbox]
        else:
            m = box_mean(integral, p.bbox)
        out.append(p.with_mtp(m))
    return out


def rank_mtp(proposals: list[Proposal], integral: IntegralImage,
             mtps: dict[BoundingBox, float] | None = None) -> RankedList:
    filled = _fill_mtp(proposals, integral, mtps)
    ordered = sorted(filled, key=_mtp_key)
    return RankedList(strategy="mtp", tau=0.0, proposals=tuple(ordered))


def rank_sup(proposals: list[Proposal], integral: IntegralImage, tau: float,
             mtps: dict[BoundingBox, float] | None = None) -> RankedList:
    if not 0.0 <= tau <= 1.0:
        raise ValueError(f"tau must be in [0, 1], got {tau}")
    filled = _fill_mtp(proposals, integral, mtps)
    kept = [p for p in filled if not p.mtp < tau]
    ordered = sorted(kept, key=_bas_key)
    return RankedList(strategy="sup", tau=tau, proposals=tuple(ordered))


def mask_mtp_means(proposals: list[Proposal], dendrogram: Dendrogram,
                   regions: list[Region],
                   integral: IntegralImage) -> dict[BoundingBox, float]:
    """Mean text probability over the union of member region pixels.

    Alternative to the box mean: scores only the pixels that belong to the
    grouped regions, so background inside the box does not dilute the mean.
    ``regions`` must be the leaf regions in dendrogram order. Returns means
    keyed by proposal bbox, suitable for the ``mtps`` argument of
    ``rank_mtp`` / ``rank_sup``.
    """
    out: dict[BoundingBox, float] = {}
    for p in proposals:
        runs: dict[int, list[tuple[int, int]]] = {}
        for leaf in dendrogram.member_leaf_ids(p.source):
            for y, xs, xe in regions[leaf].rows:
                runs.setdefault(int(y), []).append((int(xs), int(xe)))
        total = 0.0
        count = 0
        for y, row in runs.items():
            row.sort()
            cx0, cx1 = row[0]
            merged = []
            for xs, xe in row[1:]:
                if xs <= cx1:
                    cx1 = max(cx1, xe)
                else:
                    merged.append((cx0, cx1))
                    cx0, cx1 = xs, xe
            merged.append((cx0, cx1))
            for xs, xe in merged:
                total += integral.run_sum(y, xs, xe)
                count += xe - xs
        out[p.bbox] = total / count if count else 0.0
    return out

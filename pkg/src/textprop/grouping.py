"""Similarity grouping of regions into a hierarchy of text hypotheses.

Regions are embedded in a normalized cue space combining spatial position,
intensity, color, stroke width and size; single-linkage agglomeration over
that space yields a dendrogram whose every node is a candidate group. Each
group carries incrementally maintained statistics and a quality score that
rewards many members, homogeneous merge distances and collinear centers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np
from numba import njit
from scipy import ndimage
from scipy.spatial.distance import pdist

from .imaging import BoundingBox, ColorImage, GrayImage
from .mser import Region

N_CUES = 8


@dataclass(frozen=True)
class GroupingParams:
    """Cue weights plus the recall-safe group filter thresholds."""

    weights: tuple = (1.0,) * N_CUES
    spatial_scale: float = 1.0
    min_fill_ratio: float = 0.05
    min_aspect: float = 0.1
    max_aspect: float = 30.0
    max_members: int = 1000
    max_regions: int = 3000

    def __post_init__(self):
        if len(self.weights) != N_CUES:
            raise ValueError(f"expected {N_CUES} cue weights, got {len(self.weights)}")


@dataclass(frozen=True)
class RegionFeatures:
    """Per-region grouping cues (plus bbox/size bookkeeping for the tree)."""

    center: tuple[float, float]
    intensity_mean: float
    color_mean: tuple[float, float, float]
    stroke_width: float
    diameter: float
    bbox: BoundingBox
    pixel_count: int


@dataclass
class DendroNode:
    """Dendrogram node: a leaf region or the merge of two child nodes.

    Statistics are running moments so that group features are available in
    O(1) at every node: per-cue mean/M2, center first/second moments for the
    total-least-squares line fit, and merge-distance moments for the
    homogeneity term of the quality score.
    """

    id: int
    left: int               # -1 for leaves
    right: int
    distance: float         # merge distance, 0.0 for leaves
    member_count: int
    bbox: BoundingBox
    pixel_total: int
    cue_mean: np.ndarray
    cue_m2: np.ndarray
    center_sum: np.ndarray      # (sx, sy, sxx, syy, sxy)
    dist_sum: float = 0.0
    dist_sq_sum: float = 0.0
    dist_count: int = 0

    @property
    def is_leaf(self) -> bool:
        return self.left < 0


@dataclass
class Dendrogram:
    """Single-linkage merge tree over one image's regions."""

    leaves: list[RegionFeatures]
    nodes: list[DendroNode]     # ids 0..K-1 leaves, K..2K-2 merges

    @property
    def n_leaves(self) -> int:
        return len(self.leaves)

    @property
    def n_merges(self) -> int:
        return max(len(self.nodes) - len(self.leaves), 0)

    def member_leaf_ids(self, node_id: int) -> list[int]:
        """Leaf ids under a node, ascending."""
        out, stack = [], [node_id]
        while stack:
            node = self.nodes[stack.pop()]
            if node.is_leaf:
                out.append(node.id)
            else:
                stack.append(node.left)
                stack.append(node.right)
        out.sort()
        return out


@dataclass(frozen=True)
class Proposal:
    """A candidate text box with its grouping quality and (optional) mean
    text probability, filled in by the ranking stage."""

    bbox: BoundingBox
    quality: float
    mtp: float | None
    source: int
    member_count: int

    def with_mtp(self, value: float) -> "Proposal":
        return replace(self, mtp=value)


def compute_region_features(region: Region, gray: GrayImage,
                            color: ColorImage) -> RegionFeatures:
    """Means over the pixel mask plus the distance-transform stroke width."""
    b = region.bbox
    mask = region.mask()
    n = region.pixel_count

    gsum = 0.0
    csum = np.zeros(3, dtype=np.float64)
    xsum = 0.0
    ysum = 0.0
    for y, xs, xe in region.rows:
        gsum += float(gray.data[y, xs:xe].sum())
        csum += color.data[y, xs:xe].sum(axis=0, dtype=np.float64)
        cnt = xe - xs
        xsum += (xs + xe - 1) * cnt / 2.0 + 0.5 * cnt
        ysum += (y + 0.5) * cnt

    return RegionFeatures(
        center=(xsum / n, ysum / n),
        intensity_mean=gsum / n,
        color_mean=tuple(csum / n),
        stroke_width=stroke_width_of_mask(mask),
        diameter=b.diagonal,
        bbox=b,
        pixel_count=n,
    )


def stroke_width_of_mask(mask: np.ndarray) -> float:
    """2 x mean boundary distance over the ridge of the distance transform.

    The transform measures distance from each pixel center to the region
    boundary (half a pixel beyond the nearest outside pixel center), so a
    solid bar of width w yields approximately w. Ridge pixels are local
    maxima of the transform over their 8-neighborhood.
    """
    padded = np.pad(mask, 1)
    dist = ndimage.distance_transform_edt(padded)
    ridge = _local_maxima(dist) & padded
    values = dist[ridge] - 0.5
    if values.size == 0:
        # Degenerate single-pixel-ish masks: every pixel is boundary.
        values = dist[padded] - 0.5
    return float(2.0 * values.mean())


def _local_maxima(dist: np.ndarray) -> np.ndarray:
    out = np.ones_like(dist, dtype=bool)
    h, w = dist.shape
    for dy in (-1, 0, 1):
        for dx in (-1, 0, 1):
            if dy == 0 and dx == 0:
                continue
            shifted = np.zeros_like(dist)
            ys0, ys1 = max(dy, 0), h + min(dy, 0)
            xs0, xs1 = max(dx, 0), w + min(dx, 0)
            shifted[ys0:ys1, xs0:xs1] = dist[ys0 - dy:ys1 - dy, xs0 - dx:xs1 - dx]
            out &= dist >= shifted
    return out


def feature_matrix(feats: list[RegionFeatures], params: GroupingParams,
                   width: int, height: int) -> np.ndarray:
    """Stack normalized, weighted cue vectors (one row per region)."""
    s = params.spatial_scale
    rows = np.empty((len(feats), N_CUES), dtype=np.float64)
    for i, f in enumerate(feats):
        rows[i] = (
            f.center[0] / width * s,
            f.center[1] / height * s,
            f.intensity_mean / 255.0,
            f.color_mean[0] / 255.0,
            f.color_mean[1] / 255.0,
            f.color_mean[2] / 255.0,
            math.log2(f.stroke_width),
            math.log2(f.diameter),
        )
    return rows * np.asarray(params.weights, dtype=np.float64)


def cap_regions(regions: list[Region], max_regions: int) -> list[Region]:
    """Keep the most stable (lowest variation) regions, preserving order."""
    if len(regions) <= max_regions:
        return regions
    keys = sorted(range(len(regions)),
                  key=lambda i: (regions[i].variation, regions[i].polarity,
                                 regions[i].seed, regions[i].level))
    kept = sorted(keys[:max_regions])
    return [regions[i] for i in kept]


def _leaf_node(i: int, f: RegionFeatures, vec: np.ndarray) -> DendroNode:
    cx, cy = f.center
    return DendroNode(
        id=i, left=-1, right=-1, distance=0.0,
        member_count=1, bbox=f.bbox, pixel_total=f.pixel_count,
        cue_mean=vec.copy(), cue_m2=np.zeros(N_CUES),
        center_sum=np.array([cx, cy, cx * cx, cy * cy, cx * cy]),
    )


@njit(cache=True)
def _kruskal(ii, jj, order, k):  # pragma: no cover - numba
    parent = np.arange(k, dtype=np.int64)
    cluster_node = np.arange(k, dtype=np.int64)
    out_a = np.empty(k - 1, np.int64)
    out_b = np.empty(k - 1, np.int64)
    out_e = np.empty(k - 1, np.int64)
    m = 0
    for idx in range(order.shape[0]):
        e = order[idx]
        a = ii[e]
        b = jj[e]
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        while parent[b] != b:
            parent[b] = parent[parent[b]]
            b = parent[b]
        if a == b:
            continue
        out_a[m] = cluster_node[a]
        out_b[m] = cluster_node[b]
        out_e[m] = e
        parent[b] = a
        cluster_node[a] = k + m
        m += 1
        if m == k - 1:
            break
    return out_a, out_b, out_e


def build_dendrogram(feats: list[RegionFeatures], params: GroupingParams,
                     width: int, height: int) -> Dendrogram:
    """Single-linkage agglomeration in the normalized cue space.

    Merges are applied in order of (distance, smaller leaf index, larger
    leaf index) over all leaf pairs, which realizes single linkage with a
    reproducible tie-break.
    """
    k = len(feats)
    if k == 0:
        return Dendrogram(leaves=[], nodes=[])
    vecs = feature_matrix(feats, params, width, height)
    nodes = [_leaf_node(i, f, vecs[i]) for i, f in enumerate(feats)]
    if k == 1:
        return Dendrogram(leaves=list(feats), nodes=nodes)

    dist = pdist(vecs)
    ii, jj = np.triu_indices(k, 1)
    # triu_indices emits pairs already sorted by (i, j), so a stable sort
    # on distance alone realizes the (distance, i, j) tie-break.
    order = np.argsort(dist, kind="stable")

    out_a, out_b, out_e = _kruskal(ii, jj, order, k)
    for t in range(k - 1):
        na, nb = nodes[out_a[t]], nodes[out_b[t]]
        nodes.append(_merge_nodes(len(nodes), na, nb, float(dist[out_e[t]])))
    return Dendrogram(leaves=list(feats), nodes=nodes)


def _merge_nodes(node_id: int, a: DendroNode, b: DendroNode,
                 distance: float) -> DendroNode:
    n1, n2 = a.member_count, b.member_count
    n = n1 + n2
    delta = b.cue_mean - a.cue_mean
    mean = a.cue_mean + delta * (n2 / n)
    m2 = a.cue_m2 + b.cue_m2 + delta * delta * (n1 * n2 / n)
    return DendroNode(
        id=node_id, left=a.id, right=b.id, distance=distance,
        member_count=n, bbox=a.bbox.union(b.bbox),
        pixel_total=a.pixel_total + b.pixel_total,
        cue_mean=mean, cue_m2=m2,
        center_sum=a.center_sum + b.center_sum,
        dist_sum=a.dist_sum + b.dist_sum + distance,
        dist_sq_sum=a.dist_sq_sum + b.dist_sq_sum + distance * distance,
        dist_count=a.dist_count + b.dist_count + 1,
    )


def quality_score(node: DendroNode) -> float:
    """Group quality: member count, discounted by merge-distance spread and
    by the RMS residual of member centers to their best-fit line."""
    if node.is_leaf:
        return 0.0
    m = node.member_count

    cv = 0.0
    if node.dist_count > 0:
        mean_d = node.dist_sum / node.dist_count
        if mean_d > 0.0:
            var_d = max(node.dist_sq_sum / node.dist_count - mean_d * mean_d, 0.0)
            cv = math.sqrt(var_d) / mean_d

    sx, sy, sxx, syy, sxy = node.center_sum
    mx, my = sx / m, sy / m
    cxx = sxx / m - mx * mx
    cyy = syy / m - my * my
    cxy = sxy / m - mx * my
    half_gap = math.hypot(cxx - cyy, 2.0 * cxy) / 2.0
    lam_min = (cxx + cyy) / 2.0 - half_gap
    residual = math.sqrt(max(lam_min, 0.0))

    return m / (1.0 + cv) * max(0.0, 1.0 - residual / node.bbox.diagonal)


def passes_group_filter(node: DendroNode, params: GroupingParams) -> bool:
    """Recall-safe text-likeness gate on fill ratio, aspect and size."""
    b = node.bbox
    if node.pixel_total / b.area < params.min_fill_ratio:
        return False
    aspect = b.width / b.height
    if not params.min_aspect <= aspect <= params.max_aspect:
        return False
    return node.member_count <= params.max_members


def enumerate_hypotheses(dendrogram: Dendrogram,
                         params: GroupingParams | None = None) -> list[Proposal]:
    """One proposal per dendrogram node passing the group filter.

    Proposals sharing the exact same bounding box are collapsed, keeping
    the highest quality. Output order follows node ids (deterministic).
    """
    params = params or GroupingParams()
    best: dict[tuple[int, int, int, int], Proposal] = {}
    for node in dendrogram.nodes:
        if not passes_group_filter(node, params):
            continue
        prop = Proposal(bbox=node.bbox, quality=quality_score(node), mtp=None,
                        source=node.id, member_count=node.member_count)
        key = (node.bbox.x0, node.bbox.y0, node.bbox.x1, node.bbox.y1)
        held = best.get(key)
        if held is None or prop.quality > held.quality:
            best[key] = prop
    return list(best.values())

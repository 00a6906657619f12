"""Independent brute-force reference implementations used by the tests.

Nothing here shares code with the package: region extraction is done by
exhaustively thresholding at every gray level and labeling connected
components with scipy, distance transforms by scanning all boundary
pixels, and single linkage by repeated minimum scans over the full
distance matrix.
"""

from __future__ import annotations

import numpy as np
from scipy import ndimage

FOUR = np.array([[0, 1, 0], [1, 1, 1], [0, 1, 0]], dtype=bool)


def _components(mask: np.ndarray):
    """Connected components of a boolean mask as sorted flat-index arrays."""
    lab, n = ndimage.label(mask, structure=FOUR)
    flat = lab.ravel()
    order = np.argsort(flat, kind="stable")
    counts = np.bincount(flat, minlength=n + 1)
    comps = {}
    start = counts[0]
    for label in range(1, n + 1):
        end = start + counts[label]
        comps[label] = order[start:end]
        start = end
    return lab, comps


def exhaustive_regions(gray: np.ndarray, polarity: str, delta: int,
                       min_area: int, max_area_ratio: float,
                       max_variation: float, min_diversity: float):
    """All stable regions of one polarity by brute-force thresholding.

    Returns a list of dicts with keys level, seed, area, pixels (frozenset
    of flat indices) and variation, matching the package's selection rules:
    a node is any distinct connected component of {p: g(p) <= t}; its
    variation compares the seed's component areas at t = birth + delta
    (capped at 255) and t = birth - delta (raised to the seed's gray);
    selection keeps area/variation-bounded local minima along the seed
    branch, then prunes nested near-duplicates by diversity.
    """
    g = gray if polarity == "dark" else 255 - gray
    h, w = g.shape
    flat = g.ravel().astype(np.int32)
    ds = np.unique(flat)

    labs = {}           # distinct threshold -> label array
    key_at = {}         # distinct threshold -> {label: node key}
    nodes = {}          # key -> record
    alive = {}          # key -> label at current threshold
    for t in (int(v) for v in ds):
        lab, comps = _components(g <= t)
        labs[t] = lab
        key_at[t] = {}
        next_alive = {}
        for label, pixels in comps.items():
            key = pixels.tobytes()
            if key not in nodes:
                grays = flat[pixels]
                gmin = grays.min()
                seed = int(pixels[grays == gmin].min())
                nodes[key] = {
                    "birth": t, "death": 255, "area": int(len(pixels)),
                    "pixels": pixels, "seed": seed,
                }
            key_at[t][label] = key
            next_alive[key] = label
        for key in alive:
            if key not in next_alive:
                nodes[key]["death"] = t - 1
        alive = next_alive

    dlist = [int(v) for v in ds]

    def floor_threshold(t: int) -> int:
        # S_t equals S_t' for the largest distinct gray t' <= t
        lo = [v for v in dlist if v <= t]
        return lo[-1]

    def area_at(t: int, seed: int) -> int:
        lab = labs[floor_threshold(t)]
        value = lab.ravel()[seed]
        return int(np.count_nonzero(lab == value))

    def node_at(t: int, seed: int):
        te = floor_threshold(t)
        lab = labs[te]
        return nodes[key_at[te][lab.ravel()[seed]]]

    recs = list(nodes.values())
    for rec in recs:
        seed = rec["seed"]
        tplus = min(rec["birth"] + delta, 255)
        tminus = max(rec["birth"] - delta, int(flat[seed]))
        aplus = area_at(tplus, seed)
        aminus = area_at(tminus, seed)
        rec["variation"] = (aplus - aminus) / rec["area"]
        rec["parent"] = None if rec["death"] == 255 \
            else node_at(rec["death"] + 1, seed)
        rec["seed_child"] = None if flat[seed] > rec["birth"] - 1 \
            else node_at(rec["birth"] - 1, seed)

    max_area = max_area_ratio * w * h
    survivors = []
    for rec in recs:
        if not min_area <= rec["area"] <= max_area:
            continue
        if rec["variation"] > max_variation:
            continue
        if rec["parent"] is not None and \
                rec["variation"] > rec["parent"]["variation"]:
            continue
        if rec["seed_child"] is not None and \
                rec["variation"] > rec["seed_child"]["variation"]:
            continue
        survivors.append(rec)

    keep_factor = 1.0 - min_diversity
    surviving_keys = {id(rec) for rec in survivors}
    pruned = set()
    for rec in survivors:
        a = rec["parent"]
        while a is not None and rec["area"] > a["area"] * keep_factor:
            if id(a) in surviving_keys:
                if rec["variation"] <= a["variation"]:
                    pruned.add(id(a))
                if a["variation"] < rec["variation"]:
                    pruned.add(id(rec))
            a = a["parent"]

    out = []
    for rec in survivors:
        if id(rec) in pruned:
            continue
        out.append({
            "level": rec["birth"],
            "seed": rec["seed"],
            "area": rec["area"],
            "pixels": frozenset(int(p) for p in rec["pixels"]),
            "variation": rec["variation"],
        })
    out.sort(key=lambda r: (r["seed"], r["level"]))
    return out


def brute_distance_transform(mask: np.ndarray) -> np.ndarray:
    """Euclidean distance from each true pixel to the nearest false pixel
    (image border counts as false), by scanning all false pixels."""
    h, w = mask.shape
    padded = np.pad(mask, 1)
    fy, fx = np.nonzero(~padded)
    out = np.zeros((h, w), dtype=np.float64)
    for y in range(h):
        for x in range(w):
            if mask[y, x]:
                d2 = (fy - (y + 1)) ** 2 + (fx - (x + 1)) ** 2
                out[y, x] = np.sqrt(d2.min())
    return out


def brute_single_linkage(vecs: np.ndarray):
    """Naive single linkage with the (distance, i, j) tie-break.

    Returns the merge sequence as (left_members, right_members, distance)
    tuples with members being frozensets of leaf indices; the pair picked
    at each step is the one whose minimum inter-cluster edge, labeled by
    its (distance, i, j) over leaf pairs, is smallest.
    """
    k = len(vecs)
    d = np.sqrt(((vecs[:, None, :] - vecs[None, :, :]) ** 2).sum(axis=2))
    clusters = [frozenset([i]) for i in range(k)]
    merges = []
    while len(clusters) > 1:
        best = None
        best_pair = None
        for a in range(len(clusters)):
            for b in range(a + 1, len(clusters)):
                for i in sorted(clusters[a]):
                    for j in sorted(clusters[b]):
                        lo, hi = min(i, j), max(i, j)
                        key = (d[lo, hi], lo, hi)
                        if best is None or key < best:
                            best = key
                            best_pair = (a, b)
        a, b = best_pair
        # orientation: the side holding the smaller leaf index of the
        # winning edge comes first, matching edge (i, j) with i < j
        lo_in_a = best[1] in clusters[a]
        left = clusters[a] if lo_in_a else clusters[b]
        right = clusters[b] if lo_in_a else clusters[a]
        merges.append((left, right, float(best[0])))
        merged = clusters[a] | clusters[b]
        clusters = [c for idx, c in enumerate(clusters)
                    if idx not in (a, b)] + [merged]
    return merges


def brute_box_mean(values: np.ndarray, x0: int, y0: int, x1: int, y1: int) -> float:
    total = 0.0
    for y in range(y0, y1):
        for x in range(x0, x1):
            total += float(values[y, x])
    return total / ((x1 - x0) * (y1 - y0))

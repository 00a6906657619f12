"""Command line interface.

Subcommands:

- ``synth``: render synthetic scenes (image + heatmap + ground truth).
- ``propose``: detect and group regions, write one proposal CSV per image.
- ``rank``: propose, then order by a strategy (bas | mtp | sup).
- ``eval``: rank, then score detection rate against ground truth.
- ``bench``: time the pipeline stages on one synthetic scene.

A flat ``key = value`` config file can hold any tunable; command line
flags override file values. TEXTPROP_THREADS sets the default worker
count. Images are paired with heatmaps and per-image ground truth by
file stem. Outputs are written in deterministic order regardless of the
worker count.

CSV schemas:

- proposals: ``rank,x0,y0,x1,y1,Q,mtp`` (mtp empty for the bas strategy)
- recall: ``strategy,tau,N,detection_rate``
- per-image recall: ``image,strategy,tau,N,detection_rate``
"""

from __future__ import annotations

import argparse
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

from . import evaluation, grouping, imaging, mser, ranking, synthgen

IMAGE_SUFFIXES = (".png", ".pgm", ".ppm", ".jpg", ".jpeg", ".bmp")

CONFIG_KEYS = {
    "delta": int,
    "min_area": int,
    "max_area_ratio": float,
    "max_variation": float,
    "min_diversity": float,
    "weights": "floats",
    "spatial_scale": float,
    "min_fill_ratio": float,
    "min_aspect": float,
    "max_aspect": float,
    "max_members": int,
    "max_regions": int,
    "strategy": str,
    "tau": float,
    "iou": float,
    "budgets": "ints",
    "threads": int,
    "mtp_mask": "bool",
}


class CliError(Exception):
    pass


def _cast(key: str, raw: str):
    kind = CONFIG_KEYS[key]
    try:
        if kind == "floats":
            return tuple(float(v) for v in raw.split(","))
        if kind == "ints":
            return [int(v) for v in raw.split(",")]
        if kind == "bool":
            if raw.lower() in ("1", "true", "yes", "on"):
                return True
            if raw.lower() in ("0", "false", "no", "off"):
                return False
            raise ValueError(f"not a boolean: {raw!r}")
        return kind(raw)
    except ValueError as exc:
        raise CliError(f"config key {key!r}: {exc}") from None


def parse_config(path: str | Path) -> dict:
    """Flat key = value file; '#' starts a comment line."""
    out = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise CliError(f"{path}:{lineno}: expected key = value")
        key, _, value = line.partition("=")
        key = key.strip()
        if key not in CONFIG_KEYS:
            raise CliError(f"{path}:{lineno}: unknown key {key!r}")
        out[key] = _cast(key, value.strip())
    return out


def _setting(args, config: dict, key: str, default):
    cli_val = getattr(args, key, None)
    if cli_val is not None:
        return cli_val
    if key in config:
        return config[key]
    return default


def _resolve_params(args, config: dict):
    mp = mser.MserParams(
        delta=_setting(args, config, "delta", 5),
        min_area=_setting(args, config, "min_area", 10),
        max_area_ratio=_setting(args, config, "max_area_ratio", 0.5),
        max_variation=_setting(args, config, "max_variation", 0.5),
        min_diversity=_setting(args, config, "min_diversity", 0.2),
    )
    weights = _setting(args, config, "weights", (1.0,) * grouping.N_CUES)
    gp = grouping.GroupingParams(
        weights=tuple(weights),
        spatial_scale=_setting(args, config, "spatial_scale", 1.0),
        min_fill_ratio=_setting(args, config, "min_fill_ratio", 0.05),
        min_aspect=_setting(args, config, "min_aspect", 0.1),
        max_aspect=_setting(args, config, "max_aspect", 30.0),
        max_members=_setting(args, config, "max_members", 1000),
        max_regions=_setting(args, config, "max_regions", 3000),
    )
    return mp, gp


def _resolve_threads(args, config: dict) -> int:
    env = os.environ.get("TEXTPROP_THREADS")
    default = int(env) if env else 1
    n = _setting(args, config, "threads", default)
    if n < 1:
        raise CliError(f"threads must be >= 1, got {n}")
    return n


def discover_images(specs: list[str]) -> list[Path]:
    """Expand files/directories into a sorted, stem-unique image list."""
    found: list[Path] = []
    for spec in specs:
        p = Path(spec)
        if p.is_dir():
            found.extend(f for f in sorted(p.iterdir())
                         if f.suffix.lower() in IMAGE_SUFFIXES)
        elif p.is_file():
            found.append(p)
        else:
            raise CliError(f"no such image or directory: {spec}")
    found.sort(key=lambda f: (f.stem, str(f)))
    if not found:
        raise CliError("no images found")
    stems = [f.stem for f in found]
    dupes = {s for s in stems if stems.count(s) > 1}
    if dupes:
        raise CliError(f"duplicate image stems: {', '.join(sorted(dupes))}")
    return found


def _pair_heatmaps(images: list[Path], heatmap_dir: str) -> list[Path]:
    hdir = Path(heatmap_dir)
    if not hdir.is_dir():
        raise CliError(f"heatmap directory not found: {heatmap_dir}")
    paired, missing = [], []
    for img in images:
        for suffix in (".tphm", ".pgm"):
            cand = hdir / (img.stem + suffix)
            if cand.is_file():
                paired.append(cand)
                break
        else:
            missing.append(img.stem)
    if missing:
        raise CliError(f"no heatmap for: {', '.join(missing)}")
    return paired


def _pair_gt(images: list[Path], gt_spec: str) -> dict[str, evaluation.GroundTruth]:
    gt_path = Path(gt_spec)
    if gt_path.is_file() and gt_path.suffix.lower() == ".json":
        table = evaluation.parse_cocotext_gt(gt_path)
        missing = [i.stem for i in images if i.stem not in table]
        if missing:
            raise CliError(f"no ground truth for: {', '.join(missing)}")
        return {i.stem: table[i.stem] for i in images}
    if gt_path.is_dir():
        out, missing = {}, []
        for img in images:
            for name in (img.stem + ".txt", "gt_" + img.stem + ".txt"):
                cand = gt_path / name
                if cand.is_file():
                    out[img.stem] = evaluation.parse_icdar_gt(cand)
                    break
            else:
                missing.append(img.stem)
        if missing:
            raise CliError(f"no ground truth for: {', '.join(missing)}")
        return out
    raise CliError(f"ground truth must be a .json file or a directory: {gt_spec}")


def propose_image(color: imaging.ColorImage, mser_params: mser.MserParams,
                  group_params: grouping.GroupingParams):
    """Full proposal stage for one image.

    Returns (proposals, dendrogram, regions); regions are the capped leaf
    regions in dendrogram leaf order.
    """
    gray = color.to_gray()
    regions = mser.detect_regions(gray, mser_params)
    regions = grouping.cap_regions(regions, group_params.max_regions)
    feats = [grouping.compute_region_features(r, gray, color) for r in regions]
    dendro = grouping.build_dendrogram(feats, group_params,
                                       color.width, color.height)
    props = grouping.enumerate_hypotheses(dendro, group_params)
    return props, dendro, regions


def rank_image(color: imaging.ColorImage, heatmap: imaging.Heatmap | None,
               strategy: str, tau: float, mser_params: mser.MserParams,
               group_params: grouping.GroupingParams,
               mtp_mask: bool = False) -> ranking.RankedList:
    props, dendro, regions = propose_image(color, mser_params, group_params)
    if strategy == "bas":
        return ranking.rank_bas(props)
    if heatmap is None:
        raise CliError(f"strategy {strategy!r} needs a heatmap")
    if (heatmap.width, heatmap.height) != (color.width, color.height):
        raise CliError(
            f"heatmap {heatmap.width}x{heatmap.height} does not match "
            f"image {color.width}x{color.height}")
    integral = imaging.build_integral(heatmap)
    mtps = None
    if mtp_mask:
        mtps = ranking.mask_mtp_means(props, dendro, regions, integral)
    if strategy == "mtp":
        return ranking.rank_mtp(props, integral, mtps)
    if strategy == "sup":
        return ranking.rank_sup(props, integral, tau, mtps)
    raise CliError(f"unknown strategy {strategy!r}")


def _format_float(v: float) -> str:
    return f"{v:.9g}"


def write_proposals_csv(ranked: ranking.RankedList, path: Path) -> None:
    lines = ["rank,x0,y0,x1,y1,Q,mtp"]
    for r, p in enumerate(ranked.proposals, start=1):
        b = p.bbox
        mtp = "" if p.mtp is None else _format_float(p.mtp)
        lines.append(f"{r},{b.x0},{b.y0},{b.x1},{b.y1},"
                     f"{_format_float(p.quality)},{mtp}")
    path.write_text("\n".join(lines) + "\n")


def _parse_seeds(spec: str) -> list[int]:
    seeds = []
    for part in spec.split(","):
        part = part.strip()
        if "-" in part[1:]:
            lo, _, hi = part.partition("-")
            seeds.extend(range(int(lo), int(hi) + 1))
        else:
            seeds.append(int(part))
    if not seeds:
        raise CliError("empty seed list")
    return seeds


def _cmd_synth(args) -> int:
    cfg = synthgen.SceneConfig(
        width=args.width, height=args.height, n_words=args.n_words,
        glyph_min=args.glyph_min, glyph_max=args.glyph_max,
        background=args.background, bg_level=args.bg_level,
        bg_noise_sigma=args.bg_noise, heatmap_sigma=args.heatmap_sigma,
        heatmap_blur=args.heatmap_blur)
    seeds = _parse_seeds(args.seeds)
    for seed in seeds:
        scene = synthgen.generate_scene(seed, cfg)
        synthgen.write_scene(scene, args.out, f"img_{seed:05d}")
    print(f"wrote {len(seeds)} scenes to {args.out}")
    return 0


def _run_ranking(args, need_gt: bool):
    config = parse_config(args.config) if args.config else {}
    mp, gp = _resolve_params(args, config)
    threads = _resolve_threads(args, config)
    strategy = _setting(args, config, "strategy", "bas")
    if strategy not in ("bas", "mtp", "sup"):
        raise CliError(f"unknown strategy {strategy!r}")
    tau = _setting(args, config, "tau", 0.1)
    if not 0.0 <= tau <= 1.0:
        raise CliError(f"tau must be in [0, 1], got {tau}")
    mtp_mask = bool(_setting(args, config, "mtp_mask", False))

    images = discover_images(args.images)
    heatmaps: list[Path | None]
    if strategy == "bas":
        heatmaps = [None] * len(images)
    else:
        if not args.heatmaps:
            raise CliError(f"strategy {strategy!r} needs --heatmaps")
        heatmaps = list(_pair_heatmaps(images, args.heatmaps))

    gt_table = None
    if need_gt:
        if not args.gt:
            raise CliError("eval needs --gt")
        gt_table = _pair_gt(images, args.gt)

    def work(pair):
        img_path, hm_path = pair
        color = imaging.load_image(img_path)
        heatmap = imaging.load_heatmap(hm_path) if hm_path else None
        try:
            return rank_image(color, heatmap, strategy, tau, mp, gp, mtp_mask)
        except CliError as exc:
            raise CliError(f"{img_path.name}: {exc}") from None

    with ThreadPoolExecutor(max_workers=threads) as pool:
        ranked_lists = list(pool.map(work, zip(images, heatmaps)))

    out = Path(args.out)
    prop_dir = out / "proposals"
    prop_dir.mkdir(parents=True, exist_ok=True)
    for img, ranked in zip(images, ranked_lists):
        write_proposals_csv(ranked, prop_dir / f"{img.stem}.csv")
    return images, ranked_lists, gt_table, config, strategy, tau


def _cmd_rank(args) -> int:
    images, _, _, _, _, _ = _run_ranking(args, need_gt=False)
    print(f"wrote proposals for {len(images)} images to {args.out}/proposals")
    return 0


def _cmd_eval(args) -> int:
    images, ranked_lists, gt_table, config, _, _ = _run_ranking(args, need_gt=True)
    budgets = _setting(args, config, "budgets", [10, 100, 1000])
    if sorted(budgets) != list(budgets):
        raise CliError("budgets must be ascending")
    iou_thresh = _setting(args, config, "iou", 0.5)

    pairs = [(ranked, gt_table[img.stem])
             for img, ranked in zip(images, ranked_lists)]
    curve = evaluation.corpus_recall_curve(pairs, budgets, iou_thresh)

    out = Path(args.out)
    lines = ["strategy,tau,N,detection_rate"]
    for n, rate in curve.points:
        lines.append(f"{curve.strategy},{_format_float(curve.tau)},"
                     f"{n},{_format_float(rate)}")
    (out / "recall.csv").write_text("\n".join(lines) + "\n")

    lines = ["image,strategy,tau,N,detection_rate"]
    for img, ranked in zip(images, ranked_lists):
        per = evaluation.recall_curve(ranked, gt_table[img.stem],
                                      budgets, iou_thresh)
        for n, rate in per.points:
            lines.append(f"{img.stem},{per.strategy},{_format_float(per.tau)},"
                         f"{n},{_format_float(rate)}")
    (out / "recall_per_image.csv").write_text("\n".join(lines) + "\n")

    for n, rate in curve.points:
        print(f"{curve.strategy} tau={curve.tau:g} N={n}: "
              f"detection_rate={rate:.4f}")
    return 0


def _cmd_bench(args) -> int:
    cfg = synthgen.SceneConfig(width=args.width, height=args.height,
                               n_words=6, background="mix",
                               heatmap_sigma=0.05, heatmap_blur=2.0)
    scene = synthgen.generate_scene(args.seed, cfg)
    mp, gp = mser.MserParams(), grouping.GroupingParams()

    rank_image(scene.image, scene.heatmap, "sup", 0.1, mp, gp)  # warm jit
    for run in range(args.runs):
        t0 = time.perf_counter()
        props, dendro, regions = propose_image(scene.image, mp, gp)
        t1 = time.perf_counter()
        integral = imaging.build_integral(scene.heatmap)
        ranking.rank_sup(props, integral, 0.1)
        t2 = time.perf_counter()
        print(f"run {run}: propose {1e3 * (t1 - t0):.1f} ms "
              f"({len(regions)} regions, {len(props)} proposals), "
              f"rank {1e3 * (t2 - t1):.1f} ms, "
              f"total {1e3 * (t2 - t0):.1f} ms")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="textprop",
        description="Text proposal generation, ranking and evaluation.")
    sub = parser.add_subparsers(dest="command", required=True)

    synth = sub.add_parser("synth", help="render synthetic scenes")
    synth.add_argument("--out", required=True)
    synth.add_argument("--seeds", default="0-19",
                       help="e.g. 0-99 or 3,5,7 (default 0-19)")
    synth.add_argument("--width", type=int, default=320)
    synth.add_argument("--height", type=int, default=240)
    synth.add_argument("--n-words", type=int, default=4)
    synth.add_argument("--glyph-min", type=int, default=10)
    synth.add_argument("--glyph-max", type=int, default=18)
    synth.add_argument("--background", default="mix",
                       choices=("flat", "gradient", "noise", "mix"))
    synth.add_argument("--bg-level", type=int, default=160)
    synth.add_argument("--bg-noise", type=float, default=22.0)
    synth.add_argument("--heatmap-sigma", type=float, default=0.0)
    synth.add_argument("--heatmap-blur", type=float, default=0.0)
    synth.set_defaults(func=_cmd_synth)

    def add_common(p, with_gt: bool):
        p.add_argument("images", nargs="+",
                       help="image files and/or directories")
        p.add_argument("--out", required=True)
        p.add_argument("--config")
        p.add_argument("--heatmaps", help="directory of <stem>.tphm/.pgm")
        p.add_argument("--strategy", choices=("bas", "mtp", "sup"))
        p.add_argument("--tau", type=float)
        p.add_argument("--mtp-mask", action="store_const", const=True,
                       dest="mtp_mask",
                       help="mean probability over member pixels, not the box")
        p.add_argument("--threads", type=int)
        p.add_argument("--delta", type=int)
        p.add_argument("--min-area", type=int, dest="min_area")
        p.add_argument("--max-area-ratio", type=float, dest="max_area_ratio")
        p.add_argument("--max-variation", type=float, dest="max_variation")
        p.add_argument("--min-diversity", type=float, dest="min_diversity")
        p.add_argument("--max-regions", type=int, dest="max_regions")
        if with_gt:
            p.add_argument("--gt", help=".json file or directory of .txt")
            p.add_argument("--iou", type=float)
            p.add_argument("--budgets",
                           type=lambda s: [int(v) for v in s.split(",")])

    rank = sub.add_parser("rank", help="write ranked proposal CSVs")
    add_common(rank, with_gt=False)
    rank.set_defaults(func=_cmd_rank)

    propose = sub.add_parser("propose",
                             help="write proposal CSVs in quality order")
    add_common(propose, with_gt=False)
    propose.set_defaults(func=_cmd_rank, strategy="bas")

    evaluate = sub.add_parser("eval", help="score detection rate against GT")
    add_common(evaluate, with_gt=True)
    evaluate.set_defaults(func=_cmd_eval)

    bench = sub.add_parser("bench", help="time the pipeline on one scene")
    bench.add_argument("--width", type=int, default=640)
    bench.add_argument("--height", type=int, default=480)
    bench.add_argument("--seed", type=int, default=0)
    bench.add_argument("--runs", type=int, default=3)
    bench.set_defaults(func=_cmd_bench)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (CliError, evaluation.GroundTruthParseError, imaging.HeatmapFormatError,
            imaging.HeatmapRangeError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())

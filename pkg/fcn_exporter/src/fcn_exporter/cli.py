"""fcn-export: write one TPHM v1 heatmap per input image."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .export import ExportError, ExportJob, export_heatmaps

IMAGE_SUFFIXES = (".png", ".pgm", ".ppm", ".jpg", ".jpeg", ".bmp")


def _expand(specs: list[str]) -> tuple[Path, ...]:
    out: list[Path] = []
    for spec in specs:
        p = Path(spec)
        if p.is_dir():
            out.extend(f for f in sorted(p.iterdir())
                       if f.suffix.lower() in IMAGE_SUFFIXES)
        elif p.is_file():
            out.append(p)
        else:
            raise ExportError(f"no such image or directory: {spec}")
    return tuple(out)


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="fcn-export",
        description="Run a text segmentation checkpoint over images and "
                    "write TPHM v1 heatmaps.")
    parser.add_argument("images", nargs="+",
                        help="image files and/or directories")
    parser.add_argument("--model", required=True, help="checkpoint path")
    parser.add_argument("--out", required=True, help="output directory")
    parser.add_argument("--device", default="cpu", choices=("cpu", "cuda"))
    args = parser.parse_args(argv)
    try:
        job = ExportJob(model_path=Path(args.model), images=_expand(args.images),
                        out_dir=Path(args.out), device=args.device)
        written = export_heatmaps(job)
    except (ExportError, FileNotFoundError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(f"wrote {len(written)} heatmaps to {args.out}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())

"""dr-export: run a backbone+head model over a manifest's test split and
write the ensemble pipeline's prediction CSV."""

from __future__ import annotations

import argparse
import sys

from .backbones import BACKBONES, build_head
from .export import ManifestError, export_predictions


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="dr-export", description=__doc__)
    parser.add_argument("--backbone", required=True, choices=BACKBONES)
    parser.add_argument("--manifest", required=True, help="image_path,label,split CSV")
    parser.add_argument("--image-dir", required=True)
    parser.add_argument("--out", required=True, help="prediction CSV to write")
    parser.add_argument("--weights", default=None, help="local state-dict file (.pt)")
    parser.add_argument("--alpha", type=float, default=0.01,
                        help="leaky-rectifier negative slope (default 0.01)")
    parser.add_argument("--batch-size", type=int, default=8)
    parser.add_argument("--input-size", type=int, default=64)
    parser.add_argument("--num-classes", type=int, default=5)
    parser.add_argument("--split", default="test", choices=("train", "test"))
    parser.add_argument("--seed", type=int, default=0,
                        help="init seed when no weights file is given")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        model = build_head(
            args.backbone,
            num_classes=args.num_classes,
            negative_slope=args.alpha,
            weights_path=args.weights,
            seed=args.seed,
        )
        failures = export_predictions(
            model,
            args.image_dir,
            args.manifest,
            args.out,
            split=args.split,
            input_size=args.input_size,
            batch_size=args.batch_size,
        )
    except (ManifestError, FileNotFoundError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    if failures:
        for failure in failures:
            print(f"unreadable: {failure}", file=sys.stderr)
        return 1
    print(f"wrote {args.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())

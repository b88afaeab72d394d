"""Command-line interface.

Subcommands: ``synth`` (emit a synthetic clustered dataset), ``prepare``
(rasterize + fit density channels + bin counts), ``generate`` (sample
layouts per counting category), ``evaluate`` (spatial-FID report), and
``sweep`` (parameter ablations).  The ``LAYOUTFORGE_THREADS`` environment
variable caps the per-patch worker pool.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .errors import LayoutForgeError
from .pipeline import (
    DENSITY_CHOICES,
    SWEEP_AXES,
    PipelineConfig,
    cmd_evaluate,
    cmd_generate,
    cmd_prepare,
    cmd_sweep,
    cmd_synth,
)


def _add_config_args(parser: argparse.ArgumentParser, need_dataset: bool) -> None:
    if need_dataset:
        parser.add_argument("--dataset", type=Path, required=True, help="dataset JSON file")
    parser.add_argument("--out", type=Path, required=True, help="output directory")
    parser.add_argument("--grid", type=int, default=64, help="raster grid size (default 64)")
    parser.add_argument("--k", type=int, default=5, help="number of counting categories")
    parser.add_argument(
        "--density", choices=DENSITY_CHOICES, default="gmm", help="spatial density model"
    )
    parser.add_argument("--steps", type=int, default=200, help="diffusion steps T")
    parser.add_argument("--beta-start", type=float, default=None)
    parser.add_argument("--beta-end", type=float, default=None)
    parser.add_argument(
        "--variance",
        choices=("beta", "beta-tilde"),
        default="beta-tilde",
        help="reverse-step variance rule",
    )
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--levels", type=int, default=4, help="feature pyramid levels")
    parser.add_argument("--bandwidth", type=float, default=None, help="fixed KDE bandwidth")
    parser.add_argument(
        "--components", type=int, default=None, help="fixed mixture component count"
    )


def _config_from_args(args: argparse.Namespace) -> PipelineConfig:
    return PipelineConfig(
        dataset=getattr(args, "dataset", None),
        out=args.out,
        grid=args.grid,
        k=args.k,
        density=args.density,
        steps=args.steps,
        beta_start=args.beta_start,
        beta_end=args.beta_end,
        variance_rule=args.variance.replace("-", "_"),
        seed=args.seed,
        levels=args.levels,
        bandwidth=args.bandwidth,
        components=args.components,
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="layoutforge", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_synth = sub.add_parser("synth", help="emit a synthetic clustered dataset")
    p_synth.add_argument("--out", type=Path, required=True, help="dataset JSON to write")
    p_synth.add_argument("--patches", type=int, default=80)
    p_synth.add_argument("--types", type=int, default=3)
    p_synth.add_argument("--size", type=float, default=256.0)
    p_synth.add_argument("--count-min", type=int, default=40)
    p_synth.add_argument("--count-max", type=int, default=200)
    p_synth.add_argument(
        "--count-dependent",
        action="store_true",
        help="tie cluster geometry to the count regime",
    )
    p_synth.add_argument("--seed", type=int, default=0)

    p_prepare = sub.add_parser("prepare", help="build training tensors + categorizer")
    _add_config_args(p_prepare, need_dataset=True)

    p_generate = sub.add_parser("generate", help="sample layouts per counting category")
    _add_config_args(p_generate, need_dataset=False)
    p_generate.add_argument(
        "--per-category", type=int, default=200, help="layouts per counting category"
    )
    p_generate.add_argument(
        "--raw", action="store_true", help="also dump raw tensors (LFT1 binary)"
    )

    p_evaluate = sub.add_parser("evaluate", help="spatial-FID report for generated layouts")
    _add_config_args(p_evaluate, need_dataset=False)
    p_evaluate.add_argument(
        "--generated",
        type=Path,
        default=None,
        help="generated layouts (dir or layouts JSON; default <out>/generated)",
    )

    p_sweep = sub.add_parser("sweep", help="ablation sweep over one parameter axis")
    _add_config_args(p_sweep, need_dataset=True)
    p_sweep.add_argument("--axis", choices=SWEEP_AXES, required=True)
    p_sweep.add_argument(
        "--values", type=float, nargs="+", required=True, help="values to sweep"
    )
    p_sweep.add_argument("--per-category", type=int, default=20)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "synth":
            n = cmd_synth(
                args.out,
                num_patches=args.patches,
                num_types=args.types,
                size=args.size,
                count_range=(args.count_min, args.count_max),
                count_dependent=args.count_dependent,
                seed=args.seed,
            )
            print(f"wrote {n} synthetic patches to {args.out}")
        elif args.command == "prepare":
            manifest = cmd_prepare(_config_from_args(args))
            print(
                f"prepared {len(manifest['patches'])} patches "
                f"({manifest['num_types']} types, K={manifest['k']}, "
                f"density={manifest['density']}) under {args.out}"
            )
        elif args.command == "generate":
            records = cmd_generate(_config_from_args(args), args.per_category, args.raw)
            print(f"generated {len(records)} layouts under {args.out}")
        elif args.command == "evaluate":
            report = cmd_evaluate(_config_from_args(args), args.generated)
            print(f"spatial-FID = {report['spatial_fid']:.6g} (report under {args.out})")
        elif args.command == "sweep":
            rows = cmd_sweep(
                _config_from_args(args), args.axis, args.values, args.per_category
            )
            best = min(rows, key=lambda r: r["spatial_fid"])
            print(
                f"swept {len(rows)} settings; best {args.axis}={best['value']} "
                f"(spatial-FID {best['spatial_fid']:.6g})"
            )
    except (LayoutForgeError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())

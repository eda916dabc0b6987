"""gen-data: write a synthetic dataset as CSV or little-endian binary"""
import argparse
from pathlib import Path

from prior_lab.commands.base import (
    CommandResult,
    add_prior_arguments,
    global_options,
    out_path,
    prior_from_args,
)
from prior_lab.schemas.synthdata import FactorSpec
from prior_lab.services.synthdata import (
    default_factors,
    gaussian_mixture,
    save_binary,
    save_csv,
    two_factor_dataset,
)

TWO_FACTOR_TAU = 0.5
MIXTURE_TAU = 1.5


def register(subparsers) -> None:
    parser = subparsers.add_parser(
        "gen-data", help="Generate a synthetic dataset", parents=[global_options()]
    )
    parser.add_argument("--kind", choices=["two-factor", "mixture"], default="two-factor")
    parser.add_argument("--n", type=int, default=2000)
    parser.add_argument("--format", choices=["csv", "binary"], default="csv")
    parser.add_argument("--output", default=None, help="File path (default: <out-dir>/dataset.<ext>)")
    parser.add_argument("--noise", type=float, default=None, help="Noise sigma (two-factor: both factors)")
    parser.add_argument("--separation", type=float, default=None, help="Mean separation (two-factor: both factors)")
    parser.add_argument("--classes", type=int, default=2, help="Mixture classes")
    parser.add_argument("--d", type=int, default=2, help="Mixture dimension")
    # two-factor: distribution of the secondary factor; mixture: class proportions
    add_prior_arguments(parser, default="power-law")
    parser.set_defaults(handler=run)


def _factor(spec: FactorSpec, args: argparse.Namespace, **update) -> FactorSpec:
    if args.noise is not None:
        update["noise_sigma"] = args.noise
    if args.separation is not None:
        update["separation"] = args.separation
    return FactorSpec.model_validate({**spec.model_dump(), **update})


def run(args: argparse.Namespace) -> CommandResult:
    if args.kind == "two-factor":
        tau = args.tau if args.tau is not None or args.prior != "power-law" else TWO_FACTOR_TAU
        default_primary, default_secondary = default_factors()
        primary = _factor(default_primary, args)
        secondary = _factor(default_secondary, args, distribution=prior_from_args(args.prior, tau, args.counts))
        dataset = two_factor_dataset(primary, secondary, N=args.n, seed=args.seed)
        config = {"primary": primary.model_dump(mode="json"), "secondary": secondary.model_dump(mode="json")}
    else:
        tau = args.tau if args.tau is not None or args.prior != "power-law" else MIXTURE_TAU
        distribution = prior_from_args(args.prior, tau, args.counts)
        dataset = gaussian_mixture(
            classes=args.classes,
            class_distribution=distribution,
            N=args.n,
            d=args.d,
            separation=args.separation if args.separation is not None else 1.0,
            noise_sigma=args.noise if args.noise is not None else 0.3,
            seed=args.seed,
        )
        config = {"classes": args.classes, "class_distribution": distribution.model_dump(mode="json", exclude_none=True)}

    suffix = "csv" if args.format == "csv" else "bin"
    path = Path(args.output) if args.output else out_path(args, f"dataset.{suffix}")
    path = save_csv(dataset, path) if args.format == "csv" else save_binary(dataset, path)

    return CommandResult(
        config={"kind": args.kind, "n": args.n, "format": args.format, "seed": args.seed, **config},
        payload={"path": path, "N": dataset.N, "d": dataset.d},
        summary=[f"wrote {dataset.N} x {dataset.d} {args.kind} dataset to {path}"],
        outputs=[path],
    )

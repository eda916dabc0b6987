"""train: one toy Siamese training run"""
import argparse
from pathlib import Path

from prior_lab.commands.base import (
    CommandResult,
    add_prior_arguments,
    global_options,
    out_path,
    prior_from_args,
)
from prior_lab.schemas.losses import LossConfig, PriorAlignment
from prior_lab.schemas.training import EncoderKind, LossKind, TrainerConfig
from prior_lab.services.synthdata import SynthDataset, load_dataset, two_factor_dataset
from prior_lab.services.trainer import train
from prior_lab.utils.serialization import write_csv, write_json

BUILTIN_TWO_FACTOR = "builtin:two-factor"


def resolve_dataset(spec: str, N: int, seed: int) -> SynthDataset:
    """A file path (CSV or binary) or the built-in two-factor dataset"""
    if spec == BUILTIN_TWO_FACTOR:
        return two_factor_dataset(N=N, seed=seed)
    path = Path(spec)
    if not path.exists():
        raise FileNotFoundError(f"dataset {spec} not found")
    return load_dataset(path)


def register(subparsers) -> None:
    parser = subparsers.add_parser(
        "train", help="Train the toy Siamese model with PMSN or MSN", parents=[global_options()]
    )
    add_prior_arguments(parser)
    parser.add_argument("--lambda", dest="lam", type=float, default=5.0, help="Regularization weight")
    parser.add_argument("--steps", type=int, default=300)
    parser.add_argument("--objective", choices=[k.value for k in LossKind], default=LossKind.PMSN.value)
    parser.add_argument(
        "--alignment", choices=[a.value for a in PriorAlignment], default=PriorAlignment.FIXED_INDEX.value
    )
    parser.add_argument("--encoder", choices=[e.value for e in EncoderKind], default=EncoderKind.MLP.value)
    parser.add_argument("--prototypes", type=int, default=10, help="Number of prototypes K")
    parser.add_argument("--lr", type=float, default=0.05, help="Learning rate")
    parser.add_argument("--no-ema", action="store_true", help="Share the encoder between both branches")
    parser.add_argument("--dataset", default=BUILTIN_TWO_FACTOR, help=f"CSV/binary file or {BUILTIN_TWO_FACTOR}")
    parser.add_argument("--n", type=int, default=2000, help="Size of the built-in dataset")
    parser.add_argument("--report", default=None, help="Report path (default: <out-dir>/train_report.json)")
    parser.set_defaults(handler=run)


def run(args: argparse.Namespace) -> CommandResult:
    loss = LossConfig(
        lam=args.lam,
        prior=prior_from_args(args.prior, args.tau, args.counts),
        prior_alignment=args.alignment,
    )
    config = TrainerConfig(
        encoder=args.encoder,
        num_prototypes=args.prototypes,
        learning_rate=args.lr,
        steps=args.steps,
        ema_momentum=None if args.no_ema else 0.99,
        objective=args.objective,
        loss=loss,
        seed=args.seed,
    )
    dataset = resolve_dataset(args.dataset, args.n, args.seed)
    report, _ = train(dataset, config)

    report_path = write_json(Path(args.report) if args.report else out_path(args, "train_report.json"), report)
    losses_path = write_csv(out_path(args, "losses.csv"), {"step": range(len(report.losses)), "loss": report.losses})

    metrics = report.metrics
    convention = "+lambda*KL" if config.objective == LossKind.PMSN else "-lambda*H"
    summary = [
        f"final loss ({convention}): {report.losses[-1]:.6f}" if report.losses else "no steps run",
        f"primary 5-NN purity:   {metrics.nn_purity_primary:.4f}",
        f"secondary 5-NN purity: {metrics.nn_purity_secondary:.4f}" if metrics.nn_purity_secondary is not None else "",
        f"KL(p_bar || prior):    {metrics.kl_pbar_to_prior:.4f}",
    ]
    return CommandResult(
        config={**config.model_dump(mode="json", by_alias=True), "dataset": args.dataset, "n": args.n},
        payload=report,
        summary=[line for line in summary if line],
        outputs=[report_path, losses_path],
    )

"""sample-audit: empirical per-sample inclusion frequencies of a batch sampler"""
import argparse
import logging

import numpy as np

from prior_lab.commands.base import CommandResult, global_options, out_path
from prior_lab.core.exceptions import UnsupportedStrategyError
from prior_lab.schemas.sampling import SamplerConfig, SamplingStrategy
from prior_lab.services.sampling import (
    LabeledDataset,
    class_selection_probabilities,
    empirical_marginal_audit,
    marginal_probability,
)
from prior_lab.utils.serialization import write_json

logger = logging.getLogger(__name__)


def register(subparsers) -> None:
    parser = subparsers.add_parser(
        "sample-audit", help="Audit per-sample marginal inclusion probabilities", parents=[global_options()]
    )
    parser.add_argument("--strategy", choices=[s.value for s in SamplingStrategy], default=SamplingStrategy.CLASS_BALANCED.value)
    parser.add_argument("--classes-per-batch", type=int, default=None)
    parser.add_argument("--batch-size", type=int, default=50)
    parser.add_argument("--iterations", type=int, default=100_000)
    parser.add_argument("--classes", type=int, default=100, help="Classes in the synthetic label set")
    parser.add_argument("--per-class", type=int, default=10, help="Samples per class")
    parser.add_argument(
        "--class-counts", type=int, nargs="+", default=None, help="Explicit per-class sizes (overrides --classes/--per-class)"
    )
    parser.set_defaults(handler=run)


def run(args: argparse.Namespace) -> CommandResult:
    config = SamplerConfig(
        strategy=args.strategy,
        classes_per_batch=args.classes_per_batch,
        batch_size=args.batch_size,
        seed=args.seed,
    )
    if args.class_counts:
        sizes = np.asarray(args.class_counts)
    else:
        sizes = np.full(args.classes, args.per_class)
    dataset = LabeledDataset.from_labels(np.repeat(np.arange(sizes.size), sizes))

    report = empirical_marginal_audit(config, dataset, args.iterations)

    closed_form = None
    if not args.class_counts:
        try:
            closed_form = marginal_probability(
                config.strategy, args.classes, args.per_class, config.batch_size, config.classes_per_batch
            )
        except UnsupportedStrategyError:
            logger.info(f"[Sampler] no closed form for {config.strategy.value}")

    table_path = out_path(args, "sample_frequencies.csv")
    table_path.parent.mkdir(parents=True, exist_ok=True)
    report.to_frame().to_csv(table_path, index=False, float_format="%.17g")

    payload = {
        **report.summary(),
        "closed_form": closed_form,
        "class_selection": class_selection_probabilities(config, dataset),
    }
    summary_path = write_json(out_path(args, "sample_audit.json"), payload)

    summary = [
        f"{config.strategy.value}: {args.iterations} batches of {config.batch_size}",
        f"max |frequency - exact| = {report.max_deviation:.3e} "
        f"(largest standard error {payload['max_standard_error']:.3e})",
    ]
    if closed_form is not None:
        summary.append(f"closed-form marginal: {closed_form!r}")
    return CommandResult(
        config={**config.model_dump(mode="json"), "iterations": args.iterations, "class_sizes": sizes.tolist()},
        payload=payload,
        summary=summary,
        outputs=[table_path, summary_path],
    )

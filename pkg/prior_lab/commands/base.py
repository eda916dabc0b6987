"""Shared plumbing for CLI subcommands"""
import argparse
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional

from prior_lab.config import settings
from prior_lab.schemas.priors import PriorKind, PriorSpec

# CLI spelling -> schema value
PRIOR_CHOICES = {
    "uniform": PriorKind.UNIFORM,
    "power-law": PriorKind.POWER_LAW,
    "empirical": PriorKind.EMPIRICAL,
}


def global_options(with_defaults: bool = False) -> argparse.ArgumentParser:
    """
    --seed, --out-dir and --json as a parent parser.

    The top-level parser carries the defaults; subcommand copies suppress
    theirs so a flag given before the subcommand name is not overwritten.
    """
    def default(value):
        return value if with_defaults else argparse.SUPPRESS

    parser = argparse.ArgumentParser(add_help=False)
    parser.add_argument("--seed", type=int, default=default(0), help="Global RNG seed")
    parser.add_argument("--out-dir", default=default(settings.OUT_DIR), help="Directory for reports and manifest.json")
    parser.add_argument("--json", action="store_true", default=default(False), help="Print the result payload as JSON")
    return parser


@dataclass
class CommandResult:
    """What a subcommand produced; main.py turns it into a manifest"""
    config: Dict[str, Any]
    payload: Any
    summary: List[str] = field(default_factory=list)
    outputs: List[Path] = field(default_factory=list)
    failed: List[str] = field(default_factory=list)


def prior_from_args(kind: str, tau: Optional[float] = None, counts: Optional[List[int]] = None) -> PriorSpec:
    """Build a PriorSpec from CLI flags (pydantic validates the combination)"""
    return PriorSpec(kind=PRIOR_CHOICES[kind], tau=tau, counts=counts)


def add_prior_arguments(parser: argparse.ArgumentParser, suffix: str = "", default: str = "uniform") -> None:
    parser.add_argument(f"--prior{suffix}", choices=sorted(PRIOR_CHOICES), default=default, help="Feature prior family")
    parser.add_argument(f"--tau{suffix}", type=float, default=None, help="Power-law exponent")
    parser.add_argument(
        f"--counts{suffix}", type=int, nargs="+", default=None, help="Class counts for an empirical prior"
    )


def out_path(args: argparse.Namespace, name: str) -> Path:
    """File inside --out-dir"""
    return Path(args.out_dir) / name

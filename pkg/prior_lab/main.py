"""
Prior Lab - command-line entry point

Exit codes: 0 success, 1 a verification check failed, 2 invalid input or a
domain error. Unexpected exceptions are logged with an error id.
"""
import argparse
import logging
import sys
import traceback
import uuid
from typing import List, Optional

from pydantic import ValidationError

from prior_lab import __version__
from prior_lab.commands import register_all
from prior_lab.commands.base import CommandResult, global_options
from prior_lab.config import settings
from prior_lab.core.exceptions import PriorLabError, VerificationFailedError
from prior_lab.schemas.manifest import RunManifest
from prior_lab.utils.serialization import dumps_json, utc_now, write_json

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_VERIFICATION_FAILED = 1
EXIT_USAGE = 2
EXIT_INTERNAL = 3


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="prior-lab",
        description="Self-supervised objectives as constrained K-means, and prior matching experiments",
        parents=[global_options(with_defaults=True)],
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    subparsers = parser.add_subparsers(dest="command", required=True)
    register_all(subparsers)
    return parser


def _emit(args: argparse.Namespace, result: CommandResult) -> None:
    if args.json:
        print(dumps_json(result.payload))
        return
    for line in result.summary:
        print(line)


def _execute(args: argparse.Namespace) -> CommandResult:
    started_at = utc_now()
    result: CommandResult = args.handler(args)

    manifest = RunManifest(
        command=args.command,
        config=result.config,
        seed=args.seed,
        tool_version=__version__,
        started_at=started_at,
        finished_at=utc_now(),
        outputs=[str(path) for path in result.outputs],
    )
    manifest_path = write_json(f"{args.out_dir}/manifest.json", manifest)
    logger.info(f"[Run] {args.command} finished; manifest at {manifest_path}")

    _emit(args, result)
    if result.failed:
        raise VerificationFailedError(result.failed)
    return result


def run(argv: Optional[List[str]] = None) -> int:
    """Parse argv, run one subcommand and return its exit code"""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)

    try:
        _execute(args)
    except VerificationFailedError as exc:
        print(f"[FAIL] {exc}", file=sys.stderr)
        return EXIT_VERIFICATION_FAILED
    except (PriorLabError, ValidationError, ValueError, OSError) as exc:
        print(f"[ERROR] {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except Exception as exc:
        # Generate a unique error ID for tracking
        error_id = str(uuid.uuid4())[:8]
        logger.error(f"[ERROR_ID: {error_id}] Unhandled exception in {args.command}", exc_info=True)
        if settings.DEBUG:
            print(traceback.format_exc(), file=sys.stderr)
        print(f"[ERROR] internal error ({type(exc).__name__}), error id {error_id}", file=sys.stderr)
        return EXIT_INTERNAL
    return EXIT_OK


def main() -> None:
    logging.basicConfig(level=settings.LOG_LEVEL)
    sys.exit(run())


if __name__ == "__main__":
    main()

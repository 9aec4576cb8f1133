"""
Command-line entry point: python -m hereditary.main <spectrum|identify|predict|rve>.
"""
import argparse
import logging
import sys
import time
from typing import List, Optional

from hereditary import __version__
from hereditary.commands import cmd_identify, cmd_predict, cmd_rve, cmd_spectrum
from hereditary.config import LOG_LEVELS, settings
from hereditary.errors import HereditaryError
from hereditary.run_config import load_run_config, with_overrides

logger = logging.getLogger(__name__)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hereditary", description=settings.APP_DESCRIPTION)
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    for name, help_text in (
        ("spectrum", "Singular values of S_M over a sweep of M"),
        ("identify", "Sample S_M and write optimal reduced models"),
        ("predict", "Evaluate a model on test programs, or run the convergence study"),
        ("rve", "Generate an RVE and export its data"),
    ):
        cmd = sub.add_parser(name, help=help_text)
        cmd.add_argument("--config", required=True, help="Run configuration (JSON)")
        cmd.add_argument("--out", default=None, help="Output directory, overrides output_dir")
        cmd.add_argument("--seed", type=int, default=None, help="RVE seed, overrides the configuration")
        cmd.add_argument("--log-level", choices=LOG_LEVELS, default=None, help="Overrides LOG_LEVEL")
        if name == "predict":
            cmd.add_argument("--model", default=None, help="Model file written by identify")
        if name == "rve":
            cmd.add_argument("--paper-scale", action="store_true", help="4³ grains of 2³ hexahedra, T=5, m=20")
    return parser


def run(argv: Optional[List[str]] = None) -> int:
    """Parse arguments, run one subcommand and return its exit code."""
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=getattr(logging, args.log_level or settings.LOG_LEVEL),
        format="%(asctime)s - %(name)s - %(levelname)s - %(message)s",
    )
    started = time.perf_counter()
    try:
        config = with_overrides(
            load_run_config(args.config),
            output_dir=args.out,
            seed=args.seed,
            paper_scale=getattr(args, "paper_scale", False),
        )
        if args.command == "spectrum":
            tables = cmd_spectrum(config)
        elif args.command == "identify":
            tables = cmd_identify(config)
        elif args.command == "predict":
            tables = cmd_predict(config, model_path=args.model)
        else:
            tables = cmd_rve(config)
    except HereditaryError as e:
        logger.error(f"{type(e).__name__}: {e}", exc_info=True)
        return e.exit_code
    except Exception as e:
        logger.error(f"Unhandled exception: {str(e)}", exc_info=True)
        return 1
    logger.info(f"{args.command} finished in {time.perf_counter() - started:.2f} s, {len(tables)} file(s) written")
    return 0


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()

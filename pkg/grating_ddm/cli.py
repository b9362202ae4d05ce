"""Command-line interface for grating DD experiments."""

from __future__ import annotations

import argparse
import logging
from pathlib import Path

from grating_ddm.campaign import emit_spectrum, run_campaign, solve
from grating_ddm.config import load_config
from grating_ddm.settings import SETTINGS


def parse_args(argv: list[str] | None = None) -> argparse.Namespace:
    parser = argparse.ArgumentParser(
        prog="grating-ddm", description="Quasi-optimal domain decomposition for periodic layered media"
    )
    parser.add_argument("--verbose", "-v", action="count", default=0, help="-v for INFO, -vv for DEBUG")
    subparsers = parser.add_subparsers(dest="command", required=True)

    for name, help_text in (
        ("solve", "Solve the first cell of an experiment and write its efficiencies"),
        ("campaign", "Run every cell of an experiment and write the iteration table"),
        ("spectrum", "Write the eigenvalues of the DD operator of every cell"),
    ):
        sub = subparsers.add_parser(name, help=help_text)
        sub.add_argument("config", type=Path, help="Experiment file (YAML or JSON)")
        sub.add_argument("--precond", default=None, choices=["none", "sweep", "exact"])
        sub.add_argument("--out", type=Path, default=None, help="Output directory")
        if name != "solve":
            sub.add_argument("--workers", type=int, default=None, help="Worker processes across cells")
    return parser.parse_args(argv)


def _configure_logging(verbose: int) -> None:
    level = {0: SETTINGS.LOG_LEVEL, 1: "INFO"}.get(verbose, "DEBUG")
    logging.basicConfig(level=level, format="%(asctime)s %(name)s %(levelname)s: %(message)s")


def main(argv: list[str] | None = None) -> None:
    args = parse_args(argv)
    _configure_logging(args.verbose)
    config = load_config(args.config)
    out = (args.out or config.output.directory).expanduser().resolve()

    if args.command == "solve":
        outcome = solve(config, precond=args.precond or "sweep")
        out.mkdir(parents=True, exist_ok=True)
        table = outcome.efficiencies
        table.to_csv(out / config.output.efficiencies, index=False)
        print(
            f"{config.name}: {outcome.report.iterations} GMRES iterations "
            f"(converged: {outcome.report.converged}), energy defect {outcome.energy_defect:.3e}"
        )
        print(table.to_string(index=False))
    elif args.command == "campaign":
        frame = run_campaign(config, precond=args.precond, out=out, workers=args.workers)
        print(frame.to_string(index=False))
    else:
        frame = emit_spectrum(config, precond=args.precond, out=out, workers=args.workers)
        computed = int((frame["status"] == "ok").sum())
        print(f"{config.name}: {computed} eigenvalues written to {out / config.output.spectrum}")


if __name__ == "__main__":
    main()

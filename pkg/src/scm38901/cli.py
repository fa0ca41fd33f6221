"""Command-line entry point: ``scm38901 snr-trace`` and ``scm38901 loss-sweep``."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import report
from .simulation import ConfigError, load_config, run_loss_sweep, run_snr_trace
from .tables import SCENARIOS, CatalogError, default_catalog, load_catalog


def _parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="TOML simulation config")
    common.add_argument("--scenario", choices=SCENARIOS)
    common.add_argument("--fc-ghz", type=float)
    common.add_argument("--distance-m", type=float, nargs="+", help="one or more tx-rx ground distances")
    common.add_argument("--seed", type=int)
    common.add_argument("--runs", type=int)
    common.add_argument("--catalog", type=Path, help="alternative parameter catalog (TOML)")
    common.add_argument("--out", type=Path, help="CSV output path (default: stdout)")

    parser = argparse.ArgumentParser(prog="scm38901", description="Spatial channel model experiments.")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("snr-trace", parents=[common], help="SNR trace between two nodes")
    sweep = sub.add_parser("loss-sweep", parents=[common], help="mean propagation loss against distance")
    sweep.add_argument("--no-shadowing", action="store_true")
    sweep.add_argument("--figure", type=Path, help="also render a PNG of the sweep")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = _parser().parse_args(argv)
    overrides = {
        "scenario": args.scenario,
        "fc_ghz": args.fc_ghz,
        "distances_m": args.distance_m,
        "seed": args.seed,
        "runs": args.runs,
        "catalog": str(args.catalog) if args.catalog else None,
    }
    if getattr(args, "no_shadowing", False):
        overrides["shadowing"] = False
    try:
        cfg = load_config(args.config, **overrides)
        catalog = load_catalog(cfg.catalog) if cfg.catalog else default_catalog()
    except (ConfigError, CatalogError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2

    meta = report.metadata(cfg, catalog)
    if args.command == "snr-trace":
        text = report.snr_trace_csv(run_snr_trace(cfg), meta)
    else:
        rows = run_loss_sweep(cfg)
        text = report.loss_sweep_csv(rows, meta)
        if args.figure:
            try:
                report.render_loss_figure(rows, args.figure, f"{cfg.scenario}, {cfg.fc_ghz:g} GHz")
            except ImportError:
                print("error: --figure needs matplotlib (pip install 'artifact[plot]')", file=sys.stderr)
                return 2

    if args.out:
        args.out.write_text(text)
    else:
        sys.stdout.write(text)
    return 0


if __name__ == "__main__":
    sys.exit(main())

"""
Command-line interface: presets, scenario, sweep, oracle-check, dispersive, plotdata
"""

import argparse
import logging
from dataclasses import replace
from pathlib import Path
from typing import List, Optional

from cli.config import ORACLE_MODES, load_sweep
from cli.plotdata import emit_plotdata
from cli.presets import PresetLibrary, resolve_scenario
from cli.scenario import format_summary, output_directory, run_oracle_check, run_scenario
from cli import sweep as sweep_runner
from core import __version__
from core.dispersive import dispersive_error_scaling, export_error_table_csv
from core.errors import ConfigError, PhysicsWarning, SpectrumError

log = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_FAILED_CHECK = 1
EXIT_CONFIG = 2


def _with_oracle(config, mode: Optional[str]):
    if mode is None:
        return config
    return replace(config, oracle=replace(config.oracle, mode=mode))


def cmd_presets(args: argparse.Namespace) -> int:
    for name in PresetLibrary.names():
        print(f"{name:<14} {PresetLibrary.describe(name)}")
    return EXIT_OK


def cmd_scenario(args: argparse.Namespace) -> int:
    config = _with_oracle(resolve_scenario(args.scenario), args.oracle)
    result = run_scenario(config, args.out, workers=args.workers, strict=args.strict)
    print(format_summary(result))
    for problem in result.failures:
        print(f"failed: {problem}")
    print(f"Wrote {len(result.outputs)} file(s) and manifest.json to {output_directory(config, args.out)}")
    return result.exit_status


def cmd_sweep(args: argparse.Namespace) -> int:
    spec = load_sweep(Path(args.sweep))
    result = sweep_runner.run_sweep(spec, args.out, workers=args.workers, strict=args.strict)
    print(sweep_runner.format_summary(result))
    return result.exit_status


def cmd_oracle_check(args: argparse.Namespace) -> int:
    config = _with_oracle(resolve_scenario(args.scenario), args.oracle)
    result = run_oracle_check(config, workers=args.workers, strict=args.strict)
    print(format_summary(result))
    return result.exit_status


def cmd_dispersive(args: argparse.Namespace) -> int:
    config = resolve_scenario(args.scenario)
    scaling = dispersive_error_scaling(config.couplings, n_c=config.n_c, options=config.options)
    print(f"Dispersive shift error, n_c = {config.n_c}")
    for zeta, eta, error in scaling.rows():
        print(f"  zeta {zeta:>10.4f} MHz  eta {eta:.3e}  |error| {error:.3e} MHz")
    print(f"  exponent in zeta: {scaling.exponent}")
    if args.out is not None:
        path = Path(args.out) / "dispersive_error.csv"
        path.parent.mkdir(parents=True, exist_ok=True)
        export_error_table_csv(scaling, path)
        print(f"Wrote {path}")
    return EXIT_OK


def cmd_plotdata(args: argparse.Namespace) -> int:
    for path in emit_plotdata(Path(args.bundle)):
        print(f"Wrote {path}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="namr-spectra",
        description="TLR voltage-fluctuation spectra with a qubit-coupled nanomechanical resonator",
    )
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    ap.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("presets", help="list built-in scenarios")
    p.set_defaults(handler=cmd_presets)

    def run_options(p: argparse.ArgumentParser) -> None:
        p.add_argument("--out", type=Path, default=None, help="output directory")
        p.add_argument("--workers", type=int, default=1, help="concurrent oracle runs or sweep points")
        p.add_argument("--strict", action="store_true", help="treat physics warnings as failures")

    p = sub.add_parser("scenario", help="run a preset or scenario file")
    p.add_argument("scenario", help="preset name or .ini path")
    p.add_argument("--oracle", choices=ORACLE_MODES, default=None, help="override the oracle mode")
    run_options(p)
    p.set_defaults(handler=cmd_scenario)

    p = sub.add_parser("sweep", help="run a sweep file")
    p.add_argument("sweep", help="sweep .ini path")
    run_options(p)
    p.set_defaults(handler=cmd_sweep)

    p = sub.add_parser("oracle-check", help="analytic versus time-domain oracle, L-inf errors")
    p.add_argument("scenario", help="preset name or .ini path")
    p.add_argument("--oracle", choices=ORACLE_MODES[1:], default=None)
    run_options(p)
    p.set_defaults(handler=cmd_oracle_check)

    p = sub.add_parser("dispersive", help="effective versus exact Stark shifts along a zeta ladder")
    p.add_argument("scenario", help="preset name or .ini path")
    p.add_argument("--out", type=Path, default=None, help="directory for dispersive_error.csv")
    p.set_defaults(handler=cmd_dispersive)

    p = sub.add_parser("plotdata", help="gnuplot data and a plot script from a scenario bundle")
    p.add_argument("bundle", type=Path, help="scenario output directory")
    p.set_defaults(handler=cmd_plotdata)
    return ap


def main(argv: Optional[List[str]] = None) -> int:
    """Parse arguments, dispatch, and map failures to exit codes."""
    args = build_parser().parse_args(argv)
    if args.verbose:
        logging.getLogger().setLevel(logging.DEBUG)
    try:
        return args.handler(args)
    except ConfigError as e:
        print(f"error: {e}")
        return EXIT_CONFIG
    except (SpectrumError, PhysicsWarning) as e:
        print(f"error: {e}")
        return EXIT_FAILED_CHECK
    except FileNotFoundError as e:
        print(f"error: {e}")
        return EXIT_CONFIG

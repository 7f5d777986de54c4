"""CLI entry point for wmbo."""

import argparse
import logging
import sys
from pathlib import Path
from typing import List, Optional

from wmbo.cli.handlers import EXIT_USAGE, CommandHandlers
from wmbo.core.config import COMMANDS, PRESETS, ConfigManager

# Flags that are not part of RunConfig.
CLI_ONLY = ("command", "config", "preset", "log_level", "workers")


def parse_args(argv: Optional[List[str]] = None) -> argparse.Namespace:
    """Parse command line arguments."""
    parser = argparse.ArgumentParser(
        description="Thresholding for Willmore-type flows: evolve regions, analyse the kernel and run validation studies."
    )
    parser.add_argument("command", choices=COMMANDS, help="What to run.")
    parser.add_argument("--config", type=Path, help="Flat key = value config file or an emitted manifest.json.")
    parser.add_argument("--preset", choices=sorted(PRESETS), help="Named parameter set (applied before --config).")
    parser.add_argument("--L", type=float, help="Side length of the periodic square (default: 1).")
    parser.add_argument("--n", type=int, help="Cells per axis, a power of two (default: 256).")
    parser.add_argument("--shape", type=str, help="Initial region, e.g. circle:0.15, cassini:0.6825,0.678, rose, band:y,0.25.")
    parser.add_argument("--r0", type=float, help="Initial circle radius for converge-circle.")
    parser.add_argument("--h", type=str, help="Time step, or a comma-separated list for sweeps.")
    parser.add_argument("--lambda", type=float, help="Coefficient of the length term (default: 0).")
    parser.add_argument("--a", type=float, help="Scale of the three-scale threshold function (default: (11/18)^(1/4)).")
    parser.add_argument("--scheme", choices=("three_scale", "single_scale"), help="Threshold function.")
    parser.add_argument("--steps", type=int, help="Number of thresholding steps for evolve.")
    parser.add_argument("--snapshot-every", type=int, help="Keep every k-th state (0 keeps the final one only).")
    parser.add_argument("--t-final", type=float, help="Final time of converge-circle.")
    parser.add_argument("--t", type=str, help="Comma-separated times for expansion and band-check.")
    parser.add_argument("--dim", type=int, help="Space dimension of the kernel table (default: 1).")
    parser.add_argument("--rmax", type=float, help="Largest radius of the kernel table.")
    parser.add_argument("--step", type=float, help="Radius spacing of the kernel table.")
    parser.add_argument("--zero-count", type=int, help="Number of kernel zero pairs to locate.")
    parser.add_argument("--n-max", type=int, help="Even truncation index of the tabulated series.")
    parser.add_argument("--jobs", type=int, help="Threads for sweeps (default: available parallelism).")
    parser.add_argument("--emit-svg", action="store_true", default=None, help="Also write SVG plots.")
    parser.add_argument("-o", "--output-dir", type=str, help="Output directory (default: $WMBO_OUT or ./output).")
    parser.add_argument("--workers", type=int, help="FFT worker threads.")
    parser.add_argument(
        "--log-level",
        default="INFO",
        choices=("DEBUG", "INFO", "WARNING", "ERROR"),
        help="Logging level (default: INFO).",
    )
    return parser.parse_args(argv)


def main(argv: Optional[List[str]] = None) -> int:
    """Main entry point."""
    args = parse_args(argv)
    logging.basicConfig(level=args.log_level, format="%(asctime)s %(levelname)s %(name)s: %(message)s")

    overrides = {key: value for key, value in vars(args).items() if key not in CLI_ONLY}
    manager = ConfigManager(args.config)
    try:
        config = manager.resolve(args.command, args.preset, overrides)
        config.grid()
    except ValueError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE

    result = CommandHandlers(config, manager, args.workers).run()
    for path in result["outputs"]:
        print(f"Wrote {Path(path).suffix.lstrip('.')} output to {path}")
    if not result["success"]:
        print(f"{args.command} failed: {result.get('error', 'validation gate not met')}", file=sys.stderr)
    return result["exit_code"]


if __name__ == "__main__":
    sys.exit(main())

"""Command-line entry point ``wqed``."""
from __future__ import annotations

import argparse
import os
import sys
import tempfile

from ..errors import ConvergenceFailure, InvalidArgument
from .commands import COMMANDS, run_command
from .config import ConfigError, parse_config

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_CONVERGENCE = 3
EXIT_IO = 4


def _common_flags() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--sigma", help="pulse width(s) sigma/Gamma, comma separated")
    p.add_argument("--gamma-ratio", dest="gamma_ratio", help="loss ratio(s) gamma/Gamma, comma separated")
    p.add_argument("--purcell", help="Purcell factor(s) Gamma/gamma, comma separated")
    p.add_argument("--alpha", type=float, help="QND rotation amplitude")
    p.add_argument("--eta", type=float, help="detector efficiency")
    p.add_argument("--stages", type=int, help="number of sorter stages")
    p.add_argument("--grid-points", dest="grid_points", type=int, help="frequency-grid nodes (odd)")
    p.add_argument("--grid-halfwidth", dest="grid_halfwidth", type=float, help="frequency-grid half-width")
    p.add_argument("--out", help="output path (default: standard output)")
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--config", help="key = value configuration file")
    p.add_argument("--preset", help="platform preset: flux-qubit or diamond")
    p.add_argument("--allow-unconverged", dest="allow_unconverged", action="store_true", default=None,
                   help="write rows that failed the convergence check")
    return p


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="wqed", description="Waveguide few-photon device simulator")
    sub = parser.add_subparsers(dest="command", required=True, metavar="subcommand")
    common = _common_flags()
    for name in COMMANDS:
        sp = sub.add_parser(name, parents=[common])
        if name == "oracle-validate":
            sp.add_argument("--quick", action="store_true", default=None, help="coarse lattice, looser tolerance")
            sp.add_argument("--mutate-kernel", dest="mutate_kernel", type=float, help=argparse.SUPPRESS)
    return parser


_CONFIG_FLAGS = ("sigma", "gamma_ratio", "purcell", "alpha", "eta", "stages", "grid_points",
                 "grid_halfwidth", "preset", "allow_unconverged", "quick", "mutate_kernel")


def _write(text: str, path) -> None:
    if path is None or path == "-":
        sys.stdout.write(text)
        return
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".wqed-", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    overrides = {k: getattr(args, k, None) for k in _CONFIG_FLAGS}
    try:
        cfg = parse_config(args.config, overrides)
        table = run_command(args.command, cfg)
        if args.command != "oracle-validate":
            table.check_converged(cfg.allow_unconverged)
        text = table.render(args.format)
    except OSError as exc:
        print(f"wqed: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except ConvergenceFailure as exc:
        print(f"wqed: {exc}", file=sys.stderr)
        return EXIT_CONVERGENCE
    except (ConfigError, InvalidArgument) as exc:
        print(f"wqed: {exc}", file=sys.stderr)
        return EXIT_INVALID
    try:
        _write(text, args.out)
    except OSError as exc:
        print(f"wqed: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    if args.command == "oracle-validate" and not all(int(v) for v in table.column("passed")):
        print("wqed: closed form disagrees with the time-domain oracle", file=sys.stderr)
        return EXIT_CONVERGENCE
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())

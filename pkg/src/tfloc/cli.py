"""Config-driven experiment runner.

Subcommands: spectrum | accspec | dilate | recover | oracle-check.  A single
TOML or JSON config describes the window, grid, domain, dilation radii,
deltas, and output directory; every command writes deterministic CSV/JSON
(and graymap) files into the output directory.

Exit codes: 0 success, 2 configuration/geometry error, 3 eigensolver
failure, 4 oracle tolerance breach.

Heavy imports happen inside main() so --threads can pin the BLAS thread
count through the environment before numpy loads.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

_THREAD_VARS = (
    "OMP_NUM_THREADS",
    "OPENBLAS_NUM_THREADS",
    "MKL_NUM_THREADS",
    "NUMEXPR_NUM_THREADS",
)


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tfloc",
        description="Time-frequency localization operators and accumulated spectrograms",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, doc in [
        ("spectrum", "eigenvalue profile, trace identities, counts"),
        ("accspec", "accumulated spectrogram, mollified indicator, error report"),
        ("dilate", "dilation sweep table"),
        ("recover", "phaseless domain recovery from the accumulated spectrogram"),
        ("oracle-check", "compare the Gaussian/disk pipeline to the closed form"),
    ]:
        p = sub.add_parser(name, help=doc)
        p.add_argument("--config", required=True, help="TOML or JSON experiment config")
        p.add_argument("--out", default=None, help="output directory (overrides config)")
        p.add_argument("--threads", type=int, default=None, help="BLAS/OpenMP thread cap")
        p.add_argument("--cap", type=int, default=None, help="matrix dimension cap")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    if args.threads is not None and args.threads > 0:
        for var in _THREAD_VARS:
            os.environ.setdefault(var, str(args.threads))

    from . import _commands
    from .errors import ConfigError, OracleMismatchError, SolverError, TflocError

    try:
        return _commands.dispatch(args)
    except ConfigError as exc:
        print(f"tfloc: config error: {exc}", file=sys.stderr)
        return 2
    except SolverError as exc:
        print(f"tfloc: solver failure: {exc}", file=sys.stderr)
        return 3
    except OracleMismatchError as exc:
        print(f"tfloc: oracle mismatch: {exc}", file=sys.stderr)
        return 4
    except TflocError as exc:
        print(f"tfloc: error: {exc}", file=sys.stderr)
        return 2
    except FileNotFoundError as exc:
        print(f"tfloc: {exc}", file=sys.stderr)
        return 2
    except json.JSONDecodeError as exc:
        print(f"tfloc: config parse error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())

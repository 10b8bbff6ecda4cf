"""Command line entry point: ``run``, ``reference`` and ``metrics`` subcommands."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .config import PRESETS, describe_keys, parse_config, parse_text, preset_values
from .diagnostics import ReferencePosterior, build_reference, mode_occupancy, w2_series, write_metrics
from .errors import ConfigError, DivergenceError, GridTooNarrowError, SchedulingError
from .model import MixtureModel
from .runner import read_trace, run

EXIT_OK, EXIT_CONFIG, EXIT_DIVERGENCE, EXIT_IO = 0, 2, 3, 4

# model keys alone are enough for the reference subcommand
_REFERENCE_BASE = {"sampler": "sgld", "seed": 0}


def _parser() -> argparse.ArgumentParser:
    epilog = "config keys (key = value, one per line; VRRESGLD_<key> env vars override):\n" + describe_keys()
    p = argparse.ArgumentParser(
        prog="vrresgld",
        description="Replica-exchange SGLD samplers on a 1-D Gaussian-mixture posterior.",
        epilog=epilog,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run a sampler", epilog=epilog,
                       formatter_class=argparse.RawDescriptionHelpFormatter)
    r.add_argument("--config", type=Path, help="config file; optional when --preset is given")
    r.add_argument("--seed", type=int, help="override the master seed")
    r.add_argument("--out-dir", type=Path, default=Path("out"), help="output directory (default: out)")
    r.add_argument("--preset", help="start from a named preset: " + ", ".join(sorted(PRESETS)))

    ref = sub.add_parser("reference", help="write the quadrature reference posterior as CSV")
    ref.add_argument("--config", type=Path, required=True)
    ref.add_argument("--grid-lo", type=float, default=-30.0)
    ref.add_argument("--grid-hi", type=float, default=50.0)
    ref.add_argument("--grid-n", type=int, default=4000)
    ref.add_argument("--out", type=Path, default=Path("reference.csv"))

    m = sub.add_parser("metrics", help="W2 and mode-occupancy series from a trace")
    m.add_argument("--trace", type=Path, required=True)
    m.add_argument("--reference", type=Path, required=True)
    m.add_argument("--every", type=int, default=5000, help="evaluation spacing in steps")
    m.add_argument("--burn-in", type=float, default=0.2, help="fraction dropped at each evaluation")
    m.add_argument("--thinning", type=int, default=1)
    m.add_argument("--centers", default="-5,25", help="comma-separated mode centres")
    m.add_argument("--radius", type=float, default=3.0)
    m.add_argument("--out", type=Path, help="CSV path (default: stdout)")
    return p


def _cmd_run(args) -> int:
    if args.config is None and args.preset is None:
        raise ConfigError("run needs --config, --preset or both")
    base = {}
    if args.preset:
        base = preset_values(args.preset)
        base.setdefault("seed", 0)
    if args.config is not None:
        cfg = parse_config(args.config, base=base)
    else:
        cfg = parse_text("", base=base)
    if args.seed is not None:
        cfg = cfg.replace(seed=args.seed)
    result = run(cfg, out_dir=args.out_dir)
    summary = {k: v for k, v in result.summary.items() if k != "sample_steps"}
    print(json.dumps(summary, sort_keys=True))
    return EXIT_OK


def _cmd_reference(args) -> int:
    cfg = parse_config(args.config, base=_REFERENCE_BASE)
    model = MixtureModel.from_spec(cfg.model_spec)
    ref = build_reference(model, args.grid_lo, args.grid_hi, args.grid_n)
    ref.to_csv(args.out)
    print(f"wrote {args.out} (mean {ref.mean():.6g})")
    return EXIT_OK


def _cmd_metrics(args) -> int:
    if args.every < 1 or args.thinning < 1 or not 0 <= args.burn_in < 1:
        raise ConfigError("need every >= 1, thinning >= 1 and 0 <= burn-in < 1")
    try:
        centers = [float(c) for c in args.centers.split(",")]
    except ValueError:
        raise ConfigError(f"bad --centers {args.centers!r}") from None
    chain = read_trace(args.trace)["theta1"]
    ref = ReferencePosterior.from_csv(args.reference)
    rows = [("w2", s, v) for s, v in w2_series(chain, ref, args.every, args.burn_in, args.thinning)]
    for s in range(args.every, chain.size + 1, args.every):
        start = int(np.floor(args.burn_in * s))
        kept = chain[start:s][args.thinning - 1::args.thinning]
        occ = mode_occupancy(kept, centers, args.radius)
        rows.extend((f"occupancy_{c:g}", s, o) for c, o in zip(centers, occ))
    rows.sort(key=lambda r: (r[1], r[0]))
    if args.out is None:
        write_metrics(sys.stdout, rows)
    else:
        write_metrics(args.out, rows)
    return EXIT_OK


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    handler = {"run": _cmd_run, "reference": _cmd_reference, "metrics": _cmd_metrics}[args.command]
    try:
        return handler(args)
    except (ConfigError, SchedulingError, GridTooNarrowError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DivergenceError as exc:
        print(f"divergence: {exc}", file=sys.stderr)
        return EXIT_DIVERGENCE
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())

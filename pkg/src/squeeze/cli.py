"""Command-line entry point.

Exit codes: 0 success, 1 configuration error, 2 runtime error (including a
hole coordinate given to ``map --direction e2c``).
"""
from __future__ import annotations

import argparse
import csv
import math
import statistics
import sys
from pathlib import Path

import numpy as np

from . import io
from .engine import Engine, RuleSet, SimConfig, run
from .errors import ConfigError, HoleCoordinate, LevelOverflow, SqueezeError
from .maps import lambda_block, lambda_map, nu_block, nu_map
from .metrics import memory_table
from .mma import FRAGMENT, nu_map_mma
from .nbb import builtin_names, geometry, resolve_spec
from .oracle import build_bijection, build_expanded_mask, max_oracle_level, verify_maps

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME = 0, 1, 2

BENCH_HEADER = ["fractal", "engine", "level", "rho", "reps", "mean_ns", "stderr_pct"]
MRF_HEADER = ["fractal", "level", "rho", "expanded_bytes", "compact_bytes", "mrf"]


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def _coord(text):
    try:
        x, y = (int(v) for v in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected 'x,y', got {text!r}") from None
    return x, y


def _int_list(text):
    try:
        return [int(v) for v in text.split(",") if v]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _levels(text):
    """``16``, ``4..6``, ``4-6`` or ``4,5,6``."""
    try:
        for sep in ("..", "-"):
            if sep in text:
                lo, hi = (int(v) for v in text.split(sep))
                return list(range(lo, hi + 1))
        return _int_list(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad level range {text!r}") from None


def _rules(text):
    try:
        return RuleSet.parse(text)
    except ConfigError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _fractal_help():
    return f"built-in name ({', '.join(builtin_names())}) or path to a fractal config file"


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="squeeze", description="Compact processing of NBB fractals.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    g = sub.add_parser("generate", help="render a fractal as a PGM image")
    g.add_argument("--fractal", required=True, help=_fractal_help())
    g.add_argument("--level", type=int, required=True)
    g.add_argument("--form", choices=["expanded", "compact"], default="expanded")
    g.add_argument("--out", required=True, type=Path)

    m = sub.add_parser("map", help="map one coordinate between compact and expanded space")
    m.add_argument("--fractal", required=True, help=_fractal_help())
    m.add_argument("--level", type=int, required=True)
    m.add_argument("--direction", choices=["c2e", "e2c"], required=True)
    m.add_argument("--coord", type=_coord, required=True, help="x,y")
    m.add_argument("--block", type=int, default=1, help="block side rho; coordinates are then block coordinates")

    s = sub.add_parser("simulate", help="run the fractal Game of Life")
    s.add_argument("--fractal", default="sierpinski-triangle", help=_fractal_help())
    s.add_argument("--level", type=int, required=True)
    s.add_argument("--engine", choices=[e.value for e in Engine], default="squeeze")
    s.add_argument("--block", type=int, default=1)
    s.add_argument("--steps", type=int, default=100)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--density", type=float, default=0.3)
    s.add_argument("--rules", type=_rules, default=RuleSet(), help="birth/survive counts (default: 3/23)")
    s.add_argument("--mma", action="store_true", help="evaluate nu through the matrix-multiply encoding")
    s.add_argument("--snapshot-every", type=int, default=0,
                   help="write a snapshot every N steps (0: initial and final only)")
    s.add_argument("--out-dir", type=Path, default=Path("."))

    v = sub.add_parser("verify", help="check the maps against the brute-force oracle")
    v.add_argument("--fractal", required=True, help=_fractal_help())
    v.add_argument("--max-level", type=int, required=True)

    b = sub.add_parser("bench", help="time the engines")
    b.add_argument("--fractals", default="sierpinski-triangle", help="comma-separated")
    b.add_argument("--levels", type=_levels, default=[4, 5, 6])
    b.add_argument("--engines", default="bb,squeeze", help="comma-separated subset of bb,lambda,squeeze")
    b.add_argument("--block", type=int, default=1)
    b.add_argument("--reps", type=int, default=3)
    b.add_argument("--steps", type=int, default=10)
    b.add_argument("--seed", type=int, default=0)
    b.add_argument("--density", type=float, default=0.3)
    b.add_argument("--out", type=Path, help="CSV path (default: stdout)")

    r = sub.add_parser("mrf", help="memory-reduction-factor table")
    r.add_argument("--fractal", default="sierpinski-triangle", help=_fractal_help())
    r.add_argument("--levels", type=_levels, default=[16])
    r.add_argument("--blocks", type=_int_list, default=[1])
    r.add_argument("--bytes-per-cell", type=int, default=4)
    r.add_argument("--format", choices=["text", "csv"], default="text")
    r.add_argument("--out", type=Path, help="write to a file instead of stdout")
    return p


def cmd_generate(args):
    spec = resolve_spec(args.fractal)
    g = geometry(spec, args.level)
    if args.form == "expanded":
        mask = build_expanded_mask(spec, args.level)
        image = np.where(mask, 0, 255)
    else:
        image = np.zeros((g.compact_h, g.compact_w))
    try:
        io.write_pgm(image, args.out)
    except OSError as exc:
        raise RuntimeError(f"cannot write {args.out}: {exc.strerror}") from None
    print(f"wrote {args.out} ({image.shape[1]}x{image.shape[0]})")
    return EXIT_OK


def cmd_map(args):
    spec = resolve_spec(args.fractal)
    c2e = args.direction == "c2e"
    try:
        if args.block == 1:
            out = (lambda_map if c2e else nu_map)(spec, args.level, args.coord)
        else:
            out = (lambda_block if c2e else nu_block)(spec, args.level, args.block, args.coord)
    except HoleCoordinate:
        print("HOLE")
        return EXIT_RUNTIME
    print(f"{out.x},{out.y}")
    return EXIT_OK


def cmd_simulate(args):
    spec = resolve_spec(args.fractal)
    if args.snapshot_every < 0:
        raise ConfigError("--snapshot-every must be non-negative")
    config = SimConfig(spec, args.level, Engine(args.engine), rho=args.block, rules=args.rules,
                       seed=args.seed, density=args.density, steps=args.steps, use_mma=args.mma)
    out_dir = args.out_dir
    out_dir.mkdir(parents=True, exist_ok=True)
    every = args.snapshot_every

    def snapshot(i, grid):
        if i == 0 or i == config.steps or (every and i % every == 0):
            io.write_snapshot(grid, out_dir / f"snapshot_{i:06d}.sqz")

    result = run(config, on_step=snapshot)
    io.write_trace(out_dir / "trace.csv", result.alive, result.timings_ns)
    c = result.counters
    print(f"{spec.name} r={args.level} engine={config.engine.value} rho={args.block} rules={config.rules}: "
          f"{config.steps} steps, final alive {result.alive[-1]}, "
          f"visited {c.cells_visited} cells, {c.lambda_calls} lambda / {c.nu_calls} nu evaluations")
    return EXIT_OK


def mma_mismatches(spec, r) -> int:
    if r > FRAGMENT:
        return 0
    bij = build_bijection(spec, r)
    expanded = bij.compact_to_expanded.reshape(-1, 2)
    compact = bij.expanded_to_compact[expanded[:, 1], expanded[:, 0]]
    return int(np.any(nu_map_mma(spec, r, expanded) != compact, axis=1).sum())


def cmd_verify(args):
    spec = resolve_spec(args.fractal)
    limit = max_oracle_level(spec)
    if args.max_level > limit:
        raise LevelOverflow(
            f"{spec.name}: oracle supports levels up to {limit}, requested {args.max_level}"
        )
    failed = 0
    for r in range(args.max_level + 1):
        report = verify_maps(spec, r)
        mma_bad = mma_mismatches(spec, r)
        failed += report.mismatches + mma_bad
        print(f"{report}; mma mismatches {mma_bad}")
    print("PASS" if failed == 0 else f"FAIL ({failed} mismatches)")
    return EXIT_OK if failed == 0 else EXIT_RUNTIME


def cmd_bench(args):
    engines = [Engine(e.strip()) for e in args.engines.split(",") if e.strip()]
    if args.reps < 1:
        raise ConfigError("--reps must be >= 1")
    rows = []
    for name in (f.strip() for f in args.fractals.split(",") if f.strip()):
        spec = resolve_spec(name)
        for engine in engines:
            for level in args.levels:
                totals, traces = [], []
                for _ in range(args.reps):
                    config = SimConfig(spec, level, engine, rho=args.block, seed=args.seed,
                                       density=args.density, steps=args.steps)
                    result = run(config)
                    totals.append(sum(result.timings_ns))
                    traces.append(result.alive)
                mean = statistics.fmean(totals)
                sem = statistics.stdev(totals) / math.sqrt(len(totals)) if len(totals) > 1 else 0.0
                rows.append([spec.name, engine.value, level, args.block, args.reps,
                             round(mean), round(100 * sem / mean, 3) if mean else 0.0])
                per_step = result.counters.cells_visited // max(result.counters.steps, 1)
                print(f"# {spec.name} {engine.value} r={level}: {per_step} cells visited per step, "
                      f"alive trace stable across reps: {all(t == traces[0] for t in traces)}",
                      file=sys.stderr)
    fh = open(args.out, "w", newline="") if args.out else sys.stdout
    try:
        out = csv.writer(fh)
        out.writerow(BENCH_HEADER)
        out.writerows(rows)
    finally:
        if args.out:
            fh.close()
    return EXIT_OK


def cmd_mrf(args):
    spec = resolve_spec(args.fractal)
    rows = []
    for level in args.levels:
        rows.extend(memory_table(spec, level, args.blocks, args.bytes_per_cell))
    fh = open(args.out, "w", newline="") if args.out else sys.stdout
    try:
        if args.format == "csv":
            out = csv.DictWriter(fh, fieldnames=MRF_HEADER)
            out.writeheader()
            for row in rows:
                out.writerow({**row, "mrf": f"{row['mrf']:.4f}"})
        else:
            fh.write(f"{'level':>5} {'rho':>5} {'expanded GiB':>14} {'compact GiB':>13} {'MRF':>10}\n")
            for row in rows:
                fh.write(f"{row['level']:>5} {row['rho']:>5} {row['expanded_bytes'] / 2**30:>14.2f} "
                         f"{row['compact_bytes'] / 2**30:>13.3f} {row['mrf']:>9.1f}x\n")
    finally:
        if args.out:
            fh.close()
    return EXIT_OK


COMMANDS = {
    "generate": cmd_generate,
    "map": cmd_map,
    "simulate": cmd_simulate,
    "verify": cmd_verify,
    "bench": cmd_bench,
    "mrf": cmd_mrf,
}


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:
        return exc.code
    try:
        return COMMANDS[args.command](args)
    except (ConfigError, LevelOverflow, KeyError, ValueError) as exc:
        print(f"squeeze {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (SqueezeError, RuntimeError, OSError) as exc:
        print(f"squeeze {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())

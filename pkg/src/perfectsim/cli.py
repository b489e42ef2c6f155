"""Command-line front end.

Every command is a pure function of (config, seed) up to wall-time fields,
and seeds are mandatory: exact-sampling claims are only auditable from
reproducible runs.  Exit codes: 0 ok, 1 validation failure, 2 config error,
3 runtime cap exceeded.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from pathlib import Path

import numpy as np

from .engine import Sampler, diagnostics_summary
from .errors import DepthCapError, PerfectSimError
from .testbed import AtomChain, CounterexampleChain, CounterexampleParams, minimal_dominator_drift
from .validation import run_validation, rows_to_text
from .workload import DominatingPath, QueueParams, path_rows

RUNS_SCHEMA = "perfectsim.runs.v1"
PATH_SCHEMA = "perfectsim.path.v1"

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_CONFIG = 2
EXIT_CAP = 3


def _load_chain_config(path: str | None) -> dict:
    if path is None:
        return {"type": "atom"}
    with open(path) as f:
        return json.load(f)


def _build_chain(config: dict):
    kind = config.get("type", "atom")
    if kind == "atom":
        return AtomChain(
            alpha=config.get("alpha", 0.2),
            b=config.get("b", 2.0),
            c=config.get("c", 6.25),
        )
    if kind == "counterexample":
        return CounterexampleChain(CounterexampleParams(alpha=config.get("alpha", 0.5)))
    raise PerfectSimError(f"cannot build a sampler for chain type {kind!r}")


def cmd_sample(args) -> int:
    if args.n < 1:
        print("error: --n must be >= 1", file=sys.stderr)
        return EXIT_CONFIG
    try:
        config = _load_chain_config(args.chain)
        chain = _build_chain(config)
        sampler = Sampler(chain, depth_cap=args.depth_cap)
    except (PerfectSimError, OSError, json.JSONDecodeError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        runs = [sampler.run(args.seed + i) for i in range(args.n)]
    except DepthCapError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_CAP
    out = Path(args.out) if args.out else None
    lines = [json.dumps({"schema": RUNS_SCHEMA, "chain": config, "n": args.n, "seed": args.seed},
                        sort_keys=True)]
    lines += [r.to_jsonl(timings=args.timings) for r in runs]
    text = "\n".join(lines) + "\n"
    if out:
        out.write_text(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_validate(args) -> int:
    try:
        config = _load_chain_config(args.chain)
        rows = run_validation(config, seed=args.seed, scale=args.scale)
    except (PerfectSimError, ValueError, OSError, json.JSONDecodeError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    print(rows_to_text(rows))
    failures = [r for r in rows if not r.passed]
    if failures:
        print(f"{len(failures)} criterion(s) failed: " + ", ".join(r.name for r in failures))
        return EXIT_VALIDATION
    return EXIT_OK


def cmd_diagnose(args) -> int:
    try:
        config = _load_chain_config(args.chain)
        chain = _build_chain(config)
        sampler = Sampler(chain, depth_cap=args.depth_cap)
        runs = [sampler.run(args.seed + i) for i in range(args.n)]
    except DepthCapError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_CAP
    except (PerfectSimError, OSError, json.JSONDecodeError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    print(diagnostics_summary(runs, beta=sampler.minor.beta).to_text())
    return EXIT_OK


def cmd_counterexample(args) -> int:
    if not (0.0 < args.alpha < 1.0):
        print("error: --alpha must lie in (0,1)", file=sys.stderr)
        return EXIT_CONFIG
    rng = np.random.default_rng(args.seed)
    drift = minimal_dominator_drift(args.alpha, args.n, rng)
    analytic = 1.0 + math.log(args.alpha)
    boundary = abs(args.alpha - math.exp(-1.0)) < 1e-9
    print(f"alpha = {args.alpha}")
    print(f"empirical drift of the minimal dominating log-walk: {drift:.6f}")
    print(f"analytic drift 1 + log(alpha):                      {analytic:.6f}")
    if boundary:
        print("verdict: BOUNDARY (alpha = 1/e: the minimal dominating walk is null)")
    elif analytic > 0:
        print("verdict: TRANSIENT (no positive-recurrent dominating process on this scale)")
    else:
        print("verdict: RECURRENT (dominating walk is positive-recurrent)")
    return EXIT_OK


def cmd_queue(args) -> int:
    if not (0.0 < args.alpha < math.exp(-1.0)):
        print("error: --alpha must lie in (0, 1/e) for a recurrent walk", file=sys.stderr)
        return EXIT_CONFIG
    if args.steps < 1:
        print("error: --steps must be >= 1", file=sys.stderr)
        return EXIT_CONFIG
    params = QueueParams.from_alpha(args.alpha, args.reflection_level)
    path = DominatingPath(args.seed, params, depth_cap=args.depth_cap)
    try:
        rows = path_rows(path, -args.steps)
    except DepthCapError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_CAP
    target = open(args.out, "w", newline="") if args.out else sys.stdout
    try:
        target.write(f"# schema: {PATH_SCHEMA}\n")
        writer = csv.writer(target)
        writer.writerow(["time", "u", "y"])
        for t, u, y in rows:
            writer.writerow([t, repr(u), repr(y)])
    finally:
        if args.out:
            target.close()
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="perfectsim",
        description="Exact sampling from stationary laws by dominated coupling-from-the-past",
    )
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("sample", help="draw perfect samples, one JSON line per run")
    p.add_argument("--chain", help="chain config JSON file (default: built-in atom chain)")
    p.add_argument("--n", type=int, required=True, help="number of samples")
    p.add_argument("--seed", type=int, required=True, help="base seed (mandatory)")
    p.add_argument("--out", help="output path (default: stdout)")
    p.add_argument("--format", choices=("jsonl",), default="jsonl")
    p.add_argument("--depth-cap", type=int, default=1_000_000)
    p.add_argument("--timings", action="store_true", help="include wall_ms (breaks byte-reproducibility)")
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("validate", help="run the statistical validation suite")
    p.add_argument("--chain", help="chain config JSON file")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--scale", type=float, default=1.0, help="size multiplier for quick runs")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("diagnose", help="run samples and print run diagnostics")
    p.add_argument("--chain", help="chain config JSON file")
    p.add_argument("--n", type=int, default=1000)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--depth-cap", type=int, default=1_000_000)
    p.set_defaults(func=cmd_diagnose)

    p = sub.add_parser("counterexample", help="minimal-dominator drift demonstration")
    p.add_argument("--alpha", type=float, default=0.5)
    p.add_argument("--n", type=int, default=100_000)
    p.add_argument("--seed", type=int, required=True)
    p.set_defaults(func=cmd_counterexample)

    p = sub.add_parser("queue", help="dump a backward stationary dominating path as CSV")
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--steps", type=int, default=50)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--reflection-level", type=float, default=1.0)
    p.add_argument("--out", help="output CSV path (default: stdout)")
    p.add_argument("--depth-cap", type=int, default=1_000_000)
    p.set_defaults(func=cmd_queue)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())

"""Command line: ``hypwave run|sweep|region|calibrate``.

Environment overrides
---------------------
HYPWAVE_OUTPUT_DIR
    replaces ``output_dir`` of every config.
HYPWAVE_THREADS
    BLAS thread count (recorded in output metadata).
"""

from __future__ import annotations

import argparse
import contextlib
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

ENV_OUTPUT = "HYPWAVE_OUTPUT_DIR"
ENV_THREADS = "HYPWAVE_THREADS"


def _thread_limit():
    value = os.environ.get(ENV_THREADS)
    if not value:
        return contextlib.nullcontext()
    from threadpoolctl import threadpool_limits

    return threadpool_limits(limits=int(value))


def _run_one(path: str, output_dir: str | None) -> tuple[str, bool, list[str], str]:
    from .config import ConfigError, load_config
    from .scenarios import run_scenario

    try:
        cfg = load_config(path)
    except (ConfigError, OSError) as exc:
        return path, False, [f"config error: {exc}"], "invalid"
    with _thread_limit():
        result = run_scenario(cfg, output_dir)
    return path, result.passed, [f"status: {result.status}", *result.summary_lines()], result.status


def cmd_run(args) -> int:
    out = os.environ.get(ENV_OUTPUT) or args.output_dir
    _, ok, lines, _ = _run_one(args.config, out)
    print("\n".join(lines))
    return 0 if ok else 1


def cmd_sweep(args) -> int:
    configs = sorted(Path(args.directory).glob("*.json"))
    if not configs:
        print(f"no *.json configs in {args.directory}", file=sys.stderr)
        return 1
    root = os.environ.get(ENV_OUTPUT) or args.output_dir
    jobs = [(str(p), str(Path(root) / p.stem) if root else None) for p in configs]
    if root is None:
        from .config import ConfigError, load_config
        resolved = []
        for path, _ in jobs:
            try:
                resolved.append((path, str(Path(load_config(path).output_dir) / Path(path).stem)))
            except (ConfigError, OSError):
                resolved.append((path, None))
        jobs = resolved
    workers = args.workers or min(len(jobs), os.cpu_count() or 1)
    all_ok = True
    if workers == 1:
        results = [_run_one(p, o) for p, o in jobs]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_run_one, *zip(*jobs)))
    for path, ok, lines, status in results:
        all_ok &= ok
        print(f"== {path}: {'pass' if ok else 'fail'} ({status})")
        for line in lines:
            print(f"   {line}")
    return 0 if all_ok else 1


def cmd_region(args) -> int:
    from fractions import Fraction

    from .. import strichartz as st

    path = st.write_region_csv(args.n, args.out, args.resolution)
    rows = st.read_region_csv(path)
    bad = sum(not st.is_admissible_energy(st.ExponentPair(x, y), args.n).boundary_case
              for region, _, x, y in rows if region != "classical")
    print(f"wrote {len(rows)} boundary points to {path}")
    print(f"energy boundary points satisfy equality: {'pass' if bad == 0 else 'fail'} "
          f"(violations {bad})")
    sob = Fraction(args.n - 2, 2 * args.n)
    print(f"Sobolev endpoint (1/p, 1/q) = (0, {sob})")
    return 0 if bad == 0 else 1


def cmd_calibrate(args) -> int:
    from ..transform import analytic_c_norm, calibrate_normalization, make_plan, save_plan

    with _thread_limit():
        plan = make_plan(args.n, args.r_max, args.n_r, args.lambda_max, args.n_lambda)
    recal = calibrate_normalization(plan) / plan.c_norm
    analytic = analytic_c_norm(args.n)
    print(f"n = {args.n}")
    print(f"c_norm = {plan.c_norm:.15e}")
    print(f"analytic c_norm = {analytic:.15e} (relative difference "
          f"{abs(plan.c_norm / analytic - 1):.3e})")
    print(f"roundtrip residual = {plan.roundtrip_residual:.3e}")
    print(f"recalibration factor = {recal:.15f}")
    print(f"plan checksum = {plan.checksum()}")
    if args.save:
        print(f"saved plan to {save_plan(plan, args.save)}")
    ok = plan.roundtrip_residual <= 1e-8 and abs(recal - 1) <= 1e-8
    return 0 if ok else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hypwave", description=__doc__.splitlines()[0],
                                     formatter_class=argparse.RawDescriptionHelpFormatter,
                                     epilog=__doc__.split("\n", 2)[2])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run one scenario from a JSON config")
    p.add_argument("config")
    p.add_argument("--output-dir", default=None, help="override the config's output_dir")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("sweep", help="run every *.json config in a directory")
    p.add_argument("directory")
    p.add_argument("--workers", type=int, default=0, help="worker processes (default: cpu count)")
    p.add_argument("--output-dir", default=None,
                   help="root for per-config output directories (default: each config's own)")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("region", help="export admissible-region boundary data")
    p.add_argument("--n", type=int, choices=(3, 4, 5), required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--resolution", type=int, default=64)
    p.set_defaults(func=cmd_region)

    p = sub.add_parser("calibrate", help="build a transform plan and report its normalization")
    p.add_argument("--n", type=int, choices=(3, 4, 5), required=True)
    p.add_argument("--r-max", type=float, default=30.0)
    p.add_argument("--n-r", type=int, default=1024)
    p.add_argument("--lambda-max", type=float, default=32.0)
    p.add_argument("--n-lambda", type=int, default=1024)
    p.add_argument("--save", default=None, help="write the plan snapshot here")
    p.set_defaults(func=cmd_calibrate)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())

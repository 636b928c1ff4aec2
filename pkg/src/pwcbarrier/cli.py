"""Command-line entry point: ``pwcbarrier <subcommand> --config FILE ...``.

Exit status is 0 whenever a result was produced (a certificate with
P_s = 0 included) and 1 on any pipeline error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from .barrier import PwcBarrier
from .certificate import evaluate_certificate, psafe, validate_monte_carlo
from .config import load_config
from .dynamics import linear_dynamics
from .errors import BarrierError
from .fileio import save_bounds
from .pipeline import build_partition, obtain_bounds, run, run_benchmarks

log = logging.getLogger("pwcbarrier")


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text if text.endswith("\n") else text + "\n", encoding="utf-8")
    else:
        print(text)


def _spec(args):
    return load_config(args.config).with_overrides(
        engine=getattr(args, "engine", None),
        horizon=getattr(args, "horizon", None),
        seed=getattr(args, "seed", None),
    )


def cmd_partition(args) -> int:
    spec = _spec(args)
    part = build_partition(spec)
    desc = part.descriptor()
    desc.update(n_cells=part.n_cells, epsilon_rounded=part.was_rounded, digest=part.digest())
    _emit(json.dumps(desc, indent=2), args.out)
    return 0


def cmd_bounds(args) -> int:
    spec = _spec(args)
    part = build_partition(spec)
    bounds, _ = obtain_bounds(spec, part, threads=args.threads)
    if args.out:
        save_bounds(bounds, args.out, partition=part)
        log.info("wrote %d x %d bounds to %s", bounds.n_regions, bounds.n_regions + 1, args.out)
    else:
        print(f"{bounds.n_regions} regions; bounds fingerprint {bounds.fingerprint()}")
    return 0


def cmd_synthesize(args) -> int:
    spec = _spec(args)
    report = run(spec, threads=args.threads, bounds_path=args.bounds, validate_samples=args.validate)
    if args.out:
        _emit(report.to_json(), args.out)
    print(report.to_json() if args.json else report.render_text())
    return 0


def cmd_check(args) -> int:
    spec = _spec(args)
    part = build_partition(spec)
    bounds, _ = obtain_bounds(spec, part, threads=args.threads, bounds_path=args.bounds)
    data = json.loads(Path(args.report).read_text(encoding="utf-8"))
    barrier = PwcBarrier(np.array(data["barrier"], dtype=float))
    eta, beta, _ = evaluate_certificate(barrier, bounds, part)
    N = spec.time_horizon if args.horizon else int(data.get("horizon", spec.time_horizon))
    out = {"eta": eta, "beta": beta, "p_safe": psafe(eta, beta, N), "horizon": N}
    if "eta" in data:
        out["sound"] = bool(eta <= data["eta"] + 1e-9 and beta <= data["beta"] + 1e-9)
    _emit(json.dumps(out, indent=2), args.out)
    return 0 if out.get("sound", True) else 1


def cmd_simulate(args) -> int:
    spec = _spec(args)
    if spec.system_flag != "linear":
        raise BarrierError("simulation requires linear dynamics")
    if args.certified is None and args.report is None:
        raise BarrierError("give --certified P or --report FILE")
    certified = args.certified
    if certified is None:
        certified = float(json.loads(Path(args.report).read_text(encoding="utf-8"))["p_safe"])
    part = build_partition(spec)
    rep = validate_monte_carlo(
        linear_dynamics(spec.A, spec.b, spec.sigma), part, spec.initial_region, spec.time_horizon,
        args.samples, spec.validation_seed if args.seed is None else args.seed, certified,
        unsafe=spec.unsafe_regions,
    )
    _emit(json.dumps(rep.to_dict(), indent=2), args.out)
    return 0


def cmd_bench(args) -> int:
    specs = [load_config(p).with_overrides(horizon=args.horizon, seed=args.seed) for p in args.config]
    table = run_benchmarks(specs, engines=args.engine or None, threads=args.threads)
    print(table.render_text())
    if args.out:
        _emit(json.dumps(table.to_dict(), indent=2), args.out)
    if args.csv:
        Path(args.csv).write_text(table.to_csv(), encoding="utf-8")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="pwcbarrier", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, engine=True):
        p.add_argument("--config", required=True, help="problem configuration (.yaml or .json)")
        p.add_argument("--out", help="write output to this path")
        p.add_argument("--threads", type=int, default=1)
        p.add_argument("--horizon", type=int, help="override time_horizon")
        p.add_argument("--seed", type=int, help="override GD and validation seeds")
        if engine:
            p.add_argument("--engine", choices=["dual", "cegis", "gd"])

    p = sub.add_parser("partition", help="grid the state space and mark regions")
    common(p, engine=False)
    p.set_defaults(func=cmd_partition)

    p = sub.add_parser("bounds", help="compute transition bounds and save them")
    common(p, engine=False)
    p.set_defaults(func=cmd_bounds)

    p = sub.add_parser("synthesize", help="run the full pipeline and report the certificate")
    common(p)
    p.add_argument("--bounds", help="load transition bounds from this file instead of computing")
    p.add_argument("--validate", type=int, metavar="SAMPLES", help="Monte Carlo samples (0 = off)")
    p.add_argument("--json", action="store_true", help="print the machine-readable report")
    p.set_defaults(func=cmd_synthesize)

    p = sub.add_parser("check", help="re-evaluate the barrier stored in a report")
    common(p, engine=False)
    p.add_argument("--report", required=True)
    p.add_argument("--bounds")
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("simulate", help="Monte Carlo check of a certified probability")
    common(p, engine=False)
    p.add_argument("--certified", type=float)
    p.add_argument("--report")
    p.add_argument("--samples", type=int, default=100_000)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("bench", help="benchmark table over configs and engines")
    p.add_argument("--config", nargs="*", default=[], help="one or more configs")
    p.add_argument("--engine", action="append", choices=["dual", "cegis", "gd"])
    p.add_argument("--out", help="JSON table and plot series")
    p.add_argument("--csv", help="CSV table")
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--horizon", type=int)
    p.add_argument("--seed", type=int)
    p.set_defaults(func=cmd_bench)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except (BarrierError, FileNotFoundError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())

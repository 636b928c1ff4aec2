"""End-to-end runs: partition, bounds, synthesis, checking and reporting."""

from __future__ import annotations

import json
import logging
import time
from dataclasses import dataclass, field, replace
from typing import Iterable, Sequence

import numpy as np

from .barrier import CertificateResult, Engine
from .certificate import evaluate_certificate, psafe, validate_monte_carlo
from .config import ProblemSpec
from .dynamics import LinearDynamics, PwaInclusionDynamics, lift_linear_to_inclusion, linear_dynamics
from .engines import synthesize
from .errors import BarrierError, DimensionMismatch, PhaseError, SchemaViolation
from .fileio import load_bounds, load_pwa_dynamics
from .geometry import Partition, generate_partition, mark_regions
from .transition_bounds import TransitionBounds, compute_transition_bounds

log = logging.getLogger(__name__)

REPORT_FORMAT = "pwcbarrier-report"
REPORT_VERSION = 1
SOUNDNESS_TOL = 1e-9


class _phase:
    def __init__(self, name: str, timing: dict):
        self.name, self.timing = name, timing

    def __enter__(self):
        self.t0 = time.perf_counter()
        return self

    def __exit__(self, exc_type, exc, tb):
        self.timing[self.name] = time.perf_counter() - self.t0
        if exc is not None and isinstance(exc, Exception) and not isinstance(exc, PhaseError):
            raise PhaseError(self.name, exc) from exc
        return False


def build_partition(spec: ProblemSpec) -> Partition:
    part = generate_partition(spec.state_space, spec.epsilon)
    return mark_regions(part, spec.initial_region, spec.unsafe_regions)


def build_dynamics(spec: ProblemSpec, partition: Partition) -> tuple[PwaInclusionDynamics, LinearDynamics | None]:
    if spec.system_flag == "linear":
        lin = linear_dynamics(spec.A, spec.b, spec.sigma)
        return lift_linear_to_inclusion(lin, partition), lin
    dyn = load_pwa_dynamics(spec.resolve(spec.dynamics_path), sigma=spec.sigma)
    if not dyn.matches(partition):
        raise DimensionMismatch(
            f"PWA file has {dyn.n_regions} regions that do not coincide with the "
            f"{partition.n_cells}-cell grid from state_space/epsilon"
        )
    return dyn, None


def obtain_bounds(spec: ProblemSpec, partition: Partition, threads: int = 1, bounds_path=None):
    """Load bounds from ``bounds_path``/the config, or compute them."""
    path = bounds_path or (spec.resolve(spec.probabilities_path) if spec.probabilities_path else None)
    if path is not None:
        bounds = load_bounds(path)
        if bounds.partition_hash and bounds.partition_hash != partition.digest():
            raise SchemaViolation("bounds file was computed for a different partition", "partition_hash")
        return bounds, "file"
    dyn, _ = build_dynamics(spec, partition)
    return compute_transition_bounds(dyn, partition, threads=threads), "computed"


def decision_flags(spec: ProblemSpec, partition: Partition, bounds_source: str, result: CertificateResult) -> dict:
    flags = {
        "epsilon_rounded": partition.was_rounded,
        "requested_half_width": list(partition.requested_epsilon),
        "actual_half_width": [w / 2 for w in partition.widths.tolist()],
        "cells_per_dim": list(partition.cells_per_dim),
        "cell_membership": "half-open, last cell per axis closed",
        "initial_marking": "closed intersection",
        "unsafe_marking": "open-interior intersection, partially covered cells wholly unsafe",
        "image_relaxation": "interval hull",
        "unsafe_column": "complement of safe mass",
        "barrier_cap": 1.0,
        "bounds_source": bounds_source,
        "reported_values": "exact re-evaluation of the returned barrier",
    }
    if result.engine is Engine.GD:
        flags["gd_step"] = "unit-norm subgradient, best iterate returned"
    return flags


@dataclass
class RunReport:
    data: dict
    timing: dict = field(default_factory=dict)

    def to_json(self, include_timing: bool = True) -> str:
        out = dict(self.data)
        if include_timing:
            out["timing"] = self.timing
        return json.dumps(out, indent=2, sort_keys=True)

    def render_text(self) -> str:
        d = self.data
        lines = [
            f"system       {d['system']}",
            f"engine       {d['engine']}  (horizon N = {d['horizon']})",
            f"regions      {d['n_regions']}  ({' x '.join(map(str, d['flags']['cells_per_dim']))} grid)",
            f"eta          {d['eta']:.6e}",
            f"beta         {d['beta']:.6e}",
            f"P_safe >=    {d['p_safe']:.6f}",
            f"check        {'sound' if d['certificate_check']['sound'] else 'UNSOUND'}",
        ]
        if d.get("validation"):
            v = d["validation"]
            lines.append(
                f"monte carlo  {v['samples']} runs, empirical safety {v['empirical_safety']:.4f}, "
                f"{'consistent' if v['consistent'] else 'INCONSISTENT'}"
            )
        lines.append("timing       " + ", ".join(f"{k} {v:.3f}s" for k, v in self.timing.items()))
        return "\n".join(lines)


def run(
    spec: ProblemSpec,
    threads: int = 1,
    bounds_path=None,
    validate_samples: int | None = None,
) -> RunReport:
    timing: dict[str, float] = {}
    with _phase("partition", timing):
        partition = build_partition(spec)
    with _phase("bounds", timing):
        bounds, source = obtain_bounds(spec, partition, threads, bounds_path)
    with _phase("synthesis", timing):
        result = synthesize(spec.engine, bounds, partition, spec.time_horizon, spec.engine_settings)
    with _phase("check", timing):
        eta, beta, _ = evaluate_certificate(result.barrier, bounds, partition)
        sound = eta <= result.eta + SOUNDNESS_TOL and beta <= result.beta + SOUNDNESS_TOL
        check = {"eta": eta, "beta": beta, "p_safe": psafe(eta, beta, spec.time_horizon), "sound": sound}
        if not sound:
            raise PhaseError("check", BarrierError(f"re-evaluation gave eta={eta}, beta={beta}"))
    samples = spec.validation_samples if validate_samples is None else validate_samples
    validation = None
    if samples:
        with _phase("validation", timing):
            if spec.system_flag != "linear":
                log.warning("Monte Carlo validation needs linear dynamics; skipped")
            else:
                lin = linear_dynamics(spec.A, spec.b, spec.sigma)
                validation = validate_monte_carlo(
                    lin, partition, spec.initial_region, spec.time_horizon, samples,
                    spec.validation_seed, result.p_safe, unsafe=spec.unsafe_regions,
                ).to_dict()

    data = {
        "format": REPORT_FORMAT,
        "version": REPORT_VERSION,
        "system": spec.name,
        "n_regions": partition.n_cells,
        **result.to_dict(),
        "initial_cells": sorted(partition.initial_cell_indices),
        "unsafe_cells": [int(i) for i in np.flatnonzero(partition.unsafe_mask)],
        "partition_hash": partition.digest(),
        "bounds_fingerprint": bounds.fingerprint(),
        "flags": decision_flags(spec, partition, source, result),
        "certificate_check": check,
        "validation": validation,
        "config": spec.to_dict(),
    }
    timing["engine_wall_time"] = result.wall_time
    return RunReport(data, timing)


@dataclass
class BenchmarkTable:
    rows: list[dict] = field(default_factory=list)

    COLUMNS = ("system", "|Q|", "engine", "tau_s", "eta", "beta", "P_s")

    def series(self) -> dict:
        """Time and P_s against |Q| per system and engine, for plotting."""
        out: dict = {}
        for row in self.rows:
            if row.get("error"):
                continue
            s = out.setdefault(row["system"], {}).setdefault(row["engine"], {"n_regions": [], "time": [], "p_safe": []})
            s["n_regions"].append(row["|Q|"])
            s["time"].append(row["tau_s"])
            s["p_safe"].append(row["P_s"])
        return out

    def to_dict(self) -> dict:
        return {"columns": list(self.COLUMNS), "rows": self.rows, "series": self.series()}

    def render_text(self) -> str:
        header = f"{'system':<24}{'|Q|':>6}  {'engine':<7}{'tau (s)':>10}{'eta':>12}{'beta':>12}{'P_s':>8}"
        lines = [header, "-" * len(header)]
        for r in self.rows:
            if r.get("error"):
                lines.append(f"{r['system']:<24}{str(r.get('|Q|') or '-'):>6}  {r['engine']:<7}  ERROR: {r['error']}")
            else:
                lines.append(
                    f"{r['system']:<24}{r['|Q|']:>6}  {r['engine']:<7}{r['tau_s']:>10.2f}"
                    f"{r['eta']:>12.2e}{r['beta']:>12.2e}{r['P_s']:>8.3f}"
                )
        return "\n".join(lines)

    def to_csv(self) -> str:
        cols = list(self.COLUMNS) + ["error"]
        lines = [",".join(cols)]
        for r in self.rows:
            lines.append(",".join("" if r.get(c) is None else str(r.get(c)) for c in cols))
        return "\n".join(lines) + "\n"


def run_benchmarks(
    specs: Sequence[ProblemSpec],
    engines: Iterable[Engine | str] | None = None,
    threads: int = 1,
) -> BenchmarkTable:
    """Run each spec under each engine; failures become error rows."""
    table = BenchmarkTable()
    engine_list = None if engines is None else [Engine.parse(e) if not isinstance(e, Engine) else e for e in engines]
    for spec in specs:
        for engine in engine_list or [spec.engine]:
            row = {"system": spec.name, "engine": engine.value, "|Q|": None, "error": None}
            try:
                report = run(replace(spec, engine=engine), threads=threads, validate_samples=0)
                d = report.data
                row.update({
                    "|Q|": d["n_regions"],
                    "tau_s": report.timing["bounds"] + report.timing["synthesis"],
                    "eta": d["eta"],
                    "beta": d["beta"],
                    "P_s": d["p_safe"],
                })
            except Exception as exc:  # recorded in-table, run continues
                row["error"] = f"{type(exc).__name__}: {exc}"
                log.warning("benchmark %s/%s failed: %s", spec.name, engine.value, exc)
            table.rows.append(row)
    return table

"""Acceptance criteria, one test per criterion.

Each test records a PASS/FAIL line that is printed in the terminal summary,
then asserts. Run with ``pytest tests/test_acceptance.py``.
"""

import json
import time
from pathlib import Path

import numpy as np
import pytest

from conftest import ACCEPTANCE_RESULTS, random_instance, single_region
from oracles import exact_kernel, kernel_at_means
from pwcbarrier import (
    AmbiguityRow,
    Engine,
    GaussianNoise,
    GdSettings,
    PwaInclusionDynamics,
    brute_force_oracle,
    compute_transition_bounds,
    evaluate_certificate,
    generate_partition,
    linear_dynamics,
    make_hyperrectangle,
    mark_regions,
    psafe,
    synthesize,
    synthesize_cegis,
    synthesize_dual,
    synthesize_gd,
    validate_monte_carlo,
    worst_case_expectation,
)
from pwcbarrier.config import load_config, parse_config
from pwcbarrier.fileio import load_bounds, load_pwa_dynamics, save_bounds, save_pwa_dynamics
from pwcbarrier.pipeline import build_dynamics, build_partition, obtain_bounds, run

CONFIGS = Path(__file__).resolve().parents[1] / "configs"
ENGINES = (Engine.DUAL, Engine.CEGIS, Engine.GD)
BENCHMARKS = {
    "contraction_map_2": "contraction_map_2.yaml",
    "contraction_map_2_q225": "contraction_map_2_q225.yaml",
    "contraction_map_2_obstacle": "contraction_map_2_obstacle.yaml",
    "pwa_1d": "pwa_1d.yaml",
}
# A system inside the pwa_1d inclusion (0.4 x .. 0.6 x), used for simulation.
PWA_1D_MEMBER = linear_dynamics([[0.5]], [0.0], [0.1])


def record(k, name, ok, detail):
    ACCEPTANCE_RESULTS.append((k, name, bool(ok), detail))
    assert ok, detail


class Benchmark:
    def __init__(self, spec):
        self.spec = spec
        self.partition = build_partition(spec)
        t0 = time.perf_counter()
        self.bounds, _ = obtain_bounds(spec, self.partition)
        self.bounds_time = time.perf_counter() - t0
        self.results = {}
        self.times = {}

    def result(self, engine):
        """Engine output with default settings, computed once per session."""
        if engine not in self.results:
            settings = {Engine.GD: GdSettings(), Engine.CEGIS: None, Engine.DUAL: None}[engine]
            t0 = time.perf_counter()
            self.results[engine] = synthesize(engine, self.bounds, self.partition, self.spec.time_horizon, settings)
            self.times[engine] = self.bounds_time + time.perf_counter() - t0
        return self.results[engine]

    def simulator(self):
        if self.spec.system_flag == "linear":
            return linear_dynamics(self.spec.A, self.spec.b, self.spec.sigma)
        return PWA_1D_MEMBER


@pytest.fixture(scope="session")
def benchmarks():
    return {name: Benchmark(load_config(CONFIGS / fname)) for name, fname in BENCHMARKS.items()}


def test_criterion_01_table_reproduction_q64(benchmarks):
    bm = benchmarks["contraction_map_2"]
    assert bm.partition.n_cells == 64 and bm.spec.time_horizon == 10
    floors = {Engine.DUAL: 0.98, Engine.CEGIS: 0.98, Engine.GD: 0.93}
    parts, ok = [], True
    for engine, floor in floors.items():
        res = bm.result(engine)
        good = res.p_safe >= floor and bm.times[engine] <= 60.0
        ok &= good
        parts.append(f"{engine.value} P_s={res.p_safe:.4f} (>= {floor}) in {bm.times[engine]:.1f}s")
    record(1, "Contraction Map 2 at |Q|=64", ok, "; ".join(parts))


def test_criterion_02_trend_q225(benchmarks):
    small, large = benchmarks["contraction_map_2"], benchmarks["contraction_map_2_q225"]
    assert large.partition.n_cells == 225
    parts, ok = [], True
    for engine in (Engine.DUAL, Engine.CEGIS):
        p64, p225 = small.result(engine).p_safe, large.result(engine).p_safe
        ok &= p225 >= p64 - 0.005
        parts.append(f"{engine.value} {p64:.5f} -> {p225:.5f} ({large.times[engine]:.1f}s)")
    record(2, "trend at |Q|=225", ok, "; ".join(parts))


def test_criterion_03_psafe_spot_check():
    value = psafe(1.7e-2, 1.8e-2, 10)
    record(3, "psafe spot check", abs(value - 0.803) <= 5e-4, f"psafe(0.017, 0.018, 10) = {value:.6f}")


def test_criterion_04_inner_max_exactness():
    rng = np.random.default_rng(4)
    worst = 0.0
    for _ in range(1000):
        m = int(rng.integers(1, 7))
        p = rng.dirichlet(np.full(m, 0.7))
        lo = p * rng.uniform(0, 1, m)
        hi = np.minimum(1.0, p + rng.uniform(0, 0.5, m))
        row = AmbiguityRow(lo, hi)
        c = rng.normal(size=m)
        worst = max(worst, abs(worst_case_expectation(c, row).value - brute_force_oracle(c, row)))
    record(4, "inner-max exactness", worst <= 1e-9, f"max |greedy - oracle| = {worst:.2e} over 1000 rows")


@pytest.fixture(scope="module")
def random_instances():
    rng = np.random.default_rng(5)
    out = []
    for _ in range(100):
        part, tb = random_instance(rng, int(rng.integers(1, 11)))
        out.append((part, tb, int(rng.integers(1, 25))))
    return out


def test_criterion_05_zero_duality_gap(random_instances):
    gaps = [
        abs(synthesize_dual(tb, part, N).objective - synthesize_cegis(tb, part, N).objective)
        for part, tb, N in random_instances
    ]
    record(5, "dual/CEGIS agreement", max(gaps) <= 1e-6, f"max gap {max(gaps):.2e} over {len(gaps)} instances")


def test_criterion_06_optimality_ordering(random_instances, benchmarks):
    worst = -np.inf
    gd_short = GdSettings(num_iterations=1000)
    for part, tb, N in random_instances:
        worst = max(worst, synthesize_dual(tb, part, N).objective - synthesize_gd(tb, part, N, gd_short).objective)
    part, tb = single_region([0.99, 0.0], [1.0, 0.01])
    worst = max(worst, synthesize_dual(tb, part, 10).objective - synthesize_gd(tb, part, 10).objective)
    for bm in benchmarks.values():
        worst = max(worst, bm.result(Engine.DUAL).objective - bm.result(Engine.GD).objective)
    record(6, "dual <= GD", worst <= 1e-6, f"max(dual - GD) = {worst:.2e} over {len(random_instances) + 1 + len(benchmarks)} instances")


def test_criterion_07_soundness_suite(benchmarks):
    lines, ok = [], True
    for name, bm in benchmarks.items():
        for engine in ENGINES:
            res = bm.result(engine)
            eta, beta, _ = evaluate_certificate(res.barrier, bm.bounds, bm.partition)
            sound = eta <= res.eta + 1e-9 and beta <= res.beta + 1e-9
            rep = validate_monte_carlo(
                bm.simulator(), bm.partition, bm.spec.initial_region, bm.spec.time_horizon,
                100_000, 2024, res.p_safe, unsafe=bm.spec.unsafe_regions,
            )
            ok &= sound and rep.consistent
            if not (sound and rep.consistent):
                lines.append(f"{name}/{engine.value}: sound={sound} consistent={rep.consistent}")
    detail = "; ".join(lines) or f"{len(benchmarks) * len(ENGINES)} engine outputs re-validated and simulated"
    record(7, "soundness suite", ok, detail)


def _pwa_2d_fixture():
    """Nonlinear f(x) = A x + 0.1 sin(3x) enclosed per cell by constant offsets."""
    A = np.array([[0.6, 0.1], [-0.1, 0.6]])
    part = mark_regions(
        generate_partition(make_hyperrectangle([-1, -1], [1, 1]), [0.125, 0.125]),
        make_hyperrectangle([-0.1, -0.1], [0.1, 0.1]),
    )
    c = 0.5 * (part.lows + part.highs)
    h = 0.5 * (part.highs - part.lows)
    # |d/dx 0.1 sin(3x)| <= 0.3, so the offset varies by at most 0.3 h over a cell.
    bl, bu = 0.1 * np.sin(3 * c) - 0.3 * h, 0.1 * np.sin(3 * c) + 0.3 * h
    R = part.n_cells
    As = np.broadcast_to(A, (R, 2, 2))
    dyn = PwaInclusionDynamics(As, As, bl, bu, part.lows, part.highs, GaussianNoise((0.15, 0.15)))
    return part, dyn, (lambda xs: xs @ A.T + 0.1 * np.sin(3 * xs))


def test_criterion_08_transition_bound_soundness(benchmarks):
    bm = benchmarks["contraction_map_2"]
    dyn = bm.simulator()
    rng = np.random.default_rng(8)
    lo_gap, hi_gap = np.inf, np.inf
    for i in range(bm.partition.n_cells):
        xs = rng.uniform(bm.partition.lows[i], bm.partition.highs[i], size=(100, 2))
        T = exact_kernel(dyn, bm.partition, xs)
        lo_gap = min(lo_gap, float((T - bm.bounds.lower[i]).min()))
        hi_gap = min(hi_gap, float((bm.bounds.upper[i] - T).min()))
    ok = lo_gap >= -1e-9 and hi_gap >= -1e-9
    detail = f"CM2 64x65: min(T - lower) = {lo_gap:.2e}, min(upper - T) = {hi_gap:.2e}"

    # Inclusion fixtures: any selection inside the PWA band must be covered.
    fixtures = []
    bm1 = benchmarks["pwa_1d"]
    fixtures.append(("pwa_1d", bm1.partition, bm1.bounds, (0.1,),
                     lambda xs: xs * rng.uniform(0.4, 0.6, size=xs.shape)))
    part2, dyn2, f2 = _pwa_2d_fixture()
    fixtures.append(("pwa_2d", part2, compute_transition_bounds(dyn2, part2), (0.15, 0.15), f2))
    for name, part, tb, sigma, f in fixtures:
        tb.check_feasible()
        worst = np.inf
        for i in range(part.n_cells):
            xs = rng.uniform(part.lows[i], part.highs[i], size=(100, part.dim))
            T = kernel_at_means(part, f(xs), sigma)
            worst = min(worst, float((T - tb.lower[i]).min()), float((tb.upper[i] - T).min()))
        ok &= worst >= -1e-9
        detail += f"; {name} min slack {worst:.2e}"
    record(8, "transition-bound soundness", ok, detail)


def test_criterion_09_micro_instance():
    part, tb = single_region([0.99, 0.0], [1.0, 0.01])
    dual, cegis = synthesize_dual(tb, part, 10), synthesize_cegis(tb, part, 10)
    ok = abs(dual.p_safe - 0.9) <= 1e-6 and abs(cegis.p_safe - 0.9) <= 1e-6
    record(9, "one-region micro instance", ok,
           f"dual P_s={dual.p_safe:.9f}, CEGIS P_s={cegis.p_safe:.9f} in {cegis.iterations} iterations")


def test_criterion_10_determinism(benchmarks, tmp_path):
    bm = benchmarks["contraction_map_2"]
    first = bm.result(Engine.GD).barrier.values
    second = synthesize_gd(bm.bounds, bm.partition, 10, GdSettings()).barrier.values
    checks = {"gd barrier": first.tobytes() == second.tobytes()}

    path = tmp_path / "cm2.bounds"
    save_bounds(bm.bounds, path, partition=bm.partition)
    back = load_bounds(path)
    save_bounds(back, tmp_path / "again.bounds", partition=bm.partition)
    checks["bounds file"] = back.identical(bm.bounds) and path.read_bytes() == (tmp_path / "again.bounds").read_bytes()

    pwa = load_pwa_dynamics(CONFIGS / "pwa_1d_regions.json")
    save_pwa_dynamics(pwa, tmp_path / "a.json")
    save_pwa_dynamics(load_pwa_dynamics(tmp_path / "a.json"), tmp_path / "b.json")
    checks["pwa file"] = (tmp_path / "a.json").read_bytes() == (tmp_path / "b.json").read_bytes()

    specs_equal = True
    for fname in BENCHMARKS.values():
        spec = load_config(CONFIGS / fname)
        specs_equal &= parse_config(json.loads(json.dumps(spec.to_dict())), base_dir=spec.base_dir) == spec
    checks["config echo"] = specs_equal

    spec = load_config(CONFIGS / "contraction_map_2_gd.json")
    checks["gd report"] = run(spec, validate_samples=0).to_json(False) == run(spec, validate_samples=0).to_json(False)
    failed = [k for k, v in checks.items() if not v]
    record(10, "determinism and round trips", not failed, "failed: " + ", ".join(failed) if failed else "all identical: " + ", ".join(checks))

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from pwcbarrier import (
    PwcBarrier,
    barrier_value,
    evaluate_certificate,
    generate_partition,
    linear_dynamics,
    make_hyperrectangle,
    mark_regions,
    psafe,
    validate_monte_carlo,
)
from pwcbarrier.certificate import initial_points
from pwcbarrier.errors import NegativeBarrierValue, NegativeInput


def test_psafe_examples():
    assert psafe(0.017, 0.018, 10) == pytest.approx(0.803, abs=1e-12)
    assert psafe(0.0, 0.0, 37) == 1.0
    assert psafe(1.0, 0.5, 10) == 0.0
    with pytest.raises(NegativeInput):
        psafe(-0.1, 0.0, 1)
    with pytest.raises(NegativeInput):
        psafe(0.0, 0.1, 0)


@given(st.floats(0, 2), st.floats(0, 1), st.integers(1, 50), st.floats(0, 0.5), st.floats(0, 0.5), st.integers(0, 5))
def test_psafe_monotone(eta, beta, N, de, db, dn):
    base = psafe(eta, beta, N)
    assert psafe(eta + de, beta, N) <= base
    assert psafe(eta, beta + db, N) <= base
    assert psafe(eta, beta, N + dn) <= base
    assert 0.0 <= base <= 1.0


def test_evaluate_examples(micro):
    part, tb = micro
    assert evaluate_certificate(PwcBarrier(np.array([1.0])), tb, part)[:2] == (1.0, 0.0)
    eta, beta, beta_i = evaluate_certificate(PwcBarrier(np.array([0.0])), tb, part)
    assert eta == 0.0 and beta == pytest.approx(0.01, abs=1e-15)
    assert beta_i.tolist() == [beta]


def test_negative_barrier_rejected():
    with pytest.raises(NegativeBarrierValue):
        PwcBarrier(np.array([0.2, -0.1]))


def test_barrier_value_lookup():
    part = generate_partition(make_hyperrectangle([0], [1]), [0.125])
    b = PwcBarrier(np.array([0.0, 0.1, 0.3, 0.2]))
    assert barrier_value(b, part, [1.5]) == 1.0
    assert barrier_value(b, part, [-1e-9]) == 1.0
    assert barrier_value(b, part, [0.8]) == 0.2
    # Shared facet belongs to the cell above it; the top edge belongs to the last cell.
    assert barrier_value(b, part, [0.5]) == 0.3
    assert barrier_value(b, part, [1.0]) == 0.2


def test_initial_points_include_vertices():
    box = make_hyperrectangle([-0.05, -0.05], [0.05, 0.05])
    pts = initial_points(box)
    assert len(pts) == 25
    for v in box.vertices():
        assert any(np.array_equal(v, p) for p in pts)


def test_monte_carlo_absorbing_fixed_point():
    space = make_hyperrectangle([0, 0], [1, 1])
    initial = make_hyperrectangle([0.4, 0.4], [0.6, 0.6])
    part = mark_regions(generate_partition(space, [0.25, 0.25]), initial)
    dyn = linear_dynamics(np.zeros((2, 2)), [0.5, 0.5], [1e-9, 1e-9])
    rep = validate_monte_carlo(dyn, part, initial, 10, 5000, 0, 1.0)
    assert rep.violations == 0 and rep.consistent and rep.empirical_safety == 1.0


def test_monte_carlo_vacuous_bound_always_consistent():
    space = make_hyperrectangle([0], [1])
    initial = make_hyperrectangle([0.45], [0.55])
    part = mark_regions(generate_partition(space, [0.25]), initial)
    dyn = linear_dynamics([[2.0]], [0.0], [1.0])
    rep = validate_monte_carlo(dyn, part, initial, 5, 2000, 3, 0.0)
    assert rep.consistent and rep.violations > 0


def test_monte_carlo_detects_overclaim():
    space = make_hyperrectangle([0], [1])
    initial = make_hyperrectangle([0.45], [0.55])
    part = mark_regions(generate_partition(space, [0.25]), initial)
    dyn = linear_dynamics([[1.0]], [0.0], [0.3])
    rep = validate_monte_carlo(dyn, part, initial, 5, 5000, 3, 0.99)
    assert not rep.consistent


def test_monte_carlo_unsafe_box_counts():
    space = make_hyperrectangle([0], [1])
    initial = make_hyperrectangle([0.1], [0.2])
    unsafe = make_hyperrectangle([0.4], [0.6])
    part = mark_regions(generate_partition(space, [0.125]), initial, [unsafe])
    dyn = linear_dynamics([[1.0]], [0.35], [1e-9])
    rep = validate_monte_carlo(dyn, part, initial, 1, 1000, 0, 0.0, unsafe=[unsafe])
    # Every start point lands in [0.45, 0.55] after one step.
    assert rep.violations == rep.samples


def test_monte_carlo_reproducible():
    space = make_hyperrectangle([0], [1])
    initial = make_hyperrectangle([0.45], [0.55])
    part = mark_regions(generate_partition(space, [0.25]), initial)
    dyn = linear_dynamics([[0.9]], [0.05], [0.2])
    a = validate_monte_carlo(dyn, part, initial, 4, 3000, 42, 0.5)
    b = validate_monte_carlo(dyn, part, initial, 4, 3000, 42, 0.5)
    assert a == b
    with pytest.raises(ValueError):
        validate_monte_carlo(dyn, part, initial, 4, 999, 42, 0.5)


def test_contraction_map_validation(cm2):
    from pwcbarrier import synthesize_dual

    dyn, part, tb = cm2
    res = synthesize_dual(tb, part, 10)
    assert res.p_safe == pytest.approx(0.99, abs=0.01)
    rep = validate_monte_carlo(dyn, part, make_hyperrectangle([-0.05, -0.05], [0.05, 0.05]), 10, 100_000, 0, res.p_safe)
    assert rep.consistent and rep.samples >= 100_000
    assert rep.confidence_lower <= rep.empirical_safety

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pwcbarrier import Hyperrectangle, generate_partition, make_hyperrectangle, mark_regions
from pwcbarrier.errors import (
    DimensionMismatch,
    InitialOutsideSpace,
    InitialUnsafeOverlap,
    InvertedBounds,
    NonPositiveEpsilon,
)


def test_make_hyperrectangle_examples():
    box = make_hyperrectangle([0], [1])
    assert box.dim == 1 and box.volume() == 1.0
    cm2 = make_hyperrectangle([-1, -1], [0.5, 0.5])
    assert cm2.lows.tolist() == [-1, -1] and cm2.highs.tolist() == [0.5, 0.5]
    with pytest.raises(InvertedBounds):
        make_hyperrectangle([0], [-1])
    with pytest.raises(DimensionMismatch):
        make_hyperrectangle([0, 0], [1])


def test_from_center_matches_low_high():
    assert Hyperrectangle.from_center([0, 0], [0.05, 0.05]) == Hyperrectangle((-0.05, -0.05), (0.05, 0.05))


def test_partition_two_cells():
    part = generate_partition(make_hyperrectangle([0], [1]), [0.25])
    assert part.n_cells == 2
    assert [c.low + c.high for c in part.cells] == [(0.0, 0.5), (0.5, 1.0)]
    assert not part.was_rounded


def test_partition_contraction_map_grid():
    part = generate_partition(make_hyperrectangle([-1, -1], [0.5, 0.5]), [0.09375, 0.09375])
    assert part.n_cells == 64
    assert part.cells_per_dim == (8, 8)
    np.testing.assert_allclose(part.widths, [0.1875, 0.1875], rtol=0, atol=1e-15)


def test_partition_rounds_count_up():
    part = generate_partition(make_hyperrectangle([0], [1.5]), [0.2])
    assert part.cells_per_dim == (4,)
    assert part.widths[0] == pytest.approx(0.375)
    assert part.was_rounded


def test_partition_rejects_bad_epsilon():
    space = make_hyperrectangle([0, 0], [1, 1])
    with pytest.raises(NonPositiveEpsilon):
        generate_partition(space, [0.1, 0.0])
    with pytest.raises(DimensionMismatch):
        generate_partition(space, [0.1, 0.1, 0.1])


def test_mark_regions_examples():
    part = generate_partition(make_hyperrectangle([0], [1]), [0.25])
    assert mark_regions(part, make_hyperrectangle([0], [0.4])).initial_cell_indices == {0}
    assert mark_regions(part, make_hyperrectangle([0.4], [0.6])).initial_cell_indices == {0, 1}
    marked = mark_regions(part, make_hyperrectangle([0], [0.4]), [make_hyperrectangle([0.5], [1.0])])
    assert marked.unsafe_cell_flags == (False, True)


def test_mark_regions_errors():
    part = generate_partition(make_hyperrectangle([0], [1]), [0.25])
    with pytest.raises(InitialOutsideSpace):
        mark_regions(part, make_hyperrectangle([0.5], [1.5]))
    with pytest.raises(InitialUnsafeOverlap):
        mark_regions(part, make_hyperrectangle([0.1], [0.2]), [make_hyperrectangle([0.0], [0.3])])


def test_unsafe_partial_cover_marks_whole_cell():
    part = generate_partition(make_hyperrectangle([0], [1]), [0.125])
    marked = mark_regions(part, make_hyperrectangle([0], [0.1]), [make_hyperrectangle([0.6], [0.65])])
    assert marked.unsafe_cell_flags == (False, False, True, False)


def test_tiling_random_points():
    part = generate_partition(make_hyperrectangle([-1, -1], [0.5, 0.5]), [0.07, 0.11])
    rng = np.random.default_rng(0)
    xs = rng.uniform(part.space.lows, part.space.highs, size=(1000, 2))
    idx = part.locate_many(xs)
    assert np.all(idx >= 0)
    for x, i in zip(xs, idx):
        owners = [j for j, c in enumerate(part.cells) if c.contains(x)]
        assert i in owners and part.locate(x) == i
        lo, hi = part.lows[i], part.highs[i]
        # Half-open ownership: x is strictly below the high face unless on the space boundary.
        assert np.all(lo <= x) and np.all((x < hi) | (hi == part.space.highs))


def test_boundary_points_have_one_owner():
    part = generate_partition(make_hyperrectangle([0, 0], [1, 1]), [0.25, 0.25])
    assert part.locate([0.5, 0.5]) == part.locate_many(np.array([[0.5, 0.5]]))[0]
    assert part.grid_index(part.locate([0.5, 0.5])) == (1, 1)
    assert part.grid_index(part.locate([1.0, 1.0])) == (1, 1)
    assert part.grid_index(part.locate([0.0, 1.0])) == (0, 1)
    assert part.locate([1.0 + 1e-12, 0.5]) is None


@settings(max_examples=50, deadline=None)
@given(
    lows=st.lists(st.floats(-10, 10), min_size=1, max_size=3),
    extents=st.lists(st.floats(0.1, 10), min_size=3, max_size=3),
    counts=st.lists(st.integers(1, 9), min_size=3, max_size=3),
)
def test_volume_conservation(lows, extents, counts):
    n = len(lows)
    space = make_hyperrectangle(lows, [lo + e for lo, e in zip(lows, extents[:n])])
    eps = [e / (2 * k) for e, k in zip(extents[:n], counts[:n])]
    part = generate_partition(space, eps)
    assert part.cells_per_dim == tuple(counts[:n])
    total = float(np.prod(part.highs - part.lows, axis=1).sum())
    assert abs(total - space.volume()) <= 1e-12 * space.volume()


def test_partition_determinism():
    space = make_hyperrectangle([-1, -1], [0.5, 0.5])
    a = generate_partition(space, [0.09375, 0.09375])
    b = generate_partition(space, [0.09375, 0.09375])
    assert np.array_equal(a.lows, b.lows) and np.array_equal(a.highs, b.highs)
    assert a.digest() == b.digest()
    # Row-major: the last axis varies fastest.
    assert a.grid_index(1) == (0, 1) and a.grid_index(8) == (1, 0)

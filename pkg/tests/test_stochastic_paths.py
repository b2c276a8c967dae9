import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from stochburgers import rng
from stochburgers.core import ProcessSample, SpaceTimeGrid
from stochburgers.errors import GridMismatchError, SizingError
from stochburgers.stochastic_paths import (brownian_block, coarsen_path, ito_integral,
                                           make_brownian_path)

GRID = SpaceTimeGrid(-1.0, 1.0, 5, 1.0, 64)


def test_path_telescopes():
    p = make_brownian_path(7, 3, GRID)
    assert p.w[0] == 0.0
    assert p.w[-1] == pytest.approx(p.dw.sum(), abs=1e-14)
    assert np.allclose(np.diff(p.w), p.dw, atol=1e-15)


def test_path_is_deterministic():
    a, b = make_brownian_path(11, 5, GRID), make_brownian_path(11, 5, GRID)
    assert np.array_equal(a.w, b.w) and np.array_equal(a.dw, b.dw)
    assert not np.array_equal(a.w, make_brownian_path(11, 6, GRID).w)
    assert not np.array_equal(a.w, make_brownian_path(12, 5, GRID).w)


def test_terminal_moments_over_many_paths():
    g = SpaceTimeGrid(0.0, 1.0, 3, 1.0, 1)
    n = 100_000
    wT = brownian_block(2024, 0, n, g)[0]
    assert abs(wT.mean()) <= 3 * np.sqrt(1.0 / n)
    assert 0.99 <= wT.var(ddof=1) <= 1.01
    assert abs(wT.var(ddof=1) - 1.0) <= 3 * np.sqrt(2.0 / n)


def test_block_columns_match_single_paths():
    blk = brownian_block(5, 10, 3, GRID)
    for i in range(3):
        assert np.array_equal(blk[:, i], make_brownian_path(5, 10 + i, GRID).dw)


def test_random_access_into_a_stream():
    full = rng.normals(99, 4, 20)
    assert np.array_equal(rng.normals(99, 4, 7, start=9), full[9:16])


def test_seed_must_be_u64():
    with pytest.raises(ValueError):
        rng.normals(-1, 0, 3)
    with pytest.raises(ValueError):
        rng.normals(2 ** 64, 0, 3)


def test_ito_integral_examples():
    p = make_brownian_path(1, 0, GRID)
    zero = ito_integral(ProcessSample.constant(GRID, 0.0), p)
    assert np.all(zero.values == 0.0)
    one = ito_integral(ProcessSample.constant(GRID, 1.0), p)
    assert np.allclose(one.values, p.w, atol=1e-14)
    ell = ito_integral(ProcessSample.constant(GRID, -2.0), p)
    assert np.allclose(ell.values, -2.0 * p.w, atol=1e-14)
    assert np.all(ell.psi_part == -2.0)


def test_ito_integral_uses_left_endpoint():
    p = make_brownian_path(1, 0, GRID)
    H = ito_integral(ProcessSample(GRID, p.w), p)
    # Σ W_j ΔW_j = ½(W_T² - Σ ΔW_j²) exactly
    assert H.values[-1] == pytest.approx(0.5 * (p.w[-1] ** 2 - np.sum(p.dw ** 2)), abs=1e-12)


def test_ito_integral_grid_mismatch():
    p = make_brownian_path(1, 0, GRID)
    with pytest.raises(GridMismatchError):
        ito_integral(ProcessSample.constant(GRID.with_nt(32), 1.0), p)


def test_coarsen_examples():
    p = make_brownian_path(3, 1, GRID)
    assert coarsen_path(p, 1) is p
    one = coarsen_path(p, GRID.nt)
    assert one.dw.shape == (1,) and one.dw[0] == pytest.approx(p.w[-1], abs=1e-14)
    two = coarsen_path(p, 2)
    assert np.allclose(two.dw, p.dw[0::2] + p.dw[1::2], atol=1e-15)
    assert np.allclose(two.w, p.w[::2], atol=1e-14)
    with pytest.raises(SizingError):
        coarsen_path(p, 3)


@settings(max_examples=30, deadline=None)
@given(a=st.sampled_from([1, 2, 4, 8]), b=st.sampled_from([1, 2, 4]), seed=st.integers(0, 2 ** 64 - 1))
def test_coarsening_composes(a, b, seed):
    p = make_brownian_path(seed, 0, GRID)
    lhs = coarsen_path(coarsen_path(p, a), b)
    rhs = coarsen_path(p, a * b)
    assert lhs.grid == rhs.grid
    assert np.allclose(lhs.w, rhs.w, atol=1e-13)


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2 ** 64 - 1), stream=st.integers(0, 2 ** 64 - 1))
def test_determinism_property(seed, stream):
    g = SpaceTimeGrid(0.0, 1.0, 3, 0.5, 8)
    assert np.array_equal(make_brownian_path(seed, stream, g).dw, make_brownian_path(seed, stream, g).dw)

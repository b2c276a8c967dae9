import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from stochburgers.core import (FieldSample, ProcessSample, SpaceTimeGrid, central_derivative,
                               cumulative_antiderivative, diff_x, interior_mask, interpolate_shifted,
                               sample_along)
from stochburgers.errors import DomainError, SizingError


def _interior(a):
    return a[..., 1:-1]


@pytest.mark.parametrize("kw", [dict(x_min=1.0, x_max=0.0, nx=5, horizon_T=1.0, nt=1),
                                dict(x_min=0.0, x_max=1.0, nx=2, horizon_T=1.0, nt=1),
                                dict(x_min=0.0, x_max=1.0, nx=5, horizon_T=0.0, nt=1),
                                dict(x_min=0.0, x_max=1.0, nx=5, horizon_T=1.0, nt=0)])
def test_grid_invariants_rejected(kw):
    with pytest.raises(SizingError):
        SpaceTimeGrid(**kw)


def test_grid_derived_steps():
    g = SpaceTimeGrid(-1.0, 1.0, 201, 0.5, 100)
    assert g.dx == pytest.approx(0.01)
    assert g.dt == pytest.approx(0.005)
    assert g.x[0] == -1.0 and g.x[-1] == 1.0 and g.t[-1] == 0.5
    r = g.refined()
    assert r.dx == pytest.approx(g.dx / 2) and r.dt == pytest.approx(g.dt / 4)


def test_field_sample_rejects_bad_shapes_and_nan(small_grid):
    with pytest.raises(ValueError):
        FieldSample(small_grid, np.zeros((3, 3)))
    v = np.zeros((small_grid.nt + 1, small_grid.nx))
    v[2, 3] = np.nan
    with pytest.raises(ValueError):
        FieldSample(small_grid, v)


def test_central_derivative_of_constant_is_zero(small_grid):
    f = FieldSample.constant(small_grid, 3.7)
    for order in (1, 2, 3):
        assert np.all(np.abs(central_derivative(f, order).values) < 1e-9)


def test_second_derivative_of_square():
    g = SpaceTimeGrid(-1.0, 1.0, 201, 1.0, 1)
    f = FieldSample.from_function(g, lambda t, x: x ** 2)
    d2 = central_derivative(f, 2).values
    assert np.max(np.abs(_interior(d2) - 2.0)) <= 1e-8


def test_first_derivative_of_sin_is_second_order():
    errs = []
    for nx in (101, 201, 401):
        g = SpaceTimeGrid(-2.0, 2.0, nx, 1.0, 1)
        d = diff_x(np.sin(g.x), g.dx, 1)
        errs.append(np.max(np.abs(_interior(d) - np.cos(g.x)[1:-1])))
    ratios = np.array(errs[:-1]) / np.array(errs[1:])
    assert np.all(ratios > 3.5)


def test_boundary_stencils_are_exact_on_quadratics():
    g = SpaceTimeGrid(0.0, 1.0, 11, 1.0, 1)
    x = g.x
    assert np.allclose(diff_x(x ** 2, g.dx, 1), 2 * x, atol=1e-12)
    assert np.allclose(diff_x(x ** 2, g.dx, 2), 2.0, atol=1e-9)
    assert np.allclose(diff_x(x ** 3, g.dx, 3), 6.0, atol=1e-6)


def test_central_derivative_sizing_error():
    g = SpaceTimeGrid(0.0, 1.0, 4, 1.0, 1)
    with pytest.raises(SizingError):
        central_derivative(FieldSample.constant(g, 1.0), 3)


def test_antiderivative_examples():
    g = SpaceTimeGrid(0.0, 1.0, 1001, 1.0, 1)
    assert np.all(cumulative_antiderivative(np.zeros(g.nx), g) == 0.0)
    assert np.allclose(cumulative_antiderivative(np.ones(g.nx), g), g.x, atol=1e-13)
    assert np.max(np.abs(cumulative_antiderivative(2 * g.x, g) - g.x ** 2)) <= 1e-6


def test_antiderivative_then_derivative_recovers_integrand():
    g = SpaceTimeGrid(-1.0, 2.0, 301, 1.0, 1)
    p = np.cos(3 * g.x)
    back = diff_x(cumulative_antiderivative(p, g), g.dx, 1)
    assert np.max(np.abs(_interior(back) - p[1:-1])) <= 10 * g.dx ** 2


def test_interpolate_shifted_examples():
    g = SpaceTimeGrid(-1.0, 1.0, 41, 1.0, 1)
    s = np.sin(g.x)
    assert np.array_equal(interpolate_shifted(s, g, 0.0), s)
    adv = interpolate_shifted(s, g, g.dx)
    assert np.allclose(adv[:-1], s[1:], atol=1e-14)
    lin = interpolate_shifted(3 * g.x, g, 0.37)
    inside = g.x + 0.37 <= g.x_max
    assert np.allclose(lin[inside], 3 * (g.x[inside] + 0.37), atol=1e-13)
    # constant extension past the right end
    assert np.allclose(lin[~inside], 3 * g.x_max)


def test_interpolate_shifted_rejects_nonfinite_shift():
    g = SpaceTimeGrid(-1.0, 1.0, 11, 1.0, 1)
    with pytest.raises(DomainError):
        interpolate_shifted(g.x, g, np.inf)


@settings(max_examples=60, deadline=None)
@given(a=st.floats(-5, 5), b=st.floats(-5, 5), shift=st.floats(-0.9, 0.9))
def test_interpolate_shifted_exact_on_affine(a, b, shift):
    g = SpaceTimeGrid(-2.0, 2.0, 81, 1.0, 1)
    out = interpolate_shifted(a * g.x + b, g, shift)
    inside = (g.x + shift >= g.x_min) & (g.x + shift <= g.x_max)
    assert np.allclose(out[inside], a * (g.x[inside] + shift) + b, atol=1e-11)


@settings(max_examples=40, deadline=None)
@given(c=st.lists(st.floats(-3, 3), min_size=3, max_size=3))
def test_derivatives_exact_on_quadratics(c):
    g = SpaceTimeGrid(-1.5, 0.5, 33, 1.0, 1)
    f = c[0] + c[1] * g.x + c[2] * g.x ** 2
    assert np.allclose(diff_x(f, g.dx, 1), c[1] + 2 * c[2] * g.x, atol=1e-9)
    assert np.allclose(diff_x(f, g.dx, 2), 2 * c[2], atol=1e-7)


def test_sample_along_is_exact_on_cubics():
    g = SpaceTimeGrid(-1.0, 1.0, 41, 1.0, 4)
    f = g.x ** 3 - g.x
    vals = np.tile(f, (g.nt + 1, 1))
    xs = np.array([-0.61, 0.0, 0.333, 0.7, 0.9])
    assert np.allclose(sample_along(vals, g, xs), xs ** 3 - xs, atol=1e-12)


def test_interior_mask():
    g = SpaceTimeGrid(0.0, 1.0, 11, 1.0, 1)
    m = interior_mask(g, 0.2)
    assert list(np.flatnonzero(m)) == [2, 3, 4, 5, 6, 7, 8]
    assert not interior_mask(g, 0.0)[0]
    with pytest.raises(DomainError):
        interior_mask(g, 0.5)


def test_process_sample_constant_and_nonzero_check(small_grid):
    p = ProcessSample.constant(small_grid, 2.0)
    assert np.all(p.psi_part == 0) and np.all(p.values == 2.0)
    with pytest.raises(DomainError):
        ProcessSample.constant(small_grid, 0.0).require_nonzero()

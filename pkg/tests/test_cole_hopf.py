import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from stochburgers.closed_form import (backward_scenario, example1_fields, example2_fields,
                                      geometric_sigma, named_profile)
from stochburgers.cole_hopf import (TransformKernel, build_backward_coefficients, eval_general_Y,
                                    forward_transform, generalized_transform, point_transform_pde_residual,
                                    point_transform_z, psiU_from_V, residual_big_constraint,
                                    residual_heat_bspde, residual_mid_constraint, residual_r_bspde,
                                    terminal_compatibility_residual)
from stochburgers.core import (FieldSample, ProcessSample, SemimartingaleField, SpaceTimeGrid,
                               cumulative_antiderivative, interior_mask)
from stochburgers.errors import DomainError, SingularityError
from stochburgers.stochastic_paths import coarsen_path, make_brownian_path

GRID = SpaceTimeGrid(-2.0, 2.0, 81, 1.0, 100)
PATH = make_brownian_path(42, 0, GRID)


def _field(func):
    return FieldSample.from_function(GRID, func)


def test_forward_transform_examples():
    assert np.all(forward_transform(FieldSample.constant(GRID, 1.0)).values == 0.0)
    U = forward_transform(_field(lambda t, x: np.exp(-x) + 0 * t))
    assert np.allclose(U.values, 1.0, atol=1e-3)
    with pytest.raises(DomainError):
        forward_transform(_field(lambda t, x: x + 0 * t))


@settings(max_examples=40, deadline=None)
@given(lam=st.floats(1e-3, 1e3), a=st.floats(-2, 2))
def test_forward_transform_gauge_invariance(lam, a):
    V0 = _field(lambda t, x: np.exp(a * np.sin(x) * (1 + t)) * (2 + np.cos(x)))
    U0 = forward_transform(V0).values
    U1 = forward_transform(V0.like(lam * V0.values)).values
    assert np.max(np.abs(U0 - U1)) <= 1e-12


def test_generalized_reduces_to_forward():
    V = _field(lambda t, x: 2 + np.sin(x + t))
    zero = FieldSample.constant(GRID, 0.0)
    assert np.array_equal(generalized_transform(V, zero, ProcessSample.constant(GRID, -1.0)).values,
                          forward_transform(V).values)


def test_generalized_transform_family_two_constant():
    s = -0.8
    V = FieldSample(GRID, np.tile(1.5 * np.exp(PATH.w)[:, None], (1, GRID.nx)))
    U = generalized_transform(V, V, ProcessSample.constant(GRID, s))
    assert np.allclose(U.values, -1.0 / s, atol=1e-13)


def test_generalized_transform_family_one():
    s = -1.0
    F = example1_fields(named_profile(GRID, "sin"), PATH)
    U = generalized_transform(F.f_part, F.psi_part, ProcessSample.constant(GRID, s))
    exact = -np.cos(GRID.x)[None, :] * PATH.w[:, None] - np.sin(GRID.x)[None, :] / s
    err = np.abs(U.values - exact)[:, interior_mask(GRID, 0.0)]
    assert err.max() <= 5 * GRID.dx ** 2 * (1 + np.abs(PATH.w).max()) ** 3


def test_psiU_examples():
    sig = ProcessSample.constant(GRID, -1.0)
    V = _field(lambda t, x: 2 + np.sin(x + t))
    zero = FieldSample.constant(GRID, 0.0)
    assert np.all(psiU_from_V(V, zero, zero, sig).values == 0.0)
    F2 = example2_fields(named_profile(GRID, "constant", value=3.0), PATH)
    assert np.max(np.abs(psiU_from_V(F2.f_part, F2.psi_part, F2.psi_psi_part, sig).values)) <= 1e-12
    F1 = example1_fields(named_profile(GRID, "constant", value=2.0), PATH)
    assert np.max(np.abs(psiU_from_V(F1.f_part, F1.psi_part, F1.psi_psi_part, sig).values)) <= 1e-12


def test_terminal_compatibility_classical_round_trip():
    errs = []
    for nx in (41, 81):
        g = SpaceTimeGrid(-2.0, 2.0, nx, 1.0, 1)
        p = np.tanh(g.x)
        q = np.exp(-cumulative_antiderivative(p, g))
        errs.append(terminal_compatibility_residual(p, q, np.zeros(nx), -1.0, g, 0.1))
    assert errs[1] <= 0.1 * (4 / 80) ** 2 * 10
    assert errs[0] / errs[1] >= 3.5


@pytest.mark.parametrize("alpha,sigma", [(2.0, -1.0), (0.5, -0.25)])
def test_terminal_compatibility_family_one(alpha, sigma):
    q = np.full(GRID.nx, np.exp(alpha * PATH.w[-1]))
    assert terminal_compatibility_residual(-alpha / sigma, q, alpha * q, sigma, GRID) <= 1e-10


@pytest.mark.parametrize("beta,sigma", [(1.0, -1.0), (3.0, -0.5)])
def test_terminal_compatibility_family_two(beta, sigma):
    q = np.full(GRID.nx, beta * np.exp(PATH.w[-1]))
    assert terminal_compatibility_residual(-1.0 / sigma, q, q, sigma, GRID) <= 1e-10


def test_point_transform_examples():
    assert abs(point_transform_pde_residual(1.0, 0.0, 1.0, 1.0, 1.0)) <= 1e-15
    assert point_transform_pde_residual(0.3, 1.0, 2.0, 0.0, 5.0) == 0.0
    assert point_transform_z(2.0, 0.0, 3.0, 0.5) == pytest.approx(-3.0)
    s, y, u = 1.5, 0.8, 0.7
    assert point_transform_z(s, s * y * u, 0.0, y) == pytest.approx((s * y * u) ** 2 / (s * y ** 2))
    with pytest.raises(SingularityError):
        point_transform_pde_residual(1.0, 0.0, 0.0, 1.0, 1.0)


_away = st.one_of(st.floats(-2, -0.1), st.floats(0.1, 2))
_wide = st.one_of(st.floats(-1e3, -0.1), st.floats(0.1, 1e3))


@settings(max_examples=200, deadline=None)
@given(s=_away, x=st.floats(-2, 2), y=_away, z=st.floats(-2, 2), h=st.floats(-2, 2))
def test_point_transform_identity_property(s, x, y, z, h):
    assert abs(point_transform_pde_residual(s, x, y, z, h)) <= 1e-10


@settings(max_examples=200, deadline=None)
@given(s=_wide, y=_wide, z=st.floats(-1e3, 1e3), h=st.floats(-1e3, 1e3))
def test_point_transform_identity_relative_to_term_size(s, y, z, h):
    # the cancelling terms are of size |z|^3/|σy^3| and |hz|/|σy^2|
    scale = abs(z) ** 3 / abs(s * y ** 3) + abs(h * z) / abs(s * y ** 2)
    assert abs(point_transform_pde_residual(s, 0.0, y, z, h)) <= 1e-14 * scale + 1e-300


def test_eval_general_Y_reductions():
    sig = ProcessSample.constant(GRID, -0.6)
    k0 = TransformKernel.zero(sig)
    y, z = np.array([0.5, -1.2, 2.0]), np.array([0.3, 0.0, -0.7])
    assert np.allclose(eval_general_Y(k0, 0.5, 0.1, y, z), -z / (-0.6 * y), atol=1e-15)
    assert eval_general_Y(k0, 0.5, 0.1, 1.0, 0.0) == 0.0
    gs = geometric_sigma(GRID, PATH, -0.6, 0.4)
    kg = TransformKernel.zero(gs)
    n = 37
    sn = gs.values[n]
    assert np.allclose(eval_general_Y(kg, GRID.t[n], 0.0, y, z), -z / (sn * y), atol=1e-13)
    with pytest.raises(SingularityError):
        eval_general_Y(k0, 0.5, 0.0, 0.0, 1.0)


def _backward_coeffs(g, sigma=-1.0, m=0.0, c=0.0):
    return build_backward_coefficients(ProcessSample.constant(g, sigma), FieldSample.constant(g, m),
                                       FieldSample.constant(g, c))


def test_r_bspde_zero_kernel():
    sig = ProcessSample.constant(GRID, -1.0)
    assert residual_r_bspde(TransformKernel.zero(sig), _backward_coeffs(GRID), PATH) == 0.0


def _r_kernel(g, func, sigma=-1.0):
    r = FieldSample.from_function(g, func)
    z = FieldSample.constant(g, 0.0)
    return TransformKernel(SemimartingaleField(f_part=r, psi_part=z, psi_psi_part=z),
                           ProcessSample.constant(g, sigma))


def test_r_bspde_backward_heat_oracle_and_negative_control():
    base = SpaceTimeGrid(-2.0, 2.0, 21, 0.5, 50)
    fine = base.refined()
    pf = make_brownian_path(5, 0, fine)
    good, bad = [], []
    for g in (base, fine):
        p = coarsen_path(pf, fine.nt // g.nt).with_space_grid(g)
        co = _backward_coeffs(g)
        good.append(residual_r_bspde(_r_kernel(g, lambda t, x: np.exp(-x - 0.5 * t)), co, p))
        bad.append(residual_r_bspde(_r_kernel(g, lambda t, x: np.sin(x) + 0 * t), co, p))
    assert good[0] / good[1] >= 3.0
    assert bad[1] >= 0.5 * bad[0] and bad[1] > 0.1


def test_mid_constraint_trivial_when_psi_vanishes():
    V = _field(lambda t, x: 2 + np.sin(x))
    z = FieldSample.constant(GRID, 0.0)
    F = SemimartingaleField(f_part=V, psi_part=z, psi_psi_part=z)
    assert residual_mid_constraint(F, _backward_coeffs(GRID, m=0.3, c=0.1), PATH) == 0.0


def test_mid_constraint_family_two_and_negative_control():
    base = SpaceTimeGrid(-1.2, 1.2, 21, 0.5, 100)
    fine = base.refined()
    pf = make_brownian_path(13, 0, fine)
    good, bad = [], []
    for g in (base, fine):
        p = coarsen_path(pf, fine.nt // g.nt).with_space_grid(g)
        prof = named_profile(g, "sin", offset=2.0)
        sig = ProcessSample.constant(g, -1.0)
        sc = backward_scenario(2, prof, sig, p)
        wrong = backward_scenario(2, prof, sig, p, m_shift=0.5)
        good.append(residual_mid_constraint(sc.V, sc.coeffs, p))
        bad.append(residual_mid_constraint(wrong.V, wrong.coeffs, p))
        assert residual_heat_bspde(sc.V, sc.coeffs, p) <= good[-1] * 10 + 1e-2
    assert good[0] / good[1] >= 3.0
    assert bad[0] / bad[1] < 1.5 and bad[1] > 10 * good[1]


def test_big_constraint_deterministic_limit_is_zero():
    V = _field(lambda t, x: 2 + np.sin(x))
    z = FieldSample.constant(GRID, 0.0)
    F = SemimartingaleField(f_part=V, psi_part=z, a_psi_part=z, psi_psi_part=z)
    sig = ProcessSample.constant(GRID, -1.0)
    assert residual_big_constraint(TransformKernel.zero(sig), F, _backward_coeffs(GRID, 0.2, 0.1), PATH) == 0.0


def test_big_constraint_family_two_at_r_zero_and_perturbed():
    sig = ProcessSample.constant(GRID, -1.0)
    prof = named_profile(GRID, "sin", offset=2.0)
    sc = backward_scenario(2, prof, sig, PATH)
    k0 = TransformKernel.zero(sig)
    good = residual_big_constraint(k0, sc.V, sc.coeffs, PATH)
    pv = sc.V.psi_part.values * 1.2
    pert = SemimartingaleField(f_part=sc.V.f_part, psi_part=FieldSample(GRID, pv),
                               a_psi_part=sc.V.a_psi_part, psi_psi_part=sc.V.psi_psi_part)
    bad = residual_big_constraint(k0, pert, sc.coeffs, PATH)
    assert good <= 1e-2
    assert bad > 10 * good

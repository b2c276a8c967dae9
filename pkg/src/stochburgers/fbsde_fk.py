"""FBSDE triplets along a path, BSDE residuals and Monte Carlo Feynman-Kac estimators."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from . import rng
from .core import (DEFAULT_BUFFER, CoefficientSet, FieldSample, ProcessSample, SemimartingaleField,
                   SpaceTimeGrid, diff_x, interior_mask, sample_along)
from .errors import DomainError, GridMismatchError, SingularityError
from .stochastic_paths import BrownianPath

# samples processed per chunk in the Monte Carlo loops, bounds peak memory
CHUNK = 8192


@dataclass(frozen=True)
class FbsdeTriplet:
    x_path: np.ndarray
    y_path: np.ndarray
    z_path: np.ndarray
    path: BrownianPath
    x0: float
    h_path: Optional[np.ndarray] = None
    left_window: bool = False


@dataclass(frozen=True)
class McEstimate:
    value: float
    std_error: float
    n_samples: int
    seed: int

    @classmethod
    def from_samples(cls, samples: np.ndarray, seed: int) -> "McEstimate":
        n = samples.size
        se = float(np.std(samples, ddof=1) / np.sqrt(n)) if n > 1 else 0.0
        return cls(float(np.mean(samples)), se, int(n), int(seed))


def _sigma_values(sigma, grid: SpaceTimeGrid) -> np.ndarray:
    if isinstance(sigma, ProcessSample):
        if sigma.grid.nt != grid.nt or sigma.grid.horizon_T != grid.horizon_T:
            raise GridMismatchError("sigma and path use different time lattices")
        return sigma.values
    return np.full(grid.nt + 1, float(sigma))


def simulate_forward_state(x0: float, sigma, drift_k: Optional[float], path: BrownianPath) -> np.ndarray:
    """Euler path X[n+1] = X[n] + k dt + σ[n] dw[n]."""
    s = _sigma_values(sigma, path.grid)
    k = 0.0 if drift_k is None else float(drift_k)
    steps = k * path.grid.dt + s[:-1] * path.dw
    return x0 + np.concatenate([[0.0], np.cumsum(steps)])


def _window_bounds(grid: SpaceTimeGrid, buffer_fraction: float):
    mask = interior_mask(grid, buffer_fraction)
    return grid.x[mask][0], grid.x[mask][-1]


def markovian_triplet(F: SemimartingaleField, sigma: ProcessSample, x_path, path: BrownianPath,
                      buffer_fraction: float = DEFAULT_BUFFER) -> FbsdeTriplet:
    """y = F(t, X), z = σ F_x(t, X) + Ψ^F(t, X) and, with Ψ^{Ψ^F} attached, the h-process."""
    grid = F.grid
    X = np.asarray(x_path, dtype=float)
    if X.shape != (grid.nt + 1,):
        raise GridMismatchError("x_path length does not match the grid")
    s = _sigma_values(sigma, grid)
    dx = grid.dx
    Fv = F.f_part.values
    Fx = diff_x(Fv, dx, 1)
    y = sample_along(Fv, grid, X)
    z = s * sample_along(Fx, grid, X) + sample_along(F.psi_part.values, grid, X)
    h = None
    if F.psi_psi_part is not None:
        ps = sigma.part("psi_part") if isinstance(sigma, ProcessSample) else np.zeros_like(s)
        h = (sample_along(F.psi_psi_part.values, grid, X) + s ** 2 * sample_along(diff_x(Fv, dx, 2), grid, X)
             + ps * sample_along(Fx, grid, X) + 2 * s * sample_along(diff_x(F.psi_part.values, dx, 1), grid, X))
    lo, hi = _window_bounds(grid, buffer_fraction)
    left = bool(np.any((X < lo) | (X > hi)))
    return FbsdeTriplet(X, y, z, path, float(X[0]), h, left)


def bsde_residual(triplet: FbsdeTriplet, driver: Callable) -> float:
    """max_n |Δy[n] - driver(t_n, X[n], y[n], z[n]) dt - z[n] dw[n]|; the driver is vectorized."""
    g = triplet.path.grid
    y, z, X = triplet.y_path, triplet.z_path, triplet.x_path
    drv = np.broadcast_to(np.asarray(driver(g.t[:-1], X[:-1], y[:-1], z[:-1]), dtype=float), (g.nt,))
    res = np.diff(y) - drv * g.dt - z[:-1] * triplet.path.dw
    return float(np.max(np.abs(res)))


def field_along(field, grid: SpaceTimeGrid):
    """Evaluator (t, x) -> field value, t on the lattice, x interpolated per row."""
    vals = field.values if isinstance(field, FieldSample) else np.asarray(field, dtype=float)

    def ev(t, x):
        n = np.rint(np.asarray(t) / grid.dt).astype(np.int64)
        return sample_along(vals[n], grid, x)

    return ev


def heat_driver(coeffs: CoefficientSet) -> Callable:
    """c(t, x) y + d(t, x) z."""
    c, d = field_along(coeffs.c, coeffs.grid), field_along(coeffs.d, coeffs.grid)
    return lambda t, x, y, z: c(t, x) * y + d(t, x) * z


def burgers_driver(coeffs: CoefficientSet) -> Callable:
    """σ Y Z + e(t, X) Y + m(t, X) Z + f(t, X)."""
    g = coeffs.grid
    e, m, f = (field_along(v, g) for v in (coeffs.e, coeffs.m, coeffs.f))
    sig = coeffs.sigma.values

    def drv(t, x, y, z):
        n = np.rint(np.asarray(t) / g.dt).astype(np.int64)
        return sig[n] * y * z + e(t, x) * y + m(t, x) * z + f(t, x)

    return drv


def point_transform_identity_gap(burgers_triplet: FbsdeTriplet, heat_triplet: FbsdeTriplet, sigma) -> float:
    """max_n |Y[n] + z[n] / (σ[n] y[n])|."""
    if burgers_triplet.path is not heat_triplet.path and not (
            np.array_equal(burgers_triplet.path.dw, heat_triplet.path.dw)):
        raise GridMismatchError("triplets are tied to different Brownian paths")
    if burgers_triplet.x0 != heat_triplet.x0:
        raise DomainError("triplets start from different points")
    y = heat_triplet.y_path
    if np.any(y == 0):
        raise SingularityError(f"y vanishes at step {int(np.argmax(y == 0))}")
    s = _sigma_values(sigma, heat_triplet.path.grid)
    return float(np.max(np.abs(burgers_triplet.y_path + heat_triplet.z_path / (s * y))))


# Monte Carlo ----------------------------------------------------------------------

def fk_forward_estimate(t: float, x: float, q_eval: Callable, qx_eval: Callable, k: float, sigma: float,
                        c_bar: float, n_samples: int, seed: int):
    """G = e^{-c̄t} E[q(x(t))], G_x likewise with q_x, and U = -G_x/G.

    x(t) ~ Normal(x + kt, σ²t); sample i uses stream i. U carries first-order error
    propagation only, so its uncertainty is about |U| (se_G/|G| + se_Gx/|G_x|).
    """
    if sigma == 0:
        raise DomainError("sigma must be nonzero")
    z = rng.normal_block(seed, 0, n_samples, 1)[0]
    xt = x + k * t + sigma * np.sqrt(t) * z
    disc = np.exp(-c_bar * t)
    G = McEstimate.from_samples(disc * np.broadcast_to(q_eval(xt), xt.shape), seed)
    Gx = McEstimate.from_samples(disc * np.broadcast_to(qx_eval(xt), xt.shape), seed)
    if abs(G.value) <= 3 * G.std_error or G.value == 0:
        raise SingularityError("G estimate is within 3 standard errors of zero; U = -G_x/G refused")
    return G, Gx, -Gx.value / G.value


def _restarted_paths(seed, first_stream, n, sigma_vals, x, w_t, k0, grid):
    """Forward states and Brownian values on lattice times k0..nt for n restarted samples."""
    steps = grid.nt - k0
    if steps == 0:
        return np.full((1, n), float(x)), np.full((1, n), float(w_t))
    dW = np.sqrt(grid.dt) * rng.normal_block(seed, first_stream, n, steps)
    W = w_t + np.vstack([np.zeros((1, n)), np.cumsum(dW, axis=0)])
    X = x + np.vstack([np.zeros((1, n)), np.cumsum(sigma_vals[k0:-1, None] * dW, axis=0)])
    return X, W


def _trapezoid_cumulative(vals: np.ndarray, dt: float) -> np.ndarray:
    """∫ from the first row to each row, trapezoid rule along axis 0."""
    out = np.zeros_like(vals)
    if vals.shape[0] > 1:
        out[1:] = np.cumsum(0.5 * (vals[1:] + vals[:-1]) * dt, axis=0)
    return out


def fk_backward_y(t: float, x: float, q_eval: Callable, c_eval: Callable, sigma: ProcessSample,
                  n_samples: int, seed: int, w_t: float = 0.0, first_stream: int = 0,
                  return_samples: bool = False):
    """y^x(t) = E[q(x(T), W(T)) exp(-∫_t^T c(s, x(s), W(s)) ds)] from x(t) = x, W(t) = w_t.

    q_eval(x, w) and c_eval(s, x, w) take the Brownian value so that random fields
    driven by W can be supplied.
    """
    grid = sigma.grid
    k0 = grid.time_index(t)
    times = grid.t[k0:]
    out = np.empty(n_samples)
    for lo in range(0, n_samples, CHUNK):
        n = min(CHUNK, n_samples - lo)
        X, W = _restarted_paths(seed, first_stream + lo, n, sigma.values, x, w_t, k0, grid)
        cv = np.broadcast_to(c_eval(times[:, None], X, W), X.shape)
        integ = _trapezoid_cumulative(cv, grid.dt)[-1]
        out[lo:lo + n] = np.broadcast_to(q_eval(X[-1], W[-1]), (n,)) * np.exp(-integ)
    est = McEstimate.from_samples(out, seed)
    return (est, out) if return_samples else est


@dataclass(frozen=True)
class BackwardFkScenario:
    """Inputs of the backward representation: σ with A^σ, terminal data p, q and rates c, f.

    Every evaluator takes the Brownian value as its last argument. y_eval, when given,
    is the closed form of y^x(s) used inside the z-integral.
    """

    sigma: ProcessSample
    q_eval: Callable
    p_eval: Callable
    c_eval: Callable
    f_eval: Optional[Callable] = None
    y_eval: Optional[Callable] = None


def fk_backward_z(t: float, x: float, scenario: BackwardFkScenario, n_samples: int, inner_batch: int,
                  seed: int, w_t: float = 0.0, return_samples: bool = False):
    """z^x(t) = E[-e^{-∫(A^σ/σ + c)} σ(T) p q + ∫_t^T e^{-∫_t^s(A^σ/σ + c)} σ(s) f(s, x(s)) y^x(s) ds].

    When no closed-form y is supplied, y^x(s) at each lattice time of each outer path is
    replaced by an inner Monte Carlo mean of inner_batch restarted samples. The inner
    streams start at INNER_STREAM_OFFSET so that they never overlap outer streams. The
    plug-in estimator has an O(1/√inner_batch) bias.
    """
    sg = scenario.sigma
    grid = sg.grid
    k0 = grid.time_index(t)
    times = grid.t[k0:]
    s_vals = sg.values[k0:]
    a_over_s = (sg.part("a_part") / sg.values)[k0:]
    out = np.empty(n_samples)
    for lo in range(0, n_samples, CHUNK):
        n = min(CHUNK, n_samples - lo)
        X, W = _restarted_paths(seed, lo, n, sg.values, x, w_t, k0, grid)
        rate = a_over_s[:, None] + np.broadcast_to(scenario.c_eval(times[:, None], X, W), X.shape)
        disc = np.exp(-_trapezoid_cumulative(rate, grid.dt))
        terminal = -disc[-1] * s_vals[-1] * np.broadcast_to(scenario.p_eval(X[-1], W[-1]), (n,)) \
            * np.broadcast_to(scenario.q_eval(X[-1], W[-1]), (n,))
        total = terminal
        if scenario.f_eval is not None:
            fv = np.broadcast_to(scenario.f_eval(times[:, None], X, W), X.shape)
            if np.any(fv != 0):
                if scenario.y_eval is not None:
                    yv = np.broadcast_to(scenario.y_eval(times[:, None], X, W), X.shape)
                else:
                    yv = _inner_y(scenario, X, W, k0, lo, inner_batch, seed)
                integrand = disc * s_vals[:, None] * fv * yv
                total = total + _trapezoid_cumulative(integrand, grid.dt)[-1]
        out[lo:lo + n] = total
    est = McEstimate.from_samples(out, seed)
    return (est, out) if return_samples else est


def _inner_y(scenario: BackwardFkScenario, X, W, k0, offset, inner_batch, seed):
    grid = scenario.sigma.grid
    steps, n = X.shape
    yv = np.empty_like(X)
    for i in range(n):
        for j in range(steps):
            stream = rng.INNER_STREAM_OFFSET + ((offset + i) * (grid.nt + 1) + k0 + j) * inner_batch
            yv[j, i] = fk_backward_y(grid.t[k0 + j], X[j, i], scenario.q_eval, scenario.c_eval,
                                     scenario.sigma, inner_batch, seed, w_t=W[j, i],
                                     first_stream=stream).value
    return yv


def ratio_estimate(num: McEstimate, den: McEstimate, scale: float = 1.0):
    """scale·num/den with a conservative first-order error that ignores correlation."""
    if den.value == 0:
        raise SingularityError("denominator estimate is zero")
    r = scale * num.value / den.value
    rel = (num.std_error / abs(num.value) if num.value else 0.0) + den.std_error / abs(den.value)
    if num.value == 0:
        return r, abs(scale) * num.std_error / abs(den.value)
    return r, abs(r) * rel

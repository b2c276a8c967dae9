"""Pathwise solver for the random heat equation behind the forward Cole-Hopf route.

    dG = {½σ²(t) G_xx + k(t, x - H(t)) G_x - c(t, x - H(t)) G} dt,   G(0, ·) = q

The equation has no stochastic integral. Noise enters only through the shift H, so every
ω is an ordinary parabolic problem. One step freezes the coefficients at the left
endpoint. It treats diffusion by Crank-Nicolson and advection/reaction explicitly, with
homogeneous Neumann ends.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import solve_banded

from .core import (DEFAULT_BUFFER, FieldSample, ProcessSample, SpaceTimeGrid, _frozen,
                   diff_x, shift_rows)
from .errors import ConfigurationError, DomainError, GridMismatchError, NumericalFailure


@dataclass(frozen=True)
class HeatProblem:
    grid: SpaceTimeGrid
    initial_q: np.ndarray
    sigma: ProcessSample
    k_field: FieldSample
    c_field: FieldSample
    h_path: ProcessSample
    buffer_fraction: float = field(default=DEFAULT_BUFFER)

    def __post_init__(self):
        q = _frozen(self.initial_q)
        if q.shape != (self.grid.nx,):
            raise GridMismatchError("initial_q does not match the grid")
        if not np.all(np.isfinite(q)) or np.any(q <= 0):
            i = int(np.argmax(~(np.isfinite(q) & (q > 0))))
            raise DomainError(f"initial_q must be positive, fails at x={self.grid.x[i]:.6g}")
        object.__setattr__(self, "initial_q", q)
        for name in ("sigma", "k_field", "c_field", "h_path"):
            if getattr(self, name).grid != self.grid:
                raise GridMismatchError(f"{name} lives on a different grid")
        self.sigma.require_nonzero("sigma")


def neumann_d1(u: np.ndarray, dx: float) -> np.ndarray:
    """Central first derivative along the last axis with zero slope at the ends."""
    out = np.zeros_like(u)
    out[..., 1:-1] = (u[..., 2:] - u[..., :-2]) / (2 * dx)
    return out


def neumann_d2(u: np.ndarray, dx: float) -> np.ndarray:
    """Second difference along the last axis with mirror ghost nodes."""
    out = np.empty_like(u)
    out[..., 1:-1] = u[..., 2:] - 2 * u[..., 1:-1] + u[..., :-2]
    out[..., 0] = 2 * (u[..., 1] - u[..., 0])
    out[..., -1] = 2 * (u[..., -2] - u[..., -1])
    return out / dx ** 2


def _cn_matrices(lam: float, nx: int):
    """Banded (I - ½λL) and a function applying (I + ½λL), L the Neumann Laplacian stencil."""
    ab = np.empty((3, nx))
    ab[0, :] = -0.5 * lam
    ab[1, :] = 1 + lam
    ab[2, :] = -0.5 * lam
    ab[0, 1] = -lam
    ab[2, -2] = -lam
    return ab


def check_heat_stability(grid: SpaceTimeGrid, k_values: np.ndarray):
    kmax = float(np.max(np.abs(k_values))) if k_values.size else 0.0
    if kmax > 0 and grid.dt > grid.dx / kmax:
        raise ConfigurationError(
            f"explicit advection needs dt <= dx/max|k| = {grid.dx / kmax:.3e}, got dt={grid.dt:.3e}")


def march_heat(grid: SpaceTimeGrid, q: np.ndarray, sigma: np.ndarray, k_values: np.ndarray,
               c_values: np.ndarray, shifts: np.ndarray, save_every: int = 1) -> np.ndarray:
    """Advance a batch of heat problems sharing σ, k, c but with their own shift paths.

    shifts has shape (n_batch, nt+1) and holds H(t) per problem. Returns an array
    (n_saved, n_batch, nx) with slices at time indices 0, save_every, ..., nt.
    """
    nt, nx, dx, dt = grid.nt, grid.nx, grid.dx, grid.dt
    if nt % save_every:
        raise ConfigurationError(f"save_every={save_every} must divide nt={nt}")
    check_heat_stability(grid, k_values)
    nb = shifts.shape[0]
    lower_order = bool(np.any(k_values != 0) or np.any(c_values != 0))
    G = np.tile(np.asarray(q, dtype=float), (nb, 1))
    out = np.empty((nt // save_every + 1, nb, nx))
    out[0] = G
    ab, lam_cached = None, None
    for n in range(nt):
        lam = 0.5 * sigma[n] ** 2 * dt / dx ** 2
        if lam != lam_cached:
            ab, lam_cached = _cn_matrices(lam, nx), lam
        rhs = G + 0.5 * lam * dx ** 2 * neumann_d2(G, dx)
        if lower_order:
            ks = shift_rows(np.broadcast_to(k_values[n], (nb, nx)), grid, -shifts[:, n])
            cs = shift_rows(np.broadcast_to(c_values[n], (nb, nx)), grid, -shifts[:, n])
            rhs = rhs + dt * (ks * neumann_d1(G, dx) - cs * G)
        G = solve_banded((1, 1), ab, rhs.T, check_finite=False).T
        if not np.all(G > 0):
            b, i = np.argwhere(~(G > 0))[0]
            raise NumericalFailure(
                f"G lost positivity at t={grid.t[n + 1]:.6g}, x={grid.x[i]:.6g} (problem {b})")
        if (n + 1) % save_every == 0:
            out[(n + 1) // save_every] = G
    return out


def solve_pathwise_heat(problem: HeatProblem, save_every: int = 1) -> FieldSample:
    """G on the problem grid; with save_every > 1 the returned grid keeps every save_every-th time."""
    g = problem.grid
    G = march_heat(g, problem.initial_q, problem.sigma.values, problem.k_field.values,
                   problem.c_field.values, problem.h_path.values[None, :], save_every)
    return FieldSample(g.with_nt(g.nt // save_every), G[:, 0, :])


def restrict_process(proc: ProcessSample, grid: SpaceTimeGrid) -> np.ndarray:
    """Values of a process at the lattice times of a time-coarsened grid."""
    src = proc.grid
    if (src.x_min, src.x_max, src.nx, src.horizon_T) != (grid.x_min, grid.x_max, grid.nx, grid.horizon_T) \
            or src.nt % grid.nt:
        raise GridMismatchError("process grid is not a time refinement of the field grid")
    return proc.values[::src.nt // grid.nt]


def assemble_V(G: FieldSample, h_path: ProcessSample) -> FieldSample:
    """V(t, x) = G(t, x + H(t))."""
    H = restrict_process(h_path, G.grid)
    return FieldSample(G.grid, shift_rows(G.values, G.grid, H))


def psiV_forward(V: FieldSample, ell: ProcessSample) -> FieldSample:
    """Ψ^V = ℓ(t) V_x."""
    lv = restrict_process(ell, V.grid)
    return FieldSample(V.grid, lv[:, None] * diff_x(V.values, V.grid.dx, 1))

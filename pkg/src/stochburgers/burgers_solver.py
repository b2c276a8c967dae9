"""Forward stochastic Burgers equation: linearizable coefficients and a direct lattice solver.

    dU = [5/2 σ² U_xx - σ² U U_x + (b - 2σm) U_x + e U + f] dt + ℓ U_x dW,   ℓ = -2σ

The direct solver cross-checks the Cole-Hopf route (heat solve, shift by H, log-derivative).
"""

from __future__ import annotations

from typing import Sequence

import numpy as np

from .core import (DEFAULT_BUFFER, CoefficientSet, FieldSample, ProcessSample, SemimartingaleField,
                   SpaceTimeGrid, cumulative_antiderivative, diff_x, interior_mask,
                   semimartingale_defect)
from .errors import ConfigurationError, DomainError, GridMismatchError, NumericalFailure
from .cole_hopf import forward_transform
from .heat_solver import assemble_V, march_heat, neumann_d1, neumann_d2, restrict_process
from .stochastic_paths import BrownianPath, ito_integral

# largest dt σ²/dx² allowed per scheme; the Milstein term ½ℓ²U_xx(ΔW²-dt) needs the tighter bound
STABILITY_NUMBER = {"euler": 0.2 / 2.5, "milstein": 1.0 / 60.0}


def _ell_from_sigma(sigma: ProcessSample, branch: float = -2.0) -> ProcessSample:
    if branch != -2.0:
        # ℓ = σ makes the second-order coefficient 5/2 σ² - ½ℓ² drop the parabolic balance
        raise DomainError("only the branch ℓ = -2σ gives a well-posed forward equation")
    parts = {k: (None if getattr(sigma, k) is None else branch * getattr(sigma, k))
             for k in ("a_part", "psi_part", "a_psi_part", "psi_psi_part")}
    return ProcessSample(sigma.grid, branch * sigma.values, **parts)


def build_linearizable_coefficients(sigma: ProcessSample, b: FieldSample, m: FieldSample,
                                    f: FieldSample, c_bar: ProcessSample,
                                    ell_branch: float = -2.0) -> CoefficientSet:
    grid = sigma.grid
    for name, obj in (("b", b), ("m", m), ("f", f), ("c_bar", c_bar)):
        if obj.grid != grid:
            raise GridMismatchError(f"{name} lives on a different grid")
    sigma.require_nonzero("sigma")
    ell = _ell_from_sigma(sigma, ell_branch)
    sig = sigma.values[:, None]
    lv = ell.values[:, None]
    dx = grid.dx
    e = diff_x(b.values, dx, 1) + lv * diff_x(m.values, dx, 1)
    c = cumulative_antiderivative(f.values, grid) + c_bar.values[:, None]
    shape = b.values.shape
    return CoefficientSet(
        sigma=sigma,
        a=FieldSample(grid, np.broadcast_to(sig ** 2, shape)),
        g=FieldSample(grid, np.broadcast_to(sig, shape)),
        b=b, e=FieldSample(grid, e),
        s=FieldSample(grid, np.broadcast_to(-sig, shape)),
        m=m, f=f, c=FieldSample(grid, c), d=m,
        c_bar=c_bar, ell=ell,
        k=FieldSample(grid, b.values + lv * m.values),
    )


def check_forward_stability(grid: SpaceTimeGrid, sigma: ProcessSample, scheme: str):
    if scheme not in STABILITY_NUMBER:
        raise ConfigurationError(f"unknown scheme {scheme!r}; use 'euler' or 'milstein'")
    smax2 = float(np.max(sigma.values ** 2))
    limit = STABILITY_NUMBER[scheme] * grid.dx ** 2 / smax2
    if grid.dt > limit * (1 + 1e-12):
        raise ConfigurationError(
            f"{scheme} step needs dt <= {limit:.4e} for dx={grid.dx:.4g}, got dt={grid.dt:.4e}")


def solve_forward_burgers_many(p0, coeffs: CoefficientSet, paths: Sequence[BrownianPath],
                               scheme: str = "euler", save_every: int = 1):
    """Solve the forward equation for several Brownian paths at once.

    Returns a list of (U, Ψ^U) pairs. With save_every > 1 the fields keep every
    save_every-th time slice and live on the correspondingly coarser grid.
    """
    grid = coeffs.grid
    paths = list(paths)
    for p in paths:
        if p.grid != grid:
            raise GridMismatchError("path and coefficients use different grids")
    check_forward_stability(grid, coeffs.sigma, scheme)
    if grid.nt % save_every:
        raise ConfigurationError(f"save_every={save_every} must divide nt={grid.nt}")
    p0 = np.asarray(p0, dtype=float)
    if p0.shape != (grid.nx,) or not np.all(np.isfinite(p0)):
        raise DomainError("p0 must be a finite slice on the grid")

    nt, dx, dt = grid.nt, grid.dx, grid.dt
    sig2 = coeffs.sigma.values ** 2
    ell = coeffs.ell.values
    psi_ell = coeffs.ell.part("psi_part")
    adv = coeffs.k.values if coeffs.k is not None else coeffs.b.values + ell[:, None] * coeffs.m.values
    e, f = coeffs.e.values, coeffs.f.values
    has_adv, has_e, has_f = np.any(adv != 0), np.any(e != 0), np.any(f != 0)
    DW = np.stack([p.dw for p in paths], axis=1)  # (nt, P)

    U = np.tile(p0, (len(paths), 1))
    saved = np.empty((nt // save_every + 1, len(paths), grid.nx))
    saved[0] = U
    for n in range(nt):
        Ux = neumann_d1(U, dx)
        Uxx = neumann_d2(U, dx)
        drift = 2.5 * sig2[n] * Uxx - sig2[n] * U * Ux
        if has_adv:
            drift += adv[n] * Ux
        if has_e:
            drift += e[n] * U
        if has_f:
            drift += f[n]
        dw = DW[n][:, None]
        U = U + drift * dt + ell[n] * Ux * dw
        if scheme == "milstein":
            U += 0.5 * (ell[n] ** 2 * Uxx + psi_ell[n] * Ux) * (dw * dw - dt)
        if not np.isfinite(U.sum()):
            raise NumericalFailure(f"forward Burgers blew up at step {n + 1} (t={grid.t[n + 1]:.6g})")
        if (n + 1) % save_every == 0:
            saved[(n + 1) // save_every] = U

    out_grid = grid.with_nt(nt // save_every)
    ell_saved = ell[::save_every][:, None]
    results = []
    for i in range(len(paths)):
        Ui = saved[:, i, :]
        results.append((FieldSample(out_grid, Ui), FieldSample(out_grid, ell_saved * diff_x(Ui, dx, 1))))
    return results


def solve_forward_burgers(p0, coeffs: CoefficientSet, path: BrownianPath, scheme: str = "euler",
                          save_every: int = 1):
    """Direct explicit solve; returns (U, Ψ^U = ℓ U_x)."""
    return solve_forward_burgers_many(p0, coeffs, [path], scheme, save_every)[0]


def colehopf_forward_many(p0, coeffs: CoefficientSet, paths: Sequence[BrownianPath],
                          save_every: int = 1):
    """U through the linear route: q = e^{-∫p0}, heat solve, V = G(·, x+H), U = -V_x/V.

    Returns a list of (U, H) with U on the time-coarsened grid and H on the full grid.
    """
    grid = coeffs.grid
    p0 = np.asarray(p0, dtype=float)
    logq = -cumulative_antiderivative(p0, grid)
    q = np.exp(logq - logq.max())
    H = [ito_integral(coeffs.ell, p) for p in paths]
    k = coeffs.k.values if coeffs.k is not None else coeffs.b.values + coeffs.ell.values[:, None] * coeffs.m.values
    shifts = np.stack([h.values for h in H])
    if not np.any(k != 0) and not np.any(coeffs.c.values != 0):
        # G does not depend on the path when k = c = 0
        G1 = march_heat(grid, q, coeffs.sigma.values, k, coeffs.c.values, shifts[:1], save_every)
        G = np.repeat(G1, len(paths), axis=1)
    else:
        G = march_heat(grid, q, coeffs.sigma.values, k, coeffs.c.values, shifts, save_every)
    out_grid = grid.with_nt(grid.nt // save_every)
    out = []
    for i, h in enumerate(H):
        V = assemble_V(FieldSample(out_grid, G[:, i, :]), h)
        out.append((forward_transform(V), h))
    return out


def shifted_window(grid: SpaceTimeGrid, shifts, buffer_fraction: float = DEFAULT_BUFFER) -> np.ndarray:
    """Mask (len(shifts), nx) of nodes x where both x and x + H stay inside the buffered interior.

    The Cole-Hopf route reads G at x + H(t); requiring x + H to stay in the interior as well
    keeps boundary pollution of G out of the compared window whatever the size of H.
    """
    base = interior_mask(grid, buffer_fraction)
    width = grid.x_max - grid.x_min
    lo = grid.x_min + buffer_fraction * width
    hi = grid.x_max - buffer_fraction * width
    y = grid.x[None, :] + np.asarray(shifts, dtype=float)[:, None]
    return base[None, :] & (y >= lo) & (y <= hi)


def relative_l2_gap(U: FieldSample, U_ref: FieldSample, h_path: ProcessSample,
                    buffer_fraction: float = DEFAULT_BUFFER) -> float:
    """Space-time relative L² distance over the shift-aware interior window."""
    if U.grid != U_ref.grid:
        raise GridMismatchError("compared fields use different grids")
    H = restrict_process(h_path, U.grid)
    mask = shifted_window(U.grid, H, buffer_fraction)
    diff = (U.values - U_ref.values)[mask]
    ref = U_ref.values[mask]
    return float(np.sqrt(np.sum(diff ** 2) / np.sum(ref ** 2)))


def burgers_drift(U: np.ndarray, PsiU: np.ndarray, coeffs: CoefficientSet) -> np.ndarray:
    """Bracket of the backward Burgers BSPDE with general (a, g, b, e, s, m, f)."""
    dx = coeffs.grid.dx
    sig2 = coeffs.sigma.values[:, None] ** 2
    Ux = diff_x(U, dx, 1)
    return (-0.5 * sig2 * diff_x(U, dx, 2) + coeffs.a.values * U * Ux + coeffs.g.values * U * PsiU
            + coeffs.b.values * Ux + coeffs.e.values * U + coeffs.s.values * diff_x(PsiU, dx, 1)
            + coeffs.m.values * PsiU + coeffs.f.values)


def residual_backward_burgers(U: SemimartingaleField, coeffs: CoefficientSet, path: BrownianPath,
                              buffer_fraction: float = DEFAULT_BUFFER, cumulative: bool = True) -> float:
    """Largest discrete semimartingale defect of U against the Burgers BSPDE.

    Uses the Milstein-corrected defect when U carries Ψ^{Ψ^U}. cumulative=False gives
    the plain per-step maximum.
    """
    U.require("psi_part")
    if U.grid != coeffs.grid or path.grid != coeffs.grid:
        raise GridMismatchError("field, coefficients and path must share a grid")
    drift = burgers_drift(U.f_part.values, U.psi_part.values, coeffs)
    pp = None if U.psi_psi_part is None else U.psi_psi_part.values
    return semimartingale_defect(U.f_part.values, drift, U.psi_part.values, path.dw, coeffs.grid.dt,
                                 pp, interior_mask(coeffs.grid, buffer_fraction), cumulative)

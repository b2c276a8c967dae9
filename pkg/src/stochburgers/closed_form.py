"""Exactly solvable backward families and their coefficient systems.

Family 1: V = exp(f1(x) W(t)), Ψ^V = f1 V, Ψ^{Ψ^V} = f1² V.
Family 2: V = f2(x) exp(W(t)), Ψ^V = Ψ^{Ψ^V} = V.

Both fields solve the backward heat BSPDE, and Ψ^V solves its constraint, once (m, c)
solve a pointwise 2×2 linear system. The system can be degenerate. A rank-1 consistent
system returns the minimal-norm solution, or the caller pins m. An inconsistent one raises.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .cole_hopf import build_backward_coefficients, burgers_field_from_V
from .core import (CoefficientSet, FieldSample, ProcessSample, SemimartingaleField, SpaceTimeGrid,
                   diff_x)
from .errors import ConfigurationError, DomainError, NoSolutionError
from .stochastic_paths import BrownianPath

DET_RTOL = 1e-12
CONSISTENCY_RTOL = 1e-9


@dataclass(frozen=True)
class Profile:
    """A spatial profile on the x-lattice with its first two derivatives."""

    values: np.ndarray
    d1: np.ndarray
    d2: np.ndarray
    analytic: bool = True

    @classmethod
    def from_callables(cls, grid: SpaceTimeGrid, f: Callable, df: Callable, ddf: Callable) -> "Profile":
        x = grid.x
        b = lambda v: np.broadcast_to(np.asarray(v, dtype=float), x.shape).copy()
        return cls(b(f(x)), b(df(x)), b(ddf(x)))

    @classmethod
    def from_values(cls, grid: SpaceTimeGrid, values) -> "Profile":
        """Lattice derivatives as the fallback when no analytic form is known."""
        v = np.asarray(values, dtype=float)
        return cls(v, diff_x(v, grid.dx, 1), diff_x(v, grid.dx, 2), analytic=False)


def named_profile(grid: SpaceTimeGrid, kind: str, **p) -> Profile:
    """Profiles used by the scenario config, each with exact derivatives."""
    x = grid.x
    if kind == "constant":
        v = float(p.get("value", 1.0))
        return Profile.from_callables(grid, lambda x: v, lambda x: 0.0, lambda x: 0.0)
    if kind == "sin":
        a, k, ph, off = (float(p.get(n, d)) for n, d in
                         (("amplitude", 1.0), ("frequency", 1.0), ("phase", 0.0), ("offset", 0.0)))
        return Profile.from_callables(grid, lambda x: a * np.sin(k * x + ph) + off,
                                      lambda x: a * k * np.cos(k * x + ph),
                                      lambda x: -a * k * k * np.sin(k * x + ph))
    if kind == "linear_sin":
        s, a = float(p.get("slope", 0.5)), float(p.get("amplitude", 0.3))
        return Profile.from_callables(grid, lambda x: s * x + a * np.sin(x),
                                      lambda x: s + a * np.cos(x), lambda x: -a * np.sin(x))
    if kind == "quadratic":
        c0, c2 = float(p.get("c0", 1.0)), float(p.get("c2", 1.0))
        return Profile.from_callables(grid, lambda x: c0 + c2 * x * x, lambda x: 2 * c2 * x,
                                      lambda x: 2 * c2)
    if kind == "exp":
        s, r, off = float(p.get("scale", 1.0)), float(p.get("rate", 1.0)), float(p.get("offset", 0.0))
        return Profile.from_callables(grid, lambda x: off + s * np.exp(r * x),
                                      lambda x: s * r * np.exp(r * x), lambda x: s * r * r * np.exp(r * x))
    if kind == "tanh":
        s = float(p.get("scale", 1.0))
        return Profile.from_callables(grid, lambda x: s * np.tanh(x),
                                      lambda x: s / np.cosh(x) ** 2,
                                      lambda x: -2 * s * np.tanh(x) / np.cosh(x) ** 2)
    if kind == "tabulated":
        vals = np.asarray(p.get("values", []), dtype=float)
        if vals.shape != x.shape:
            raise ConfigurationError(f"tabulated profile needs {x.size} values, got {vals.size}")
        return Profile.from_values(grid, vals)
    raise ConfigurationError(f"unknown profile kind {kind!r}")


# sigma processes --------------------------------------------------------------

def geometric_sigma(grid: SpaceTimeGrid, path: BrownianPath, sigma0: float, kappa: float) -> ProcessSample:
    """σ(t) = σ0 exp(κ W(t)); its decomposition parts follow from Itô's formula."""
    s = sigma0 * np.exp(kappa * path.w)
    return ProcessSample(grid, s, a_part=0.5 * kappa ** 2 * s, psi_part=kappa * s,
                         a_psi_part=0.5 * kappa ** 3 * s, psi_psi_part=kappa ** 2 * s)


def linear_sigma(grid: SpaceTimeGrid, sigma0: float, slope: float) -> ProcessSample:
    """Deterministic σ(t) = σ0 + slope t."""
    return ProcessSample.deterministic(grid, lambda t: sigma0 + slope * t, lambda t: slope + 0 * t)


# the 2x2 systems ------------------------------------------------------------

@dataclass(frozen=True)
class CoefficientSolution:
    m: np.ndarray
    c: np.ndarray
    dependent: np.ndarray
    condition: np.ndarray

    def __iter__(self):
        return iter((self.m, self.c))


def solve_pointwise(a11, a12, b1, a21, a22, b2, m_pin=None, where: Optional[Callable] = None):
    """Solve a11 m + a12 c = b1, a21 m + a22 c = b2 pointwise (broadcasting).

    Regular points use Cramer's rule. Rank-1 consistent points return the minimal-norm
    solution, or the pinned m with the matching c. Inconsistent points raise
    NoSolutionError naming the first one.
    """
    arrs = np.broadcast_arrays(*(np.asarray(v, dtype=float) for v in (a11, a12, b1, a21, a22, b2)))
    a11, a12, b1, a21, a22, b2 = arrs
    det = a11 * a22 - a12 * a21
    scale = np.maximum(np.abs(a11), np.abs(a12)) * np.maximum(np.abs(a21), np.abs(a22))
    regular = np.abs(det) > DET_RTOL * scale
    m = np.zeros_like(det)
    c = np.zeros_like(det)
    safe = np.where(regular, det, 1.0)
    m = np.where(regular, (b1 * a22 - a12 * b2) / safe, m)
    c = np.where(regular, (a11 * b2 - b1 * a21) / safe, c)
    cond = np.where(scale > 0, np.abs(det) / np.where(scale > 0, scale, 1.0), 0.0)

    dep = ~regular
    if np.any(dep):
        n1 = np.hypot(a11, a12)
        n2 = np.hypot(a21, a22)
        use1 = n1 >= n2
        am = np.where(use1, a11, a21)
        ac = np.where(use1, a12, a22)
        bb = np.where(use1, b1, b2)
        nn = np.where(use1, n1, n2)
        r1 = np.sqrt(a11 ** 2 + a12 ** 2 + b1 ** 2)
        r2 = np.sqrt(a21 ** 2 + a22 ** 2 + b2 ** 2)
        incons = np.maximum(np.abs(a21 * b1 - a11 * b2), np.abs(a22 * b1 - a12 * b2))
        zero_rows = nn == 0
        bad = dep & ((incons > CONSISTENCY_RTOL * r1 * r2) | (zero_rows & (np.hypot(b1, b2) > 0)))
        if m_pin is None:
            nn2 = np.where(zero_rows, 1.0, nn ** 2)
            md, cd = bb * am / nn2, bb * ac / nn2
        else:
            pin = np.broadcast_to(np.asarray(m_pin, dtype=float), det.shape)
            md = pin
            ok_c = np.abs(ac) > 0
            cd = np.where(ok_c, (bb - am * pin) / np.where(ok_c, ac, 1.0), 0.0)
            # with no c-coefficient the pinned m itself must satisfy the equation
            bad = bad | (dep & ~ok_c & ~zero_rows & (np.abs(am * pin - bb) > CONSISTENCY_RTOL * (np.abs(bb) + np.abs(am * pin) + 1e-300)))
        if np.any(bad):
            idx = tuple(int(i) for i in np.argwhere(bad)[0])
            loc = where(idx) if where is not None else f"index {idx}"
            raise NoSolutionError(
                f"coefficient system is singular and inconsistent at {int(bad.sum())} point(s); first at {loc}")
        m = np.where(dep, np.where(zero_rows, 0.0 if m_pin is None else md, md), m)
        c = np.where(dep, np.where(zero_rows, 0.0, cd), c)
    return CoefficientSolution(m, c, dep, cond)


def _sigma_triplet(sigma_parts):
    s, As, Ps = (np.asarray(v, dtype=float) for v in sigma_parts)
    if np.any(s == 0):
        raise DomainError("sigma must be nonzero")
    return s, As, Ps


def example1_system(f1, f1p, f1pp, sigma_parts, w):
    """Rows (a11, a12, b1, a21, a22, b2) of the family-1 coefficient system."""
    S, As, Ps = _sigma_triplet(sigma_parts)
    f, fp, fpp, W = (np.asarray(v, dtype=float) for v in (f1, f1p, f1pp, w))
    a11 = S * fp * W + f
    a12 = np.ones_like(a11)
    b1 = 0.5 * f ** 2 + 0.5 * S ** 2 * (fpp + fp ** 2 * W) * W + S * fp * (1 + f * W)
    a21 = S * fp * (1 + f * W) - Ps * f / S + f ** 2
    a22 = f + 0 * a21
    b2 = (0.5 * f ** 3 + 0.5 * S ** 2 * (fpp + 2 * fp ** 2 * W + f * fpp * W + f * fp ** 2 * W ** 2)
          - Ps * fp * (1 + f * W) - (As / S - Ps ** 2 / S ** 2) * f + S * f * fp * (2 + f * W)
          - Ps / S * f ** 2)
    return a11, a12, b1, a21, a22, b2


def example2_system(f2, f2p, f2pp, sigma_parts):
    S, As, Ps = _sigma_triplet(sigma_parts)
    g, gp, gpp = (np.asarray(v, dtype=float) for v in (f2, f2p, f2pp))
    a11 = S * gp + g
    a12 = g + 0 * a11
    b1 = 0.5 * g + 0.5 * S ** 2 * gpp + S * gp
    a21 = S * gp - Ps * g / S + g
    a22 = g + 0 * a21
    b2 = 0.5 * g + 0.5 * S ** 2 * gpp - Ps * gp - (As / S - Ps ** 2 / S ** 2) * g + S * gp - Ps / S * g
    return a11, a12, b1, a21, a22, b2


def example1_solve_coefficients(f1, f1p, f1pp, sigma_parts, w, t=0.0, m_pin=None, where=None):
    """(m, c) solving the family-1 system at the query point(s); t is carried for the caller's bookkeeping."""
    return solve_pointwise(*example1_system(f1, f1p, f1pp, sigma_parts, w), m_pin=m_pin, where=where)


def example2_solve_coefficients(f2, f2p, f2pp, sigma_parts, t=0.0, m_pin=None, where=None):
    if np.any(np.asarray(f2) <= 0):
        raise DomainError("f2 must be positive")
    return solve_pointwise(*example2_system(f2, f2p, f2pp, sigma_parts), m_pin=m_pin, where=where)


def system_residual(system, m, c) -> np.ndarray:
    """Back-substitution residual of (m, c) in both equations."""
    a11, a12, b1, a21, a22, b2 = system
    return np.maximum(np.abs(a11 * m + a12 * c - b1), np.abs(a21 * m + a22 * c - b2))


# fields --------------------------------------------------------------------------

def _as_profile(f, grid: SpaceTimeGrid) -> Profile:
    return f if isinstance(f, Profile) else Profile.from_values(grid, f)


def example1_fields(f1, path: BrownianPath) -> SemimartingaleField:
    grid = path.grid
    f = _as_profile(f1, grid).values[None, :]
    V = np.exp(f * path.w[:, None])
    fs = lambda a: FieldSample(grid, a)
    return SemimartingaleField(f_part=fs(V), psi_part=fs(f * V), a_part=fs(0.5 * f ** 2 * V),
                               a_psi_part=fs(0.5 * f ** 3 * V), psi_psi_part=fs(f ** 2 * V),
                               psi3_part=fs(f ** 3 * V))


def example2_fields(f2, path: BrownianPath) -> SemimartingaleField:
    grid = path.grid
    g = _as_profile(f2, grid).values
    if np.any(g <= 0):
        i = int(np.argmax(g <= 0))
        raise DomainError(f"f2 must be positive; fails at x={grid.x[i]:.6g}")
    V = g[None, :] * np.exp(path.w)[:, None]
    fv = FieldSample(grid, V)
    half = FieldSample(grid, 0.5 * V)
    return SemimartingaleField(f_part=fv, psi_part=fv, a_part=half, a_psi_part=half,
                               psi_psi_part=fv, psi3_part=fv)


def finance_parameters(family: int, alpha_or_beta: float, sigma: float):
    """(m, p, c̄) for the constant pricing families."""
    if family not in (1, 2):
        raise DomainError(f"family must be 1 or 2, got {family}")
    if alpha_or_beta <= 0:
        raise DomainError("alpha (family 1) or beta (family 2) must be positive")
    if sigma >= 0:
        raise DomainError("sigma must be negative so that the claim p is positive")
    if family == 1:
        return 0.5 * alpha_or_beta, -alpha_or_beta / sigma, 0.0
    return 0.5, -1.0 / sigma, 0.0


# full lattice scenarios ----------------------------------------------------------------

@dataclass(frozen=True)
class BackwardScenario:
    family: int
    V: SemimartingaleField
    U: SemimartingaleField
    coeffs: CoefficientSet
    path: BrownianPath
    profile: Profile
    dependent_fraction: float
    min_condition: float


def coefficient_fields(family: int, profile: Profile, sigma: ProcessSample, path: BrownianPath,
                       m_pin=None):
    """Lattice (m, c) for a family along one path, plus the solution diagnostics."""
    grid = path.grid
    parts = (sigma.values[:, None], sigma.part("a_part")[:, None], sigma.part("psi_part")[:, None])
    where = lambda idx: f"t={grid.t[idx[0]]:.6g}, x={grid.x[idx[1]]:.6g}"
    f, fp, fpp = (np.broadcast_to(v, (grid.nt + 1, grid.nx)) for v in (profile.values, profile.d1, profile.d2))
    if family == 1:
        sol = example1_solve_coefficients(f, fp, fpp, parts, path.w[:, None], m_pin=m_pin, where=where)
    elif family == 2:
        sol = example2_solve_coefficients(f, fp, fpp, parts, m_pin=m_pin, where=where)
    else:
        raise ConfigurationError(f"family must be 1 or 2, got {family}")
    return FieldSample(grid, sol.m), FieldSample(grid, sol.c), sol


def backward_scenario(family: int, profile: Profile, sigma: ProcessSample, path: BrownianPath,
                      m_pin=None, m_shift: float = 0.0) -> BackwardScenario:
    """Fields, solved coefficients and the Burgers-side U for one family along one path.

    m_shift adds a constant to the solved m after the solve; it exists for negative controls.
    """
    V = example1_fields(profile, path) if family == 1 else example2_fields(profile, path)
    m, c, sol = coefficient_fields(family, profile, sigma, path, m_pin)
    if m_shift:
        m = FieldSample(m.grid, m.values + m_shift)
    coeffs = build_backward_coefficients(sigma, m, c)
    U = burgers_field_from_V(V, sigma)
    return BackwardScenario(family, V, U, coeffs, path, profile, float(np.mean(sol.dependent)),
                            float(np.min(sol.condition)))

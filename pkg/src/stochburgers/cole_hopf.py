"""Cole-Hopf maps, the point transformation and residual checks for the backward constraints.

Conventions for the backward problem: d = m, e = σ m_x, c = -∫f dx + c̄, a = σ², g = σ,
b = σm, s = -σ.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .core import (DEFAULT_BUFFER, CoefficientSet, FieldSample, ProcessSample, SemimartingaleField,
                   SpaceTimeGrid, diff_x, interior_mask, semimartingale_defect)
from .errors import DomainError, GridMismatchError, MissingPartError, SingularityError
from .stochastic_paths import BrownianPath

SINGULAR_RTOL = 1e-8


def _require_positive(values: np.ndarray, grid: Optional[SpaceTimeGrid], what: str = "V"):
    if np.all(values > 0):
        return
    idx = tuple(int(i) for i in np.argwhere(~(values > 0))[0])
    where = f"index {idx}"
    if grid is not None and len(idx) == 2:
        where += f" (t={grid.t[idx[0]]:.6g}, x={grid.x[idx[1]]:.6g})"
    elif grid is not None and len(idx) == 1:
        where += f" (x={grid.x[idx[0]]:.6g})"
    raise DomainError(f"{what} must be positive; first offending node at {where}")


def _sigma_rows(sigma: ProcessSample, grid: SpaceTimeGrid, name: str = "values") -> np.ndarray:
    if sigma.grid != grid:
        raise GridMismatchError("sigma lives on a different grid")
    return sigma.part(name)[:, None] if name != "values" else sigma.values[:, None]


def forward_transform(V: FieldSample) -> FieldSample:
    """U = -V_x / V."""
    _require_positive(V.values, V.grid)
    return FieldSample(V.grid, -diff_x(V.values, V.grid.dx, 1) / V.values)


def generalized_transform(V: FieldSample, PsiV: FieldSample, sigma: ProcessSample) -> FieldSample:
    """U = -V_x / V - Ψ^V / (σ V)."""
    _require_positive(V.values, V.grid)
    sigma.require_nonzero()
    if PsiV.grid != V.grid:
        raise GridMismatchError("Ψ^V lives on a different grid")
    s = _sigma_rows(sigma, V.grid)
    return FieldSample(V.grid, -diff_x(V.values, V.grid.dx, 1) / V.values - PsiV.values / (s * V.values))


def psiU_from_V(V: FieldSample, PsiV: FieldSample, PsiPsiV: FieldSample, sigma: ProcessSample) -> FieldSample:
    """Martingale density of the generalized transform, written out term by term."""
    _require_positive(V.values, V.grid)
    sigma.require_nonzero()
    dx = V.grid.dx
    v, pv, ppv = V.values, PsiV.values, PsiPsiV.values
    s = _sigma_rows(sigma, V.grid)
    ps = _sigma_rows(sigma, V.grid, "psi_part")
    out = (-ppv / (s * v) + pv ** 2 / (s * v ** 2) + ps * pv / (s ** 2 * v)
           - diff_x(pv, dx, 1) / v + pv * diff_x(v, dx, 1) / v ** 2)
    return FieldSample(V.grid, out)


# noise-direction jets -----------------------------------------------------

class Jet:
    """Truncated Taylor series F + ε DF + ε² D²F/2 in the martingale-density derivation D.

    D acts like a derivative: D(FG) = F DG + G DF and D commutes with ∂x, so
    products and quotients of jets give Ψ and Ψ^Ψ of composite fields.
    """

    def __init__(self, coeffs, dx: float):
        self.c = [np.asarray(a, dtype=float) for a in coeffs]
        self.dx = dx

    @classmethod
    def from_parts(cls, parts, dx):
        # parts are F, DF, D²F, ...; Taylor coefficients divide by k!
        fact = [1.0, 1.0, 2.0, 6.0]
        return cls([p / fact[i] for i, p in enumerate(parts)], dx)

    def parts(self):
        fact = [1.0, 1.0, 2.0, 6.0]
        return [a * fact[i] for i, a in enumerate(self.c)]

    def _lift(self, other):
        if isinstance(other, Jet):
            return other
        return Jet([other] + [0.0] * (len(self.c) - 1), self.dx)

    def __add__(self, other):
        o = self._lift(other)
        return Jet([a + b for a, b in zip(self.c, o.c)], self.dx)

    __radd__ = __add__

    def __neg__(self):
        return Jet([-a for a in self.c], self.dx)

    def __sub__(self, other):
        return self + (-self._lift(other))

    def __rsub__(self, other):
        return self._lift(other) + (-self)

    def __mul__(self, other):
        o = self._lift(other)
        n = min(len(self.c), len(o.c))
        return Jet([sum(self.c[i] * o.c[k - i] for i in range(k + 1)) for k in range(n)], self.dx)

    __rmul__ = __mul__

    def reciprocal(self):
        a = self.c
        inv = [1.0 / a[0]]
        for k in range(1, len(a)):
            inv.append(-sum(a[i] * inv[k - i] for i in range(1, k + 1)) * inv[0])
        return Jet(inv, self.dx)

    def __truediv__(self, other):
        return self * self._lift(other).reciprocal()

    def __rtruediv__(self, other):
        return self._lift(other) * self.reciprocal()

    def ddx(self):
        return Jet([diff_x(np.broadcast_to(a, self.c[0].shape), self.dx, 1) for a in self.c], self.dx)


def _sigma_jet(sigma: ProcessSample, grid: SpaceTimeGrid, order: int) -> Jet:
    names = ["values", "psi_part", "psi_psi_part"][:order]
    parts = [np.broadcast_to(_sigma_rows(sigma, grid, nm), (grid.nt + 1, grid.nx)) for nm in names]
    return Jet.from_parts(parts, grid.dx)


def burgers_field_from_V(V: SemimartingaleField, sigma: ProcessSample) -> SemimartingaleField:
    """U = -V_x/V - Ψ^V/(σV) together with Ψ^U and, when V has Ψ^{Ψ^{Ψ^V}}, also Ψ^{Ψ^U}."""
    V.require("psi_part", "psi_psi_part")
    grid = V.grid
    second = V.psi3_part is not None
    order = 3 if second else 2
    vp = [V.f_part.values, V.psi_part.values, V.psi_psi_part.values]
    if second:
        vp.append(V.psi3_part.values)
    _require_positive(vp[0], grid)
    v = Jet.from_parts(vp[:order], grid.dx)
    pv = Jet.from_parts(vp[1:order + 1], grid.dx)
    s = _sigma_jet(sigma, grid, order)
    u = -(v.ddx() / v) - pv / (s * v)
    parts = u.parts()
    return SemimartingaleField(
        f_part=FieldSample(grid, parts[0]),
        psi_part=FieldSample(grid, parts[1]),
        psi_psi_part=FieldSample(grid, parts[2]) if second else None,
    )


# terminal compatibility and the point transformation ---------------------

def terminal_compatibility_residual(p, q, psiV_T, sigma_T: float, grid: SpaceTimeGrid,
                                    buffer_fraction: float = 0.0) -> float:
    """max |p + ∂x ln q + Ψ^V(T)/(σ(T) q)| over interior nodes."""
    q = np.asarray(q, dtype=float)
    _require_positive(q, grid, "q")
    if sigma_T == 0:
        raise DomainError("sigma(T) must be nonzero")
    val = np.asarray(p, dtype=float) + diff_x(q, grid.dx, 1) / q + np.asarray(psiV_T) / (sigma_T * q)
    val = np.broadcast_to(val, q.shape)
    return float(np.max(np.abs(val[interior_mask(grid, buffer_fraction)])))


def _check_y(y):
    if np.any(np.asarray(y) == 0):
        raise SingularityError("y = 0 in the point transformation")


def point_transform_pde_residual(sigma, x, y, z, h):
    """Left side of the point-transform PDE for 𝒴 = -z/(σy), exact partial derivatives."""
    _check_y(y)
    sigma, y, z, h = (np.asarray(a, dtype=float) for a in (sigma, y, z, h))
    Y = -z / (sigma * y)
    Yx, Yxx, Yxy, Yxz, Yzz = 0.0, 0.0, 0.0, 0.0, 0.0
    Yy = z / (sigma * y ** 2)
    Yz = -1.0 / (sigma * y)
    Yyy = -2.0 * z / (sigma * y ** 3)
    Yyz = 1.0 / (sigma * y ** 2)
    res = (0.5 * sigma ** 2 * Yxx + 0.5 * z ** 2 * Yyy + 0.5 * h ** 2 * Yzz + sigma * z * Yxy
           + h * z * Yyz + sigma * h * Yxz
           - sigma ** 2 * Y * Yx - sigma * z * Y * Yy - sigma * h * Y * Yz)
    return res if res.ndim else float(res)


def point_transform_z(sigma, z, h, y):
    """𝒵 = σ𝒴_x + z𝒴_y + h𝒴_z for 𝒴 = -z/(σy)."""
    _check_y(y)
    sigma, z, h, y = (np.asarray(a, dtype=float) for a in (sigma, z, h, y))
    res = z * z / (sigma * y ** 2) - h / (sigma * y)
    return res if res.ndim else float(res)


@dataclass(frozen=True)
class TransformKernel:
    """r-field and σ with the decomposition parts the general point transformation needs."""

    r_field: SemimartingaleField
    sigma: ProcessSample

    def __post_init__(self):
        if self.r_field.grid != self.sigma.grid:
            raise GridMismatchError("r and sigma live on different grids")
        self.sigma.require_nonzero()

    @classmethod
    def zero(cls, sigma: ProcessSample) -> "TransformKernel":
        z = FieldSample.constant(sigma.grid, 0.0)
        return cls(SemimartingaleField(f_part=z, psi_part=z, a_part=z, a_psi_part=z, psi_psi_part=z), sigma)


def eval_general_Y(kernel: TransformKernel, t: float, x, y, z):
    """𝒴 = -z/(σy - r) + Ψ^σ/σ² + (σ r_x - Ψ^σ y + Ψ^r)/(σ(σy - r)) at lattice time t."""
    grid = kernel.sigma.grid
    n = grid.time_index(t)
    s = kernel.sigma.values[n]
    ps = kernel.sigma.part("psi_part")[n]
    xs = np.asarray(x, dtype=float)
    r = np.interp(xs, grid.x, kernel.r_field.f_part.values[n])
    rx = np.interp(xs, grid.x, diff_x(kernel.r_field.f_part.values[n], grid.dx, 1))
    pr = np.interp(xs, grid.x, kernel.r_field.psi_part.values[n])
    y = np.asarray(y, dtype=float)
    z = np.asarray(z, dtype=float)
    den = s * y - r
    if np.any(np.abs(den) < SINGULAR_RTOL * (1 + np.abs(s * y))):
        raise SingularityError(f"σy - r vanishes at t={t:.6g}")
    val = -z / den + ps / s ** 2 + (s * rx - ps * y + pr) / (s * den)
    return val if np.ndim(val) else float(val)


# coefficient conventions for the backward problem -------------------------

def build_backward_coefficients(sigma: ProcessSample, m: FieldSample, c: FieldSample,
                                c_bar: Optional[ProcessSample] = None) -> CoefficientSet:
    """Coefficients of the backward Burgers / heat pair: d = m, e = σ m_x, f = -c_x."""
    grid = sigma.grid
    if m.grid != grid or c.grid != grid:
        raise GridMismatchError("m and c must live on the sigma grid")
    sigma.require_nonzero()
    sig = sigma.values[:, None]
    shape = m.values.shape
    dx = grid.dx
    ell = ProcessSample(grid, -2.0 * sigma.values)
    return CoefficientSet(
        sigma=sigma,
        a=FieldSample(grid, np.broadcast_to(sig ** 2, shape)),
        g=FieldSample(grid, np.broadcast_to(sig, shape)),
        b=FieldSample(grid, sig * m.values),
        e=FieldSample(grid, sig * diff_x(m.values, dx, 1)),
        s=FieldSample(grid, np.broadcast_to(-sig, shape)),
        m=m, f=FieldSample(grid, -diff_x(c.values, dx, 1)), c=c, d=m,
        c_bar=c_bar if c_bar is not None else ProcessSample.constant(grid, 0.0),
        ell=ell,
    )


# residual checks ------------------------------------------------------------

def _sigma_parts(coeffs: CoefficientSet):
    sg = coeffs.sigma
    return (sg.values[:, None], sg.part("a_part")[:, None], sg.part("psi_part")[:, None],
            sg.part("a_psi_part")[:, None], sg.part("psi_psi_part")[:, None])


def _check_grids(*objs):
    grids = {o.grid for o in objs}
    if len(grids) != 1:
        raise GridMismatchError("fields, coefficients and path must share one grid")


def heat_bspde_drift(V: np.ndarray, PsiV: np.ndarray, coeffs: CoefficientSet) -> np.ndarray:
    dx = coeffs.grid.dx
    s = coeffs.sigma.values[:, None]
    d, c = coeffs.d.values, coeffs.c.values
    return (-0.5 * s ** 2 * diff_x(V, dx, 2) + s * d * diff_x(V, dx, 1) - s * diff_x(PsiV, dx, 1)
            + d * PsiV + c * V)


def residual_heat_bspde(V: SemimartingaleField, coeffs: CoefficientSet, path: BrownianPath,
                        buffer_fraction: float = DEFAULT_BUFFER, cumulative: bool = True) -> float:
    """Discrete defect of V against the linear backward heat BSPDE with d = m."""
    V.require("psi_part")
    _check_grids(V, coeffs, path)
    drift = heat_bspde_drift(V.f_part.values, V.psi_part.values, coeffs)
    pp = None if V.psi_psi_part is None else V.psi_psi_part.values
    return semimartingale_defect(V.f_part.values, drift, V.psi_part.values, path.dw, coeffs.grid.dt,
                                 pp, interior_mask(coeffs.grid, buffer_fraction), cumulative)


def mid_constraint_drift(PsiV: np.ndarray, PsiPsiV: np.ndarray, coeffs: CoefficientSet) -> np.ndarray:
    dx = coeffs.grid.dx
    s, As, Ps, _, _ = _sigma_parts(coeffs)
    m, c = coeffs.m.values, coeffs.c.values
    return (-0.5 * s ** 2 * diff_x(PsiV, dx, 2) + (s * m + Ps) * diff_x(PsiV, dx, 1)
            + (As / s - Ps * m / s + c - Ps ** 2 / s ** 2) * PsiV
            - s * diff_x(PsiPsiV, dx, 1) + (Ps / s + m) * PsiPsiV)


def residual_mid_constraint(V: SemimartingaleField, coeffs: CoefficientSet, path: BrownianPath,
                            buffer_fraction: float = DEFAULT_BUFFER, cumulative: bool = True) -> float:
    """Discrete defect of Ψ^V against its BSPDE constraint."""
    V.require("psi_part", "psi_psi_part")
    _check_grids(V, coeffs, path)
    drift = mid_constraint_drift(V.psi_part.values, V.psi_psi_part.values, coeffs)
    p3 = None if V.psi3_part is None else V.psi3_part.values
    return semimartingale_defect(V.psi_part.values, drift, V.psi_psi_part.values, path.dw,
                                 coeffs.grid.dt, p3, interior_mask(coeffs.grid, buffer_fraction),
                                 cumulative)


def r_bspde_drift(r: np.ndarray, psi_r: np.ndarray, coeffs: CoefficientSet) -> np.ndarray:
    dx = coeffs.grid.dx
    s, As, Ps, _, _ = _sigma_parts(coeffs)
    m, c = coeffs.m.values, coeffs.c.values
    return (-0.5 * s ** 2 * diff_x(r, dx, 2) + (Ps + s * m) * diff_x(r, dx, 1)
            + (s * c - Ps * m - Ps ** 2 / s + As) * r / s - s * diff_x(psi_r, dx, 1)
            + (Ps / s + m) * psi_r)


def residual_r_bspde(kernel: TransformKernel, coeffs: CoefficientSet, path: BrownianPath,
                     buffer_fraction: float = DEFAULT_BUFFER, cumulative: bool = True) -> float:
    """Discrete defect of r against its linear BSPDE."""
    r = kernel.r_field
    _check_grids(r, coeffs, path)
    drift = r_bspde_drift(r.f_part.values, r.psi_part.values, coeffs)
    pp = None if r.psi_psi_part is None else r.psi_psi_part.values
    return semimartingale_defect(r.f_part.values, drift, r.psi_part.values, path.dw, coeffs.grid.dt,
                                 pp, interior_mask(coeffs.grid, buffer_fraction), cumulative)


def _drift_density(F: SemimartingaleField, which: str, path: BrownianPath) -> np.ndarray:
    """A^{Ψ^F}, or a Milstein-corrected difference quotient when it is not attached."""
    if F.a_psi_part is not None:
        return F.a_psi_part.values
    if F.psi_psi_part is None:
        raise MissingPartError(f"{which} needs A^Ψ or Ψ^Ψ to rebuild it")
    P, PP = F.psi_part.values, F.psi_psi_part.values
    dt = F.grid.dt
    dw = path.dw[:, None]
    corr = 0.0 if F.psi3_part is None else 0.5 * F.psi3_part.values[:-1] * (dw * dw - dt)
    out = np.empty_like(P)
    out[:-1] = (P[1:] - P[:-1] - PP[:-1] * dw - corr) / dt
    out[-1] = out[-2]
    return out


def big_constraint_field(kernel: TransformKernel, V: SemimartingaleField, coeffs: CoefficientSet,
                         path: BrownianPath) -> np.ndarray:
    """Left side of the constraint linking r, Ψ^V and σ, evaluated termwise on the lattice."""
    V.require("psi_part", "psi_psi_part")
    r = kernel.r_field
    r.require("psi_part")
    _check_grids(V, r, coeffs, path)
    dx = coeffs.grid.dx
    s, As, Ps, APs, PPs = _sigma_parts(coeffs)
    m, c = coeffs.m.values, coeffs.c.values
    rv = r.f_part.values
    pr = r.psi_part.values
    ppr = r.psi_psi_part.values if r.psi_psi_part is not None else np.zeros_like(rv)
    apr = _drift_density(r, "r", path) if (r.a_psi_part is not None or r.psi_psi_part is not None) \
        else np.zeros_like(rv)
    pv, ppv = V.psi_part.values, V.psi_psi_part.values
    apv = _drift_density(V, "V", path)
    return ((-2 * Ps ** 2 / s + PPs) * diff_x(rv, dx, 1)
            + (5 * Ps ** 3 / s ** 2 - 3 * PPs * Ps / s - PPs * m + 2 * Ps ** 2 * m / s
               - 2 * As * Ps / s + APs) * rv / s
            - 0.5 * s ** 2 * diff_x(pr, dx, 2) + (2 * Ps + s * m) * diff_x(pr, dx, 1)
            + (2 * As / s - 5 * Ps ** 2 / s ** 2 + PPs / s + c - 2 * Ps * m / s) * pr
            - s * diff_x(ppr, dx, 1) + (2 * Ps / s + m) * ppr
            + 0.5 * s ** 3 * diff_x(pv, dx, 2) - s * (s * m + Ps) * diff_x(pv, dx, 1)
            - (As - Ps * m + s * c - Ps ** 2 / s) * pv
            + s * apv + s ** 2 * diff_x(ppv, dx, 1) - (s * m + Ps) * ppv - apr)


def residual_big_constraint(kernel: TransformKernel, V: SemimartingaleField, coeffs: CoefficientSet,
                            path: BrownianPath, buffer_fraction: float = DEFAULT_BUFFER) -> float:
    val = big_constraint_field(kernel, V, coeffs, path)
    return float(np.max(np.abs(val[:-1][:, interior_mask(coeffs.grid, buffer_fraction)])))

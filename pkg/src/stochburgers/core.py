"""Lattice, field containers and the finite-difference utilities every solver shares."""

from __future__ import annotations

from dataclasses import dataclass, replace
from functools import cached_property
from typing import Callable, Optional

import numpy as np
from scipy.integrate import cumulative_trapezoid

from .errors import DomainError, GridMismatchError, MissingPartError, SizingError

DEFAULT_BUFFER = 0.2


@dataclass(frozen=True)
class SpaceTimeGrid:
    x_min: float
    x_max: float
    nx: int
    horizon_T: float
    nt: int

    def __post_init__(self):
        if not (np.isfinite(self.x_min) and np.isfinite(self.x_max)) or self.x_min >= self.x_max:
            raise SizingError(f"need x_min < x_max, got [{self.x_min}, {self.x_max}]")
        if int(self.nx) != self.nx or self.nx < 3:
            raise SizingError(f"nx must be an integer >= 3, got {self.nx}")
        if int(self.nt) != self.nt or self.nt < 1:
            raise SizingError(f"nt must be a positive integer, got {self.nt}")
        if not np.isfinite(self.horizon_T) or self.horizon_T <= 0:
            raise SizingError(f"horizon_T must be positive, got {self.horizon_T}")
        object.__setattr__(self, "x_min", float(self.x_min))
        object.__setattr__(self, "x_max", float(self.x_max))
        object.__setattr__(self, "horizon_T", float(self.horizon_T))
        object.__setattr__(self, "nx", int(self.nx))
        object.__setattr__(self, "nt", int(self.nt))

    @property
    def dx(self) -> float:
        return (self.x_max - self.x_min) / (self.nx - 1)

    @property
    def dt(self) -> float:
        return self.horizon_T / self.nt

    @cached_property
    def x(self) -> np.ndarray:
        out = np.linspace(self.x_min, self.x_max, self.nx)
        out.flags.writeable = False
        return out

    @cached_property
    def t(self) -> np.ndarray:
        out = np.linspace(0.0, self.horizon_T, self.nt + 1)
        out.flags.writeable = False
        return out

    def refined(self, space: int = 2, time: int = 4) -> "SpaceTimeGrid":
        """Grid with dx/space and dt/time on the same domain."""
        return replace(self, nx=(self.nx - 1) * space + 1, nt=self.nt * time)

    def with_nt(self, nt: int) -> "SpaceTimeGrid":
        return replace(self, nt=nt)

    def time_index(self, t: float) -> int:
        """Lattice index of time t; t must sit on the lattice up to rounding."""
        k = int(round(t / self.dt))
        if k < 0 or k > self.nt or abs(k * self.dt - t) > 1e-9 * max(1.0, self.horizon_T):
            raise DomainError(f"time {t} is not a lattice time of this grid")
        return k


def _frozen(a) -> np.ndarray:
    out = np.array(a, dtype=float)
    out.flags.writeable = False
    return out


def _check_finite(name: str, values: np.ndarray):
    if not np.all(np.isfinite(values)):
        idx = np.argwhere(~np.isfinite(values))[0]
        raise DomainError(f"{name} has a non-finite entry at index {tuple(int(i) for i in idx)}")


@dataclass(frozen=True)
class FieldSample:
    """One sample of a random field on the lattice, values[time index, space index]."""

    grid: SpaceTimeGrid
    values: np.ndarray

    def __post_init__(self):
        v = _frozen(self.values)
        if v.shape != (self.grid.nt + 1, self.grid.nx):
            raise GridMismatchError(
                f"field shape {v.shape} does not match grid ({self.grid.nt + 1}, {self.grid.nx})")
        _check_finite("field", v)
        object.__setattr__(self, "values", v)

    @classmethod
    def constant(cls, grid: SpaceTimeGrid, value: float) -> "FieldSample":
        return cls(grid, np.full((grid.nt + 1, grid.nx), float(value)))

    @classmethod
    def from_function(cls, grid: SpaceTimeGrid, func: Callable) -> "FieldSample":
        """Tabulate func(t, x) with broadcasting over the lattice."""
        tt, xx = np.meshgrid(grid.t, grid.x, indexing="ij")
        return cls(grid, np.broadcast_to(func(tt, xx), tt.shape))

    @classmethod
    def from_profile(cls, grid: SpaceTimeGrid, profile) -> "FieldSample":
        """Time-independent field from a slice over x."""
        return cls(grid, np.broadcast_to(np.asarray(profile, dtype=float), (grid.nt + 1, grid.nx)))

    def like(self, values) -> "FieldSample":
        return FieldSample(self.grid, values)

    def __getitem__(self, n):
        return self.values[n]


@dataclass(frozen=True)
class ProcessSample:
    """A scalar process sampled at the lattice times, with optional decomposition parts."""

    grid: SpaceTimeGrid
    values: np.ndarray
    a_part: Optional[np.ndarray] = None
    psi_part: Optional[np.ndarray] = None
    a_psi_part: Optional[np.ndarray] = None
    psi_psi_part: Optional[np.ndarray] = None

    def __post_init__(self):
        for name in ("values", "a_part", "psi_part", "a_psi_part", "psi_psi_part"):
            v = getattr(self, name)
            if v is None:
                continue
            v = _frozen(np.broadcast_to(np.asarray(v, dtype=float), (self.grid.nt + 1,)))
            _check_finite(name, v)
            object.__setattr__(self, name, v)

    @classmethod
    def constant(cls, grid: SpaceTimeGrid, value: float) -> "ProcessSample":
        """Deterministic constant: every decomposition part is zero."""
        z = np.zeros(grid.nt + 1)
        return cls(grid, np.full(grid.nt + 1, float(value)), z, z, z, z)

    @classmethod
    def deterministic(cls, grid: SpaceTimeGrid, func: Callable, dfunc: Callable) -> "ProcessSample":
        """σ(t) deterministic: A = σ'(t), Ψ = 0."""
        t = grid.t
        z = np.zeros_like(t)
        return cls(grid, func(t), dfunc(t), z, z, z)

    def part(self, name: str) -> np.ndarray:
        """Decomposition part, zeros when absent."""
        v = getattr(self, name)
        return np.zeros(self.grid.nt + 1) if v is None else v

    def require_nonzero(self, what: str = "sigma"):
        if np.any(self.values == 0.0):
            k = int(np.argmax(self.values == 0.0))
            raise DomainError(f"{what} vanishes at time index {k} (t={self.grid.t[k]:.6g})")


@dataclass(frozen=True)
class SemimartingaleField:
    """Field F with drift density A^F and martingale density Ψ^F.

    The higher parts A^{Ψ^F}, Ψ^{Ψ^F} and the third-level density Ψ^{Ψ^{Ψ^F}} are
    optional; residual checks request them when they need second-order terms.
    """

    f_part: FieldSample
    psi_part: FieldSample
    a_part: Optional[FieldSample] = None
    a_psi_part: Optional[FieldSample] = None
    psi_psi_part: Optional[FieldSample] = None
    psi3_part: Optional[FieldSample] = None

    def __post_init__(self):
        g = self.f_part.grid
        for name in ("psi_part", "a_part", "a_psi_part", "psi_psi_part", "psi3_part"):
            part = getattr(self, name)
            if part is not None and part.grid != g:
                raise GridMismatchError(f"{name} lives on a different grid")

    @property
    def grid(self) -> SpaceTimeGrid:
        return self.f_part.grid

    def require(self, *names: str):
        missing = [n for n in names if getattr(self, n) is None]
        if missing:
            raise MissingPartError(f"missing decomposition parts: {', '.join(missing)}")


@dataclass(frozen=True)
class CoefficientSet:
    """All coefficients of one scenario, tabulated on the shared lattice."""

    sigma: ProcessSample
    a: FieldSample
    g: FieldSample
    b: FieldSample
    e: FieldSample
    s: FieldSample
    m: FieldSample
    f: FieldSample
    c: FieldSample
    d: FieldSample
    c_bar: ProcessSample
    ell: ProcessSample
    k: Optional[FieldSample] = None

    def __post_init__(self):
        self.sigma.require_nonzero("sigma")
        g = self.sigma.grid
        for name in ("a", "g", "b", "e", "s", "m", "f", "c", "d", "k"):
            part = getattr(self, name)
            if part is not None and part.grid != g:
                raise GridMismatchError(f"coefficient {name} lives on a different grid")

    @property
    def grid(self) -> SpaceTimeGrid:
        return self.sigma.grid


# finite differences -------------------------------------------------------

_INTERIOR = {
    1: (np.array([-0.5, 0.0, 0.5]), 1),
    2: (np.array([1.0, -2.0, 1.0]), 1),
    3: (np.array([-0.5, 1.0, 0.0, -1.0, 0.5]), 2),
}
# one-sided rows for the left boundary, offsets start at -node
_LEFT = {
    1: [np.array([-1.5, 2.0, -0.5])],
    2: [np.array([2.0, -5.0, 4.0, -1.0])],
    3: [np.array([-2.5, 9.0, -12.0, 7.0, -1.5]), np.array([-1.5, 5.0, -6.0, 3.0, -0.5])],
}


def diff_x(values, dx: float, order: int = 1) -> np.ndarray:
    """Derivative along the last axis: central inside, one-sided 2nd order at the ends."""
    u = np.asarray(values, dtype=float)
    if order not in _INTERIOR:
        raise ValueError(f"order must be 1, 2 or 3, got {order}")
    n = u.shape[-1]
    if n < order + 2:
        raise SizingError(f"need at least {order + 2} nodes for order {order}, got {n}")
    w, half = _INTERIOR[order]
    out = np.empty_like(u)
    inner = np.zeros(u[..., half:n - half].shape)
    for j, wj in enumerate(w):
        if wj != 0.0:
            inner += wj * u[..., j:n - 2 * half + j]
    out[..., half:n - half] = inner
    sign = -1.0 if order % 2 else 1.0
    for node, row in enumerate(_LEFT[order]):
        lo = 0
        out[..., node] = u[..., lo:lo + len(row)] @ row
        out[..., n - 1 - node] = sign * (u[..., n - len(row):][..., ::-1] @ row)
    return out / dx ** order


def central_derivative(field: FieldSample, order: int = 1) -> FieldSample:
    return FieldSample(field.grid, diff_x(field.values, field.grid.dx, order))


def cumulative_antiderivative(field_slice, grid: SpaceTimeGrid) -> np.ndarray:
    """Trapezoid antiderivative along x, gauge fixed to 0 at x_min."""
    p = np.asarray(field_slice, dtype=float)
    _check_finite("integrand", p)
    return cumulative_trapezoid(p, dx=grid.dx, axis=-1, initial=0.0)


def _shift_weights(grid: SpaceTimeGrid, shifts: np.ndarray):
    # node index plus shift in cells, so lattice-aligned shifts reproduce nodes exactly
    pos = np.arange(grid.nx)[None, :] + shifts[:, None] / grid.dx
    pos = np.clip(pos, 0.0, grid.nx - 1)
    i0 = np.minimum(np.floor(pos).astype(np.int64), grid.nx - 2)
    return i0, pos - i0


def shift_rows(values, grid: SpaceTimeGrid, shifts) -> np.ndarray:
    """Row n evaluated at x + shifts[n]; linear interpolation, constant extension outside."""
    v = np.atleast_2d(np.asarray(values, dtype=float))
    s = np.broadcast_to(np.asarray(shifts, dtype=float), (v.shape[0],))
    if not np.all(np.isfinite(s)):
        raise DomainError("shift must be finite")
    i0, frac = _shift_weights(grid, s)
    left = np.take_along_axis(v, i0, axis=1)
    right = np.take_along_axis(v, i0 + 1, axis=1)
    return left + frac * (right - left)


def interpolate_shifted(field_slice, grid: SpaceTimeGrid, shift: float) -> np.ndarray:
    return shift_rows(np.asarray(field_slice)[None, :], grid, [shift])[0]


def sample_along(values, grid: SpaceTimeGrid, xs) -> np.ndarray:
    """Row n evaluated at xs[n] by 4-point Lagrange interpolation (linear near the ends)."""
    v = np.asarray(values, dtype=float)
    xs = np.asarray(xs, dtype=float)
    pos = np.clip((xs - grid.x_min) / grid.dx, 0.0, grid.nx - 1)
    rows = np.arange(v.shape[0])
    i = np.clip(np.floor(pos).astype(np.int64), 1, grid.nx - 3)
    s = pos - i
    vm, v0, v1, v2 = v[rows, i - 1], v[rows, i], v[rows, i + 1], v[rows, i + 2]
    # Newton form on nodes i, i+1, i-1, i+2: constant data comes back exactly
    cubic = (v0 + s * (v1 - v0) + 0.5 * s * (s - 1) * (v1 - 2 * v0 + vm)
             + (s + 1) * s * (s - 1) / 6 * (v2 - 3 * v1 + 3 * v0 - vm))
    j = np.minimum(np.floor(pos).astype(np.int64), grid.nx - 2)
    r = pos - j
    linear = v[rows, j] + r * (v[rows, j + 1] - v[rows, j])
    edge = (pos < 1.0) | (pos > grid.nx - 2)
    return np.where(edge, linear, cubic)


def interior_mask(grid: SpaceTimeGrid, buffer_fraction: float = DEFAULT_BUFFER) -> np.ndarray:
    """Nodes at least buffer_fraction of the domain width away from both ends."""
    if not 0.0 <= buffer_fraction < 0.5:
        raise DomainError(f"buffer fraction must lie in [0, 0.5), got {buffer_fraction}")
    width = grid.x_max - grid.x_min
    lo = grid.x_min + buffer_fraction * width
    hi = grid.x_max - buffer_fraction * width
    tol = 1e-9 * grid.dx
    mask = (grid.x >= lo - tol) & (grid.x <= hi + tol)
    # the outermost node always carries a one-sided stencil; keep it out
    mask[0] = mask[-1] = False
    return mask


def semimartingale_defect(values, drift, psi, dw, dt: float, psi_psi=None,
                          mask=None, cumulative: bool = True) -> float:
    """Largest discrete defect of dF = D dt + Ψ dW on the lattice.

    The one-step defect is F[n+1] - F[n] - D[n] dt - Ψ[n] ΔW[n], with the Milstein term
    ½ Ψ^Ψ[n] (ΔW[n]² - dt) subtracted when psi_psi is given. With cumulative=True the
    defects are summed over steps before taking the max, which turns the O(dt) martingale
    noise of single steps into an O(dt) global error that a wrong drift cannot hide in.
    """
    F = np.asarray(values, dtype=float)
    dw = np.asarray(dw, dtype=float)[:, None]
    step = F[1:] - F[:-1] - np.asarray(drift)[:-1] * dt - np.asarray(psi)[:-1] * dw
    if psi_psi is not None:
        step = step - 0.5 * np.asarray(psi_psi)[:-1] * (dw * dw - dt)
    if cumulative:
        step = np.cumsum(step, axis=0)
    if mask is not None:
        step = step[:, mask]
    return float(np.max(np.abs(step)))


def values_of(obj, grid: SpaceTimeGrid) -> np.ndarray:
    """Lattice array for a FieldSample, a ProcessSample (broadcast over x) or a scalar."""
    if isinstance(obj, FieldSample):
        return obj.values
    if isinstance(obj, ProcessSample):
        return obj.values[:, None]
    return np.full((grid.nt + 1, grid.nx), float(obj))

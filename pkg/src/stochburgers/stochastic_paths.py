"""Brownian paths on the lattice, Itô sums and path coarsening."""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from . import rng
from .core import ProcessSample, SpaceTimeGrid, _frozen
from .errors import GridMismatchError, SizingError


@dataclass(frozen=True)
class BrownianPath:
    grid: SpaceTimeGrid
    w: np.ndarray
    dw: np.ndarray
    seed: int
    stream_id: int

    def __post_init__(self):
        w, dw = _frozen(self.w), _frozen(self.dw)
        if w.shape != (self.grid.nt + 1,) or dw.shape != (self.grid.nt,):
            raise GridMismatchError("path arrays do not match the grid")
        if w[0] != 0.0:
            raise ValueError("Brownian path must start at 0")
        object.__setattr__(self, "w", w)
        object.__setattr__(self, "dw", dw)

    @classmethod
    def from_increments(cls, grid: SpaceTimeGrid, dw, seed: int = 0, stream_id: int = 0):
        dw = np.asarray(dw, dtype=float)
        return cls(grid, np.concatenate([[0.0], np.cumsum(dw)]), dw, seed, stream_id)

    def with_space_grid(self, grid: SpaceTimeGrid) -> "BrownianPath":
        """The same ω attached to a grid with identical time lattice but other x-resolution."""
        if (grid.horizon_T, grid.nt) != (self.grid.horizon_T, self.grid.nt):
            raise GridMismatchError("time lattices differ")
        return BrownianPath(grid, self.w, self.dw, self.seed, self.stream_id)

    @classmethod
    def frozen_at(cls, grid: SpaceTimeGrid, value: float = 0.0):
        """W ≡ value after the first step; value 0 gives the degenerate zero path."""
        dw = np.zeros(grid.nt)
        dw[0] = value
        return cls.from_increments(grid, dw)


def make_brownian_path(seed: int, stream_id: int, grid: SpaceTimeGrid) -> BrownianPath:
    dw = np.sqrt(grid.dt) * rng.normals(seed, stream_id, grid.nt)
    return BrownianPath.from_increments(grid, dw, seed, stream_id)


def brownian_block(seed: int, first_stream: int, n_paths: int, grid: SpaceTimeGrid) -> np.ndarray:
    """Increments (nt, n_paths); column i equals make_brownian_path(seed, first_stream+i).dw."""
    return np.sqrt(grid.dt) * rng.normal_block(seed, first_stream, n_paths, grid.nt)


def ito_integral(integrand: ProcessSample, path: BrownianPath) -> ProcessSample:
    """Left-point Itô sum H[k] = Σ_{j<k} integrand[j] dw[j], carrying Ψ^H = integrand."""
    if integrand.grid != path.grid:
        raise GridMismatchError("integrand and path use different grids")
    vals = np.concatenate([[0.0], np.cumsum(integrand.values[:-1] * path.dw)])
    return ProcessSample(path.grid, vals, a_part=np.zeros_like(vals), psi_part=integrand.values)


def coarsen_path(path: BrownianPath, factor: int) -> BrownianPath:
    if int(factor) != factor or factor < 1 or path.grid.nt % factor:
        raise SizingError(f"factor {factor} does not divide nt={path.grid.nt}")
    factor = int(factor)
    if factor == 1:
        return path
    grid = replace(path.grid, nt=path.grid.nt // factor)
    dw = path.dw.reshape(grid.nt, factor).sum(axis=1)
    return BrownianPath(grid, path.w[::factor], dw, path.seed, path.stream_id)

"""The two applications: steering a backward Burgers control system and pricing a claim."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from ..closed_form import Profile, backward_scenario, example1_fields, example2_fields, named_profile
from ..cole_hopf import burgers_field_from_V
from ..core import FieldSample, ProcessSample, SpaceTimeGrid, diff_x, sample_along
from ..errors import ConfigurationError, DomainError, SingularityError
from ..fbsde_fk import markovian_triplet, simulate_forward_state
from ..stochastic_paths import BrownianPath

FAMILIES = {"example1": 1, "example2": 2, 1: 1, 2: 2}


def _family_id(family) -> int:
    try:
        return FAMILIES[family]
    except (KeyError, TypeError):
        raise ConfigurationError(f"family {family!r} has no closed form; use example1 or example2") from None


@dataclass(frozen=True)
class ControllabilityReport:
    p0: np.ndarray
    control_u1: FieldSample
    control_u2: FieldSample
    terminal_gap: float
    target: np.ndarray

    def __iter__(self):
        return iter((self.p0, self.control_u1, self.control_u2))


def family_profile(grid: SpaceTimeGrid, family, param: float, sigma: float = -1.0, gamma: float = 0.0) -> Profile:
    """Constant profile α (family 1) or β + γ exp(-x/σ) (family 2; γ = 0 is the constant case)."""
    fam = _family_id(family)
    if fam == 1:
        if gamma:
            raise ConfigurationError("gamma only applies to family 2")
        return named_profile(grid, "constant", value=param)
    if param <= 0 or gamma < 0:
        raise DomainError("family 2 needs beta > 0 and gamma >= 0 so that V stays positive")
    if gamma == 0:
        return named_profile(grid, "constant", value=param)
    return named_profile(grid, "exp", scale=gamma, rate=-1.0 / sigma, offset=param)


def target_state(family, profile: Profile, sigma: float, w_T: float) -> np.ndarray:
    """p = -∂x ln q - Ψ^V(T)/(σ q) written out for each family with exact derivatives."""
    fam = _family_id(family)
    if fam == 1:
        return -profile.d1 * w_T - profile.values / sigma
    return -profile.d1 / profile.values - 1.0 / sigma


def controllability_report(family, param: float, sigma: float, path: BrownianPath,
                           profile: Optional[Profile] = None) -> ControllabilityReport:
    """Initial state p0 = U(0, ·) and controls (U1, U2) = (Ψ^U, Ψ^U_x) reaching p at time T.

    The two controls are tied by U2 = ∂x U1, which turns the control system into the
    backward Burgers equation with U1 = Ψ^U.
    """
    grid = path.grid
    fam = _family_id(family)
    prof = profile if profile is not None else family_profile(grid, fam, param, sigma)
    sig = ProcessSample.constant(grid, sigma)
    # solving (m, c) confirms that the family is a solution for this σ
    scen = backward_scenario(fam, prof, sig, path)
    U = scen.U
    u1 = U.psi_part
    u2 = FieldSample(grid, diff_x(u1.values, grid.dx, 1))
    target = target_state(fam, prof, sigma, float(path.w[-1]))
    gap = float(np.max(np.abs(U.f_part.values[-1] - target)))
    return ControllabilityReport(U.f_part.values[0].copy(), u1, u2, gap, target)


@dataclass(frozen=True)
class MarketModel:
    rate: float
    mu: float
    sigma: float
    s0: float = 1.0
    consumption: Optional[np.ndarray] = None

    def __post_init__(self):
        if self.sigma == 0:
            raise DomainError("volatility must be nonzero")
        if self.rate < 0:
            raise DomainError("interest rate must be nonnegative")
        if self.consumption is not None and np.any(np.asarray(self.consumption) < 0):
            raise DomainError("consumption must be nonnegative")

    @property
    def relative_risk_m(self) -> float:
        return (self.mu - self.rate) / self.sigma

    @classmethod
    def for_family(cls, family, param: float, sigma: float, rate: float = 0.0, s0: float = 1.0) -> "MarketModel":
        """Market whose relative risk matches the family: m = α/2 (family 1) or 1/2 (family 2)."""
        m = 0.5 * param if _family_id(family) == 1 else 0.5
        return cls(rate, rate + m * sigma, sigma, s0)


@dataclass(frozen=True)
class PricingReport:
    price_y0: float
    hedge_pi: np.ndarray
    wealth_path: np.ndarray
    x_path: np.ndarray
    payoff: float
    replication_gap: float
    tax_path: np.ndarray
    shortcut: bool = False
    stock_path: np.ndarray = field(default=None)

    def __iter__(self):
        return iter((self.price_y0, self.hedge_pi, self.wealth_path))


def pricing_report(market: MarketModel, family, param: float, x0: float, path: BrownianPath,
                   gamma: float = 0.0) -> PricingReport:
    """Price Y(0) = U(0, x0), hedge π = Z/(σY) and the self-financed wealth along one path.

    The wealth equation is integrated by a Milstein step in the joint (X, Y) system. The
    correction uses the x-dependence of π. That is exact for the families used here,
    whose U does not depend on W explicitly.
    """
    grid = path.grid
    fam = _family_id(family)
    sigma = market.sigma
    n = grid.nt
    if market.consumption is not None and np.any(np.asarray(market.consumption) != 0):
        raise ConfigurationError("the closed-form families need zero consumption")
    stock = market.s0 * np.exp((market.mu - 0.5 * sigma ** 2) * grid.t + sigma * path.w)
    X = simulate_forward_state(x0, sigma, None, path)
    if fam == 1 and param == 0:
        # zero claim: nothing to hedge, the zero portfolio with zero wealth replicates it
        z = np.zeros(n + 1)
        return PricingReport(0.0, z, z.copy(), X, 0.0, 0.0, z.copy(), True, stock)
    if sigma >= 0:
        raise DomainError("sigma must be negative so that the claim is positive")
    if param <= 0:
        raise DomainError("alpha (family 1) or beta (family 2) must be positive")
    m_family = 0.5 * param if fam == 1 else 0.5
    if abs(market.relative_risk_m - m_family) > 1e-12 * max(1.0, abs(m_family)):
        raise DomainError(f"market relative risk {market.relative_risk_m:.6g} does not match m={m_family:.6g}")

    prof = family_profile(grid, fam, param, sigma, gamma)
    V = example1_fields(prof, path) if fam == 1 else example2_fields(prof, path)
    sig = ProcessSample.constant(grid, sigma)
    U = burgers_field_from_V(V, sig)
    trip = markovian_triplet(U, sig, X, path)
    Y, Z = trip.y_path, trip.z_path
    small = np.abs(Y) < 1e-12
    if np.any(small):
        raise SingularityError(f"Y touches 0 at t={grid.t[int(np.argmax(small))]:.6g}")
    pi = Z / (sigma * Y)
    pi_field = (sigma * diff_x(U.f_part.values, grid.dx, 1) + U.psi_part.values) / (sigma * U.f_part.values)
    pi_x = sample_along(diff_x(pi_field, grid.dx, 1), grid, X)

    dt, dW = grid.dt, path.dw
    excess = market.mu - market.rate
    wealth = np.empty(n + 1)
    wealth[0] = Y[0]
    for k in range(n):
        w, p = wealth[k], pi[k]
        drift = p * excess * w + p * sigma ** 2 * w * w
        diffusion = p * sigma * w
        corr = 0.5 * (p * p * sigma ** 2 * w + sigma ** 2 * pi_x[k] * w) * (dW[k] ** 2 - dt)
        wealth[k + 1] = w + drift * dt + diffusion * dW[k] + corr
    f_T, fp_T = _profile_at(fam, param, gamma, sigma, X[-1])
    payoff = -fp_T * path.w[-1] - f_T / sigma if fam == 1 else -fp_T / f_T - 1.0 / sigma
    tax = -pi * sigma ** 2 * wealth ** 2 + market.rate * wealth
    return PricingReport(float(Y[0]), pi, wealth, X, float(payoff), abs(wealth[-1] - payoff), tax, False, stock)


def _profile_at(fam: int, param: float, gamma: float, sigma: float, x: float):
    """Exact profile value and slope at an off-lattice point."""
    if fam == 1 or gamma == 0:
        return float(param), 0.0
    e = gamma * np.exp(-x / sigma)
    return param + e, -e / sigma

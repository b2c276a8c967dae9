"""Verification checks shared by the CLI and the acceptance tests.

Each check reads its own config section and returns a CheckResult: scalar metrics for
the JSON summary, optional fields for CSV dumps and optional plot-ready series. Runtimes
are kept out of the metrics so that summaries stay byte-stable.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Callable, Dict, List

import numpy as np

from .. import rng
from ..burgers_solver import (build_linearizable_coefficients, colehopf_forward_many,
                              relative_l2_gap, residual_backward_burgers, solve_forward_burgers_many)
from ..closed_form import backward_scenario, named_profile
from ..cole_hopf import (TransformKernel, forward_transform, point_transform_pde_residual,
                         residual_big_constraint, residual_heat_bspde, residual_mid_constraint,
                         terminal_compatibility_residual)
from ..core import FieldSample, ProcessSample, SpaceTimeGrid
from ..fbsde_fk import (BackwardFkScenario, bsde_residual, burgers_driver, fk_backward_y, fk_backward_z,
                        fk_forward_estimate, heat_driver, markovian_triplet, point_transform_identity_gap,
                        ratio_estimate, simulate_forward_state)
from ..heat_solver import HeatProblem, solve_pathwise_heat
from ..stochastic_paths import coarsen_path, make_brownian_path
from .applications import MarketModel, controllability_report, pricing_report
from .config import make_grid

# first stream id of each path-based check; Monte Carlo estimators draw streams 0..n-1
STREAMS = {"forward": 0, "constraints": 1000, "terminal": 2000, "point_transform": 3000,
           "fk_forward": 0, "fk_backward": 0, "fbsde": 4000, "controllability": 5000,
           "pricing": 6000, "infrastructure": 7000}

FAMILY_ID = {"example1": 1, "example2": 2}


@dataclass
class CheckResult:
    name: str
    passed: bool
    metrics: Dict[str, object]
    fields: Dict[str, FieldSample] = field(default_factory=dict)
    series: Dict[str, Dict[str, np.ndarray]] = field(default_factory=dict)
    runtime: float = 0.0


def _timed(func: Callable) -> Callable:
    def wrapper(*args, **kwargs):
        t0 = time.perf_counter()
        res = func(*args, **kwargs)
        res.runtime = time.perf_counter() - t0
        return res
    wrapper.__name__ = func.__name__
    wrapper.__doc__ = func.__doc__
    return wrapper


def _profile(grid: SpaceTimeGrid, spec: dict):
    kw = {k: v for k, v in spec.items() if k != "kind"}
    return named_profile(grid, spec["kind"], **kw)


def _level_grids(base: SpaceTimeGrid, levels: int) -> List[SpaceTimeGrid]:
    """Level l has dx / 2^l and dt / 4^l."""
    return [base.refined(2 ** l, 4 ** l) if l else base for l in range(levels + 1)]


def decay_factor(values, levels: int) -> float:
    """Geometric-mean reduction per refinement level, (A_0 / A_L)^(1/L)."""
    v = np.asarray(values, dtype=float)
    if v[-1] == 0:
        return float("inf") if v[0] > 0 else 1.0
    return float((v[0] / v[-1]) ** (1.0 / levels))


# 1. forward cross-validation ----------------------------------------------------------

def _forward_level(cfg, grid, paths, save_every):
    sig = ProcessSample.constant(grid, cfg["sigma"])
    const = lambda v: FieldSample.constant(grid, v)
    coeffs = build_linearizable_coefficients(sig, const(cfg["b"]), const(cfg["m"]), const(cfg["f"]),
                                             ProcessSample.constant(grid, cfg["c_bar"]))
    p0 = _profile(grid, cfg["p0"]).values
    direct = solve_forward_burgers_many(p0, coeffs, paths, cfg["scheme"], save_every)
    linear = colehopf_forward_many(p0, coeffs, paths, save_every)
    gaps = [relative_l2_gap(d[0], c[0], c[1], cfg["buffer_fraction"]) for d, c in zip(direct, linear)]
    return np.array(gaps), direct[0][0], linear[0][0]


@_timed
def check_forward_crossval(config: dict) -> CheckResult:
    """Direct forward solve against the heat solve + shift + log-derivative route."""
    cfg = config["forward"]
    tol = cfg["tolerances"]
    L = cfg["refine"]
    grids = _level_grids(make_grid(cfg["grid"]), L)
    fine = grids[-1]
    fine_paths = [make_brownian_path(config["seed"], STREAMS["forward"] + i, fine) for i in range(cfg["n_paths"])]
    gaps, first = [], None
    for l, g in enumerate(grids):
        paths = [coarsen_path(p, fine.nt // g.nt).with_space_grid(g) for p in fine_paths]
        save = min(cfg["save_every"] * 4 ** l, g.nt)
        gl, Ud, Uc = _forward_level(cfg, g, paths, save if g.nt % save == 0 else 1)
        gaps.append(gl)
        if first is None:
            first = (Ud, Uc)
    gaps = np.array(gaps)  # (levels, paths)
    ratios = gaps[:-1] / gaps[1:] if L else np.full((1, gaps.shape[1]), np.inf)
    metrics = {"l2_gap_max": float(gaps[0].max()), "l2_gap_mean": float(gaps[0].mean()),
               "min_refinement_ratio": float(ratios.min()), "levels": L + 1, "n_paths": cfg["n_paths"]}
    for i, gv in enumerate(gaps[0]):
        metrics[f"l2_gap_path{i}"] = float(gv)
    passed = bool(gaps[0].max() <= tol["l2_gap"] and ratios.min() >= tol["min_refinement_ratio"])
    Ud, Uc = first
    g0 = Ud.grid
    series = {"forward_final_profile": {"x": g0.x, "direct": Ud.values[-1], "colehopf": Uc.values[-1]},
              "forward_gap_levels": {"level": np.arange(L + 1, dtype=float), "mean_gap": gaps.mean(axis=1),
                                     "max_gap": gaps.max(axis=1)}}
    return CheckResult("forward_crossval", passed, metrics,
                       {"U_direct": Ud, "U_colehopf": Uc}, series)


@_timed
def run_forward_simulation(config: dict) -> CheckResult:
    """Direct forward solve on the configured grid; no tolerance, only field dumps and summaries."""
    cfg = config["forward"]
    grid = make_grid(cfg["grid"])
    paths = [make_brownian_path(config["seed"], STREAMS["forward"] + i, grid) for i in range(cfg["n_paths"])]
    sig = ProcessSample.constant(grid, cfg["sigma"])
    const = lambda v: FieldSample.constant(grid, v)
    coeffs = build_linearizable_coefficients(sig, const(cfg["b"]), const(cfg["m"]), const(cfg["f"]),
                                             ProcessSample.constant(grid, cfg["c_bar"]))
    save = cfg["save_every"] if grid.nt % cfg["save_every"] == 0 else 1
    out = solve_forward_burgers_many(_profile(grid, cfg["p0"]).values, coeffs, paths, cfg["scheme"], save)
    metrics, fields = {}, {}
    for i, (U, _) in enumerate(out):
        metrics[f"path{i}.max_abs_U"] = float(np.max(np.abs(U.values)))
        metrics[f"path{i}.final_mean_U"] = float(np.mean(U.values[-1]))
        fields[f"U_path{i}"] = U
    U0 = out[0][0]
    series = {"forward_profiles": {"x": grid.x, "initial": U0.values[0], "final_path0": U0.values[-1]}}
    return CheckResult("simulate_forward", True, metrics, fields, series)


# 2. point transformation identity ---------------------------------------------------------

def _uniforms(seed: int, stream: int, count: int) -> np.ndarray:
    return rng.words_to_uniform(rng.raw_words(seed, stream, 0, count))


@_timed
def check_point_transform(config: dict) -> CheckResult:
    """PDE residual of 𝒴 = -z/(σy) at random points with |σ|, |y| bounded away from 0."""
    cfg = config["point_transform"]
    n, lo, hi = cfg["n_points"], cfg["min_abs"], cfg["max_abs"]
    u = _uniforms(config["seed"], STREAMS["point_transform"], 7 * n).reshape(7, n)
    sign = lambda v: np.where(v < 0.5, -1.0, 1.0)
    sigma = sign(u[0]) * (lo + (hi - lo) * u[1])
    y = sign(u[2]) * (lo + (hi - lo) * u[3])
    x, z, h = (hi * (2 * u[k] - 1) for k in (4, 5, 6))
    res = np.abs(point_transform_pde_residual(sigma, x, y, z, h))
    metrics = {"max_residual": float(res.max()), "n_points": n}
    return CheckResult("point_transform", bool(res.max() <= cfg["tolerances"]["residual"]), metrics)


# 3. generalized transform via the closed-form families -------------------------------------------

def _constraint_run(family, prof_spec, grid, sigma_value, path, shift, buffer):
    sig = ProcessSample.constant(grid, sigma_value)
    sc = backward_scenario(family, _profile(grid, prof_spec), sig, path, m_shift=shift)
    return (residual_heat_bspde(sc.V, sc.coeffs, path, buffer),
            residual_mid_constraint(sc.V, sc.coeffs, path, buffer),
            residual_backward_burgers(sc.U, sc.coeffs, path, buffer),
            residual_big_constraint(TransformKernel.zero(sig), sc.V, sc.coeffs, path, buffer))


EQUATIONS = ("heat", "mid", "burgers", "big_r0")
GATED = ("heat", "mid", "burgers")


@_timed
def check_generalized_transform(config: dict) -> CheckResult:
    """Residual decay of the heat BSPDE, its Ψ-constraint and the Burgers BSPDE."""
    cfg = config["constraints"]
    tol = cfg["tolerances"]
    L = cfg["refine"]
    grids = _level_grids(make_grid(cfg["grid"]), L)
    fine = grids[-1]
    metrics, series = {}, {}
    passed = True
    for fi, fam in enumerate(cfg["families"]):
        family = FAMILY_ID[fam["family"]]
        tag = f"{fam['family']}_{fam['profile']['kind']}"
        fine_paths = [make_brownian_path(config["seed"], STREAMS["constraints"] + 100 * fi + i, fine)
                      for i in range(cfg["n_paths"])]
        for label, shift in (("", 0.0), ("control_", cfg["m_shift"])):
            R = np.zeros((L + 1, len(EQUATIONS)))
            for l, g in enumerate(grids):
                for p in fine_paths:
                    path = coarsen_path(p, fine.nt // g.nt).with_space_grid(g)
                    R[l] += _constraint_run(family, fam["profile"], g, cfg["sigma"], path, shift,
                                            cfg["buffer_fraction"])
            R /= cfg["n_paths"]
            for e, eq in enumerate(EQUATIONS):
                f = decay_factor(R[:, e], L)
                metrics[f"{tag}.{label}{eq}_decay"] = f
                metrics[f"{tag}.{label}{eq}_residual_level0"] = float(R[0, e])
                if eq in GATED:
                    if label:
                        passed &= f < tol["control_max"]
                    else:
                        passed &= tol["decay_min"] <= f <= tol["decay_max"]
            series[f"constraints_{tag}{'_control' if label else ''}"] = {
                "dx": np.array([g.dx for g in grids]), **{eq: R[:, e] for e, eq in enumerate(EQUATIONS)}}
    metrics["levels"] = L + 1
    metrics["n_paths"] = cfg["n_paths"]
    return CheckResult("generalized_transform", bool(passed), metrics, series=series)


# 4. terminal compatibility ---------------------------------------------------------------

@_timed
def check_terminal_compatibility(config: dict) -> CheckResult:
    """p + ∂x ln q + Ψ^V(T)/(σ q) = 0 for the constant pricing scenarios."""
    cfg = config["terminal"]
    grid = make_grid(cfg["grid"])
    path = make_brownian_path(config["seed"], STREAMS["terminal"], grid)
    wT = float(path.w[-1])
    metrics, worst = {}, 0.0
    ones = np.ones(grid.nx)
    for sc in cfg["scenarios"]:
        a, s = sc["param"], sc["sigma"]
        if sc["family"] == "example1":
            q = np.exp(a * wT) * ones
            psi, p = a * q, -a / s
        else:
            q = a * np.exp(wT) * ones
            psi, p = q, -1.0 / s
        r = terminal_compatibility_residual(p * ones, q, psi, s, grid)
        metrics[f"{sc['family']}_param{a:g}_sigma{s:g}.residual"] = r
        worst = max(worst, r)
    metrics["max_residual"] = worst
    return CheckResult("terminal_compatibility", worst <= cfg["tolerances"]["residual"], metrics)


# 5. forward Feynman-Kac ----------------------------------------------------------------

@_timed
def check_fk_forward(config: dict) -> CheckResult:
    """Monte Carlo G(t, x) against the Gaussian moment oracle and a PDE solve."""
    cfg = config["fk_forward"]
    tol = cfg["tolerances"]
    lam, k, s, cb, t, x = (cfg[n] for n in ("lambda", "k", "sigma", "c_bar", "t", "x"))
    G, Gx, U = fk_forward_estimate(t, x, lambda v: np.exp(lam * v), lambda v: lam * np.exp(lam * v),
                                   k, s, cb, cfg["n_samples"], config["seed"])
    oracle = float(np.exp(-cb * t + lam * (x + k * t) + 0.5 * lam ** 2 * s ** 2 * t))
    grid = make_grid(cfg["pde_grid"], T=t)
    zero = np.zeros(grid.nt + 1)
    prob = HeatProblem(grid, np.exp(lam * grid.x), ProcessSample.constant(grid, s),
                       FieldSample.constant(grid, k), FieldSample.constant(grid, cb),
                       ProcessSample(grid, zero, zero, zero))
    Gpde = solve_pathwise_heat(prob)
    pde = float(np.interp(x, grid.x, Gpde.values[-1]))
    z_oracle = abs(G.value - oracle) / G.std_error
    pde_gap = abs(G.value - pde)
    metrics = {"G": G.value, "G_std_error": G.std_error, "Gx": Gx.value, "Gx_std_error": Gx.std_error,
               "U": U, "oracle": oracle, "pde": pde, "oracle_z_score": z_oracle, "pde_gap": pde_gap,
               "pde_oracle_gap": abs(pde - oracle), "n_samples": G.n_samples}
    passed = z_oracle <= tol["n_std"] and pde_gap <= tol["n_std"] * G.std_error + tol["pde_extra"]
    series = {"fk_forward_pde_slice": {"x": grid.x, "G_pde": Gpde.values[-1]}}
    return CheckResult("fk_forward", bool(passed), metrics, {"G_pde": Gpde}, series)


# 6. backward Feynman-Kac ----------------------------------------------------------------

@_timed
def check_fk_backward(config: dict) -> CheckResult:
    """y^x(0) for the constant family 2 and -z/(σy) for the constant family 1."""
    cfg = config["fk_backward"]
    nstd = cfg["tolerances"]["n_std"]
    grid = make_grid(cfg["grid"])
    sig = ProcessSample.constant(grid, cfg["sigma"])
    s, beta, alpha, x, n = cfg["sigma"], cfg["beta"], cfg["alpha"], cfg["x"], cfg["n_samples"]
    zero_rate = lambda t, xx, w: 0.0
    y2 = fk_backward_y(0.0, x, lambda xx, w: beta * np.exp(w), zero_rate, sig, n, config["seed"])
    y_oracle = beta * np.exp(0.5 * grid.horizon_T)
    z_y2 = abs(y2.value - y_oracle) / y2.std_error

    scen = BackwardFkScenario(sig, q_eval=lambda xx, w: np.exp(alpha * w), p_eval=lambda xx, w: -alpha / s,
                              c_eval=zero_rate)
    y1 = fk_backward_y(0.0, x, scen.q_eval, scen.c_eval, sig, n, config["seed"])
    z1 = fk_backward_z(0.0, x, scen, n, cfg["inner_batch"], config["seed"])
    ratio, err = ratio_estimate(z1, y1, -1.0 / s)
    target = -alpha / s
    metrics = {"y_family2": y2.value, "y_family2_std_error": y2.std_error, "y_family2_oracle": y_oracle,
               "y_family2_z_score": z_y2, "z_family1": z1.value, "y_family1": y1.value,
               "U_estimate_family1": ratio, "U_estimate_error": err, "U_oracle_family1": target,
               "n_samples": n}
    passed = z_y2 <= nstd and abs(ratio - target) <= nstd * err + 1e-12 * abs(target)
    return CheckResult("fk_backward", bool(passed), metrics)


# 7. FBSDE triplets ---------------------------------------------------------------------

def _triplet_run(family, prof_spec, grid, sigma_value, x0, path):
    sig = ProcessSample.constant(grid, sigma_value)
    sc = backward_scenario(family, _profile(grid, prof_spec), sig, path)
    X = simulate_forward_state(x0, sig, None, path)
    ht = markovian_triplet(sc.V, sig, X, path)
    bt = markovian_triplet(sc.U, sig, X, path)
    return (bsde_residual(ht, heat_driver(sc.coeffs)), bsde_residual(bt, burgers_driver(sc.coeffs)),
            point_transform_identity_gap(bt, ht, sig), ht.left_window)


@_timed
def check_fbsde(config: dict) -> CheckResult:
    """BSDE residual decay of heat-side and Burgers-side triplets, and the identity gap."""
    cfg = config["fbsde"]
    tol = cfg["tolerances"]
    L = cfg["refine"]
    base = make_grid(cfg["grid"])
    grids = [base.with_nt(base.nt * 2 ** l) for l in range(L + 1)]
    fine = grids[-1]
    metrics, series = {}, {}
    passed = True
    left_any = False
    for fi, fam in enumerate(cfg["families"]):
        tag = f"{fam['family']}_{fam['profile']['kind']}"
        R = np.zeros((L + 1, 3))
        for i in range(cfg["n_paths"]):
            pf = make_brownian_path(config["seed"], STREAMS["fbsde"] + 100 * fi + i, fine)
            for l, g in enumerate(grids):
                out = _triplet_run(FAMILY_ID[fam["family"]], fam["profile"], g, cfg["sigma"], cfg["x0"],
                                   coarsen_path(pf, fine.nt // g.nt))
                R[l] += out[:3]
                left_any |= out[3]
        R /= cfg["n_paths"]
        for e, name in enumerate(("heat", "burgers")):
            f = decay_factor(R[:, e], L)
            metrics[f"{tag}.{name}_bsde_decay"] = f
            metrics[f"{tag}.{name}_bsde_residual_level0"] = float(R[0, e])
            passed &= tol["decay_min"] <= f <= tol["decay_max"]
        metrics[f"{tag}.identity_gap_level0"] = float(R[0, 2])
        series[f"fbsde_{tag}"] = {"dt": np.array([g.dt for g in grids]), "heat": R[:, 0], "burgers": R[:, 1]}
    worst = 0.0
    for j, sc in enumerate(cfg["constant_scenarios"]):
        path = make_brownian_path(config["seed"], STREAMS["fbsde"] + 900 + j, base)
        prof = {"kind": "constant", "value": sc["param"]}
        gap = _triplet_run(FAMILY_ID[sc["family"]], prof, base, sc["sigma"], cfg["x0"], path)[2]
        metrics[f"{sc['family']}_param{sc['param']:g}.identity_gap"] = gap
        worst = max(worst, gap)
    metrics["constant_identity_gap_max"] = worst
    metrics["path_left_window"] = bool(left_any)
    passed &= worst <= tol["identity_gap"]
    return CheckResult("fbsde", bool(passed), metrics, series=series)


# 8. applications -----------------------------------------------------------------------

@_timed
def check_controllability(config: dict) -> CheckResult:
    cfg = config["controllability"]
    grid = make_grid(cfg["grid"])
    path = make_brownian_path(config["seed"], STREAMS["controllability"], grid)
    metrics, fields = {}, {}
    passed = True
    for sc in cfg["scenarios"]:
        rep = controllability_report(sc["family"], sc["param"], sc["sigma"], path)
        tag = f"{sc['family']}_param{sc['param']:g}_sigma{sc['sigma']:g}"
        metrics[f"{tag}.terminal_gap"] = rep.terminal_gap
        metrics[f"{tag}.p0_mean"] = float(np.mean(rep.p0))
        metrics[f"{tag}.p0_spread"] = float(np.ptp(rep.p0))
        metrics[f"{tag}.control_u1_max"] = float(np.max(np.abs(rep.control_u1.values)))
        metrics[f"{tag}.control_u2_max"] = float(np.max(np.abs(rep.control_u2.values)))
        passed &= rep.terminal_gap <= cfg["tolerances"]["terminal_gap"]
        fields[f"control_u1_{tag}"] = rep.control_u1
    return CheckResult("controllability", bool(passed), metrics, fields)


@_timed
def check_pricing(config: dict) -> CheckResult:
    """Constant families: exact price and zero gap; the γ-extension: gap ≤ C dt and halving."""
    cfg = config["pricing"]
    tol = cfg["tolerances"]
    grid = make_grid(cfg["grid"])
    metrics, series = {}, {}
    passed = True
    for j, sc in enumerate(cfg["scenarios"]):
        path = make_brownian_path(config["seed"], STREAMS["pricing"] + j, grid)
        market = MarketModel.for_family(sc["family"], sc["param"], sc["sigma"], cfg["rate"], cfg["s0"])
        rep = pricing_report(market, sc["family"], sc["param"], cfg["x0"], path, sc["gamma"])
        expected = -sc["param"] / sc["sigma"] if sc["family"] == 1 else -1.0 / sc["sigma"]
        tag = f"family{sc['family']}_param{sc['param']:g}_sigma{sc['sigma']:g}"
        metrics[f"{tag}.price"] = rep.price_y0
        metrics[f"{tag}.price_expected"] = expected
        metrics[f"{tag}.hedge_max_abs"] = float(np.max(np.abs(rep.hedge_pi)))
        metrics[f"{tag}.replication_gap"] = rep.replication_gap
        passed &= abs(rep.price_y0 - expected) <= tol["price"] * max(1.0, abs(expected))
        passed &= rep.replication_gap <= tol["constant_gap"]
        series[f"pricing_{tag}"] = {"t": grid.t, "wealth": rep.wealth_path, "pi": rep.hedge_pi}

    sw = cfg["sweep"]
    L = cfg["refine"]
    grids = [grid.with_nt(grid.nt * 2 ** l) for l in range(L + 1)]
    fine = grids[-1]
    market = MarketModel.for_family(sw["family"], sw["param"], sw["sigma"], cfg["rate"], cfg["s0"])
    gaps = np.zeros(L + 1)
    for i in range(sw["n_paths"]):
        pf = make_brownian_path(config["seed"], STREAMS["pricing"] + 100 + i, fine)
        for l, g in enumerate(grids):
            rep = pricing_report(market, sw["family"], sw["param"], cfg["x0"],
                                 coarsen_path(pf, fine.nt // g.nt), sw["gamma"])
            gaps[l] += rep.replication_gap
    gaps /= sw["n_paths"]
    dts = np.array([g.dt for g in grids])
    halving = decay_factor(gaps, L)
    metrics["sweep.gap_level0"] = float(gaps[0])
    metrics["sweep.gap_over_dt_max"] = float(np.max(gaps / dts))
    metrics["sweep.halving_factor"] = halving
    passed &= np.max(gaps / dts) <= tol["gap_per_dt"] and halving >= tol["halving_min"]
    series["pricing_sweep"] = {"dt": dts, "mean_gap": gaps}
    return CheckResult("pricing", bool(passed), metrics, series=series)


# 9. infrastructure -----------------------------------------------------------------------

@_timed
def check_infrastructure(config: dict) -> CheckResult:
    """RNG determinism, standard-error scaling and gauge invariance of the log-derivative."""
    cfg = config["infrastructure"]
    tol = cfg["tolerances"]
    seed = config["seed"]
    base = STREAMS["infrastructure"]
    a = rng.normals(seed, base, 1000)
    b = rng.normals(seed, base, 1000)
    block = rng.normal_block(seed, base, 4, 250)
    det = bool(np.array_equal(a, b) and np.array_equal(block[:, 0], rng.normals(seed, base, 250)))

    n = cfg["n_samples"]
    ratios = []
    for j in range(cfg["n_seeds"]):
        s = seed + 1 + j
        q = lambda v: np.exp(0.5 * v)
        G1 = fk_forward_estimate(0.25, 0.0, q, q, 1.0, 1.0, 0.0, n, s)[0]
        G4 = fk_forward_estimate(0.25, 0.0, q, q, 1.0, 1.0, 0.0, 4 * n, s)[0]
        ratios.append(G1.std_error / G4.std_error)
    mean_ratio = float(np.mean(ratios))

    grid = SpaceTimeGrid(-2.0, 2.0, 81, 1.0, 50)
    path = make_brownian_path(seed, base + 1, grid)
    V = np.exp(np.sin(grid.x)[None, :] * path.w[:, None]) * (2.0 + np.cos(grid.x))[None, :]
    lam = np.exp(0.7 * path.w + 3.0)[:, None]
    gauge = float(np.max(np.abs(forward_transform(FieldSample(grid, V)).values
                                - forward_transform(FieldSample(grid, lam * V)).values)))
    metrics = {"rng_bit_identical": det, "std_error_ratio_mean": mean_ratio,
               "std_error_ratio_min": float(np.min(ratios)), "std_error_ratio_max": float(np.max(ratios)),
               "gauge_gap": gauge}
    passed = det and abs(mean_ratio - 2.0) <= tol["halving_rel"] * 2.0 and gauge <= tol["gauge"]
    return CheckResult("infrastructure", bool(passed), metrics)


ALL_CHECKS = {
    "forward_crossval": check_forward_crossval,
    "point_transform": check_point_transform,
    "generalized_transform": check_generalized_transform,
    "terminal_compatibility": check_terminal_compatibility,
    "fk_forward": check_fk_forward,
    "fk_backward": check_fk_backward,
    "fbsde": check_fbsde,
    "controllability": check_controllability,
    "pricing": check_pricing,
    "infrastructure": check_infrastructure,
}

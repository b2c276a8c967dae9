"""One test per acceptance criterion, run on the default configuration.

Each test prints a PASS/FAIL line and records it for the terminal summary.
"""

from stochburgers.apps import checks
from stochburgers.apps.config import build_config

from conftest import ACCEPTANCE_LINES

CONFIG = build_config()


def _report(k, ok, text):
    ACCEPTANCE_LINES[k] = (bool(ok), text)
    print(f"{'PASS' if ok else 'FAIL'} criterion {k}: {text}")


def test_criterion_1_forward_crossval():
    res = checks.check_forward_crossval(CONFIG)
    m = res.metrics
    ok = m["l2_gap_max"] <= 2e-2 and m["min_refinement_ratio"] >= 2.0 and res.runtime <= 60.0
    _report(1, ok, f"max L2 gap {m['l2_gap_max']:.2e} (<=2e-2), min refinement ratio "
                   f"{m['min_refinement_ratio']:.2f} (>=2), {m['n_paths']} paths, {res.runtime:.1f} s (<=60)")
    assert m["n_paths"] == 8
    assert ok


def test_criterion_2_point_transform():
    res = checks.check_point_transform(CONFIG)
    m = res.metrics
    ok = m["max_residual"] <= 1e-10 and m["n_points"] == 1000 and res.runtime <= 1.0
    _report(2, ok, f"max residual {m['max_residual']:.2e} (<=1e-10) at {m['n_points']} points, "
                   f"{res.runtime:.3f} s (<=1)")
    assert ok


def test_criterion_3_generalized_transform():
    res = checks.check_generalized_transform(CONFIG)
    m = res.metrics
    lo, hi = 3.0, 5.5
    decays = {k: v for k, v in m.items() if k.endswith("_decay") and "control_" not in k
              and "big_r0" not in k}
    controls = {k: v for k, v in m.items() if k.endswith("_decay") and "control_" in k
                and "big_r0" not in k}
    ok_decay = all(lo <= v <= hi for v in decays.values())
    ok_ctrl = all(v < 1.5 for v in controls.values())
    ok = ok_decay and ok_ctrl and res.passed and res.runtime <= 120.0
    _report(3, ok, f"decay factors {min(decays.values()):.2f}..{max(decays.values()):.2f} (in [{lo}, {hi}]), "
                   f"control factors <= {max(controls.values()):.2f} (<1.5), {m['n_paths']} paths, "
                   f"{res.runtime:.1f} s (<=120)")
    assert len(decays) == 6 and len(controls) == 6
    assert ok


def test_criterion_4_terminal_compatibility():
    res = checks.check_terminal_compatibility(CONFIG)
    m = res.metrics
    ok = m["max_residual"] <= 1e-10
    _report(4, ok, f"max residual {m['max_residual']:.2e} (<=1e-10) over "
                   f"{len(CONFIG['terminal']['scenarios'])} constant scenarios")
    assert ok


def test_criterion_5_fk_forward():
    res = checks.check_fk_forward(CONFIG)
    m = res.metrics
    se = m["G_std_error"]
    ok = (m["oracle_z_score"] <= 3.0 and m["pde_gap"] <= 3.0 * se + 1e-3
          and m["n_samples"] == 100000 and res.runtime <= 30.0)
    _report(5, ok, f"|MC-oracle|/se {m['oracle_z_score']:.2f} (<=3), |MC-PDE| {m['pde_gap']:.2e} "
                   f"(<= {3 * se + 1e-3:.2e}), {res.runtime:.2f} s (<=30)")
    assert ok


def test_criterion_6_fk_backward():
    res = checks.check_fk_backward(CONFIG)
    m = res.metrics
    err_ratio = abs(m["U_estimate_family1"] - m["U_oracle_family1"])
    ok = (m["y_family2_z_score"] <= 3.0 and err_ratio <= 3.0 * m["U_estimate_error"]
          and res.runtime <= 60.0)
    _report(6, ok, f"y z-score {m['y_family2_z_score']:.2f} (<=3), -z/(sigma y) = "
                   f"{m['U_estimate_family1']:.4f} vs {m['U_oracle_family1']:.4f} "
                   f"(|gap| {err_ratio:.3f} <= {3 * m['U_estimate_error']:.3f}), {res.runtime:.1f} s (<=60)")
    assert ok


def test_criterion_7_fbsde():
    res = checks.check_fbsde(CONFIG)
    m = res.metrics
    decays = [v for k, v in m.items() if k.endswith("_bsde_decay")]
    ok = (all(1.4 <= v <= 2.6 for v in decays) and m["constant_identity_gap_max"] <= 1e-10)
    _report(7, ok, f"dt-halving decay factors {min(decays):.2f}..{max(decays):.2f} (in [1.4, 2.6]), "
                   f"identity gap {m['constant_identity_gap_max']:.2e} (<=1e-10), {res.runtime:.1f} s")
    assert len(decays) == 4
    assert ok and res.passed


def test_criterion_8_applications():
    ctrl = checks.check_controllability(CONFIG)
    price = checks.check_pricing(CONFIG)
    cm, pm = ctrl.metrics, price.metrics
    gaps = [v for k, v in cm.items() if k.endswith("terminal_gap")]
    prices = [(pm[k], pm[k.replace(".price", ".price_expected")]) for k in pm if k.endswith(".price")]
    rep_gaps = [v for k, v in pm.items() if k.endswith(".replication_gap")]
    ok_price = all(abs(p - e) <= 1e-12 * max(1.0, abs(e)) for p, e in prices)
    ok = (max(gaps) <= 1e-10 and ok_price and max(rep_gaps) <= 1e-10
          and pm["sweep.halving_factor"] >= 1.5 and pm["sweep.gap_over_dt_max"] <= 1.0)
    _report(8, ok, f"terminal gap {max(gaps):.2e} (<=1e-10), prices "
                   f"{', '.join(f'{p:.6g}' for p, _ in prices)} exact, constant replication gap "
                   f"{max(rep_gaps):.2e}, sweep gap/dt {pm['sweep.gap_over_dt_max']:.3f} (<=1), "
                   f"halving {pm['sweep.halving_factor']:.2f} (>=1.5)")
    assert ok and ctrl.passed and price.passed


def test_criterion_9_infrastructure():
    res = checks.check_infrastructure(CONFIG)
    m = res.metrics
    ok = (m["rng_bit_identical"] and abs(m["std_error_ratio_mean"] - 2.0) <= 0.4
          and m["gauge_gap"] <= 1e-12)
    # an independent rerun of a whole check must reproduce every metric bit for bit
    again = checks.check_infrastructure(CONFIG).metrics
    ok = ok and again == m
    _report(9, ok, f"bit-identical reruns {m['rng_bit_identical']}, std-error ratio under 4x samples "
                   f"{m['std_error_ratio_mean']:.3f} (2 +- 0.4), gauge gap {m['gauge_gap']:.1e} (<=1e-12)")
    assert ok

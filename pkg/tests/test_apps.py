import json

import numpy as np
import pytest

from stochburgers.apps.applications import (MarketModel, controllability_report, family_profile,
                                            pricing_report)
from stochburgers.apps.checks import ALL_CHECKS, CheckResult, decay_factor
from stochburgers.apps.config import DEFAULT_CONFIG, build_config, load_config, make_grid
from stochburgers.apps.io import (export_field_csv, export_summary_json, export_table_csv,
                                  flatten_results, write_results)
from stochburgers.core import FieldSample, SpaceTimeGrid
from stochburgers.errors import ConfigurationError, DomainError
from stochburgers.stochastic_paths import make_brownian_path

GRID = SpaceTimeGrid(-2.0, 2.0, 41, 1.0, 100)
PATH = make_brownian_path(20240611, 7, GRID)


# configuration ----------------------------------------------------------------------

def test_defaults_validate_and_cover_every_check():
    cfg = build_config()
    assert cfg == build_config({})
    for section in ("forward", "constraints", "fbsde", "pricing"):
        assert "refine" in cfg[section]
    assert set(ALL_CHECKS) == {"forward_crossval", "point_transform", "generalized_transform",
                               "terminal_compatibility", "fk_forward", "fk_backward", "fbsde",
                               "controllability", "pricing", "infrastructure"}


def test_overrides_merge_deeply_and_flags_win():
    cfg = build_config({"pricing": {"tolerances": {"price": 1e-9}}}, seed=5, refine=3)
    assert cfg["pricing"]["tolerances"]["price"] == 1e-9
    assert cfg["pricing"]["tolerances"]["halving_min"] == DEFAULT_CONFIG["pricing"]["tolerances"]["halving_min"]
    assert cfg["seed"] == 5
    assert all(cfg[s]["refine"] == 3 for s in ("forward", "constraints", "fbsde", "pricing"))
    assert DEFAULT_CONFIG["seed"] == 20240611


@pytest.mark.parametrize("bad", [{"pricing": {"typo": 1}}, {"seed": -1}, {"forward": {"grid": {"nx": 2}}},
                                 {"constraints": {"families": [{"family": "example3", "profile": {"kind": "sin"}}]}},
                                 [1, 2]])
def test_invalid_configs_raise(bad):
    with pytest.raises(ConfigurationError):
        build_config(bad)


def test_load_config_errors(tmp_path):
    with pytest.raises(ConfigurationError):
        load_config(tmp_path / "missing.json")
    p = tmp_path / "broken.json"
    p.write_text("{not json")
    with pytest.raises(ConfigurationError):
        load_config(p)
    p.write_text(json.dumps({"seed": 3}))
    assert load_config(p)["seed"] == 3


def test_make_grid():
    g = make_grid({"x_min": -1, "x_max": 1, "nx": 5, "nt": 4}, T=0.5)
    assert g == SpaceTimeGrid(-1.0, 1.0, 5, 0.5, 4)


def test_decay_factor():
    assert decay_factor([16.0, 4.0, 1.0], 2) == pytest.approx(4.0)
    assert decay_factor([1.0, 0.0], 1) == float("inf")


# controllability ----------------------------------------------------------------------

@pytest.mark.parametrize("family,param,expect", [("example2", 1.0, 1.0), ("example1", 2.0, 2.0),
                                                 ("example1", 0.0, 0.0)])
def test_controllability_constant_families(family, param, expect):
    p0, u1, u2 = rep = controllability_report(family, param, -1.0, PATH)
    assert np.allclose(p0, expect, atol=1e-12)
    assert np.max(np.abs(u1.values)) <= 1e-12 and np.max(np.abs(u2.values)) <= 1e-12
    assert rep.terminal_gap <= 1e-10


def test_controllability_nonconstant_family_reaches_target():
    rep = controllability_report("example2", 1.0, -1.0, PATH,
                                 profile=family_profile(GRID, 2, 1.0, -1.0, gamma=0.5))
    assert rep.terminal_gap <= 1e-2
    assert np.max(np.abs(rep.control_u1.values)) > 0


def test_controllability_rejects_unknown_family():
    with pytest.raises(ConfigurationError):
        controllability_report("custom", 1.0, -1.0, PATH)


# pricing -----------------------------------------------------------------------------

def test_market_model():
    m = MarketModel.for_family(1, 2.0, -1.0, rate=0.03)
    assert m.relative_risk_m == pytest.approx(1.0)
    with pytest.raises(DomainError):
        MarketModel(0.0, 0.1, 0.0)
    with pytest.raises(DomainError):
        MarketModel(0.0, 0.1, 0.2, consumption=np.array([-1.0]))


@pytest.mark.parametrize("family,param,sigma", [(1, 2.0, -1.0), (2, 1.0, -0.5), (2, 3.0, -0.5)])
def test_pricing_constant_families(family, param, sigma):
    market = MarketModel.for_family(family, param, sigma, rate=0.03)
    price, pi, wealth = rep = pricing_report(market, family, param, 0.4, PATH)
    expect = -param / sigma if family == 1 else -1.0 / sigma
    assert price == pytest.approx(expect, abs=1e-12)
    assert np.max(np.abs(pi)) <= 1e-13
    assert rep.replication_gap <= 1e-10
    assert np.allclose(rep.tax_path, 0.03 * wealth)


def test_pricing_zero_claim_shortcut():
    market = MarketModel.for_family(1, 0.0, -1.0)
    rep = pricing_report(market, 1, 0.0, 0.0, PATH)
    assert rep.shortcut and rep.price_y0 == 0.0 and np.all(rep.hedge_pi == 0.0)


def test_pricing_guards():
    with pytest.raises(DomainError):
        pricing_report(MarketModel(0.0, 0.5, 1.0), 1, 2.0, 0.0, PATH)
    with pytest.raises(DomainError):
        pricing_report(MarketModel(0.0, 0.0, -1.0), 1, 2.0, 0.0, PATH)
    with pytest.raises(ConfigurationError):
        pricing_report(MarketModel(0.0, -1.0, -1.0, consumption=np.ones(3)), 1, 2.0, 0.0, PATH)


# io ------------------------------------------------------------------------------------

def test_field_csv(tmp_path):
    g = SpaceTimeGrid(0.0, 1.0, 3, 1.0, 1)
    f = FieldSample(g, np.arange(6.0).reshape(2, 3) / 3)
    export_field_csv(f, tmp_path / "a.csv")
    lines = (tmp_path / "a.csv").read_text().splitlines()
    assert lines[0] == "t,x,value" and len(lines) == 7
    assert lines[1] == "0,0,0" and float(lines[2].split(",")[2]) == 1 / 3
    export_field_csv(f, tmp_path / "b.csv")
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()


def test_two_by_two_field_gives_four_rows(tmp_path):
    g = SpaceTimeGrid(0.0, 1.0, 3, 1.0, 1)
    # a 2×2 block of lattice values: two times, two of the space nodes
    export_table_csv({"t": [0, 0, 1, 1], "x": [0, 1, 0, 1], "value": [1, 2, 3, 4]}, tmp_path / "t.csv")
    assert len((tmp_path / "t.csv").read_text().splitlines()) == 5
    with pytest.raises(ValueError):
        export_table_csv({"a": [1], "b": [1, 2]}, tmp_path / "bad.csv")
    assert g.nx == 3


def test_summary_json(tmp_path):
    res = [CheckResult("a", True, {"x": 1.5, "n": 3, "inf": float("inf")}),
           CheckResult("b", True, {"flag": np.bool_(True)})]
    flat = flatten_results(res)
    assert flat["all_passed"] is True and flat["a.passed"] is True
    export_summary_json(flat, tmp_path / "s.json")
    data = json.loads((tmp_path / "s.json").read_text())
    assert data["all_passed"] is True and data["a.inf"] == "inf" and data["b.flag"] is True
    failing = flatten_results(res + [CheckResult("c", False, {})])
    assert failing["all_passed"] is False


def test_write_results_tree(tmp_path):
    g = SpaceTimeGrid(0.0, 1.0, 3, 1.0, 1)
    res = CheckResult("demo", True, {"v": 1.0}, {"U": FieldSample.constant(g, 2.0)},
                      {"demo_series": {"x": np.array([0.0, 1.0]), "y": np.array([1.0, 2.0])}})
    write_results([res], tmp_path, {"seed": 1})
    assert sorted(p.relative_to(tmp_path).as_posix() for p in tmp_path.rglob("*.*")) == [
        "config.json", "fields/demo__U.csv", "series/demo_series.csv", "summary.json"]

import json

import numpy as np
import pytest

from fracvisc.errors import ConfigError
from fracvisc.experiments import (ExperimentConfig, default_config, gamma_liminf_probe, initial_datum, lp_distance,
                                  mirror_shock, mollified_mirror, sharpness_probe, shock_width, stability_experiment,
                                  write_manifest)
from fracvisc.spectral import TorusGrid


@pytest.mark.parametrize("kw", [dict(p=2.0), dict(p=0.5), dict(eps_schedule=(0.1, 0.2)), dict(eps_schedule=(0.1, 0.1)),
                                dict(eps_schedule=()), dict(s=0.4)])
def test_config_validation(kw):
    with pytest.raises(ConfigError):
        ExperimentConfig("gamma-probe", **kw)


def test_config_unknown_key_and_hash(tmp_path):
    with pytest.raises(ConfigError):
        ExperimentConfig.from_dict({"experiment": "stability", "bogus": 1})
    a = default_config("stability")
    b = default_config("stability")
    assert a.config_hash() == b.config_hash()
    assert default_config("stability", T=0.25).config_hash() != a.config_hash()
    path = tmp_path / "c.json"
    path.write_text(json.dumps(a.to_dict()))
    assert ExperimentConfig.from_json(path).config_hash() == a.config_hash()
    with pytest.raises(ConfigError):
        default_config("nope")


def test_initial_profiles():
    g = TorusGrid(16)
    assert np.allclose(initial_datum(g, {"profile": "cos", "amplitude": 2}).values, 2 * np.cos(2 * np.pi * g.x))
    assert np.all(initial_datum(g, {"profile": "constant", "amplitude": 0.5}).values == 0.5)
    assert np.array_equal(initial_datum(g, {"profile": "mirror"}).values, mirror_shock(g))
    with pytest.raises(ConfigError):
        initial_datum(g, {"profile": "square"})


def test_mollified_mirror_limit():
    g = TorusGrid(256)
    m = mollified_mirror(g, 1.0, 1e-4)
    away = (np.abs(g.x - 0.5) > 0.02) & (g.x > 0.02) & (g.x < 0.98)
    assert np.allclose(m[away], mirror_shock(g)[away], atol=1e-12)


def test_width_laws():
    assert shock_width(0.1, 1.0) == pytest.approx(shock_width(0.1, 1.0, law="linear"))
    assert shock_width(0.1, 0.75, factor=1) == pytest.approx(0.1**2)
    with pytest.raises(ConfigError):
        shock_width(0.1, 0.75, law="x")


def test_lp_distance_midpoint():
    a = np.zeros((3, 4))
    b = np.ones((3, 4))
    b[1] = 3.0  # midpoints are 2 and 2
    assert lp_distance(a, b, 0.5, 1.0) == pytest.approx(2.0)
    assert lp_distance(a, a, 0.5, 1.5) == 0


@pytest.fixture(scope="module")
def gamma_result():
    return gamma_liminf_probe(default_config("gamma-probe"))


def test_gamma_probe_mirror(gamma_result):
    r = gamma_result
    assert r.passed and r.assertions["margins_above_minus_tol"]
    assert r.info["i_u_oracle"] == pytest.approx(2 / 3)
    assert r.info["i_u"] == pytest.approx(2 / 3, rel=0.1)
    assert [row["eps"] for row in r.rows] == [0.2, 0.1, 0.05, 0.025]


def test_gamma_probe_refinement_monotone():
    margins = []
    for n, dt in [(256, 1e-3), (512, 5e-4)]:
        r = gamma_liminf_probe(ExperimentConfig("gamma-probe", n=n, dt=dt, eps_schedule=(0.1, 0.05)))
        margins.append(np.array(r.column("margin")))
    assert np.all(margins[1] >= margins[0] - 1e-6)


def test_gamma_probe_entropic_target():
    cfg = ExperimentConfig("gamma-probe", n=128, dt=5e-3, T=0.5, eps_schedule=(0.2, 0.1),
                           initial={"profile": "sin", "amplitude": 0.5}, extra={"target": "entropic", "cells": 16})
    r = gamma_liminf_probe(cfg)
    assert r.passed
    assert r.info["i_u"] < r.info["allowed_deficit"]


def test_stability_default():
    r = stability_experiment(default_config("stability"))
    assert r.assertions == {"strictly_decreasing": True, "final_below_threshold": True}
    d = r.column("lp_distance")
    assert d[-1] < 0.05
    costs = r.column("control_cost")
    assert all(b < a for a, b in zip(costs, costs[1:]))


def test_stability_without_control():
    r = stability_experiment(default_config("stability", extra={"gain": 0.0}))
    assert r.assertions["strictly_decreasing"]
    assert all(c == 0 for c in r.column("control_cost"))


def test_sharpness_default():
    r = sharpness_probe(default_config("sharpness"))
    assert r.passed
    ce = np.array(r.column("control_norm_sq_over_eps"))
    assert ce[-1] / 2 >= r.info["i_u"] * 0.95
    assert min(r.column("lp_to_entropic")) > 0.1
    assert max(r.column("contrast_control_norm_sq_over_eps")) < 1e-6


def test_sharpness_delta_sets_amplitude():
    cfg = default_config("sharpness", n=256, eps_schedule=(0.2, 0.1))
    r = sharpness_probe(cfg, delta=0.5)
    a = r.rows[0]["amplitude"]
    assert 2 * (2 / 3) * a**3 * cfg.T == pytest.approx(0.5)


def test_manifest_is_self_contained(gamma_result, tmp_path):
    path = write_manifest(gamma_result, tmp_path)
    d = json.loads(open(path).read())
    assert d["config_hash"] == gamma_result.config_hash
    assert d["config"]["eps_schedule"] == [0.2, 0.1, 0.05, 0.025]
    assert d["info"]["allowed_deficit"] > 0
    assert (tmp_path / "gamma-probe.csv").read_text().count("\n") == 5
    again = gamma_liminf_probe(ExperimentConfig.from_dict(d["config"]))
    assert again.rows == gamma_result.rows

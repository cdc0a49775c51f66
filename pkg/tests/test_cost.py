import json
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fracvisc.cost import (CostReport, apriori_bounds, backward_excess, cost_i_eps, fit_holder_exponent, residual,
                           time_modulus)
from fracvisc.dynamics import SolverParams, Trajectory, get_flux, solve_controlled, solve_viscous
from fracvisc.errors import MassDrift
from fracvisc.spectral import Field, TorusGrid, space_time_dual_norm

from conftest import mode


def _linear_exact(n, dt, T, eps=0.1, s=0.75, c=1.0):
    g = TorusGrid(n)
    t = dt * np.arange(int(round(T / dt)) + 1)
    decay = np.exp(-0.5 * eps * (2 * np.pi) ** (2 * s) * t)
    vals = decay[:, None] * np.cos(2 * np.pi * (g.x[None, :] - c * t[:, None]))
    return Trajectory(g, vals, dt, "linear", eps, s)


def test_residual_of_exact_linear_solution_is_second_order():
    flux = get_flux("linear")
    norms = []
    for dt in (2e-3, 1e-3, 5e-4):
        tr = _linear_exact(64, dt, 0.2)
        norms.append(space_time_dual_norm(residual(tr, flux), dt, 0.75))
    assert norms[0] / norms[1] > 3.5 and norms[1] / norms[2] > 3.5


def test_constant_trajectory_zero_residual():
    g = TorusGrid(32)
    tr = Trajectory(g, np.full((5, 32), 0.7), 0.1, "sin", 0.1, 0.75)
    for r in residual(tr, get_flux("sin")):
        assert np.all(r.values == 0)
    rep = cost_i_eps(tr, get_flux("sin"))
    assert rep.i_eps == 0
    b = apriori_bounds(tr, rep)
    assert b["bound1"] == pytest.approx(2 * 0.49, rel=1e-12)  # eps-term of a constant is zero
    assert b["bound2"] == pytest.approx(0.49, rel=1e-12)


def test_viscous_solution_has_tiny_cost():
    g = TorusGrid(256)
    flux = get_flux("sin")
    u0 = Field.from_function(g, lambda x: 0.5 * np.sin(2 * np.pi * x))
    tr = solve_viscous(u0, SolverParams(0.1, 0.75, 1e-4, 0.5), flux)
    rep = cost_i_eps(tr, flux)
    assert rep.i_eps < 1e-6
    scale = np.sqrt(np.mean(u0.values**2))
    assert rep.residual_dual_norm < 10 * 1e-8 * max(1.0, scale) * 1e2


def test_round_trip_example():
    g = TorusGrid(256)
    p = SolverParams(0.1, 0.75, 1e-3, 1.0)
    flux = get_flux("sin")
    E = np.tile(0.2 * np.cos(2 * np.pi * g.x), (p.n_steps, 1))
    tr = solve_controlled(Field.from_function(g, lambda x: 0.5 * np.sin(2 * np.pi * x)), p, flux, E)
    rep = cost_i_eps(tr, flux)
    assert rep.i_eps == pytest.approx(0.1, rel=0.01)
    assert rep.triple_spread() < 1e-8
    assert np.max(np.abs(rep.controls - E)) < 0.02 * 0.2


def test_mass_drift_raise_or_inf():
    g = TorusGrid(32)
    vals = np.outer(np.arange(4.0), np.ones(32))
    tr = Trajectory(g, vals, 0.1, "sin", 0.1, 0.75)
    with pytest.raises(MassDrift):
        cost_i_eps(tr, get_flux("sin"))
    rep = cost_i_eps(tr, get_flux("sin"), on_mass_drift="inf")
    assert rep.i_eps == math.inf and not rep.finite
    assert json.loads(rep.to_json())["i_eps"] == "inf"


def test_report_json_round_trip():
    g = TorusGrid(32)
    tr = Trajectory(g, np.vstack([mode(g, 1).values, 0.9 * mode(g, 1).values]), 0.1, "sin", 0.1, 0.75)
    rep = cost_i_eps(tr, get_flux("sin"))
    d = json.loads(rep.to_json())
    assert d["i_eps"] == pytest.approx(rep.i_eps)
    assert set(d["bound_checks"]) == {"bound1", "bound2"}
    assert isinstance(rep, CostReport)


@settings(max_examples=20, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), eps=st.floats(0.01, 1.0), s=st.floats(0.55, 1.0))
def test_triple_identity_on_arbitrary_paths(seed, eps, s):
    rng = np.random.default_rng(seed)
    g = TorusGrid(32)
    vals = rng.standard_normal((6, 32)) * 0.3
    vals -= vals.mean(axis=1, keepdims=True)
    tr = Trajectory(g, vals, 0.05, "saturated", eps, s)
    rep = cost_i_eps(tr, get_flux("saturated"))
    assert rep.triple_spread() < 1e-8


def test_driven_burgers_bounds(rng):
    g = TorusGrid(256)
    p = SolverParams(0.05, 0.75, 5e-4, 0.5)
    flux = get_flux("burgers")
    coef = rng.standard_normal((p.n_steps, 3)) * 0.3
    E = sum(np.outer(coef[:, k], np.sin(2 * np.pi * (k + 1) * g.x)) for k in range(3))
    tr = solve_controlled(Field.from_function(g, lambda x: 0.5 * np.sin(2 * np.pi * x)), p, flux, E)
    rep = cost_i_eps(tr, flux)
    assert min(rep.bound_checks.values()) >= 0


def test_adversarial_path_reports_raw_margins():
    g = TorusGrid(32)
    vals = 50.0 * np.outer(np.linspace(0, 1, 11), mode(g, 3).values)
    tr = Trajectory(g, vals, 0.1, "sin", 0.1, 0.75)
    rep = cost_i_eps(tr, get_flux("sin"))
    assert set(rep.bound_checks) == {"bound1", "bound2"}
    assert all(np.isfinite(v) for v in rep.bound_checks.values())


def test_quadratic_scaling():
    g = TorusGrid(128)
    p = SolverParams(0.1, 0.75, 5e-4, 0.5)
    flux = get_flux("sin")
    u0 = Field.from_function(g, lambda x: 0.3 * np.sin(2 * np.pi * x))
    E = np.tile(0.1 * np.cos(4 * np.pi * g.x), (p.n_steps, 1))
    i1 = cost_i_eps(solve_controlled(u0, p, flux, E), flux).i_eps
    i3 = cost_i_eps(solve_controlled(u0, p, flux, 3 * E), flux).i_eps
    assert i3 / i1 == pytest.approx(9.0, rel=0.02)


def test_backward_excess_of_forward_solution():
    # a viscous solution has forward residual ~0, so its backward residual is eps A^s u
    g = TorusGrid(64)
    p = SolverParams(0.1, 0.75, 1e-3, 0.2)
    flux = get_flux("linear")
    tr = solve_viscous(mode(g, 1), p, flux)
    ex = backward_excess(tr, flux)
    # (1/(2 eps)) int |eps A^s u|^2_{H^-s} = (eps/2) int |u|^2_{H^s}
    ubar = 0.5 * (tr.values[1:] + tr.values[:-1])
    amp_sq = np.mean(ubar**2, axis=1) * 2  # mode-1 amplitude squared
    expect = 0.5 * p.eps * p.dt * np.sum(amp_sq / 2 * (2 * np.pi) ** (2 * p.s))
    assert ex == pytest.approx(expect, rel=1e-3)


def test_holder_fit_on_synthetic_modulus():
    d = np.linspace(1e-3, 1e-1, 50)
    assert fit_holder_exponent(d, 3 * d**0.5) == pytest.approx(0.5, abs=1e-12)


def test_time_modulus_monotone():
    g = TorusGrid(32)
    vals = np.outer(np.sin(np.linspace(0, 3, 40)), mode(g, 1).values)
    d, w = time_modulus(Trajectory(g, vals, 0.01, "sin"), max_lag=20)
    assert len(d) == 20 and np.all(np.diff(w) >= 0)

"""Acceptance criteria 1-10, each at its stated tolerance.

Every test records a one-line verdict in ``RESULTS``; ``conftest.py`` prints
them at the end of the session. Run this file alone with
``pytest tests/test_acceptance.py -v``.
"""
import time

import numpy as np

from fracvisc import extension
from fracvisc.cost import cost_i_eps, fit_holder_exponent, time_modulus
from fracvisc.dynamics import SolverParams, Trajectory, entropic_reference, get_flux, solve_controlled, solve_viscous
from fracvisc.entropy import cost_i, piecewise_constant_cost, quadratic_pair, shock_production_rate
from fracvisc.experiments import default_config, gamma_liminf_probe, mirror_shock, stability_experiment
from fracvisc.quasipotential import decomposition_check, estimate_V, ramp_relax_path
from fracvisc.spectral import Field, TorusGrid, frac_power

RESULTS: dict = {}


def record(num, ok, detail):
    RESULTS[num] = (bool(ok), detail)
    assert ok, f"criterion {num}: {detail}"


def test_01_spectral_exactness():
    t0 = time.perf_counter()
    g = TorusGrid(256)
    worst = 0.0
    for s in (0.6, 0.75, 0.9):
        for k in range(1, 65):
            for f in (np.cos, np.sin):
                u = Field(g, f(2 * np.pi * k * g.x))
                ref = (2 * np.pi * k) ** (2 * s) * u.values
                err = np.linalg.norm(frac_power(u, s).values - ref) / np.linalg.norm(ref)
                worst = max(worst, err)
    dt = time.perf_counter() - t0
    record(1, worst < 1e-12 and dt < 1.0, f"max relative error {worst:.2e} (< 1e-12), {dt:.2f} s (< 1 s)")


def test_02_extension_equivalence():
    extension._PROFILE_CACHE.clear()
    t0 = time.perf_counter()
    g = TorusGrid(64)
    rng = np.random.default_rng(2)
    dtn, energy = 0.0, 0.0
    for s in (0.6, 0.75, 0.9):
        prof = extension.solve_profile(s)
        for _ in range(20):
            v = rng.standard_normal(g.n)
            u = Field(g, v - v.mean())
            d = extension.dirichlet_to_neumann(extension.extend(u, s, profile=prof))
            ref = frac_power(u, s)
            dtn = max(dtn, np.linalg.norm(d.values - ref.values) / np.linalg.norm(ref.values))
            e = extension.energy_identity_check(u, s, n_bumps=0)
            energy = max(energy, abs(e.lhs - e.rhs) / e.lhs)
        e = extension.energy_identity_check(Field(g, np.cos(2 * np.pi * g.x)), s)
        energy = max(energy, abs(e.lhs - e.rhs) / e.lhs)
        assert e.margin > 0
    dt = time.perf_counter() - t0
    record(2, dtn < 1e-6 and energy < 1e-5 and dt < 30,
           f"DtN vs multiplier {dtn:.2e} (< 1e-6), energy identity {energy:.2e} (< 1e-5), {dt:.1f} s (< 30 s)")


def test_03_cost_triple_identity():
    g = TorusGrid(256)
    p = SolverParams(0.1, 0.75, 1e-3, 1.0)
    flux = get_flux("sin")
    u0 = Field(g, 0.5 * np.sin(2 * np.pi * g.x))
    spreads, trips = [], []
    for E in (np.tile(0.2 * np.cos(2 * np.pi * g.x), (p.n_steps, 1)),
              np.outer(np.sin(2 * np.pi * (np.arange(p.n_steps) + 0.5) * p.dt), 0.3 * np.sin(4 * np.pi * g.x))):
        tr = solve_controlled(u0, p, flux, E)
        rep = cost_i_eps(tr, flux)
        spreads.append(rep.triple_spread())
        direct = 0.5 / p.eps * p.dt * float(np.sum(np.mean(E**2, axis=1)))
        trips.append(abs(rep.i_eps - direct) / direct)
    record(3, max(spreads) < 1e-8 and max(trips) < 0.01,
           f"triple spread {max(spreads):.1e} (< 1e-8), round trip {max(trips):.2e} (< 1%)")


def test_04_zero_cost_consistency():
    g = TorusGrid(256)
    flux = get_flux("sin")
    u0 = Field(g, 0.5 * np.sin(2 * np.pi * g.x))
    costs = [cost_i_eps(solve_viscous(u0, SolverParams(0.1, 0.75, dt, 0.5), flux), flux).i_eps
             for dt in (4e-4, 2e-4, 1e-4)]
    orders = [np.log2(costs[i] / costs[i + 1]) / 2 for i in range(2)]  # I ~ dt^(2 order)
    record(4, costs[-1] < 1e-6 and min(orders) >= 1.8,
           f"I_eps {costs[-1]:.2e} at dt=1e-4 (< 1e-6), residual orders {orders[0]:.2f}, {orders[1]:.2f} (>= 1.8)")


def test_05_apriori_bounds_matrix():
    g = TorusGrid(128)
    rng = np.random.default_rng(5)
    u0 = Field(g, 0.8 * np.sin(2 * np.pi * g.x))
    worst, runs = np.inf, 0
    for name in ("sin", "saturated", "burgers"):
        flux = get_flux(name)
        for eps in (0.2, 0.05):
            p = SolverParams(eps, 0.75, 5e-4, 0.5)
            coef = rng.standard_normal((p.n_steps, 3))
            driven = sum(np.outer(coef[:, k], np.cos(2 * np.pi * (k + 1) * g.x + k)) for k in range(3)) * 0.5
            for E in (np.zeros((p.n_steps, g.n)), driven):
                rep = cost_i_eps(solve_controlled(u0, p, flux, E), flux)
                worst = min(worst, *rep.bound_checks.values())
                runs += 1
    record(5, runs == 12 and worst >= -1e-8, f"{runs} runs, smallest margin {worst:.3e} (>= -1e-8)")


def test_06_entropy_oracle():
    flux = get_flux("burgers")
    g = TorusGrid(1024)
    tr = Trajectory(g, np.tile(mirror_shock(g, 1.0), (101, 1)), 0.01, "burgers")
    res = cost_i(tr, flux)
    rate = shock_production_rate(-1.0, 1.0, flux, quadratic_pair(flux)) * tr.T
    oracle = piecewise_constant_cost(tr, flux)
    ref_g = TorusGrid(256)
    ref = entropic_reference(Field(ref_g, np.sin(2 * np.pi * ref_g.x)), 1.0, flux, refine=4, dt_out=0.01)
    rres = cost_i(ref, flux)
    ok = (abs(res.value - 2 / 3) < 0.10 * 2 / 3 and abs(rate - 2 / 3) < 0.05 * 2 / 3
          and abs(oracle - 2 / 3) < 0.05 * 2 / 3 and rres.below_floor)
    record(6, ok, f"measure {res.value:.4f}, shock rate {rate:.4f}, oracle {oracle:.4f} vs 2/3; "
                  f"entropic I {rres.value:.1e} < floor {rres.floor:.1e}")


def test_07_gamma_liminf():
    t0 = time.perf_counter()
    r = gamma_liminf_probe(default_config("gamma-probe"))
    dt = time.perf_counter() - t0
    i_u = r.info["i_u"]
    margins = r.column("margin")
    ok = min(margins) >= -0.05 * i_u and dt < 300
    record(7, ok, f"margins {', '.join(f'{m:+.3f}' for m in margins)} (>= {-0.05 * i_u:.3f}), {dt:.1f} s")


def test_08_stability():
    r = stability_experiment(default_config("stability"))
    d = r.column("lp_distance")
    ok = all(b < a for a, b in zip(d, d[1:])) and d[-1] < 0.05
    record(8, ok, f"L_3/2 distances {', '.join(f'{x:.4f}' for x in d)} (decreasing, last < 0.05)")


def test_09_quasipotential():
    t0 = time.perf_counter()
    flux = get_flux("sin")
    g = TorusGrid(64)
    w = Field(g, 0.3 * np.cos(2 * np.pi * g.x))
    best = [estimate_V(0.0, w, SolverParams(eps, 0.75, 1e-3, 1.0), flux).best for eps in (0.05, 0.1, 0.2)]
    gap = max(abs(b - 0.0225) / 0.0225 for b in best)
    spread = (max(best) - min(best)) / min(best)
    g2 = TorusGrid(256)
    w2 = Field(g2, 0.3 * np.cos(2 * np.pi * g2.x))
    dec = decomposition_check(ramp_relax_path(0.0, w2, 0.1, 1.0, SolverParams(0.05, 0.75, 1e-4, 1.0), flux), flux)
    bad = estimate_V(0.0, Field(g, w.values + 0.1), SolverParams(0.05, 0.75, 1e-3, 1.0), flux)
    dt = time.perf_counter() - t0
    ok = gap < 0.05 and spread < 0.02 and dec.residual < 0.02 and bad.best == np.inf and dt < 300
    record(9, ok, f"gap {gap:.1e} (< 5%), eps spread {spread:.1e} (< 2%), decomposition {dec.residual:.1e} (< 2%), "
                  f"mismatch -> {bad.best}, {dt:.1f} s")


def test_10_time_regularity():
    g = TorusGrid(256)
    flux = get_flux("sin")
    u0 = Field(g, 0.5 * np.sin(2 * np.pi * g.x))
    rng = np.random.default_rng(10)
    exps = []
    for dt in (1e-3, 5e-4):
        p = SolverParams(0.1, 0.75, dt, 1.0)
        xi = rng.standard_normal((p.n_steps, 4))
        E = sum(np.outer(xi[:, k], np.cos(2 * np.pi * (k + 1) * g.x)) for k in range(4)) * 0.1 / np.sqrt(dt)
        tr = solve_controlled(u0, p, flux, E)
        d, w = time_modulus(tr, max_lag=p.n_steps // 4)
        sel = d >= 4 * dt
        exps.append(fit_holder_exponent(d[sel], w[sel]))
    ok = all(0.35 <= e <= 0.65 for e in exps)
    record(10, ok, f"fitted exponents {', '.join(f'{e:.3f}' for e in exps)} (in [0.35, 0.65])")

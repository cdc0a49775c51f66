"""Parameter sweeps over the viscosity: liminf probe, stability and sharpness.

Each experiment takes an :class:`ExperimentConfig`, returns a result object
holding one row per ``eps`` plus pass/fail assertions, and can write a
manifest with the config hash and every raw number.
"""
from __future__ import annotations

import hashlib
import json
import os
from dataclasses import asdict, dataclass, field

import numpy as np

from ._jsonutil import dump
from .cost import cost_i_eps
from .dynamics import (SolverParams, Trajectory, entropic_reference, get_flux, solve_controlled,
                       solve_viscous)
from .entropy import cost_i, piecewise_constant_cost
from .errors import ConfigError
from .spectral import Field, TorusGrid, h_minus1_metric


@dataclass
class ExperimentConfig:
    """Grid, solver and sweep parameters of one experiment.

    ``extra`` holds experiment-specific knobs (mollifier width factor,
    thresholds, refinement, ...).
    """

    experiment: str
    n: int = 512
    dt: float = 5e-4
    T: float = 1.0
    s: float = 1.0
    flux: str = "burgers"
    eps_schedule: tuple = (0.2, 0.1, 0.05, 0.025)
    initial: dict = field(default_factory=lambda: {"profile": "sin", "amplitude": 1.0})
    p: float = 1.5
    out_dir: str | None = None
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        self.eps_schedule = tuple(float(e) for e in self.eps_schedule)
        if not 1.0 <= self.p < 2.0:
            raise ConfigError(f"p must lie in [1, 2), got {self.p}")
        if not self.eps_schedule:
            raise ConfigError("empty eps schedule")
        if any(e <= 0 for e in self.eps_schedule):
            raise ConfigError("eps values must be positive")
        if any(b >= a for a, b in zip(self.eps_schedule, self.eps_schedule[1:])):
            raise ConfigError(f"eps schedule must be strictly decreasing, got {self.eps_schedule}")
        if not 0.5 < self.s <= 1.0:
            raise ConfigError(f"s must lie in (1/2, 1], got {self.s}")

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(d) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        return cls(**d)

    @classmethod
    def from_json(cls, path) -> "ExperimentConfig":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))

    def to_dict(self) -> dict:
        d = asdict(self)
        d["eps_schedule"] = list(self.eps_schedule)
        return d

    def config_hash(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()


def initial_datum(grid: TorusGrid, spec: dict) -> Field:
    """Named analytic profiles: ``sin``, ``cos``, ``mirror``, ``constant``."""
    name = spec.get("profile", "sin")
    a = float(spec.get("amplitude", 1.0))
    x = grid.x
    if name == "sin":
        v = a * np.sin(2 * np.pi * x)
    elif name == "cos":
        v = a * np.cos(2 * np.pi * x)
    elif name == "mirror":
        v = mirror_shock(grid, a)
    elif name == "constant":
        v = np.full(grid.n, a)
    else:
        raise ConfigError(f"unknown initial profile {name!r}")
    return Field(grid, v)


def mirror_shock(grid: TorusGrid, a: float = 1.0) -> np.ndarray:
    """``-a`` on ``[0, 1/2)``, ``+a`` on ``[1/2, 1)``.

    The jump at ``1/2`` rises (non-entropic for convex flux), the jump at
    ``0`` falls (entropic); both are stationary for Burgers.
    """
    return np.where(grid.x < 0.5, -a, a).astype(float)


def mollified_mirror(grid: TorusGrid, a: float, width: float) -> np.ndarray:
    """Smooth periodic version ``a tanh(-sin(2 pi x) / (2 pi width))`` of :func:`mirror_shock`."""
    return a * np.tanh(-np.sin(2 * np.pi * grid.x) / (2 * np.pi * width))


def shock_width(eps: float, s: float, a: float = 1.0, factor: float = 0.5, law: str = "fractional") -> float:
    """Mollifier width for the mirror family.

    ``fractional``: ``factor (eps/a)^(1/(2s-1))``, the scaling of a viscous
    shock layer of the fractional law; ``linear``: ``factor eps / a``. The
    two agree at ``s = 1``.
    """
    if law == "fractional":
        return factor * (eps / a) ** (1.0 / (2 * s - 1))
    if law == "linear":
        return factor * eps / a
    raise ConfigError(f"unknown width law {law!r}")


def lp_distance(a: np.ndarray, b: np.ndarray, dt: float, p: float) -> float:
    """``L_p((0,T) x T)`` distance: midpoint rule in time, exact sum in space."""
    d = np.asarray(a) - np.asarray(b)
    mid = 0.5 * (d[1:] + d[:-1])
    return float((np.sum(np.abs(mid) ** p) * dt / d.shape[1]) ** (1.0 / p))


def h_minus1_sup(a: Trajectory, b: Trajectory) -> float:
    return max(h_minus1_metric(a.snapshot(j), b.snapshot(j)) for j in range(a.n_snapshots))


@dataclass
class SweepResult:
    """Rows of one sweep, named assertions and the config that produced them."""

    experiment: str
    config: dict
    config_hash: str
    rows: list = field(default_factory=list)
    assertions: dict = field(default_factory=dict)
    info: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(self.assertions.values())

    def column(self, name):
        return [r[name] for r in self.rows]

    def to_dict(self) -> dict:
        return {"experiment": self.experiment, "config": self.config, "config_hash": self.config_hash,
                "rows": self.rows, "assertions": self.assertions, "info": self.info, "passed": self.passed}


def write_manifest(result: SweepResult, out_dir) -> str:
    """Write ``<experiment>_manifest.json`` and a CSV of the rows; returns the JSON path."""
    os.makedirs(out_dir, exist_ok=True)
    path = os.path.join(out_dir, f"{result.experiment}_manifest.json")
    with open(path, "w") as fh:
        dump(result.to_dict(), fh, indent=2)
    if result.rows:
        keys = list(result.rows[0])
        with open(os.path.join(out_dir, f"{result.experiment}.csv"), "w") as fh:
            fh.write(",".join(keys) + "\n")
            for r in result.rows:
                fh.write(",".join(repr(float(r[k])) if isinstance(r[k], (int, float, np.floating)) else str(r[k])
                                  for k in keys) + "\n")
    return path


def _result(cfg: ExperimentConfig) -> SweepResult:
    return SweepResult(cfg.experiment, cfg.to_dict(), cfg.config_hash())


def _stationary(grid: TorusGrid, row: np.ndarray, T: float, n_snap: int, flux_id: str, eps=None, s=None) -> Trajectory:
    return Trajectory(grid, np.tile(row, (n_snap, 1)), T / (n_snap - 1), flux_id, eps, s)


def gamma_liminf_probe(cfg: ExperimentConfig) -> SweepResult:
    """Margins ``I_eps(u_eps) - I(u)`` along a recovery family.

    ``extra["target"]``: ``"mirror"`` (default) uses the stationary mirror
    shock and time-constant mollified approximants; ``"entropic"`` uses the
    entropy solution from ``cfg.initial`` and viscous solutions as
    approximants. ``extra["tolerance"]`` is the allowed relative deficit
    (default 0.05).
    """
    ex = cfg.extra
    flux = get_flux(cfg.flux)
    grid = TorusGrid(cfg.n)
    res = _result(cfg)
    tol = float(ex.get("tolerance", 0.05))
    target = ex.get("target", "mirror")
    cells = int(ex.get("cells", 32))
    if target == "mirror":
        a = float(cfg.initial.get("amplitude", 1.0))
        u = _stationary(grid, mirror_shock(grid, a), cfg.T, 2 * cells + 1, flux.id)
        hyper = cost_i(u, flux, n_t_cells=cells, n_x_cells=cells)
        i_u = hyper.value
        res.info.update(i_u=i_u, i_u_theta=hyper.theta_estimate, i_u_oracle=piecewise_constant_cost(u, flux),
                        floor=hyper.floor)
        for eps in cfg.eps_schedule:
            h = shock_width(eps, cfg.s, a, float(ex.get("width_factor", 0.5)), ex.get("width_law", "fractional"))
            ue = _stationary(grid, mollified_mirror(grid, a, h), cfg.T, 2, flux.id, eps, cfg.s)
            ie = cost_i_eps(ue, flux).i_eps
            res.rows.append({"eps": eps, "width": h, "i_eps": ie, "i_u": i_u, "margin": ie - i_u})
        allowed = tol * abs(i_u)
    elif target == "entropic":
        u0 = initial_datum(grid, cfg.initial)
        ref = entropic_reference(u0, cfg.T, flux, refine=int(ex.get("refine", 4)), dt_out=cfg.dt)
        hyper = cost_i(ref, flux, n_t_cells=cells, n_x_cells=cells)
        i_u = hyper.value
        res.info.update(i_u=i_u, floor=hyper.floor)
        for eps in cfg.eps_schedule:
            ue = solve_viscous(u0, SolverParams(eps, cfg.s, cfg.dt, cfg.T), flux)
            ie = cost_i_eps(ue, flux).i_eps
            res.rows.append({"eps": eps, "i_eps": ie, "i_u": i_u, "margin": ie - i_u})
        # I(u) below the estimator floor counts as zero
        allowed = hyper.floor
    else:
        raise ConfigError(f"unknown target {target!r}")
    res.info["deviations"] = list(flux.deviations)
    res.info["allowed_deficit"] = allowed
    res.assertions["margins_above_minus_tol"] = all(r["margin"] >= -allowed for r in res.rows)
    return res


def stability_experiment(cfg: ExperimentConfig) -> SweepResult:
    """Controlled runs with ``E_eps = eps * G`` against the entropy solution.

    ``G(t, x) = gain * cos(2 pi x) sin(2 pi t)`` (``extra["gain"]``, default
    1; 0 gives plain vanishing viscosity). Asserts strictly decreasing
    ``L_p`` distance and the final distance below ``extra["threshold"]``.
    """
    ex = cfg.extra
    flux = get_flux(cfg.flux)
    grid = TorusGrid(cfg.n)
    u0 = initial_datum(grid, cfg.initial)
    save = int(ex.get("save_every", 10))
    res = _result(cfg)
    ref = entropic_reference(u0, cfg.T, flux, refine=int(ex.get("refine", 4)), dt_out=cfg.dt * save)
    gain = float(ex.get("gain", 1.0))
    n_steps = int(round(cfg.T / cfg.dt))
    tm = (np.arange(n_steps) + 0.5) * cfg.dt
    G = gain * np.sin(2 * np.pi * tm)[:, None] * np.cos(2 * np.pi * grid.x)[None, :]
    g_sq = cfg.dt * float(np.sum(np.mean(G**2, axis=1)))
    for eps in cfg.eps_schedule:
        tr = solve_controlled(u0, SolverParams(eps, cfg.s, cfg.dt, cfg.T), flux, eps * G, save_every=save)
        res.rows.append({"eps": eps, "control_cost": eps * g_sq, "lp_distance": lp_distance(tr.values, ref.values, tr.dt, cfg.p),
                         "h_minus1_distance": h_minus1_sup(tr, ref)})
    d = res.column("lp_distance")
    thr = float(ex.get("threshold", 0.05))
    res.assertions["strictly_decreasing"] = all(b < a for a, b in zip(d, d[1:]))
    res.assertions["final_below_threshold"] = d[-1] < thr
    res.info.update(threshold=thr, deviations=list(flux.deviations))
    return res


def sharpness_probe(cfg: ExperimentConfig, delta: float | None = None) -> SweepResult:
    """Bounded-cost controls converging to a non-entropic limit.

    The mollified mirror shock of amplitude ``a`` has cost ``I(u) = (2/3) a^3 T``
    for Burgers; with ``delta`` given, ``a`` is chosen so that ``2 I(u) = delta``.
    For each ``eps`` the control is reconstructed from the cost module and
    ``eps^-1 |E|^2`` reported alongside the ``L_p`` distance to the entropy
    solution issued from the same datum. A contrast column does the same for
    the viscous solution from ``sin`` data, whose control cost vanishes.
    """
    ex = cfg.extra
    flux = get_flux(cfg.flux)
    grid = TorusGrid(cfg.n)
    res = _result(cfg)
    if delta is None:
        delta = ex.get("delta")
    a = float(cfg.initial.get("amplitude", 1.0)) if delta is None else (3 * float(delta) / (4 * cfg.T)) ** (1 / 3)
    cells = int(ex.get("cells", 32))
    n_snap = int(ex.get("snapshots", 2 * cells + 1))
    target = _stationary(grid, mirror_shock(grid, a), cfg.T, 2 * cells + 1, flux.id)
    i_u = cost_i(target, flux, n_t_cells=cells, n_x_cells=cells).value
    tol = float(ex.get("tolerance", 0.05))
    u0 = Field.from_function(grid, lambda x: np.sin(2 * np.pi * x))
    for eps in cfg.eps_schedule:
        h = shock_width(eps, cfg.s, a, float(ex.get("width_factor", 0.5)), ex.get("width_law", "fractional"))
        row = mollified_mirror(grid, a, h)
        ue = _stationary(grid, row, cfg.T, n_snap, flux.id, eps, cfg.s)
        rep = cost_i_eps(ue, flux)
        ref = entropic_reference(Field(grid, row), cfg.T, flux, refine=int(ex.get("refine", 2)), dt_out=ue.dt)
        contrast = cost_i_eps(solve_viscous(u0, SolverParams(eps, cfg.s, cfg.dt, cfg.T), flux, save_every=1), flux)
        res.rows.append({"eps": eps, "amplitude": a, "control_norm_sq_over_eps": rep.control_l2**2 / eps,
                         "i_eps": rep.i_eps, "lp_to_entropic": lp_distance(ue.values, ref.values, ue.dt, cfg.p),
                         "contrast_control_norm_sq_over_eps": contrast.control_l2**2 / eps})
    ce = res.column("control_norm_sq_over_eps")
    res.info.update(i_u=i_u, delta=delta, two_i_u=2 * i_u, deviations=list(flux.deviations))
    res.assertions["liminf_above_i_u"] = ce[-1] / 2 >= i_u * (1 - tol)
    res.assertions["bounded_cost"] = max(ce) < float(ex.get("cost_bound", 4 * max(i_u, 1e-12) + 1.0))
    res.assertions["non_entropic_limit"] = min(res.column("lp_to_entropic")) > float(ex.get("distance_floor", 0.1))
    return res


# per-experiment overrides of the ExperimentConfig defaults
DEFAULTS = {
    "gamma-probe": {"n": 1024},
    "stability": {"s": 0.75, "T": 0.5},
    "sharpness": {},
}


def default_config(experiment: str, **overrides) -> ExperimentConfig:
    """Configuration used by the CLI when a key is absent from the file."""
    if experiment not in DEFAULTS:
        raise ConfigError(f"unknown experiment {experiment!r}")
    d = {"experiment": experiment, **DEFAULTS[experiment], **overrides}
    return ExperimentConfig.from_dict(d)


EXPERIMENTS = {
    "gamma-probe": gamma_liminf_probe,
    "stability": stability_experiment,
    "sharpness": sharpness_probe,
}

"""Paths from a constant state to a target profile and their control cost.

The constructive path to ``w`` (mean ``m``) runs backwards along a viscous
relaxation: solve the viscous law from ``w(-x)`` for time ``T2`` to get
``v``, ramp linearly from ``m`` to ``v(T2, -x)`` during ``T1``, then follow
``v(T1 + T2 - t, -x)``. The reversed segment solves the backward equation,
so its cost is the energy released by the relaxation, and the total cost
approaches ``0.5 |w - m|^2`` as ``T2`` grows.
"""
from __future__ import annotations

import csv
import math
from dataclasses import asdict, dataclass, field
from typing import NamedTuple

import numpy as np

from ._jsonutil import dumps
from .cost import backward_excess, cost_i_eps
from .dynamics import Flux, SolverParams, Trajectory, solve_viscous
from .errors import MassMismatch, NotFromConstant
from .spectral import Field, reflect

MASS_TOL = 1e-10
DEFAULT_T2 = (2.0, 4.0, 8.0, 16.0)


def _check_mass(m: float, w: Field):
    if abs(w.mean() - m) > MASS_TOL:
        raise MassMismatch(f"target mean {w.mean():.12g} differs from m = {m:.12g}")


def target_value(m: float, w: Field) -> float:
    """``0.5 |w - m|^2`` in ``L2``."""
    return 0.5 * float(np.mean((w.values - m) ** 2))


def ramp_relax_path(m: float, w: Field, T1: float, T2: float, params: SolverParams, flux: Flux) -> Trajectory:
    """Ramp from ``m`` during ``T1``, then the reversed relaxation of length ``T2``.

    ``params`` supplies ``eps``, ``s`` and ``dt``; its horizon is ignored.
    The path ends at ``w`` exactly.
    """
    _check_mass(m, w)
    dt = params.dt
    n1, n2 = int(round(T1 / dt)), int(round(T2 / dt))
    if n1 < 1 or abs(n1 * dt - T1) > 1e-9 * T1 or abs(n2 * dt - T2) > 1e-9 * max(T2, dt):
        raise ValueError("T1 and T2 must be positive multiples of dt")
    g = w.grid
    if n2 > 0:
        relax = solve_viscous(reflect(w), SolverParams(params.eps, params.s, dt, n2 * dt,
                                                      params.cfl_safety, params.dealias), flux)
        v = relax.values
    else:
        v = reflect(w).values[None, :]
    back = np.roll(v[::-1, ::-1], 1, axis=1)  # row i is v(T2 - i dt, -x)
    vals = np.empty((n1 + n2 + 1, g.n))
    ramp = np.arange(n1 + 1)[:, None] / n1
    vals[: n1 + 1] = (1 - ramp) * m + ramp * back[0]
    vals[n1:] = back
    vals[-1] = w.values
    return Trajectory(g, vals, dt, flux.id, params.eps, params.s,
                      meta={"scheme": "ramp-relax", "T1": T1, "T2": T2, "m": m,
                            "flux_deviations": list(flux.deviations)})


class Decomposition(NamedTuple):
    i_eps: float
    boundary_term: float
    backward_excess: float

    @property
    def residual(self) -> float:
        """``|I - boundary - excess| / I`` (0 for a zero-cost path)."""
        rhs = self.boundary_term + self.backward_excess
        if self.i_eps == 0:
            return abs(rhs)
        return abs(self.i_eps - rhs) / abs(self.i_eps)


def decomposition_check(traj: Trajectory, flux: Flux, eps: float | None = None, s: float | None = None,
                        rtol: float = 1e-12) -> Decomposition:
    """Split the cost of a path from a constant into boundary and backward parts.

    ``I = 0.5 |u(T) - m|^2 + (1/(2 eps)) |u_t + f(u)_x - (eps/2) A^s u|^2``.
    """
    u0 = traj.values[0]
    m = float(u0.mean())
    scale = max(1.0, float(np.max(np.abs(traj.values))))
    if np.max(np.abs(u0 - m)) > rtol * scale:
        raise NotFromConstant("path does not start from a constant state")
    rep = cost_i_eps(traj, flux, eps, s)
    boundary = 0.5 * float(np.mean((traj.values[-1] - m) ** 2))
    return Decomposition(rep.i_eps, boundary, backward_excess(traj, flux, rep.eps, rep.s))


@dataclass
class QuasipotentialReport:
    m: float
    target_value: float
    eps: float
    s: float
    T1: float
    T2: list = field(default_factory=list)
    path_costs: list = field(default_factory=list)
    excess: list = field(default_factory=list)
    best: float = math.inf
    mass_ok: bool = True
    tolerance: float = 0.0
    w: Field | None = field(default=None, repr=False)

    @property
    def gap(self) -> float:
        return self.best - self.target_value

    @property
    def relative_gap(self) -> float:
        if not math.isfinite(self.best):
            return math.inf
        if self.target_value == 0:
            return abs(self.best)
        return abs(self.gap) / self.target_value

    def excess_monotone(self, slack: float = 1e-6) -> bool:
        e = np.asarray(self.excess)
        return bool(np.all(np.diff(e) <= slack))

    def lower_bound_holds(self) -> bool:
        return all(c >= self.target_value - self.tolerance for c in self.path_costs)

    def to_dict(self) -> dict:
        d = asdict(self)
        d.pop("w")
        d.update(gap=self.gap, relative_gap=self.relative_gap)
        return d

    def to_json(self, **kw) -> str:
        return dumps(self.to_dict(), **kw)

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            wr = csv.writer(fh)
            wr.writerow(["T2", "path_cost", "excess"])
            wr.writerows(zip(self.T2, self.path_costs, self.excess))


def estimate_V(m: float, w: Field, params: SolverParams, flux: Flux, T2_schedule=DEFAULT_T2,
               T1: float = 0.1) -> QuasipotentialReport:
    """Cost of the ramp-relax paths over the ``T2`` schedule and the best value.

    A target with the wrong mass cannot be reached: the report then has
    ``best = inf`` and ``mass_ok = False``.
    """
    rep = QuasipotentialReport(m, target_value(m, w), params.eps, params.s, T1, w=w)
    if abs(w.mean() - m) > MASS_TOL:
        rep.mass_ok = False
        return rep
    for T2 in T2_schedule:
        path = ramp_relax_path(m, w, T1, T2, params, flux)
        d = decomposition_check(path, flux)
        rep.T2.append(float(T2))
        rep.path_costs.append(d.i_eps)
        rep.excess.append(d.backward_excess)
        rep.tolerance = max(rep.tolerance, abs(d.i_eps - d.boundary_term - d.backward_excess))
    rep.best = min(rep.path_costs)
    return rep

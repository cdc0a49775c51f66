"""The parabolic control cost of a trajectory.

For a trajectory ``u`` with snapshots ``u_j`` the residual is evaluated at
time midpoints::

    r_{j+1/2} = (u_{j+1} - u_j)/dt + (f(ubar_j))_x + (eps/2) A^s ubar_j,
    ubar_j = (u_j + u_{j+1})/2,

and the cost is ``(1/(2 eps)) ||r||^2`` in ``L2(0,T; H^-s)``. The same
number is recovered from the potential ``Phi = A^-s r`` (``H`` norm) and
from the control ``E = A^(s/2) Phi`` (plain ``L2``); the three routes are
computed separately and must agree to round-off.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from ._jsonutil import dumps
from .dynamics import Flux, Trajectory
from .errors import MassDrift
from .spectral import Field

RESIDUAL_MEAN_TOL = 1e-9


def _rfft(a: np.ndarray, n: int) -> np.ndarray:
    return np.fft.rfft(a, axis=-1) / n


def _mode_weights(n: int) -> np.ndarray:
    # multiplicity of each real-FFT mode in Parseval's sum
    w = np.full(n // 2 + 1, 2.0)
    w[0] = 1.0
    w[-1] = 1.0
    return w


def _sobolev_sq_rows(hat: np.ndarray, grid, sigma: float) -> np.ndarray:
    """Row-wise squared homogeneous ``H^sigma`` norms from real-FFT rows."""
    w = _mode_weights(grid.n) * grid.multiplier(sigma)
    w[0] = 0.0
    return np.sum(np.abs(hat) ** 2 * w, axis=-1)


def _residual_hat(traj: Trajectory, flux: Flux, eps: float, s: float, sign: float = 1.0):
    """Spectral coefficients of the midpoint residual and its slice means.

    ``sign=-1`` flips the diffusion term, giving the backward-equation residual.
    """
    g = traj.grid
    u = traj.values
    if u.shape[0] < 2:
        raise ValueError("a residual needs at least two snapshots")
    ubar = 0.5 * (u[1:] + u[:-1])
    dudt = (u[1:] - u[:-1]) / traj.dt
    means = dudt.mean(axis=1)
    hat = _rfft(dudt, g.n)
    hat += g.ddx_multiplier() * _rfft(flux.f(ubar), g.n)
    hat += sign * 0.5 * eps * g.multiplier(s) * _rfft(ubar, g.n)
    hat[:, 0] = 0.0
    return hat, means


def _gate(means: np.ndarray):
    bad = np.flatnonzero(np.abs(means) >= RESIDUAL_MEAN_TOL)
    if bad.size:
        j = int(bad[0])
        raise MassDrift(f"residual slice {j} has mean {means[j]:.3e}; mass is not conserved")


def _eps_s(traj: Trajectory, eps, s):
    eps = traj.eps if eps is None else eps
    s = traj.s if s is None else s
    if eps is None or s is None:
        raise ValueError("eps and s must be given for a trajectory without solver metadata")
    return float(eps), float(s)


def residual(traj: Trajectory, flux: Flux, eps: float | None = None, s: float | None = None) -> list:
    """Midpoint residual slices, mean-projected after the mass gate."""
    eps, s = _eps_s(traj, eps, s)
    hat, means = _residual_hat(traj, flux, eps, s)
    _gate(means)
    n = traj.grid.n
    return [Field(traj.grid, row) for row in np.fft.irfft(hat * n, n=n, axis=-1)]


@dataclass
class CostReport:
    """Cost of one trajectory with every intermediate norm.

    ``i_eps`` is computed from the residual; ``i_eps_phi`` and
    ``i_eps_control`` are the same quantity from ``Phi`` and ``E``.
    """

    i_eps: float
    residual_dual_norm: float
    phi_h_norm: float
    control_l2: float
    eps: float
    s: float
    bound_checks: dict = field(default_factory=dict)
    finite: bool = True
    reason: str = ""
    deviations: list = field(default_factory=list)
    controls: np.ndarray | None = field(default=None, repr=False)

    @property
    def i_eps_phi(self) -> float:
        return 0.5 / self.eps * self.phi_h_norm**2

    @property
    def i_eps_control(self) -> float:
        return 0.5 / self.eps * self.control_l2**2

    def triple_spread(self) -> float:
        """Largest pairwise relative disagreement of the three representations."""
        vals = [self.i_eps, self.i_eps_phi, self.i_eps_control]
        scale = max(abs(v) for v in vals)
        if scale == 0:
            return 0.0
        return (max(vals) - min(vals)) / scale

    @classmethod
    def infinite(cls, eps, s, reason) -> "CostReport":
        inf = math.inf
        return cls(inf, inf, inf, inf, eps, s, finite=False, reason=reason)

    def to_dict(self) -> dict:
        d = asdict(self)
        d.pop("controls")
        d["i_eps_phi"] = self.i_eps_phi
        d["i_eps_control"] = self.i_eps_control
        return d

    def to_json(self, **kw) -> str:
        return dumps(self.to_dict(), **kw)


def cost_i_eps(traj: Trajectory, flux: Flux, eps: float | None = None, s: float | None = None,
               on_mass_drift: str = "raise") -> CostReport:
    """Evaluate the cost of ``traj``; snapshot 0 is the initial datum.

    A trajectory whose residual carries mass has infinite cost. By default
    that is reported as :class:`MassDrift`; ``on_mass_drift="inf"`` returns
    an infinite report instead.
    """
    eps, s = _eps_s(traj, eps, s)
    g = traj.grid
    hat, means = _residual_hat(traj, flux, eps, s)
    try:
        _gate(means)
    except MassDrift as exc:
        if on_mass_drift == "inf":
            return CostReport.infinite(eps, s, str(exc))
        raise
    dt = traj.dt
    dual = math.sqrt(dt * float(np.sum(_sobolev_sq_rows(hat, g, -s))))

    phi_hat = hat * g.multiplier(-s)
    phi_h = math.sqrt(dt * float(np.sum(_sobolev_sq_rows(phi_hat, g, s))))

    E_hat = phi_hat * g.multiplier(s / 2)
    E = np.fft.irfft(E_hat * g.n, n=g.n, axis=-1)
    control = math.sqrt(dt * float(np.sum(np.mean(E**2, axis=1))))

    rep = CostReport(0.5 / eps * dual**2, dual, phi_h, control, eps, s,
                     deviations=list(traj.meta.get("flux_deviations", [])), controls=E)
    rep.bound_checks = apriori_bounds(traj, rep)
    return rep


def apriori_bounds(traj: Trajectory, report: CostReport) -> dict:
    """Margins of the two energy bounds (negative means violated).

    ``bound1``: ``2|u0|^2 + 4 I - eps ||u||_H^2``;
    ``bound2``: ``2|u0|^2 + 4 I - sup_t |u(t)|^2``.
    """
    g = traj.grid
    u = traj.values
    u0_sq = float(np.mean(u[0] ** 2))
    ubar = 0.5 * (u[1:] + u[:-1])
    h_sq = traj.dt * float(np.sum(_sobolev_sq_rows(_rfft(ubar, g.n), g, report.s)))
    sup_sq = float(np.max(np.mean(u**2, axis=1)))
    budget = 2 * u0_sq + 4 * report.i_eps
    return {"bound1": budget - report.eps * h_sq, "bound2": budget - sup_sq}


def backward_excess(traj: Trajectory, flux: Flux, eps: float | None = None, s: float | None = None) -> float:
    """``(1/(2 eps)) ||u_t + f(u)_x - (eps/2) A^s u||^2`` in ``L2(H^-s)``."""
    eps, s = _eps_s(traj, eps, s)
    hat, means = _residual_hat(traj, flux, eps, s, sign=-1.0)
    _gate(means)
    return 0.5 / eps * traj.dt * float(np.sum(_sobolev_sq_rows(hat, traj.grid, -s)))


def time_modulus(traj: Trajectory, max_lag: int | None = None) -> tuple:
    """Modulus ``w(delta) = sup_{|t-r| <= delta} d_{H^-1}(u(t), u(r))``.

    Returns ``(deltas, w)`` for ``delta = lag * dt``, ``lag = 1..max_lag``.
    """
    g = traj.grid
    hat = _rfft(traj.values, g.n)
    w = np.sqrt(_mode_weights(g.n) / (1.0 + (2 * np.pi * g.kr) ** 2))
    W = hat * w
    nt = W.shape[0]
    max_lag = nt - 1 if max_lag is None else min(max_lag, nt - 1)
    omega = np.empty(max_lag)
    for lag in range(1, max_lag + 1):
        d = np.sqrt(np.sum(np.abs(W[lag:] - W[:-lag]) ** 2, axis=1))
        omega[lag - 1] = d.max()
    omega = np.maximum.accumulate(omega)
    return traj.dt * np.arange(1, max_lag + 1), omega


def fit_holder_exponent(deltas: np.ndarray, omega: np.ndarray) -> float:
    """Least-squares slope of ``log w`` against ``log delta``."""
    slope, _ = np.polyfit(np.log(deltas), np.log(omega), 1)
    return float(slope)

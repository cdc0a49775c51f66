"""Time integration of the fractional viscous and controlled conservation laws.

Solved equation, with ``A^sigma = (-d_xx)^sigma``::

    u_t + (f(u))_x = -(eps/2) A^s u + A^(s/2) E

``E = 0`` is the uncontrolled viscous law. The fractional diffusion is
integrated exactly per mode through an integrating factor; transport and
control are advanced with Heun's method (second order). The flux is
evaluated pointwise and differentiated spectrally.

:func:`entropic_reference` produces the entropy solution of the inviscid law
with a first-order Engquist-Osher finite-volume scheme on a refined grid.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.integrate import cumulative_trapezoid

from .errors import CFLViolation, ConfigError, MassDrift, NonFinite, NonZeroMean
from .spectral import Field, TorusGrid


class FluxDeviationWarning(UserWarning):
    """A registered flux violates a standing assumption (bounded, Lipschitz)."""


@dataclass(frozen=True)
class Flux:
    """Flux function with derivative and regularity flags.

    ``poly_degree`` is set for polynomial fluxes; only those may be run with
    the 2/3 dealiasing filter.
    """

    id: str
    f: Callable[[np.ndarray], np.ndarray]
    fprime: Callable[[np.ndarray], np.ndarray]
    bounded: bool
    globally_lipschitz: bool
    lipschitz_constant: float
    poly_degree: int | None = None
    deviations: tuple = ()

    def max_speed(self, u: np.ndarray) -> float:
        return float(np.max(np.abs(self.fprime(np.asarray(u, dtype=float)))))


def _sin_flux():
    return Flux("sin", np.sin, np.cos, True, True, 1.0)


def _saturated_flux():
    # f' = (1 - u^2)/(1 + u^2)^2, largest in modulus at u = 0
    return Flux(
        "saturated",
        lambda u: u / (1.0 + u * u),
        lambda u: (1.0 - u * u) / (1.0 + u * u) ** 2,
        True,
        True,
        1.0,
    )


def _burgers_flux():
    return Flux(
        "burgers",
        lambda u: 0.5 * u * u,
        lambda u: np.asarray(u, dtype=float) * 1.0,
        False,
        False,
        math.inf,
        poly_degree=2,
        deviations=("flux is unbounded and not globally Lipschitz; data kept in a compact range",),
    )


def _linear_flux(c=1.0):
    c = float(c)
    return Flux(
        "linear",
        lambda u: c * np.asarray(u, dtype=float),
        lambda u: np.full_like(np.asarray(u, dtype=float), c),
        False,
        True,
        abs(c),
        poly_degree=1,
        deviations=("affine flux, test use only",),
    )


FLUXES = {
    "sin": _sin_flux,
    "saturated": _saturated_flux,
    "burgers": _burgers_flux,
    "linear": _linear_flux,
}


def get_flux(name: str, **kwargs) -> Flux:
    """Look up a registered flux. ``burgers`` comes with a deviation warning."""
    try:
        flux = FLUXES[name](**kwargs)
    except KeyError:
        raise ConfigError(f"unknown flux {name!r}; known: {sorted(FLUXES)}") from None
    if name == "burgers":
        warnings.warn(
            "burgers flux is not bounded; accepted as a documented deviation",
            FluxDeviationWarning,
            stacklevel=2,
        )
    return flux


def check_lipschitz(flux: Flux, lo: float = -10.0, hi: float = 10.0, npts: int = 10_000) -> bool:
    """Sampled check of ``|f(b) - f(a)| <= L |b - a|`` on consecutive probe points."""
    v = np.linspace(lo, hi, npts)
    fv = flux.f(v)
    slopes = np.abs(np.diff(fv)) / np.diff(v)
    return bool(np.all(slopes <= flux.lipschitz_constant * (1 + 1e-12)))


@dataclass(frozen=True)
class SolverParams:
    eps: float
    s: float
    dt: float
    T: float
    cfl_safety: float = 0.9
    dealias: bool = False

    def __post_init__(self):
        if not self.eps > 0:
            raise ConfigError(f"eps must be positive, got {self.eps}")
        if not 0.5 < self.s <= 1.0:
            raise ConfigError(f"s must lie in (1/2, 1], got {self.s}")
        if not (self.dt > 0 and self.T > 0):
            raise ConfigError("dt and T must be positive")
        if not 0 < self.cfl_safety <= 1:
            raise ConfigError("cfl_safety must lie in (0, 1]")
        steps = self.T / self.dt
        if abs(steps - round(steps)) > 1e-8 * max(1.0, steps):
            raise ConfigError(f"T={self.T} is not an integer multiple of dt={self.dt}")

    @property
    def n_steps(self) -> int:
        return int(round(self.T / self.dt))

    def as_dict(self) -> dict:
        return dict(eps=self.eps, s=self.s, dt=self.dt, T=self.T,
                    cfl_safety=self.cfl_safety, dealias=self.dealias)


@dataclass
class Trajectory:
    """Snapshots ``u(t_j)``, ``t_j = j dt``, stored row-wise in ``values``.

    ``controls`` holds the midpoint control slices ``E_{j+1/2}`` when the
    trajectory was produced by :func:`solve_controlled` (or reconstructed by
    the cost module).
    """

    grid: TorusGrid
    values: np.ndarray
    dt: float
    flux_id: str
    eps: float | None = None
    s: float | None = None
    controls: np.ndarray | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if v.ndim != 2 or v.shape[1] != self.grid.n:
            raise ValueError(f"values must have shape (nt+1, {self.grid.n})")
        v.flags.writeable = False
        self.values = v
        if self.controls is not None:
            c = np.array(self.controls, dtype=float)
            if c.shape != (v.shape[0] - 1, self.grid.n):
                raise ValueError("controls must have one slice per time step")
            c.flags.writeable = False
            self.controls = c

    @property
    def n_snapshots(self) -> int:
        return self.values.shape[0]

    @property
    def T(self) -> float:
        return self.dt * (self.n_snapshots - 1)

    @property
    def times(self) -> np.ndarray:
        return self.dt * np.arange(self.n_snapshots)

    def snapshot(self, j: int) -> Field:
        return Field(self.grid, self.values[j])

    @property
    def snapshots(self) -> list:
        return [Field(self.grid, row) for row in self.values]

    def masses(self) -> np.ndarray:
        return self.values.mean(axis=1)

    def mass_drift(self) -> float:
        m = self.masses()
        return float(np.max(np.abs(m - m[0])))

    def check_mass(self, rtol: float = 1e-10):
        scale = max(1.0, float(np.max(np.abs(self.values))))
        if self.mass_drift() > rtol * scale:
            raise MassDrift(f"mass drifts by {self.mass_drift():.3e}")


def _as_array(E, grid: TorusGrid, n_steps: int) -> np.ndarray:
    if isinstance(E, np.ndarray):
        arr = np.asarray(E, dtype=float)
    else:
        arr = np.array([e.values if isinstance(e, Field) else e for e in E], dtype=float)
    if arr.shape != (n_steps, grid.n):
        raise ValueError(f"control must have shape ({n_steps}, {grid.n}), got {arr.shape}")
    return arr


class _SpectralStepper:
    """Integrating-factor Heun step for one set of parameters."""

    def __init__(self, grid: TorusGrid, params: SolverParams, flux: Flux):
        if params.dealias and flux.poly_degree is None:
            raise ConfigError("2/3 dealiasing is only exact for polynomial fluxes")
        self.grid, self.params, self.flux = grid, params, flux
        n = grid.n
        self.ik = grid.ddx_multiplier()
        self.decay = np.exp(-0.5 * params.eps * grid.multiplier(params.s) * params.dt)
        self.keep = (grid.kr <= n // 3) if params.dealias else None
        self.max_dt_factor = params.cfl_safety * grid.dx

    def to_phys(self, uh):
        return np.fft.irfft(uh * self.grid.n, n=self.grid.n)

    def to_spec(self, u):
        return np.fft.rfft(u) / self.grid.n

    def transport(self, u):
        fh = self.to_spec(self.flux.f(u))
        if self.keep is not None:
            fh = fh * self.keep
        return -self.ik * fh

    def check_cfl(self, u):
        speed = self.flux.max_speed(u)
        if speed * self.params.dt > self.max_dt_factor:
            raise CFLViolation(
                f"dt={self.params.dt} exceeds cfl_safety*dx/max|f'| = "
                f"{self.max_dt_factor / max(speed, 1e-300):.3e}"
            )

    def step(self, uh, u, src=None):
        dt, e = self.params.dt, self.decay
        n0 = self.transport(u)
        if src is not None:
            n0 = n0 + src
        ustar_h = e * (uh + dt * n0)
        ustar = self.to_phys(ustar_h)
        self.check_cfl(ustar)
        n1 = self.transport(ustar)
        if src is not None:
            n1 = n1 + src
        new_h = e * (uh + 0.5 * dt * n0) + 0.5 * dt * n1
        return new_h


def _integrate(u0: Field, params: SolverParams, flux: Flux, sources=None, save_every: int = 1):
    grid = u0.grid
    st = _SpectralStepper(grid, params, flux)
    st.check_cfl(u0.values)
    nsteps = params.n_steps
    if nsteps % save_every:
        raise ConfigError("save_every must divide the number of steps")
    out = np.empty((nsteps // save_every + 1, grid.n))
    out[0] = u0.values
    uh = st.to_spec(u0.values)
    u = u0.values.copy()
    for j in range(nsteps):
        src = None if sources is None else sources[j]
        uh = st.step(uh, u, src)
        u = st.to_phys(uh)
        if not np.all(np.isfinite(u)):
            raise NonFinite(f"solution blew up at step {j + 1}")
        st.check_cfl(u)
        if (j + 1) % save_every == 0:
            out[(j + 1) // save_every] = u
    return out


def _meta(flux: Flux, scheme: str) -> dict:
    return {"scheme": scheme, "flux_deviations": list(flux.deviations)}


def solve_viscous(u0: Field, params: SolverParams, flux: Flux, save_every: int = 1) -> Trajectory:
    """Integrate ``u_t + f(u)_x = -(eps/2) A^s u`` from ``u0``."""
    if not np.all(np.isfinite(u0.values)):
        raise NonFinite("initial datum is not finite")
    vals = _integrate(u0, params, flux, save_every=save_every)
    return Trajectory(u0.grid, vals, params.dt * save_every, flux.id, params.eps, params.s,
                      meta=_meta(flux, "if-heun") | {"params": params.as_dict()})


def solve_controlled(u0: Field, params: SolverParams, flux: Flux, E, save_every: int = 1) -> Trajectory:
    """Integrate the controlled law with control slices ``E[j]`` on ``(t_j, t_{j+1})``.

    Every slice must have zero mean: the control enters through
    ``A^(s/2)``, which annihilates constants.
    """
    grid = u0.grid
    nsteps = params.n_steps
    E = _as_array(E, grid, nsteps)
    scale = max(1.0, float(np.max(np.abs(E)))) if E.size else 1.0
    means = E.mean(axis=1)
    bad = np.flatnonzero(np.abs(means) > 1e-10 * scale)
    if bad.size:
        raise NonZeroMean(f"control has mean {means[bad[0]]:.3e}", int(bad[0]))
    Eh = np.fft.rfft(E, axis=1) / grid.n
    sources = Eh * grid.multiplier(params.s / 2)
    vals = _integrate(u0, params, flux, sources=sources, save_every=save_every)
    return Trajectory(grid, vals, params.dt * save_every, flux.id, params.eps, params.s,
                      controls=E if save_every == 1 else None,
                      meta=_meta(flux, "if-heun") | {"params": params.as_dict()})


class _EOFlux:
    """Engquist-Osher numerical flux from a tabulated split of ``f``."""

    def __init__(self, flux: Flux, lo: float, hi: float, npts: int = 1 << 16):
        pad = 0.05 * max(hi - lo, 1e-3)
        self.v = np.linspace(lo - pad, hi + pad, npts)
        self.flux = flux
        self.fplus = cumulative_trapezoid(np.maximum(flux.fprime(self.v), 0.0), self.v, initial=0.0)
        self.f0 = float(flux.f(self.v[:1])[0])

    def plus(self, u):
        return np.interp(u, self.v, self.fplus)

    def minus(self, u):
        return self.flux.f(u) - self.f0 - self.plus(u)

    def __call__(self, a, b):
        return self.f0 + self.plus(a) + self.minus(b)


def entropic_reference(u0, T: float, flux: Flux, refine: int = 4, dt_out: float | None = None,
                       cfl: float = 0.5, grid: TorusGrid | None = None) -> Trajectory:
    """Entropy solution of ``u_t + f(u)_x = 0`` by Engquist-Osher finite volumes.

    ``u0`` is either a :class:`Field` (taken as cell averages on the base
    grid and injected piecewise constant) or a callable sampled at the
    refined cell centres, in which case ``grid`` gives the base grid. The
    base cell ``i`` is centred at ``x_i``; the returned snapshots are the
    averages of its ``refine`` sub-cells.
    """
    if refine < 1 or int(refine) != refine:
        raise ConfigError("refine must be a positive integer")
    if not 0 < cfl <= 1:
        raise CFLViolation(f"Engquist-Osher is monotone only for CFL <= 1, got {cfl}")
    if isinstance(u0, Field):
        grid = u0.grid
        fine = np.repeat(u0.values, refine)
    else:
        if grid is None:
            raise ConfigError("a callable initial datum needs the base grid")
        N = grid.n * refine
        xc = (np.arange(N) + 0.5) / N - 0.5 / grid.n
        fine = np.asarray(u0(np.mod(xc, 1.0)), dtype=float) * np.ones(N)
    if dt_out is None:
        dt_out = T / 100
    n_out = int(round(T / dt_out))
    if abs(n_out * dt_out - T) > 1e-9 * T:
        raise ConfigError("T must be a multiple of dt_out")
    N = grid.n * refine
    h = 1.0 / N
    eo = _EOFlux(flux, float(fine.min()), float(fine.max()))
    speed = max(eo.flux.max_speed(eo.v), 1e-12)
    nsub = max(1, math.ceil(dt_out * speed / (cfl * h)))
    lam = dt_out / nsub / h

    def restrict(w):
        return w.reshape(grid.n, refine).mean(axis=1)

    out = np.empty((n_out + 1, grid.n))
    out[0] = restrict(fine)
    u = fine.copy()
    for j in range(n_out):
        for _ in range(nsub):
            F = eo(u, np.roll(u, -1))  # flux at i+1/2
            u = u - lam * (F - np.roll(F, 1))
        out[j + 1] = restrict(u)
    meta = {"scheme": "engquist-osher", "refine": refine, "substeps": nsub,
            "flux_deviations": list(flux.deviations)}
    return Trajectory(grid, out, dt_out, flux.id, None, None, meta=meta)

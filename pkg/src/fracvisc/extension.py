"""Weighted-harmonic extension realizing ``(-d_xx)^s``.

A mode ``cos(2 pi k x)`` extends to ``theta(2 pi |k| y) cos(2 pi k x)`` where
the profile solves

    (z^(1-2s) theta')' = z^(1-2s) theta,   theta(0) = 1,  theta(inf) = 0.

With ``l_s = -lim_{z->0} z^(1-2s) theta'(z)`` the weighted normal derivative
of the extension of mode ``k`` is ``-l_s (2 pi k)^(2s)``, so
``c_s = 1 / l_s`` turns the Dirichlet-to-Neumann map into the Fourier
multiplier. ``l_s`` is computed by finite differences; the closed form
``2^(1-2s) Gamma(1-s) / Gamma(s)`` is only a cross-check.

Discretization: flux form in ``zeta = z^(2s) / (2s)`` (in which
``z^(1-2s) theta' = d theta / d zeta``), reaction term with the consistent
piecewise-linear mass in ``z``, solved by a backward Riccati sweep on the
ratios ``F / theta`` which avoids the cancellation of ``theta_1 - theta_0``
on strongly graded grids. Two Richardson levels remove the leading errors.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
from scipy.special import gamma as _gamma

from .errors import InvalidOrder, TraceMismatch, UnresolvedLayer
from .spectral import Field, TorusGrid

CAUCHY_RTOL = 1e-6


def grading_exponent(s: float) -> float:
    """Default ``max(2, 1/(2-2s))`` for sampling grids."""
    return max(2.0, 1.0 / (2.0 - 2.0 * s))


def profile_grading(s: float) -> float:
    """Grading of the profile grids: ``k/(2-2s)`` with the least integer ``k`` giving at least 2.

    The boundary layer leaves an error term of order ``gam (2-2s)`` in ``1/m``;
    making it an integer (1 or 2) lets the two Richardson levels remove it.
    """
    a = 2.0 - 2.0 * s
    return math.ceil(2.0 * a - 1e-12) / a


Y_GRADING_CAP = 3.0


def y_grading(s: float) -> float:
    """Grading of sampling grids in ``y``, capped so the first cell stays well above round-off."""
    return min(grading_exponent(s), Y_GRADING_CAP)


def graded_grid(length: float, m: int, gam: float) -> np.ndarray:
    """``length * (j/m)^gam``, ``j = 0..m``."""
    return length * (np.arange(m + 1) / m) ** gam


def _moment(lo, hi, p):
    return (hi**p - lo**p) / p


def _mass_rows(z: np.ndarray, a: float):
    """Consistent mass of the weight ``z^(a-1)`` for hats in ``z``, lumped by dual cell.

    Returns lower/diag/upper couplings of node ``j``'s dual cell
    ``[z_{j-1/2}, z_{j+1/2}]`` integral of ``z^(a-1) theta``.
    """
    h = np.diff(z)
    zm = 0.5 * (z[1:] + z[:-1])
    N = len(z)
    lo_c, d, up_c = np.zeros(N), np.zeros(N), np.zeros(N)
    for a_, b_, left in ((z[:-1], zm, True), (zm, z[1:], False)):
        m0, m1 = _moment(a_, b_, a), _moment(a_, b_, a + 1)
        wl = (z[1:] * m0 - m1) / h
        wr = (m1 - z[:-1] * m0) / h
        if left:
            d[:-1] += wl
            up_c[:-1] += wr
        else:
            d[1:] += wr
            lo_c[1:] += wl
    return lo_c, d, up_c


def _sweep(z: np.ndarray, s: float, kappa: float = 1.0):
    """Solve ``(z^(1-2s) th')' = kappa^2 z^(1-2s) th`` with ``th(0)=1``, ``th(end)=0``.

    Returns nodal ``theta``, the element fluxes ``F = z^(1-2s) theta'`` and the
    extrapolated boundary flux ``F(0)``.
    """
    a = 2.0 - 2.0 * s
    zeta = z ** (2 * s) / (2 * s)
    dz = np.diff(zeta)
    lo_c, d, up_c = (kappa**2 * r for r in _mass_rows(z, a))
    S = lo_c + d + up_c
    M = len(z) - 1
    y = np.empty(M)
    y[M - 1] = -1.0 / dz[M - 1]
    for j in range(M - 1, 0, -1):
        P = (y[j] * (1.0 - up_c[j] * dz[j]) - S[j]) / (1.0 - lo_c[j] * dz[j - 1])
        y[j - 1] = P / (1.0 - dz[j - 1] * P)
    theta = np.empty(M + 1)
    theta[0] = 1.0
    theta[1:] = np.cumprod(1.0 + dz * y)
    F = y * theta[:-1]
    # F is the zeta-average of the flux on the first element; remove the
    # growth int_0^z t^(1-2s) theta dt of the flux across it
    z1, d1 = z[1], theta[1] - theta[0]
    corr = kappa**2 * (z1**a / (a * (1 + a / (2 * s))) + d1 * z1**a / ((a + 1) * (1 + (a + 1) / (2 * s))))
    return theta, F, F[0] - corr


def _energy(z: np.ndarray, theta: np.ndarray, F: np.ndarray, s: float) -> float:
    """``int z^(1-2s) (theta'^2 + theta^2) dz`` for the discrete profile.

    Derivative part: ``F`` constant per element in ``zeta``; value part: theta
    linear in ``z`` integrated exactly against the weight.
    """
    a = 2.0 - 2.0 * s
    zeta = z ** (2 * s) / (2 * s)
    grad = float(np.sum(F**2 * np.diff(zeta)))
    return grad + _weighted_l2_linear(z, theta, a)


def _weighted_l2_linear(z, v, a, w=None):
    """``int z^(a-1) v w`` with ``v, w`` piecewise linear in ``z`` (exact)."""
    if w is None:
        w = v
    lo, hi = z[:-1], z[1:]
    h = hi - lo
    m0, m1, m2 = _moment(lo, hi, a), _moment(lo, hi, a + 1), _moment(lo, hi, a + 2)
    # v = v0 + (v1 - v0)(t - lo)/h = A + B t
    Bv = (v[1:] - v[:-1]) / h
    Av = v[:-1] - Bv * lo
    Bw = (w[1:] - w[:-1]) / h
    Aw = w[:-1] - Bw * lo
    return float(np.sum(Av * Aw * m0 + (Av * Bw + Bv * Aw) * m1 + Bv * Bw * m2))


@dataclass
class ExtensionProfile:
    """Profile ``theta`` on the finest graded grid plus the extrapolated constants."""

    s: float
    z: np.ndarray
    theta: np.ndarray
    flux: np.ndarray
    ell: float
    energy: float
    ell_levels: list = field(default_factory=list)
    cauchy: float = 0.0
    Z: float = 40.0
    gamma: float = 2.0

    @property
    def c_s(self) -> float:
        return 1.0 / self.ell

    def theta_at(self, z) -> np.ndarray:
        """Interpolate linearly in ``zeta``; zero beyond the truncation point."""
        z = np.asarray(z, dtype=float)
        p = 2 * self.s
        return np.interp(z**p, self.z**p, self.theta, right=0.0)

    def weighted_flux_nodes(self) -> np.ndarray:
        """``z^(1-2s) theta'`` at the nodes (neighbouring element average)."""
        F = self.flux
        out = np.empty(len(self.z))
        out[0] = -self.ell
        out[1:-1] = 0.5 * (F[1:] + F[:-1])
        out[-1] = F[-1]
        return out

    def tail_z0(self) -> float:
        """Smallest ``z0`` with ``theta(z) <= exp(z0 - z)`` on the whole grid."""
        mask = self.theta > 0
        return float(np.max(np.log(self.theta[mask]) + self.z[mask]))

    def rows(self):
        for zz, th, fl in zip(self.z, self.theta, self.weighted_flux_nodes()):
            yield zz, th, fl

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["z", "theta", "weighted_flux"])
            w.writerows(self.rows())


def literature_constant(s: float) -> float:
    """``2^(2s-1) Gamma(s) / Gamma(1-s)``, the reference value of ``c_s``."""
    return 2 ** (2 * s - 1) * _gamma(s) / _gamma(1 - s)


def _check_s(s):
    if not 0.5 < s < 1.0:
        raise InvalidOrder(f"profile needs s in (1/2, 1), got {s}")


def _richardson(vals):
    r1 = [2 * vals[i + 1] - vals[i] for i in range(len(vals) - 1)]
    r2 = [(4 * r1[i + 1] - r1[i]) / 3 for i in range(len(r1) - 1)]
    return r1, r2


_PROFILE_CACHE: dict = {}


def solve_profile(s: float, m: int = 1000, Z: float = 40.0, levels: int = 4,
                  gam: float | None = None, rtol: float = CAUCHY_RTOL) -> ExtensionProfile:
    """Profile on grids ``m, 2m, ..`` (``levels`` of them) with Richardson extrapolation.

    Raises :class:`UnresolvedLayer` if the last two extrapolated values of
    ``l_s`` differ by more than ``rtol`` relative.
    """
    _check_s(s)
    if Z < 30:
        raise ValueError("truncation Z must be at least 30")
    if levels < 3:
        raise ValueError("two Richardson levels need at least three grids")
    key = (float(s), m, float(Z), levels, gam, rtol)
    if key in _PROFILE_CACHE:
        return _PROFILE_CACHE[key]
    g = profile_grading(s) if gam is None else gam
    ells, ens = [], []
    for i in range(levels):
        z = graded_grid(Z, m * 2**i, g)
        theta, F, F0 = _sweep(z, s)
        ells.append(-F0)
        ens.append(_energy(z, theta, F, s))
    _, r2 = _richardson(ells)
    _, e2 = _richardson(ens)
    cauchy = abs(r2[-1] - r2[-2]) / abs(r2[-1])
    if not np.isfinite(cauchy) or cauchy > rtol:
        raise UnresolvedLayer(f"l_s not converged under refinement: {r2[-2]:.10g} vs {r2[-1]:.10g}")
    prof = ExtensionProfile(float(s), z, theta, F, r2[-1], e2[-1], ells, cauchy, Z, g)
    _PROFILE_CACHE[key] = prof
    return prof


def c_s(s: float) -> float:
    """Calibrated constant ``1 / l_s``."""
    return solve_profile(s).c_s


def scale_invariance_ratios(s: float, ks, m: int = 1000, Z: float = 40.0) -> np.ndarray:
    """Solve the mode-``k`` problem directly in ``y`` and return the DtN ratios.

    The y-grid for mode ``k`` is the z-grid divided by ``2 pi k``; the
    returned ratio ``-lim y^(1-2s) d_y u_k / (2 pi k)^(2s)`` should not depend
    on ``k``.
    """
    _check_s(s)
    g = profile_grading(s)
    out = []
    for k in ks:
        kappa = 2 * np.pi * abs(k)
        vals = []
        for i in range(4):
            y = graded_grid(Z, m * 2**i, g) / kappa
            vals.append(-_sweep(y, s, kappa)[2] / kappa ** (2 * s))
        out.append(_richardson(vals)[1][-1])
    return np.array(out)


@dataclass
class ExtensionField:
    """Samples of the extension on ``x_i`` times a graded ``y``-grid."""

    u: Field
    s: float
    y: np.ndarray
    values: np.ndarray
    profile: ExtensionProfile = field(repr=False)

    @property
    def trace(self) -> np.ndarray:
        return self.values[:, 0]

    def mode_profiles(self) -> np.ndarray:
        """Real-FFT coefficients of every ``y``-level, shape ``(n/2+1, len(y))``."""
        return np.fft.rfft(self.values, axis=0) / self.u.n

    def rows(self):
        x = self.u.grid.x
        for i, xi in enumerate(x):
            for j, yj in enumerate(self.y):
                yield xi, yj, self.values[i, j]

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["x", "y", "value"])
            w.writerows(self.rows())


def _mode_theta(profile: ExtensionProfile, kr: np.ndarray, y: np.ndarray) -> np.ndarray:
    z = 2 * np.pi * kr[:, None] * y[None, :]
    th = profile.theta_at(z)
    th[0] = 1.0  # zero mode extended as a constant
    return th


def extend(u: Field, s: float, Y: float = 3.0, m_y: int = 512, profile: ExtensionProfile | None = None,
           y: np.ndarray | None = None) -> ExtensionField:
    """s-harmonic extension of ``u`` by per-mode profile synthesis."""
    _check_s(s)
    profile = profile or solve_profile(s)
    if y is None:
        y = graded_grid(Y, m_y, y_grading(s))
    y = np.asarray(y, dtype=float)
    th = _mode_theta(profile, u.grid.kr, y)
    vals = np.fft.irfft(u.rhat[:, None] * th * u.n, n=u.n, axis=0)
    vals[:, 0] = u.values  # trace is exact by construction
    return ExtensionField(u, s, y, vals, profile)


def dirichlet_to_neumann(ext: ExtensionField) -> Field:
    """``-c_s lim y^(1-2s) d_y ext`` per mode; equals ``(2 pi k)^(2s) u_k`` when resolved."""
    prof = ext.profile
    u = ext.u
    kappa = 2 * np.pi * u.grid.kr
    weighted = -prof.ell * kappa ** (2 * ext.s)  # limit of y^(1-2s) d_y theta(kappa y)
    weighted[0] = 0.0
    return Field.from_rspectrum(u.grid, -prof.c_s * weighted * u.rhat)


def _mode_weights(n):
    w = np.full(n // 2 + 1, 2.0)
    w[0] = w[-1] = 1.0
    return w


def weighted_energy(ext_values: np.ndarray, y: np.ndarray, s: float, grid: TorusGrid,
                    other: np.ndarray | None = None) -> float:
    """``int int y^(1-2s) grad a . grad b`` for fields sampled on ``x`` times ``y``.

    Each mode is taken piecewise linear in ``y`` and integrated exactly
    against the weight; ``x`` is handled spectrally.
    """
    a_exp = 2.0 - 2.0 * s
    A = np.fft.rfft(ext_values, axis=0) / grid.n
    B = A if other is None else np.fft.rfft(other, axis=0) / grid.n
    w = _mode_weights(grid.n)
    kappa = 2 * np.pi * grid.kr
    h = np.diff(y)
    m0 = _moment(y[:-1], y[1:], a_exp)
    total = 0.0
    for k in range(len(kappa)):
        ar, ai = A[k].real, A[k].imag
        br, bi = B[k].real, B[k].imag
        grad = np.sum(((np.diff(ar) * np.diff(br) + np.diff(ai) * np.diff(bi)) / h**2) * m0)
        val = _weighted_l2_linear(y, ar, a_exp, br) + _weighted_l2_linear(y, ai, a_exp, bi)
        total += w[k] * (grad + kappa[k] ** 2 * val)
    return float(total)


class EnergyCheck(NamedTuple):
    lhs: float
    rhs: float
    margin: float


def _bump_y(y, y0, width):
    t = np.clip((y - y0) / width, 0.0, 1.0)
    return np.sin(np.pi * t) ** 2


def energy_identity_check(u: Field, s: float, n_bumps: int = 10, delta: float = 0.1,
                          seed: int = 0, Y: float = 3.0, m_y: int = 2048) -> EnergyCheck:
    """``|u|^2_{H^s}`` against ``c_s`` times the weighted energy of the extension.

    ``rhs`` uses the profile energy per mode. ``margin`` is the smallest
    energy increase over ``n_bumps`` perturbations ``ext + delta * bump``
    with bumps vanishing at ``y = 0`` (positive when the extension minimizes).
    """
    prof = solve_profile(s)
    g = u.grid
    w = _mode_weights(g.n)
    mult = g.multiplier(s)
    lhs = float(np.sum(w * mult * np.abs(u.rhat) ** 2))
    rhs = prof.c_s * prof.energy * lhs
    margin = math.inf
    if n_bumps:
        ext = extend(u, s, Y=Y, m_y=m_y, profile=prof)
        base = weighted_energy(ext.values, ext.y, s, g)
        rng = np.random.default_rng(seed)
        scale = max(u.l2_norm(), 1.0)
        for _ in range(n_bumps):
            coef = rng.standard_normal(4)
            ks = np.arange(1, 5)
            gx = (coef[:, None] * np.cos(2 * np.pi * ks[:, None] * g.x[None, :] + rng.uniform(0, 2 * np.pi, 4)[:, None])).sum(0)
            y0 = rng.uniform(0.01, 0.5) * Y
            by = _bump_y(ext.y, y0, rng.uniform(0.1, 0.4) * Y)
            pert = ext.values + delta * scale * gx[:, None] * by[None, :]
            margin = min(margin, weighted_energy(pert, ext.y, s, g) - base)
    return EnergyCheck(lhs, rhs, margin)


def cutoff(y, length: float = 1.0):
    """Smooth cutoff: 1 at ``y=0``, 0 for ``y >= length``, with ``chi'(0) = 0``."""
    t = np.clip(np.asarray(y, dtype=float) / length, 0.0, 1.0)
    return np.where(t < 1.0, np.cos(0.5 * np.pi * t) ** 2, 0.0)


def bilinear_form_check(u: Field, phi: Field, s: float, phi_ext="harmonic", Y: float = 3.0,
                        m_y: int = 4096, cutoff_length: float = 1.0) -> tuple:
    """``<A^s u, phi>`` against ``c_s int int y^(1-2s) grad ubar . grad phi_ext``.

    ``phi_ext`` is ``"harmonic"``, ``"cutoff"`` (``phi(x) chi(y)``) or an
    array of samples on the extension grid whose trace must equal ``phi``.
    """
    prof = solve_profile(s)
    g = u.grid
    lhs = float(np.sum(_mode_weights(g.n) * g.multiplier(s) * (u.rhat * np.conj(phi.rhat)).real))
    ext = extend(u, s, Y=Y, m_y=m_y, profile=prof)
    if isinstance(phi_ext, str):
        if phi_ext == "harmonic":
            other = extend(phi, s, y=ext.y, profile=prof).values
        elif phi_ext == "cutoff":
            other = phi.values[:, None] * cutoff(ext.y, cutoff_length)[None, :]
        else:
            raise ValueError(f"unknown extension kind {phi_ext!r}")
    else:
        other = np.asarray(phi_ext, dtype=float)
        if other.shape != ext.values.shape:
            raise ValueError("extension samples must match the extension grid")
    scale = max(float(np.max(np.abs(phi.values))), 1e-300)
    if np.max(np.abs(other[:, 0] - phi.values)) > 1e-12 * scale:
        raise TraceMismatch("extension trace differs from phi")
    rhs = prof.c_s * weighted_energy(ext.values, ext.y, s, g, other)
    return lhs, rhs


def pde_residual(ext: ExtensionField) -> float:
    """Largest relative interior residual of ``div(y^(1-2s) grad ubar) = 0``.

    Per mode and dual cell the flux-form stencil of the profile solver is
    applied to the sampled extension; the residual is divided by the size
    of the terms it balances. It shrinks like ``(m_y)^-2`` for resolved data.
    """
    s = ext.s
    y = ext.y
    A = ext.mode_profiles()[1:]
    kappa = 2 * np.pi * ext.u.grid.kr[1:]
    # modes carrying only round-off would be amplified by the tiny zeta steps near y = 0
    trace = np.abs(A[:, 0])
    keep = trace > 1e-12 * max(float(trace.max()), 1e-300)
    A, kappa = A[keep], kappa[keep]
    zeta = y ** (2 * s) / (2 * s)
    F = np.diff(A, axis=1) / np.diff(zeta)
    lo_c, d, up_c = _mass_rows(y, 2.0 - 2.0 * s)
    inner = slice(1, len(y) - 1)
    mass = kappa[:, None] ** 2 * (lo_c[inner] * A[:, :-2] + d[inner] * A[:, 1:-1] + up_c[inner] * A[:, 2:])
    res = np.abs((F[:, 1:] - F[:, :-1]) - mass)
    size = np.abs(F[:, 1:]) + np.abs(F[:, :-1]) + np.abs(mass)
    live = size > 1e-10 * np.maximum(np.max(size, axis=1, keepdims=True), 1e-300)
    return float(np.max(res[live] / size[live])) if live.any() else 0.0

"""Fourier calculus on the unit torus.

Conventions, fixed once for the whole package:

* grid points ``x_i = i/n`` on ``[0, 1)``, ``n`` a power of two;
* coefficients ``u_k = (1/n) sum_i u(x_i) exp(-2 pi i k x_i)`` so that
  ``int |u|^2 dx = sum_k |u_k|^2`` (Parseval without extra factors);
* the negative Laplacian acts as the multiplier ``(2 pi |k|)^2``, hence
  ``(-d_xx)^sigma`` multiplies mode ``k`` by ``(2 pi |k|)^(2 sigma)``.

Internally real FFTs are used; the Nyquist mode is kept for even
multipliers and dropped for odd ones (the derivative).
"""
from __future__ import annotations

import hashlib
from dataclasses import dataclass
from functools import cached_property
from typing import Callable, Sequence

import numpy as np

from .errors import GridMismatch, InvalidOrder, NonZeroMean

MEAN_RTOL = 1e-10
MAX_ORDER = 2.0


@dataclass(frozen=True)
class TorusGrid:
    """Uniform grid of ``n`` points on the unit torus."""

    n: int

    def __post_init__(self):
        n = self.n
        if not isinstance(n, (int, np.integer)) or n < 8 or n & (n - 1):
            raise ValueError(f"grid size must be a power of two >= 8, got {n!r}")
        object.__setattr__(self, "n", int(n))

    @property
    def dx(self) -> float:
        return 1.0 / self.n

    @cached_property
    def x(self) -> np.ndarray:
        x = np.arange(self.n) / self.n
        x.flags.writeable = False
        return x

    @cached_property
    def k(self) -> np.ndarray:
        """Integer wavenumbers in FFT order, ``-n/2 .. n/2-1``."""
        k = np.fft.fftfreq(self.n, 1.0 / self.n).astype(int)
        k.flags.writeable = False
        return k

    @cached_property
    def kr(self) -> np.ndarray:
        """Non-negative wavenumbers of the real transform, ``0 .. n/2``."""
        k = np.arange(self.n // 2 + 1)
        k.flags.writeable = False
        return k

    @cached_property
    def grid_hash(self) -> int:
        digest = hashlib.sha256(f"torus1d:unit:{self.n}".encode()).digest()
        return int.from_bytes(digest[:8], "little")

    def multiplier(self, sigma: float) -> np.ndarray:
        """``(2 pi k)^(2 sigma)`` on the real-FFT modes, zero mode set to 0."""
        return _multiplier(self.n, float(sigma))

    def ddx_multiplier(self) -> np.ndarray:
        return _ddx(self.n)


_MULT_CACHE: dict = {}


def _multiplier(n: int, sigma: float) -> np.ndarray:
    key = (n, sigma)
    m = _MULT_CACHE.get(key)
    if m is None:
        k = np.arange(n // 2 + 1, dtype=float)
        m = np.zeros_like(k)
        m[1:] = (2 * np.pi * k[1:]) ** (2 * sigma)
        m.flags.writeable = False
        if len(_MULT_CACHE) < 512:
            _MULT_CACHE[key] = m
    return m


def _ddx(n: int) -> np.ndarray:
    key = (n, "ddx")
    m = _MULT_CACHE.get(key)
    if m is None:
        m = 2j * np.pi * np.arange(n // 2 + 1, dtype=float)
        m[-1] = 0.0
        m.flags.writeable = False
        _MULT_CACHE[key] = m
    return m


class Field:
    """Real samples of a function on a :class:`TorusGrid`.

    Values are copied and frozen on construction; the spectrum is computed
    lazily and cached.
    """

    __slots__ = ("grid", "values", "_rhat")

    def __init__(self, grid: TorusGrid, values):
        values = np.array(values, dtype=float)
        if values.shape != (grid.n,):
            raise GridMismatch(f"expected {grid.n} samples, got shape {values.shape}")
        values.flags.writeable = False
        self.grid = grid
        self.values = values
        self._rhat = None

    @classmethod
    def from_function(cls, grid: TorusGrid, func: Callable[[np.ndarray], np.ndarray]) -> "Field":
        return cls(grid, np.broadcast_to(func(grid.x), (grid.n,)))

    @classmethod
    def from_rspectrum(cls, grid: TorusGrid, rhat: np.ndarray) -> "Field":
        """Build from real-FFT coefficients in the L2-orthonormal scaling."""
        return cls(grid, np.fft.irfft(rhat * grid.n, n=grid.n))

    @property
    def rhat(self) -> np.ndarray:
        """Real-FFT coefficients ``u_k``, ``k = 0..n/2``."""
        if self._rhat is None:
            r = np.fft.rfft(self.values) / self.grid.n
            r.flags.writeable = False
            self._rhat = r
        return self._rhat

    @property
    def spectrum(self) -> np.ndarray:
        """Full conjugate-symmetric coefficients in FFT order."""
        return np.fft.fft(self.values) / self.grid.n

    @property
    def n(self) -> int:
        return self.grid.n

    def mean(self) -> float:
        return float(self.rhat[0].real)

    def l2_norm(self) -> float:
        return float(np.sqrt(np.mean(self.values**2)))

    def _check(self, other: "Field"):
        if other.grid != self.grid:
            raise GridMismatch(f"grids differ: n={self.grid.n} vs n={other.grid.n}")

    def __add__(self, other):
        if isinstance(other, Field):
            self._check(other)
            return Field(self.grid, self.values + other.values)
        return Field(self.grid, self.values + other)

    __radd__ = __add__

    def __sub__(self, other):
        if isinstance(other, Field):
            self._check(other)
            return Field(self.grid, self.values - other.values)
        return Field(self.grid, self.values - other)

    def __rsub__(self, other):
        return Field(self.grid, other - self.values)

    def __mul__(self, c):
        if isinstance(c, Field):
            self._check(c)
            return Field(self.grid, self.values * c.values)
        return Field(self.grid, self.values * c)

    __rmul__ = __mul__

    def __truediv__(self, c):
        return Field(self.grid, self.values / c)

    def __neg__(self):
        return Field(self.grid, -self.values)

    def __repr__(self):
        return f"Field(n={self.grid.n}, mean={self.mean():.3g}, l2={self.l2_norm():.3g})"


def _check_order(sigma: float):
    if not np.isfinite(sigma) or abs(sigma) > MAX_ORDER:
        raise InvalidOrder(f"order {sigma} outside [-{MAX_ORDER}, {MAX_ORDER}]")


def _require_zero_mean(u: Field, what: str, index=None):
    scale = u.l2_norm()
    if abs(u.mean()) > MEAN_RTOL * scale:
        raise NonZeroMean(f"{what} requires a zero-mean field, mean = {u.mean():.3e}", index)


def frac_power(u: Field, sigma: float) -> Field:
    """Apply ``(-d_xx)^sigma``; constants are sent to zero.

    For ``sigma < 0`` the field must have zero mean (relative tolerance
    ``1e-10``), otherwise :class:`NonZeroMean` is raised.
    """
    _check_order(sigma)
    if sigma < 0:
        _require_zero_mean(u, f"frac_power(sigma={sigma})")
    if sigma == 0:
        return project_mean_zero(u)
    return Field.from_rspectrum(u.grid, u.rhat * u.grid.multiplier(sigma))


def ddx(u: Field) -> Field:
    """Spectral derivative."""
    return Field.from_rspectrum(u.grid, u.rhat * u.grid.ddx_multiplier())


def project_mean_zero(u: Field) -> Field:
    return Field(u.grid, u.values - u.mean())


def reflect(u: Field) -> Field:
    """``x -> -x``: index reversal about ``x = 0`` (exact on the grid)."""
    return Field(u.grid, np.roll(u.values[::-1], 1))


def inner(u: Field, v: Field) -> float:
    """L2 inner product ``int u v dx`` (exact for band-limited data)."""
    u._check(v)
    return float(np.mean(u.values * v.values))


@dataclass(frozen=True)
class SobolevSpec:
    """Order and flavour of a fractional Sobolev norm.

    ``homogeneous=True`` is the dot-space norm (zero mode ignored); for a
    negative order the field must then have zero mean. The full-space norm
    adds ``|u_0|^2`` with weight one.
    """

    order: float
    homogeneous: bool = True

    def __post_init__(self):
        _check_order(self.order)


def _weighted_sq(u: Field, sigma: float) -> float:
    r = u.rhat
    w = np.abs(r[1:]) ** 2 * u.grid.multiplier(sigma)[1:]
    # real FFT stores each k>0 once except Nyquist
    w[:-1] *= 2.0
    return float(np.sum(w))


def sobolev_norm(u: Field, spec: SobolevSpec | float, homogeneous: bool = True) -> float:
    """Sobolev norm ``(sum_k (2 pi |k|)^(2 sigma) |u_k|^2)^(1/2)``."""
    if not isinstance(spec, SobolevSpec):
        spec = SobolevSpec(float(spec), homogeneous)
    if spec.homogeneous and spec.order < 0:
        _require_zero_mean(u, f"homogeneous H^{spec.order} norm")
    sq = _weighted_sq(u, spec.order)
    if not spec.homogeneous:
        sq += abs(u.rhat[0]) ** 2
    return float(np.sqrt(sq))


def h_minus1_metric(u: Field, v: Field) -> float:
    """Distance of ``u - v`` in the dual of ``{||phi||^2 + ||phi'||^2 <= 1}``.

    The supremum is attained by ``phi = (1 - d_xx)^{-1}(u - v)`` normalised,
    giving ``(sum_k |u_k - v_k|^2 / (1 + (2 pi k)^2))^(1/2)``.
    """
    u._check(v)
    d = u.rhat - v.rhat
    k = u.grid.kr
    w = np.abs(d) ** 2 / (1.0 + (2 * np.pi * k) ** 2)
    w[1:-1] *= 2.0
    return float(np.sqrt(np.sum(w)))


def h_minus1_trajectory_distance(us: Sequence[Field], vs: Sequence[Field]) -> float:
    """Sup over snapshots of :func:`h_minus1_metric` (the metric of C([0,T]; H^-1))."""
    if len(us) != len(vs):
        raise GridMismatch("trajectories have different numbers of snapshots")
    return max(h_minus1_metric(a, b) for a, b in zip(us, vs))


def space_time_dual_norm(slices: Sequence[Field], dt: float, s: float) -> float:
    """Discrete ``L2(0,T; H^-s)`` norm of midpoint slices with step ``dt``."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    total = 0.0
    for j, r in enumerate(slices):
        try:
            _require_zero_mean(r, "space-time dual norm", j)
        except NonZeroMean as exc:
            raise NonZeroMean(f"slice mean {r.mean():.3e} is not zero", j) from exc
        total += dt * _weighted_sq(r, -s)
    return float(np.sqrt(total))


def lp_norm(values: np.ndarray, p: float, weights: float = 1.0) -> float:
    """``(sum weights |values|^p)^(1/p)``; ``weights`` is the cell volume."""
    return float((weights * np.sum(np.abs(values) ** p)) ** (1.0 / p))

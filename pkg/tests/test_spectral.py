import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fracvisc.errors import GridMismatch, InvalidOrder, NonZeroMean
from fracvisc.spectral import (Field, SobolevSpec, TorusGrid, frac_power, h_minus1_metric, inner, project_mean_zero,
                               reflect, sobolev_norm, space_time_dual_norm)

from conftest import mode, random_zero_mean


@pytest.mark.parametrize("n", [6, 7, 12, 4])
def test_grid_rejects_bad_sizes(n):
    with pytest.raises(ValueError):
        TorusGrid(n)


def test_grid_layout():
    g = TorusGrid(16)
    assert g.dx == 1 / 16
    assert np.allclose(g.x, np.arange(16) / 16)
    assert g.k.min() == -8 and g.k.max() == 7
    assert TorusGrid(16).grid_hash == g.grid_hash != TorusGrid(32).grid_hash


def test_field_spectrum_round_trip(rng):
    g = TorusGrid(64)
    u = Field(g, rng.standard_normal(64))
    back = Field.from_rspectrum(g, u.rhat)
    assert np.allclose(back.values, u.values, rtol=0, atol=1e-12 * np.abs(u.values).max())
    assert u.rhat[0].real == pytest.approx(u.mean(), abs=1e-14)


def test_constant_in_kernel():
    g = TorusGrid(32)
    u = Field(g, np.ones(32))
    assert np.max(np.abs(frac_power(u, 0.75).values)) < 1e-14


def test_single_mode_multiplier():
    g = TorusGrid(64)
    out = frac_power(mode(g, 1), 0.75)
    assert np.allclose(out.values, (2 * np.pi) ** 1.5 * mode(g, 1).values, atol=1e-11)
    assert (2 * np.pi) ** 1.5 == pytest.approx(15.75, abs=0.01)


def test_inverse_identity(rng):
    g = TorusGrid(128)
    u = random_zero_mean(g, rng)
    back = frac_power(frac_power(u, 0.6), -0.6)
    assert np.max(np.abs(back.values - u.values)) < 1e-10


def test_negative_power_needs_zero_mean():
    g = TorusGrid(16)
    with pytest.raises(NonZeroMean):
        frac_power(Field(g, np.ones(16)), -0.5)


@pytest.mark.parametrize("sigma", [-2.5, 2.1])
def test_order_range(sigma):
    g = TorusGrid(16)
    with pytest.raises(InvalidOrder):
        frac_power(mode(g, 1), sigma)


def test_sobolev_examples():
    g = TorusGrid(64)
    c1 = mode(g, 1)
    assert sobolev_norm(c1, 0.0) ** 2 == pytest.approx(0.5, rel=1e-13)
    assert sobolev_norm(c1, 0.75) ** 2 == pytest.approx((2 * np.pi) ** 1.5 / 2, rel=1e-12)
    two = c1 + mode(g, 2)
    ref = ((2 * np.pi) ** -1.2 + (4 * np.pi) ** -1.2) / 2
    assert sobolev_norm(two, SobolevSpec(-0.6)) ** 2 == pytest.approx(ref, rel=1e-12)


def test_full_norm_adds_mean():
    g = TorusGrid(32)
    u = Field(g, 2.0 + mode(g, 1).values)
    assert sobolev_norm(u, 0.5, homogeneous=False) ** 2 == pytest.approx(4 + 0.5 * 2 * np.pi, rel=1e-12)


def test_nyquist_mode_counted_once():
    g = TorusGrid(16)
    u = Field(g, np.cos(np.pi * 16 * g.x))  # (-1)^i, the Nyquist mode
    assert sobolev_norm(u, 0.0) ** 2 == pytest.approx(1.0, rel=1e-13)


def test_h_minus1_examples(rng):
    g = TorusGrid(64)
    u = mode(g, 1)
    assert h_minus1_metric(u, u) == 0
    zero = Field(g, np.zeros(64))
    assert h_minus1_metric(u, zero) == pytest.approx(np.sqrt(1 / (2 * (1 + 4 * np.pi**2))), rel=1e-12)
    assert h_minus1_metric(u, zero) == pytest.approx(0.1112, abs=1e-4)
    with pytest.raises(GridMismatch):
        h_minus1_metric(u, mode(TorusGrid(32), 1))


def test_space_time_dual_norm_examples():
    g = TorusGrid(32)
    assert space_time_dual_norm([Field(g, np.zeros(32))] * 3, 0.1, 0.75) == 0
    one = space_time_dual_norm([mode(g, 1)], 1.0, 0.75)
    assert one == pytest.approx(np.sqrt((2 * np.pi) ** -1.5 / 2), rel=1e-12)
    # piecewise constant in time: amplitude a_j on slice j
    amps = [1.0, -2.0, 0.5]
    val = space_time_dual_norm([mode(g, 2) * a for a in amps], 0.25, 0.6)
    exact = np.sqrt(0.25 * sum(a * a for a in amps) * (4 * np.pi) ** -1.2 / 2)
    assert val == pytest.approx(exact, rel=1e-12)


def test_space_time_dual_norm_reports_slice():
    g = TorusGrid(16)
    with pytest.raises(NonZeroMean) as exc:
        space_time_dual_norm([mode(g, 1), Field(g, np.ones(16))], 0.1, 0.75)
    assert exc.value.index == 1


def test_reflect_and_project():
    g = TorusGrid(16)
    s = mode(g, 1, "sin")
    assert np.allclose(reflect(s).values, -s.values, atol=1e-15)
    assert np.array_equal(reflect(reflect(s)).values, s.values)
    assert abs(project_mean_zero(Field(g, 1 + s.values)).mean()) < 1e-15


@pytest.mark.parametrize("sigma", [0.5, 0.6, 0.75, 0.9, 1.0])
def test_multiplier_exact_all_modes(sigma):
    # compared in coefficient space: physical samples of a pure mode carry
    # round-off in every other mode, which the multiplier then amplifies
    g = TorusGrid(256)
    for k in range(1, 65):
        out = frac_power(mode(g, k), sigma).rhat
        ref = np.zeros_like(out)
        ref[k] = 0.5 * (2 * np.pi * k) ** (2 * sigma)
        assert np.max(np.abs(out - ref)) <= 1e-12 * abs(ref[k])


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), s=st.floats(0.51, 1.0), a=st.floats(-1.0, 1.0), b=st.floats(-1.0, 1.0))
def test_duality_and_semigroup(seed, s, a, b):
    rng = np.random.default_rng(seed)
    g = TorusGrid(64)
    u, v = random_zero_mean(g, rng), random_zero_mean(g, rng)
    lhs = inner(frac_power(u, s / 2), frac_power(v, -s / 2))
    assert abs(lhs - inner(u, v)) < 1e-10 * max(1.0, u.l2_norm() * v.l2_norm())
    two = frac_power(frac_power(u, a), b)
    one = frac_power(u, a + b)
    assert np.max(np.abs(two.values - one.values)) < 1e-10 * max(1.0, np.max(np.abs(one.values)))


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), c=st.one_of(st.just(0.0), st.floats(1e-3, 50), st.floats(-50, -1e-3)), sigma=st.floats(-1.0, 1.0))
def test_homogeneity_and_h1_bound(seed, c, sigma):
    rng = np.random.default_rng(seed)
    g = TorusGrid(32)
    u, v = random_zero_mean(g, rng), random_zero_mean(g, rng)
    assert sobolev_norm(u * c, sigma) == pytest.approx(abs(c) * sobolev_norm(u, sigma), rel=1e-12, abs=1e-300)
    assert h_minus1_metric(u, v) <= (u - v).l2_norm() * (1 + 1e-12)

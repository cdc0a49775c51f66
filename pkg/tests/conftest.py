import numpy as np
import pytest

from fracvisc.spectral import Field, TorusGrid


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def random_zero_mean(grid: TorusGrid, rng, kmax=None) -> Field:
    """Random zero-mean field, optionally band-limited to ``|k| <= kmax``."""
    v = rng.standard_normal(grid.n)
    u = Field(grid, v - v.mean())
    if kmax is not None:
        r = u.rhat.copy()
        r[kmax + 1:] = 0
        u = Field.from_rspectrum(grid, r)
    return u


def mode(grid: TorusGrid, k: int, kind="cos") -> Field:
    f = np.cos if kind == "cos" else np.sin
    return Field.from_function(grid, lambda x: f(2 * np.pi * k * x))


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if not RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(RESULTS):
        ok, detail = RESULTS[num]
        terminalreporter.write_line(f"criterion {num:2d}: {'PASS' if ok else 'FAIL'}  {detail}")

"""Entropy production of a standing pair of Burgers jumps.

The profile is -1 on (0, 1/2) and +1 elsewhere. The jump at 0 falls and
is admissible; the one at 1/2 rises and keeps producing entropy, spread
over v in (-1, 1). The mollified-kink estimate of the
positive mass should land near 2/3 over a unit horizon, while the
Engquist-Osher reference for a smooth datum stays below the estimator floor.
"""
import numpy as np

from fracvisc import Field, TorusGrid, Trajectory, cost_i, entropic_reference, get_flux
from fracvisc.entropy import piecewise_constant_cost
from fracvisc.experiments import mirror_shock

flux = get_flux("burgers")
g = TorusGrid(1024)
tr = Trajectory(g, np.tile(mirror_shock(g, 1.0), (101, 1)), 0.01, "burgers")

res = cost_i(tr, flux)
print(f"measure estimate {res.value:.4f}, theta estimate {res.theta_estimate:.4f}, floor {res.floor:.3f}")
print(f"shock oracle     {piecewise_constant_cost(tr, flux):.4f}")

g2 = TorusGrid(256)
ref = entropic_reference(Field(g2, np.sin(2 * np.pi * g2.x)), 1.0, flux, refine=4, dt_out=0.01)
r2 = cost_i(ref, flux)
print(f"entropic reference: I {r2.value:.2e}, floor {r2.floor:.2e}, below floor {r2.below_floor}")

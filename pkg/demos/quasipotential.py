"""Cost of reaching 0.3 cos(2 pi x) from rest.

Each path ramps up quickly and then follows a reversed relaxation. Longer
relaxations leave less excess and the cost settles on half the squared L2
distance, 0.0225, whatever the viscosity.
"""
import numpy as np

from fracvisc import Field, SolverParams, TorusGrid, estimate_V, get_flux

g = TorusGrid(64)
flux = get_flux("sin")
w = Field(g, 0.3 * np.cos(2 * np.pi * g.x))

for eps in (0.2, 0.1, 0.05):
    rep = estimate_V(0.0, w, SolverParams(eps, 0.75, 1e-3, 1.0), flux)
    costs = ", ".join(f"{c:.5f}" for c in rep.path_costs)
    print(f"eps={eps}: path costs [{costs}] over T2={rep.T2}, best {rep.best:.5f} (target {rep.target_value})")

shifted = Field(g, w.values + 0.1)
print("mean-shifted target:", estimate_V(0.0, shifted, SolverParams(0.1, 0.75, 1e-3, 1.0), flux).best)

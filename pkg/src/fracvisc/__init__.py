"""Pseudo-spectral tools for conservation laws with fractional viscosity.

Solvers, control costs, entropy productions of the inviscid limit, the
weighted-harmonic extension of the fractional Laplacian, and quasipotential
estimates on the unit torus.
"""
from .spectral import Field, SobolevSpec, TorusGrid, frac_power, h_minus1_metric, reflect, sobolev_norm, space_time_dual_norm
from .dynamics import (Flux, FluxDeviationWarning, SolverParams, Trajectory, entropic_reference, get_flux,
                       solve_controlled, solve_viscous)
from .cost import CostReport, apriori_bounds, backward_excess, cost_i_eps, fit_holder_exponent, time_modulus
from .entropy import (EntropyMeasure, EntropyPair, HyperbolicCost, KinkPair, cost_i, measure_estimate, production,
                      shock_production_rate)
from .extension import (ExtensionField, ExtensionProfile, c_s, dirichlet_to_neumann, energy_identity_check, extend,
                        solve_profile)
from .quasipotential import QuasipotentialReport, decomposition_check, estimate_V, ramp_relax_path
from .experiments import ExperimentConfig, gamma_liminf_probe, sharpness_probe, stability_experiment
from . import errors

__version__ = "0.1.0"

__all__ = [
    "Field",
    "SobolevSpec",
    "TorusGrid",
    "frac_power",
    "h_minus1_metric",
    "reflect",
    "sobolev_norm",
    "space_time_dual_norm",
    "Flux",
    "FluxDeviationWarning",
    "SolverParams",
    "Trajectory",
    "entropic_reference",
    "get_flux",
    "solve_controlled",
    "solve_viscous",
    "CostReport",
    "apriori_bounds",
    "backward_excess",
    "cost_i_eps",
    "fit_holder_exponent",
    "time_modulus",
    "EntropyMeasure",
    "EntropyPair",
    "HyperbolicCost",
    "KinkPair",
    "cost_i",
    "measure_estimate",
    "production",
    "shock_production_rate",
    "ExtensionField",
    "ExtensionProfile",
    "c_s",
    "dirichlet_to_neumann",
    "energy_identity_check",
    "extend",
    "solve_profile",
    "QuasipotentialReport",
    "decomposition_check",
    "estimate_V",
    "ramp_relax_path",
    "ExperimentConfig",
    "gamma_liminf_probe",
    "sharpness_probe",
    "stability_experiment",
    "errors",
]


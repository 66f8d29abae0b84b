"""Numerical Hofer geometry and Hamiltonian topology on the flat torus and the unit disc."""

from .calculus import compose, dev_map, inverse, leng_between, pullback, recover_generator, tan_map
from .domain import Domain, GridMap, ScalarField, c0_distance_maps, dbar_maps, integrate
from .errors import HamtopoError
from .flow import FlowPath, integrate_flow, min_displacement
from .hamiltonian import SampledHamiltonian, hofer_norm, linfty_norm, normalize, osc, sample
from .invariants import CircleMap, duality_check, flux, mass_flow, rotation_vector
from .metrics import PathPair, cauchy_report, dbar_paths, dham, extract_c0_limit, hofer_dist
from .reparam import ReparamMap, flatten, ham_norm, reparameterize, truncate

__version__ = "0.1.0"

__all__ = [
    "CircleMap",
    "Domain",
    "FlowPath",
    "GridMap",
    "HamtopoError",
    "PathPair",
    "ReparamMap",
    "SampledHamiltonian",
    "ScalarField",
    "c0_distance_maps",
    "cauchy_report",
    "compose",
    "dbar_maps",
    "dbar_paths",
    "dev_map",
    "dham",
    "duality_check",
    "extract_c0_limit",
    "flatten",
    "flux",
    "ham_norm",
    "hofer_dist",
    "hofer_norm",
    "integrate",
    "integrate_flow",
    "inverse",
    "leng_between",
    "linfty_norm",
    "mass_flow",
    "min_displacement",
    "normalize",
    "osc",
    "pullback",
    "recover_generator",
    "reparameterize",
    "rotation_vector",
    "sample",
    "tan_map",
    "truncate",
]

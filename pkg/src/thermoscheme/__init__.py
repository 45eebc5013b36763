"""Thermodynamic formalism for interval maps through inducing schemes.

Modules, bottom up: ``maps`` (branches and inverse branches), ``scheme``
(inducing schemes, coding, structural checks), ``shift`` (pressure and
Gibbs measures on the symbolic side), ``thermo`` (induced potentials,
liftable pressure, equilibrium measures), ``stats`` (sampling and ergodic
statistics) and ``cli``.
"""
from .errors import ThermoError
from .maps import doubling_map, quadratic_map, tent_map
from .scheme import (build_doubling_scheme, build_first_return_scheme,
                     build_unimodal_scheme, verify_scheme)
from .thermo import compute_PL, equilibrium, induce, phi_t, constant, t_bounds

__all__ = [
    "ThermoError", "doubling_map", "quadratic_map", "tent_map",
    "build_doubling_scheme", "build_first_return_scheme", "build_unimodal_scheme",
    "verify_scheme", "compute_PL", "equilibrium", "induce", "phi_t", "constant", "t_bounds",
]
__version__ = "0.1.0"

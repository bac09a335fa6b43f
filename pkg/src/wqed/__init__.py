"""Exact multi-photon, multi-qubit dynamics on a coupled-cavity waveguide.

The lattice model is a tight-binding chain of ``L`` cavities with hopping
``J`` and any number of two-level emitters attached to individual sites.
States are expanded in a fixed-excitation occupation basis, propagated with
a Lanczos/Krylov matrix exponential, and checked against closed-form
scattering and bound-state results in :mod:`wqed.analytic`.
"""

__version__ = "0.1.0"

from .fock import FockSpace, SectorBasis, enumerate_sectors, sector_dimension, rank, unrank
from .hamiltonian import QubitSpec, SystemParams, build_h, build_control, apply
from .krylov import PropagatorConfig, expmv, expmv_times, evolve_schedule
from . import analytic, states

__all__ = [
    "FockSpace",
    "SectorBasis",
    "enumerate_sectors",
    "sector_dimension",
    "rank",
    "unrank",
    "QubitSpec",
    "SystemParams",
    "build_h",
    "build_control",
    "apply",
    "PropagatorConfig",
    "expmv",
    "expmv_times",
    "evolve_schedule",
    "analytic",
    "states",
]

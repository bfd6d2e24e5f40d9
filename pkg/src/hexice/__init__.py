"""Pseudo-spin model of proton tunneling in a hexagonal water ring.

Lattice and sectors (:mod:`hexice.lattice`), fermionic and pseudo-spin
Hamiltonians (:mod:`hexice.hamiltonian`), dense numerics (:mod:`hexice.numerics`),
the secular Lindbladian and closed-form steady states (:mod:`hexice.open_system`),
quantum-information measures (:mod:`hexice.measures`) and temperature sweeps
(:mod:`hexice.sweep`).
"""

from .hamiltonian import ModelParams, build_fermionic, build_spin, ice_sector, matrix_in_sector
from .lattice import DefectClass, classify, enumerate_sector
from .measures import (c_l1, c_rel_ent, classical_correlations, concurrence, discord_optimization, eof,
                       geometric_discord, quantum_discord)
from .numerics import DensityMatrix, gibbs, partial_trace, von_neumann_entropy
from .open_system import BathSpec, build_liouvillian, p_bf, propagate, steady_state_analytic, steady_state_ice
from .sweep import SweepConfig, SweepRecord, emit_csv, emit_plot_script, run_sweep

__version__ = "0.1.0"

__all__ = [
    "BathSpec", "DefectClass", "DensityMatrix", "ModelParams", "SweepConfig", "SweepRecord",
    "build_fermionic", "build_liouvillian", "build_spin", "c_l1", "c_rel_ent", "classical_correlations",
    "classify", "concurrence", "discord_optimization", "emit_csv", "emit_plot_script", "enumerate_sector",
    "eof", "geometric_discord", "gibbs", "ice_sector", "matrix_in_sector", "p_bf", "partial_trace",
    "propagate", "quantum_discord", "run_sweep", "steady_state_analytic", "steady_state_ice",
    "von_neumann_entropy",
]

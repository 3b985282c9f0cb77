"""Quantum state transfer in coupled cavity arrays with two-level emitters."""

from cavityqst.errors import ConfigError, NonConvergenceError, ParityError, QSTError
from cavityqst.evolve import (
    EigenSystem,
    FidelityTrace,
    basis_vector,
    eigendecompose,
    evolve_state,
    fidelity,
    pass_fidelities,
    peak_fidelity,
    probability_trace,
)
from cavityqst.model import (
    BasisState,
    EmitterSpec,
    HamiltonianMatrix,
    SystemConfig,
    boundary_engineered_equivalent,
    build_multi_excitation,
    build_single_excitation,
    effective_coupling,
)
from cavityqst.spectra import christandl_couplings, empirical_jchh_couplings, target_spectrum

__version__ = "0.1.0"

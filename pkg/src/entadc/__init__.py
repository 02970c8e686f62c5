"""Perfect entanglement conversion between CV modes and qubit registers."""

from .dynamics import apply_stage, build_hamiltonian, ladder_matrix_elements, stage_propagator
from .fock import (
    DensityMatrix,
    PureState,
    RegisterLayout,
    SqueezingParams,
    Tolerances,
    make_coherent,
    make_thermal,
    make_tmsv,
    partial_trace,
    pure_to_dm,
    purity,
    tensor,
)
from .metrics import concurrence, entanglement_entropy, uhlmann_fidelity, von_neumann_entropy
from .pipeline import (
    QubitPairState,
    ad_cascade,
    closed_form_phi,
    closed_form_psi,
    da_amplitude_formula,
    da_convert,
    single_mode_ad,
    single_mode_da,
    two_qubit_d_coefficients,
)
from .rate_distortion import required_qubits, simulate_rd_point, thermal_distortion

__version__ = "0.1.0"

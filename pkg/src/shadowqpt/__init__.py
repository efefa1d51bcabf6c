"""Classical-shadow quantum process tomography.

Simulated acquisition (ancilla and two-sided schemes), shadow estimation of
Choi matrices and their reduced processes, physicality repair, maximum
likelihood, overlap prediction and Hamiltonian learning.
"""

from ._backend import BACKEND
from .acquire import (
    Block,
    MeasurementRecord,
    PairingPlan,
    RecordFormatError,
    Setting,
    acquire,
    acquire_ancilla,
    acquire_two_sided,
    all_pauli_settings,
    default_budget,
    read_records,
    write_records,
)
from .channels import (
    ChannelSpec,
    Gate,
    HamiltonianTerms,
    apply_channel,
    choi_from_kraus,
    choi_from_unitary,
    depolarize,
    ghz_process,
    identity_channel,
    propagator,
    reduced_choi,
    tfim_hamiltonian,
)
from .gates import CliffordElement, PauliString, sample_clifford
from .hamlearn import HamLearnTask, default_probes, estimate_coefficients, run_hamlearn
from .postprocess import cp_project, mle_reconstruct, overlap_pipeline, purify, tp_project
from .qmat import ChoiMatrix, frobenius_distance, purity, trace_distance
from .shadows import (
    EstimatorConfig,
    bound_overlap,
    bound_reduced,
    estimate_choi,
    estimate_overlap,
    estimate_reduced,
    shadow_data,
)

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "Block",
    "ChannelSpec",
    "ChoiMatrix",
    "CliffordElement",
    "EstimatorConfig",
    "Gate",
    "HamLearnTask",
    "HamiltonianTerms",
    "MeasurementRecord",
    "PairingPlan",
    "PauliString",
    "RecordFormatError",
    "Setting",
    "acquire",
    "acquire_ancilla",
    "acquire_two_sided",
    "all_pauli_settings",
    "apply_channel",
    "bound_overlap",
    "bound_reduced",
    "choi_from_kraus",
    "choi_from_unitary",
    "cp_project",
    "default_budget",
    "default_probes",
    "depolarize",
    "estimate_choi",
    "estimate_coefficients",
    "estimate_overlap",
    "estimate_reduced",
    "frobenius_distance",
    "ghz_process",
    "identity_channel",
    "mle_reconstruct",
    "overlap_pipeline",
    "propagator",
    "purify",
    "purity",
    "read_records",
    "reduced_choi",
    "run_hamlearn",
    "sample_clifford",
    "shadow_data",
    "tfim_hamiltonian",
    "tp_project",
    "trace_distance",
    "write_records",
]

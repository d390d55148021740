"""Exact-amplitude simulator for heralded generation of entangled photonic
qudits via coherent-bus cross-phase modulation."""

from .analysis import (
    BasisReport,
    SweepGrid,
    SweepRow,
    error_prob_closed_form,
    fidelity,
    mean_branch_photons,
    reduced_entropy,
    run_sweep,
    sweep_point,
    verify_basis,
)
from .elements import (
    PhaseMap,
    apply_bs_5050,
    apply_fourier_lomi,
    apply_pbs,
    apply_qubus_phase,
    apply_su2,
    apply_xpm,
    pol_flip,
    prep_rotation,
)
from .heralding import (
    BranchRecord,
    DetectorModel,
    FeedforwardError,
    HeraldOutcome,
    feedforward_outcomes,
    herald_vacuum,
    measure_ancilla_and_feedforward,
)
from .protocols import (
    GenerationReport,
    ProtocolSpec,
    balanced_coeffs,
    coeff_phase_index,
    entangle_stage,
    generate,
    phased_coeffs,
    prepare_single_photon_qudit,
    target_state,
)
from .state import (
    GRAM_EXACT,
    ORTHOGONAL_APPROX,
    POL_H,
    POL_V,
    HybridState,
    LogComplex,
    RegisterLayout,
    Term,
    canonicalize,
    coherent_overlap,
    drop_uniform_beam,
    inner_product,
    overlap_sq,
    permute_parties,
    state_from_dict,
    state_norm_sq,
    state_to_dict,
)

__version__ = "0.1.0"

__all__ = [
    "BasisReport",
    "BranchRecord",
    "DetectorModel",
    "FeedforwardError",
    "GRAM_EXACT",
    "GenerationReport",
    "HeraldOutcome",
    "HybridState",
    "LogComplex",
    "ORTHOGONAL_APPROX",
    "POL_H",
    "POL_V",
    "PhaseMap",
    "ProtocolSpec",
    "RegisterLayout",
    "SweepGrid",
    "SweepRow",
    "Term",
    "apply_bs_5050",
    "apply_fourier_lomi",
    "apply_pbs",
    "apply_qubus_phase",
    "apply_su2",
    "apply_xpm",
    "balanced_coeffs",
    "canonicalize",
    "coeff_phase_index",
    "coherent_overlap",
    "drop_uniform_beam",
    "entangle_stage",
    "error_prob_closed_form",
    "feedforward_outcomes",
    "fidelity",
    "generate",
    "herald_vacuum",
    "inner_product",
    "mean_branch_photons",
    "measure_ancilla_and_feedforward",
    "overlap_sq",
    "permute_parties",
    "phased_coeffs",
    "pol_flip",
    "prep_rotation",
    "prepare_single_photon_qudit",
    "reduced_entropy",
    "run_sweep",
    "state_from_dict",
    "state_norm_sq",
    "state_to_dict",
    "sweep_point",
    "target_state",
    "verify_basis",
]

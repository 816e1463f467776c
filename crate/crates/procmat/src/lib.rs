//! Process-matrix models with indefinite causal structure.
//!
//! This crate implements an operational toolkit for two-party process
//! matrices — the most general way two local laboratories can be wired
//! together without presupposing a global causal order — together with a
//! family of concrete models and the diagnostics used to study them:
//!
//! - [`tensor_core`]: labeled tensor algebra (named subsystems, partial
//!   traces, permutations, positivity checks) with one fixed row-major
//!   index convention.
//! - [`process_core`]: process matrices, instruments in Choi form, the
//!   generalized Born rule, and operational validation (positivity,
//!   normalization, signalling structure).
//! - [`clean_models`]: builders for the clean-model families — definite
//!   causal branches, their harmonic superposition with a gravitational
//!   party, a generic branch assembler, and the partial-swap
//!   interpolation.
//! - [`sectors`]: two-sector (massless/massive) superpositions with the
//!   admissibility constraint, kept as pure vectors until a sector is
//!   reduced out.
//! - [`capacity`]: one-shot entanglement-transmission capacity — closed
//!   forms, an independent Born-rule fidelity oracle, capacity curves
//!   and their inversion back to model parameters, and the
//!   causality-measure axiom checks.
//! - [`tendency`]: the tendency postulate (typicality of sectored
//!   weight assignments) and the superluminal-leakage diagnostic for
//!   two-sector processes.
//! - [`closeness`]: operational closeness of processes by capacity
//!   comparison, and typicality verdicts for general processes by
//!   calibration against close reference models.
//!
//! Numerical tolerances are centralized in [`tol`]; errors are the
//! [`error::Error`] enum.

pub mod error;
pub mod tol;

pub mod tensor_core;

pub mod process_core;

pub mod clean_models;

pub mod sectors;

pub mod capacity;

pub mod tendency;

pub mod closeness;

pub use error::{Error, Result};
pub use tensor_core::{
    apply_kraus_to_wire, c64, is_psd, is_psd_default, label, partial_trace, permute, tensor,
    tensor_all, tensor_all_vectors, LabeledOperator, LabeledVector, SubsystemLabel, C64,
};

pub use process_core::{
    born_probability, can_signal, choi_normalized_state, choi_of_kraus, validate_process,
    ChoiInstrument, PartySpec, ProcessMatrix, ValidationReport,
};

pub use clean_models::{
    build_clean_general, build_harmonic_purified, build_harmonic_reduced, build_partial_swap,
    build_w_i, AmplitudeVector3, CausalRelation, CleanBranch, HarmonicCleanModel,
    PartialSwapModel,
};

pub use sectors::{
    build_sectored_noninteracting, marginal_probabilities, reduce_sector, PureProcess, Sector,
    SectoredAmplitudes, SectoredParty,
};

pub use capacity::{
    apply_local_operation, axiom_suite, branch_probability_from_fidelity, capacity_curve,
    fidelity_oracle, invert_capacity_curves, oracle_capacity_curve, oracle_fidelities,
    oracle_staircase, q_ent_closed_form, q_ent_zero_threshold, staircase_from_fidelities,
    AxiomReport, CapacityCurve, CapacityQuery, Direction, InversionEstimate, LocalOperation,
    WireSite,
};

pub use tendency::{
    classify, classify_marginals, is_comparable, leakage_report, p_connect,
    BiconditionalDetail, ComparabilityCondition, DirectionLeakage, LeakageReport,
    SectorLeakage, TendencyThresholds, TypicalityVerdict,
};

pub use closeness::{
    are_close, calibrate_typicality, CalibratedVerdict, CalibrationOutcome,
    CapacityComparison, CapacityMargin, ClosenessCriterion, ClosenessReport,
};

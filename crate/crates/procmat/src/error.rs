//! Crate-wide error type.
//!
//! Every fallible operation in this crate returns [`Result`]. Variants are
//! grouped by the layer that raises them: label bookkeeping, process-matrix
//! construction, model builders, and capacity-curve analysis. Validation
//! routines that produce *reports* (see `process_core::ValidationReport`)
//! do not error on physics failures — only on malformed inputs.

use thiserror::Error;

/// Errors raised by the labeled-operator algebra and the model layers.
#[derive(Debug, Error)]
pub enum Error {
    /// A registry would contain two subsystems with the same name.
    #[error("duplicate subsystem label {0:?}")]
    DuplicateLabel(String),

    /// A subsystem name was referenced but is not present in the registry.
    #[error("unknown subsystem label {0:?}")]
    UnknownLabel(String),

    /// The requested label ordering is not a permutation of the registry.
    #[error("requested order is not a permutation of the registry: {0}")]
    BadPermutation(String),

    /// Matrix or subsystem dimensions do not match.
    #[error("dimension mismatch: {0}")]
    DimError(String),

    /// A subsystem label has dimension zero.
    #[error("subsystem {0:?} has dimension 0; dimensions must be >= 1")]
    ZeroDim(String),

    /// Party metadata is inconsistent with the operator or the instruments.
    #[error("party error: {0}")]
    PartyError(String),

    /// An operator failed a structural precondition (Hermiticity, PSD,
    /// trace) required for the requested construction.
    #[error("invalid operator: {0}")]
    InvalidOperator(String),

    /// An amplitude or probability vector is not normalized.
    #[error("normalization error: {0}")]
    NormError(String),

    /// A sectored amplitude matrix has support on a forbidden relation pair.
    #[error("constraint violation: {0}")]
    ConstraintViolation(String),

    /// A declared branch causal relation disagrees with the branch's
    /// signalling structure.
    #[error("branch relation error: {0}")]
    BranchRelationError(String),

    /// A process was expected to carry massless/massive sector structure
    /// but does not.
    #[error("sector error: {0}")]
    SectorError(String),

    /// A process was expected to belong to a model class (e.g. harmonic)
    /// whose closed forms apply, but its numerics are inconsistent with
    /// that class.
    #[error("model class error: {0}")]
    ModelClassError(String),

    /// Capacity curves cannot have come from a single model of the
    /// assumed family.
    #[error("inversion error: {0}")]
    InversionError(String),

    /// A numeric argument lies outside the domain where the requested
    /// quantity is defined.
    #[error("domain error: {0}")]
    DomainError(String),
}

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

//! Centralized numeric tolerances.
//!
//! Every threshold used by validation and classification code lives here,
//! with its rationale. No other module hard-codes a tolerance.
//!
//! The guiding scale: all operators in this crate act on total dimensions
//! of at most a few thousand, with entries of magnitude O(1). Double
//! precision keeps products and partial traces accurate to ~1e-13 at that
//! scale, so thresholds sit two to four orders of magnitude above the
//! noise floor and far below any model parameter.

/// Hermiticity / positive-semidefiniteness tolerance, relative to the
/// operator's scale (`max(1, largest absolute entry)`). Well above f64
/// noise for dimensions <= a few thousand, well below model parameters.
pub const PSD_TOL: f64 = 1e-9;

/// Max-abs-difference threshold for operator equality assertions.
pub const EQ_TOL: f64 = 1e-10;

/// Trace-one check on process matrices.
pub const TRACE_TOL: f64 = 1e-9;

/// Trace-preservation check on instrument sums.
pub const TP_TOL: f64 = 1e-9;

/// Normalization check on amplitude vectors and state vectors.
pub const NORM_TOL: f64 = 1e-10;

/// Tolerated imaginary residue on Born probabilities.
pub const BORN_IMAG_TOL: f64 = 1e-9;

/// Born probabilities must lie in `[-BORN_RANGE_TOL, 1 + BORN_RANGE_TOL]`.
pub const BORN_RANGE_TOL: f64 = 1e-8;

/// Signalling detection threshold: a party can signal if some unit-scale
/// channel perturbation shifts the other party's reduced description by
/// more than this in max-abs. Sits far above contraction noise (~1e-13)
/// and far below the O(1) shifts produced by genuinely signalling wires.
pub const SIGNAL_TOL: f64 = 1e-7;

/// Boundary slack for the capacity staircase: a probe dimension `m` is
/// accepted when its entanglement fidelity satisfies
/// `F(m) >= 1 - eps - BOUNDARY_SLACK`.
///
/// The closed form and the Born-rule oracle apply the *same* slack, so
/// grid points that land exactly on a step boundary (e.g. p = 0.6,
/// eps = 0.3, where 1 - eps - F(2) = 0 in exact arithmetic but +-1e-16 in
/// floats) classify identically on both paths, with the boundary counting
/// as achieved. Consistent with the zero-capacity characterization, whose
/// zero side is a strict inequality.
pub const BOUNDARY_SLACK: f64 = 1e-9;

/// Largest imprecision accepted by the causality-measure and leakage
/// machinery, strictly below 3/4.
///
/// At eps >= 3/4 a maximally entangled pair of dimension 2 reaches
/// fidelity 1/4 >= 1 - eps against *any* received state, so one bit
/// becomes free without any signalling and the measure would violate
/// "positive only if signalling". Keeping eps <= 0.74 bounds the scale of
/// fidelities that matter away from that degeneracy.
pub const MEASURE_EPS_MAX: f64 = 0.74;

/// Branch probabilities below this floor are treated as exactly zero when
/// deciding causal connectivity in leakage reports. Born-rule extraction
/// noise is ~1e-12; genuine model amplitudes sit many orders above.
pub const CONNECTIVITY_FLOOR: f64 = 1e-9;

/// Consistency tolerance when fitting probe fidelities to the
/// one-parameter family F(m) = p + (1-p)/m^2 of the harmonic class.
pub const CLASS_FIT_TOL: f64 = 1e-7;

/// Floor used by `is_comparable` to avoid dividing by an exact zero.
pub const COMPARABLE_FLOOR: f64 = 1e-300;

/// Largest total dimension at which a purified process may be
/// materialized as a dense operator. A Hermitian matrix of side 2600
/// occupies ~108 MB; beyond that, callers must trace parties out of the
/// purification first (which never needs the dense square).
pub const MAX_DENSE_DIM: usize = 2600;

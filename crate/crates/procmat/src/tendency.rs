//! The tendency postulate: typicality of sectored superpositions, and
//! the leakage diagnostic for faster-than-light signalling between
//! sectors.
//!
//! A two-sector model assigns probability weight pᵢⱼ to the pair
//! (massless branch i, massive branch j), with branches 1 and 2 the two
//! connected wirings and branch 3 the disconnected one.  The tendency
//! postulate singles out the *typical* weight assignments through a
//! biconditional:
//!
//! > the massless connection probability p₁° + p₂° is large
//! > **iff** the branch weights satisfy a comparability condition.
//!
//! Both sides need numerical thresholds to become decidable, and those
//! thresholds are artifacts of this toolkit rather than model content:
//! [`TendencyThresholds`] records them (defaults: "large" means ≥ 0.9,
//! "comparable" means a max/min ratio ≤ 2) and every
//! [`TypicalityVerdict`] carries the values it was computed with.  Four
//! comparability conditions are supported ([`ComparabilityCondition`]):
//! the massive weights alone (code `V`), the massless alone (`S`), both
//! (`VS`), or either (`VorS`).
//!
//! The leakage diagnostic asks a sharper operational question of a
//! sectored process: can the heavy (massive) sector carry a signal in a
//! direction where the light (massless) sector cannot?  Since the
//! massless sector bounds the causal structure — nothing outruns the
//! light wires — a *yes* marks superluminal leakage.  "Can carry a
//! signal" is made tolerance-free: the one-shot capacity of a branch
//! mixture is positive at *some* tolerance below 3/4 exactly when the
//! serving branch weight is strictly positive, so achievability is the
//! extracted branch weight exceeding [`tol::CONNECTIVITY_FLOOR`] rather
//! than a capacity-at-one-ε test (which would report "zero at every
//! tolerance tried" on weakly connected models).  Branch weights are
//! extracted from Born-rule probe fidelities and validated by exact
//! reconstruction: a sector whose reduced process is not a mixture of
//! the three canonical branch forms is rejected with
//! [`Error::ModelClassError`] instead of being silently misread.

use crate::capacity::{
    branch_probability_from_fidelity, fidelity_oracle, q_ent_closed_form, CapacityQuery,
    Direction,
};
use crate::error::{Error, Result};
use crate::process_core::ProcessMatrix;
use crate::sectors::{reduce_sector, Sector, SectoredAmplitudes};
use crate::tensor_core::{
    c64, is_psd, partial_trace, permute, tensor_all, LabeledOperator, LabeledVector,
    SubsystemLabel,
};
use crate::tol;

/// Numerical thresholds that operationalize "large" and "comparable".
///
/// These are artifacts of making the tendency postulate computable, not
/// quantities of the underlying models; every verdict records the values
/// it was produced with so downstream consumers can see the knobs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TendencyThresholds {
    /// A connection probability ≥ this counts as "large".  In (0, 1].
    pub theta_connect: f64,
    /// Weights are "comparable" when max/min ≤ this ratio.  At least 1.
    pub kappa_comparable: f64,
}

impl TendencyThresholds {
    /// Validate θ ∈ (0, 1] and κ ≥ 1.
    ///
    /// # Errors
    /// [`Error::DomainError`] for values outside those ranges.
    pub fn new(theta_connect: f64, kappa_comparable: f64) -> Result<Self> {
        if !theta_connect.is_finite() || theta_connect <= 0.0 || theta_connect > 1.0 {
            return Err(Error::DomainError(format!(
                "connection threshold must lie in (0, 1], got {theta_connect}"
            )));
        }
        if !kappa_comparable.is_finite() || kappa_comparable < 1.0 {
            return Err(Error::DomainError(format!(
                "comparability ratio must be at least 1, got {kappa_comparable}"
            )));
        }
        Ok(Self { theta_connect, kappa_comparable })
    }
}

impl Default for TendencyThresholds {
    /// "Large" means ≥ 0.9; "comparable" means within a factor of 2.
    fn default() -> Self {
        Self { theta_connect: 0.9, kappa_comparable: 2.0 }
    }
}

/// Which sector weights the right-hand side of the biconditional reads.
///
/// The short codes (accepted by [`ComparabilityCondition::parse`] and
/// used in reports) are `V` for the massive-only condition, `S` for the
/// massless-only one, `VS` for their conjunction and `VorS` for their
/// disjunction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ComparabilityCondition {
    /// Massive branch weights comparable (code `V`).
    Massive,
    /// Massive **and** massless branch weights comparable (code `VS`).
    Both,
    /// Massless branch weights comparable (code `S`).
    Massless,
    /// Massive **or** massless branch weights comparable (code `VorS`).
    Either,
}

impl ComparabilityCondition {
    /// The short condition code used in reports and on the command line.
    pub fn code(self) -> &'static str {
        match self {
            ComparabilityCondition::Massive => "V",
            ComparabilityCondition::Both => "VS",
            ComparabilityCondition::Massless => "S",
            ComparabilityCondition::Either => "VorS",
        }
    }

    /// Parse a condition code (`V`, `VS`, `S`, `VorS`).
    ///
    /// # Errors
    /// [`Error::DomainError`] on any other string.
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "V" => Ok(ComparabilityCondition::Massive),
            "VS" => Ok(ComparabilityCondition::Both),
            "S" => Ok(ComparabilityCondition::Massless),
            "VorS" => Ok(ComparabilityCondition::Either),
            other => Err(Error::DomainError(format!(
                "unknown comparability condition {other:?}, expected V, VS, S or VorS"
            ))),
        }
    }
}

impl std::fmt::Display for ComparabilityCondition {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.code())
    }
}

/// The two sides of the tendency biconditional, as evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BiconditionalDetail {
    /// Left side: the massless connection probability cleared θ.
    pub large_connectivity: bool,
    /// Right side: the chosen comparability condition held.
    pub comparability_holds: bool,
}

/// Outcome of classifying one weight assignment under the tendency
/// postulate.
#[derive(Debug, Clone, PartialEq)]
pub struct TypicalityVerdict {
    /// The comparability condition that formed the right-hand side.
    pub condition: ComparabilityCondition,
    /// The thresholds the verdict was computed with (toolkit artifacts).
    pub thresholds: TendencyThresholds,
    /// Massless connection probability p₁° + p₂°.
    pub p_connect: f64,
    /// Whether the massless weights are comparable under κ.
    pub massless_comparable: bool,
    /// Whether the massive weights are comparable under κ.
    pub massive_comparable: bool,
    /// Both sides of the biconditional.
    pub detail: BiconditionalDetail,
    /// True when the biconditional holds (both sides true or both
    /// false): the assignment is typical under the postulate.
    pub typical: bool,
}

/// Connection probability of a three-branch marginal: the total weight
/// of the two connected wirings, p₁ + p₂.
///
/// # Errors
/// [`Error::NormError`] if the entries are not a probability vector
/// (negative beyond 10⁻¹², or summing away from 1 by more than 10⁻⁹).
pub fn p_connect(marginal: &[f64; 3]) -> Result<f64> {
    for (i, &x) in marginal.iter().enumerate() {
        if !x.is_finite() || x < -1e-12 {
            return Err(Error::NormError(format!(
                "marginal entry {i} is {x}, expected a probability"
            )));
        }
    }
    let sum: f64 = marginal.iter().sum();
    if (sum - 1.0).abs() > 1e-9 {
        return Err(Error::NormError(format!("marginal sums to {sum}, expected 1")));
    }
    Ok(marginal[0] + marginal[1])
}

/// Whether three weights are comparable: max/min ≤ κ, with the min
/// floored at [`tol::COMPARABLE_FLOOR`] to keep the ratio finite.
/// All-equal weights (including all-zero) are always comparable.
pub fn is_comparable(weights: &[f64; 3], kappa: f64) -> bool {
    let max = weights.iter().cloned().fold(f64::MIN, f64::max);
    let min = weights.iter().cloned().fold(f64::MAX, f64::min);
    if max == min {
        return true;
    }
    max / min.max(tol::COMPARABLE_FLOOR) <= kappa
}

/// Classify a pair of sector marginals under the tendency postulate.
///
/// The left side of the biconditional is "the massless connection
/// probability p₁° + p₂° is at least θ"; the right side is the chosen
/// comparability condition on the sector marginals.  The assignment is
/// typical when the two sides agree.
///
/// # Errors
/// [`Error::NormError`] if either marginal is not a probability vector.
pub fn classify_marginals(
    massless: &[f64; 3],
    massive: &[f64; 3],
    condition: ComparabilityCondition,
    thresholds: TendencyThresholds,
) -> Result<TypicalityVerdict> {
    let pc = p_connect(massless)?;
    p_connect(massive)?; // validate the massive marginal as well
    let large = pc >= thresholds.theta_connect;
    let massless_comparable = is_comparable(massless, thresholds.kappa_comparable);
    let massive_comparable = is_comparable(massive, thresholds.kappa_comparable);
    let rhs = match condition {
        ComparabilityCondition::Massive => massive_comparable,
        ComparabilityCondition::Both => massless_comparable && massive_comparable,
        ComparabilityCondition::Massless => massless_comparable,
        ComparabilityCondition::Either => massless_comparable || massive_comparable,
    };
    Ok(TypicalityVerdict {
        condition,
        thresholds,
        p_connect: pc,
        massless_comparable,
        massive_comparable,
        detail: BiconditionalDetail { large_connectivity: large, comparability_holds: rhs },
        typical: large == rhs,
    })
}

/// Classify a sectored amplitude matrix: marginals are taken per sector
/// and passed to [`classify_marginals`].  Phases never matter — only
/// the weight matrix enters.
///
/// # Errors
/// As for [`classify_marginals`].
pub fn classify(
    amps: &SectoredAmplitudes,
    condition: ComparabilityCondition,
    thresholds: TendencyThresholds,
) -> Result<TypicalityVerdict> {
    let (massless, massive) = crate::sectors::marginal_probabilities(amps);
    classify_marginals(&massless, &massive, condition, thresholds)
}

/// Signalling diagnosis of one direction within one sector.
#[derive(Debug, Clone, PartialEq)]
pub struct DirectionLeakage {
    /// The transmission direction diagnosed.
    pub direction: Direction,
    /// Extracted weight of the branch whose wire serves this direction.
    pub branch_probability: f64,
    /// One-shot capacity in bits at the report's tolerance.
    pub capacity_bits: f64,
    /// Whether the direction is achievable at all: positive capacity at
    /// *some* tolerance below 3/4, equivalently branch weight above
    /// [`tol::CONNECTIVITY_FLOOR`].
    pub achievable: bool,
}

/// Signalling diagnosis of one sector of a two-sector process.
#[derive(Debug, Clone, PartialEq)]
pub struct SectorLeakage {
    /// Which sector this describes.
    pub sector: Sector,
    /// Wire dimension of the sector's reduced process.
    pub wire_dim: usize,
    /// Forward-direction diagnosis.
    pub forward: DirectionLeakage,
    /// Backward-direction diagnosis.
    pub backward: DirectionLeakage,
    /// Extracted weight of the disconnected branch.
    pub disconnected_probability: f64,
}

/// Whether the massive sector can signal where the massless cannot.
#[derive(Debug, Clone, PartialEq)]
pub struct LeakageReport {
    /// Tolerance at which the per-direction capacities were evaluated.
    pub eps: f64,
    /// Massless-sector diagnosis.
    pub massless: SectorLeakage,
    /// Massive-sector diagnosis.
    pub massive: SectorLeakage,
    /// True when some direction is achievable for the massive sector
    /// but not for the massless one: the heavy sector outruns the
    /// light wires.
    pub superluminal: bool,
}

/// Extracted mixture description of one reduced sector.
struct SectorMixture {
    wire_dim: usize,
    p: [f64; 3],
}

/// The four wires of a two-party single-wire-per-site process, as
/// (a_in, a_out, b_in, b_out).
fn four_wires(w: &ProcessMatrix) -> Result<[SubsystemLabel; 4]> {
    let parties = w.parties();
    if parties.len() != 2 {
        return Err(Error::ModelClassError(format!(
            "a reduced sector should be a two-party process, got {} parties",
            parties.len()
        )));
    }
    let grab = |wires: &[SubsystemLabel], what: &str, who: &str| -> Result<SubsystemLabel> {
        if wires.len() != 1 {
            return Err(Error::ModelClassError(format!(
                "party {who:?} should have exactly one {what} wire in a reduced \
                 sector, found {}",
                wires.len()
            )));
        }
        Ok(wires[0].clone())
    };
    Ok([
        grab(&parties[0].inputs, "input", &parties[0].name)?,
        grab(&parties[0].outputs, "output", &parties[0].name)?,
        grab(&parties[1].inputs, "input", &parties[1].name)?,
        grab(&parties[1].outputs, "output", &parties[1].name)?,
    ])
}

/// Permute `op` onto the registry order of `target` (same label set).
fn aligned_to(target: &LabeledOperator, op: &LabeledOperator) -> Result<LabeledOperator> {
    let order: Vec<&str> = target.registry().iter().map(|l| l.name.as_str()).collect();
    permute(op, &order)
}

/// Extract branch weights from a reduced sector via the Born-rule probe
/// and certify that the process really is a mixture of the three
/// canonical branch forms, by rebuilding the mixture from its own
/// marginals and demanding an exact fit.
///
/// # Errors
/// [`Error::ModelClassError`] whenever the process is outside the
/// mixture family: non-square or dimension-1 wires, probe fidelities
/// inconsistent with any weight assignment, non-positive reconstructed
/// branch states, or a reconstruction residual above
/// [`tol::CLASS_FIT_TOL`].
fn certify_mixture(w: &ProcessMatrix) -> Result<SectorMixture> {
    let [a_in, a_out, b_in, b_out] = four_wires(w)?;
    let d = a_in.dim;
    if a_out.dim != d || b_in.dim != d || b_out.dim != d {
        return Err(Error::ModelClassError(format!(
            "branch-mixture wires must share one dimension, got {}/{}/{}/{}",
            a_in.dim, a_out.dim, b_in.dim, b_out.dim
        )));
    }
    if d < 2 {
        return Err(Error::ModelClassError(
            "dimension-1 wires carry no signal, so branch weights are \
             unidentifiable"
                .into(),
        ));
    }

    // Branch weights from the probe fidelities at full code size.
    let p1 = branch_probability_from_fidelity(fidelity_oracle(w, Direction::Forward, d)?, d)?;
    let p2 = branch_probability_from_fidelity(fidelity_oracle(w, Direction::Backward, d)?, d)?;
    if !(-tol::CLASS_FIT_TOL..=1.0 + tol::CLASS_FIT_TOL).contains(&p1)
        || !(-tol::CLASS_FIT_TOL..=1.0 + tol::CLASS_FIT_TOL).contains(&p2)
        || p1 + p2 > 1.0 + tol::CLASS_FIT_TOL
    {
        return Err(Error::ModelClassError(format!(
            "probe fidelities give branch weights ({p1}, {p2}), outside any mixture"
        )));
    }
    let p1 = p1.clamp(0.0, 1.0);
    let p2 = p2.clamp(0.0, 1.0);
    let p3 = (1.0 - p1 - p2).max(0.0);

    // Reconstruct the branch states from the process's own marginals.
    let pi_a = LabeledOperator::maximally_mixed(a_in.clone());
    let pi_b = LabeledOperator::maximally_mixed(b_in.clone());
    let floor = tol::CLASS_FIT_TOL;

    // A-side delivered state: Tr_{a_out, b_in, b_out} W
    //   = (p₁ + p₃)·ρ^{a_in} + p₂·π.
    let a_marginal = partial_trace(
        w.w(),
        &[a_out.name.as_str(), b_in.name.as_str(), b_out.name.as_str()],
    )?;
    let rho_a = if p1 + p3 > floor {
        a_marginal
            .add(&pi_a.scale(c64(-p2, 0.0)))?
            .scale(c64(1.0 / (p1 + p3), 0.0))
    } else {
        pi_a.clone()
    };

    // B-side delivered state: Tr_{a_in, a_out, b_out} W
    //   = (p₂ + p₃)·ρ^{b_in} + p₁·π.
    let b_marginal = partial_trace(
        w.w(),
        &[a_in.name.as_str(), a_out.name.as_str(), b_out.name.as_str()],
    )?;
    let rho_b = if p2 + p3 > floor {
        b_marginal
            .add(&pi_b.scale(c64(-p1, 0.0)))?
            .scale(c64(1.0 / (p2 + p3), 0.0))
    } else {
        pi_b.clone()
    };

    // Joint delivered state: Tr_{a_out, b_out} W
    //   = p₁·ρ^{a_in}⊗π + p₂·π⊗ρ^{b_in} + p₃·ρ^{a_in b_in}.
    let joint = partial_trace(w.w(), &[a_out.name.as_str(), b_out.name.as_str()])?;
    let rho_ab = if p3 > floor {
        let t1 = tensor_all(&[&rho_a, &pi_b])?.scale(c64(-p1, 0.0));
        let t2 = tensor_all(&[&pi_a, &rho_b])?.scale(c64(-p2, 0.0));
        joint
            .add(&aligned_to(&joint, &t1)?)?
            .add(&aligned_to(&joint, &t2)?)?
            .scale(c64(1.0 / p3, 0.0))
    } else {
        aligned_to(&joint, &tensor_all(&[&rho_a, &rho_b])?)?
    };

    for (name, rho) in [("A-side", &rho_a), ("B-side", &rho_b), ("joint", &rho_ab)] {
        if (rho.trace().re - 1.0).abs() > 1e-6 || !is_psd(rho, 1e-6) {
            return Err(Error::ModelClassError(format!(
                "reconstructed {name} branch state is not a state; the process is \
                 not a mixture of the canonical branch forms"
            )));
        }
    }

    // Rebuild the mixture and demand an exact fit.
    let wire_fwd = LabeledVector::max_entangled(a_out.clone(), b_in.clone())?.outer();
    let wire_bwd = LabeledVector::max_entangled(b_out.clone(), a_in.clone())?.outer();
    let pi_a_out = LabeledOperator::maximally_mixed(a_out.clone());
    let pi_b_out = LabeledOperator::maximally_mixed(b_out.clone());
    let w1 = tensor_all(&[&rho_a, &wire_fwd, &pi_b_out])?;
    let w2 = tensor_all(&[&rho_b, &wire_bwd, &pi_a_out])?;
    let w3 = tensor_all(&[&rho_ab, &pi_a_out, &pi_b_out])?;
    let rebuilt = aligned_to(w.w(), &w1)?
        .scale(c64(p1, 0.0))
        .add(&aligned_to(w.w(), &w2)?.scale(c64(p2, 0.0)))?
        .add(&aligned_to(w.w(), &w3)?.scale(c64(p3, 0.0)))?;
    let residual = rebuilt.max_abs_diff(w.w())?;
    if residual > tol::CLASS_FIT_TOL {
        return Err(Error::ModelClassError(format!(
            "process deviates from the closest branch mixture by {residual:.3e} \
             (tolerance {:.1e}); capacities would misreport it",
            tol::CLASS_FIT_TOL
        )));
    }

    Ok(SectorMixture { wire_dim: d, p: [p1, p2, p3] })
}

fn diagnose_direction(
    mixture: &SectorMixture,
    direction: Direction,
    eps: f64,
) -> Result<DirectionLeakage> {
    let p = match direction {
        Direction::Forward => mixture.p[0],
        Direction::Backward => mixture.p[1],
    };
    let query = CapacityQuery::new(p, eps, mixture.wire_dim)?;
    Ok(DirectionLeakage {
        direction,
        branch_probability: p,
        capacity_bits: q_ent_closed_form(&query),
        achievable: p > tol::CONNECTIVITY_FLOOR,
    })
}

fn diagnose_sector(w: &ProcessMatrix, sector: Sector, eps: f64) -> Result<SectorLeakage> {
    let reduced = reduce_sector(w, sector)?;
    let mixture = certify_mixture(&reduced)?;
    Ok(SectorLeakage {
        sector,
        wire_dim: mixture.wire_dim,
        forward: diagnose_direction(&mixture, Direction::Forward, eps)?,
        backward: diagnose_direction(&mixture, Direction::Backward, eps)?,
        disconnected_probability: mixture.p[2],
    })
}

/// Diagnose a two-party, two-sector process for superluminal leakage.
///
/// Each sector is reduced out of `w_ab` (a process whose every wire
/// carries a sector suffix, e.g. the A/B materialization of a sectored
/// model), certified to be a mixture of the three canonical branch
/// forms, and diagnosed per direction: extracted branch weight, one-shot
/// capacity at `eps`, and achievability (branch weight above
/// [`tol::CONNECTIVITY_FLOOR`], equivalent to positive capacity at some
/// tolerance below 3/4).  The report flags superluminal leakage when a
/// direction is achievable for the massive sector but not for the
/// massless one.
///
/// # Errors
/// - [`Error::DomainError`] for `eps` outside
///   [0, [`tol::MEASURE_EPS_MAX`]];
/// - [`Error::SectorError`] if the process wires are not sectored;
/// - [`Error::ModelClassError`] if a reduced sector is not a mixture of
///   the canonical branch forms.
pub fn leakage_report(w_ab: &ProcessMatrix, eps: f64) -> Result<LeakageReport> {
    if !eps.is_finite() || !(0.0..=tol::MEASURE_EPS_MAX).contains(&eps) {
        return Err(Error::DomainError(format!(
            "leakage diagnosis needs eps in [0, {}], got {eps}: beyond 3/4 every \
             direction is trivially achievable through fresh entanglement",
            tol::MEASURE_EPS_MAX
        )));
    }
    let massless = diagnose_sector(w_ab, Sector::Massless, eps)?;
    let massive = diagnose_sector(w_ab, Sector::Massive, eps)?;
    let superluminal = (massive.forward.achievable && !massless.forward.achievable)
        || (massive.backward.achievable && !massless.backward.achievable);
    Ok(LeakageReport { eps, massless, massive, superluminal })
}

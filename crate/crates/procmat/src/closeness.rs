//! Operational closeness of process matrices, and typicality by
//! calibration.
//!
//! Two processes are *operationally close* when their one-shot
//! entanglement-transmission capacities agree within stated margins at
//! stated tolerances, direction by direction:
//!
//! > |Q→(z; ε) − Q→(w; ε)| ≤ δ→(ε) for every ε in I→, and likewise
//! > backward.
//!
//! The tolerance sets and margins form a [`ClosenessCriterion`]; the
//! defaults probe each direction at ε = 1/100 with margins of 2 bits
//! forward and 3 bits backward.  Capacities are evaluated uniformly
//! through the Born-rule fidelity oracle (never a model-specific closed
//! form), so any two-party processes with commensurate wire sizes can be
//! compared — including ones outside every special model family.
//! Closeness is reflexive and symmetric but deliberately **not**
//! transitive: margins add up along a chain, so a sequence of
//! pairwise-close models can drift arbitrarily far.
//!
//! Calibration extends the tendency postulate beyond the models it
//! directly speaks about.  A general process inherits the typicality
//! verdict of a reference model it is operationally close to
//! ([`calibrate_typicality`]); if it is not close to the offered
//! reference, the outcome is honestly
//! [`CalibrationOutcome::Uncalibrated`] rather than a guess.

use crate::capacity::{endpoints, oracle_fidelities, staircase_from_fidelities, Direction};
use crate::error::{Error, Result};
use crate::process_core::ProcessMatrix;
use crate::tendency::TypicalityVerdict;

/// One (tolerance, margin) probe: capacities are compared at `eps` and
/// must differ by at most `margin_bits`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CapacityMargin {
    /// Transmission tolerance ε at which both capacities are read.
    pub eps: f64,
    /// Largest acceptable capacity difference, in bits.
    pub margin_bits: f64,
}

/// The operational-closeness criterion: per-direction tolerance sets
/// with their margins.
///
/// A direction with an empty probe list is unconstrained (vacuously
/// close); at least one direction must carry a probe.
#[derive(Debug, Clone, PartialEq)]
pub struct ClosenessCriterion {
    /// Probes for the forward direction (first party sends).
    pub forward: Vec<CapacityMargin>,
    /// Probes for the backward direction.
    pub backward: Vec<CapacityMargin>,
}

impl ClosenessCriterion {
    /// Validate a criterion: every ε in [0, 1], every margin ≥ 0, and
    /// at least one probe overall.
    ///
    /// # Errors
    /// [`Error::DomainError`] on violations.
    pub fn new(forward: Vec<CapacityMargin>, backward: Vec<CapacityMargin>) -> Result<Self> {
        if forward.is_empty() && backward.is_empty() {
            return Err(Error::DomainError(
                "a closeness criterion needs at least one probe".into(),
            ));
        }
        for m in forward.iter().chain(backward.iter()) {
            if !m.eps.is_finite() || !(0.0..=1.0).contains(&m.eps) {
                return Err(Error::DomainError(format!(
                    "probe tolerance must lie in [0, 1], got {}",
                    m.eps
                )));
            }
            if !m.margin_bits.is_finite() || m.margin_bits < 0.0 {
                return Err(Error::DomainError(format!(
                    "capacity margin must be non-negative, got {}",
                    m.margin_bits
                )));
            }
        }
        Ok(Self { forward, backward })
    }

    /// One probe per direction at ε = 1/100, with margins of 2 bits
    /// forward and 3 bits backward.
    pub fn standard() -> Self {
        Self {
            forward: vec![CapacityMargin { eps: 0.01, margin_bits: 2.0 }],
            backward: vec![CapacityMargin { eps: 0.01, margin_bits: 3.0 }],
        }
    }
}

impl Default for ClosenessCriterion {
    fn default() -> Self {
        Self::standard()
    }
}

/// One evaluated probe of a closeness comparison.
#[derive(Debug, Clone, PartialEq)]
pub struct CapacityComparison {
    /// Direction the probe tested.
    pub direction: Direction,
    /// Tolerance the capacities were read at.
    pub eps: f64,
    /// Margin the gap was held against.
    pub margin_bits: f64,
    /// Capacity of the first process, in bits.
    pub q_first: f64,
    /// Capacity of the second process, in bits.
    pub q_second: f64,
    /// |q_first − q_second|.
    pub gap_bits: f64,
    /// Whether the gap stayed within the margin.
    pub within: bool,
}

/// Outcome of an operational-closeness comparison.
#[derive(Debug, Clone, PartialEq)]
pub struct ClosenessReport {
    /// Forward-direction probe results.
    pub forward: Vec<CapacityComparison>,
    /// Backward-direction probe results.
    pub backward: Vec<CapacityComparison>,
    /// True when every probe in both directions stayed within its
    /// margin.
    pub close: bool,
}

/// Largest code size the probe protocol can exercise for one direction.
fn code_bound(w: &ProcessMatrix, direction: Direction) -> Result<usize> {
    let (sender, receiver) = endpoints(w, direction)?;
    Ok(sender.output_dim().min(receiver.input_dim()))
}

/// Evaluate every probe of one direction against both processes.
fn compare_direction(
    first: &ProcessMatrix,
    second: &ProcessMatrix,
    direction: Direction,
    probes: &[CapacityMargin],
) -> Result<Vec<CapacityComparison>> {
    if probes.is_empty() {
        return Ok(Vec::new());
    }
    let bound_first = code_bound(first, direction)?;
    let bound_second = code_bound(second, direction)?;
    if bound_first != bound_second {
        return Err(Error::DimError(format!(
            "{direction:?} wires support code sizes up to {bound_first} in one process \
             but {bound_second} in the other; capacities over different wire sizes \
             are not commensurate, and normalizing them is out of scope here"
        )));
    }
    // Fidelities do not depend on ε — compute once per process.
    let f_first = oracle_fidelities(first, direction)?;
    let f_second = oracle_fidelities(second, direction)?;
    Ok(probes
        .iter()
        .map(|m| {
            let q_first = staircase_from_fidelities(&f_first, m.eps);
            let q_second = staircase_from_fidelities(&f_second, m.eps);
            let gap_bits = (q_first - q_second).abs();
            CapacityComparison {
                direction,
                eps: m.eps,
                margin_bits: m.margin_bits,
                q_first,
                q_second,
                gap_bits,
                within: gap_bits <= m.margin_bits,
            }
        })
        .collect())
}

/// Compare two processes under a closeness criterion.
///
/// Capacities are evaluated through the Born-rule fidelity oracle on
/// both processes, so the comparison never trusts a model-specific
/// closed form.  The relation is reflexive and symmetric but not
/// transitive.
///
/// # Errors
/// - [`Error::PartyError`] if either process is not two-party;
/// - [`Error::DimError`] if a probed direction supports different code
///   sizes in the two processes (normalizing capacities across wire
///   sizes is out of scope);
/// - [`Error::DomainError`] via criterion misuse (empty criterion).
pub fn are_close(
    first: &ProcessMatrix,
    second: &ProcessMatrix,
    criterion: &ClosenessCriterion,
) -> Result<ClosenessReport> {
    if criterion.forward.is_empty() && criterion.backward.is_empty() {
        return Err(Error::DomainError(
            "a closeness criterion needs at least one probe".into(),
        ));
    }
    let forward = compare_direction(first, second, Direction::Forward, &criterion.forward)?;
    let backward = compare_direction(first, second, Direction::Backward, &criterion.backward)?;
    let close = forward.iter().chain(backward.iter()).all(|c| c.within);
    Ok(ClosenessReport { forward, backward, close })
}

/// How a calibrated typicality verdict was obtained.
#[derive(Debug, Clone, PartialEq)]
pub enum CalibrationOutcome {
    /// The process is operationally close to the reference, so the
    /// reference's verdict carries over.
    Inherited(TypicalityVerdict),
    /// Not close to the offered reference: the tendency postulate
    /// assigns no verdict through this reference.
    Uncalibrated,
}

/// A typicality verdict for a general process, justified by closeness
/// to a reference model.
#[derive(Debug, Clone, PartialEq)]
pub struct CalibratedVerdict {
    /// The closeness evidence the outcome rests on.
    pub closeness: ClosenessReport,
    /// Inherited verdict, or the uncalibrated marker.
    pub outcome: CalibrationOutcome,
}

impl CalibratedVerdict {
    /// The inherited verdict, if calibration succeeded.
    pub fn verdict(&self) -> Option<&TypicalityVerdict> {
        match &self.outcome {
            CalibrationOutcome::Inherited(v) => Some(v),
            CalibrationOutcome::Uncalibrated => None,
        }
    }
}

/// Assign a typicality verdict to a general process by calibration: if
/// `general` is operationally close to `reference` under `criterion`,
/// it inherits `reference_verdict`; otherwise the outcome is
/// [`CalibrationOutcome::Uncalibrated`].
///
/// The reference verdict is supplied by the caller (via
/// [`crate::tendency::classify`] on the reference's amplitudes) because
/// a dense process matrix no longer carries its branch amplitudes.
///
/// # Errors
/// As for [`are_close`].
pub fn calibrate_typicality(
    general: &ProcessMatrix,
    reference: &ProcessMatrix,
    reference_verdict: &TypicalityVerdict,
    criterion: &ClosenessCriterion,
) -> Result<CalibratedVerdict> {
    let closeness = are_close(general, reference, criterion)?;
    let outcome = if closeness.close {
        CalibrationOutcome::Inherited(reference_verdict.clone())
    } else {
        CalibrationOutcome::Uncalibrated
    };
    Ok(CalibratedVerdict { closeness, outcome })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::clean_models::{build_harmonic_reduced, AmplitudeVector3, HarmonicCleanModel};
    use crate::sectors::{reduce_sector, PureProcess, Sector};
    use crate::tendency::{classify_marginals, ComparabilityCondition, TendencyThresholds};
    use crate::tensor_core::{c64, label, tensor_all_vectors, LabeledVector};
    use crate::process_core::PartySpec;
    use rand::Rng;
    use rand_chacha::rand_core::SeedableRng;
    use rand_chacha::ChaCha12Rng;

    fn harmonic(p: [f64; 3], d: usize) -> ProcessMatrix {
        let alpha = AmplitudeVector3::from_probabilities(p).unwrap();
        let model = HarmonicCleanModel::new(alpha, d, None).unwrap();
        build_harmonic_reduced(&model).unwrap()
    }

    fn probe(eps: f64, margin_bits: f64) -> CapacityMargin {
        CapacityMargin { eps, margin_bits }
    }

    #[test]
    fn criterion_validation_and_defaults() {
        let d = ClosenessCriterion::default();
        assert_eq!(d.forward, vec![probe(0.01, 2.0)]);
        assert_eq!(d.backward, vec![probe(0.01, 3.0)]);
        assert!(ClosenessCriterion::new(vec![probe(0.3, 1.0)], vec![]).is_ok());
        assert!(matches!(
            ClosenessCriterion::new(vec![], vec![]),
            Err(Error::DomainError(_))
        ));
        assert!(matches!(
            ClosenessCriterion::new(vec![probe(1.5, 1.0)], vec![]),
            Err(Error::DomainError(_))
        ));
        assert!(matches!(
            ClosenessCriterion::new(vec![probe(0.3, -0.1)], vec![]),
            Err(Error::DomainError(_))
        ));
    }

    #[test]
    fn closeness_is_reflexive() {
        let w = harmonic([0.5, 0.3, 0.2], 2);
        let report = are_close(&w, &w, &ClosenessCriterion::default()).unwrap();
        assert!(report.close);
        for c in report.forward.iter().chain(report.backward.iter()) {
            assert_eq!(c.gap_bits, 0.0);
        }
    }

    #[test]
    fn closeness_is_symmetric() {
        // A strict criterion that the connected/disconnected pair fails
        // and the nearby pair passes, identically in both argument
        // orders.
        let criterion = ClosenessCriterion::new(
            vec![probe(0.25, 0.5)],
            vec![probe(0.25, 0.5)],
        )
        .unwrap();
        let connected = harmonic([1.0, 0.0, 0.0], 2);
        let disconnected = harmonic([0.0, 0.0, 1.0], 2);
        let nearby = harmonic([0.95, 0.0, 0.05], 2);

        let ab = are_close(&connected, &disconnected, &criterion).unwrap();
        let ba = are_close(&disconnected, &connected, &criterion).unwrap();
        assert!(!ab.close);
        assert_eq!(ab.close, ba.close);
        assert_eq!(ab.forward[0].gap_bits, ba.forward[0].gap_bits);

        let an = are_close(&connected, &nearby, &criterion).unwrap();
        let na = are_close(&nearby, &connected, &criterion).unwrap();
        assert!(an.close);
        assert_eq!(an.close, na.close);
    }

    #[test]
    fn closeness_is_not_transitive() {
        // Capacities at ε = 0.1 on d = 3 wires step through
        // 0 → 1 → log₂3 bits; with a 1-bit margin each neighboring pair
        // is close while the endpoints are not.
        let criterion = ClosenessCriterion::new(vec![probe(0.1, 1.0)], vec![]).unwrap();
        let x = harmonic([0.5, 0.25, 0.25], 3); // Q→ = 0
        let y = harmonic([0.87, 0.06, 0.07], 3); // Q→ = 1
        let z = harmonic([1.0, 0.0, 0.0], 3); // Q→ = log₂3

        let xy = are_close(&x, &y, &criterion).unwrap();
        let yz = are_close(&y, &z, &criterion).unwrap();
        let xz = are_close(&x, &z, &criterion).unwrap();
        assert_eq!(xy.forward[0].q_second, 1.0);
        assert!((xz.forward[0].q_second - 3f64.log2()).abs() < 1e-12);
        assert!(xy.close);
        assert!(yz.close);
        assert!(!xz.close, "{xz:?}");
    }

    #[test]
    fn incommensurate_wires_are_rejected() {
        let small = harmonic([0.5, 0.3, 0.2], 2);
        let large = harmonic([0.5, 0.3, 0.2], 3);
        let err = are_close(&small, &large, &ClosenessCriterion::default()).unwrap_err();
        match err {
            Error::DimError(msg) => assert!(msg.contains("normalizing"), "{msg}"),
            other => panic!("expected DimError, got {other:?}"),
        }
    }

    /// A sectored process whose massive sector is a single dimension-1
    /// wire per site: operationally identical to its massless
    /// reduction.
    fn trivial_massive_process(p: [f64; 3]) -> ProcessMatrix {
        let d = 2usize;
        let alpha = AmplitudeVector3::from_probabilities([1.0, 0.0, 0.0]).unwrap();
        let model = HarmonicCleanModel::new(alpha, d, None).unwrap();
        let branches = model.branch_vectors_suffixed(Sector::Massless.suffix()).unwrap();

        let g = label("g_massless", 3);
        let mut acc: Option<LabeledVector> = None;
        for (i, &pi) in p.iter().enumerate() {
            if pi == 0.0 {
                continue;
            }
            let term = LabeledVector::basis(g.clone(), i)
                .unwrap()
                .tensor(&branches[i])
                .unwrap()
                .scale(c64(pi.sqrt(), 0.0));
            acc = Some(match acc {
                None => term,
                Some(s) => s.add(&term).unwrap(),
            });
        }
        let mv = |base: &str| {
            LabeledVector::basis(label(&format!("{base}_massive"), 1), 0).unwrap()
        };
        let (a1m, a2m, b1m, b2m) = (mv("a1"), mv("a2"), mv("b1"), mv("b2"));
        let trivial = tensor_all_vectors(&[&a1m, &a2m, &b1m, &b2m]).unwrap();
        let vector = acc.unwrap().tensor(&trivial).unwrap();

        let ml = |base: &str| label(&format!("{base}_massless"), d);
        let mv_l = |base: &str| label(&format!("{base}_massive"), 1);
        let g_party = PartySpec::new("G", vec![g], vec![]).unwrap();
        let a = PartySpec::new(
            "A",
            vec![ml("a1"), mv_l("a1")],
            vec![ml("a2"), mv_l("a2")],
        )
        .unwrap();
        let b = PartySpec::new(
            "B",
            vec![ml("b1"), mv_l("b1")],
            vec![ml("b2"), mv_l("b2")],
        )
        .unwrap();
        let e = PartySpec::new(
            "E",
            vec![ml("e1"), ml("e2"), label("e3_massless", 1)],
            vec![],
        )
        .unwrap();
        let pure = PureProcess::new(vec![g_party, a, b, e], vector).unwrap();
        pure.to_process(&["A", "B"]).unwrap()
    }

    #[test]
    fn trivial_sector_restriction_changes_nothing() {
        // With a dimension-1 massive sector, the whole-model capacities
        // equal the massless-restricted ones exactly, at every probe.
        let whole = trivial_massive_process([0.6, 0.3, 0.1]);
        let restricted = reduce_sector(&whole, Sector::Massless).unwrap();
        let criterion = ClosenessCriterion::new(
            vec![probe(0.05, 0.0), probe(0.3, 0.0), probe(0.6, 0.0)],
            vec![probe(0.05, 0.0), probe(0.3, 0.0), probe(0.6, 0.0)],
        )
        .unwrap();
        let report = are_close(&whole, &restricted, &criterion).unwrap();
        assert!(report.close, "{report:?}");
        for c in report.forward.iter().chain(report.backward.iter()) {
            assert_eq!(c.gap_bits, 0.0);
        }
    }

    #[test]
    fn calibration_inherits_the_reference_verdict_on_self() {
        // Every model is close to itself, so self-calibration must
        // return the reference verdict unchanged — across 100 random
        // weight assignments.
        let mut rng = ChaCha12Rng::seed_from_u64(71);
        let criterion = ClosenessCriterion::default();
        for _ in 0..100 {
            let raw: [f64; 3] = [rng.gen(), rng.gen(), rng.gen()];
            let total: f64 = raw.iter().sum();
            let p = [raw[0] / total, raw[1] / total, raw[2] / total];
            let w = trivial_massive_process(p);
            let verdict = classify_marginals(
                &p,
                &[1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0],
                ComparabilityCondition::Massive,
                TendencyThresholds::default(),
            )
            .unwrap();
            let calibrated = calibrate_typicality(&w, &w, &verdict, &criterion).unwrap();
            assert!(calibrated.closeness.close);
            assert_eq!(calibrated.verdict(), Some(&verdict));
        }
    }

    #[test]
    fn calibration_reports_uncalibrated_when_far() {
        let criterion =
            ClosenessCriterion::new(vec![probe(0.25, 0.5)], vec![probe(0.25, 0.5)]).unwrap();
        let general = harmonic([0.0, 0.0, 1.0], 2);
        let reference = harmonic([1.0, 0.0, 0.0], 2);
        let verdict = classify_marginals(
            &[0.5, 0.5, 0.0],
            &[1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0],
            ComparabilityCondition::Massive,
            TendencyThresholds::default(),
        )
        .unwrap();
        let calibrated =
            calibrate_typicality(&general, &reference, &verdict, &criterion).unwrap();
        assert_eq!(calibrated.outcome, CalibrationOutcome::Uncalibrated);
        assert!(calibrated.verdict().is_none());
    }
}

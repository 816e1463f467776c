//! Builders for clean models of indefinite causal structure.
//!
//! A *clean model* carries a dedicated gravitational party G whose
//! orthonormal basis states each couple to one definite causal
//! configuration between the laboratories A and B. Three configurations
//! exist for a bipartite process:
//!
//! 1. **A→B** — A's output wire feeds B's input through an identity
//!    channel; W₁ = ρ^{a₁} ⊗ Φ^{a₂b₁} ⊗ π^{b₂};
//! 2. **A←B** — the mirror image; W₂ = ρ^{b₁} ⊗ Φ^{a₁b₂} ⊗ π^{a₂};
//! 3. **A−B** — no channel in either direction, only a (possibly
//!    entangled) shared input state; W₃ = ρ^{a₁b₁} ⊗ π^{a₂} ⊗ π^{b₂}.
//!
//! Here Φ is the *normalized* maximally entangled state (unit trace,
//! matching the unit-trace process convention), π the maximally mixed
//! state, and the ρ marginals derive from a tripartite initial state
//! |Ψ⟩ on slots (x, y, e₃): ρ^{a₁} = ρ^x, ρ^{b₁} = ρ^y,
//! ρ^{a₁b₁} = ρ^{xy}.
//!
//! The three-branch *harmonic* family superposes the configurations
//! with amplitudes α = (α₁, α₂, α₃) through the purified vector
//!
//! > |w(α)⟩ = α₁|1⟩^g |Ψ⟩^{a₁e₂e₃} |I⟩^{a₂b₁} |I⟩^{b₂e₁}
//! >        + α₂|2⟩^g |Ψ⟩^{e₁b₁e₃} |I⟩^{b₂a₁} |I⟩^{a₂e₂}
//! >        + α₃|3⟩^g |Ψ⟩^{a₁b₁e₃} |I⟩^{a₂e₁} |I⟩^{b₂e₂},
//!
//! with |I⟩ the pure Choi vector of the identity channel. Tracing the
//! environment E = {e₁,e₂,e₃} gives the G–A–B process; tracing G as
//! well reduces it to the incoherent mixture Σᵢ pᵢ Wᵢ with pᵢ = |αᵢ|².
//!
//! A generic-amplitude builder accepts arbitrary branch vectors with
//! declared causal relations (validated operationally through the
//! signalling test), and a partial-swap builder interpolates coherently
//! between a shared state (A−B) and a channel (A→B) without any
//! gravitational party at all.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::process_core::{can_signal, PartySpec, ProcessMatrix};
use crate::tensor_core::{
    c64, label, permute, tensor, tensor_all, tensor_all_vectors, LabeledOperator, LabeledVector,
    SubsystemLabel, C64,
};
use crate::tol;

/// Canonical wire order of a bipartite process in this crate.
const AB_ORDER: [&str; 4] = ["a1", "a2", "b1", "b2"];

/// Canonical registry order of one harmonic branch vector.
const BRANCH_ORDER: [&str; 7] = ["a1", "a2", "b1", "b2", "e1", "e2", "e3"];

/// One of the three definite causal configurations of a bipartite
/// process.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CausalRelation {
    /// A can signal to B, B cannot signal to A (branch 1).
    AToB,
    /// B can signal to A, A cannot signal to B (branch 2).
    BToA,
    /// Neither party can signal to the other; shared (possibly
    /// entangled) states are still allowed (branch 3).
    Disconnected,
}

impl CausalRelation {
    /// One-based branch index (1 = A→B, 2 = A←B, 3 = A−B).
    pub fn index(self) -> usize {
        match self {
            CausalRelation::AToB => 1,
            CausalRelation::BToA => 2,
            CausalRelation::Disconnected => 3,
        }
    }

    /// Inverse of [`CausalRelation::index`].
    pub fn from_index(i: usize) -> Result<Self> {
        match i {
            1 => Ok(CausalRelation::AToB),
            2 => Ok(CausalRelation::BToA),
            3 => Ok(CausalRelation::Disconnected),
            _ => Err(Error::DomainError(format!(
                "causal relation index {} is not in 1..=3",
                i
            ))),
        }
    }

    /// Expected signalling verdicts (A→B, B→A) for this relation.
    pub fn expected_signalling(self) -> (bool, bool) {
        match self {
            CausalRelation::AToB => (true, false),
            CausalRelation::BToA => (false, true),
            CausalRelation::Disconnected => (false, false),
        }
    }
}

/// Normalized complex amplitude 3-vector over the causal branches.
#[derive(Debug, Clone, PartialEq)]
pub struct AmplitudeVector3 {
    /// Amplitude of the A→B branch.
    pub a1: C64,
    /// Amplitude of the A←B branch.
    pub a2: C64,
    /// Amplitude of the A−B branch.
    pub a3: C64,
}

impl AmplitudeVector3 {
    /// Validate |α₁|² + |α₂|² + |α₃|² = 1.
    ///
    /// # Errors
    /// [`Error::NormError`] if the amplitudes are not normalized within
    /// the default tolerance.
    pub fn new(a1: C64, a2: C64, a3: C64) -> Result<Self> {
        let norm2 = a1.norm_sqr() + a2.norm_sqr() + a3.norm_sqr();
        if (norm2 - 1.0).abs() > tol::NORM_TOL {
            return Err(Error::NormError(format!(
                "amplitude vector has squared norm {:.12}, expected 1",
                norm2
            )));
        }
        Ok(Self { a1, a2, a3 })
    }

    /// Real amplitudes from branch probabilities (square roots).
    pub fn from_probabilities(p: [f64; 3]) -> Result<Self> {
        if p.iter().any(|&x| x < 0.0) {
            return Err(Error::DomainError(
                "branch probabilities must be non-negative".into(),
            ));
        }
        Self::new(
            c64(p[0].sqrt(), 0.0),
            c64(p[1].sqrt(), 0.0),
            c64(p[2].sqrt(), 0.0),
        )
    }

    /// Branch probabilities pᵢ = |αᵢ|².
    pub fn probabilities(&self) -> [f64; 3] {
        [self.a1.norm_sqr(), self.a2.norm_sqr(), self.a3.norm_sqr()]
    }

    /// Amplitudes as an array in branch order.
    pub fn as_array(&self) -> [C64; 3] {
        [self.a1, self.a2, self.a3]
    }
}

/// The three-branch harmonic model: amplitudes, a common wire
/// dimension, and the tripartite initial state |Ψ⟩.
///
/// All six internal wires (a₁, a₂, b₁, b₂, e₁, e₂) share one dimension
/// d, forced by the branch wirings; the third Ψ slot (e₃) is free.
#[derive(Debug, Clone)]
pub struct HarmonicCleanModel {
    alpha: AmplitudeVector3,
    wire_dim: usize,
    psi: LabeledVector,
}

impl HarmonicCleanModel {
    /// Create a model. `psi` must have exactly three registry slots
    /// (x, y, e₃) with the first two of dimension `wire_dim`; `None`
    /// selects the default |0⟩⊗|0⟩⊗|0⟩ with a trivial (dimension-1)
    /// third slot.
    ///
    /// # Errors
    /// - [`Error::ZeroDim`] / [`Error::DimError`] on dimension problems;
    /// - [`Error::NormError`] if `psi` is not normalized.
    pub fn new(
        alpha: AmplitudeVector3,
        wire_dim: usize,
        psi: Option<LabeledVector>,
    ) -> Result<Self> {
        if wire_dim == 0 {
            return Err(Error::ZeroDim("wire".into()));
        }
        let psi = match psi {
            Some(v) => v,
            None => {
                let x = LabeledVector::basis(label("x", wire_dim), 0)?;
                let y = LabeledVector::basis(label("y", wire_dim), 0)?;
                let e3 = LabeledVector::basis(label("e3", 1), 0)?;
                tensor_all_vectors(&[&x, &y, &e3])?
            }
        };
        check_psi(&psi, wire_dim)?;
        Ok(Self {
            alpha,
            wire_dim,
            psi,
        })
    }

    /// Branch amplitudes.
    pub fn alpha(&self) -> &AmplitudeVector3 {
        &self.alpha
    }

    /// Common wire dimension d.
    pub fn wire_dim(&self) -> usize {
        self.wire_dim
    }

    /// The tripartite initial state on slots (x, y, e₃).
    pub fn psi(&self) -> &LabeledVector {
        &self.psi
    }

    /// Branch probabilities pᵢ = |αᵢ|².
    pub fn probabilities(&self) -> [f64; 3] {
        self.alpha.probabilities()
    }

    /// The three normalized pure branch vectors |wᵢ⟩ on the registry
    /// (a1, a2, b1, b2, e1, e2, e3).
    pub fn branch_vectors(&self) -> Result<[LabeledVector; 3]> {
        self.branch_vectors_suffixed("")
    }

    /// Branch vectors with every label name suffixed (e.g. "_massless"),
    /// for embedding the model as one sector of a larger process.
    pub fn branch_vectors_suffixed(&self, suffix: &str) -> Result<[LabeledVector; 3]> {
        let d = self.wire_dim;
        let e3_dim = self.psi.registry()[2].dim;
        let name = |base: &str| format!("{base}{suffix}");
        let wire = |base: &str| label(&name(base), d);

        // |Ψ⟩ placed positionally on three named slots.
        let psi_on = |s1: SubsystemLabel, s2: SubsystemLabel, s3_name: &str| -> Result<LabeledVector> {
            LabeledVector::new(
                vec![s1, s2, label(s3_name, e3_dim)],
                self.psi.entries().clone(),
            )
        };
        let mes = |x: SubsystemLabel, y: SubsystemLabel| LabeledVector::max_entangled(x, y);

        let order: Vec<String> = BRANCH_ORDER.iter().map(|b| name(b)).collect();
        let order_refs: Vec<&str> = order.iter().map(|s| s.as_str()).collect();

        // Branch 1 (A→B): Ψ on (a₁,e₂,e₃), wire a₂→b₁, wire b₂→e₁.
        let w1 = tensor_all_vectors(&[
            &psi_on(wire("a1"), wire("e2"), &name("e3"))?,
            &mes(wire("a2"), wire("b1"))?,
            &mes(wire("b2"), wire("e1"))?,
        ])?
        .permute(&order_refs)?;
        // Branch 2 (A←B): Ψ on (e₁,b₁,e₃), wire b₂→a₁, wire a₂→e₂.
        let w2 = tensor_all_vectors(&[
            &psi_on(wire("e1"), wire("b1"), &name("e3"))?,
            &mes(wire("b2"), wire("a1"))?,
            &mes(wire("a2"), wire("e2"))?,
        ])?
        .permute(&order_refs)?;
        // Branch 3 (A−B): Ψ on (a₁,b₁,e₃), wire a₂→e₁, wire b₂→e₂.
        let w3 = tensor_all_vectors(&[
            &psi_on(wire("a1"), wire("b1"), &name("e3"))?,
            &mes(wire("a2"), wire("e1"))?,
            &mes(wire("b2"), wire("e2"))?,
        ])?
        .permute(&order_refs)?;
        Ok([w1, w2, w3])
    }
}

/// Validate a tripartite initial state against the wire dimension.
fn check_psi(psi: &LabeledVector, wire_dim: usize) -> Result<()> {
    if psi.registry().len() != 3 {
        return Err(Error::DimError(format!(
            "initial state must have exactly 3 slots (x, y, e3), got {}",
            psi.registry().len()
        )));
    }
    if psi.registry()[0].dim != wire_dim || psi.registry()[1].dim != wire_dim {
        return Err(Error::DimError(format!(
            "initial-state slots (x, y) must have the wire dimension {}, got ({}, {})",
            wire_dim,
            psi.registry()[0].dim,
            psi.registry()[1].dim
        )));
    }
    if (psi.norm() - 1.0).abs() > tol::NORM_TOL {
        return Err(Error::NormError(format!(
            "initial state has norm {:.12}, expected 1",
            psi.norm()
        )));
    }
    Ok(())
}

/// Party specs for the bipartite wires, with an optional label suffix.
fn ab_parties(d: usize, suffix: &str) -> Result<(PartySpec, PartySpec)> {
    let name = |base: &str| format!("{base}{suffix}");
    let a = PartySpec::simple("A", label(&name("a1"), d), label(&name("a2"), d))?;
    let b = PartySpec::simple("B", label(&name("b1"), d), label(&name("b2"), d))?;
    Ok((a, b))
}

/// The definite-relation process Wᵢ for one causal branch.
///
/// - i = 1: W₁ = ρ^{a₁} ⊗ Φ^{a₂b₁} ⊗ π^{b₂} (A→B),
/// - i = 2: W₂ = ρ^{b₁} ⊗ Φ^{a₁b₂} ⊗ π^{a₂} (A←B),
/// - i = 3: W₃ = ρ^{a₁b₁} ⊗ π^{a₂} ⊗ π^{b₂} (A−B),
///
/// with the ρ marginals taken from |Ψ⟩⟨Ψ| on slots (x, y, e₃):
/// ρ^{a₁} is the x-marginal, ρ^{b₁} the y-marginal, ρ^{a₁b₁} the
/// xy-marginal. Φ is the normalized maximally entangled state.
///
/// # Errors
/// [`Error::DomainError`] for i outside 1..=3; [`Error::DimError`] /
/// [`Error::NormError`] for inconsistent `psi`.
pub fn build_w_i(i: usize, psi: &LabeledVector, wire_dim: usize) -> Result<ProcessMatrix> {
    CausalRelation::from_index(i)?;
    check_psi(psi, wire_dim)?;
    let d = wire_dim;
    let slot = |k: usize| psi.registry()[k].name.as_str();

    let w_op = match i {
        1 => {
            let rho_x = psi.trace_out(&[slot(1), slot(2)])?;
            let rho_a1 = LabeledOperator::new(vec![label("a1", d)], rho_x.into_entries())?;
            let phi = LabeledVector::max_entangled(label("a2", d), label("b1", d))?.outer();
            let pi = LabeledOperator::maximally_mixed(label("b2", d));
            tensor_all(&[&rho_a1, &phi, &pi])?
        }
        2 => {
            let rho_y = psi.trace_out(&[slot(0), slot(2)])?;
            let rho_b1 = LabeledOperator::new(vec![label("b1", d)], rho_y.into_entries())?;
            let phi = LabeledVector::max_entangled(label("a1", d), label("b2", d))?.outer();
            let pi = LabeledOperator::maximally_mixed(label("a2", d));
            tensor_all(&[&rho_b1, &phi, &pi])?
        }
        _ => {
            let rho_xy = psi.trace_out(&[slot(2)])?;
            let rho_ab = LabeledOperator::new(
                vec![label("a1", d), label("b1", d)],
                rho_xy.into_entries(),
            )?;
            let pia = LabeledOperator::maximally_mixed(label("a2", d));
            let pib = LabeledOperator::maximally_mixed(label("b2", d));
            tensor_all(&[&rho_ab, &pia, &pib])?
        }
    };
    let w_op = permute(&w_op, &AB_ORDER)?;
    let (a, b) = ab_parties(d, "")?;
    ProcessMatrix::new(vec![a, b], w_op)
}

/// The purified harmonic model: each branch vector tagged by a basis
/// state of the gravitational wire g, environment E = {e₁,e₂,e₃}
/// traced out. The result is a process over the parties G (holding g),
/// A, and B.
///
/// Tracing g from the returned operator recovers the incoherent
/// mixture Σᵢ pᵢ Wᵢ exactly — cross-branch coherences live entirely in
/// the g–AB correlations.
pub fn build_harmonic_purified(m: &HarmonicCleanModel) -> Result<ProcessMatrix> {
    let branches = m.branch_vectors()?;
    let amps = m.alpha.as_array();
    let mut w_vec: Option<LabeledVector> = None;
    for (i, branch) in branches.iter().enumerate() {
        let g = LabeledVector::basis(label("g", 3), i)?;
        let term = g.tensor(branch)?.scale(amps[i]);
        w_vec = Some(match w_vec {
            None => term,
            Some(acc) => acc.add(&term)?,
        });
    }
    let w_vec = w_vec.expect("three branches");
    let w_op = w_vec.trace_out(&["e1", "e2", "e3"])?;
    let g_party = PartySpec::new("G", vec![label("g", 3)], vec![])?;
    let (a, b) = ab_parties(m.wire_dim, "")?;
    ProcessMatrix::new(vec![g_party, a, b], w_op)
}

/// The reduced harmonic model on A and B alone: the incoherent mixture
/// Σᵢ pᵢ Wᵢ built directly from the definite-relation processes.
/// Numerically equal to tracing g out of [`build_harmonic_purified`].
pub fn build_harmonic_reduced(m: &HarmonicCleanModel) -> Result<ProcessMatrix> {
    let p = m.probabilities();
    let mut acc: Option<LabeledOperator> = None;
    for i in 1..=3 {
        let wi = build_w_i(i, &m.psi, m.wire_dim)?;
        let scaled = wi.w().scale(c64(p[i - 1], 0.0));
        acc = Some(match acc {
            None => scaled,
            Some(s) => s.add(&scaled)?,
        });
    }
    let (a, b) = ab_parties(m.wire_dim, "")?;
    ProcessMatrix::new(vec![a, b], acc.expect("three branches"))
}

/// One branch of a generic clean model: a pure process vector over the
/// bipartite wires (a1, a2, b1, b2) plus arbitrary environment labels,
/// together with the causal relation it claims to realize.
#[derive(Debug, Clone)]
pub struct CleanBranch {
    /// Normalized pure vector; every registry label that is not a
    /// bipartite wire is treated as environment and traced out.
    pub vector: LabeledVector,
    /// Declared causal relation, verified operationally at build time.
    pub relation: CausalRelation,
}

/// Generic clean-model builder: |w⟩ = Σᵢ αᵢ |i⟩^g |wᵢ⟩, environment
/// traced out, with each branch's declared causal relation verified
/// through the signalling test before assembly.
///
/// # Errors
/// - [`Error::DimError`] if amplitude and branch counts differ or the
///   branch registries disagree;
/// - [`Error::NormError`] if amplitudes or a branch vector are not
///   normalized;
/// - [`Error::BranchRelationError`] if a branch's signalling verdicts
///   contradict its declared relation.
pub fn build_clean_general(amps: &[C64], branches: &[CleanBranch]) -> Result<ProcessMatrix> {
    if branches.is_empty() {
        return Err(Error::DimError("need at least one branch".into()));
    }
    if amps.len() != branches.len() {
        return Err(Error::DimError(format!(
            "{} amplitudes for {} branches",
            amps.len(),
            branches.len()
        )));
    }
    let norm2: f64 = amps.iter().map(|a| a.norm_sqr()).sum();
    if (norm2 - 1.0).abs() > tol::NORM_TOL {
        return Err(Error::NormError(format!(
            "branch amplitudes have squared norm {:.12}, expected 1",
            norm2
        )));
    }

    // Common registry order, taken from the first branch.
    let order: Vec<&str> = branches[0]
        .vector
        .registry()
        .iter()
        .map(|l| l.name.as_str())
        .collect();
    let wire_labels: Vec<SubsystemLabel> = branches[0]
        .vector
        .registry()
        .iter()
        .filter(|l| AB_ORDER.contains(&l.name.as_str()))
        .cloned()
        .collect();
    if wire_labels.len() != 4 {
        return Err(Error::DimError(
            "branch vectors must carry the wires a1, a2, b1, b2".into(),
        ));
    }
    let dim_of = |name: &str| -> usize {
        wire_labels
            .iter()
            .find(|l| l.name == name)
            .map(|l| l.dim)
            .expect("wire present")
    };
    let a = PartySpec::simple(
        "A",
        label("a1", dim_of("a1")),
        label("a2", dim_of("a2")),
    )?;
    let b = PartySpec::simple(
        "B",
        label("b1", dim_of("b1")),
        label("b2", dim_of("b2")),
    )?;
    let env: Vec<&str> = order
        .iter()
        .copied()
        .filter(|n| !AB_ORDER.contains(n))
        .collect();

    // Verify each branch realizes its declared relation.
    for (i, branch) in branches.iter().enumerate() {
        let v = branch.vector.permute(&order)?;
        if (v.norm() - 1.0).abs() > tol::NORM_TOL {
            return Err(Error::NormError(format!(
                "branch {} has norm {:.12}, expected 1",
                i,
                v.norm()
            )));
        }
        let w_op = v.trace_out(&env)?;
        let process = ProcessMatrix::new(vec![a.clone(), b.clone()], w_op)?;
        let got = (
            can_signal(&process, "A", "B", tol::SIGNAL_TOL)?,
            can_signal(&process, "B", "A", tol::SIGNAL_TOL)?,
        );
        let want = branch.relation.expected_signalling();
        if got != want {
            return Err(Error::BranchRelationError(format!(
                "branch {} declares {:?} but signalling is (A→B: {}, B→A: {})",
                i, branch.relation, got.0, got.1
            )));
        }
    }

    // Assemble the purified vector and trace the environment.
    let g_dim = branches.len();
    let mut w_vec: Option<LabeledVector> = None;
    for (i, (amp, branch)) in amps.iter().zip(branches).enumerate() {
        let g = LabeledVector::basis(label("g", g_dim), i)?;
        let term = g.tensor(&branch.vector.permute(&order)?)?.scale(*amp);
        w_vec = Some(match w_vec {
            None => term,
            Some(acc) => acc.add(&term)?,
        });
    }
    let w_op = w_vec.expect("non-empty").trace_out(&env)?;
    let g_party = PartySpec::new("G", vec![label("g", g_dim)], vec![])?;
    ProcessMatrix::new(vec![g_party, a, b], w_op)
}

/// Coherent interpolation between a shared state and a channel via the
/// partial-swap unitary V(p) = √(1−p)·id + i√p·SWAP.
///
/// The model wires an initial bipartite state ρ on (a₁, a₁′), a channel
/// N from A's output a₂ into the copy wire a₂′ (this feed direction is
/// declared explicitly by the caller, e.g. through the model-file
/// schema), and V(p) acting on (a₁′, a₂′) with outputs (b₁, e): the
/// identity part forwards a₁′ to B while N's output is lost to the
/// environment, and the swap part forwards N's output to B while a₁′
/// is lost. B's output b₂ is uncorrelated (maximally mixed).
#[derive(Debug, Clone)]
pub struct PartialSwapModel {
    p: f64,
    rho: LabeledOperator,
    kraus: Vec<DMatrix<C64>>,
}

impl PartialSwapModel {
    /// Create a model from the swap weight `p`, the initial state `rho`
    /// on two equal-dimension slots (a₁, a₁′), and Kraus operators of
    /// the channel N: a₂ → a₂′.
    ///
    /// # Errors
    /// - [`Error::DomainError`] if p ∉ [0, 1];
    /// - [`Error::DimError`] on slot/Kraus dimension mismatches;
    /// - [`Error::InvalidOperator`] if ρ is not a state or N is not
    ///   trace-preserving.
    pub fn new(p: f64, rho: LabeledOperator, kraus: Vec<DMatrix<C64>>) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::DomainError(format!(
                "swap weight {} is outside [0, 1]",
                p
            )));
        }
        if rho.registry().len() != 2 || rho.registry()[0].dim != rho.registry()[1].dim {
            return Err(Error::DimError(
                "initial state must live on two slots of equal dimension".into(),
            ));
        }
        let d = rho.registry()[0].dim;
        if !crate::tensor_core::is_psd(&rho, tol::PSD_TOL) {
            return Err(Error::InvalidOperator(
                "initial state is not positive semidefinite".into(),
            ));
        }
        if (rho.trace() - c64(1.0, 0.0)).norm() > tol::TRACE_TOL {
            return Err(Error::InvalidOperator(format!(
                "initial state has trace {:.12}, expected 1",
                rho.trace().re
            )));
        }
        if kraus.is_empty() {
            return Err(Error::InvalidOperator("channel has no Kraus operators".into()));
        }
        let mut tp = DMatrix::<C64>::zeros(d, d);
        for k in &kraus {
            if k.nrows() != d || k.ncols() != d {
                return Err(Error::DimError(format!(
                    "Kraus operator is {}x{}, expected {}x{}",
                    k.nrows(),
                    k.ncols(),
                    d,
                    d
                )));
            }
            tp += k.adjoint() * k;
        }
        let residue = (&tp - DMatrix::<C64>::identity(d, d))
            .iter()
            .map(|c| c.norm())
            .fold(0.0, f64::max);
        if residue > tol::TP_TOL {
            return Err(Error::InvalidOperator(format!(
                "channel is not trace-preserving (residue {:.3e})",
                residue
            )));
        }
        Ok(Self { p, rho, kraus })
    }

    /// Swap weight p.
    pub fn p(&self) -> f64 {
        self.p
    }

    /// Wire dimension d.
    pub fn wire_dim(&self) -> usize {
        self.rho.registry()[0].dim
    }

    /// The initial state on (a₁, a₁′).
    pub fn rho(&self) -> &LabeledOperator {
        &self.rho
    }

    /// Kraus operators of the channel N: a₂ → a₂′.
    pub fn kraus(&self) -> &[DMatrix<C64>] {
        &self.kraus
    }
}

/// Build the bipartite partial-swap process.
///
/// The construction purifies every ingredient and traces the
/// environment at the end, which guarantees positivity and unit trace:
/// ρ is purified into |r⟩^{a₁ a₁′ c}, the channel N is lifted to a
/// Stinespring isometry a₂′f ← a₂ fed by one half of a maximally
/// entangled pair on (a₂, ·), V(p) maps (a₁′, a₂′) to (b₁, e), and
/// {c, f, e} are traced. The free output b₂ carries π.
///
/// Endpoints: p = 0 gives ρ relabeled onto (a₁, b₁) ⊗ π^{a₂} ⊗ π^{b₂}
/// (pure shared-state configuration); p = 1 gives
/// ρ^{a₁} ⊗ J_N^{(b₁,a₂)} ⊗ π^{b₂} with J_N the normalized Choi state
/// of N as a wire from a₂ to b₁ (pure channel configuration, global
/// phase i dropping out).
pub fn build_partial_swap(m: &PartialSwapModel) -> Result<ProcessMatrix> {
    let d = m.wire_dim();
    let r = m.kraus.len();

    // Purify ρ on (a1, a1p) with purifier c of dimension d².
    let rho_herm =
        (m.rho.entries() + m.rho.entries().adjoint()) * c64(0.5, 0.0);
    let eig = rho_herm.symmetric_eigen();
    let dd = d * d;
    let mut r_entries = DVector::<C64>::zeros(dd * dd);
    for v in 0..dd {
        let lam = eig.eigenvalues[v].max(0.0);
        let amp = c64(lam.sqrt(), 0.0);
        for row in 0..dd {
            r_entries[row * dd + v] += amp * eig.eigenvectors[(row, v)];
        }
    }
    let r_vec = LabeledVector::new(
        vec![label("a1", d), label("a1p", d), label("c", dd)],
        r_entries,
    )?;

    // Open wire into the channel: |Φ⟩^{a2, t}.
    let wire = LabeledVector::max_entangled(label("a2", d), label("t", d))?;

    // Stinespring isometry of N: t → (a2p, f).
    let mut v_n = DMatrix::<C64>::zeros(d * r, d);
    for (j, k) in m.kraus.iter().enumerate() {
        for o in 0..d {
            for i in 0..d {
                v_n[(o * r + j, i)] = k[(o, i)];
            }
        }
    }

    // Partial-swap unitary on (a1p, a2p) → (b1, e).
    let sq_id = c64((1.0 - m.p).sqrt(), 0.0);
    let sq_sw = c64(0.0, m.p.sqrt());
    let mut v_p = DMatrix::<C64>::zeros(dd, dd);
    for i1 in 0..d {
        for i2 in 0..d {
            v_p[(i1 * d + i2, i1 * d + i2)] += sq_id;
            v_p[(i2 * d + i1, i1 * d + i2)] += sq_sw;
        }
    }

    let omega = r_vec
        .tensor(&wire)?
        .apply_local(&v_n, &["t"], vec![label("a2p", d), label("f", r)])?
        .apply_local(&v_p, &["a1p", "a2p"], vec![label("b1", d), label("e", d)])?;
    let core = omega.trace_out(&["c", "f", "e"])?;
    let w_op = tensor(&core, &LabeledOperator::maximally_mixed(label("b2", d)))?;
    let w_op = permute(&w_op, &AB_ORDER)?;
    let (a, b) = ab_parties(d, "")?;
    ProcessMatrix::new(vec![a, b], w_op)
}

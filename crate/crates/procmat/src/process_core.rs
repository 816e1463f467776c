//! Process matrices, Choi instruments, and the generalized Born rule.
//!
//! A two-party (or n-party) *process matrix* W is the most general
//! wiring of local laboratories that produces valid joint outcome
//! statistics without presupposing a global causal order. Each party
//! holds input wires (collectively the a₁ role) and output wires (the
//! a₂ role); a local operation with outcome i is represented by the Choi
//! operator of its CP map,
//!
//! > M̂ᵢ = |a₁a₂| · (Mᵢ ⊗ id)(|Φ⟩⟨Φ|),
//!
//! with |Φ⟩ the normalized maximally entangled state on two copies of
//! the input. The joint outcome probability is the multilinear pairing
//!
//! > P(i, j, …) = Tr[(M̂ᵢ ⊗ N̂ⱼ ⊗ …)ᵀ W],
//!
//! where the transpose is taken in the canonical product basis fixed by
//! [`crate::tensor_core`]'s index convention. W is positive
//! semidefinite with unit trace; the dimension factor |a₁a₂| lives
//! entirely in the instrument Choi operators, never in W.
//!
//! Under these conventions a trace-preserving instrument satisfies
//! Tr_output(Σᵢ M̂ᵢ) = |output|·id_input, probabilities over a complete
//! instrument set sum to one, and a wire carrying the normalized
//! maximally entangled state transports a channel identically (not its
//! transpose).
//!
//! Signalling is decided operationally by [`can_signal`]: party F can
//! signal to party T iff two trace-preserving channels at F produce
//! different reduced operators at T, all other parties closed with
//! trace-and-replace-π channels. The test spans the full affine hull of
//! the channel polytope exactly, so it is a decision procedure rather
//! than a heuristic (see [`ValidationReport::signalling_family_note`]).

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::tensor_core::{
    c64, is_psd, offset_table, partial_trace, positions, tensor, LabeledOperator, SubsystemLabel,
    C64,
};
use crate::tol;

/// One party's local laboratory: named input and output wires.
///
/// The standard laboratory has exactly one input wire (a₁) and one
/// output wire (a₂); see [`PartySpec::simple`]. Multi-wire parties
/// appear when a laboratory is extended with reference systems (e.g.
/// one half of an entangled test state handed to the party as an extra
/// input), so all operations here accept the general shape.
#[derive(Debug, Clone, PartialEq)]
pub struct PartySpec {
    /// Party identifier, unique within a process.
    pub name: String,
    /// Input wires (the a₁ role), most significant first.
    pub inputs: Vec<SubsystemLabel>,
    /// Output wires (the a₂ role), most significant first.
    pub outputs: Vec<SubsystemLabel>,
}

impl PartySpec {
    /// General constructor. Wire names must be unique within the party.
    pub fn new(
        name: impl Into<String>,
        inputs: Vec<SubsystemLabel>,
        outputs: Vec<SubsystemLabel>,
    ) -> Result<Self> {
        let name = name.into();
        if name.is_empty() {
            return Err(Error::PartyError("party name must be non-empty".into()));
        }
        let spec = Self {
            name,
            inputs,
            outputs,
        };
        let mut seen: Vec<&str> = Vec::new();
        for l in spec.wires() {
            if l.dim == 0 {
                return Err(Error::ZeroDim(l.name.clone()));
            }
            if seen.contains(&l.name.as_str()) {
                return Err(Error::DuplicateLabel(l.name.clone()));
            }
            seen.push(&l.name);
        }
        if seen.is_empty() {
            return Err(Error::PartyError(format!(
                "party {:?} has no wires",
                spec.name
            )));
        }
        Ok(spec)
    }

    /// The standard laboratory: one input wire and one output wire with
    /// distinct names.
    pub fn simple(
        name: impl Into<String>,
        input: SubsystemLabel,
        output: SubsystemLabel,
    ) -> Result<Self> {
        if input.name == output.name {
            return Err(Error::DuplicateLabel(input.name));
        }
        Self::new(name, vec![input], vec![output])
    }

    /// All wires, inputs then outputs.
    pub fn wires(&self) -> impl Iterator<Item = &SubsystemLabel> {
        self.inputs.iter().chain(self.outputs.iter())
    }

    /// Product of input dimensions.
    pub fn input_dim(&self) -> usize {
        self.inputs.iter().map(|l| l.dim).product()
    }

    /// Product of output dimensions.
    pub fn output_dim(&self) -> usize {
        self.outputs.iter().map(|l| l.dim).product()
    }

    /// Registry on which this party's Choi operators live:
    /// outputs first (most significant), then inputs.
    pub fn choi_registry(&self) -> Vec<SubsystemLabel> {
        let mut r = self.outputs.clone();
        r.extend(self.inputs.iter().cloned());
        r
    }
}

/// Row-major vectorization of a d_out × d_in matrix: entry K[o, i] lands
/// at flat index o·d_in + i, matching the (output, input) registry.
fn vec_rm(k: &DMatrix<C64>) -> Vec<C64> {
    let (rows, cols) = k.shape();
    let mut v = Vec::with_capacity(rows * cols);
    for o in 0..rows {
        for i in 0..cols {
            v.push(k[(o, i)]);
        }
    }
    v
}

/// Choi operator of a CP map given by Kraus operators, on an explicit
/// (outputs, inputs) registry: |a₁a₂|·(M ⊗ id)(|Φ⟩⟨Φ|) = |a₂|·Σ_K |K⟩⟩⟨⟨K|
/// with |K⟩⟩ the row-major vectorization.
pub(crate) fn choi_of_kraus_on(
    outputs: &[SubsystemLabel],
    inputs: &[SubsystemLabel],
    kraus: &[DMatrix<C64>],
) -> Result<LabeledOperator> {
    let d_out: usize = outputs.iter().map(|l| l.dim).product();
    let d_in: usize = inputs.iter().map(|l| l.dim).product();
    let side = d_out * d_in;
    let mut m = DMatrix::zeros(side, side);
    for k in kraus {
        if k.nrows() != d_out || k.ncols() != d_in {
            return Err(Error::DimError(format!(
                "Kraus operator is {}x{}, expected {}x{}",
                k.nrows(),
                k.ncols(),
                d_out,
                d_in
            )));
        }
        let v = vec_rm(k);
        for (r, vr) in v.iter().enumerate() {
            for (c, vc) in v.iter().enumerate() {
                m[(r, c)] += vr * vc.conj();
            }
        }
    }
    m *= c64(d_out as f64, 0.0);
    let mut registry = outputs.to_vec();
    registry.extend(inputs.iter().cloned());
    LabeledOperator::new(registry, m)
}

/// Choi operator of a CP map on a party's wires.
///
/// Returns |a₁a₂|·(M ⊗ id)(|Φ⟩⟨Φ|) on the registry (outputs, inputs);
/// the identity channel on dimension d yields a rank-one operator of
/// trace d², proportional to the maximally entangled projector.
///
/// # Errors
/// [`Error::DimError`] if a Kraus matrix does not map the party's input
/// dimension to its output dimension.
pub fn choi_of_kraus(party: &PartySpec, kraus: &[DMatrix<C64>]) -> Result<LabeledOperator> {
    choi_of_kraus_on(&party.outputs, &party.inputs, kraus)
}

/// Normalized Choi *state* of a trace-preserving channel: the operator
/// of [`choi_of_kraus`] rescaled to unit trace (division by |a₁a₂|).
pub fn choi_normalized_state(party: &PartySpec, kraus: &[DMatrix<C64>]) -> Result<LabeledOperator> {
    let raw = choi_of_kraus(party, kraus)?;
    let scale = (party.input_dim() * party.output_dim()) as f64;
    Ok(raw.scale(c64(1.0 / scale, 0.0)))
}

/// A local instrument in Choi form: one PSD element per outcome, summing
/// to a trace-preserving map.
#[derive(Debug, Clone)]
pub struct ChoiInstrument {
    /// The party whose wires the elements act on.
    pub party: PartySpec,
    /// One Choi element per outcome, each on the registry
    /// (party outputs, party inputs).
    pub elements: Vec<LabeledOperator>,
}

impl ChoiInstrument {
    /// Validate and wrap instrument elements.
    ///
    /// # Errors
    /// - [`Error::InvalidOperator`] if an element lives on the wrong
    ///   registry, is not PSD, or the sum violates trace preservation
    ///   (Tr_output of the sum must be |output|·id_input).
    /// - [`Error::ConstraintViolation`] if `elements` is empty.
    pub fn new(party: PartySpec, elements: Vec<LabeledOperator>) -> Result<Self> {
        if elements.is_empty() {
            return Err(Error::ConstraintViolation(format!(
                "instrument for party {:?} has no outcomes",
                party.name
            )));
        }
        let want_registry = party.choi_registry();
        let mut sum: Option<LabeledOperator> = None;
        for (i, el) in elements.iter().enumerate() {
            if el.registry() != want_registry.as_slice() {
                return Err(Error::InvalidOperator(format!(
                    "element {} of party {:?} is not on the (outputs, inputs) registry",
                    i, party.name
                )));
            }
            if !is_psd(el, tol::PSD_TOL) {
                return Err(Error::InvalidOperator(format!(
                    "element {} of party {:?} is not positive semidefinite",
                    i, party.name
                )));
            }
            sum = Some(match sum {
                None => el.clone(),
                Some(s) => s.add(el)?,
            });
        }
        let sum = sum.expect("at least one element");
        let out_names: Vec<&str> = party.outputs.iter().map(|l| l.name.as_str()).collect();
        let reduced = partial_trace(&sum, &out_names)?;
        let d_out = party.output_dim() as f64;
        let want = LabeledOperator::identity(party.inputs.clone())?.scale(c64(d_out, 0.0));
        let residue = reduced.max_abs_diff(&want)?;
        if residue > tol::TP_TOL * d_out.max(1.0) {
            return Err(Error::InvalidOperator(format!(
                "instrument for party {:?} is not trace-preserving (residue {:.3e})",
                party.name, residue
            )));
        }
        Ok(Self { party, elements })
    }

    /// Deterministic (single-outcome) instrument from Kraus operators of
    /// a trace-preserving channel.
    pub fn channel(party: PartySpec, kraus: &[DMatrix<C64>]) -> Result<Self> {
        let el = choi_of_kraus(&party, kraus)?;
        Self::new(party, vec![el])
    }

    /// The identity channel as a deterministic instrument; requires
    /// equal input and output dimensions.
    pub fn identity_channel(party: PartySpec) -> Result<Self> {
        let d_in = party.input_dim();
        if d_in != party.output_dim() {
            return Err(Error::DimError(format!(
                "identity channel needs matching dims on party {:?}",
                party.name
            )));
        }
        Self::channel(party, &[DMatrix::identity(d_in, d_in)])
    }

    /// Measure the full input with the POVM `effects` and prepare the
    /// state `prepare` on the outputs, one outcome per effect.
    ///
    /// Each element is |output|·(prepare ⊗ Eᵀ); completeness of the POVM
    /// is enforced through the trace-preservation check.
    pub fn measure_and_prepare(
        party: PartySpec,
        effects: &[DMatrix<C64>],
        prepare: &LabeledOperator,
    ) -> Result<Self> {
        if prepare.registry() != party.outputs.as_slice() {
            return Err(Error::InvalidOperator(format!(
                "prepared state must live on party {:?}'s output registry",
                party.name
            )));
        }
        let d_in = party.input_dim();
        let d_out = party.output_dim() as f64;
        let mut elements = Vec::with_capacity(effects.len());
        for e in effects {
            if e.nrows() != d_in || e.ncols() != d_in {
                return Err(Error::DimError(format!(
                    "POVM effect is {}x{}, expected {}x{}",
                    e.nrows(),
                    e.ncols(),
                    d_in,
                    d_in
                )));
            }
            let et = LabeledOperator::new(party.inputs.clone(), e.transpose())?;
            elements.push(tensor(prepare, &et)?.scale(c64(d_out, 0.0)));
        }
        Self::new(party, elements)
    }

    /// Trace the input and prepare `state` on the outputs
    /// (a deterministic channel).
    pub fn trace_and_replace(party: PartySpec, state: &LabeledOperator) -> Result<Self> {
        let d_in = party.input_dim();
        let effects = [DMatrix::identity(d_in, d_in)];
        Self::measure_and_prepare(party, &effects, state)
    }

    /// Trace the input and emit the maximally mixed state on the
    /// outputs — the canonical closure channel for spectator parties.
    pub fn trace_and_replace_mixed(party: PartySpec) -> Result<Self> {
        let d_out = party.output_dim();
        let pi = LabeledOperator::identity(party.outputs.clone())?
            .scale(c64(1.0 / d_out as f64, 0.0));
        Self::trace_and_replace(party, &pi)
    }

    /// Measure the full input in the computational (product) basis and
    /// prepare `state` on the outputs; outcome k is basis index k.
    pub fn computational_measure_and_replace(
        party: PartySpec,
        state: &LabeledOperator,
    ) -> Result<Self> {
        let d_in = party.input_dim();
        let effects: Vec<DMatrix<C64>> = (0..d_in)
            .map(|k| {
                let mut e = DMatrix::zeros(d_in, d_in);
                e[(k, k)] = c64(1.0, 0.0);
                e
            })
            .collect();
        Self::measure_and_prepare(party, &effects, state)
    }
}

/// A process matrix: the complete wiring between parties' laboratories.
#[derive(Debug, Clone)]
pub struct ProcessMatrix {
    parties: Vec<PartySpec>,
    w: LabeledOperator,
}

impl ProcessMatrix {
    /// Validating constructor: structural checks plus the process-matrix
    /// invariants (positive semidefinite, unit trace).
    ///
    /// # Errors
    /// Structural problems as in [`ProcessMatrix::from_parts`];
    /// [`Error::ConstraintViolation`] if W fails positivity or unit
    /// trace within the default tolerances.
    pub fn new(parties: Vec<PartySpec>, w: LabeledOperator) -> Result<Self> {
        let p = Self::from_parts(parties, w)?;
        if !is_psd(&p.w, tol::PSD_TOL) {
            return Err(Error::ConstraintViolation(
                "process operator is not positive semidefinite".into(),
            ));
        }
        let tr = p.w.trace();
        if (tr - c64(1.0, 0.0)).norm() > tol::TRACE_TOL {
            return Err(Error::ConstraintViolation(format!(
                "process operator has trace {:.12} + {:.3e}i, expected 1",
                tr.re, tr.im
            )));
        }
        Ok(p)
    }

    /// Structural constructor without the positivity/trace checks, for
    /// candidate operators that will be inspected with
    /// [`validate_process`] and for builders whose output is valid by
    /// construction (e.g. tensoring a validated process with an
    /// independent unit-trace PSD state on fresh wires, which preserves
    /// both invariants exactly).
    ///
    /// # Errors
    /// - [`Error::PartyError`] on duplicate party names or no parties;
    /// - [`Error::DuplicateLabel`] if two parties share a wire name;
    /// - [`Error::DimError`] if W's registry is not exactly the set of
    ///   party wires (with matching dimensions).
    pub fn from_parts(parties: Vec<PartySpec>, w: LabeledOperator) -> Result<Self> {
        if parties.is_empty() {
            return Err(Error::PartyError("process needs at least one party".into()));
        }
        let mut wire_names: Vec<&SubsystemLabel> = Vec::new();
        for (i, p) in parties.iter().enumerate() {
            if parties[..i].iter().any(|q| q.name == p.name) {
                return Err(Error::PartyError(format!(
                    "duplicate party name {:?}",
                    p.name
                )));
            }
            for l in p.wires() {
                if wire_names.iter().any(|m| m.name == l.name) {
                    return Err(Error::DuplicateLabel(l.name.clone()));
                }
                wire_names.push(l);
            }
        }
        if wire_names.len() != w.registry().len() {
            return Err(Error::DimError(format!(
                "W has {} subsystems but the parties declare {} wires",
                w.registry().len(),
                wire_names.len()
            )));
        }
        for l in wire_names {
            let in_w = w
                .registry()
                .iter()
                .find(|m| m.name == l.name)
                .ok_or_else(|| Error::DimError(format!("wire {:?} missing from W", l.name)))?;
            if in_w.dim != l.dim {
                return Err(Error::DimError(format!(
                    "wire {:?} has dim {} in W but {} in its party",
                    l.name, in_w.dim, l.dim
                )));
            }
        }
        Ok(Self { parties, w })
    }

    /// Parties in declaration order.
    pub fn parties(&self) -> &[PartySpec] {
        &self.parties
    }

    /// Look up a party by name.
    pub fn party(&self, name: &str) -> Result<&PartySpec> {
        self.parties
            .iter()
            .find(|p| p.name == name)
            .ok_or_else(|| Error::PartyError(format!("no party named {:?}", name)))
    }

    /// The process operator W.
    pub fn w(&self) -> &LabeledOperator {
        &self.w
    }

    /// Consume into the process operator.
    pub fn into_w(self) -> LabeledOperator {
        self.w
    }
}

/// Contract one party's Choi element into `t`: sums
/// Σ_{v,u} M̂[v,u] · t[(v,r),(u,c)] over the element's labels, leaving an
/// operator on the remaining labels. This is the building block of the
/// generalized Born rule and of the signalling test.
pub(crate) fn contract_element(
    t: &LabeledOperator,
    element: &LabeledOperator,
) -> Result<LabeledOperator> {
    let names: Vec<&str> = element.registry().iter().map(|l| l.name.as_str()).collect();
    let posns = positions(t.registry(), &names)?;
    for (&p, l) in posns.iter().zip(element.registry()) {
        if t.registry()[p].dim != l.dim {
            return Err(Error::DimError(format!(
                "label {:?} has dim {} in the process but {} in the element",
                l.name,
                t.registry()[p].dim,
                l.dim
            )));
        }
    }
    let rest_pos: Vec<usize> = (0..t.registry().len())
        .filter(|p| !posns.contains(p))
        .collect();
    let rest_registry: Vec<SubsystemLabel> =
        rest_pos.iter().map(|&p| t.registry()[p].clone()).collect();
    let rest_dim: usize = rest_registry.iter().map(|l| l.dim).product();

    let el_off = offset_table(t.registry(), &posns);
    let rest_off = offset_table(t.registry(), &rest_pos);

    let te = t.entries();
    let me = element.entries();
    let mut out = DMatrix::zeros(rest_dim, rest_dim);
    for (r, &ro) in rest_off.iter().enumerate() {
        for (c, &co) in rest_off.iter().enumerate() {
            let mut acc = c64(0.0, 0.0);
            for (v, &vo) in el_off.iter().enumerate() {
                let row = ro + vo;
                for (u, &uo) in el_off.iter().enumerate() {
                    acc += me[(v, u)] * te[(row, co + uo)];
                }
            }
            out[(r, c)] = acc;
        }
    }
    LabeledOperator::new(rest_registry, out)
}

/// Generalized Born rule: the probability of one joint outcome.
///
/// `instruments` supplies one instrument per party of `w` (any order,
/// matched by party name) and `outcomes` the selected element index per
/// instrument. Returns Tr[(M̂ᵢ ⊗ N̂ⱼ ⊗ …)ᵀ W], computed by contracting
/// one party at a time (never materializing the joint product).
///
/// # Errors
/// - [`Error::PartyError`] if the instruments do not cover exactly the
///   parties of `w`, or an instrument's party disagrees with the
///   process's party of the same name;
/// - [`Error::DomainError`] on an out-of-range outcome index;
/// - [`Error::NormError`] if the pairing has imaginary residue above
///   1e−9 or lies outside [−1e−8, 1+1e−8].
pub fn born_probability(
    w: &ProcessMatrix,
    instruments: &[&ChoiInstrument],
    outcomes: &[usize],
) -> Result<f64> {
    if instruments.len() != w.parties().len() {
        return Err(Error::PartyError(format!(
            "process has {} parties but {} instruments were supplied",
            w.parties().len(),
            instruments.len()
        )));
    }
    if outcomes.len() != instruments.len() {
        return Err(Error::PartyError(format!(
            "{} instruments but {} outcome indices",
            instruments.len(),
            outcomes.len()
        )));
    }
    for p in w.parties() {
        let matching = instruments
            .iter()
            .filter(|ins| ins.party.name == p.name)
            .count();
        if matching != 1 {
            return Err(Error::PartyError(format!(
                "party {:?} is covered by {} instruments, expected exactly 1",
                p.name, matching
            )));
        }
    }
    for ins in instruments {
        let p = w.party(&ins.party.name)?;
        if &ins.party != p {
            return Err(Error::PartyError(format!(
                "instrument for party {:?} disagrees with the process's wire layout",
                p.name
            )));
        }
    }

    let mut t = w.w().clone();
    for (ins, &k) in instruments.iter().zip(outcomes) {
        let el = ins.elements.get(k).ok_or_else(|| {
            Error::DomainError(format!(
                "outcome index {} out of range for party {:?} ({} outcomes)",
                k,
                ins.party.name,
                ins.elements.len()
            ))
        })?;
        t = contract_element(&t, el)?;
    }
    debug_assert!(t.registry().is_empty());
    let p = t.entries()[(0, 0)];
    if p.im.abs() > tol::BORN_IMAG_TOL {
        return Err(Error::NormError(format!(
            "Born pairing has imaginary residue {:.3e}",
            p.im
        )));
    }
    if p.re < -tol::BORN_RANGE_TOL || p.re > 1.0 + tol::BORN_RANGE_TOL {
        return Err(Error::NormError(format!(
            "Born pairing {} is outside [0, 1]",
            p.re
        )));
    }
    Ok(p.re)
}

/// Close every party except `keep` with trace-and-replace-π channels.
/// Under the conventions here that closure is exactly a partial trace
/// over the closed parties' wires.
fn close_spectators(w: &ProcessMatrix, keep: &[&str]) -> Result<LabeledOperator> {
    let mut traced: Vec<&str> = Vec::new();
    for p in w.parties() {
        if keep.contains(&p.name.as_str()) {
            continue;
        }
        for l in p.wires() {
            traced.push(&l.name);
        }
    }
    partial_trace(w.w(), &traced)
}

/// Hermitian basis of an n×n matrix space, max-abs-normalized:
/// diagonal units E_kk, symmetric pairs E_kl + E_lk, and antisymmetric
/// pairs i(E_kl − E_lk). With `traceless`, the diagonal part is replaced
/// by the n−1 differences E_kk − E_{k+1,k+1}.
fn hermitian_basis(n: usize, traceless: bool) -> Vec<DMatrix<C64>> {
    let mut basis = Vec::new();
    if traceless {
        for k in 0..n.saturating_sub(1) {
            let mut m = DMatrix::zeros(n, n);
            m[(k, k)] = c64(1.0, 0.0);
            m[(k + 1, k + 1)] = c64(-1.0, 0.0);
            basis.push(m);
        }
    } else {
        for k in 0..n {
            let mut m = DMatrix::zeros(n, n);
            m[(k, k)] = c64(1.0, 0.0);
            basis.push(m);
        }
    }
    for k in 0..n {
        for l in (k + 1)..n {
            let mut sym = DMatrix::zeros(n, n);
            sym[(k, l)] = c64(1.0, 0.0);
            sym[(l, k)] = c64(1.0, 0.0);
            basis.push(sym);
            let mut asym = DMatrix::zeros(n, n);
            asym[(k, l)] = c64(0.0, 1.0);
            asym[(l, k)] = c64(0.0, -1.0);
            basis.push(asym);
        }
    }
    basis
}

/// Documentation of the channel family behind [`can_signal`], included
/// in every [`ValidationReport`].
const SIGNALLING_FAMILY_NOTE: &str = "signalling is decided on the difference space of \
trace-preserving Choi operators: every direction G ⊗ E with G a traceless Hermitian basis \
element on the sender's outputs and E a Hermitian basis element on the sender's inputs. \
These directions span that difference space exactly, and the trace-preserving polytope has \
full affine dimension around the completely depolarizing channel, so a zero response on \
every direction is equivalent to no signalling (measure-and-reprepare families over two \
mutually unbiased bases do not span this space and would miss imaginary-offdiagonal \
directions).";

/// Operational signalling test: can `from` influence `to`'s marginal
/// statistics?
///
/// True iff two trace-preserving channels at `from` yield reduced
/// operators at `to` differing by more than `tol` in max-abs norm, with
/// all other parties closed by trace-and-replace-π channels. Decided
/// exactly by probing every direction of the affine hull of the
/// trace-preserving channel polytope (see the note in
/// [`ValidationReport`]).
///
/// # Errors
/// [`Error::PartyError`] if a party is unknown or `from == to`.
pub fn can_signal(w: &ProcessMatrix, from: &str, to: &str, tol: f64) -> Result<bool> {
    if from == to {
        return Err(Error::PartyError(format!(
            "signalling from {:?} to itself is not defined",
            from
        )));
    }
    let from_party = w.party(from)?.clone();
    let _ = w.party(to)?;
    let closed = close_spectators(w, &[from, to])?;

    let out_basis = hermitian_basis(from_party.output_dim(), true);
    let in_basis = hermitian_basis(from_party.input_dim(), false);
    let registry = from_party.choi_registry();
    for g in &out_basis {
        for e in &in_basis {
            let direction = LabeledOperator::new(registry.clone(), g.kronecker(e))?;
            let response = contract_element(&closed, &direction)?;
            if response.max_abs() > tol {
                return Ok(true);
            }
        }
    }
    Ok(false)
}

/// Outcome of [`validate_process`].
#[derive(Debug, Clone)]
pub struct ValidationReport {
    /// Largest |W − W†| entry.
    pub hermiticity_residue: f64,
    /// Smallest eigenvalue of the Hermitian part.
    pub min_eigenvalue: f64,
    /// Positivity verdict at the default tolerance.
    pub psd_ok: bool,
    /// Tr W (should be 1).
    pub trace: C64,
    /// Unit-trace verdict at the default tolerance.
    pub trace_ok: bool,
    /// Signalling verdict for every ordered party pair
    /// (from, to, verdict), at the default signalling tolerance.
    pub signalling: Vec<(String, String, bool)>,
    /// How the signalling test's channel family is constructed and why
    /// it spans the full channel polytope.
    pub signalling_family_note: &'static str,
}

impl ValidationReport {
    /// True iff the process-matrix invariants hold.
    pub fn is_valid(&self) -> bool {
        self.psd_ok && self.trace_ok
    }

    /// The verdict for one ordered pair, if present.
    pub fn signalling_verdict(&self, from: &str, to: &str) -> Option<bool> {
        self.signalling
            .iter()
            .find(|(f, t, _)| f == from && t == to)
            .map(|&(_, _, v)| v)
    }
}

/// Validate a candidate process: positivity, unit trace, Hermiticity
/// residue, and the signalling verdict for every ordered party pair.
/// Failures are report entries, never errors.
pub fn validate_process(w: &ProcessMatrix) -> ValidationReport {
    let hermiticity_residue = w.w().hermiticity_residue();
    let eigenvalues = w.w().hermitian_eigenvalues();
    let min_eigenvalue = eigenvalues.first().copied().unwrap_or(0.0);
    let psd_ok = is_psd(w.w(), tol::PSD_TOL);
    let trace = w.w().trace();
    let trace_ok = (trace - c64(1.0, 0.0)).norm() <= tol::TRACE_TOL;

    let mut signalling = Vec::new();
    for from in w.parties() {
        for to in w.parties() {
            if from.name == to.name {
                continue;
            }
            let verdict =
                can_signal(w, &from.name, &to.name, tol::SIGNAL_TOL).unwrap_or(false);
            signalling.push((from.name.clone(), to.name.clone(), verdict));
        }
    }
    ValidationReport {
        hermiticity_residue,
        min_eigenvalue,
        psd_ok,
        trace,
        trace_ok,
        signalling,
        signalling_family_note: SIGNALLING_FAMILY_NOTE,
    }
}

//! One-shot entanglement-transmission capacity of two-party process
//! matrices, with an independent Born-rule fidelity oracle.
//!
//! The capacity asks: through a process W shared by a sender and a
//! receiver, how large a maximally entangled state can the sender push to
//! the receiver in a single use, up to fidelity 1 − ε?  The canonical
//! probe strategy is fixed once and for all:
//!
//! 1. extend W with a fresh maximally entangled pair Φ_m on probe wires
//!    (one half handed to each lab as an extra input),
//! 2. the sender discards its ordinary input and embeds its probe half
//!    isometrically into its output wire,
//! 3. the receiver *corrals* its input wire into the m-dimensional code
//!    subspace (basis states outside the code collapse onto the first
//!    code state) and projects the pair (corralled wire, probe half)
//!    onto Φ_m.
//!
//! The accept probability of step 3 is the transmission fidelity
//!
//! > F(m) = ⟨Φ_m| (decode ∘ wire)(Φ_m) |Φ_m⟩,
//!
//! and the capacity at tolerance ε is log₂ of the largest m whose
//! fidelity clears 1 − ε.  For the mixture family
//! W = p₁·W₁ + p₂·W₂ + p₃·W₃ (forward wire / backward wire /
//! disconnected) the fidelity is exactly
//!
//! > F(m) = p + (1 − p)/m²,
//!
//! with p the weight of the wire branch serving the chosen direction:
//! the corral makes the two non-serving branches contribute the fresh
//! entanglement floor 1/m² regardless of the branch states.  Closing the
//! staircase inequality F(m) ≥ 1 − ε gives the closed form implemented
//! by [`q_ent_closed_form`]:
//!
//! > Q(ε) = log₂ max{ m ≤ d : (m² − 1)(1 − p) ≤ m²·ε },
//!
//! which saturates at log₂ d as soon as ε ≥ (1 − 1/d²)(1 − p), and is
//! zero precisely when p < 1 − (4/3)ε ([`q_ent_zero_threshold`]).
//!
//! [`fidelity_oracle`] computes F(m) *entirely through the Born rule* on
//! the extended process — it shares no code path with the closed form
//! and serves as its independent witness.  [`invert_capacity_curves`]
//! runs the reconstruction direction: from the ε-locations of the
//! forward and backward staircase steps it recovers the branch weights
//! (hence the amplitude moduli) and, when the saturation plateau is
//! attributable to the wire rather than to the grid, the wire
//! dimensions.
//!
//! [`axiom_suite`] checks the behaviour expected of any causality
//! measure on sampled local operations: monotonicity under party-local
//! channels, non-negativity, "positive capacity implies signalling", and
//! the normalization bound log₂ d.  The signalling axiom is only sound
//! for ε ≤ [`tol::MEASURE_EPS_MAX`]: from ε = 3/4 the fresh-entanglement
//! floor 1/4 alone clears the threshold at m = 2 and the measure
//! decouples from the process.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::process_core::{
    born_probability, can_signal, choi_of_kraus, ChoiInstrument, PartySpec, ProcessMatrix,
};
use crate::tensor_core::{apply_kraus_to_wire, c64, label, tensor, LabeledVector, C64};
use crate::tol;

/// Transmission direction through a two-party process.
///
/// `Forward` sends from the first party listed by the process to the
/// second; `Backward` is the reverse.  The standard builders list the
/// parties as [A, B], so `Forward` means A → B.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Direction {
    /// First party sends, second party receives.
    Forward,
    /// Second party sends, first party receives.
    Backward,
}

impl Direction {
    /// Stable lower-case name, used in reports and CSV output.
    pub fn as_str(self) -> &'static str {
        match self {
            Direction::Forward => "forward",
            Direction::Backward => "backward",
        }
    }

    /// Parse the stable name produced by [`Direction::as_str`].
    ///
    /// # Errors
    /// [`Error::DomainError`] on any other string.
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "forward" => Ok(Direction::Forward),
            "backward" => Ok(Direction::Backward),
            other => Err(Error::DomainError(format!(
                "unknown direction {other:?}, expected \"forward\" or \"backward\""
            ))),
        }
    }
}

impl std::fmt::Display for Direction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A validated point query for the closed-form capacity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CapacityQuery {
    /// Weight of the branch whose wire serves the queried direction.
    pub p: f64,
    /// Fidelity tolerance: the probe may fall short of perfect
    /// transmission by at most ε.
    pub eps: f64,
    /// Dimension of the serving wire (sender output = receiver input).
    pub wire_dim: usize,
}

impl CapacityQuery {
    /// Validate ranges: p ∈ [0, 1], ε ∈ [0, 1], wire_dim ≥ 1.
    ///
    /// # Errors
    /// [`Error::DomainError`] for out-of-range or non-finite values.
    pub fn new(p: f64, eps: f64, wire_dim: usize) -> Result<Self> {
        if !p.is_finite() || !(0.0..=1.0).contains(&p) {
            return Err(Error::DomainError(format!(
                "branch weight must lie in [0, 1], got {p}"
            )));
        }
        if !eps.is_finite() || !(0.0..=1.0).contains(&eps) {
            return Err(Error::DomainError(format!(
                "tolerance must lie in [0, 1], got {eps}"
            )));
        }
        if wire_dim == 0 {
            return Err(Error::DomainError("wire dimension must be at least 1".into()));
        }
        Ok(Self { p, eps, wire_dim })
    }
}

/// Staircase acceptance test for code size m: (m² − 1)(1 − p) ≤ m²·ε,
/// with [`tol::BOUNDARY_SLACK`] added on the tolerance side so that
/// queries landing exactly on a step belong deterministically to the
/// accepting side (the oracle comparator uses the same slack).
fn level_accepted(p: f64, eps: f64, m: usize) -> bool {
    let m2 = (m * m) as f64;
    (m2 - 1.0) * (1.0 - p) <= m2 * (eps + tol::BOUNDARY_SLACK)
}

/// Closed-form one-shot capacity in bits: log₂ of the largest code size
/// m ≤ wire_dim accepted by the staircase inequality
/// (m² − 1)(1 − p) ≤ m²·ε.
///
/// Equivalently: log₂ wire_dim when p ≥ 1 − ε (saturation), otherwise
/// log₂ max{m ∈ ℕ : m ≤ √(1/(1 − ε/(1 − p))), m ≤ wire_dim}.  The result
/// is always ≥ 0 (m = 1 is accepted for every ε ≥ 0) and non-decreasing
/// in p, ε and wire_dim.
pub fn q_ent_closed_form(query: &CapacityQuery) -> f64 {
    let mut best = 1usize;
    for m in 1..=query.wire_dim {
        if level_accepted(query.p, query.eps, m) {
            best = m;
        } else {
            break;
        }
    }
    (best as f64).log2()
}

/// The branch weight below which the capacity vanishes: p < 1 − (4/3)·ε
/// ⇔ Q(ε) = 0 (for wires of dimension ≥ 2).  The threshold is the m = 2
/// staircase boundary solved for p.
///
/// # Errors
/// [`Error::DomainError`] for ε outside [0, 3/4] (beyond 3/4 even a
/// weight-zero branch accepts m = 2 and the threshold is meaningless)
/// or non-finite ε.
pub fn q_ent_zero_threshold(eps: f64) -> Result<f64> {
    if !eps.is_finite() || !(0.0..=0.75).contains(&eps) {
        return Err(Error::DomainError(format!(
            "zero-capacity threshold needs eps in [0, 3/4], got {eps}"
        )));
    }
    Ok(1.0 - 4.0 * eps / 3.0)
}

/// A capacity-versus-tolerance staircase for one direction.
///
/// `points` holds (ε, capacity in bits) pairs with strictly increasing ε.
/// Curves produced by [`capacity_curve`] and [`oracle_capacity_curve`]
/// are non-decreasing with values log₂ of integer code sizes;
/// [`invert_capacity_curves`] validates those properties on input.
#[derive(Debug, Clone, PartialEq)]
pub struct CapacityCurve {
    /// Which direction the curve describes.
    pub direction: Direction,
    /// (ε, capacity_bits) samples with strictly increasing ε.
    pub points: Vec<(f64, f64)>,
}

fn check_eps_grid(eps_grid: &[f64]) -> Result<()> {
    if eps_grid.is_empty() {
        return Err(Error::DomainError("empty tolerance grid".into()));
    }
    for (i, e) in eps_grid.iter().enumerate() {
        if !e.is_finite() || !(0.0..=1.0).contains(e) {
            return Err(Error::DomainError(format!(
                "tolerance grid entry {i} is {e}, expected a value in [0, 1]"
            )));
        }
        if i > 0 && *e <= eps_grid[i - 1] {
            return Err(Error::DomainError(format!(
                "tolerance grid must be strictly increasing, entry {i} ({e}) does not exceed {}",
                eps_grid[i - 1]
            )));
        }
    }
    Ok(())
}

/// Sample the closed-form staircase over a tolerance grid.
///
/// # Errors
/// [`Error::DomainError`] for invalid p / wire_dim, or a grid that is
/// empty, out of [0, 1], or not strictly increasing.
pub fn capacity_curve(
    p: f64,
    wire_dim: usize,
    direction: Direction,
    eps_grid: &[f64],
) -> Result<CapacityCurve> {
    check_eps_grid(eps_grid)?;
    let points = eps_grid
        .iter()
        .map(|&eps| {
            let q = CapacityQuery::new(p, eps, wire_dim)?;
            Ok((eps, q_ent_closed_form(&q)))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(CapacityCurve { direction, points })
}

/// The sender and receiver party specs of a two-party process for one
/// transmission direction, as (sender, receiver).
pub(crate) fn endpoints(
    w: &ProcessMatrix,
    direction: Direction,
) -> Result<(&PartySpec, &PartySpec)> {
    let parties = w.parties();
    if parties.len() != 2 {
        return Err(Error::PartyError(format!(
            "the transmission probe needs a two-party process, got {} parties",
            parties.len()
        )));
    }
    Ok(match direction {
        Direction::Forward => (&parties[0], &parties[1]),
        Direction::Backward => (&parties[1], &parties[0]),
    })
}

/// Pick a probe wire name not colliding with the process registry.
fn fresh_label_name(w: &ProcessMatrix, base: &str) -> String {
    let mut name = base.to_string();
    while w.w().registry().iter().any(|l| l.name == name) {
        name.push('_');
    }
    name
}

/// Transmission fidelity of the canonical probe at code size m, computed
/// entirely through the Born rule.
///
/// The process is extended with a maximally entangled pair Φ_m whose
/// halves join the sender's and receiver's inputs; the sender's
/// instrument discards its ordinary input and embeds the probe half into
/// its output wire, and the receiver's two-outcome instrument corrals
/// its input into the m-dimensional code subspace and projects onto Φ_m
/// (accept) or does anything else (reject).  The returned value is the
/// accept probability.
///
/// For processes of the mixture family the result equals
/// p + (1 − p)/m² to within numerical precision, independent of the
/// branch states.
///
/// # Errors
/// - [`Error::PartyError`] if the process does not have exactly two
///   parties;
/// - [`Error::DomainError`] if m = 0;
/// - [`Error::DimError`] if m exceeds the sender output or receiver
///   input dimension.
pub fn fidelity_oracle(w: &ProcessMatrix, direction: Direction, m: usize) -> Result<f64> {
    if m == 0 {
        return Err(Error::DomainError("code size m must be at least 1".into()));
    }
    let (sender, receiver) = endpoints(w, direction)?;
    let d_send_out = sender.output_dim();
    let d_recv_in = receiver.input_dim();
    if m > d_send_out || m > d_recv_in {
        return Err(Error::DimError(format!(
            "code size {m} exceeds the serving wire: sender output dim {d_send_out}, \
             receiver input dim {d_recv_in}"
        )));
    }
    let d_send_in = sender.input_dim();

    let probe_send = label(&fresh_label_name(w, "probe_snd"), m);
    let probe_recv = label(&fresh_label_name(w, "probe_rcv"), m);
    let pair = LabeledVector::max_entangled(probe_send.clone(), probe_recv.clone())?;

    // Extended party specs: each lab gains its probe half as an extra
    // (least significant) input wire.
    let mut send_inputs = sender.inputs.clone();
    send_inputs.push(probe_send);
    let sender_ext = PartySpec::new(sender.name.as_str(), send_inputs, sender.outputs.clone())?;
    let mut recv_inputs = receiver.inputs.clone();
    recv_inputs.push(probe_recv);
    let receiver_ext = PartySpec::new(receiver.name.as_str(), recv_inputs, receiver.outputs.clone())?;

    let extended = tensor(w.w(), &pair.outer())?;
    let parties_ext = match direction {
        Direction::Forward => vec![sender_ext.clone(), receiver_ext.clone()],
        Direction::Backward => vec![receiver_ext.clone(), sender_ext.clone()],
    };
    let w_ext = ProcessMatrix::from_parts(parties_ext, extended)?;

    // Sender: discard the ordinary input (collapse in the computational
    // basis, outcome forgotten) and embed the probe half isometrically
    // into the first m basis states of the output wire.  One Kraus
    // operator per collapsed basis state; the extended input flattens as
    // (ordinary input)·m + probe index.
    let mut send_kraus = Vec::with_capacity(d_send_in);
    for k in 0..d_send_in {
        let mut op = DMatrix::<C64>::zeros(d_send_out, d_send_in * m);
        for r in 0..m {
            op[(r, k * m + r)] = c64(1.0, 0.0);
        }
        send_kraus.push(op);
    }
    let send_element = choi_of_kraus(&sender_ext, &send_kraus)?;
    let send_instrument = ChoiInstrument::new(sender_ext, vec![send_element])?;

    // Receiver accept: corral the input into the code subspace, project
    // (code, probe half) onto Φ_m, release a fixed |0⟩ on the outputs.
    // The corral passes code states through and collapses each non-code
    // state onto the first code state; combined with the projection this
    // leaves one Kraus operator for the pass-through and one per
    // non-code basis state.
    let d_recv_out = receiver_ext.output_dim();
    let amp = c64(1.0 / (m as f64).sqrt(), 0.0);
    let mut accept_kraus = Vec::with_capacity(1 + d_recv_in - m);
    let mut pass = DMatrix::<C64>::zeros(d_recv_out, d_recv_in * m);
    for code in 0..m {
        pass[(0, code * m + code)] = amp;
    }
    accept_kraus.push(pass);
    for outside in m..d_recv_in {
        let mut op = DMatrix::<C64>::zeros(d_recv_out, d_recv_in * m);
        op[(0, outside * m)] = amp;
        accept_kraus.push(op);
    }
    let accept = choi_of_kraus(&receiver_ext, &accept_kraus)?;

    // Reject: the complement inside the discard-and-replace-|0⟩ channel,
    // whose Choi dominates the accept element.
    let mut discard_kraus = Vec::with_capacity(d_recv_in * m);
    for u in 0..d_recv_in * m {
        let mut op = DMatrix::<C64>::zeros(d_recv_out, d_recv_in * m);
        op[(0, u)] = c64(1.0, 0.0);
        discard_kraus.push(op);
    }
    let discard = choi_of_kraus(&receiver_ext, &discard_kraus)?;
    let reject = discard.add(&accept.scale(c64(-1.0, 0.0)))?;
    let recv_instrument = ChoiInstrument::new(receiver_ext, vec![accept, reject])?;

    let f = born_probability(&w_ext, &[&send_instrument, &recv_instrument], &[0, 0])?;
    Ok(f.clamp(0.0, 1.0))
}

/// Probe fidelities F(1), F(2), …, F(m_max) for one direction, where
/// m_max = min(sender output dim, receiver input dim).
///
/// # Errors
/// As for [`fidelity_oracle`].
pub fn oracle_fidelities(w: &ProcessMatrix, direction: Direction) -> Result<Vec<f64>> {
    let (sender, receiver) = endpoints(w, direction)?;
    let m_max = sender.output_dim().min(receiver.input_dim());
    (1..=m_max).map(|m| fidelity_oracle(w, direction, m)).collect()
}

/// Capacity in bits from a fidelity list: log₂ of the largest m (1-based
/// index into `fidelities`) with F(m) ≥ 1 − ε − [`tol::BOUNDARY_SLACK`].
/// Returns 0 for an empty list.
pub fn staircase_from_fidelities(fidelities: &[f64], eps: f64) -> f64 {
    let mut best = 1usize;
    for (i, f) in fidelities.iter().enumerate() {
        if *f >= 1.0 - eps - tol::BOUNDARY_SLACK {
            best = i + 1;
        }
    }
    (best as f64).log2()
}

/// Oracle capacity at one tolerance: the staircase over Born-rule
/// fidelities.  Independent of [`q_ent_closed_form`]; for mixture-family
/// processes the two agree on every query.
///
/// # Errors
/// [`Error::DomainError`] for ε outside [0, 1]; otherwise as for
/// [`fidelity_oracle`].
pub fn oracle_staircase(w: &ProcessMatrix, direction: Direction, eps: f64) -> Result<f64> {
    if !eps.is_finite() || !(0.0..=1.0).contains(&eps) {
        return Err(Error::DomainError(format!(
            "tolerance must lie in [0, 1], got {eps}"
        )));
    }
    let fids = oracle_fidelities(w, direction)?;
    Ok(staircase_from_fidelities(&fids, eps))
}

/// Sample the oracle staircase over a tolerance grid.  The Born-rule
/// fidelities are computed once; each grid point reuses them.
///
/// # Errors
/// As for [`oracle_fidelities`] and [`check_eps_grid`] failures
/// ([`Error::DomainError`]).
pub fn oracle_capacity_curve(
    w: &ProcessMatrix,
    direction: Direction,
    eps_grid: &[f64],
) -> Result<CapacityCurve> {
    check_eps_grid(eps_grid)?;
    let fids = oracle_fidelities(w, direction)?;
    let points = eps_grid
        .iter()
        .map(|&e| (e, staircase_from_fidelities(&fids, e)))
        .collect();
    Ok(CapacityCurve { direction, points })
}

/// Invert a probe fidelity back to the serving branch weight:
/// p = (m²·F − 1)/(m² − 1).
///
/// # Errors
/// [`Error::DomainError`] if m < 2 (the m = 1 fidelity is identically 1
/// and carries no information) or F is not finite.
pub fn branch_probability_from_fidelity(fidelity: f64, m: usize) -> Result<f64> {
    if m < 2 {
        return Err(Error::DomainError(
            "branch-weight inversion needs a code size of at least 2".into(),
        ));
    }
    if !fidelity.is_finite() {
        return Err(Error::DomainError(format!("fidelity must be finite, got {fidelity}")));
    }
    let m2 = (m * m) as f64;
    Ok((m2 * fidelity - 1.0) / (m2 - 1.0))
}

/// Result of inverting a forward/backward capacity-curve pair.
#[derive(Debug, Clone, PartialEq)]
pub struct InversionEstimate {
    /// Estimated branch weights (forward wire, backward wire,
    /// disconnected), non-negative and summing to 1.
    pub p: [f64; 3],
    /// Amplitude moduli |αᵢ| = √pᵢ of the underlying superposition.
    pub alpha_abs: [f64; 3],
    /// Wire dimensions (sender-side of forward, sender-side of
    /// backward), when the saturation plateaus pin them down: the next
    /// staircase step would have landed inside the sampled grid, so its
    /// absence is attributable to the wire.  `None` when either plateau
    /// is unconfirmed or the disconnected branch dominates (a fully
    /// disconnected process reveals nothing about wire sizes).
    pub dims: Option<(usize, usize)>,
}

struct CurveRead {
    eps: Vec<f64>,
    levels: Vec<usize>,
    max_gap: f64,
}

fn read_curve(curve: &CapacityCurve, want: Direction) -> Result<CurveRead> {
    if curve.direction != want {
        return Err(Error::InversionError(format!(
            "expected a {want} curve, got {}",
            curve.direction
        )));
    }
    if curve.points.len() < 2 {
        return Err(Error::InversionError(format!(
            "need at least two grid points to bracket staircase steps, got {}",
            curve.points.len()
        )));
    }
    let mut eps = Vec::with_capacity(curve.points.len());
    let mut levels = Vec::with_capacity(curve.points.len());
    let mut max_gap = 0.0f64;
    for (i, &(e, bits)) in curve.points.iter().enumerate() {
        if !e.is_finite() || !(0.0..=1.0).contains(&e) {
            return Err(Error::InversionError(format!(
                "tolerance sample {i} is {e}, outside [0, 1]"
            )));
        }
        if i > 0 {
            if e <= eps[i - 1] {
                return Err(Error::InversionError(format!(
                    "tolerance samples must be strictly increasing, sample {i} ({e}) \
                     does not exceed {}",
                    eps[i - 1]
                )));
            }
            max_gap = max_gap.max(e - eps[i - 1]);
        }
        if !bits.is_finite() || bits < -1e-9 {
            return Err(Error::InversionError(format!(
                "capacity sample {i} is {bits} bits, expected a non-negative value"
            )));
        }
        let m = 2f64.powf(bits).round();
        if (2f64.powf(bits) - m).abs() > 1e-6 || m < 1.0 {
            return Err(Error::InversionError(format!(
                "capacity sample {i} ({bits} bits) is not the logarithm of an integer code size"
            )));
        }
        let m = m as usize;
        if let Some(&prev) = levels.last() {
            if m < prev {
                return Err(Error::InversionError(format!(
                    "capacity must be non-decreasing in the tolerance, sample {i} drops \
                     from code size {prev} to {m}"
                )));
            }
        }
        eps.push(e);
        levels.push(m);
    }
    Ok(CurveRead { eps, levels, max_gap })
}

struct DirectionEstimate {
    p: f64,
    plateau: usize,
    plateau_confirmed: bool,
}

fn estimate_direction(r: &CurveRead) -> DirectionEstimate {
    // Locate the first staircase step and take the bracket midpoint as
    // the step position ε*; the step to code size m sits at
    // ε* = (1 − 1/m²)(1 − p), so p = 1 − ε*·m²/(m² − 1).
    let p = if r.levels[0] > 1 {
        // The curve is already positive at its first sample.
        if r.eps[0] <= 1e-12 {
            1.0
        } else {
            let m2 = (r.levels[0] * r.levels[0]) as f64;
            1.0 - (r.eps[0] / 2.0) * m2 / (m2 - 1.0)
        }
    } else if let Some(k) = (1..r.levels.len()).find(|&k| r.levels[k] > r.levels[k - 1]) {
        let m2 = (r.levels[k] * r.levels[k]) as f64;
        let eps_hat = r.eps[k] - (r.eps[k] - r.eps[k - 1]) / 2.0;
        1.0 - eps_hat * m2 / (m2 - 1.0)
    } else {
        // Flat at zero across the whole grid.
        0.0
    };
    let p = p.clamp(0.0, 1.0);
    let plateau = *r.levels.iter().max().expect("non-empty curve");
    let next = (plateau + 1) as f64;
    let next_threshold = (1.0 - 1.0 / (next * next)) * (1.0 - p);
    let plateau_confirmed =
        next_threshold <= r.eps.last().expect("non-empty curve") + tol::BOUNDARY_SLACK;
    DirectionEstimate { p, plateau, plateau_confirmed }
}

/// Recover branch weights and (when possible) wire dimensions from a
/// forward/backward pair of capacity staircases.
///
/// Each step location pins the weight of the corresponding wire branch;
/// the disconnected weight is the remainder.  Step positions are read as
/// bracket midpoints, so the per-weight error is at most half the local
/// grid spacing times m²/(m² − 1) ≤ 4/3.  Dimensions are reported only
/// when both saturation plateaus are confirmed in-grid and the
/// disconnected branch does not dominate.
///
/// # Errors
/// [`Error::InversionError`] if a curve has the wrong direction tag,
/// fewer than two points, a non-monotone or non-staircase shape, or the
/// two recovered wire weights exceed total probability beyond the grid
/// resolution.
pub fn invert_capacity_curves(
    forward: &CapacityCurve,
    backward: &CapacityCurve,
) -> Result<InversionEstimate> {
    let fwd = read_curve(forward, Direction::Forward)?;
    let bwd = read_curve(backward, Direction::Backward)?;
    let est_f = estimate_direction(&fwd);
    let est_b = estimate_direction(&bwd);
    let resolution = fwd.max_gap.max(bwd.max_gap);
    let slack = 4.0 * resolution + 1e-6;
    let overflow = est_f.p + est_b.p - 1.0;
    if overflow > slack {
        return Err(Error::InversionError(format!(
            "recovered wire weights {:.6} + {:.6} exceed total probability by {:.3e}, \
             beyond the grid resolution",
            est_f.p, est_b.p, overflow
        )));
    }
    let p3 = (1.0 - est_f.p - est_b.p).max(0.0);
    let total = est_f.p + est_b.p + p3;
    let p = [est_f.p / total, est_b.p / total, p3 / total];
    let alpha_abs = [p[0].sqrt(), p[1].sqrt(), p[2].sqrt()];
    let dims = if p[2] >= 1.0 - slack {
        None
    } else if est_f.plateau_confirmed && est_b.plateau_confirmed {
        Some((est_f.plateau, est_b.plateau))
    } else {
        None
    };
    Ok(InversionEstimate { p, alpha_abs, dims })
}

/// Which side of a party's lab a local operation attaches to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WireSite {
    /// Pre-processing: the channel acts on the party's input wire before
    /// the party's instrument.
    Input,
    /// Post-processing: the channel acts on the party's output wire
    /// after the party's instrument.
    Output,
}

/// A party-local channel, to be absorbed into the process matrix.
#[derive(Debug, Clone)]
pub struct LocalOperation {
    /// Name of the party whose lab applies the channel.
    pub party: String,
    /// Input-side (pre-processing) or output-side (post-processing).
    pub site: WireSite,
    /// Kraus operators of a trace-preserving channel on the wire.
    pub kraus: Vec<DMatrix<C64>>,
}

/// Absorb a party-local channel into the process matrix.
///
/// Pre-processing on an input wire acts on the process directly (the
/// wire carries the state delivered to the party); post-processing on an
/// output wire enters through the transposed Kraus operators, because
/// the Born pairing contracts output wires against the instrument's
/// vectorized side.  Both cases send valid processes to valid processes;
/// the composition rule
/// Born(apply_local_operation(W, N), M) = Born(W, N ∘ M) is checked in
/// this module's tests.
///
/// # Errors
/// - [`Error::PartyError`] if the party is unknown or does not have
///   exactly one wire at the chosen site;
/// - [`Error::DimError`] / [`Error::ConstraintViolation`] for Kraus
///   operators that do not match the wire or are empty;
/// - [`Error::InvalidOperator`] if the Kraus set is not trace-preserving.
pub fn apply_local_operation(w: &ProcessMatrix, op: &LocalOperation) -> Result<ProcessMatrix> {
    let party = w.party(&op.party)?;
    let wires = match op.site {
        WireSite::Input => &party.inputs,
        WireSite::Output => &party.outputs,
    };
    if wires.len() != 1 {
        return Err(Error::PartyError(format!(
            "local operation needs exactly one {} wire on party {:?}, found {}",
            match op.site {
                WireSite::Input => "input",
                WireSite::Output => "output",
            },
            op.party,
            wires.len()
        )));
    }
    let wire = &wires[0];
    let d = wire.dim;
    if op.kraus.is_empty() {
        return Err(Error::ConstraintViolation(format!(
            "local operation on party {:?} has no Kraus operators",
            op.party
        )));
    }
    let mut completeness = DMatrix::<C64>::zeros(d, d);
    for k in &op.kraus {
        if k.nrows() != d || k.ncols() != d {
            return Err(Error::DimError(format!(
                "Kraus operator is {}x{} but wire {:?} has dimension {d}",
                k.nrows(),
                k.ncols(),
                wire.name
            )));
        }
        completeness += k.adjoint() * k;
    }
    let eye = DMatrix::<C64>::identity(d, d);
    let residue = (&completeness - &eye).iter().map(|z| z.norm()).fold(0.0, f64::max);
    if residue > tol::TP_TOL {
        return Err(Error::InvalidOperator(format!(
            "local operation on party {:?} is not trace-preserving (residue {residue:.3e})",
            op.party
        )));
    }
    let effective: Vec<DMatrix<C64>> = match op.site {
        WireSite::Input => op.kraus.clone(),
        WireSite::Output => op.kraus.iter().map(|k| k.transpose()).collect(),
    };
    let transformed = apply_kraus_to_wire(w.w(), &wire.name, &effective)?;
    ProcessMatrix::from_parts(w.parties().to_vec(), transformed)
}

/// Outcome of the capacity-measure axiom checks on one process.
#[derive(Debug, Clone)]
pub struct AxiomReport {
    /// Local-operation pairs exercised.
    pub pairs_checked: usize,
    /// Tolerances sampled per direction.
    pub eps_checked: Vec<f64>,
    /// Descriptions of capacity increases under local operations.
    pub monotonicity_violations: Vec<String>,
    /// Descriptions of negative capacities.
    pub negativity_violations: Vec<String>,
    /// Descriptions of positive capacities on non-signalling directions.
    pub signalling_violations: Vec<String>,
    /// The normalization bound log₂(largest code size), in bits.
    pub normalization_bound: f64,
    /// Whether every computed capacity respected the bound.
    pub bound_respected: bool,
}

impl AxiomReport {
    /// True when every axiom held on every sample.
    pub fn all_passed(&self) -> bool {
        self.monotonicity_violations.is_empty()
            && self.negativity_violations.is_empty()
            && self.signalling_violations.is_empty()
            && self.bound_respected
    }
}

/// Capacity measures per direction at the sampled tolerances, from the
/// Born-rule oracle staircase.
fn measures_by_direction(w: &ProcessMatrix, eps_samples: &[f64]) -> Result<[Vec<f64>; 2]> {
    let mut out = [Vec::new(), Vec::new()];
    for (slot, dir) in [Direction::Forward, Direction::Backward].into_iter().enumerate() {
        let fids = oracle_fidelities(w, dir)?;
        out[slot] = eps_samples
            .iter()
            .map(|&e| staircase_from_fidelities(&fids, e))
            .collect();
    }
    Ok(out)
}

/// Check the causality-measure axioms on a two-party process against
/// sampled local operations and tolerances.
///
/// For every sampled tolerance and direction the oracle-staircase
/// capacity must be non-negative (axiom 2), positive only if the process
/// signals in that direction (axiom 3), bounded by log₂ of the largest
/// admissible code size (normalization), and must not increase when any
/// of the supplied local-operation pairs is absorbed into the process
/// (axiom 1).  Axioms 2, 3 and the bound are re-checked on every
/// transformed process.
///
/// # Errors
/// - [`Error::DomainError`] if a tolerance sample lies outside
///   [0, [`tol::MEASURE_EPS_MAX`]] (beyond 3/4 the probe accepts fresh
///   entanglement alone and axiom 3 is unsound);
/// - errors from [`apply_local_operation`] and [`fidelity_oracle`] are
///   passed through.
pub fn axiom_suite(
    w: &ProcessMatrix,
    op_pairs: &[(LocalOperation, LocalOperation)],
    eps_samples: &[f64],
) -> Result<AxiomReport> {
    if eps_samples.is_empty() {
        return Err(Error::DomainError("no tolerance samples supplied".into()));
    }
    for e in eps_samples {
        if !e.is_finite() || !(0.0..=tol::MEASURE_EPS_MAX).contains(e) {
            return Err(Error::DomainError(format!(
                "axiom checks need tolerances in [0, {}], got {e}: beyond 3/4 the probe \
                 accepts locally prepared entanglement and the signalling axiom fails",
                tol::MEASURE_EPS_MAX
            )));
        }
    }
    let (fwd_sender, fwd_receiver) = endpoints(w, Direction::Forward)?;
    let bound_fwd = fwd_sender.output_dim().min(fwd_receiver.input_dim());
    let bound_bwd = fwd_receiver.output_dim().min(fwd_sender.input_dim());
    let normalization_bound = ((bound_fwd.max(bound_bwd)) as f64).log2();
    let names = [fwd_sender.name.clone(), fwd_receiver.name.clone()];

    let mut report = AxiomReport {
        pairs_checked: op_pairs.len(),
        eps_checked: eps_samples.to_vec(),
        monotonicity_violations: Vec::new(),
        negativity_violations: Vec::new(),
        signalling_violations: Vec::new(),
        normalization_bound,
        bound_respected: true,
    };

    let audit = |tag: &str,
                 model: &ProcessMatrix,
                 report: &mut AxiomReport|
     -> Result<[Vec<f64>; 2]> {
        let measures = measures_by_direction(model, eps_samples)?;
        for (slot, dir) in [Direction::Forward, Direction::Backward].into_iter().enumerate() {
            let (from, to) = match dir {
                Direction::Forward => (&names[0], &names[1]),
                Direction::Backward => (&names[1], &names[0]),
            };
            let positive = measures[slot].iter().any(|&q| q > 1e-12);
            if positive && !can_signal(model, from, to, tol::SIGNAL_TOL)? {
                report.signalling_violations.push(format!(
                    "{tag}: positive {dir} capacity although {from} cannot signal to {to}"
                ));
            }
            for (&eps, &q) in eps_samples.iter().zip(&measures[slot]) {
                if q < -1e-12 {
                    report
                        .negativity_violations
                        .push(format!("{tag}: {dir} capacity {q} < 0 at eps={eps}"));
                }
                if q > normalization_bound + 1e-9 {
                    report.bound_respected = false;
                }
            }
        }
        Ok(measures)
    };

    let base = audit("base process", w, &mut report)?;

    for (idx, (first, second)) in op_pairs.iter().enumerate() {
        let once = apply_local_operation(w, first)?;
        let transformed = apply_local_operation(&once, second)?;
        let after = audit(&format!("pair {idx}"), &transformed, &mut report)?;
        for (slot, dir) in [Direction::Forward, Direction::Backward].into_iter().enumerate() {
            for ((&eps, &before), &after_q) in
                eps_samples.iter().zip(&base[slot]).zip(&after[slot])
            {
                if after_q > before + 1e-9 {
                    report.monotonicity_violations.push(format!(
                        "pair {idx}: {dir} capacity rose from {before} to {after_q} at eps={eps}"
                    ));
                }
            }
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::clean_models::{AmplitudeVector3, HarmonicCleanModel};
    use crate::process_core::choi_of_kraus;
    use crate::tensor_core::c64;

    fn harmonic(p: [f64; 3], d: usize) -> ProcessMatrix {
        let alpha = AmplitudeVector3::from_probabilities(p).expect("weights");
        let model = HarmonicCleanModel::new(alpha, d, None).expect("model");
        crate::clean_models::build_harmonic_reduced(&model).expect("reduced process")
    }

    #[test]
    fn closed_form_matches_worked_examples() {
        let q = CapacityQuery::new(0.99, 0.02, 4).unwrap();
        assert_eq!(q_ent_closed_form(&q), 2.0);
        let q = CapacityQuery::new(0.5, 0.0, 4).unwrap();
        assert_eq!(q_ent_closed_form(&q), 0.0);
        let q = CapacityQuery::new(0.5, 0.4, 4).unwrap();
        assert_eq!(q_ent_closed_form(&q), 1.0);
        // Saturation branch: p ≥ 1 − ε fills the whole wire.
        let q = CapacityQuery::new(0.97, 0.05, 8).unwrap();
        assert_eq!(q_ent_closed_form(&q), 3.0);
    }

    #[test]
    fn closed_form_is_monotone_in_every_argument() {
        let grid: Vec<f64> = (0..=20).map(|k| k as f64 / 20.0).collect();
        for d in 1..=4usize {
            for &p in &grid {
                for &eps in &grid {
                    let q0 = q_ent_closed_form(&CapacityQuery::new(p, eps, d).unwrap());
                    if p < 1.0 {
                        let qp =
                            q_ent_closed_form(&CapacityQuery::new(p + 0.05, eps, d).unwrap());
                        assert!(qp >= q0, "not monotone in p at p={p}, eps={eps}, d={d}");
                    }
                    if eps < 1.0 {
                        let qe =
                            q_ent_closed_form(&CapacityQuery::new(p, eps + 0.05, d).unwrap());
                        assert!(qe >= q0, "not monotone in eps at p={p}, eps={eps}, d={d}");
                    }
                    let qd = q_ent_closed_form(&CapacityQuery::new(p, eps, d + 1).unwrap());
                    assert!(qd >= q0, "not monotone in wire_dim at p={p}, eps={eps}, d={d}");
                }
            }
        }
    }

    #[test]
    fn saturation_happens_exactly_at_the_wire_bound() {
        // Q = log₂ d iff ε/(1−p) ≥ 1 − 1/d², for p < 1.
        for d in 2..=4usize {
            for k in 0..=20 {
                let p = k as f64 / 21.0;
                for j in 0..=20 {
                    let eps = j as f64 / 20.0;
                    let q = q_ent_closed_form(&CapacityQuery::new(p, eps, d).unwrap());
                    let saturated = q == (d as f64).log2();
                    let bound = 1.0 - 1.0 / ((d * d) as f64);
                    let expect = eps / (1.0 - p) >= bound - 1e-12;
                    assert_eq!(saturated, expect, "p={p} eps={eps} d={d}");
                }
            }
        }
    }

    #[test]
    fn zero_threshold_values_and_domain() {
        assert!((q_ent_zero_threshold(0.3).unwrap() - 0.6).abs() < 1e-15);
        assert!((q_ent_zero_threshold(0.0).unwrap() - 1.0).abs() < 1e-15);
        assert!((q_ent_zero_threshold(0.75).unwrap()).abs() < 1e-15);
        assert!(matches!(q_ent_zero_threshold(-0.01), Err(Error::DomainError(_))));
        assert!(matches!(q_ent_zero_threshold(0.76), Err(Error::DomainError(_))));
    }

    #[test]
    fn capacity_vanishes_exactly_below_the_threshold() {
        for d in 2..=4usize {
            for k in 0..=40 {
                let p = k as f64 / 40.0;
                for j in 0..=28 {
                    let eps = j as f64 * 0.025;
                    let thr = q_ent_zero_threshold(eps).unwrap();
                    let q = q_ent_closed_form(&CapacityQuery::new(p, eps, d).unwrap());
                    if (p - thr).abs() <= 1e-9 {
                        // Exact staircase boundaries belong to the
                        // accepting side by construction.
                        assert!(q > 0.0, "boundary p={p} eps={eps} d={d}");
                    } else {
                        assert_eq!(q == 0.0, p < thr, "p={p} eps={eps} d={d}");
                    }
                }
            }
        }
    }

    #[test]
    fn oracle_reproduces_the_worked_fidelities() {
        let w = harmonic([1.0, 0.0, 0.0], 2);
        assert!((fidelity_oracle(&w, Direction::Forward, 2).unwrap() - 1.0).abs() < 1e-9);
        let w = harmonic([0.0, 0.0, 1.0], 2);
        assert!((fidelity_oracle(&w, Direction::Forward, 2).unwrap() - 0.25).abs() < 1e-9);
        let w = harmonic([0.5, 0.0, 0.5], 2);
        assert!((fidelity_oracle(&w, Direction::Forward, 2).unwrap() - 0.625).abs() < 1e-9);
    }

    #[test]
    fn oracle_matches_the_mixture_formula_on_a_grid() {
        for d in [2usize, 3] {
            for p1 in [0.0, 0.3, 1.0] {
                for p2 in [0.0, 0.4] {
                    if p1 + p2 > 1.0 {
                        continue;
                    }
                    let w = harmonic([p1, p2, 1.0 - p1 - p2], d);
                    for m in 1..=d {
                        let f = fidelity_oracle(&w, Direction::Forward, m).unwrap();
                        let expect = p1 + (1.0 - p1) / ((m * m) as f64);
                        assert!(
                            (f - expect).abs() < 1e-9,
                            "forward d={d} p1={p1} m={m}: {f} vs {expect}"
                        );
                        let fb = fidelity_oracle(&w, Direction::Backward, m).unwrap();
                        let expect_b = p2 + (1.0 - p2) / ((m * m) as f64);
                        assert!(
                            (fb - expect_b).abs() < 1e-9,
                            "backward d={d} p2={p2} m={m}: {fb} vs {expect_b}"
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn oracle_is_independent_of_the_branch_states() {
        // Same amplitudes, structureless default state versus an
        // entangled three-slot state: identical probe fidelities.
        let alpha = AmplitudeVector3::from_probabilities([0.6, 0.1, 0.3]).unwrap();
        let plain = HarmonicCleanModel::new(alpha.clone(), 2, None).unwrap();
        let mut entries = nalgebra::DVector::zeros(8);
        entries[0] = c64(0.5, 0.0);
        entries[3] = c64(0.5, 0.0); // |011⟩ component (x=0, y=1, e3=1)
        entries[5] = c64(0.5, 0.0); // |101⟩
        entries[6] = c64(0.5, 0.0); // |110⟩
        let psi = crate::tensor_core::LabeledVector::new(
            vec![label("x", 2), label("y", 2), label("e3", 2)],
            entries,
        )
        .unwrap();
        let rich = HarmonicCleanModel::new(alpha, 2, Some(psi)).unwrap();
        let w_plain = crate::clean_models::build_harmonic_reduced(&plain).unwrap();
        let w_rich = crate::clean_models::build_harmonic_reduced(&rich).unwrap();
        for dir in [Direction::Forward, Direction::Backward] {
            for m in 1..=2 {
                let a = fidelity_oracle(&w_plain, dir, m).unwrap();
                let b = fidelity_oracle(&w_rich, dir, m).unwrap();
                assert!((a - b).abs() < 1e-9, "{dir} m={m}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn oracle_staircase_agrees_with_the_closed_form() {
        for p1 in [0.0, 0.5, 1.0] {
            let w = harmonic([p1, 0.0, 1.0 - p1], 2);
            for eps in [0.0, 0.3, 0.6, 0.74] {
                let via_oracle = oracle_staircase(&w, Direction::Forward, eps).unwrap();
                let closed =
                    q_ent_closed_form(&CapacityQuery::new(p1, eps, 2).unwrap());
                assert_eq!(via_oracle, closed, "p1={p1} eps={eps}");
            }
        }
    }

    #[test]
    fn oracle_rejects_bad_queries() {
        let w = harmonic([0.5, 0.2, 0.3], 2);
        assert!(matches!(
            fidelity_oracle(&w, Direction::Forward, 3),
            Err(Error::DimError(_))
        ));
        assert!(matches!(
            fidelity_oracle(&w, Direction::Forward, 0),
            Err(Error::DomainError(_))
        ));
        let alpha = AmplitudeVector3::from_probabilities([0.5, 0.2, 0.3]).unwrap();
        let model = HarmonicCleanModel::new(alpha, 2, None).unwrap();
        let purified = crate::clean_models::build_harmonic_purified(&model).unwrap();
        assert!(matches!(
            fidelity_oracle(&purified, Direction::Forward, 2),
            Err(Error::PartyError(_))
        ));
    }

    #[test]
    fn directions_are_independent() {
        let w = harmonic([0.0, 1.0, 0.0], 2);
        assert!((fidelity_oracle(&w, Direction::Backward, 2).unwrap() - 1.0).abs() < 1e-9);
        assert!((fidelity_oracle(&w, Direction::Forward, 2).unwrap() - 0.25).abs() < 1e-9);
    }

    #[test]
    fn curve_generation_validates_the_grid() {
        assert!(matches!(
            capacity_curve(0.5, 2, Direction::Forward, &[]),
            Err(Error::DomainError(_))
        ));
        assert!(matches!(
            capacity_curve(0.5, 2, Direction::Forward, &[0.2, 0.1]),
            Err(Error::DomainError(_))
        ));
        assert!(matches!(
            capacity_curve(0.5, 2, Direction::Forward, &[0.2, 1.2]),
            Err(Error::DomainError(_))
        ));
        let c = capacity_curve(0.5, 4, Direction::Forward, &[0.0, 0.4, 0.8]).unwrap();
        assert_eq!(c.points.len(), 3);
        assert_eq!(c.points[1], (0.4, 1.0));
    }

    fn grid(step: f64) -> Vec<f64> {
        let n = (1.0 / step).round() as usize;
        (0..=n).map(|k| k as f64 * step).collect()
    }

    #[test]
    fn inversion_round_trips_a_generic_amplitude_vector() {
        let p = [0.3, 0.5, 0.2];
        let eps = grid(1e-3);
        let fwd = capacity_curve(p[0], 3, Direction::Forward, &eps).unwrap();
        let bwd = capacity_curve(p[1], 3, Direction::Backward, &eps).unwrap();
        let est = invert_capacity_curves(&fwd, &bwd).unwrap();
        for i in 0..3 {
            assert!(
                (est.p[i] - p[i]).abs() <= 2e-3,
                "p[{i}]: {} vs {}",
                est.p[i],
                p[i]
            );
            assert!((est.alpha_abs[i] - p[i].sqrt()).abs() <= 2e-3);
        }
        assert_eq!(est.dims, Some((3, 3)));
    }

    #[test]
    fn inversion_handles_the_disconnected_and_saturated_extremes() {
        // Fully disconnected, sampled short of the fresh-entanglement
        // steps: flat-zero curves, weights (0, 0, 1), no dimension claim.
        let eps: Vec<f64> = (0..=74).map(|k| k as f64 * 0.01).collect();
        let fwd = capacity_curve(0.0, 2, Direction::Forward, &eps).unwrap();
        let bwd = capacity_curve(0.0, 2, Direction::Backward, &eps).unwrap();
        assert!(fwd.points.iter().all(|&(_, q)| q == 0.0));
        let est = invert_capacity_curves(&fwd, &bwd).unwrap();
        assert_eq!(est.p, [0.0, 0.0, 1.0]);
        assert_eq!(est.dims, None);

        // Same process on a full grid: the fresh-entanglement steps
        // appear, the weights stay ≈ (0, 0, 1), still no dimension claim.
        let eps = grid(1e-3);
        let fwd = capacity_curve(0.0, 2, Direction::Forward, &eps).unwrap();
        let bwd = capacity_curve(0.0, 2, Direction::Backward, &eps).unwrap();
        let est = invert_capacity_curves(&fwd, &bwd).unwrap();
        assert!(est.p[2] > 0.99);
        assert_eq!(est.dims, None);

        // Perfect forward wire: saturated from ε = 0.
        let fwd = capacity_curve(1.0, 2, Direction::Forward, &eps).unwrap();
        let bwd = capacity_curve(0.0, 2, Direction::Backward, &eps).unwrap();
        let est = invert_capacity_curves(&fwd, &bwd).unwrap();
        assert!((est.p[0] - 1.0).abs() <= 2e-3);
        assert_eq!(est.dims, Some((2, 2)));
    }

    #[test]
    fn inversion_rejects_malformed_curves() {
        let eps = [0.0, 0.2, 0.4, 0.6];
        let good = capacity_curve(0.5, 2, Direction::Forward, &eps).unwrap();
        let good_b = capacity_curve(0.3, 2, Direction::Backward, &eps).unwrap();

        // Wrong direction tag.
        assert!(matches!(
            invert_capacity_curves(&good_b.clone(), &good_b),
            Err(Error::InversionError(_))
        ));
        // Decreasing capacity.
        let mut bad = good.clone();
        bad.points[3].1 = 0.0;
        bad.points[1].1 = 1.0;
        assert!(matches!(
            invert_capacity_curves(&bad, &good_b),
            Err(Error::InversionError(_))
        ));
        // Not a log₂-integer level.
        let mut bad = good.clone();
        bad.points[3].1 = 0.7;
        assert!(matches!(
            invert_capacity_curves(&bad, &good_b),
            Err(Error::InversionError(_))
        ));
        // Too short.
        let short = CapacityCurve {
            direction: Direction::Forward,
            points: vec![(0.0, 0.0)],
        };
        assert!(matches!(
            invert_capacity_curves(&short, &good_b),
            Err(Error::InversionError(_))
        ));
        // Wire weights exceeding total probability.
        let eps = grid(1e-2);
        let fwd = capacity_curve(0.9, 2, Direction::Forward, &eps).unwrap();
        let bwd = capacity_curve(0.9, 2, Direction::Backward, &eps).unwrap();
        assert!(matches!(
            invert_capacity_curves(&fwd, &bwd),
            Err(Error::InversionError(_))
        ));
    }

    #[test]
    fn branch_probability_inverts_the_fidelity() {
        let w = harmonic([0.37, 0.21, 0.42], 2);
        let f = fidelity_oracle(&w, Direction::Forward, 2).unwrap();
        let p = branch_probability_from_fidelity(f, 2).unwrap();
        assert!((p - 0.37).abs() < 1e-9);
        assert!(matches!(
            branch_probability_from_fidelity(0.5, 1),
            Err(Error::DomainError(_))
        ));
    }

    /// Amplitude-damping Kraus pair with decay probability `gamma`.
    fn damping(gamma: f64) -> Vec<DMatrix<C64>> {
        let mut k0 = DMatrix::<C64>::zeros(2, 2);
        k0[(0, 0)] = c64(1.0, 0.0);
        k0[(1, 1)] = c64((1.0 - gamma).sqrt(), 0.0);
        let mut k1 = DMatrix::<C64>::zeros(2, 2);
        k1[(0, 1)] = c64(gamma.sqrt(), 0.0);
        vec![k0, k1]
    }

    #[test]
    fn output_site_operations_compose_like_post_processing() {
        // Born(apply(W, N on A's output), C ⊗ M) must equal
        // Born(W, (N ∘ C) ⊗ M) for a generic channel C in A's lab.
        let w = harmonic([0.6, 0.28, 0.12], 2);
        let n = damping(0.3);

        let theta: f64 = 0.7;
        let mut g0 = DMatrix::<C64>::zeros(2, 2);
        g0[(0, 0)] = c64(theta.cos(), 0.0);
        g0[(1, 1)] = c64(0.4, 0.3);
        let mut g1 = DMatrix::<C64>::zeros(2, 2);
        g1[(1, 0)] = c64(theta.sin(), 0.0);
        g1[(0, 1)] = c64(0.5, -0.2);
        let mut g2 = DMatrix::<C64>::zeros(2, 2);
        g2[(0, 1)] = c64(0.0, (1.0 - 0.16 - 0.09 - 0.25 - 0.04f64).sqrt());
        let c_kraus = vec![g0, g1, g2];

        let a_spec = w.party("A").unwrap().clone();
        let b_spec = w.party("B").unwrap().clone();
        let b_inst = ChoiInstrument::new(
            b_spec.clone(),
            vec![choi_of_kraus(&b_spec, &damping(0.85)).unwrap()],
        )
        .unwrap();

        // Left side: absorb N into the process at A's output.
        let op = LocalOperation {
            party: "A".into(),
            site: WireSite::Output,
            kraus: n.clone(),
        };
        let w_post = apply_local_operation(&w, &op).unwrap();
        let a_inst =
            ChoiInstrument::new(a_spec.clone(), vec![choi_of_kraus(&a_spec, &c_kraus).unwrap()])
                .unwrap();
        let lhs = born_probability(&w_post, &[&a_inst, &b_inst], &[0, 0]).unwrap();

        // Right side: compose N after C inside A's instrument.
        let composed: Vec<DMatrix<C64>> = n
            .iter()
            .flat_map(|kn| c_kraus.iter().map(move |kc| kn * kc))
            .collect();
        let a_comp =
            ChoiInstrument::new(a_spec.clone(), vec![choi_of_kraus(&a_spec, &composed).unwrap()])
                .unwrap();
        let rhs = born_probability(&w, &[&a_comp, &b_inst], &[0, 0]).unwrap();
        assert!((lhs - rhs).abs() < 1e-10, "{lhs} vs {rhs}");
    }

    #[test]
    fn input_site_operations_compose_like_pre_processing() {
        // Born(apply(W, N on A's input), C ⊗ M) must equal
        // Born(W, (C ∘ N) ⊗ M).
        let w = harmonic([0.6, 0.28, 0.12], 2);
        let n = damping(0.45);
        let mut u = DMatrix::<C64>::zeros(2, 2);
        u[(0, 1)] = c64(1.0, 0.0);
        u[(1, 0)] = c64(0.0, 1.0);
        let c_kraus = vec![u];

        let a_spec = w.party("A").unwrap().clone();
        let b_spec = w.party("B").unwrap().clone();
        let b_inst = ChoiInstrument::new(
            b_spec.clone(),
            vec![choi_of_kraus(&b_spec, &damping(0.2)).unwrap()],
        )
        .unwrap();

        let op = LocalOperation {
            party: "A".into(),
            site: WireSite::Input,
            kraus: n.clone(),
        };
        let w_pre = apply_local_operation(&w, &op).unwrap();
        let a_inst =
            ChoiInstrument::new(a_spec.clone(), vec![choi_of_kraus(&a_spec, &c_kraus).unwrap()])
                .unwrap();
        let lhs = born_probability(&w_pre, &[&a_inst, &b_inst], &[0, 0]).unwrap();

        let composed: Vec<DMatrix<C64>> = c_kraus
            .iter()
            .flat_map(|kc| n.iter().map(move |kn| kc * kn))
            .collect();
        let a_comp =
            ChoiInstrument::new(a_spec.clone(), vec![choi_of_kraus(&a_spec, &composed).unwrap()])
                .unwrap();
        let rhs = born_probability(&w, &[&a_comp, &b_inst], &[0, 0]).unwrap();
        assert!((lhs - rhs).abs() < 1e-10, "{lhs} vs {rhs}");
    }

    #[test]
    fn post_processing_degrades_the_probe_as_predicted() {
        // Damping the forward wire of a perfect-wire process drops the
        // m = 2 fidelity to the damping channel's entanglement fidelity
        // Σ_K |Tr K / 2|² = ((1 + √(1−γ))/2)².
        let w = harmonic([1.0, 0.0, 0.0], 2);
        let gamma: f64 = 0.36;
        let op = LocalOperation {
            party: "A".into(),
            site: WireSite::Output,
            kraus: damping(gamma),
        };
        let w_damped = apply_local_operation(&w, &op).unwrap();
        let f = fidelity_oracle(&w_damped, Direction::Forward, 2).unwrap();
        let expect = ((1.0 + (1.0 - gamma).sqrt()) / 2.0).powi(2);
        assert!((f - expect).abs() < 1e-9, "{f} vs {expect}");

        // The same channel on A's *input* wire only touches the branch
        // state, which the probe never reads.
        let w = harmonic([0.7, 0.1, 0.2], 2);
        let op = LocalOperation {
            party: "A".into(),
            site: WireSite::Input,
            kraus: damping(gamma),
        };
        let w_in = apply_local_operation(&w, &op).unwrap();
        let before = fidelity_oracle(&w, Direction::Forward, 2).unwrap();
        let after = fidelity_oracle(&w_in, Direction::Forward, 2).unwrap();
        assert!((before - after).abs() < 1e-10);
    }

    #[test]
    fn local_operations_are_validated() {
        let w = harmonic([0.5, 0.3, 0.2], 2);
        // Not trace preserving.
        let mut k = DMatrix::<C64>::zeros(2, 2);
        k[(0, 0)] = c64(0.5, 0.0);
        let op = LocalOperation {
            party: "A".into(),
            site: WireSite::Input,
            kraus: vec![k],
        };
        assert!(matches!(apply_local_operation(&w, &op), Err(Error::InvalidOperator(_))));
        // Wrong dimension.
        let op = LocalOperation {
            party: "A".into(),
            site: WireSite::Input,
            kraus: vec![DMatrix::<C64>::identity(3, 3)],
        };
        assert!(matches!(apply_local_operation(&w, &op), Err(Error::DimError(_))));
        // Unknown party.
        let op = LocalOperation {
            party: "C".into(),
            site: WireSite::Input,
            kraus: vec![DMatrix::<C64>::identity(2, 2)],
        };
        assert!(apply_local_operation(&w, &op).is_err());
    }

    #[test]
    fn axiom_suite_passes_on_mixture_processes() {
        let w = harmonic([0.6, 0.25, 0.15], 2);
        let pairs = vec![
            (
                LocalOperation {
                    party: "A".into(),
                    site: WireSite::Output,
                    kraus: damping(0.3),
                },
                LocalOperation {
                    party: "B".into(),
                    site: WireSite::Input,
                    kraus: damping(0.5),
                },
            ),
            (
                LocalOperation {
                    party: "A".into(),
                    site: WireSite::Input,
                    kraus: damping(0.8),
                },
                LocalOperation {
                    party: "B".into(),
                    site: WireSite::Output,
                    kraus: damping(0.1),
                },
            ),
        ];
        let report = axiom_suite(&w, &pairs, &[0.1, 0.3, 0.6]).unwrap();
        assert!(report.all_passed(), "{report:?}");
        assert_eq!(report.pairs_checked, 2);
        assert_eq!(report.normalization_bound, 1.0);

        assert!(matches!(
            axiom_suite(&w, &pairs, &[0.8]),
            Err(Error::DomainError(_))
        ));
    }

    #[test]
    fn query_validation_rejects_bad_ranges() {
        assert!(matches!(CapacityQuery::new(-0.1, 0.5, 2), Err(Error::DomainError(_))));
        assert!(matches!(CapacityQuery::new(0.5, 1.5, 2), Err(Error::DomainError(_))));
        assert!(matches!(CapacityQuery::new(0.5, 0.5, 0), Err(Error::DomainError(_))));
        assert!(matches!(
            CapacityQuery::new(f64::NAN, 0.5, 2),
            Err(Error::DomainError(_))
        ));
        assert!(matches!(Direction::parse("sideways"), Err(Error::DomainError(_))));
        assert_eq!(Direction::parse("forward").unwrap(), Direction::Forward);
    }
}

//! Massless/massive sector factorization and non-interacting sectored
//! models.
//!
//! Every wire of a sectored party splits into a *massless* and a
//! *massive* factor, named by the suffixes `_massless` / `_massive`.
//! A sectored clean model assigns a causal-branch amplitude to each
//! sector jointly: α°•ᵢⱼ weights massless relation i together with
//! massive relation j (1 = A→B, 2 = A←B, 3 = disconnected). Only seven
//! of the nine combinations are admissible — a massless A→B together
//! with a massive A←B (or vice versa) would let the slower sector run
//! against the light cone that the faster one establishes — so the
//! constraint α₁₂ = α₂₁ = 0 is enforced by every constructor here.
//!
//! The non-interacting model is the purified vector
//!
//! > |w⟩ = Σᵢⱼ αᵢⱼ |i⟩^{g°} |j⟩^{g•} ⊗ |wᵢ⟩^{A°B°E°} ⊗ |wⱼ⟩^{A•B•E•},
//!
//! whose sector marginals are the incoherent mixtures with marginal
//! probabilities p°ᵢ = Σⱼ pᵢⱼ and p•ⱼ = Σᵢ pᵢⱼ, where pᵢⱼ = |αᵢⱼ|².
//!
//! Because the joint system G⊗A⊗B⊗E grows as the *product* of the
//! sector dimensions, the builder returns the purification itself
//! ([`PureProcess`]) rather than a dense operator: the vector costs the
//! total dimension D while the operator would cost D². Dense process
//! matrices over any party subset are recovered with
//! [`PureProcess::to_process`], which partial-traces the purification
//! directly (a Gram product, never forming the full square) and refuses
//! subsets whose materialized side would exceed
//! [`crate::tol::MAX_DENSE_DIM`].

use crate::clean_models::CausalRelation;
use crate::error::{Error, Result};
use crate::process_core::{can_signal, PartySpec, ProcessMatrix};
use crate::tensor_core::{c64, label, partial_trace, LabeledVector, SubsystemLabel, C64};
use crate::tol;

/// The two sectors of a sectored party.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sector {
    /// The fast sector (establishes the causal envelope).
    Massless,
    /// The slow sector (must respect the massless envelope).
    Massive,
}

impl Sector {
    /// The wire-name suffix marking this sector.
    pub fn suffix(self) -> &'static str {
        match self {
            Sector::Massless => "_massless",
            Sector::Massive => "_massive",
        }
    }

    /// The other sector.
    pub fn other(self) -> Sector {
        match self {
            Sector::Massless => Sector::Massive,
            Sector::Massive => Sector::Massless,
        }
    }
}

/// Joint causal-branch amplitudes α°•ᵢⱼ of a sectored model
/// (row i = massless relation, column j = massive relation).
///
/// Invariants, enforced at construction: Σᵢⱼ |αᵢⱼ|² = 1 and
/// α₁₂ = α₂₁ = 0 exactly (the seven-of-nine admissibility constraint).
#[derive(Debug, Clone, PartialEq)]
pub struct SectoredAmplitudes {
    a: [[C64; 3]; 3],
}

impl SectoredAmplitudes {
    /// Validate and wrap a 3×3 amplitude matrix.
    ///
    /// # Errors
    /// - [`Error::ConstraintViolation`] if α₁₂ or α₂₁ is nonzero;
    /// - [`Error::NormError`] if Σ|αᵢⱼ|² differs from 1 beyond the
    ///   default tolerance.
    pub fn new(a: [[C64; 3]; 3]) -> Result<Self> {
        if a[0][1] != c64(0.0, 0.0) || a[1][0] != c64(0.0, 0.0) {
            return Err(Error::ConstraintViolation(
                "opposite causal relations across sectors are inadmissible: \
                 amplitudes at (massless 1, massive 2) and (massless 2, massive 1) \
                 must be exactly zero"
                    .into(),
            ));
        }
        let norm2: f64 = a
            .iter()
            .flat_map(|row| row.iter())
            .map(|x| x.norm_sqr())
            .sum();
        if (norm2 - 1.0).abs() > tol::NORM_TOL {
            return Err(Error::NormError(format!(
                "sectored amplitudes have squared norm {:.12}, expected 1",
                norm2
            )));
        }
        Ok(Self { a })
    }

    /// Real amplitudes from a joint probability matrix (entrywise
    /// square roots).
    pub fn from_probabilities(p: [[f64; 3]; 3]) -> Result<Self> {
        let mut a = [[c64(0.0, 0.0); 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                if p[i][j] < 0.0 {
                    return Err(Error::DomainError(format!(
                        "joint probability p[{}][{}] = {} is negative",
                        i + 1,
                        j + 1,
                        p[i][j]
                    )));
                }
                a[i][j] = c64(p[i][j].sqrt(), 0.0);
            }
        }
        Self::new(a)
    }

    /// Exact cell value k/den − m·10⁻¹⁰, evaluated in floating point
    /// once (no accumulated rounding across cells).
    fn cell(k: i64, den: i64, m: i64) -> f64 {
        k as f64 / den as f64 - m as f64 * 1e-10
    }

    /// A model typical under the massive-sector tendency condition:
    /// the massive marginal is uniform over the three relations while
    /// the massless weight concentrates (up to 10⁻¹⁰-scale leakage) on
    /// the two connected relations.
    pub fn typical_example() -> Self {
        let c = Self::cell;
        let p = [
            [c(1, 3, 1), 0.0, c(1, 6, 1)],
            [0.0, c(1, 3, 1), c(1, 6, 1)],
            [c(0, 1, -1), c(0, 1, -1), c(0, 1, -2)],
        ];
        Self::from_probabilities(p).expect("exact example matrix is admissible")
    }

    /// A model atypical under the massive-sector tendency condition:
    /// the massive weight concentrates on the disconnected relation
    /// (only 10⁻¹⁰-scale weight on the connected ones), while the
    /// massless marginal matches [`SectoredAmplitudes::typical_example`].
    pub fn atypical_example() -> Self {
        let c = Self::cell;
        let p = [
            [c(0, 1, -1), 0.0, c(1, 2, 3)],
            [0.0, c(0, 1, -1), c(1, 2, 3)],
            [c(0, 1, -1), c(0, 1, -1), c(0, 1, -2)],
        ];
        Self::from_probabilities(p).expect("exact example matrix is admissible")
    }

    /// Uniform amplitudes over the seven admissible cells.
    pub fn uniform_admissible() -> Self {
        let x = c64(1.0 / 7f64.sqrt(), 0.0);
        let z = c64(0.0, 0.0);
        Self::new([[x, z, x], [z, x, x], [x, x, x]]).expect("uniform mask is admissible")
    }

    /// The amplitude matrix.
    pub fn entries(&self) -> &[[C64; 3]; 3] {
        &self.a
    }

    /// Joint probabilities pᵢⱼ = |αᵢⱼ|².
    pub fn probabilities(&self) -> [[f64; 3]; 3] {
        let mut p = [[0.0; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                p[i][j] = self.a[i][j].norm_sqr();
            }
        }
        p
    }
}

/// Marginal branch probabilities (p°, p•): row sums for the massless
/// sector, column sums for the massive sector. Each vector sums to 1
/// (within the amplitude normalization tolerance).
pub fn marginal_probabilities(amps: &SectoredAmplitudes) -> ([f64; 3], [f64; 3]) {
    let p = amps.probabilities();
    let mut massless = [0.0; 3];
    let mut massive = [0.0; 3];
    for i in 0..3 {
        for j in 0..3 {
            massless[i] += p[i][j];
            massive[j] += p[i][j];
        }
    }
    (massless, massive)
}

/// A party whose every wire carries a sector suffix, so that its input
/// and output factor into (massless, massive) pairs.
#[derive(Debug, Clone)]
pub struct SectoredParty {
    spec: PartySpec,
}

impl SectoredParty {
    /// Standard sectored laboratory: input wires
    /// `{input_base}_massless` / `{input_base}_massive` and likewise
    /// for the output, with per-sector dimensions.
    pub fn new(
        name: &str,
        input_base: &str,
        output_base: &str,
        massless_dim: usize,
        massive_dim: usize,
    ) -> Result<Self> {
        let spec = PartySpec::new(
            name,
            vec![
                label(&format!("{input_base}_massless"), massless_dim),
                label(&format!("{input_base}_massive"), massive_dim),
            ],
            vec![
                label(&format!("{output_base}_massless"), massless_dim),
                label(&format!("{output_base}_massive"), massive_dim),
            ],
        )?;
        Ok(Self { spec })
    }

    /// Validate that an existing party is sectored: every wire name
    /// carries exactly one sector suffix and each sector keeps at least
    /// one wire.
    ///
    /// # Errors
    /// [`Error::SectorError`] if any wire is unsuffixed or one sector
    /// would be left without wires.
    pub fn from_spec(spec: &PartySpec) -> Result<Self> {
        let mut count = [0usize; 2];
        for l in spec.wires() {
            let s = sector_of(&l.name).ok_or_else(|| {
                Error::SectorError(format!(
                    "wire {:?} of party {:?} carries no sector suffix",
                    l.name, spec.name
                ))
            })?;
            count[match s {
                Sector::Massless => 0,
                Sector::Massive => 1,
            }] += 1;
        }
        if count[0] == 0 || count[1] == 0 {
            return Err(Error::SectorError(format!(
                "party {:?} has wires in only one sector",
                spec.name
            )));
        }
        Ok(Self { spec: spec.clone() })
    }

    /// The underlying party.
    pub fn spec(&self) -> &PartySpec {
        &self.spec
    }

    /// The party restricted to one sector (the other sector's wires
    /// removed), as used after tracing that sector out.
    pub fn sector_part(&self, keep: Sector) -> Result<PartySpec> {
        let filter = |ls: &[SubsystemLabel]| -> Vec<SubsystemLabel> {
            ls.iter()
                .filter(|l| sector_of(&l.name) == Some(keep))
                .cloned()
                .collect()
        };
        PartySpec::new(
            self.spec.name.as_str(),
            filter(&self.spec.inputs),
            filter(&self.spec.outputs),
        )
    }
}

/// Which sector a wire name belongs to, by suffix.
fn sector_of(name: &str) -> Option<Sector> {
    if name.ends_with(Sector::Massless.suffix()) {
        Some(Sector::Massless)
    } else if name.ends_with(Sector::Massive.suffix()) {
        Some(Sector::Massive)
    } else {
        None
    }
}

/// A process held in purified form: a normalized vector over the union
/// of the parties' wires. Dense operators are produced on demand for
/// party subsets via [`PureProcess::to_process`].
#[derive(Debug, Clone)]
pub struct PureProcess {
    parties: Vec<PartySpec>,
    vector: LabeledVector,
}

impl PureProcess {
    /// Wrap a purification.
    ///
    /// # Errors
    /// - [`Error::PartyError`] / [`Error::DuplicateLabel`] on party
    ///   structure problems;
    /// - [`Error::DimError`] if the vector registry is not exactly the
    ///   union of the party wires;
    /// - [`Error::NormError`] if the vector is not normalized.
    pub fn new(parties: Vec<PartySpec>, vector: LabeledVector) -> Result<Self> {
        if parties.is_empty() {
            return Err(Error::PartyError("process needs at least one party".into()));
        }
        let mut wires: Vec<&SubsystemLabel> = Vec::new();
        for (i, p) in parties.iter().enumerate() {
            if parties[..i].iter().any(|q| q.name == p.name) {
                return Err(Error::PartyError(format!(
                    "duplicate party name {:?}",
                    p.name
                )));
            }
            for l in p.wires() {
                if wires.iter().any(|m| m.name == l.name) {
                    return Err(Error::DuplicateLabel(l.name.clone()));
                }
                wires.push(l);
            }
        }
        if wires.len() != vector.registry().len() {
            return Err(Error::DimError(format!(
                "vector has {} subsystems but the parties declare {} wires",
                vector.registry().len(),
                wires.len()
            )));
        }
        for l in wires {
            let in_v = vector
                .registry()
                .iter()
                .find(|m| m.name == l.name)
                .ok_or_else(|| Error::DimError(format!("wire {:?} missing from vector", l.name)))?;
            if in_v.dim != l.dim {
                return Err(Error::DimError(format!(
                    "wire {:?} has dim {} in the vector but {} in its party",
                    l.name, in_v.dim, l.dim
                )));
            }
        }
        if (vector.norm() - 1.0).abs() > tol::NORM_TOL {
            return Err(Error::NormError(format!(
                "purification has norm {:.12}, expected 1",
                vector.norm()
            )));
        }
        Ok(Self { parties, vector })
    }

    /// The parties, in registry order.
    pub fn parties(&self) -> &[PartySpec] {
        &self.parties
    }

    /// The purification vector.
    pub fn vector(&self) -> &LabeledVector {
        &self.vector
    }

    /// Total dimension of the wires of the named parties.
    pub fn materialized_dim(&self, keep: &[&str]) -> Result<usize> {
        let mut dim = 1usize;
        for name in keep {
            let p = self
                .parties
                .iter()
                .find(|p| p.name == *name)
                .ok_or_else(|| Error::PartyError(format!("unknown party {:?}", name)))?;
            for l in p.wires() {
                dim = dim.saturating_mul(l.dim);
            }
        }
        Ok(dim)
    }

    /// Dense process matrix over the named parties, all other parties
    /// traced out directly from the purification (Gram product).
    ///
    /// The result is structurally checked but not re-validated for
    /// positivity (it is PSD and correctly normalized by construction
    /// whenever `self` came from a builder in this crate); run
    /// [`crate::process_core::validate_process`] for an explicit audit.
    ///
    /// # Errors
    /// - [`Error::PartyError`] on unknown/duplicate names or empty keep;
    /// - [`Error::DimError`] if the materialized side would exceed
    ///   [`crate::tol::MAX_DENSE_DIM`].
    pub fn to_process(&self, keep: &[&str]) -> Result<ProcessMatrix> {
        if keep.is_empty() {
            return Err(Error::PartyError("keep at least one party".into()));
        }
        for (i, n) in keep.iter().enumerate() {
            if keep[..i].contains(n) {
                return Err(Error::PartyError(format!("party {:?} listed twice", n)));
            }
        }
        let dim = self.materialized_dim(keep)?;
        if dim > tol::MAX_DENSE_DIM {
            return Err(Error::DimError(format!(
                "materializing {:?} needs a dense side of {} (> {}); trace more \
                 parties out of the purification instead",
                keep,
                dim,
                tol::MAX_DENSE_DIM
            )));
        }
        let kept: Vec<PartySpec> = self
            .parties
            .iter()
            .filter(|p| keep.contains(&p.name.as_str()))
            .cloned()
            .collect();
        let env: Vec<String> = self
            .parties
            .iter()
            .filter(|p| !keep.contains(&p.name.as_str()))
            .flat_map(|p| p.wires().map(|l| l.name.clone()))
            .collect();
        let env_refs: Vec<&str> = env.iter().map(|s| s.as_str()).collect();
        let w = self.vector.trace_out(&env_refs)?;
        ProcessMatrix::from_parts(kept, w)
    }
}

/// Check one sector's branch triple: common registry, sector suffixes,
/// the four wires present, unit norms, and each branch realizing the
/// causal relation of its position. Returns (aligned branches, wire
/// labels a1..b2, environment labels).
fn check_sector_branches(
    sector: Sector,
    branches: &[LabeledVector; 3],
) -> Result<([LabeledVector; 3], [SubsystemLabel; 4], Vec<SubsystemLabel>)> {
    let sfx = sector.suffix();
    let base = ["a1", "a2", "b1", "b2"];
    let registry = branches[0].registry().to_vec();
    for l in &registry {
        if sector_of(&l.name) != Some(sector) {
            return Err(Error::SectorError(format!(
                "branch wire {:?} does not carry the {:?} suffix",
                l.name, sfx
            )));
        }
    }
    let find = |b: &str| -> Result<SubsystemLabel> {
        let name = format!("{b}{sfx}");
        registry
            .iter()
            .find(|l| l.name == name)
            .cloned()
            .ok_or_else(|| Error::SectorError(format!("branch registry is missing wire {name:?}")))
    };
    let wires = [find("a1")?, find("a2")?, find("b1")?, find("b2")?];
    let env: Vec<SubsystemLabel> = registry
        .iter()
        .filter(|l| !base.iter().any(|b| l.name == format!("{b}{sfx}")))
        .cloned()
        .collect();

    let order: Vec<&str> = registry.iter().map(|l| l.name.as_str()).collect();
    let mut aligned: Vec<LabeledVector> = Vec::with_capacity(3);
    for (idx, branch) in branches.iter().enumerate() {
        let v = branch.permute(&order).map_err(|_| {
            Error::SectorError(format!(
                "branch {} of the {:?} sector has a different registry than branch 0",
                idx + 1,
                sfx
            ))
        })?;
        if (v.norm() - 1.0).abs() > tol::NORM_TOL {
            return Err(Error::NormError(format!(
                "branch {} of the {:?} sector has norm {:.12}, expected 1",
                idx + 1,
                sfx,
                v.norm()
            )));
        }
        // Operational check of the declared relation for this position.
        let env_names: Vec<&str> = env.iter().map(|l| l.name.as_str()).collect();
        let w_op = v.trace_out(&env_names)?;
        let a = PartySpec::simple("A", wires[0].clone(), wires[1].clone())?;
        let b = PartySpec::simple("B", wires[2].clone(), wires[3].clone())?;
        let process = ProcessMatrix::new(vec![a, b], w_op)?;
        let got = (
            can_signal(&process, "A", "B", tol::SIGNAL_TOL)?,
            can_signal(&process, "B", "A", tol::SIGNAL_TOL)?,
        );
        let relation = CausalRelation::from_index(idx + 1)?;
        if got != relation.expected_signalling() {
            return Err(Error::BranchRelationError(format!(
                "branch {} of the {:?} sector must realize {:?} but signalling is \
                 (A→B: {}, B→A: {})",
                idx + 1,
                sfx,
                relation,
                got.0,
                got.1
            )));
        }
        aligned.push(v);
    }
    let aligned: [LabeledVector; 3] = aligned.try_into().expect("three branches");
    Ok((aligned, wires, env))
}

/// Build the non-interacting sectored model in purified form:
///
/// > |w⟩ = Σᵢⱼ αᵢⱼ |i⟩^{g_massless} |j⟩^{g_massive} ⊗ |wᵢ°⟩ ⊗ |wⱼ•⟩
///
/// over the parties G (the two branch registers), A, B (sectored
/// laboratories), and E (all environment wires). Branch vectors must
/// arrive on sector-suffixed registries (see
/// [`crate::clean_models::HarmonicCleanModel::branch_vectors_suffixed`])
/// and are verified to realize the causal relation of their position
/// (1 = A→B, 2 = A←B, 3 = disconnected) before assembly.
///
/// # Errors
/// - [`Error::SectorError`] on unsuffixed/missing/mismatched wires;
/// - [`Error::NormError`] on unnormalized branches;
/// - [`Error::BranchRelationError`] if a branch's signalling verdicts
///   contradict its position;
/// - admissibility (α₁₂ = α₂₁ = 0) is carried by [`SectoredAmplitudes`]
///   itself and therefore cannot be violated here.
pub fn build_sectored_noninteracting(
    amps: &SectoredAmplitudes,
    massless_branches: &[LabeledVector; 3],
    massive_branches: &[LabeledVector; 3],
) -> Result<PureProcess> {
    let (wl, wl_wires, wl_env) = check_sector_branches(Sector::Massless, massless_branches)?;
    let (wm, wm_wires, wm_env) = check_sector_branches(Sector::Massive, massive_branches)?;

    let g_massless = label("g_massless", 3);
    let g_massive = label("g_massive", 3);
    let mut acc: Option<LabeledVector> = None;
    for i in 0..3 {
        for j in 0..3 {
            let a = amps.entries()[i][j];
            if a == c64(0.0, 0.0) {
                continue;
            }
            let gi = LabeledVector::basis(g_massless.clone(), i)?;
            let gj = LabeledVector::basis(g_massive.clone(), j)?;
            let term = gi.tensor(&gj)?.tensor(&wl[i])?.tensor(&wm[j])?.scale(a);
            acc = Some(match acc {
                None => term,
                Some(s) => s.add(&term)?,
            });
        }
    }
    let vector = acc.ok_or_else(|| {
        Error::ConstraintViolation("all sectored amplitudes are zero".into())
    })?;

    let g_party = PartySpec::new("G", vec![g_massless, g_massive], vec![])?;
    let a_party = PartySpec::new(
        "A",
        vec![wl_wires[0].clone(), wm_wires[0].clone()],
        vec![wl_wires[1].clone(), wm_wires[1].clone()],
    )?;
    let b_party = PartySpec::new(
        "B",
        vec![wl_wires[2].clone(), wm_wires[2].clone()],
        vec![wl_wires[3].clone(), wm_wires[3].clone()],
    )?;
    let mut parties = vec![g_party, a_party, b_party];
    let env: Vec<SubsystemLabel> = wl_env.into_iter().chain(wm_env).collect();
    if !env.is_empty() {
        parties.push(PartySpec::new("E", env, vec![])?);
    }
    PureProcess::new(parties, vector)
}

/// Trace one sector out of a dense process over sectored parties.
///
/// For a non-interacting sectored model reduced to its laboratories,
/// the result is the incoherent mixture Σᵢ pᵢ Wᵢ of the kept sector's
/// definite-relation processes with the marginal probabilities of
/// [`marginal_probabilities`].
///
/// # Errors
/// [`Error::SectorError`] if any party carries an unsuffixed wire or
/// would lose all its wires.
pub fn reduce_sector(w: &ProcessMatrix, keep: Sector) -> Result<ProcessMatrix> {
    let mut kept_parties = Vec::with_capacity(w.parties().len());
    let mut traced: Vec<String> = Vec::new();
    for p in w.parties() {
        let sectored = SectoredParty::from_spec(p)?;
        kept_parties.push(sectored.sector_part(keep)?);
        for l in p.wires() {
            if sector_of(&l.name) == Some(keep.other()) {
                traced.push(l.name.clone());
            }
        }
    }
    let traced_refs: Vec<&str> = traced.iter().map(|s| s.as_str()).collect();
    let reduced = partial_trace(w.w(), &traced_refs)?;
    ProcessMatrix::new(kept_parties, reduced)
}

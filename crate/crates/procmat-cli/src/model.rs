//! Model-file ingestion: one human-readable structured-text (JSON)
//! format covering every builder the toolkit exposes.
//!
//! A model file is a single JSON object with two fixed fields — a
//! `schema_version` (currently `"1"`) and a `kind` — plus kind-specific
//! parameters.  Complex numbers are always written as a two-element
//! array `[re, im]`; vectors and matrices are flat row-major arrays of
//! such pairs over the wire registry the schema fixes.
//!
//! The four kinds:
//!
//! - `harmonic` — the three-branch model: `wire_dim`, `alpha` (three
//!   complex amplitudes), and an optional `psi` giving the initial
//!   state on the slots (x, y, e₃) as `{ "e3_dim": k, "entries": […] }`
//!   with d·d·k entries (omitted: |0⟩⊗|0⟩ with a trivial third slot).
//! - `clean_general` — `amplitudes` (one complex per branch) and
//!   `branches`, each `{ "relation": "a_to_b"|"b_to_a"|"disconnected",
//!   "wires": [{"name": …, "dim": …}, …], "entries": […] }`.  Every
//!   branch must carry the wires a1, a2, b1, b2 and all branches must
//!   share one registry; other wires are environment and are traced.
//! - `partial_swap` — `p` (swap weight), `wire_dim`, `wiring` (the
//!   explicit channel feed declaration, currently only `"a2->a2_copy"`:
//!   the channel maps A's output into the copy wire that the swap
//!   forwards to B), `rho` (the initial state on (a1, a1_copy),
//!   row-major, d²×d² entries) and `channel_kraus` (a list of d×d
//!   row-major Kraus matrices).
//! - `sectored` — `wire_dim` and `amplitudes`, a 3×3 complex matrix of
//!   joint branch amplitudes (row = massless relation, column =
//!   massive relation; the cells (1,2) and (2,1) must be zero).  The
//!   per-sector branch vectors are the canonical harmonic ones at the
//!   given wire dimension with the default initial state.
//!
//! Parsing failures (unreadable file, malformed JSON, unknown fields,
//! unsupported schema values) are usage-level; everything the toolkit
//! itself rejects after a clean parse is model-level.

use std::fs;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use procmat::{
    build_clean_general, build_harmonic_purified, build_harmonic_reduced, build_partial_swap,
    build_sectored_noninteracting, c64, label, partial_trace, permute, AmplitudeVector3,
    CausalRelation, CleanBranch, HarmonicCleanModel, LabeledOperator, LabeledVector,
    PartialSwapModel, ProcessMatrix, Sector, SectoredAmplitudes, C64,
};
use serde::Deserialize;

use crate::error::CliError;

/// The only schema version this build reads.
pub const SCHEMA_VERSION: &str = "1";

/// The only supported channel-feed wiring for `partial_swap` files.
pub const PARTIAL_SWAP_WIRING: &str = "a2->a2_copy";

/// A complex number in file form: `[re, im]`.
type Complex2 = [f64; 2];

fn cx(v: Complex2) -> C64 {
    c64(v[0], v[1])
}

fn cx_vector(entries: &[Complex2]) -> DVector<C64> {
    DVector::from_iterator(entries.len(), entries.iter().map(|&v| cx(v)))
}

/// Row-major square matrix from file entries, with an explicit side check.
fn cx_matrix(side: usize, entries: &[Complex2], what: &str) -> Result<DMatrix<C64>, CliError> {
    if entries.len() != side * side {
        return Err(CliError::Model(format!(
            "{what} has {} entries, expected {side}×{side} = {}",
            entries.len(),
            side * side
        )));
    }
    Ok(DMatrix::from_row_iterator(
        side,
        side,
        entries.iter().map(|&v| cx(v)),
    ))
}

#[derive(Deserialize)]
struct Header {
    schema_version: String,
    kind: String,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct HarmonicFile {
    #[allow(dead_code)]
    schema_version: String,
    #[allow(dead_code)]
    kind: String,
    wire_dim: usize,
    alpha: [Complex2; 3],
    #[serde(default)]
    psi: Option<PsiFile>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct PsiFile {
    e3_dim: usize,
    entries: Vec<Complex2>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct CleanGeneralFile {
    #[allow(dead_code)]
    schema_version: String,
    #[allow(dead_code)]
    kind: String,
    amplitudes: Vec<Complex2>,
    branches: Vec<BranchFile>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct BranchFile {
    relation: String,
    wires: Vec<WireFile>,
    entries: Vec<Complex2>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct WireFile {
    name: String,
    dim: usize,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct PartialSwapFile {
    #[allow(dead_code)]
    schema_version: String,
    #[allow(dead_code)]
    kind: String,
    p: f64,
    wire_dim: usize,
    wiring: String,
    rho: Vec<Complex2>,
    channel_kraus: Vec<Vec<Complex2>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SectoredFile {
    #[allow(dead_code)]
    schema_version: String,
    #[allow(dead_code)]
    kind: String,
    wire_dim: usize,
    amplitudes: [[Complex2; 3]; 3],
}

/// A parsed and toolkit-validated model, ready to build processes.
pub enum LoadedModel {
    /// Three-branch harmonic model.
    Harmonic(HarmonicCleanModel),
    /// Generic clean model: branch amplitudes plus verified branches.
    CleanGeneral {
        /// Superposition amplitude per branch.
        amplitudes: Vec<C64>,
        /// Branch vectors with their declared causal relations.
        branches: Vec<CleanBranch>,
    },
    /// Partial-swap interpolation between a shared state and a channel.
    PartialSwap(PartialSwapModel),
    /// Two-sector model with harmonic branch vectors per sector.
    Sectored {
        /// Joint branch amplitudes (massless row, massive column).
        amplitudes: SectoredAmplitudes,
        /// Common wire dimension of every sector wire.
        wire_dim: usize,
    },
}

impl LoadedModel {
    /// The model kind, as written in the file.
    pub fn kind(&self) -> &'static str {
        match self {
            LoadedModel::Harmonic(_) => "harmonic",
            LoadedModel::CleanGeneral { .. } => "clean_general",
            LoadedModel::PartialSwap(_) => "partial_swap",
            LoadedModel::Sectored { .. } => "sectored",
        }
    }

    /// The sectored amplitudes, when this is a sectored model.
    pub fn sectored_amplitudes(&self) -> Option<&SectoredAmplitudes> {
        match self {
            LoadedModel::Sectored { amplitudes, .. } => Some(amplitudes),
            _ => None,
        }
    }

    /// The most informative process this kind builds, for validation
    /// reports: harmonic and clean-general models keep their
    /// superposition-holding party G open, the others are bipartite.
    ///
    /// # Errors
    /// Model-level failure when the builder rejects the parameters.
    pub fn primary_process(&self) -> Result<ProcessMatrix, CliError> {
        match self {
            LoadedModel::Harmonic(m) => Ok(build_harmonic_purified(m)?),
            LoadedModel::CleanGeneral {
                amplitudes,
                branches,
            } => Ok(build_clean_general(amplitudes, branches)?),
            LoadedModel::PartialSwap(m) => Ok(build_partial_swap(m)?),
            LoadedModel::Sectored {
                amplitudes,
                wire_dim,
            } => sectored_ab_process(amplitudes, *wire_dim),
        }
    }

    /// The two-party (A, B) process every capacity-style analysis runs
    /// on; parties beyond A and B are closed by tracing.
    ///
    /// # Errors
    /// Model-level failure when the builder rejects the parameters.
    pub fn bipartite_process(&self) -> Result<ProcessMatrix, CliError> {
        match self {
            LoadedModel::Harmonic(m) => Ok(build_harmonic_reduced(m)?),
            LoadedModel::CleanGeneral {
                amplitudes,
                branches,
            } => {
                let full = build_clean_general(amplitudes, branches)?;
                let traced = partial_trace(full.w(), &["g"])?;
                let aligned = permute(&traced, &["a1", "a2", "b1", "b2"])?;
                let a = full.party("A")?.clone();
                let b = full.party("B")?.clone();
                Ok(ProcessMatrix::new(vec![a, b], aligned)?)
            }
            LoadedModel::PartialSwap(m) => Ok(build_partial_swap(m)?),
            LoadedModel::Sectored {
                amplitudes,
                wire_dim,
            } => sectored_ab_process(amplitudes, *wire_dim),
        }
    }
}

/// Canonical harmonic branch vectors for one sector at wire dimension d
/// (default initial state; the amplitudes of the generating model are
/// irrelevant to the branch vectors themselves).
fn sector_branches(d: usize, sector: Sector) -> Result<[LabeledVector; 3], CliError> {
    let third = 1.0 / 3.0;
    let alpha = AmplitudeVector3::from_probabilities([third, third, third])?;
    let model = HarmonicCleanModel::new(alpha, d, None)?;
    Ok(model.branch_vectors_suffixed(sector.suffix())?)
}

/// Materialize the bipartite (A, B) process of a sectored model with
/// canonical harmonic branch vectors in both sectors.
///
/// # Errors
/// Model-level failure from the sectored builder.
pub fn sectored_ab_process(
    amps: &SectoredAmplitudes,
    wire_dim: usize,
) -> Result<ProcessMatrix, CliError> {
    let pure = build_sectored_noninteracting(
        amps,
        &sector_branches(wire_dim, Sector::Massless)?,
        &sector_branches(wire_dim, Sector::Massive)?,
    )?;
    Ok(pure.to_process(&["A", "B"])?)
}

fn parse_relation(s: &str) -> Result<CausalRelation, CliError> {
    match s {
        "a_to_b" => Ok(CausalRelation::AToB),
        "b_to_a" => Ok(CausalRelation::BToA),
        "disconnected" => Ok(CausalRelation::Disconnected),
        other => Err(CliError::Usage(format!(
            "unknown branch relation {other:?}, expected \"a_to_b\", \"b_to_a\" or \"disconnected\""
        ))),
    }
}

fn json_usage(path: &Path, e: serde_json::Error) -> CliError {
    CliError::Usage(format!("{}: {e}", path.display()))
}

/// Read and validate a model file.
///
/// # Errors
/// - [`CliError::Usage`] when the file cannot be read, is not valid
///   JSON for its kind, or uses an unsupported `schema_version`,
///   `kind`, branch relation or wiring;
/// - [`CliError::Model`] when the toolkit rejects the parsed
///   parameters (normalization, admissibility, dimensions, …).
pub fn load_model(path: &Path) -> Result<LoadedModel, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))?;
    let header: Header =
        serde_json::from_str(&text).map_err(|e| json_usage(path, e))?;
    if header.schema_version != SCHEMA_VERSION {
        return Err(CliError::Usage(format!(
            "{}: unsupported schema_version {:?}, expected {:?}",
            path.display(),
            header.schema_version,
            SCHEMA_VERSION
        )));
    }
    match header.kind.as_str() {
        "harmonic" => {
            let f: HarmonicFile =
                serde_json::from_str(&text).map_err(|e| json_usage(path, e))?;
            let alpha = AmplitudeVector3::new(cx(f.alpha[0]), cx(f.alpha[1]), cx(f.alpha[2]))?;
            let psi = match f.psi {
                None => None,
                Some(p) => {
                    let registry = vec![
                        label("x", f.wire_dim),
                        label("y", f.wire_dim),
                        label("e3", p.e3_dim),
                    ];
                    Some(LabeledVector::new(registry, cx_vector(&p.entries))?)
                }
            };
            Ok(LoadedModel::Harmonic(HarmonicCleanModel::new(
                alpha, f.wire_dim, psi,
            )?))
        }
        "clean_general" => {
            let f: CleanGeneralFile =
                serde_json::from_str(&text).map_err(|e| json_usage(path, e))?;
            let amplitudes: Vec<C64> = f.amplitudes.iter().map(|&v| cx(v)).collect();
            let mut branches = Vec::with_capacity(f.branches.len());
            for b in &f.branches {
                let relation = parse_relation(&b.relation)?;
                let registry = b
                    .wires
                    .iter()
                    .map(|w| label(&w.name, w.dim))
                    .collect::<Vec<_>>();
                let vector = LabeledVector::new(registry, cx_vector(&b.entries))?;
                branches.push(CleanBranch { vector, relation });
            }
            Ok(LoadedModel::CleanGeneral {
                amplitudes,
                branches,
            })
        }
        "partial_swap" => {
            let f: PartialSwapFile =
                serde_json::from_str(&text).map_err(|e| json_usage(path, e))?;
            if f.wiring != PARTIAL_SWAP_WIRING {
                return Err(CliError::Usage(format!(
                    "{}: unsupported wiring {:?}, expected {:?}",
                    path.display(),
                    f.wiring,
                    PARTIAL_SWAP_WIRING
                )));
            }
            let d = f.wire_dim;
            let rho = LabeledOperator::new(
                vec![label("a1", d), label("a1_copy", d)],
                cx_matrix(d * d, &f.rho, "initial state rho")?,
            )?;
            let mut kraus = Vec::with_capacity(f.channel_kraus.len());
            for (i, k) in f.channel_kraus.iter().enumerate() {
                kraus.push(cx_matrix(d, k, &format!("Kraus operator {i}"))?);
            }
            Ok(LoadedModel::PartialSwap(PartialSwapModel::new(
                f.p, rho, kraus,
            )?))
        }
        "sectored" => {
            let f: SectoredFile =
                serde_json::from_str(&text).map_err(|e| json_usage(path, e))?;
            let mut cells = [[c64(0.0, 0.0); 3]; 3];
            for i in 0..3 {
                for j in 0..3 {
                    cells[i][j] = cx(f.amplitudes[i][j]);
                }
            }
            Ok(LoadedModel::Sectored {
                amplitudes: SectoredAmplitudes::new(cells)?,
                wire_dim: f.wire_dim,
            })
        }
        other => Err(CliError::Usage(format!(
            "{}: unknown kind {other:?}, expected \"harmonic\", \"clean_general\", \
             \"partial_swap\" or \"sectored\"",
            path.display()
        ))),
    }
}

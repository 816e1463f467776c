//! Labeled multilinear operator algebra.
//!
//! Operators and vectors carry an ordered *registry* of named
//! finite-dimensional subsystems. All tensor products, partial traces and
//! subsystem permutations flow through the registry, so no call site ever
//! juggles raw index arithmetic.
//!
//! # Index convention
//!
//! One fixed mixed-radix convention is used everywhere: the **first**
//! registry label is the **most significant** digit of a row/column index
//! (row-major). For a registry `[x (dim 2), y (dim 3)]` the flat index of
//! basis state |i⟩ₓ|j⟩ᵧ is `i·3 + j`. Kronecker products in registry
//! order reproduce exactly this layout, which keeps Choi-operator and
//! partial-trace identities bit-stable across modules.
//!
//! # Tolerances
//!
//! Structural checks (Hermiticity, positivity) use the centralized
//! defaults in [`crate::tol`]; all equality helpers compare max-abs
//! differences.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::tol;

/// Complex scalar used throughout the crate.
pub type C64 = Complex64;

/// Shorthand for a real-valued complex scalar.
#[inline]
pub fn c64(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// A named finite-dimensional subsystem.
///
/// Names are free-form identifiers ("a1", "b2", "g", "e3",
/// "a1_massless", …); within one registry they must be unique.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SubsystemLabel {
    /// Identifier, unique within a registry.
    pub name: String,
    /// Hilbert-space dimension, >= 1.
    pub dim: usize,
}

impl SubsystemLabel {
    /// Create a label. Dimension 0 is rejected.
    pub fn new(name: impl Into<String>, dim: usize) -> Result<Self> {
        let name = name.into();
        if dim == 0 {
            return Err(Error::ZeroDim(name));
        }
        Ok(Self { name, dim })
    }
}

/// Convenience constructor for registries in tests and builders.
pub fn label(name: &str, dim: usize) -> SubsystemLabel {
    SubsystemLabel::new(name, dim).expect("dimension must be >= 1")
}

/// Validate that a registry has unique names and return its total dimension.
fn registry_dim(registry: &[SubsystemLabel]) -> Result<usize> {
    let mut total = 1usize;
    for (i, l) in registry.iter().enumerate() {
        if l.dim == 0 {
            return Err(Error::ZeroDim(l.name.clone()));
        }
        if registry[..i].iter().any(|m| m.name == l.name) {
            return Err(Error::DuplicateLabel(l.name.clone()));
        }
        total = total.checked_mul(l.dim).ok_or_else(|| {
            Error::DimError(format!("registry dimension overflow at {:?}", l.name))
        })?;
    }
    Ok(total)
}

/// Strides of each registry position under the row-major convention
/// (first label most significant).
pub(crate) fn strides(registry: &[SubsystemLabel]) -> Vec<usize> {
    let mut s = vec![1usize; registry.len()];
    for i in (0..registry.len().saturating_sub(1)).rev() {
        s[i] = s[i + 1] * registry[i + 1].dim;
    }
    s
}

/// Positions of `names` within `registry`, erroring on unknown names.
pub(crate) fn positions(registry: &[SubsystemLabel], names: &[&str]) -> Result<Vec<usize>> {
    names
        .iter()
        .map(|n| {
            registry
                .iter()
                .position(|l| l.name == *n)
                .ok_or_else(|| Error::UnknownLabel((*n).to_string()))
        })
        .collect()
}

/// Offset table for a subset of registry positions: entry `k` is the flat
/// full-registry offset contributed by the subset's k-th mixed-radix value.
///
/// The subset is enumerated in the order given by `posns`, first position
/// most significant.
pub(crate) fn offset_table(registry: &[SubsystemLabel], posns: &[usize]) -> Vec<usize> {
    let st = strides(registry);
    let dims: Vec<usize> = posns.iter().map(|&p| registry[p].dim).collect();
    let total: usize = dims.iter().product();
    let mut table = vec![0usize; total];
    for (flat, slot) in table.iter_mut().enumerate() {
        let mut rem = flat;
        let mut off = 0usize;
        for (j, &p) in posns.iter().enumerate().rev() {
            let digit = rem % dims[j];
            rem /= dims[j];
            off += digit * st[p];
        }
        *slot = off;
    }
    table
}

/// A complex square matrix over an ordered registry of named subsystems.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledOperator {
    registry: Vec<SubsystemLabel>,
    entries: DMatrix<C64>,
}

impl LabeledOperator {
    /// Wrap a matrix whose side equals the product of the registry dims.
    pub fn new(registry: Vec<SubsystemLabel>, entries: DMatrix<C64>) -> Result<Self> {
        let dim = registry_dim(&registry)?;
        if entries.nrows() != dim || entries.ncols() != dim {
            return Err(Error::DimError(format!(
                "operator is {}x{} but registry product is {}",
                entries.nrows(),
                entries.ncols(),
                dim
            )));
        }
        Ok(Self { registry, entries })
    }

    /// Identity operator on the given registry.
    pub fn identity(registry: Vec<SubsystemLabel>) -> Result<Self> {
        let dim = registry_dim(&registry)?;
        Ok(Self {
            registry,
            entries: DMatrix::identity(dim, dim),
        })
    }

    /// Maximally mixed state π = 1/d on a single label.
    pub fn maximally_mixed(label: SubsystemLabel) -> Self {
        let d = label.dim;
        let entries = DMatrix::from_diagonal_element(d, d, c64(1.0 / d as f64, 0.0));
        Self {
            registry: vec![label],
            entries,
        }
    }

    /// Rank-one projector |k⟩⟨k| on a single label.
    pub fn basis_projector(label: SubsystemLabel, k: usize) -> Result<Self> {
        if k >= label.dim {
            return Err(Error::DimError(format!(
                "basis index {} out of range for {:?} (dim {})",
                k, label.name, label.dim
            )));
        }
        let d = label.dim;
        let mut entries = DMatrix::zeros(d, d);
        entries[(k, k)] = c64(1.0, 0.0);
        Ok(Self {
            registry: vec![label],
            entries,
        })
    }

    /// Ordered registry of subsystems.
    pub fn registry(&self) -> &[SubsystemLabel] {
        &self.registry
    }

    /// Total dimension (matrix side).
    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    /// Raw matrix entries.
    pub fn entries(&self) -> &DMatrix<C64> {
        &self.entries
    }

    /// Consume into the raw matrix.
    pub fn into_entries(self) -> DMatrix<C64> {
        self.entries
    }

    /// Dimension of one named subsystem.
    pub fn dim_of(&self, name: &str) -> Result<usize> {
        self.registry
            .iter()
            .find(|l| l.name == name)
            .map(|l| l.dim)
            .ok_or_else(|| Error::UnknownLabel(name.to_string()))
    }

    /// Whether the registry contains a label of this name.
    pub fn has_label(&self, name: &str) -> bool {
        self.registry.iter().any(|l| l.name == name)
    }

    /// Trace.
    pub fn trace(&self) -> C64 {
        self.entries.diagonal().sum()
    }

    /// Largest absolute entry.
    pub fn max_abs(&self) -> f64 {
        self.entries.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    /// Max-abs difference against another operator with an identical
    /// registry (names, dims and order).
    pub fn max_abs_diff(&self, other: &Self) -> Result<f64> {
        if self.registry != other.registry {
            return Err(Error::DimError(
                "operators live on different registries".to_string(),
            ));
        }
        Ok((&self.entries - &other.entries)
            .iter()
            .map(|c| c.norm())
            .fold(0.0, f64::max))
    }

    /// Hermiticity residue: largest |w − w†| entry.
    pub fn hermiticity_residue(&self) -> f64 {
        let adj = self.entries.adjoint();
        (&self.entries - adj)
            .iter()
            .map(|c| c.norm())
            .fold(0.0, f64::max)
    }

    /// Adjoint (conjugate transpose) on the same registry.
    pub fn adjoint(&self) -> Self {
        Self {
            registry: self.registry.clone(),
            entries: self.entries.adjoint(),
        }
    }

    /// Entrywise scaling.
    pub fn scale(&self, factor: C64) -> Self {
        Self {
            registry: self.registry.clone(),
            entries: &self.entries * factor,
        }
    }

    /// Sum of two operators on identical registries.
    pub fn add(&self, other: &Self) -> Result<Self> {
        if self.registry != other.registry {
            return Err(Error::DimError(
                "cannot add operators on different registries".to_string(),
            ));
        }
        Ok(Self {
            registry: self.registry.clone(),
            entries: &self.entries + &other.entries,
        })
    }

    /// Rename one subsystem in place (dimension unchanged).
    pub fn rename(&self, from: &str, to: &str) -> Result<Self> {
        if self.has_label(to) && from != to {
            return Err(Error::DuplicateLabel(to.to_string()));
        }
        let mut registry = self.registry.clone();
        let pos = registry
            .iter()
            .position(|l| l.name == from)
            .ok_or_else(|| Error::UnknownLabel(from.to_string()))?;
        registry[pos].name = to.to_string();
        Ok(Self {
            registry,
            entries: self.entries.clone(),
        })
    }

    /// Eigenvalues of the Hermitian part, ascending. Used by positivity
    /// checks and spectrum-preservation tests.
    pub fn hermitian_eigenvalues(&self) -> Vec<f64> {
        // Symmetrize first so the eigensolver sees an exactly Hermitian
        // matrix; the caller separately bounds the Hermiticity residue.
        let herm = (&self.entries + self.entries.adjoint()) * c64(0.5, 0.0);
        let mut ev: Vec<f64> = herm
            .clone()
            .symmetric_eigen()
            .eigenvalues
            .iter()
            .copied()
            .collect();
        // The QR-based solver can emit NaN on spectra with tight
        // near-degenerate clusters; Jacobi iteration is unconditionally
        // convergent, so fall back to it when that happens.
        if ev.iter().any(|x| !x.is_finite()) {
            ev = jacobi_hermitian_eigenvalues(&herm);
        }
        ev.sort_by(|a, b| a.partial_cmp(b).expect("eigenvalues are finite"));
        ev
    }
}

/// Eigenvalues of an (exactly) Hermitian matrix by cyclic complex
/// Jacobi rotations. Slower than QR but unconditionally convergent and
/// free of the NaN failure modes that QR shift strategies can hit on
/// clustered spectra.
fn jacobi_hermitian_eigenvalues(herm: &DMatrix<C64>) -> Vec<f64> {
    let n = herm.nrows();
    let mut m = herm.clone();
    let scale = m.iter().map(|c| c.norm()).fold(0.0, f64::max).max(1.0);
    for _sweep in 0..60 {
        let mut off = 0.0f64;
        for p in 0..n {
            for q in (p + 1)..n {
                off = off.max(m[(p, q)].norm());
            }
        }
        if off <= 1e-15 * scale {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[(p, q)];
                let r = apq.norm();
                if r <= 1e-18 * scale {
                    continue;
                }
                let phase = apq / c64(r, 0.0);
                let tau = (m[(q, q)].re - m[(p, p)].re) / (2.0 * r);
                let t = if tau >= 0.0 {
                    1.0 / (tau + (1.0 + tau * tau).sqrt())
                } else {
                    -1.0 / (-tau + (1.0 + tau * tau).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                let cc = c64(c, 0.0);
                let sp = c64(s, 0.0) * phase;
                // Column update: M ← M·J with J[p,p]=J[q,q]=c,
                // J[p,q]=s·phase, J[q,p]=−s·conj(phase).
                for k in 0..n {
                    let mkp = m[(k, p)];
                    let mkq = m[(k, q)];
                    m[(k, p)] = cc * mkp - sp.conj() * mkq;
                    m[(k, q)] = sp * mkp + cc * mkq;
                }
                // Row update: M ← J†·M.
                for k in 0..n {
                    let mpk = m[(p, k)];
                    let mqk = m[(q, k)];
                    m[(p, k)] = cc * mpk - sp * mqk;
                    m[(q, k)] = sp.conj() * mpk + cc * mqk;
                }
                m[(p, q)] = c64(0.0, 0.0);
                m[(q, p)] = c64(0.0, 0.0);
            }
        }
    }
    (0..n).map(|k| m[(k, k)].re).collect()
}

/// Tensor product in registry order: the result registry is the
/// concatenation `a.registry ++ b.registry` and the entries are the
/// Kronecker product, so `a`'s labels are the more significant digits.
pub fn tensor(a: &LabeledOperator, b: &LabeledOperator) -> Result<LabeledOperator> {
    for l in b.registry() {
        if a.has_label(&l.name) {
            return Err(Error::DuplicateLabel(l.name.clone()));
        }
    }
    let mut registry = a.registry.clone();
    registry.extend(b.registry.iter().cloned());
    Ok(LabeledOperator {
        registry,
        entries: a.entries.kronecker(&b.entries),
    })
}

/// Tensor product of several operators, left to right.
pub fn tensor_all(ops: &[&LabeledOperator]) -> Result<LabeledOperator> {
    let (first, rest) = ops
        .split_first()
        .ok_or_else(|| Error::DimError("tensor_all needs at least one operator".to_string()))?;
    let mut acc = (*first).clone();
    for op in rest {
        acc = tensor(&acc, op)?;
    }
    Ok(acc)
}

/// Partial trace over the named subsystems. The result registry is the
/// input registry with the traced names removed, order preserved; the
/// total trace and Hermiticity are preserved.
pub fn partial_trace(w: &LabeledOperator, over: &[&str]) -> Result<LabeledOperator> {
    let trace_pos = positions(&w.registry, over)?;
    if over.is_empty() {
        return Ok(w.clone());
    }
    // Duplicate names in `over` would double-trace a subsystem.
    for (i, n) in over.iter().enumerate() {
        if over[..i].contains(n) {
            return Err(Error::DuplicateLabel((*n).to_string()));
        }
    }
    let keep_pos: Vec<usize> = (0..w.registry.len())
        .filter(|p| !trace_pos.contains(p))
        .collect();

    let keep_registry: Vec<SubsystemLabel> =
        keep_pos.iter().map(|&p| w.registry[p].clone()).collect();
    let keep_dim: usize = keep_registry.iter().map(|l| l.dim).product();

    let keep_off = offset_table(&w.registry, &keep_pos);
    let trace_off = offset_table(&w.registry, &trace_pos);

    let mut out = DMatrix::zeros(keep_dim, keep_dim);
    for (rk, &ro) in keep_off.iter().enumerate() {
        for (ck, &co) in keep_off.iter().enumerate() {
            let mut acc = c64(0.0, 0.0);
            for &to in &trace_off {
                acc += w.entries[(ro + to, co + to)];
            }
            out[(rk, ck)] = acc;
        }
    }
    LabeledOperator::new(keep_registry, out)
}

/// Re-index an operator so its registry is `new_order` (a permutation of
/// the current names). The operator is unchanged as a multilinear map.
pub fn permute(w: &LabeledOperator, new_order: &[&str]) -> Result<LabeledOperator> {
    if new_order.len() != w.registry.len() {
        return Err(Error::BadPermutation(format!(
            "got {} names for a registry of {}",
            new_order.len(),
            w.registry.len()
        )));
    }
    let mut seen = vec![false; w.registry.len()];
    let posns = positions(&w.registry, new_order)?;
    for &p in &posns {
        if seen[p] {
            return Err(Error::BadPermutation(format!(
                "label {:?} listed twice",
                w.registry[p].name
            )));
        }
        seen[p] = true;
    }

    let new_registry: Vec<SubsystemLabel> = posns.iter().map(|&p| w.registry[p].clone()).collect();
    // map[f'] = old flat index of the new flat index f'
    let map = permutation_map(&w.registry, &posns);
    let d = w.dim();
    let mut out = DMatrix::zeros(d, d);
    for (rp, &r) in map.iter().enumerate() {
        for (cp, &c) in map.iter().enumerate() {
            out[(rp, cp)] = w.entries[(r, c)];
        }
    }
    LabeledOperator::new(new_registry, out)
}

/// For a permutation given as new-position -> old-position, the flat-index
/// map new flat -> old flat.
fn permutation_map(registry: &[SubsystemLabel], posns: &[usize]) -> Vec<usize> {
    let old_strides = strides(registry);
    let new_dims: Vec<usize> = posns.iter().map(|&p| registry[p].dim).collect();
    let total: usize = new_dims.iter().product();
    let mut map = vec![0usize; total];
    for (fp, slot) in map.iter_mut().enumerate() {
        let mut rem = fp;
        let mut f = 0usize;
        for (j, &p) in posns.iter().enumerate().rev() {
            let digit = rem % new_dims[j];
            rem /= new_dims[j];
            f += digit * old_strides[p];
        }
        *slot = f;
    }
    map
}

/// Positive-semidefiniteness check: true iff `w` is Hermitian within
/// `tol·scale` and its minimum eigenvalue is >= −`tol`·scale, where
/// `scale = max(1, largest absolute entry)`. A non-Hermitian operator
/// simply returns false.
///
/// Implemented as a Cholesky factorization of the Hermitian part
/// shifted by +`tol`·scale, which succeeds exactly when every
/// eigenvalue exceeds −`tol`·scale (up to factorization rounding,
/// ~n·ε·scale, far below the shift at the dimensions used here). This
/// avoids full eigendecomposition: it is several times faster and has
/// no convergence failure modes.
pub fn is_psd(w: &LabeledOperator, tol: f64) -> bool {
    let scale = w.max_abs().max(1.0);
    if w.hermiticity_residue() > tol * scale {
        return false;
    }
    let n = w.entries.nrows();
    let mut shifted = (&w.entries + w.entries.adjoint()) * c64(0.5, 0.0);
    for k in 0..n {
        shifted[(k, k)] += c64(tol * scale, 0.0);
    }
    hermitian_cholesky_succeeds(shifted)
}

/// In-place lower Cholesky factorization attempt with explicit pivot
/// checks: returns true iff every pivot stays strictly positive, i.e.
/// iff the Hermitian input is positive definite (up to factorization
/// rounding).
fn hermitian_cholesky_succeeds(mut m: DMatrix<C64>) -> bool {
    let n = m.nrows();
    for j in 0..n {
        let mut d = m[(j, j)].re;
        for k in 0..j {
            d -= m[(j, k)].norm_sqr();
        }
        if d <= 0.0 || !d.is_finite() {
            return false;
        }
        let piv = d.sqrt();
        m[(j, j)] = c64(piv, 0.0);
        for i in (j + 1)..n {
            let mut acc = m[(i, j)];
            for k in 0..j {
                acc -= m[(i, k)] * m[(j, k)].conj();
            }
            m[(i, j)] = acc / c64(piv, 0.0);
        }
    }
    true
}

/// Positivity check with the crate default tolerance.
pub fn is_psd_default(w: &LabeledOperator) -> bool {
    is_psd(w, tol::PSD_TOL)
}

/// Apply a completely positive map, given by square Kraus operators, to a
/// single named wire of an operator: W ↦ Σ_K (K on wire) W (K† on wire).
///
/// The Kraus operators act on the chosen subsystem only; all other
/// subsystems are untouched and the registry order of the result matches
/// the input. Trace preservation is *not* required here — callers that
/// need a channel must validate Σ K†K = 1 themselves.
///
/// # Errors
/// - [`Error::UnknownLabel`] if `wire` is not in the registry;
/// - [`Error::DimError`] if a Kraus matrix is not square with the wire's
///   dimension;
/// - [`Error::ConstraintViolation`] if `kraus` is empty.
pub fn apply_kraus_to_wire(
    w: &LabeledOperator,
    wire: &str,
    kraus: &[DMatrix<C64>],
) -> Result<LabeledOperator> {
    if kraus.is_empty() {
        return Err(Error::ConstraintViolation(format!(
            "no Kraus operators supplied for wire {wire:?}"
        )));
    }
    let d = w.dim_of(wire)?;
    for k in kraus {
        if k.nrows() != d || k.ncols() != d {
            return Err(Error::DimError(format!(
                "Kraus operator is {}x{} but wire {:?} has dimension {}",
                k.nrows(),
                k.ncols(),
                wire,
                d
            )));
        }
    }
    let original: Vec<&str> = w.registry().iter().map(|l| l.name.as_str()).collect();
    let mut fronted_order: Vec<&str> = vec![wire];
    fronted_order.extend(original.iter().copied().filter(|n| *n != wire));
    let fronted = permute(w, &fronted_order)?;
    let rest = fronted.dim() / d;
    let eye = DMatrix::<C64>::identity(rest, rest);
    let mut acc = DMatrix::<C64>::zeros(fronted.dim(), fronted.dim());
    for k in kraus {
        let big = k.kronecker(&eye);
        acc += &big * fronted.entries() * big.adjoint();
    }
    let applied = LabeledOperator::new(fronted.registry().to_vec(), acc)?;
    permute(&applied, &original)
}

/// A complex vector over an ordered registry of named subsystems, under
/// the same index convention as [`LabeledOperator`].
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledVector {
    registry: Vec<SubsystemLabel>,
    entries: DVector<C64>,
}

impl LabeledVector {
    /// Wrap a vector whose length equals the product of the registry dims.
    pub fn new(registry: Vec<SubsystemLabel>, entries: DVector<C64>) -> Result<Self> {
        let dim = registry_dim(&registry)?;
        if entries.len() != dim {
            return Err(Error::DimError(format!(
                "vector length {} but registry product is {}",
                entries.len(),
                dim
            )));
        }
        Ok(Self { registry, entries })
    }

    /// Basis vector |k⟩ on a single label.
    pub fn basis(label: SubsystemLabel, k: usize) -> Result<Self> {
        if k >= label.dim {
            return Err(Error::DimError(format!(
                "basis index {} out of range for {:?} (dim {})",
                k, label.name, label.dim
            )));
        }
        let mut entries = DVector::zeros(label.dim);
        entries[k] = c64(1.0, 0.0);
        Ok(Self {
            registry: vec![label],
            entries,
        })
    }

    /// Normalized maximally entangled state
    /// |I⟩ = d^{-1/2} Σᵢ |i⟩|i⟩ across two labels of equal dimension.
    pub fn max_entangled(a: SubsystemLabel, b: SubsystemLabel) -> Result<Self> {
        if a.dim != b.dim {
            return Err(Error::DimError(format!(
                "maximally entangled state needs equal dims, got {:?}={} and {:?}={}",
                a.name, a.dim, b.name, b.dim
            )));
        }
        let d = a.dim;
        let mut entries = DVector::zeros(d * d);
        let amp = c64(1.0 / (d as f64).sqrt(), 0.0);
        for i in 0..d {
            entries[i * d + i] = amp;
        }
        Self::new(vec![a, b], entries)
    }

    /// Ordered registry of subsystems.
    pub fn registry(&self) -> &[SubsystemLabel] {
        &self.registry
    }

    /// Total length.
    pub fn dim(&self) -> usize {
        self.entries.len()
    }

    /// Raw entries.
    pub fn entries(&self) -> &DVector<C64> {
        &self.entries
    }

    /// Euclidean norm.
    pub fn norm(&self) -> f64 {
        self.entries.norm()
    }

    /// Entrywise scaling.
    pub fn scale(&self, factor: C64) -> Self {
        Self {
            registry: self.registry.clone(),
            entries: &self.entries * factor,
        }
    }

    /// Sum of two vectors on identical registries.
    pub fn add(&self, other: &Self) -> Result<Self> {
        if self.registry != other.registry {
            return Err(Error::DimError(
                "cannot add vectors on different registries".to_string(),
            ));
        }
        Ok(Self {
            registry: self.registry.clone(),
            entries: &self.entries + &other.entries,
        })
    }

    /// Tensor product in registry order (self's labels most significant).
    pub fn tensor(&self, other: &Self) -> Result<Self> {
        for l in other.registry() {
            if self.registry.iter().any(|m| m.name == l.name) {
                return Err(Error::DuplicateLabel(l.name.clone()));
            }
        }
        let mut registry = self.registry.clone();
        registry.extend(other.registry.iter().cloned());
        Ok(Self {
            registry,
            entries: self.entries.kronecker(&other.entries),
        })
    }

    /// Re-index so the registry is `new_order` (a permutation of the
    /// current names).
    pub fn permute(&self, new_order: &[&str]) -> Result<Self> {
        if new_order.len() != self.registry.len() {
            return Err(Error::BadPermutation(format!(
                "got {} names for a registry of {}",
                new_order.len(),
                self.registry.len()
            )));
        }
        let posns = positions(&self.registry, new_order)?;
        let mut seen = vec![false; self.registry.len()];
        for &p in &posns {
            if seen[p] {
                return Err(Error::BadPermutation(format!(
                    "label {:?} listed twice",
                    self.registry[p].name
                )));
            }
            seen[p] = true;
        }
        let new_registry: Vec<SubsystemLabel> =
            posns.iter().map(|&p| self.registry[p].clone()).collect();
        let map = permutation_map(&self.registry, &posns);
        let mut out = DVector::zeros(self.entries.len());
        for (fp, &f) in map.iter().enumerate() {
            out[fp] = self.entries[f];
        }
        Self::new(new_registry, out)
    }

    /// Outer product |v⟩⟨v| as a labeled operator on the same registry.
    pub fn outer(&self) -> LabeledOperator {
        let n = self.entries.len();
        let mut out = DMatrix::zeros(n, n);
        for r in 0..n {
            for c in 0..n {
                out[(r, c)] = self.entries[r] * self.entries[c].conj();
            }
        }
        LabeledOperator {
            registry: self.registry.clone(),
            entries: out,
        }
    }

    /// Gram-trick partial trace of the pure state |v⟩⟨v| over the named
    /// subsystems, never materializing the full outer product: reshape
    /// |v⟩ into a (keep × traced) matrix M and return M·M†.
    pub fn trace_out(&self, over: &[&str]) -> Result<LabeledOperator> {
        let trace_pos = positions(&self.registry, over)?;
        for (i, n) in over.iter().enumerate() {
            if over[..i].contains(n) {
                return Err(Error::DuplicateLabel((*n).to_string()));
            }
        }
        let keep_pos: Vec<usize> = (0..self.registry.len())
            .filter(|p| !trace_pos.contains(p))
            .collect();
        let keep_registry: Vec<SubsystemLabel> =
            keep_pos.iter().map(|&p| self.registry[p].clone()).collect();
        let keep_dim: usize = keep_registry.iter().map(|l| l.dim).product();
        let trace_dim: usize = trace_pos.iter().map(|&p| self.registry[p].dim).product();

        let keep_off = offset_table(&self.registry, &keep_pos);
        let trace_off = offset_table(&self.registry, &trace_pos);

        let mut m = DMatrix::zeros(keep_dim, trace_dim);
        for (rk, &ro) in keep_off.iter().enumerate() {
            for (t, &to) in trace_off.iter().enumerate() {
                m[(rk, t)] = self.entries[ro + to];
            }
        }
        let gram = &m * m.adjoint();
        LabeledOperator::new(keep_registry, gram)
    }

    /// Contract an operator `op` into the subsystems named by `on`
    /// (in `op`'s input order, most significant first), replacing them by
    /// `out_labels`. `op` must map the product of the `on` dims to the
    /// product of the `out_labels` dims; the replaced labels are appended
    /// at the end of the remaining registry, `out_labels` order.
    pub fn apply_local(
        &self,
        op: &DMatrix<C64>,
        on: &[&str],
        out_labels: Vec<SubsystemLabel>,
    ) -> Result<Self> {
        let in_pos = positions(&self.registry, on)?;
        for (i, n) in on.iter().enumerate() {
            if on[..i].contains(n) {
                return Err(Error::DuplicateLabel((*n).to_string()));
            }
        }
        let d_in: usize = in_pos.iter().map(|&p| self.registry[p].dim).product();
        let d_out: usize = out_labels.iter().map(|l| l.dim).product();
        if op.ncols() != d_in || op.nrows() != d_out {
            return Err(Error::DimError(format!(
                "local operator is {}x{}, expected {}x{}",
                op.nrows(),
                op.ncols(),
                d_out,
                d_in
            )));
        }
        let rest_pos: Vec<usize> = (0..self.registry.len())
            .filter(|p| !in_pos.contains(p))
            .collect();
        let mut new_registry: Vec<SubsystemLabel> =
            rest_pos.iter().map(|&p| self.registry[p].clone()).collect();
        for l in &out_labels {
            if new_registry.iter().any(|m| m.name == l.name) {
                return Err(Error::DuplicateLabel(l.name.clone()));
            }
            new_registry.push(l.clone());
        }

        let rest_off = offset_table(&self.registry, &rest_pos);
        let in_off = offset_table(&self.registry, &in_pos);
        let rest_dim: usize = rest_pos.iter().map(|&p| self.registry[p].dim).product();

        // Result layout: rest labels (original order) then out labels, so
        // the flat index is rest·d_out + out.
        let mut out = DVector::zeros(rest_dim * d_out);
        for (r, &ro) in rest_off.iter().enumerate() {
            for o in 0..d_out {
                let mut acc = c64(0.0, 0.0);
                for (i, &io) in in_off.iter().enumerate() {
                    acc += op[(o, i)] * self.entries[ro + io];
                }
                out[r * d_out + o] = acc;
            }
        }
        Self::new(new_registry, out)
    }
}

/// Tensor product of several vectors, left to right.
pub fn tensor_all_vectors(vs: &[&LabeledVector]) -> Result<LabeledVector> {
    let (first, rest) = vs
        .split_first()
        .ok_or_else(|| Error::DimError("tensor_all_vectors needs at least one vector".to_string()))?;
    let mut acc = (*first).clone();
    for v in rest {
        acc = acc.tensor(v)?;
    }
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn diag(label_: SubsystemLabel, d: &[f64]) -> LabeledOperator {
        let n = d.len();
        assert_eq!(n, label_.dim);
        let mut m = DMatrix::zeros(n, n);
        for (i, &x) in d.iter().enumerate() {
            m[(i, i)] = c64(x, 0.0);
        }
        LabeledOperator::new(vec![label_], m).unwrap()
    }

    #[test]
    fn tensor_identity_case_is_noop() {
        // 1x1 identity on a trivial system ⊗ X = X (up to the extra label)
        let x = diag(label("x", 2), &[0.3, 0.7]);
        let triv = LabeledOperator::identity(vec![label("t", 1)]).unwrap();
        let t = tensor(&triv, &x).unwrap();
        assert_eq!(t.dim(), 2);
        assert_eq!(t.entries()[(0, 0)], c64(0.3, 0.0));
        assert_eq!(t.entries()[(1, 1)], c64(0.7, 0.0));
    }

    #[test]
    fn tensor_of_maximally_mixed_is_uniform_diagonal() {
        let a = LabeledOperator::maximally_mixed(label("x", 2));
        let b = LabeledOperator::maximally_mixed(label("y", 3));
        let t = tensor(&a, &b).unwrap();
        for i in 0..6 {
            assert!((t.entries()[(i, i)] - c64(1.0 / 6.0, 0.0)).norm() < 1e-15);
        }
        assert!((t.trace() - c64(1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn tensor_matches_direct_kronecker() {
        // diag(1,0) ⊗ diag(0,1) = diag(0,1,0,0)
        let a = diag(label("x", 2), &[1.0, 0.0]);
        let b = diag(label("y", 2), &[0.0, 1.0]);
        let t = tensor(&a, &b).unwrap();
        let want = [0.0, 1.0, 0.0, 0.0];
        for (i, &w) in want.iter().enumerate() {
            assert!((t.entries()[(i, i)] - c64(w, 0.0)).norm() < 1e-15);
        }
    }

    #[test]
    fn tensor_rejects_duplicate_names() {
        let a = diag(label("x", 2), &[1.0, 0.0]);
        let b = diag(label("x", 2), &[0.0, 1.0]);
        assert!(matches!(tensor(&a, &b), Err(Error::DuplicateLabel(_))));
    }

    #[test]
    fn partial_trace_empty_set_is_identity_op() {
        let a = diag(label("x", 2), &[0.25, 0.75]);
        let t = partial_trace(&a, &[]).unwrap();
        assert_eq!(t, a);
    }

    #[test]
    fn partial_trace_of_max_entangled_projector_is_maximally_mixed() {
        let phi = LabeledVector::max_entangled(label("x", 2), label("y", 2)).unwrap();
        let proj = phi.outer();
        let red = partial_trace(&proj, &["y"]).unwrap();
        let pi = LabeledOperator::maximally_mixed(label("x", 2));
        assert!(red.max_abs_diff(&pi).unwrap() < 1e-15);
    }

    #[test]
    fn partial_trace_of_product_factors() {
        // Tr_y(ρ ⊗ σ) = ρ · Tr(σ), brute-force oracle on dims 2x3.
        let rho = diag(label("x", 2), &[0.2, 0.8]);
        let mut sig_m = DMatrix::zeros(3, 3);
        sig_m[(0, 0)] = c64(0.5, 0.0);
        sig_m[(1, 1)] = c64(0.25, 0.0);
        sig_m[(2, 2)] = c64(0.05, 0.0);
        sig_m[(0, 1)] = c64(0.1, 0.2);
        sig_m[(1, 0)] = c64(0.1, -0.2);
        let sigma = LabeledOperator::new(vec![label("y", 3)], sig_m).unwrap();
        let prod = tensor(&rho, &sigma).unwrap();

        // Brute-force index summation.
        let mut want = DMatrix::zeros(2, 2);
        for i in 0..2 {
            for j in 0..2 {
                let mut acc = c64(0.0, 0.0);
                for k in 0..3 {
                    acc += prod.entries()[(i * 3 + k, j * 3 + k)];
                }
                want[(i, j)] = acc;
            }
        }
        let got = partial_trace(&prod, &["y"]).unwrap();
        assert_eq!(got.registry().len(), 1);
        for i in 0..2 {
            for j in 0..2 {
                assert!((got.entries()[(i, j)] - want[(i, j)]).norm() < 1e-15);
                let direct = rho.entries()[(i, j)] * sigma.trace();
                assert!((got.entries()[(i, j)] - direct).norm() < 1e-15);
            }
        }
    }

    #[test]
    fn partial_trace_sequential_equals_joint() {
        // Tracing {x} then {y} equals tracing {x, y}.
        let phi = LabeledVector::max_entangled(label("x", 2), label("y", 2)).unwrap();
        let z = diag(label("z", 3), &[0.1, 0.3, 0.6]);
        let w = tensor(&phi.outer(), &z).unwrap();
        let seq = partial_trace(&partial_trace(&w, &["x"]).unwrap(), &["y"]).unwrap();
        let joint = partial_trace(&w, &["x", "y"]).unwrap();
        assert!(seq.max_abs_diff(&joint).unwrap() < 1e-15);
    }

    #[test]
    fn partial_trace_unknown_label_errors() {
        let a = diag(label("x", 2), &[1.0, 0.0]);
        assert!(matches!(
            partial_trace(&a, &["nope"]),
            Err(Error::UnknownLabel(_))
        ));
    }

    #[test]
    fn permute_identity_order_is_noop() {
        let a = diag(label("x", 2), &[0.5, 0.5]);
        let b = diag(label("y", 3), &[0.1, 0.2, 0.7]);
        let t = tensor(&a, &b).unwrap();
        let p = permute(&t, &["x", "y"]).unwrap();
        assert_eq!(p, t);
    }

    #[test]
    fn permute_swaps_product_factors() {
        let a = diag(label("x", 2), &[0.5, 0.5]);
        let b = diag(label("y", 3), &[0.1, 0.2, 0.7]);
        let ab = tensor(&a, &b).unwrap();
        let ba = tensor(&b, &a).unwrap();
        let p = permute(&ab, &["y", "x"]).unwrap();
        assert!(p.max_abs_diff(&ba).unwrap() < 1e-15);
    }

    #[test]
    fn permute_round_trip_is_identity() {
        let phi = LabeledVector::max_entangled(label("x", 2), label("y", 2)).unwrap();
        let z = diag(label("z", 3), &[0.1, 0.3, 0.6]);
        let w = tensor(&phi.outer(), &z).unwrap();
        let p = permute(&w, &["z", "x", "y"]).unwrap();
        let back = permute(&p, &["x", "y", "z"]).unwrap();
        assert!(back.max_abs_diff(&w).unwrap() < 1e-15);
    }

    #[test]
    fn permute_rejects_non_permutations() {
        let a = diag(label("x", 2), &[0.5, 0.5]);
        let b = diag(label("y", 3), &[0.1, 0.2, 0.7]);
        let t = tensor(&a, &b).unwrap();
        assert!(matches!(
            permute(&t, &["x", "x"]),
            Err(Error::BadPermutation(_))
        ));
        assert!(matches!(permute(&t, &["x"]), Err(Error::BadPermutation(_))));
    }

    #[test]
    fn permute_preserves_spectrum() {
        let phi = LabeledVector::max_entangled(label("x", 2), label("y", 2)).unwrap();
        let z = diag(label("z", 2), &[0.3, 0.7]);
        let w = tensor(&phi.outer(), &z).unwrap();
        let p = permute(&w, &["z", "y", "x"]).unwrap();
        let ev_w = w.hermitian_eigenvalues();
        let ev_p = p.hermitian_eigenvalues();
        for (a, b) in ev_w.iter().zip(ev_p.iter()) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn is_psd_accepts_states_and_rejects_negatives() {
        let pi = LabeledOperator::maximally_mixed(label("x", 2));
        assert!(is_psd(&pi, 1e-9));

        let neg = diag(label("x", 2), &[1.0, -1e-3]);
        assert!(!is_psd(&neg, 1e-9));

        let phi = LabeledVector::max_entangled(label("x", 2), label("y", 2)).unwrap();
        assert!(is_psd(&phi.outer(), 1e-9));
    }

    #[test]
    fn is_psd_rejects_non_hermitian() {
        let mut m = DMatrix::zeros(2, 2);
        m[(0, 1)] = c64(1.0, 0.0); // strictly upper triangular
        let w = LabeledOperator::new(vec![label("x", 2)], m).unwrap();
        assert!(!is_psd(&w, 1e-9));
    }

    #[test]
    fn trace_of_tensor_is_product_of_traces() {
        let a = diag(label("x", 2), &[0.2, 0.9]);
        let b = diag(label("y", 3), &[0.1, 0.4, 0.3]);
        let t = tensor(&a, &b).unwrap();
        let lhs = t.trace();
        let rhs = a.trace() * b.trace();
        assert!((lhs - rhs).norm() < 1e-10 * rhs.norm().max(1.0));
    }

    #[test]
    fn vector_trace_out_matches_outer_then_partial_trace() {
        let phi = LabeledVector::max_entangled(label("x", 2), label("y", 2)).unwrap();
        let e = LabeledVector::basis(label("z", 3), 1).unwrap();
        let v = phi.tensor(&e).unwrap();
        let via_outer = partial_trace(&v.outer(), &["y", "z"]).unwrap();
        let via_gram = v.trace_out(&["y", "z"]).unwrap();
        assert!(via_gram.max_abs_diff(&via_outer).unwrap() < 1e-15);
    }

    #[test]
    fn apply_local_identity_is_noop_up_to_reorder() {
        let phi = LabeledVector::max_entangled(label("x", 2), label("y", 2)).unwrap();
        let id = DMatrix::identity(2, 2);
        let out = phi.apply_local(&id, &["x"], vec![label("x", 2)]).unwrap();
        let back = out.permute(&["x", "y"]).unwrap();
        assert!((back.entries() - phi.entries()).norm() < 1e-15);
    }

    #[test]
    fn apply_local_contracts_rectangular_operators() {
        // Map |k⟩_x to |k⟩_u|0⟩_f (an isometry into a larger space) and
        // check the result against a hand-built expansion.
        let v = LabeledVector::basis(label("x", 2), 1).unwrap();
        let mut iso = DMatrix::zeros(4, 2); // x -> (u ⊗ f), f dim 2
        iso[(0, 0)] = c64(1.0, 0.0); // |0⟩ -> |00⟩
        iso[(2, 1)] = c64(1.0, 0.0); // |1⟩ -> |10⟩
        let out = v
            .apply_local(&iso, &["x"], vec![label("u", 2), label("f", 2)])
            .unwrap();
        assert_eq!(out.dim(), 4);
        assert!((out.entries()[2] - c64(1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn max_entangled_requires_equal_dims() {
        assert!(matches!(
            LabeledVector::max_entangled(label("x", 2), label("y", 3)),
            Err(Error::DimError(_))
        ));
    }

    #[test]
    fn registry_rejects_duplicates_and_zero_dims() {
        assert!(matches!(
            LabeledOperator::identity(vec![label("x", 2), label("x", 2)]),
            Err(Error::DuplicateLabel(_))
        ));
        assert!(SubsystemLabel::new("x", 0).is_err());
    }
}

//! Quantum tables from the trace rule `p_ij = tr(A_i ρ_j)`.
//!
//! Hermitian `N×N` operators form a real vector space of dimension `N²`.
//! Expanding states and POVM elements in a trace-orthonormal Hermitian basis
//! `{B_k}` turns the trace rule into the scalar product `r_i·s_j` of real
//! coefficient vectors. Complex arithmetic stays inside this module; only
//! real tables and vectors leave it.

use nalgebra::DMatrix;
use num_complex::Complex64;
use num_rational::BigRational;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::scalar::{snap_to_rational, DEFAULT_TOLERANCE};
use crate::table::{Measurement, MeasurementLayout, ProbabilityTable};

pub type CMatrix = DMatrix<Complex64>;

/// Tolerance for Hermiticity, trace, completeness and PSD checks.
pub const MODEL_TOLERANCE: f64 = 1e-10;
/// Maximum allowed `|tr(A ρ) − r·s|` on a generated table.
pub const TRACE_RULE_TOLERANCE: f64 = 1e-12;
/// Largest denominator accepted when snapping generated entries to rationals.
pub const SNAP_MAX_DENOMINATOR: i64 = 1_000_000;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Real part of `tr(a·b)`, the inner product on Hermitian matrices.
pub fn trace_inner(a: &CMatrix, b: &CMatrix) -> f64 {
    trace_product(a, b).re
}

fn trace_product(a: &CMatrix, b: &CMatrix) -> Complex64 {
    let n = a.nrows();
    let mut acc = c(0.0, 0.0);
    for i in 0..n {
        for k in 0..n {
            acc += a[(i, k)] * b[(k, i)];
        }
    }
    acc
}

fn hermiticity_defect(m: &CMatrix) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

pub fn is_hermitian(m: &CMatrix, tol: f64) -> bool {
    m.is_square() && hermiticity_defect(m) <= tol
}

/// Smallest eigenvalue of a Hermitian matrix.
pub fn min_eigenvalue(m: &CMatrix) -> f64 {
    m.clone()
        .symmetric_eigen()
        .eigenvalues
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
}

/// Canonical trace-orthonormal Hermitian basis of dimension `N²`: the
/// diagonal units `E_ii` in index order, then for each pair `i<j`
/// (lexicographic) the real symmetric `(E_ij + E_ji)/√2` followed by the
/// imaginary antisymmetric `i(E_ij − E_ji)/√2`.
pub fn hermitian_basis(dim: usize) -> Result<Vec<CMatrix>> {
    if dim == 0 {
        return Err(Error::InvalidModel("Hilbert-space dimension must be at least 1".into()));
    }
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let mut basis = Vec::with_capacity(dim * dim);
    for i in 0..dim {
        let mut e = CMatrix::zeros(dim, dim);
        e[(i, i)] = c(1.0, 0.0);
        basis.push(e);
    }
    for i in 0..dim {
        for j in i + 1..dim {
            let mut re = CMatrix::zeros(dim, dim);
            re[(i, j)] = c(h, 0.0);
            re[(j, i)] = c(h, 0.0);
            basis.push(re);
            let mut im = CMatrix::zeros(dim, dim);
            im[(i, j)] = c(0.0, h);
            im[(j, i)] = c(0.0, -h);
            basis.push(im);
        }
    }
    Ok(basis)
}

/// Orthonormalizes a Hermitian spanning set under `tr(A·B)` (modified
/// Gram–Schmidt). Vectors that are dependent on earlier ones are dropped.
pub fn gram_schmidt(spanning: &[CMatrix], dim: usize) -> Result<Vec<CMatrix>> {
    let needed = dim * dim;
    let mut out: Vec<CMatrix> = Vec::with_capacity(needed);
    for (idx, m) in spanning.iter().enumerate() {
        if m.nrows() != dim || m.ncols() != dim {
            return Err(Error::dims(dim, m.nrows()));
        }
        if !is_hermitian(m, MODEL_TOLERANCE) {
            return Err(Error::NotHermitian(format!("spanning element {idx}")));
        }
        let mut v = m.clone();
        // two passes keep the result orthogonal to working precision
        for _ in 0..2 {
            for b in &out {
                let proj = trace_inner(b, &v);
                v -= b * c(proj, 0.0);
            }
        }
        let norm = trace_inner(&v, &v).sqrt();
        if norm > 1e-10 {
            out.push(v / c(norm, 0.0));
        }
        if out.len() == needed {
            break;
        }
    }
    if out.len() < needed {
        return Err(Error::NotSpanning {
            rank: out.len(),
            needed,
        });
    }
    Ok(out)
}

/// Worst `|tr(B_k B_l) − δ_kl|` over all pairs.
pub fn orthonormality_defect(basis: &[CMatrix]) -> f64 {
    let mut worst = 0.0f64;
    for (k, bk) in basis.iter().enumerate() {
        for (l, bl) in basis.iter().enumerate() {
            let target = if k == l { 1.0 } else { 0.0 };
            worst = worst.max((trace_product(bk, bl) - c(target, 0.0)).norm());
        }
    }
    worst
}

#[derive(Debug, Clone)]
pub struct Povm {
    pub name: String,
    pub outcomes: Vec<String>,
    pub elements: Vec<CMatrix>,
}

#[derive(Debug, Clone)]
pub struct QuantumModel {
    dim: usize,
    state_names: Vec<String>,
    states: Vec<CMatrix>,
    povms: Vec<Povm>,
    basis: Vec<CMatrix>,
}

/// A generated table together with the real coefficient vectors.
#[derive(Debug, Clone)]
pub struct GeneratedTable {
    pub table: ProbabilityTable<f64>,
    /// `r_i`, one per table row.
    pub outcome_vectors: Vec<Vec<f64>>,
    /// `s_j`, one per table column.
    pub state_vectors: Vec<Vec<f64>>,
    /// `max |tr(A_i ρ_j) − r_i·s_j|`
    pub max_trace_deviation: f64,
}

impl QuantumModel {
    /// Builds a model on the canonical basis, checking every invariant.
    pub fn new(dim: usize, states: Vec<(String, CMatrix)>, povms: Vec<Povm>) -> Result<Self> {
        let basis = hermitian_basis(dim)?;
        Self::with_basis(dim, states, povms, basis)
    }

    pub fn with_basis(
        dim: usize,
        states: Vec<(String, CMatrix)>,
        povms: Vec<Povm>,
        basis: Vec<CMatrix>,
    ) -> Result<Self> {
        let (state_names, states): (Vec<_>, Vec<_>) = states.into_iter().unzip();
        let model = Self {
            dim,
            state_names,
            states,
            povms,
            basis,
        };
        model.validate()?;
        Ok(model)
    }

    fn validate(&self) -> Result<()> {
        let n = self.dim;
        let tol = MODEL_TOLERANCE;
        if n == 0 {
            return Err(Error::InvalidModel("dimension must be at least 1".into()));
        }
        if self.basis.len() != n * n {
            return Err(Error::InvalidModel(format!(
                "basis has {} elements, expected {}",
                self.basis.len(),
                n * n
            )));
        }
        let defect = orthonormality_defect(&self.basis);
        if defect > tol {
            return Err(Error::InvalidModel(format!(
                "basis is not trace-orthonormal (defect {defect:e})"
            )));
        }
        if self.states.is_empty() || self.povms.is_empty() {
            return Err(Error::InvalidModel("model needs at least one state and one POVM".into()));
        }
        for (name, rho) in self.state_names.iter().zip(&self.states) {
            let what = format!("state '{name}'");
            check_operator(rho, n, &what)?;
            let tr = rho.trace();
            if (tr - c(1.0, 0.0)).norm() > tol {
                return Err(Error::InvalidModel(format!("{what} has trace {tr}")));
            }
        }
        for povm in &self.povms {
            if povm.elements.is_empty() || povm.elements.len() != povm.outcomes.len() {
                return Err(Error::InvalidModel(format!(
                    "POVM '{}' has {} elements and {} outcome names",
                    povm.name,
                    povm.elements.len(),
                    povm.outcomes.len()
                )));
            }
            let mut sum = CMatrix::zeros(n, n);
            for (oname, e) in povm.outcomes.iter().zip(&povm.elements) {
                check_operator(e, n, &format!("element '{oname}' of POVM '{}'", povm.name))?;
                sum += e;
            }
            let gap = (sum - CMatrix::identity(n, n)).iter().map(|z| z.norm()).fold(0.0, f64::max);
            if gap > tol {
                return Err(Error::InvalidModel(format!(
                    "elements of POVM '{}' sum to the identity only within {gap:e}",
                    povm.name
                )));
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn basis(&self) -> &[CMatrix] {
        &self.basis
    }

    pub fn states(&self) -> &[CMatrix] {
        &self.states
    }

    pub fn state_names(&self) -> &[String] {
        &self.state_names
    }

    pub fn povms(&self) -> &[Povm] {
        &self.povms
    }

    /// Coefficients `c_k = tr(B_k·op)` of a Hermitian operator.
    pub fn vectorize(&self, op: &CMatrix) -> Result<Vec<f64>> {
        if op.nrows() != self.dim || op.ncols() != self.dim {
            return Err(Error::dims(self.dim, op.nrows()));
        }
        if !is_hermitian(op, MODEL_TOLERANCE) {
            return Err(Error::NotHermitian(format!(
                "defect {:e}",
                hermiticity_defect(op)
            )));
        }
        let mut coeffs = Vec::with_capacity(self.basis.len());
        for b in &self.basis {
            let z = trace_product(b, op);
            if z.im.abs() > MODEL_TOLERANCE {
                return Err(Error::NotHermitian(format!("coefficient has imaginary part {:e}", z.im)));
            }
            coeffs.push(z.re);
        }
        Ok(coeffs)
    }

    /// `Σ c_k B_k`
    pub fn reconstruct(&self, coeffs: &[f64]) -> Result<CMatrix> {
        if coeffs.len() != self.basis.len() {
            return Err(Error::dims(self.basis.len(), coeffs.len()));
        }
        let mut out = CMatrix::zeros(self.dim, self.dim);
        for (ck, b) in coeffs.iter().zip(&self.basis) {
            out += b * c(*ck, 0.0);
        }
        Ok(out)
    }

    pub fn layout(&self) -> Result<MeasurementLayout> {
        MeasurementLayout::new(
            self.povms
                .iter()
                .map(|p| Measurement::new(p.name.clone(), p.outcomes.clone()))
                .collect(),
        )
    }

    /// Table `p_ij = tr(A_i ρ_j)` plus the coefficient vectors, certified
    /// against the scalar-product form.
    pub fn generate_table(&self) -> Result<GeneratedTable> {
        let elements: Vec<&CMatrix> = self.povms.iter().flat_map(|p| &p.elements).collect();
        let labels: Vec<String> = self
            .povms
            .iter()
            .flat_map(|p| p.outcomes.iter().map(move |o| format!("{}/{o}", p.name)))
            .collect();
        let outcome_vectors = elements
            .iter()
            .zip(&labels)
            .map(|(e, label)| {
                self.vectorize(e)
                    .map_err(|err| Error::InvalidModel(format!("outcome '{label}': {err}")))
            })
            .collect::<Result<Vec<_>>>()?;
        let state_vectors = self
            .states
            .iter()
            .zip(&self.state_names)
            .map(|(rho, name)| {
                self.vectorize(rho)
                    .map_err(|err| Error::InvalidModel(format!("state '{name}': {err}")))
            })
            .collect::<Result<Vec<_>>>()?;

        let mut worst = 0.0f64;
        let entries = Matrix::from_fn(elements.len(), self.states.len(), |i, j| {
            let p = trace_product(elements[i], &self.states[j]).re;
            let scalar: f64 = outcome_vectors[i]
                .iter()
                .zip(&state_vectors[j])
                .map(|(r, s)| r * s)
                .sum();
            worst = worst.max((p - scalar).abs());
            p
        });
        if worst > TRACE_RULE_TOLERANCE {
            return Err(Error::InvalidModel(format!(
                "trace rule and scalar product disagree by {worst:e}"
            )));
        }
        let table = ProbabilityTable::new(
            self.layout()?,
            self.state_names.clone(),
            entries,
            DEFAULT_TOLERANCE,
        )?;
        Ok(GeneratedTable {
            table,
            outcome_vectors,
            state_vectors,
            max_trace_deviation: worst,
        })
    }
}

fn check_operator(m: &CMatrix, n: usize, what: &str) -> Result<()> {
    if m.nrows() != n || m.ncols() != n {
        return Err(Error::InvalidModel(format!(
            "{what} is {}×{}, expected {n}×{n}",
            m.nrows(),
            m.ncols()
        )));
    }
    let defect = hermiticity_defect(m);
    if defect > MODEL_TOLERANCE {
        return Err(Error::InvalidModel(format!("{what} is not Hermitian (defect {defect:e})")));
    }
    let low = min_eigenvalue(m);
    if low < -MODEL_TOLERANCE {
        return Err(Error::InvalidModel(format!(
            "{what} is not positive semidefinite (eigenvalue {low:e})"
        )));
    }
    Ok(())
}

/// Converts a float table to exact mode, snapping every entry to a nearby
/// small-denominator rational within `snap_tol`.
pub fn snap_table(table: &ProbabilityTable<f64>, snap_tol: f64) -> Result<ProbabilityTable<BigRational>> {
    let p = table.entries();
    let mut snapped = Vec::with_capacity(p.rows() * p.cols());
    for r in 0..p.rows() {
        for col in 0..p.cols() {
            let x = p[(r, col)];
            let q = snap_to_rational(x, snap_tol, SNAP_MAX_DENOMINATOR).ok_or_else(|| {
                Error::Validation(format!(
                    "entry at outcome {}, state '{}' ({x}) has no rational within {snap_tol:e}",
                    table.layout().row_label(r),
                    table.state_names()[col]
                ))
            })?;
            snapped.push(q);
        }
    }
    ProbabilityTable::new(
        table.layout().clone(),
        table.state_names().to_vec(),
        Matrix::from_vec(p.rows(), p.cols(), snapped)?,
        0.0,
    )
}

/// `|ψ⟩⟨ψ|` for an (unnormalized) vector.
pub fn projector(psi: &[Complex64]) -> CMatrix {
    let norm2: f64 = psi.iter().map(|z| z.norm_sqr()).sum();
    let n = psi.len();
    CMatrix::from_fn(n, n, |i, j| psi[i] * psi[j].conj() / norm2)
}

/// The standard qubit tomography model: states `|0⟩, |1⟩, |+⟩, |+i⟩`
/// measured in the Z, X and Y bases.
pub fn qubit_tomography_model() -> QuantumModel {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let zero = [c(1.0, 0.0), c(0.0, 0.0)];
    let one = [c(0.0, 0.0), c(1.0, 0.0)];
    let plus = [c(h, 0.0), c(h, 0.0)];
    let minus = [c(h, 0.0), c(-h, 0.0)];
    let plus_i = [c(h, 0.0), c(0.0, h)];
    let minus_i = [c(h, 0.0), c(0.0, -h)];
    let basis_povm = |name: &str, a: &[Complex64], b: &[Complex64], labels: [&str; 2]| Povm {
        name: name.into(),
        outcomes: labels.iter().map(|s| s.to_string()).collect(),
        elements: vec![projector(a), projector(b)],
    };
    QuantumModel::new(
        2,
        vec![
            ("0".into(), projector(&zero)),
            ("1".into(), projector(&one)),
            ("+".into(), projector(&plus)),
            ("+i".into(), projector(&plus_i)),
        ],
        vec![
            basis_povm("Z", &zero, &one, ["+z", "-z"]),
            basis_povm("X", &plus, &minus, ["+x", "-x"]),
            basis_povm("Y", &plus_i, &minus_i, ["+y", "-y"]),
        ],
    )
    .expect("qubit tomography model is valid")
}

fn random_complex_matrix<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> CMatrix {
    CMatrix::from_fn(dim, dim, |_, _| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
}

/// Random full-rank mixed state `G·G† / tr(G·G†)`.
pub fn random_density_matrix<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> CMatrix {
    let g = random_complex_matrix(rng, dim);
    let rho = &g * g.adjoint();
    let tr = rho.trace();
    hermitize(rho / tr)
}

/// Two-outcome POVM `{E, I − E}` with `E` a random PSD matrix scaled so that
/// `E ≤ I`.
pub fn random_two_outcome_povm<R: Rng + ?Sized>(rng: &mut R, dim: usize, name: &str) -> Povm {
    let g = random_complex_matrix(rng, dim);
    let gg = &g * g.adjoint();
    // tr(GG†) bounds the largest eigenvalue
    let scale = rng.gen_range(0.05..1.0) / gg.trace().re;
    let e = hermitize(gg * c(scale, 0.0));
    let complement = hermitize(CMatrix::identity(dim, dim) - &e);
    Povm {
        name: name.into(),
        outcomes: vec!["e".into(), "not-e".into()],
        elements: vec![e, complement],
    }
}

fn hermitize(m: CMatrix) -> CMatrix {
    (&m + m.adjoint()) * c(0.5, 0.0)
}

/// Random model with `states` mixed states and `povms` two-outcome POVMs.
pub fn random_model<R: Rng + ?Sized>(rng: &mut R, dim: usize, states: usize, povms: usize) -> Result<QuantumModel> {
    let st = (0..states)
        .map(|j| (format!("rho{}", j + 1), random_density_matrix(rng, dim)))
        .collect();
    let pv = (0..povms)
        .map(|i| random_two_outcome_povm(rng, dim, &format!("E{}", i + 1)))
        .collect();
    QuantumModel::new(dim, st, pv)
}

/// A matrix as row-major `[re, im]` entries, either flat or one list per row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MatrixEntries {
    Flat(Vec<[f64; 2]>),
    Rows(Vec<Vec<[f64; 2]>>),
}

impl MatrixEntries {
    fn flat(&self, dim: usize, what: &str) -> Result<Vec<[f64; 2]>> {
        match self {
            MatrixEntries::Flat(v) => Ok(v.clone()),
            MatrixEntries::Rows(rows) => {
                if let Some((i, row)) = rows.iter().enumerate().find(|(_, r)| r.len() != dim) {
                    return Err(Error::Syntax(format!(
                        "{what}: row {i} has {} entries, expected {dim}",
                        row.len()
                    )));
                }
                Ok(rows.concat())
            }
        }
    }
}

/// On-disk model description.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelFile {
    pub dim: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub state_names: Option<Vec<String>>,
    pub states: Vec<MatrixEntries>,
    pub povms: Vec<PovmFile>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PovmFile {
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub outcomes: Option<Vec<String>>,
    pub elements: Vec<MatrixEntries>,
}

fn matrix_from_file(entries: &MatrixEntries, dim: usize, what: &str) -> Result<CMatrix> {
    let entries = entries.flat(dim, what)?;
    if entries.len() != dim * dim {
        return Err(Error::Syntax(format!(
            "{what} has {} entries, expected {}",
            entries.len(),
            dim * dim
        )));
    }
    Ok(CMatrix::from_row_iterator(
        dim,
        dim,
        entries.iter().map(|[re, im]| c(*re, *im)),
    ))
}

fn matrix_to_file(m: &CMatrix) -> MatrixEntries {
    let n = m.nrows();
    MatrixEntries::Flat(
        (0..n)
            .flat_map(|i| (0..n).map(move |j| (i, j)))
            .map(|(i, j)| [m[(i, j)].re, m[(i, j)].im])
            .collect(),
    )
}

impl QuantumModel {
    pub fn from_json(input: &[u8]) -> Result<Self> {
        let file: ModelFile =
            serde_json::from_slice(input).map_err(|e| Error::Syntax(format!("quantum model: {e}")))?;
        let dim = file.dim;
        let names = file
            .state_names
            .unwrap_or_else(|| (1..=file.states.len()).map(|j| format!("rho{j}")).collect());
        if names.len() != file.states.len() {
            return Err(Error::Syntax(format!(
                "{} state names for {} states",
                names.len(),
                file.states.len()
            )));
        }
        let states = names
            .into_iter()
            .zip(&file.states)
            .map(|(name, m)| {
                let what = format!("state '{name}'");
                Ok((name, matrix_from_file(m, dim, &what)?))
            })
            .collect::<Result<Vec<_>>>()?;
        let povms = file
            .povms
            .iter()
            .map(|p| {
                let outcomes = p
                    .outcomes
                    .clone()
                    .unwrap_or_else(|| (1..=p.elements.len()).map(|i| format!("a{i}")).collect());
                let elements = p
                    .elements
                    .iter()
                    .enumerate()
                    .map(|(i, m)| matrix_from_file(m, dim, &format!("element {i} of POVM '{}'", p.name)))
                    .collect::<Result<Vec<_>>>()?;
                Ok(Povm {
                    name: p.name.clone(),
                    outcomes,
                    elements,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(dim, states, povms)
    }

    pub fn to_file(&self) -> ModelFile {
        ModelFile {
            dim: self.dim,
            state_names: Some(self.state_names.clone()),
            states: self.states.iter().map(matrix_to_file).collect(),
            povms: self
                .povms
                .iter()
                .map(|p| PovmFile {
                    name: p.name.clone(),
                    outcomes: Some(p.outcomes.clone()),
                    elements: p.elements.iter().map(matrix_to_file).collect(),
                })
                .collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    /// Independent oracle: `tr(A·B)` summed entry by entry from the
    /// definition, without going through the basis.
    fn naive_trace(a: &CMatrix, b: &CMatrix) -> Complex64 {
        let prod = a * b;
        (0..a.nrows()).map(|i| prod[(i, i)]).sum()
    }

    #[test]
    fn basis_dimension_one() {
        let b = hermitian_basis(1).unwrap();
        assert_eq!(b.len(), 1);
        assert_eq!(b[0][(0, 0)], c(1.0, 0.0));
    }

    #[test]
    fn basis_orthonormal_for_small_dims() {
        for n in 2..=4 {
            let b = hermitian_basis(n).unwrap();
            assert_eq!(b.len(), n * n);
            for (k, bk) in b.iter().enumerate() {
                assert!(is_hermitian(bk, 0.0));
                for (l, bl) in b.iter().enumerate() {
                    let t = naive_trace(bk, bl);
                    let want = if k == l { 1.0 } else { 0.0 };
                    assert!((t - c(want, 0.0)).norm() < 1e-15, "n={n} k={k} l={l} {t}");
                }
            }
        }
        assert!(hermitian_basis(0).is_err());
    }

    #[test]
    fn gram_schmidt_from_pauli_like_set() {
        // I, Z, X + I, Y: spans the qubit Hermitian space but is not orthonormal
        let i2 = CMatrix::identity(2, 2);
        let z = CMatrix::from_row_slice(2, 2, &[c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(-1.0, 0.0)]);
        let x = CMatrix::from_row_slice(2, 2, &[c(1.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), c(1.0, 0.0)]);
        let y = CMatrix::from_row_slice(2, 2, &[c(0.0, 0.0), c(0.0, -1.0), c(0.0, 1.0), c(0.0, 0.0)]);
        let b = gram_schmidt(&[i2.clone(), z.clone(), x, y], 2).unwrap();
        assert!(orthonormality_defect(&b) < 1e-12);

        let err = gram_schmidt(&[i2.clone(), z, i2 * c(2.0, 0.0)], 2).unwrap_err();
        assert_eq!(err, Error::NotSpanning { rank: 2, needed: 4 });
    }

    #[test]
    fn vectorize_examples() {
        let model = qubit_tomography_model();
        let id = CMatrix::identity(2, 2);
        assert_eq!(model.vectorize(&id).unwrap(), vec![1.0, 1.0, 0.0, 0.0]);
        let v0 = model.vectorize(&model.states()[0]).unwrap();
        assert_eq!(v0, vec![1.0, 0.0, 0.0, 0.0]);
        let vp = model.vectorize(&model.states()[2]).unwrap();
        let want = [0.5, 0.5, std::f64::consts::FRAC_1_SQRT_2, 0.0];
        for (a, b) in vp.iter().zip(want) {
            assert!((a - b).abs() < 1e-15, "{vp:?}");
        }
        let not_herm = CMatrix::from_row_slice(2, 2, &[c(0.0, 0.0), c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)]);
        assert!(matches!(model.vectorize(&not_herm), Err(Error::NotHermitian(_))));
    }

    #[test]
    fn vectorize_reconstruct_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for dim in [2, 3] {
            let model = random_model(&mut rng, dim, 2, 1).unwrap();
            for _ in 0..10 {
                let g = random_complex_matrix(&mut rng, dim);
                let h = hermitize(g);
                let back = model.reconstruct(&model.vectorize(&h).unwrap()).unwrap();
                assert!((back - h).iter().all(|z| z.norm() < 1e-12));
            }
        }
    }

    #[test]
    fn sharp_measurement_on_orthogonal_states() {
        let full = qubit_tomography_model();
        let model = QuantumModel::new(
            2,
            vec![
                ("0".into(), full.states()[0].clone()),
                ("1".into(), full.states()[1].clone()),
                ("+".into(), full.states()[2].clone()),
            ],
            vec![full.povms()[0].clone()],
        )
        .unwrap();
        let g = model.generate_table().unwrap();
        let p = g.table.entries();
        assert!((p[(0, 0)] - 1.0).abs() < 1e-15 && p[(0, 1)].abs() < 1e-15);
        assert!(p[(1, 0)].abs() < 1e-15 && (p[(1, 1)] - 1.0).abs() < 1e-15);
        assert!((p[(0, 2)] - 0.5).abs() < 1e-15 && (p[(1, 2)] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn qubit_table_snaps_to_halves() {
        let g = qubit_tomography_model().generate_table().unwrap();
        assert!(g.max_trace_deviation <= TRACE_RULE_TOLERANCE);
        let exact = snap_table(&g.table, 1e-9).unwrap();
        let text: Vec<String> = exact.entries().row(2).iter().map(|q| q.to_string()).collect();
        assert_eq!(text, ["1/2", "1/2", "1", "1/2"]);
    }

    #[test]
    fn invalid_models_rejected() {
        let full = qubit_tomography_model();
        let not_normalized = full.states()[0].clone() * c(2.0, 0.0);
        let err = QuantumModel::new(2, vec![("bad".into(), not_normalized)], vec![full.povms()[0].clone()])
            .unwrap_err();
        assert!(err.to_string().contains("state 'bad'"), "{err}");

        let mut incomplete = full.povms()[0].clone();
        incomplete.elements[1] = CMatrix::zeros(2, 2);
        let err = QuantumModel::new(2, vec![("0".into(), full.states()[0].clone())], vec![incomplete])
            .unwrap_err();
        assert!(err.to_string().contains("sum to the identity"), "{err}");

        // trace one, Hermitian, but with eigenvalues 1.5 and -0.5
        let negative = CMatrix::from_row_slice(2, 2, &[c(1.5, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(-0.5, 0.0)]);
        let err = QuantumModel::new(2, vec![("neg".into(), negative)], vec![full.povms()[0].clone()])
            .unwrap_err();
        assert!(err.to_string().contains("positive semidefinite"), "{err}");
    }

    #[test]
    fn model_file_round_trip() {
        let model = qubit_tomography_model();
        let json = serde_json::to_vec(&model.to_file()).unwrap();
        let back = QuantumModel::from_json(&json).unwrap();
        let a = model.generate_table().unwrap().table;
        let b = back.generate_table().unwrap().table;
        assert_eq!(a, b);
    }

    #[test]
    fn model_file_accepts_nested_rows() {
        let flat = r#"{"dim": 2, "states": [[[1,0],[0,0],[0,0],[0,0]]],
            "povms": [{"name": "Z", "elements": [[[1,0],[0,0],[0,0],[0,0]], [[0,0],[0,0],[0,0],[1,0]]]}]}"#;
        let nested = r#"{"dim": 2, "states": [[[[1,0],[0,0]],[[0,0],[0,0]]]],
            "povms": [{"name": "Z", "elements": [[[[1,0],[0,0]],[[0,0],[0,0]]], [[[0,0],[0,0]],[[0,0],[1,0]]]]}]}"#;
        let a = QuantumModel::from_json(flat.as_bytes()).unwrap().generate_table().unwrap().table;
        let b = QuantumModel::from_json(nested.as_bytes()).unwrap().generate_table().unwrap().table;
        assert_eq!(a, b);
        assert_eq!(a.state_names(), ["rho1"]);
        let ragged = r#"{"dim": 2, "states": [[[[1,0],[0,0]],[[0,0]]]], "povms": []}"#;
        let err = QuantumModel::from_json(ragged.as_bytes()).unwrap_err();
        assert!(err.to_string().contains("row 1 has 1 entries"), "{err}");
    }
}

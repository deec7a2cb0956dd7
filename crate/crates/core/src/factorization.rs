//! Rank factorization `p = t·u` of a probability table.
//!
//! A nonsingular `K×K` submatrix `a` of `p` is located by elimination. With
//! the remaining blocks `b` (pivot rows, other columns) and `c` (other rows,
//! pivot columns), the factors are
//!
//! ```text
//! t = ( a·x⁻¹ ; c·x⁻¹ )      u = ( x | x·a⁻¹·b )
//! ```
//!
//! with rows and columns dispersed back to the table's own order. `x` fixes
//! the vectors of the `K` pivot ("basis") states and defaults to the identity.

use crate::error::{Error, Result};
use crate::matrix::{dot, Matrix};
use crate::scalar::{Field, NumericMode};
use crate::table::ProbabilityTable;

/// A state's coordinates in `R^K`.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector<T> {
    pub coords: Vec<T>,
    pub label: String,
    /// Column of the originating table, if the vector came from one.
    pub index: Option<usize>,
}

/// An outcome's coordinates in `R^K`.
#[derive(Debug, Clone, PartialEq)]
pub struct OutcomeVector<T> {
    pub coords: Vec<T>,
    pub label: String,
}

impl<T: Field> StateVector<T> {
    pub fn new(coords: Vec<T>, label: impl Into<String>) -> Self {
        Self {
            coords,
            label: label.into(),
            index: None,
        }
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }
}

impl<T: Field> OutcomeVector<T> {
    pub fn new(coords: Vec<T>, label: impl Into<String>) -> Self {
        Self {
            coords,
            label: label.into(),
        }
    }

    pub fn zero(dim: usize) -> Self {
        Self::new(vec![T::zero(); dim], "o")
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }
}

/// Probability `r·s` of outcome `r` on state `s`.
pub fn probability<T: Field>(r: &OutcomeVector<T>, s: &StateVector<T>) -> Result<T> {
    if r.dim() != s.dim() {
        return Err(Error::dims(r.dim(), s.dim()));
    }
    Ok(dot(&r.coords, &s.coords))
}

/// How the free `K×K` matrix is fixed.
#[derive(Debug, Clone, PartialEq, Default)]
pub enum Basis<T> {
    /// Pivot states become the standard basis of `R^K`.
    #[default]
    Identity,
    /// Pivot states take the columns of the given nonsingular matrix.
    Matrix(Matrix<T>),
    /// The listed states are used as pivot columns and mapped to the standard
    /// basis, in the listed order.
    States(Vec<usize>),
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct FactorizeOptions<T> {
    pub basis: Basis<T>,
    /// Float mode only: overrides the singular-value rank threshold.
    pub rank_threshold: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Factorization<T> {
    rank: usize,
    t: Matrix<T>,
    u: Matrix<T>,
    x: Matrix<T>,
    pivot_rows: Vec<usize>,
    pivot_cols: Vec<usize>,
    a: Matrix<T>,
    b: Matrix<T>,
    c: Matrix<T>,
    tolerance: f64,
    outcome_labels: Vec<String>,
    state_labels: Vec<String>,
}

/// Rank `K` of the table.
pub fn rank_of<T: Field>(table: &ProbabilityTable<T>) -> Result<usize> {
    rank_with_threshold(table, None)
}

pub fn rank_with_threshold<T: Field>(table: &ProbabilityTable<T>, threshold: Option<f64>) -> Result<usize> {
    match T::matrix_rank(table.entries(), threshold) {
        0 => Err(Error::DegenerateTable),
        k => Ok(k),
    }
}

/// Factorizes with `x` as the basis matrix, or the identity when `None`.
pub fn factorize<T: Field>(table: &ProbabilityTable<T>, x: Option<&Matrix<T>>) -> Result<Factorization<T>> {
    let basis = x.map_or(Basis::Identity, |x| Basis::Matrix(x.clone()));
    factorize_with(
        table,
        &FactorizeOptions {
            basis,
            rank_threshold: None,
        },
    )
}

pub fn factorize_with<T: Field>(
    table: &ProbabilityTable<T>,
    options: &FactorizeOptions<T>,
) -> Result<Factorization<T>> {
    let p = table.entries();
    let k = rank_with_threshold(table, options.rank_threshold)?;
    let tol = table.tolerance();

    let (pivot_rows, pivot_cols, x) = match &options.basis {
        Basis::States(states) => {
            let (rows, cols) = pivots_for_states(table, k, states)?;
            (rows, cols, Matrix::identity(k))
        }
        Basis::Identity => {
            let (rows, cols) = pivots(p, k, tol, options.rank_threshold)?;
            (rows, cols, Matrix::identity(k))
        }
        Basis::Matrix(x) => {
            if x.rows() != k || x.cols() != k {
                return Err(Error::SingularBasis(format!(
                    "basis matrix is {}×{}, table rank is {k}",
                    x.rows(),
                    x.cols()
                )));
            }
            let (rows, cols) = pivots(p, k, tol, options.rank_threshold)?;
            (rows, cols, x.clone())
        }
    };

    let a = p.select(&pivot_rows, &pivot_cols);
    let a_inv = a
        .inverse(0.0)
        .ok_or_else(|| Error::InconsistentRank("pivot block is singular".into()))?;
    let x_inv = x
        .inverse(tol)
        .ok_or_else(|| Error::SingularBasis("basis matrix has zero determinant".into()))?;

    let all_rows: Vec<usize> = (0..p.rows()).collect();
    let all_cols: Vec<usize> = (0..p.cols()).collect();
    // t = p[:, pivots]·x⁻¹ stacks a·x⁻¹ over c·x⁻¹ in table row order.
    let t = p.select(&all_rows, &pivot_cols).mul(&x_inv)?;
    // u = x·a⁻¹·p[pivots, :] is (x | x·a⁻¹·b) in table column order.
    let mut u = x.mul(&a_inv)?.mul(&p.select(&pivot_rows, &all_cols))?;
    for (kk, &col) in pivot_cols.iter().enumerate() {
        for r in 0..k {
            u[(r, col)] = x[(r, kk)].clone();
        }
    }

    finish(table, k, t, u, x, pivot_rows, pivot_cols, a, options.rank_threshold)
}

/// Variant fixing the outcome vectors of the `K` pivot outcomes instead: the
/// pivot rows of `t` equal `v` (identity when `None`).
pub fn factorize_by_outcomes<T: Field>(
    table: &ProbabilityTable<T>,
    v: Option<&Matrix<T>>,
) -> Result<Factorization<T>> {
    let p = table.entries();
    let k = rank_of(table)?;
    let tol = table.tolerance();
    let v = v.cloned().unwrap_or_else(|| Matrix::identity(k));
    if v.rows() != k || v.cols() != k {
        return Err(Error::SingularBasis(format!(
            "outcome basis is {}×{}, table rank is {k}",
            v.rows(),
            v.cols()
        )));
    }
    let (pivot_rows, pivot_cols) = pivots(p, k, tol, None)?;
    let a = p.select(&pivot_rows, &pivot_cols);
    let a_inv = a
        .inverse(0.0)
        .ok_or_else(|| Error::InconsistentRank("pivot block is singular".into()))?;
    let v_inv = v
        .inverse(tol)
        .ok_or_else(|| Error::SingularBasis("outcome basis has zero determinant".into()))?;

    let all_rows: Vec<usize> = (0..p.rows()).collect();
    let all_cols: Vec<usize> = (0..p.cols()).collect();
    let mut t = p.select(&all_rows, &pivot_cols).mul(&a_inv)?.mul(&v)?;
    for (kk, &row) in pivot_rows.iter().enumerate() {
        for c in 0..k {
            t[(row, c)] = v[(kk, c)].clone();
        }
    }
    let u = v_inv.mul(&p.select(&pivot_rows, &all_cols))?;
    let x = u.select(&(0..k).collect::<Vec<_>>(), &pivot_cols);

    finish(table, k, t, u, x, pivot_rows, pivot_cols, a, None)
}

fn pivot_threshold<T: Field>(p: &Matrix<T>, tol: f64, rank_threshold: Option<f64>) -> f64 {
    if T::MODE == NumericMode::Exact {
        return 0.0;
    }
    let scale = p.max_abs();
    let svd_floor = rank_threshold.unwrap_or(p.rows().max(p.cols()) as f64 * f64::EPSILON * scale);
    svd_floor.max(tol * scale)
}

fn pivots<T: Field>(
    p: &Matrix<T>,
    k: usize,
    tol: f64,
    rank_threshold: Option<f64>,
) -> Result<(Vec<usize>, Vec<usize>)> {
    let found = T::select_pivots(p, k, pivot_threshold(p, tol, rank_threshold));
    if found.len() < k {
        return Err(Error::InconsistentRank(format!(
            "elimination found {} pivots above threshold but the rank is {k}",
            found.len()
        )));
    }
    Ok(found.into_iter().unzip())
}

fn pivots_for_states<T: Field>(
    table: &ProbabilityTable<T>,
    k: usize,
    states: &[usize],
) -> Result<(Vec<usize>, Vec<usize>)> {
    if states.len() != k {
        return Err(Error::SingularBasis(format!(
            "{} basis states given, table rank is {k}",
            states.len()
        )));
    }
    let names = table.state_names();
    for (i, &s) in states.iter().enumerate() {
        if s >= table.state_count() {
            return Err(Error::SingularBasis(format!("state index {s} out of range")));
        }
        if states[..i].contains(&s) {
            return Err(Error::SingularBasis(format!("state '{}' listed twice", names[s])));
        }
    }
    let p = table.entries();
    let all_rows: Vec<usize> = (0..p.rows()).collect();
    let sub = p.select(&all_rows, states);
    let found = T::select_pivots(&sub, k, pivot_threshold(p, table.tolerance(), None));
    if found.len() < k {
        let listed: Vec<&str> = states.iter().map(|&s| names[s].as_str()).collect();
        return Err(Error::SingularBasis(format!(
            "states [{}] are linearly dependent",
            listed.join(", ")
        )));
    }
    let mut rows: Vec<(usize, usize)> = found.into_iter().map(|(r, c)| (c, r)).collect();
    rows.sort();
    Ok((rows.into_iter().map(|(_, r)| r).collect(), states.to_vec()))
}

#[allow(clippy::too_many_arguments)]
fn finish<T: Field>(
    table: &ProbabilityTable<T>,
    rank: usize,
    t: Matrix<T>,
    u: Matrix<T>,
    x: Matrix<T>,
    pivot_rows: Vec<usize>,
    pivot_cols: Vec<usize>,
    a: Matrix<T>,
    rank_threshold: Option<f64>,
) -> Result<Factorization<T>> {
    let p = table.entries();
    let other_rows: Vec<usize> = (0..p.rows()).filter(|r| !pivot_rows.contains(r)).collect();
    let other_cols: Vec<usize> = (0..p.cols()).filter(|c| !pivot_cols.contains(c)).collect();
    let f = Factorization {
        rank,
        b: p.select(&pivot_rows, &other_cols),
        c: p.select(&other_rows, &pivot_cols),
        a,
        t,
        u,
        x,
        pivot_rows,
        pivot_cols,
        tolerance: table.tolerance(),
        outcome_labels: (0..p.rows()).map(|r| table.layout().row_label(r)).collect(),
        state_labels: table.state_names().to_vec(),
    };
    let residual = f.reconstruction_error(p);
    match T::MODE {
        NumericMode::Exact => {
            if residual != 0.0 {
                return Err(Error::Invariant(format!("t·u differs from p by {residual}")));
            }
        }
        NumericMode::Float => {
            let allowed = table.tolerance().max(rank_threshold.unwrap_or(0.0));
            if residual > allowed {
                return Err(Error::InconsistentRank(format!(
                    "t·u reproduces p only to {residual:e} (tolerance {allowed:e})"
                )));
            }
        }
    }
    Ok(f)
}

impl<T: Field> Factorization<T> {
    /// Rank `K`.
    pub fn rank(&self) -> usize {
        self.rank
    }

    /// `L×K`, one outcome vector per row.
    pub fn t(&self) -> &Matrix<T> {
        &self.t
    }

    /// `K×M`, one state vector per column.
    pub fn u(&self) -> &Matrix<T> {
        &self.u
    }

    pub fn x(&self) -> &Matrix<T> {
        &self.x
    }

    pub fn pivot_rows(&self) -> &[usize] {
        &self.pivot_rows
    }

    pub fn pivot_cols(&self) -> &[usize] {
        &self.pivot_cols
    }

    pub fn a(&self) -> &Matrix<T> {
        &self.a
    }

    pub fn b(&self) -> &Matrix<T> {
        &self.b
    }

    pub fn c(&self) -> &Matrix<T> {
        &self.c
    }

    pub fn tolerance(&self) -> f64 {
        self.tolerance
    }

    pub fn state_count(&self) -> usize {
        self.u.cols()
    }

    pub fn outcome_count(&self) -> usize {
        self.t.rows()
    }

    pub fn state_labels(&self) -> &[String] {
        &self.state_labels
    }

    pub fn outcome_labels(&self) -> &[String] {
        &self.outcome_labels
    }

    pub fn state_vector(&self, j: usize) -> StateVector<T> {
        StateVector {
            coords: self.u.col(j),
            label: self.state_labels[j].clone(),
            index: Some(j),
        }
    }

    pub fn outcome_vector(&self, i: usize) -> OutcomeVector<T> {
        OutcomeVector::new(self.t.row(i).to_vec(), self.outcome_labels[i].clone())
    }

    pub fn state_vectors(&self) -> Vec<StateVector<T>> {
        (0..self.state_count()).map(|j| self.state_vector(j)).collect()
    }

    pub fn outcome_vectors(&self) -> Vec<OutcomeVector<T>> {
        (0..self.outcome_count()).map(|i| self.outcome_vector(i)).collect()
    }

    /// `t·u`
    pub fn reconstruct(&self) -> Matrix<T> {
        self.t.mul(&self.u).expect("t and u share the inner dimension K")
    }

    /// `‖p − t·u‖_max`
    pub fn reconstruction_error(&self, p: &Matrix<T>) -> f64 {
        self.reconstruct().max_abs_diff(p)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::scalar::ratio;
    use num_rational::BigRational;

    fn q(x: i64) -> BigRational {
        ratio(x, 1)
    }

    #[test]
    fn classical_bit_identity_factorization() {
        let t = fixtures::classical(2);
        assert_eq!(rank_of(&t).unwrap(), 2);
        let f = factorize(&t, None).unwrap();
        assert_eq!(f.t(), &Matrix::identity(2));
        assert_eq!(f.u(), &Matrix::identity(2));
        assert_eq!(f.state_vector(0).coords, vec![q(1), q(0)]);
        assert_eq!(f.outcome_vector(1).coords, vec![q(0), q(1)]);
    }

    #[test]
    fn bit_with_mixture() {
        let t = fixtures::bit_with_mixture();
        assert_eq!(rank_of(&t).unwrap(), 2);
        let f = factorize(&t, None).unwrap();
        assert_eq!(f.state_vector(2).coords, vec![ratio(1, 2), ratio(1, 2)]);
        assert_eq!(f.outcome_vector(0).coords, vec![q(1), q(0)]);
        assert_eq!(f.outcome_vector(1).coords, vec![q(0), q(1)]);
        assert_eq!(&f.reconstruct(), t.entries());
    }

    #[test]
    fn probability_of_vectors() {
        let r = OutcomeVector::new(vec![q(1), q(0)], "r");
        let s0 = StateVector::new(vec![q(0), q(1)], "s");
        let s1 = StateVector::new(vec![q(1), q(0)], "s");
        assert_eq!(probability(&r, &s0).unwrap(), q(0));
        assert_eq!(probability(&r, &s1).unwrap(), q(1));
        let short = StateVector::new(vec![q(1)], "s");
        assert!(matches!(probability(&r, &short), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn custom_basis_matrix() {
        let t = fixtures::bit_with_mixture();
        let x = Matrix::from_rows(&[vec![q(2), q(1)], vec![q(1), q(1)]], 0).unwrap();
        let f = factorize(&t, Some(&x)).unwrap();
        assert_eq!(f.x(), &x);
        assert_eq!(f.u().select(&[0, 1], f.pivot_cols()), x);
        assert_eq!(&f.reconstruct(), t.entries());
    }

    #[test]
    fn singular_basis_rejected() {
        let t = fixtures::classical(2);
        let x = Matrix::from_rows(&[vec![q(1), q(2)], vec![q(2), q(4)]], 0).unwrap();
        assert!(matches!(factorize(&t, Some(&x)), Err(Error::SingularBasis(_))));
        let wrong = Matrix::<BigRational>::identity(3);
        assert!(matches!(factorize(&t, Some(&wrong)), Err(Error::SingularBasis(_))));
    }

    #[test]
    fn basis_by_state_names() {
        let t = fixtures::bit_with_mixture();
        let opts = FactorizeOptions {
            basis: Basis::States(vec![2, 0]),
            rank_threshold: None,
        };
        let f = factorize_with(&t, &opts).unwrap();
        assert_eq!(f.pivot_cols(), &[2, 0]);
        assert_eq!(f.state_vector(2).coords, vec![q(1), q(0)]);
        assert_eq!(f.state_vector(0).coords, vec![q(0), q(1)]);
        assert_eq!(&f.reconstruct(), t.entries());

        let dup = FactorizeOptions {
            basis: Basis::States(vec![0, 0]),
            rank_threshold: None,
        };
        assert!(matches!(factorize_with(&t, &dup), Err(Error::SingularBasis(_))));
    }

    #[test]
    fn dependent_basis_states_rejected() {
        let t = fixtures::classical(3)
            .add_mixture_state("m", &[(0, ratio(1, 2)), (1, ratio(1, 2))])
            .unwrap();
        let opts = FactorizeOptions {
            basis: Basis::States(vec![0, 1, 3]),
            rank_threshold: None,
        };
        let err = factorize_with(&t, &opts).unwrap_err();
        assert!(err.to_string().contains("linearly dependent"), "{err}");
    }

    #[test]
    fn outcome_variant_fixes_pivot_rows() {
        let t = fixtures::qubit_tomography_exact();
        let f = factorize_by_outcomes(&t, None).unwrap();
        for (k, &row) in f.pivot_rows().iter().enumerate() {
            let mut e = vec![q(0); 4];
            e[k] = q(1);
            assert_eq!(f.outcome_vector(row).coords, e);
        }
        assert_eq!(&f.reconstruct(), t.entries());
    }

    #[test]
    fn qubit_tomography_vectors() {
        let t = fixtures::qubit_tomography_exact();
        assert_eq!(rank_of(&t).unwrap(), 4);
        let f = factorize(&t, None).unwrap();
        for (k, &col) in f.pivot_cols().iter().enumerate() {
            let mut e = vec![q(0); 4];
            e[k] = q(1);
            assert_eq!(f.state_vector(col).coords, e);
        }
        for i in 0..6 {
            for j in 0..4 {
                let p = probability(&f.outcome_vector(i), &f.state_vector(j)).unwrap();
                assert_eq!(p, t.entries()[(i, j)]);
            }
        }
    }

    #[test]
    fn float_mode_factorization() {
        let t = fixtures::qubit_tomography_float();
        assert_eq!(rank_of(&t).unwrap(), 4);
        let f = factorize(&t, None).unwrap();
        assert!(f.reconstruction_error(t.entries()) <= 1e-10);
    }
}

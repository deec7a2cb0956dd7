//! Dense row-major matrices over a [`Field`], plus the elimination kernels
//! used for rank and pivot selection.

use std::fmt;
use std::ops::{Index, IndexMut};

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::scalar::Field;

#[derive(Clone, PartialEq)]
pub struct Matrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: fmt::Debug> fmt::Debug for Matrix<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut list = f.debug_list();
        for r in 0..self.rows {
            list.entry(&&self.data[r * self.cols..(r + 1) * self.cols]);
        }
        list.finish()
    }
}

impl<T> Index<(usize, usize)> for Matrix<T> {
    type Output = T;

    fn index(&self, (r, c): (usize, usize)) -> &T {
        debug_assert!(r < self.rows && c < self.cols);
        &self.data[r * self.cols + c]
    }
}

impl<T> IndexMut<(usize, usize)> for Matrix<T> {
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut T {
        debug_assert!(r < self.rows && c < self.cols);
        &mut self.data[r * self.cols + c]
    }
}

impl<T> Matrix<T> {
    pub fn from_vec(rows: usize, cols: usize, data: Vec<T>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::dims(rows * cols, data.len()));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                data.push(f(r, c));
            }
        }
        Self { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, r: usize) -> &[T] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn row_iter(&self) -> impl Iterator<Item = &[T]> {
        (0..self.rows).map(move |r| self.row(r))
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn map<U>(&self, f: impl FnMut(&T) -> U) -> Matrix<U> {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(f).collect(),
        }
    }
}

impl<T: Clone> Matrix<T> {
    /// Builds a matrix from equal-length rows; `cols` is used when `rows` is empty.
    pub fn from_rows(rows: &[Vec<T>], cols: usize) -> Result<Self> {
        let cols = rows.first().map_or(cols, Vec::len);
        let mut data = Vec::with_capacity(rows.len() * cols);
        for row in rows {
            if row.len() != cols {
                return Err(Error::dims(cols, row.len()));
            }
            data.extend_from_slice(row);
        }
        Ok(Self {
            rows: rows.len(),
            cols,
            data,
        })
    }

    pub fn col(&self, c: usize) -> Vec<T> {
        (0..self.rows).map(|r| self[(r, c)].clone()).collect()
    }

    pub fn to_rows(&self) -> Vec<Vec<T>> {
        self.row_iter().map(<[T]>::to_vec).collect()
    }

    pub fn to_cols(&self) -> Vec<Vec<T>> {
        (0..self.cols).map(|c| self.col(c)).collect()
    }

    pub fn from_cols(cols: &[Vec<T>], rows: usize) -> Result<Self> {
        Ok(Self::from_rows(cols, rows)?.transpose())
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |r, c| self[(c, r)].clone())
    }

    /// Submatrix with the given rows and columns, in the given order.
    pub fn select(&self, rows: &[usize], cols: &[usize]) -> Self {
        Self::from_fn(rows.len(), cols.len(), |r, c| self[(rows[r], cols[c])].clone())
    }

    pub fn append_col(&self, col: &[T]) -> Result<Self> {
        if col.len() != self.rows {
            return Err(Error::dims(self.rows, col.len()));
        }
        Ok(Self::from_fn(self.rows, self.cols + 1, |r, c| {
            if c < self.cols {
                self[(r, c)].clone()
            } else {
                col[r].clone()
            }
        }))
    }
}

impl<T: Field> Matrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self::from_fn(rows, cols, |_, _| T::zero())
    }

    pub fn identity(n: usize) -> Self {
        Self::from_fn(n, n, |r, c| if r == c { T::one() } else { T::zero() })
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn mul(&self, rhs: &Self) -> Result<Self> {
        if self.cols != rhs.rows {
            return Err(Error::dims(self.cols, rhs.rows));
        }
        let mut out = Self::zeros(self.rows, rhs.cols);
        for r in 0..self.rows {
            for k in 0..self.cols {
                let a = &self[(r, k)];
                if a.is_zero() {
                    continue;
                }
                for c in 0..rhs.cols {
                    let prod = a.clone() * rhs[(k, c)].clone();
                    out[(r, c)] = out[(r, c)].clone() + prod;
                }
            }
        }
        Ok(out)
    }

    pub fn mul_vec(&self, v: &[T]) -> Result<Vec<T>> {
        if self.cols != v.len() {
            return Err(Error::dims(self.cols, v.len()));
        }
        Ok(self.row_iter().map(|row| dot(row, v)).collect())
    }

    /// `vᵀ·self`
    pub fn vec_mul(&self, v: &[T]) -> Result<Vec<T>> {
        if self.rows != v.len() {
            return Err(Error::dims(self.rows, v.len()));
        }
        Ok((0..self.cols)
            .map(|c| {
                (0..self.rows).fold(T::zero(), |acc, r| acc + v[r].clone() * self[(r, c)].clone())
            })
            .collect())
    }

    pub fn add(&self, rhs: &Self) -> Result<Self> {
        if self.rows != rhs.rows || self.cols != rhs.cols {
            return Err(Error::dims(self.rows * self.cols, rhs.rows * rhs.cols));
        }
        Ok(Self::from_fn(self.rows, self.cols, |r, c| {
            self[(r, c)].clone() + rhs[(r, c)].clone()
        }))
    }

    pub fn scale(&self, k: &T) -> Self {
        self.map(|x| x.clone() * k.clone())
    }

    /// Largest absolute entry difference, as a float.
    pub fn max_abs_diff(&self, rhs: &Self) -> f64 {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        self.data
            .iter()
            .zip(&rhs.data)
            .map(|(a, b)| (a.clone() - b.clone()).abs().to_f64())
            .fold(0.0, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|x| x.abs().to_f64()).fold(0.0, f64::max)
    }

    /// Gauss–Jordan inverse. Returns `None` when a pivot is negligible.
    pub fn inverse(&self, tol: f64) -> Option<Self> {
        if !self.is_square() {
            return None;
        }
        let n = self.rows;
        let mut a = self.clone();
        let mut inv = Self::identity(n);
        for c in 0..n {
            let mut best = None::<usize>;
            for r in c..n {
                if a[(r, c)].is_negligible(tol) {
                    continue;
                }
                match best {
                    None => best = Some(r),
                    Some(b) if T::MODE == crate::scalar::NumericMode::Float
                        && a[(r, c)].abs() > a[(b, c)].abs() =>
                    {
                        best = Some(r)
                    }
                    _ => {}
                }
            }
            let p = best?;
            a.swap_rows(p, c);
            inv.swap_rows(p, c);
            let pivot = a[(c, c)].clone();
            for j in 0..n {
                a[(c, j)] = a[(c, j)].clone() / pivot.clone();
                inv[(c, j)] = inv[(c, j)].clone() / pivot.clone();
            }
            for r in 0..n {
                if r == c || a[(r, c)].is_zero() {
                    continue;
                }
                let factor = a[(r, c)].clone();
                for j in 0..n {
                    let da = factor.clone() * a[(c, j)].clone();
                    a[(r, j)] = a[(r, j)].clone() - da;
                    let di = factor.clone() * inv[(c, j)].clone();
                    inv[(r, j)] = inv[(r, j)].clone() - di;
                }
            }
        }
        Some(inv)
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for c in 0..self.cols {
            self.data.swap(a * self.cols + c, b * self.cols + c);
        }
    }
}

pub fn dot<T: Field>(a: &[T], b: &[T]) -> T {
    debug_assert_eq!(a.len(), b.len());
    a.iter()
        .zip(b)
        .fold(T::zero(), |acc, (x, y)| acc + x.clone() * y.clone())
}

pub fn max_abs_vec_diff<T: Field>(a: &[T], b: &[T]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x.clone() - y.clone()).abs().to_f64())
        .fold(0.0, f64::max)
}

/// Pivot positions `(row, col)` of a row-echelon reduction, in column order.
pub type PivotList = Vec<(usize, usize)>;

/// Fraction-free (Bareiss) elimination over the integers.
///
/// Each row is first scaled by the lcm of its denominators, which leaves the
/// zero pattern of every minor unchanged. Columns are scanned left to right;
/// within a column the lowest-indexed remaining row with a nonzero entry is the
/// pivot. At most `limit` pivots are taken.
pub fn bareiss_pivots(m: &Matrix<BigRational>, limit: usize) -> PivotList {
    let mut work: Vec<Vec<BigInt>> = m
        .row_iter()
        .map(|row| {
            let lcm = row
                .iter()
                .fold(BigInt::one(), |acc, q| acc.lcm(q.denom()));
            row.iter()
                .map(|q| q.numer() * (&lcm / q.denom()))
                .collect()
        })
        .collect();
    let mut used = vec![false; m.rows()];
    let mut pivots = PivotList::new();
    let mut prev = BigInt::one();
    for c in 0..m.cols() {
        if pivots.len() == limit {
            break;
        }
        let Some(p) = (0..m.rows()).find(|&r| !used[r] && !work[r][c].is_zero()) else {
            continue;
        };
        used[p] = true;
        pivots.push((p, c));
        let pivot_row = work[p].clone();
        for r in 0..m.rows() {
            if used[r] {
                continue;
            }
            let lead = work[r][c].clone();
            for j in c..m.cols() {
                let num = &pivot_row[c] * &work[r][j] - &lead * &pivot_row[j];
                debug_assert!((&num % &prev).is_zero());
                work[r][j] = num / &prev;
            }
        }
        prev = pivot_row[c].clone();
    }
    pivots
}

/// Gaussian elimination with partial pivoting in binary64. A column is skipped
/// when no remaining entry exceeds `threshold` in magnitude; ties on magnitude
/// go to the lowest row index.
pub fn partial_pivots(m: &Matrix<f64>, limit: usize, threshold: f64) -> PivotList {
    let mut work = m.clone();
    let mut used = vec![false; m.rows()];
    let mut pivots = PivotList::new();
    for c in 0..m.cols() {
        if pivots.len() == limit {
            break;
        }
        let mut best: Option<usize> = None;
        for r in (0..m.rows()).filter(|&r| !used[r]) {
            let v = work[(r, c)].abs();
            if v > threshold && best.is_none_or(|b| v > work[(b, c)].abs()) {
                best = Some(r);
            }
        }
        let Some(p) = best else { continue };
        used[p] = true;
        pivots.push((p, c));
        for r in 0..m.rows() {
            if used[r] || work[(r, c)] == 0.0 {
                continue;
            }
            let factor = work[(r, c)] / work[(p, c)];
            for j in c..m.cols() {
                work[(r, j)] -= factor * work[(p, j)];
            }
        }
    }
    pivots
}

/// Singular values of a float matrix, largest first.
pub fn singular_values(m: &Matrix<f64>) -> Vec<f64> {
    if m.rows() == 0 || m.cols() == 0 {
        return Vec::new();
    }
    let dm = nalgebra::DMatrix::from_row_slice(m.rows(), m.cols(), m.as_slice());
    let mut sv: Vec<f64> = dm.singular_values().iter().copied().collect();
    sv.sort_by(|a, b| b.total_cmp(a));
    sv
}

/// Default numerical-rank threshold `max(L, M)·ε·σ_max`.
pub fn default_rank_threshold(rows: usize, cols: usize, sigma_max: f64) -> f64 {
    rows.max(cols) as f64 * f64::EPSILON * sigma_max
}

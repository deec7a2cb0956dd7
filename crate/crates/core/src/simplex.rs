//! Two-phase simplex method with Bland's rule.
//!
//! Solves `maximize c·x subject to A·x = b, x ≥ 0`. Bland's smallest-index
//! rule for both the entering and the leaving variable rules out cycling, so
//! the method terminates without randomization. Over exact rationals every
//! comparison is literal; in float mode comparisons against zero use the
//! given tolerance.

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::scalar::Field;

pub const DEFAULT_MAX_ITERATIONS: usize = 100_000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimplexOptions {
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for SimplexOptions {
    fn default() -> Self {
        Self {
            tolerance: 0.0,
            max_iterations: DEFAULT_MAX_ITERATIONS,
        }
    }
}

impl SimplexOptions {
    pub fn with_tolerance(tolerance: f64) -> Self {
        Self {
            tolerance,
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum LpOutcome<T> {
    Infeasible,
    Unbounded,
    Optimal { x: Vec<T>, value: T },
}

struct Tableau<T> {
    rows: Vec<Vec<T>>,
    obj: Vec<T>,
    basis: Vec<usize>,
    /// columns allowed to enter the basis
    active: usize,
    tol: f64,
    iterations: usize,
    max_iterations: usize,
}

fn positive<T: Field>(x: &T, tol: f64) -> bool {
    x.is_positive() && !x.is_negligible(tol)
}

impl<T: Field> Tableau<T> {
    fn rhs(&self) -> usize {
        self.obj.len() - 1
    }

    fn pivot(&mut self, r: usize, c: usize) {
        let rhs = self.rhs();
        let p = self.rows[r][c].clone();
        for x in self.rows[r].iter_mut() {
            *x = x.clone() / p.clone();
        }
        let pivot_row = self.rows[r].clone();
        let eliminate = |row: &mut Vec<T>| {
            let factor = row[c].clone();
            if factor.is_zero() {
                return;
            }
            for (x, pr) in row.iter_mut().zip(&pivot_row).take(rhs + 1) {
                *x = x.clone() - factor.clone() * pr.clone();
            }
        };
        for (i, row) in self.rows.iter_mut().enumerate() {
            if i != r {
                eliminate(row);
            }
        }
        eliminate(&mut self.obj);
        self.basis[r] = c;
    }

    /// Recomputes reduced costs for objective `cost` (indexed by column).
    fn set_objective(&mut self, cost: &[T]) {
        let rhs = self.rhs();
        let mut obj: Vec<T> = cost.to_vec();
        obj.resize(rhs + 1, T::zero());
        for (row, &b) in self.rows.iter().zip(&self.basis) {
            let cb = &cost[b];
            if cb.is_zero() {
                continue;
            }
            for (o, x) in obj.iter_mut().zip(row) {
                *o = o.clone() - cb.clone() * x.clone();
            }
        }
        self.obj = obj;
    }

    /// Runs Bland's-rule iterations. Returns `false` if unbounded.
    fn run(&mut self) -> Result<bool> {
        let rhs = self.rhs();
        loop {
            let Some(enter) = (0..self.active).find(|&j| positive(&self.obj[j], self.tol)) else {
                return Ok(true);
            };
            let mut leave: Option<(usize, T)> = None;
            for (i, row) in self.rows.iter().enumerate() {
                if !positive(&row[enter], self.tol) {
                    continue;
                }
                let ratio = row[rhs].clone() / row[enter].clone();
                let better = match &leave {
                    None => true,
                    Some((best_i, best)) => {
                        if ratio.approx_eq(best, self.tol) {
                            self.basis[i] < self.basis[*best_i]
                        } else {
                            ratio < *best
                        }
                    }
                };
                if better {
                    leave = Some((i, ratio));
                }
            }
            let Some((r, _)) = leave else { return Ok(false) };
            self.iterations += 1;
            if self.iterations > self.max_iterations {
                return Err(Error::SolverFailure(format!(
                    "no convergence within {} pivots",
                    self.max_iterations
                )));
            }
            self.pivot(r, enter);
        }
    }

    fn value(&self) -> T {
        -self.obj[self.rhs()].clone()
    }
}

/// Maximizes `c·x` over `{x ≥ 0 : A·x = b}`.
pub fn maximize<T: Field>(a: &Matrix<T>, b: &[T], c: &[T], options: SimplexOptions) -> Result<LpOutcome<T>> {
    let (m, n) = (a.rows(), a.cols());
    if b.len() != m {
        return Err(Error::dims(m, b.len()));
    }
    if c.len() != n {
        return Err(Error::dims(n, c.len()));
    }
    let tol = options.tolerance;

    // rows with b ≥ 0, then artificials n..n+m
    let mut rows = Vec::with_capacity(m);
    for i in 0..m {
        let flip = b[i].is_negative();
        let mut row: Vec<T> = Vec::with_capacity(n + m + 1);
        for j in 0..n {
            let x = a[(i, j)].clone();
            row.push(if flip { -x } else { x });
        }
        for k in 0..m {
            row.push(if k == i { T::one() } else { T::zero() });
        }
        row.push(if flip { -b[i].clone() } else { b[i].clone() });
        rows.push(row);
    }
    let mut tab = Tableau {
        rows,
        obj: vec![T::zero(); n + m + 1],
        basis: (n..n + m).collect(),
        active: n + m,
        tol,
        iterations: 0,
        max_iterations: options.max_iterations,
    };

    // phase one: maximize −Σ artificials
    let mut phase_one: Vec<T> = vec![T::zero(); n];
    phase_one.extend(std::iter::repeat_n(-T::one(), m));
    tab.set_objective(&phase_one);
    tab.run()?;
    if !tab.value().is_negligible(tol) {
        return Ok(LpOutcome::Infeasible);
    }

    // drive remaining artificials out; rows that cannot pivot are redundant
    let mut i = 0;
    while i < tab.rows.len() {
        if tab.basis[i] >= n {
            match (0..n).find(|&j| !tab.rows[i][j].is_negligible(tol)) {
                Some(j) => tab.pivot(i, j),
                None => {
                    tab.rows.remove(i);
                    tab.basis.remove(i);
                    continue;
                }
            }
        }
        i += 1;
    }

    // phase two on original columns only
    tab.active = n;
    let mut cost = c.to_vec();
    cost.extend(std::iter::repeat_n(T::zero(), m));
    tab.set_objective(&cost);
    if !tab.run()? {
        return Ok(LpOutcome::Unbounded);
    }
    let rhs = tab.rhs();
    let mut x = vec![T::zero(); n];
    for (row, &bv) in tab.rows.iter().zip(&tab.basis) {
        if bv < n {
            x[bv] = row[rhs].clone();
        }
    }
    Ok(LpOutcome::Optimal {
        x,
        value: tab.value(),
    })
}

/// Some `x ≥ 0` with `A·x = b`, or `None` if the system is infeasible.
pub fn feasible_point<T: Field>(a: &Matrix<T>, b: &[T], options: SimplexOptions) -> Result<Option<Vec<T>>> {
    let zero = vec![T::zero(); a.cols()];
    match maximize(a, b, &zero, options)? {
        LpOutcome::Optimal { x, .. } => Ok(Some(x)),
        LpOutcome::Infeasible => Ok(None),
        LpOutcome::Unbounded => unreachable!("zero objective is bounded"),
    }
}

/// Convex weights `λ ≥ 0, Σλ = 1` with `Σ λ_i points_i = target`, if any.
pub fn convex_weights<T: Field>(points: &[&[T]], target: &[T], options: SimplexOptions) -> Result<Option<Vec<T>>> {
    let dim = target.len();
    if let Some(bad) = points.iter().find(|p| p.len() != dim) {
        return Err(Error::dims(dim, bad.len()));
    }
    let (a, b) = convex_system(points, target);
    feasible_point(&a, &b, options)
}

/// Constraint system `[points; 1ᵀ]·λ = [target; 1]`.
pub(crate) fn convex_system<T: Field>(points: &[&[T]], target: &[T]) -> (Matrix<T>, Vec<T>) {
    let dim = target.len();
    let a = Matrix::from_fn(dim + 1, points.len(), |r, c| {
        if r < dim {
            points[c][r].clone()
        } else {
            T::one()
        }
    });
    let mut b = target.to_vec();
    b.push(T::one());
    (a, b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::ratio;
    use num_rational::BigRational;

    fn q(n: i64, d: i64) -> BigRational {
        ratio(n, d)
    }

    fn mat(rows: &[&[i64]]) -> Matrix<BigRational> {
        let rows: Vec<Vec<_>> = rows.iter().map(|r| r.iter().map(|&x| q(x, 1)).collect()).collect();
        Matrix::from_rows(&rows, 0).unwrap()
    }

    #[test]
    fn small_lp_optimum() {
        // max x + y s.t. x + 2y + s1 = 4, 3x + y + s2 = 6
        let a = mat(&[&[1, 2, 1, 0], &[3, 1, 0, 1]]);
        let b = [q(4, 1), q(6, 1)];
        let c = [q(1, 1), q(1, 1), q(0, 1), q(0, 1)];
        let LpOutcome::Optimal { x, value } = maximize(&a, &b, &c, SimplexOptions::default()).unwrap() else {
            panic!()
        };
        assert_eq!(value, q(14, 5));
        assert_eq!(&x[..2], &[q(8, 5), q(6, 5)]);
    }

    #[test]
    fn infeasible_and_unbounded() {
        // x + y = -1 with x, y >= 0
        let a = mat(&[&[1, 1]]);
        assert_eq!(
            maximize(&a, &[q(-1, 1)], &[q(0, 1), q(0, 1)], SimplexOptions::default()).unwrap(),
            LpOutcome::Infeasible
        );
        // x - y = 0, maximize x
        let a = mat(&[&[1, -1]]);
        assert_eq!(
            maximize(&a, &[q(0, 1)], &[q(1, 1), q(0, 1)], SimplexOptions::default()).unwrap(),
            LpOutcome::Unbounded
        );
    }

    #[test]
    fn redundant_rows_are_dropped() {
        let a = mat(&[&[1, 1], &[2, 2]]);
        let x = feasible_point(&a, &[q(1, 1), q(2, 1)], SimplexOptions::default())
            .unwrap()
            .unwrap();
        assert_eq!(x[0].clone() + x[1].clone(), q(1, 1));
    }

    #[test]
    fn midpoint_is_convex_combination() {
        let p1 = [q(1, 1), q(0, 1)];
        let p2 = [q(0, 1), q(1, 1)];
        let target = [q(1, 2), q(1, 2)];
        let w = convex_weights(&[&p1, &p2], &target, SimplexOptions::default())
            .unwrap()
            .unwrap();
        assert_eq!(w, vec![q(1, 2), q(1, 2)]);
        let outside = [q(1, 1), q(1, 1)];
        assert!(convex_weights(&[&p1, &p2], &outside, SimplexOptions::default())
            .unwrap()
            .is_none());
    }

    #[test]
    fn degenerate_problem_terminates() {
        // classic cycling example for the largest-coefficient rule (Beale)
        let a = Matrix::from_rows(
            &[
                vec![q(1, 4), q(-8, 1), q(-1, 1), q(9, 1), q(1, 1), q(0, 1), q(0, 1)],
                vec![q(1, 2), q(-12, 1), q(-1, 2), q(3, 1), q(0, 1), q(1, 1), q(0, 1)],
                vec![q(0, 1), q(0, 1), q(1, 1), q(0, 1), q(0, 1), q(0, 1), q(1, 1)],
            ],
            0,
        )
        .unwrap();
        let b = [q(0, 1), q(0, 1), q(1, 1)];
        let c = [q(3, 4), q(-20, 1), q(1, 2), q(-6, 1), q(0, 1), q(0, 1), q(0, 1)];
        let LpOutcome::Optimal { value, .. } = maximize(&a, &b, &c, SimplexOptions::default()).unwrap() else {
            panic!()
        };
        assert_eq!(value, q(5, 4));
    }

    #[test]
    fn iteration_cap_reports_failure() {
        let a = mat(&[&[1, 2, 1, 0], &[3, 1, 0, 1]]);
        let opts = SimplexOptions {
            tolerance: 0.0,
            max_iterations: 1,
        };
        let err = maximize(&a, &[q(4, 1), q(6, 1)], &[q(1, 1), q(1, 1), q(0, 1), q(0, 1)], opts).unwrap_err();
        assert!(matches!(err, Error::SolverFailure(_)));
    }

    #[test]
    fn float_mode_with_tolerance() {
        let p1 = [1.0, 0.0];
        let p2 = [0.0, 1.0];
        let w = convex_weights(&[&p1[..], &p2[..]], &[0.3, 0.7], SimplexOptions::with_tolerance(1e-9))
            .unwrap()
            .unwrap();
        assert!((w[0] - 0.3).abs() < 1e-12 && (w[1] - 0.7).abs() < 1e-12);
    }
}

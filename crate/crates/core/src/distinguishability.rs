//! One-shot distinguishability.
//!
//! `D` states are one-shot distinguishable when a single measurement tells
//! with certainty which of them was prepared, i.e. the table has a `D×D`
//! identity submatrix drawn from that measurement's rows. The largest such
//! `D` is `N`, and `Z ≥ K ≥ N` always holds.

use std::fmt;

use crate::error::{Error, Result};
use crate::factorization::{Factorization, OutcomeVector};
use crate::geometry::{extreme_states, group_duplicates};
use crate::matching::max_matching;
use crate::matrix::{dot, Matrix};
use crate::scalar::Field;
use crate::simplex::{convex_system, maximize, LpOutcome, SimplexOptions};
use crate::table::ProbabilityTable;

/// Default cap on the number of states for the coarse-mode subset search.
pub const DEFAULT_COARSE_STATE_LIMIT: usize = 24;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Mode {
    /// Identity pattern on single outcomes of one measurement.
    #[default]
    Strict,
    /// Identity pattern after coarse-graining outcomes of one measurement.
    Coarse,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Strict => "strict",
            Mode::Coarse => "coarse",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "strict" => Ok(Mode::Strict),
            "coarse" => Ok(Mode::Coarse),
            other => Err(Error::Syntax(format!("unknown mode '{other}' (expected strict|coarse)"))),
        }
    }
}

/// A measurement and, per distinguished state, the outcome rows whose
/// (coarse-grained) probability is 1 on that state and 0 on the others.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Witness {
    pub measurement: usize,
    pub pairs: Vec<(usize, Vec<usize>)>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Chain {
    pub z: usize,
    pub k: usize,
    pub n: usize,
}

impl Chain {
    /// `Z ≥ K ≥ N`
    pub fn holds(&self) -> bool {
        self.z >= self.k && self.k >= self.n
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DistinguishabilityReport {
    pub n: usize,
    pub witness: Witness,
    pub mode: Mode,
    pub chain: Chain,
    pub classical: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SearchLimits {
    pub coarse_max_states: usize,
}

impl Default for SearchLimits {
    fn default() -> Self {
        Self {
            coarse_max_states: DEFAULT_COARSE_STATE_LIMIT,
        }
    }
}

pub fn max_distinguishable<T: Field>(
    table: &ProbabilityTable<T>,
    f: &Factorization<T>,
    mode: Mode,
) -> Result<DistinguishabilityReport> {
    let z = extreme_states(f)?.count();
    max_distinguishable_with(table, f, mode, SearchLimits::default(), z)
}

/// As [`max_distinguishable`] with explicit limits and a precomputed
/// extreme-state count `z`.
pub fn max_distinguishable_with<T: Field>(
    table: &ProbabilityTable<T>,
    f: &Factorization<T>,
    mode: Mode,
    limits: SearchLimits,
    z: usize,
) -> Result<DistinguishabilityReport> {
    if f.state_count() != table.state_count() || f.outcome_count() != table.outcome_count() {
        return Err(Error::dims(table.state_count(), f.state_count()));
    }
    if mode == Mode::Coarse && table.state_count() > limits.coarse_max_states {
        return Err(Error::SearchBudgetExceeded(format!(
            "coarse search over {} states exceeds the limit of {}",
            table.state_count(),
            limits.coarse_max_states
        )));
    }
    let layout = table.layout();
    let mut best: Option<Witness> = None;
    for m in 0..layout.measurement_count() {
        let pairs = match mode {
            Mode::Strict => strict_pairs(table, m, &(0..table.state_count()).collect::<Vec<_>>()),
            Mode::Coarse => coarse_pairs(table, m),
        };
        if best.as_ref().is_none_or(|b| pairs.len() > b.pairs.len()) {
            best = Some(Witness { measurement: m, pairs });
        }
    }
    let mut witness = best.expect("layouts have at least one measurement");
    if witness.pairs.is_empty() {
        // a lone state is identified by the trivial outcome
        witness = Witness {
            measurement: 0,
            pairs: vec![(0, layout.rows_of(0).collect())],
        };
    }
    let n = witness.pairs.len();
    let k = f.rank();
    let chain = Chain { z, k, n };
    let classical = k == n;
    if classical && z != k {
        return Err(Error::Invariant(format!(
            "K = N = {k} but Z = {z}; the state set should be a simplex"
        )));
    }
    Ok(DistinguishabilityReport {
        n,
        witness,
        mode,
        chain,
        classical,
    })
}

fn is_one<T: Field>(p: &T, tol: f64) -> bool {
    p.approx_eq(&T::one(), tol)
}

/// Maximum matching of `states` to outcomes of `m` with probability 1.
fn strict_pairs<T: Field>(table: &ProbabilityTable<T>, m: usize, states: &[usize]) -> Vec<(usize, Vec<usize>)> {
    let rows = table.layout().rows_of(m);
    let p = table.entries();
    let tol = table.tolerance();
    let adj: Vec<Vec<usize>> = states
        .iter()
        .map(|&j| {
            rows.clone()
                .filter(|&i| is_one(&p[(i, j)], tol))
                .map(|i| i - rows.start)
                .collect()
        })
        .collect();
    max_matching(&adj, rows.len())
        .into_iter()
        .map(|(s, r)| (states[s], vec![rows.start + r]))
        .collect()
}

/// Largest set of states with pairwise disjoint supports in measurement `m`.
fn coarse_pairs<T: Field>(table: &ProbabilityTable<T>, m: usize) -> Vec<(usize, Vec<usize>)> {
    let rows = table.layout().rows_of(m);
    let p = table.entries();
    let tol = table.tolerance();
    let supports: Vec<Vec<usize>> = (0..table.state_count())
        .map(|j| rows.clone().filter(|&i| !p[(i, j)].is_negligible(tol)).collect())
        .collect();
    let mut order: Vec<usize> = (0..supports.len()).collect();
    order.sort_by_key(|&j| (supports[j].len(), j));
    let disjoint = |a: &[usize], b: &[usize]| a.iter().all(|x| !b.contains(x));
    let conflict: Vec<Vec<bool>> = order
        .iter()
        .map(|&a| order.iter().map(|&b| !disjoint(&supports[a], &supports[b])).collect())
        .collect();

    let mut search = SubsetSearch {
        conflict: &conflict,
        cap: rows.len(),
        best: Vec::new(),
        current: Vec::new(),
    };
    search.run(0);
    let mut chosen: Vec<usize> = search.best.iter().map(|&k| order[k]).collect();
    chosen.sort_unstable();
    chosen.into_iter().map(|j| (j, supports[j].clone())).collect()
}

/// Branch-and-bound maximum independent set over the conflict graph.
struct SubsetSearch<'a> {
    conflict: &'a [Vec<bool>],
    /// disjoint nonempty supports cannot outnumber the outcomes
    cap: usize,
    best: Vec<usize>,
    current: Vec<usize>,
}

impl SubsetSearch<'_> {
    fn run(&mut self, next: usize) {
        let n = self.conflict.len();
        if self.current.len() > self.best.len() {
            self.best = self.current.clone();
        }
        if self.best.len() == self.cap || next == n {
            return;
        }
        if self.current.len() + (n - next) <= self.best.len() {
            return;
        }
        if self.current.iter().all(|&c| !self.conflict[c][next]) {
            self.current.push(next);
            self.run(next + 1);
            self.current.pop();
        }
        self.run(next + 1);
    }
}

/// Certificate that a convex combination of `D − 1` of `D` distinguishable
/// states lies on the boundary of the state set.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryWitness<T> {
    /// Outcome of the dropped state's identity row.
    pub outcome: OutcomeVector<T>,
    /// The combination `Σ λ s` of the remaining states.
    pub point: Vec<T>,
    /// `r·point`, zero.
    pub on_point: T,
    /// `r·s_dropped`, one.
    pub on_dropped: T,
    /// Largest weight the dropped state can carry in any convex decomposition
    /// of `point` over all states, from an independent linear program.
    pub max_dropped_weight: T,
}

/// Builds the boundary certificate for `Σ λ_k s_k` over `distinguishable`
/// minus `dropped`; `weights` follow the order of the remaining states.
pub fn boundary_witness<T: Field>(
    table: &ProbabilityTable<T>,
    f: &Factorization<T>,
    distinguishable: &[usize],
    dropped: usize,
    weights: &[T],
) -> Result<BoundaryWitness<T>> {
    let tol = table.tolerance();
    let names = table.state_names();
    if let Some(&bad) = distinguishable.iter().find(|&&j| j >= table.state_count()) {
        return Err(Error::NotDistinguishable(format!("state index {bad} out of range")));
    }
    if !distinguishable.contains(&dropped) {
        return Err(Error::NotDistinguishable(format!(
            "dropped state '{}' is not in the distinguishable set",
            names.get(dropped).map_or("?", String::as_str)
        )));
    }
    let rest: Vec<usize> = distinguishable.iter().copied().filter(|&j| j != dropped).collect();
    if weights.len() != rest.len() {
        return Err(Error::InvalidWeights(format!(
            "{} weights for {} remaining states",
            weights.len(),
            rest.len()
        )));
    }
    let mut total = T::zero();
    for (w, &j) in weights.iter().zip(&rest) {
        if !w.is_nonnegative(tol) {
            return Err(Error::InvalidWeights(format!("weight {w} on '{}' is negative", names[j])));
        }
        total = total + w.clone();
    }
    if !total.approx_eq(&T::one(), tol * weights.len().max(1) as f64) {
        return Err(Error::InvalidWeights(format!("weights sum to {total}, not 1")));
    }

    let layout = table.layout();
    let witness_row = (0..layout.measurement_count()).find_map(|m| {
        let pairs = strict_pairs(table, m, distinguishable);
        (pairs.len() == distinguishable.len())
            .then(|| pairs.into_iter().find(|(j, _)| *j == dropped).map(|(_, rows)| rows[0]))
            .flatten()
    });
    let Some(row) = witness_row else {
        let listed: Vec<&str> = distinguishable.iter().map(|&j| names[j].as_str()).collect();
        return Err(Error::NotDistinguishable(format!(
            "no measurement has an identity pattern on [{}]",
            listed.join(", ")
        )));
    };

    let outcome = f.outcome_vector(row);
    let k = f.rank();
    let mut point = vec![T::zero(); k];
    for (w, &j) in weights.iter().zip(&rest) {
        for (acc, x) in point.iter_mut().zip(f.u().col(j)) {
            *acc = acc.clone() + w.clone() * x;
        }
    }
    let on_point = dot(&outcome.coords, &point);
    let on_dropped = dot(&outcome.coords, &f.u().col(dropped));
    if !on_point.is_negligible(tol) || !on_dropped.approx_eq(&T::one(), tol) {
        return Err(Error::Invariant(format!(
            "witness outcome gives {on_point} on the combination and {on_dropped} on the dropped state"
        )));
    }

    let max_dropped_weight = max_weight_on(f, dropped, &point, tol)?;
    if !max_dropped_weight.is_negligible(tol) {
        return Err(Error::Invariant(format!(
            "the combination decomposes with weight {max_dropped_weight} on the dropped state"
        )));
    }
    Ok(BoundaryWitness {
        outcome,
        point,
        on_point,
        on_dropped,
        max_dropped_weight,
    })
}

/// `max Σ λ_i` over states equal to `target_state`, subject to
/// `Σ λ_i s_i = point`, `Σ λ_i = 1`, `λ ≥ 0` over all states.
pub fn max_weight_on<T: Field>(f: &Factorization<T>, target_state: usize, point: &[T], tol: f64) -> Result<T> {
    let states = f.u().to_cols();
    let reps = group_duplicates(&states, tol);
    let cols: Vec<&[T]> = states.iter().map(Vec::as_slice).collect();
    let (a, b) = convex_system(&cols, point);
    let cost: Vec<T> = (0..states.len())
        .map(|j| {
            if reps[j] == reps[target_state] {
                T::one()
            } else {
                T::zero()
            }
        })
        .collect();
    match maximize(&a, &b, &cost, SimplexOptions::with_tolerance(tol))? {
        LpOutcome::Optimal { value, .. } => Ok(value),
        LpOutcome::Infeasible => Err(Error::Invariant("combination point lies outside the state set".into())),
        LpOutcome::Unbounded => unreachable!("weights are bounded by Σλ = 1"),
    }
}

/// The witness submatrix of `p`: rows are the witness outcomes (summed when
/// coarse-grained), columns the witness states.
pub fn witness_submatrix<T: Field>(table: &ProbabilityTable<T>, witness: &Witness) -> Matrix<T> {
    let p = table.entries();
    let d = witness.pairs.len();
    Matrix::from_fn(d, d, |r, c| {
        let state = witness.pairs[c].0;
        witness.pairs[r]
            .1
            .iter()
            .fold(T::zero(), |acc, &row| acc + p[(row, state)].clone())
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::factorization::factorize;
    use crate::fixtures;
    use crate::geometry::{analyze, outcome_region_contains};
    use crate::matrix::Matrix;
    use crate::scalar::ratio;
    use crate::table::{Measurement, MeasurementLayout};
    use num_rational::BigRational;

    fn q(n: i64, d: i64) -> BigRational {
        ratio(n, d)
    }

    #[test]
    fn classical_trit() {
        let t = fixtures::classical(3);
        let f = factorize(&t, None).unwrap();
        let r = max_distinguishable(&t, &f, Mode::Strict).unwrap();
        assert_eq!((r.n, r.chain.k, r.chain.z), (3, 3, 3));
        assert!(r.classical && r.chain.holds());
        assert_eq!(witness_submatrix(&t, &r.witness), Matrix::identity(3));
    }

    #[test]
    fn qubit_has_two_distinguishable_states() {
        let t = fixtures::qubit_tomography_exact();
        let f = factorize(&t, None).unwrap();
        let r = max_distinguishable(&t, &f, Mode::Strict).unwrap();
        assert_eq!(r.n, 2);
        assert_eq!(r.witness.measurement, 0);
        assert_eq!(r.witness.pairs, vec![(0, vec![0]), (1, vec![1])]);
        assert_eq!(r.chain, Chain { z: 4, k: 4, n: 2 });
        assert!(r.chain.holds() && !r.classical);
        let c = max_distinguishable(&t, &f, Mode::Coarse).unwrap();
        assert_eq!(c.n, 2);
    }

    #[test]
    fn mixture_joins_no_witness() {
        let t = fixtures::bit_with_mixture();
        let f = factorize(&t, None).unwrap();
        let r = max_distinguishable(&t, &f, Mode::Strict).unwrap();
        assert_eq!(r.n, 2);
        assert!(r.witness.pairs.iter().all(|(j, _)| *j != 2));
    }

    #[test]
    fn coarse_mode_helps() {
        // three outcomes; s1 fires r1 or r2, s2 fires r3 only
        let layout = MeasurementLayout::single("m", 3).unwrap();
        let p = Matrix::from_rows(
            &[
                vec![q(1, 2), q(0, 1)],
                vec![q(1, 2), q(0, 1)],
                vec![q(0, 1), q(1, 1)],
            ],
            0,
        )
        .unwrap();
        let t = ProbabilityTable::new(layout, vec!["s1".into(), "s2".into()], p, 0.0).unwrap();
        let f = factorize(&t, None).unwrap();
        let strict = max_distinguishable(&t, &f, Mode::Strict).unwrap();
        let coarse = max_distinguishable(&t, &f, Mode::Coarse).unwrap();
        assert_eq!(strict.n, 1);
        assert_eq!(coarse.n, 2);
        assert_eq!(coarse.witness.pairs, vec![(0, vec![0, 1]), (1, vec![2])]);
        assert_eq!(witness_submatrix(&t, &coarse.witness), Matrix::identity(2));
    }

    #[test]
    fn no_certain_outcome_falls_back_to_one() {
        let layout = MeasurementLayout::new(vec![Measurement::new("m", ["a", "b"])]).unwrap();
        let p = Matrix::from_rows(&[vec![q(1, 2)], vec![q(1, 2)]], 0).unwrap();
        let t = ProbabilityTable::new(layout, vec!["s".into()], p, 0.0).unwrap();
        let f = factorize(&t, None).unwrap();
        let r = max_distinguishable(&t, &f, Mode::Strict).unwrap();
        assert_eq!(r.n, 1);
        assert!(r.classical);
        assert_eq!(witness_submatrix(&t, &r.witness), Matrix::identity(1));
    }

    #[test]
    fn coarse_budget() {
        let t = fixtures::classical(5);
        let f = factorize(&t, None).unwrap();
        let limits = SearchLimits { coarse_max_states: 4 };
        let err = max_distinguishable_with(&t, &f, Mode::Coarse, limits, 5).unwrap_err();
        assert!(matches!(err, Error::SearchBudgetExceeded(_)));
    }

    #[test]
    fn trit_boundary_midpoint_and_vertex() {
        let t = fixtures::classical(3);
        let f = factorize(&t, None).unwrap();
        let w = boundary_witness(&t, &f, &[0, 1, 2], 2, &[q(1, 2), q(1, 2)]).unwrap();
        assert_eq!(w.outcome, f.outcome_vector(2));
        assert_eq!(w.on_point, q(0, 1));
        assert_eq!(w.on_dropped, q(1, 1));
        assert_eq!(w.max_dropped_weight, q(0, 1));

        let v = boundary_witness(&t, &f, &[0, 1, 2], 2, &[q(1, 1), q(0, 1)]).unwrap();
        assert_eq!(v.point, f.u().col(0));

        let g = analyze(&f, t.layout()).unwrap();
        assert!(outcome_region_contains(&w.outcome.coords, &g.extreme_vectors(), 0.0).unwrap());
    }

    #[test]
    fn qubit_boundary_pair() {
        let t = fixtures::qubit_tomography_exact();
        let f = factorize(&t, None).unwrap();
        let w = boundary_witness(&t, &f, &[0, 1], 1, &[q(1, 1)]).unwrap();
        let minus_z = t.layout().find_row("Z", "-z").unwrap();
        assert_eq!(w.outcome, f.outcome_vector(minus_z));
        assert_eq!(w.on_point, q(0, 1));
        assert_eq!(w.on_dropped, q(1, 1));
    }

    #[test]
    fn boundary_errors() {
        let t = fixtures::qubit_tomography_exact();
        let f = factorize(&t, None).unwrap();
        // |0⟩ and |+⟩ are not distinguishable
        assert!(matches!(
            boundary_witness(&t, &f, &[0, 2], 2, &[q(1, 1)]),
            Err(Error::NotDistinguishable(_))
        ));
        assert!(matches!(
            boundary_witness(&t, &f, &[0, 1], 1, &[q(1, 2)]),
            Err(Error::InvalidWeights(_))
        ));
        assert!(matches!(
            boundary_witness(&t, &f, &[0, 1], 3, &[q(1, 1)]),
            Err(Error::NotDistinguishable(_))
        ));
    }

    #[test]
    fn interior_point_admits_weight_on_vertex() {
        let t = fixtures::classical(3);
        let f = factorize(&t, None).unwrap();
        let centre = vec![q(1, 3), q(1, 3), q(1, 3)];
        assert_eq!(max_weight_on(&f, 2, &centre, 0.0).unwrap(), q(1, 3));
    }
}

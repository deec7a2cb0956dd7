//! Convex geometry of the state set `S` and the outcome set `R`.
//!
//! All states lie on the hyperplane `n·s = 1`, where `n` is the
//! trivial-measurement vector (the sum of the outcome vectors of any
//! measurement). Outcome vectors are confined to the region
//! `{r : 0 ≤ r·s ≤ 1 for every extreme state s}`, the intersection of a cone
//! with apex at the origin and a cone with apex at `n`.

use crate::error::{Error, Result};
use crate::factorization::{Factorization, OutcomeVector, StateVector};
use crate::matrix::{dot, max_abs_vec_diff};
use crate::scalar::Field;
use crate::simplex::{convex_weights, SimplexOptions};
use crate::table::MeasurementLayout;

#[derive(Debug, Clone, PartialEq)]
pub struct TrivialVector<T> {
    pub n: Vec<T>,
}

impl<T: Field> TrivialVector<T> {
    pub fn dim(&self) -> usize {
        self.n.len()
    }

    pub fn as_outcome(&self) -> OutcomeVector<T> {
        OutcomeVector::new(self.n.clone(), "n")
    }
}

/// `nᵀ = qᵀ·x⁻¹` with `q` the all-ones vector, checked against the outcome
/// sum of every measurement.
pub fn trivial_vector<T: Field>(f: &Factorization<T>, layout: &MeasurementLayout) -> Result<TrivialVector<T>> {
    let k = f.rank();
    if layout.outcome_count() != f.outcome_count() {
        return Err(Error::dims(f.outcome_count(), layout.outcome_count()));
    }
    let x_inv = f
        .x()
        .inverse(f.tolerance())
        .ok_or_else(|| Error::SingularBasis("basis matrix has zero determinant".into()))?;
    let n = x_inv.vec_mul(&vec![T::one(); k])?;

    for (m, meas) in layout.measurements().iter().enumerate() {
        let sum = measurement_sum(f, layout, m);
        let slack = f.tolerance() * layout.rows_of(m).len() as f64 * scale_of(&n);
        let gap = max_abs_vec_diff(&sum, &n);
        if gap.is_nan() || gap > slack {
            return Err(Error::InconsistentTable(format!(
                "outcome vectors of measurement '{}' sum to a vector {gap:e} away from n",
                meas.name
            )));
        }
    }
    Ok(TrivialVector { n })
}

fn scale_of<T: Field>(v: &[T]) -> f64 {
    v.iter().map(|x| x.abs().to_f64()).fold(1.0, f64::max)
}

/// `Σ_{i ∈ I_m} r_i`
pub fn measurement_sum<T: Field>(f: &Factorization<T>, layout: &MeasurementLayout, m: usize) -> Vec<T> {
    let mut sum = vec![T::zero(); f.rank()];
    for row in layout.rows_of(m) {
        for (acc, x) in sum.iter_mut().zip(f.t().row(row)) {
            *acc = acc.clone() + x.clone();
        }
    }
    sum
}

/// `|n·s_j − 1|` for every state.
pub fn hyperplane_residuals<T: Field>(f: &Factorization<T>, n: &TrivialVector<T>) -> Vec<f64> {
    (0..f.state_count())
        .map(|j| (dot(&n.n, &f.u().col(j)) - T::one()).abs().to_f64())
        .collect()
}

/// Extreme-state classification. `representatives` holds one state per
/// distinct extreme point (so `Z = representatives.len()`); `indices` also
/// lists duplicates of those points.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExtremeStates {
    pub indices: Vec<usize>,
    pub representatives: Vec<usize>,
}

impl ExtremeStates {
    /// Number `Z` of extreme points.
    pub fn count(&self) -> usize {
        self.representatives.len()
    }

    pub fn contains(&self, state: usize) -> bool {
        self.indices.binary_search(&state).is_ok()
    }
}

/// Groups equal state vectors; returns the representative of every state.
pub fn group_duplicates<T: Field>(states: &[Vec<T>], tol: f64) -> Vec<usize> {
    let mut reps: Vec<usize> = Vec::with_capacity(states.len());
    for (j, s) in states.iter().enumerate() {
        let rep = (0..j)
            .find(|&i| reps[i] == i && max_abs_vec_diff(&states[i], s) <= tol)
            .unwrap_or(j);
        reps.push(rep);
    }
    reps
}

/// States that are not convex combinations of the other state vectors.
pub fn extreme_states<T: Field>(f: &Factorization<T>) -> Result<ExtremeStates> {
    let states = f.u().to_cols();
    extreme_points(&states, f.tolerance())
}

/// Extreme-point classification of an arbitrary point list.
pub fn extreme_points<T: Field>(points: &[Vec<T>], tol: f64) -> Result<ExtremeStates> {
    let reps = group_duplicates(points, tol);
    let distinct: Vec<usize> = (0..points.len()).filter(|&j| reps[j] == j).collect();
    let options = SimplexOptions::with_tolerance(tol);
    let exposed = exposed_by_coordinates(points, &distinct, tol);
    let mut extreme_reps = Vec::new();
    for &j in &distinct {
        if exposed.contains(&j) {
            extreme_reps.push(j);
            continue;
        }
        let others: Vec<&[T]> = distinct
            .iter()
            .filter(|&&i| i != j)
            .map(|&i| points[i].as_slice())
            .collect();
        let interior = !others.is_empty() && convex_weights(&others, &points[j], options)?.is_some();
        if !interior {
            extreme_reps.push(j);
        }
    }
    let indices = (0..points.len())
        .filter(|&j| extreme_reps.binary_search(&reps[j]).is_ok())
        .collect();
    Ok(ExtremeStates {
        indices,
        representatives: extreme_reps,
    })
}

/// Points that strictly maximize or minimize some coordinate among
/// `distinct`. A unique optimizer of a linear functional is a vertex, so these
/// need no feasibility test.
fn exposed_by_coordinates<T: Field>(points: &[Vec<T>], distinct: &[usize], tol: f64) -> Vec<usize> {
    let mut out = Vec::new();
    let dim = distinct.first().map_or(0, |&j| points[j].len());
    for k in 0..dim {
        for sign in [T::one(), -T::one()] {
            let value = |j: usize| sign.clone() * points[j][k].clone();
            let best = distinct
                .iter()
                .copied()
                .reduce(|a, b| if value(b) > value(a) { b } else { a });
            let Some(best) = best else { continue };
            let top = value(best);
            let unique = distinct
                .iter()
                .all(|&j| j == best || (top.clone() - value(j)).to_f64() > tol);
            if unique && !out.contains(&best) {
                out.push(best);
            }
        }
    }
    out
}

/// `Σ λ_k r_k` with `λ_k ≥ 0` and `Σ λ_k ≤ 1`; the null outcome for no terms.
pub fn mix_outcomes<T: Field>(dim: usize, terms: &[(T, OutcomeVector<T>)], tol: f64) -> Result<OutcomeVector<T>> {
    let mut total = T::zero();
    let mut coords = vec![T::zero(); dim];
    let mut labels = Vec::with_capacity(terms.len());
    for (w, r) in terms {
        if r.dim() != dim {
            return Err(Error::dims(dim, r.dim()));
        }
        if !w.is_nonnegative(tol) {
            return Err(Error::InvalidWeights(format!("weight {w} on '{}' is negative", r.label)));
        }
        total = total + w.clone();
        for (acc, x) in coords.iter_mut().zip(&r.coords) {
            *acc = acc.clone() + w.clone() * x.clone();
        }
        labels.push(format!("{w}·{}", r.label));
    }
    if total > T::one() && !total.approx_eq(&T::one(), tol * terms.len() as f64) {
        return Err(Error::InvalidWeights(format!("weights sum to {total}, more than 1")));
    }
    let label = if labels.is_empty() { "o".to_string() } else { labels.join(" + ") };
    Ok(OutcomeVector::new(coords, label))
}

/// Sum of outcome vectors of distinct outcomes of one measurement.
pub fn coarse_grain<T: Field>(
    f: &Factorization<T>,
    layout: &MeasurementLayout,
    rows: &[usize],
) -> Result<OutcomeVector<T>> {
    let Some(&first) = rows.first() else {
        return Err(Error::Validation("coarse-graining needs at least one outcome".into()));
    };
    let m = layout
        .measurement_of(first)
        .ok_or_else(|| Error::Validation(format!("outcome row {first} does not exist")))?;
    let mut coords = vec![T::zero(); f.rank()];
    let mut names = Vec::with_capacity(rows.len());
    for (i, &row) in rows.iter().enumerate() {
        match layout.measurement_of(row) {
            None => return Err(Error::Validation(format!("outcome row {row} does not exist"))),
            Some(other) if other != m => {
                return Err(Error::MixedMeasurements(format!(
                    "'{}' and '{}'",
                    layout.row_label(first),
                    layout.row_label(row)
                )))
            }
            Some(_) => {}
        }
        if rows[..i].contains(&row) {
            return Err(Error::Validation(format!(
                "outcome '{}' listed twice",
                layout.row_label(row)
            )));
        }
        for (acc, x) in coords.iter_mut().zip(f.t().row(row)) {
            *acc = acc.clone() + x.clone();
        }
        names.push(layout.outcome_name(row).unwrap_or_default().to_string());
    }
    let label = format!("{}/{}", layout.measurements()[m].name, names.join("|"));
    Ok(OutcomeVector::new(coords, label))
}

/// Whether `0 ≤ candidate·s ≤ 1` for every extreme state `s`.
pub fn outcome_region_contains<T: Field>(candidate: &[T], extremes: &[StateVector<T>], tol: f64) -> Result<bool> {
    for s in extremes {
        if s.dim() != candidate.len() {
            return Err(Error::dims(candidate.len(), s.dim()));
        }
        let p = dot(candidate, &s.coords);
        if !p.is_nonnegative(tol) || !(T::one() - p).is_nonnegative(tol) {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Compares membership of `candidate` and its reflection `n − candidate`
/// through `n/2`. The region is symmetric, so this always holds.
pub fn region_symmetry_check<T: Field>(
    candidate: &[T],
    extremes: &[StateVector<T>],
    n: &TrivialVector<T>,
    tol: f64,
) -> Result<bool> {
    if n.dim() != candidate.len() {
        return Err(Error::dims(n.dim(), candidate.len()));
    }
    let reflected: Vec<T> = n
        .n
        .iter()
        .zip(candidate)
        .map(|(a, b)| a.clone() - b.clone())
        .collect();
    Ok(outcome_region_contains(candidate, extremes, tol)? == outcome_region_contains(&reflected, extremes, tol)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConeApex {
    /// `r·s ≥ 0`
    Origin,
    /// `r·s ≤ 1`
    Trivial,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HalfSpace<T> {
    pub normal: Vec<T>,
    pub state: String,
    pub apex: ConeApex,
}

impl<T> HalfSpace<T> {
    pub fn offset(&self) -> u8 {
        match self.apex {
            ConeApex::Origin => 0,
            ConeApex::Trivial => 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeometryReport<T> {
    pub rank: usize,
    pub extreme: ExtremeStates,
    pub n: TrivialVector<T>,
    pub hyperplane_residuals: Vec<f64>,
    /// Cone at the origin, one half-space per extreme point.
    pub origin_cone: Vec<HalfSpace<T>>,
    /// Cone at `n`, one half-space per extreme point.
    pub trivial_cone: Vec<HalfSpace<T>>,
    pub tolerance: f64,
}

impl<T: Field> GeometryReport<T> {
    pub fn z(&self) -> usize {
        self.extreme.count()
    }

    pub fn max_hyperplane_residual(&self) -> f64 {
        self.hyperplane_residuals.iter().copied().fold(0.0, f64::max)
    }

    pub fn region_contains(&self, candidate: &[T]) -> Result<bool> {
        outcome_region_contains(candidate, &self.extreme_vectors(), self.tolerance)
    }

    pub fn extreme_vectors(&self) -> Vec<StateVector<T>> {
        self.origin_cone
            .iter()
            .map(|h| StateVector::new(h.normal.clone(), h.state.clone()))
            .collect()
    }
}

/// Full geometry analysis of a factorization.
pub fn analyze<T: Field>(f: &Factorization<T>, layout: &MeasurementLayout) -> Result<GeometryReport<T>> {
    let n = trivial_vector(f, layout)?;
    let extreme = extreme_states(f)?;
    let residuals = hyperplane_residuals(f, &n);
    let half = |apex| {
        extreme
            .representatives
            .iter()
            .map(|&j| HalfSpace {
                normal: f.u().col(j),
                state: f.state_labels()[j].clone(),
                apex,
            })
            .collect::<Vec<_>>()
    };
    Ok(GeometryReport {
        rank: f.rank(),
        origin_cone: half(ConeApex::Origin),
        trivial_cone: half(ConeApex::Trivial),
        extreme,
        n,
        hyperplane_residuals: residuals,
        tolerance: f.tolerance(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::factorization::factorize;
    use crate::fixtures;
    use crate::scalar::ratio;
    use num_rational::BigRational;

    fn q(n: i64, d: i64) -> BigRational {
        ratio(n, d)
    }

    #[test]
    fn exposed_prefilter_agrees_with_feasibility() {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(12);
        let spec = fixtures::RandomTableSpec {
            max_outcomes: 10,
            max_states: 10,
            max_hidden: 4,
        };
        for _ in 0..40 {
            let t = fixtures::random_table(&mut rng, spec);
            let f = factorize(&t, None).unwrap();
            let points = f.u().to_cols();
            let reps = group_duplicates(&points, 0.0);
            let distinct: Vec<usize> = (0..points.len()).filter(|&j| reps[j] == j).collect();
            let by_lp: Vec<usize> = distinct
                .iter()
                .copied()
                .filter(|&j| {
                    let others: Vec<&[BigRational]> = distinct
                        .iter()
                        .filter(|&&i| i != j)
                        .map(|&i| points[i].as_slice())
                        .collect();
                    others.is_empty()
                        || convex_weights(&others, &points[j], SimplexOptions::default())
                            .unwrap()
                            .is_none()
                })
                .collect();
            for j in exposed_by_coordinates(&points, &distinct, 0.0) {
                assert!(by_lp.contains(&j));
            }
            assert_eq!(extreme_points(&points, 0.0).unwrap().representatives, by_lp);
        }
    }

    #[test]
    fn classical_trivial_vectors() {
        for d in [2, 3] {
            let t = fixtures::classical(d);
            let f = factorize(&t, None).unwrap();
            let n = trivial_vector(&f, t.layout()).unwrap();
            assert_eq!(n.n, vec![q(1, 1); d]);
        }
    }

    #[test]
    fn qubit_trivial_vector_matches_every_measurement() {
        let t = fixtures::qubit_tomography_exact();
        let f = factorize(&t, None).unwrap();
        let n = trivial_vector(&f, t.layout()).unwrap();
        for m in 0..3 {
            assert_eq!(measurement_sum(&f, t.layout(), m), n.n);
        }
        assert!(hyperplane_residuals(&f, &n).iter().all(|&r| r == 0.0));
    }

    #[test]
    fn extremes_of_small_tables() {
        let f = factorize(&fixtures::bit_with_mixture(), None).unwrap();
        let e = extreme_states(&f).unwrap();
        assert_eq!(e.indices, vec![0, 1]);

        let f = factorize(&fixtures::classical(3), None).unwrap();
        assert_eq!(extreme_states(&f).unwrap().count(), 3);

        let f = factorize(&fixtures::qubit_tomography_exact(), None).unwrap();
        assert_eq!(extreme_states(&f).unwrap().count(), 4);
    }

    #[test]
    fn duplicates_inherit_classification() {
        let t = fixtures::classical(2)
            .add_mixture_state("copy", &[(0, q(1, 1))])
            .unwrap()
            .add_mixture_state("mid", &[(0, q(1, 2)), (1, q(1, 2))])
            .unwrap()
            .add_mixture_state("mid2", &[(0, q(1, 2)), (1, q(1, 2))])
            .unwrap();
        let f = factorize(&t, None).unwrap();
        let e = extreme_states(&f).unwrap();
        assert_eq!(e.indices, vec![0, 1, 2]);
        assert_eq!(e.representatives, vec![0, 1]);
        assert_eq!(e.count(), 2);
    }

    #[test]
    fn mixing_outcomes() {
        let t = fixtures::classical(2);
        let f = factorize(&t, None).unwrap();
        let terms = vec![(q(1, 2), f.outcome_vector(0)), (q(1, 2), f.outcome_vector(1))];
        assert_eq!(mix_outcomes(2, &terms, 0.0).unwrap().coords, vec![q(1, 2), q(1, 2)]);
        assert_eq!(mix_outcomes::<BigRational>(3, &[], 0.0).unwrap().coords, vec![q(0, 1); 3]);
        let heavy = vec![(q(2, 3), f.outcome_vector(0)), (q(2, 3), f.outcome_vector(1))];
        assert!(matches!(mix_outcomes(2, &heavy, 0.0), Err(Error::InvalidWeights(_))));
        let negative = vec![(q(-1, 3), f.outcome_vector(0))];
        assert!(matches!(mix_outcomes(2, &negative, 0.0), Err(Error::InvalidWeights(_))));
    }

    #[test]
    fn mixing_qubit_outcomes_matches_table() {
        let t = fixtures::qubit_tomography_exact();
        let f = factorize(&t, None).unwrap();
        let plus_z = t.layout().find_row("Z", "+z").unwrap();
        let plus_x = t.layout().find_row("X", "+x").unwrap();
        let r = mix_outcomes(
            4,
            &[(q(1, 3), f.outcome_vector(plus_z)), (q(1, 3), f.outcome_vector(plus_x))],
            0.0,
        )
        .unwrap();
        for j in 0..4 {
            let want = q(1, 3) * (t.entries()[(plus_z, j)].clone() + t.entries()[(plus_x, j)].clone());
            assert_eq!(dot(&r.coords, &f.u().col(j)), want);
        }
    }

    #[test]
    fn coarse_graining() {
        let t = fixtures::classical(2);
        let f = factorize(&t, None).unwrap();
        assert_eq!(coarse_grain(&f, t.layout(), &[0, 1]).unwrap().coords, vec![q(1, 1); 2]);
        assert_eq!(coarse_grain(&f, t.layout(), &[0]).unwrap(), OutcomeVector::new(f.outcome_vector(0).coords, "m1/r1"));

        let t3 = fixtures::classical(3);
        let f3 = factorize(&t3, None).unwrap();
        let r = coarse_grain(&f3, t3.layout(), &[0, 2]).unwrap();
        assert_eq!(r.label, "m1/r1|r3");
        for j in 0..3 {
            let want = t3.entries()[(0, j)].clone() + t3.entries()[(2, j)].clone();
            assert_eq!(dot(&r.coords, &f3.u().col(j)), want);
        }

        let tq = fixtures::qubit_tomography_exact();
        let fq = factorize(&tq, None).unwrap();
        assert!(matches!(coarse_grain(&fq, tq.layout(), &[0, 2]), Err(Error::MixedMeasurements(_))));
        assert!(coarse_grain(&fq, tq.layout(), &[0, 0]).is_err());
    }

    #[test]
    fn bit_region_is_unit_square() {
        let t = fixtures::classical(2);
        let f = factorize(&t, None).unwrap();
        let g = analyze(&f, t.layout()).unwrap();
        let ex = g.extreme_vectors();
        assert!(outcome_region_contains(&g.n.n, &ex, 0.0).unwrap());
        assert!(outcome_region_contains(&[q(0, 1), q(0, 1)], &ex, 0.0).unwrap());
        assert!(!outcome_region_contains(&[q(6, 5), q(0, 1)], &ex, 0.0).unwrap());
        assert!(region_symmetry_check(&[q(3, 10), q(9, 10)], &ex, &g.n, 0.0).unwrap());
        assert!(outcome_region_contains(&[q(7, 10), q(1, 10)], &ex, 0.0).unwrap());
        assert!(region_symmetry_check(&[q(3, 2), q(1, 2)], &ex, &g.n, 0.0).unwrap());
        assert!(!outcome_region_contains(&[q(1, 2), q(3, 2)], &ex, 0.0).unwrap());
        assert!(matches!(
            outcome_region_contains(&[q(1, 1)], &ex, 0.0),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn report_halfspaces() {
        let t = fixtures::bit_with_mixture();
        let f = factorize(&t, None).unwrap();
        let g = analyze(&f, t.layout()).unwrap();
        assert_eq!(g.z(), 2);
        assert_eq!(g.origin_cone.len(), 2);
        assert!(g.origin_cone.iter().all(|h| h.offset() == 0));
        assert!(g.trivial_cone.iter().all(|h| h.offset() == 1));
        assert_eq!(g.max_hyperplane_residual(), 0.0);
    }
}

//! Affine maps between state sets and their linear and dual forms.
//!
//! An affine map `s′ ↦ F·s′ + g` between state spaces agrees on the source
//! hyperplane `n′·s′ = 1` with the linear map `C = F + g·n′ᵀ`. Its transpose
//! pulls target outcomes back to source outcomes, and a map that preserves
//! the trivial measurement satisfies `Cᵀ·n″ = n′`.

use crate::error::{Error, Result};
use crate::factorization::{Factorization, OutcomeVector, StateVector};
use crate::geometry::{trivial_vector, TrivialVector};
use crate::matrix::{dot, max_abs_vec_diff, Matrix};
use crate::scalar::Field;
use crate::table::MeasurementLayout;

/// States and trivial-measurement vector of one factorized table.
#[derive(Debug, Clone, PartialEq)]
pub struct StateSpace<T> {
    pub n: TrivialVector<T>,
    pub states: Vec<StateVector<T>>,
    pub outcomes: Vec<OutcomeVector<T>>,
    pub tolerance: f64,
}

impl<T: Field> StateSpace<T> {
    pub fn from_factorization(f: &Factorization<T>, layout: &MeasurementLayout) -> Result<Self> {
        Ok(Self {
            n: trivial_vector(f, layout)?,
            states: f.state_vectors(),
            outcomes: f.outcome_vectors(),
            tolerance: f.tolerance(),
        })
    }

    pub fn dim(&self) -> usize {
        self.n.dim()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Domain {
    Total,
    /// Source state indices the map accepts.
    Partial(Vec<usize>),
}

impl Domain {
    pub fn contains(&self, state: usize) -> bool {
        match self {
            Domain::Total => true,
            Domain::Partial(idx) => idx.contains(&state),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StateMap<T> {
    f: Matrix<T>,
    g: Vec<T>,
    c: Matrix<T>,
    source: StateSpace<T>,
    target_n: TrivialVector<T>,
    domain: Domain,
    tolerance: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstraintCheck {
    pub holds: bool,
    /// `‖Cᵀ·n″ − n′‖_max`
    pub residual: f64,
}

/// A target outcome whose probability on an image state leaves `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct PositivityViolation<T> {
    pub state: String,
    pub outcome: String,
    pub probability: T,
}

/// Builds `C = F + g·n′ᵀ` and certifies `C·s′ = F·s′ + g` on every source
/// state in the domain.
pub fn linearize<T: Field>(
    f: Matrix<T>,
    g: Vec<T>,
    source: &StateSpace<T>,
    target_n: &TrivialVector<T>,
    domain: Domain,
) -> Result<StateMap<T>> {
    let (k_out, k_in) = (target_n.dim(), source.dim());
    if f.rows() != k_out {
        return Err(Error::dims(k_out, f.rows()));
    }
    if f.cols() != k_in {
        return Err(Error::dims(k_in, f.cols()));
    }
    if g.len() != k_out {
        return Err(Error::dims(k_out, g.len()));
    }
    if let Domain::Partial(idx) = &domain {
        if let Some(&bad) = idx.iter().find(|&&j| j >= source.states.len()) {
            return Err(Error::OutOfDomain(format!("index {bad}")));
        }
    }
    let outer = Matrix::from_fn(k_out, k_in, |r, c| g[r].clone() * source.n.n[c].clone());
    let c = f.add(&outer)?;
    let tol = source.tolerance;
    for s in &source.states {
        if !domain.contains(s.index.unwrap_or(usize::MAX)) {
            continue;
        }
        let linear = c.mul_vec(&s.coords)?;
        let affine: Vec<T> = f
            .mul_vec(&s.coords)?
            .into_iter()
            .zip(&g)
            .map(|(a, b)| a + b.clone())
            .collect();
        let gap = max_abs_vec_diff(&linear, &affine);
        if gap.is_nan() || gap > tol * scale(&affine) {
            return Err(Error::Invariant(format!(
                "linear and affine images of state '{}' differ by {gap:e}",
                s.label
            )));
        }
    }
    Ok(StateMap {
        f,
        g,
        c,
        source: source.clone(),
        target_n: target_n.clone(),
        domain,
        tolerance: tol,
    })
}

fn scale<T: Field>(v: &[T]) -> f64 {
    v.iter().map(|x| x.abs().to_f64()).fold(1.0, f64::max)
}

impl<T: Field> StateMap<T> {
    pub fn f(&self) -> &Matrix<T> {
        &self.f
    }

    pub fn g(&self) -> &[T] {
        &self.g
    }

    /// Linear form `C`.
    pub fn c(&self) -> &Matrix<T> {
        &self.c
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    pub fn source(&self) -> &StateSpace<T> {
        &self.source
    }

    pub fn target_n(&self) -> &TrivialVector<T> {
        &self.target_n
    }

    /// `C·s`. Partial maps accept only source states listed in the domain.
    pub fn apply(&self, s: &StateVector<T>) -> Result<StateVector<T>> {
        if s.dim() != self.c.cols() {
            return Err(Error::dims(self.c.cols(), s.dim()));
        }
        if let Domain::Partial(_) = self.domain {
            match s.index {
                Some(j) if self.domain.contains(j) => {}
                _ => return Err(Error::OutOfDomain(s.label.clone())),
            }
        }
        Ok(StateVector::new(self.c.mul_vec(&s.coords)?, format!("C·{}", s.label)))
    }

    /// `Cᵀ·r`, pulling a target outcome back to the source.
    pub fn dual_map(&self, r: &OutcomeVector<T>) -> Result<OutcomeVector<T>> {
        if r.dim() != self.c.rows() {
            return Err(Error::dims(self.c.rows(), r.dim()));
        }
        Ok(OutcomeVector::new(self.c.vec_mul(&r.coords)?, format!("Cᵀ·{}", r.label)))
    }

    /// Whether `Cᵀ·n″ = n′` within tolerance.
    pub fn check_trivial_constraint(&self) -> ConstraintCheck {
        let pulled = self
            .c
            .vec_mul(&self.target_n.n)
            .expect("target n has K″ components");
        let residual = max_abs_vec_diff(&pulled, &self.source.n.n);
        ConstraintCheck {
            holds: residual <= self.tolerance * scale(&self.source.n.n),
            residual,
        }
    }

    /// Image probabilities outside `[0, 1]` against the given target outcomes.
    pub fn positivity_violations(&self, target_outcomes: &[OutcomeVector<T>]) -> Result<Vec<PositivityViolation<T>>> {
        let mut out = Vec::new();
        for s in &self.source.states {
            if !self.domain.contains(s.index.unwrap_or(usize::MAX)) {
                continue;
            }
            let image = self.apply(s)?;
            for r in target_outcomes {
                if r.dim() != image.dim() {
                    return Err(Error::dims(image.dim(), r.dim()));
                }
                let p = dot(&r.coords, &image.coords);
                let in_range = p.is_nonnegative(self.tolerance) && (T::one() - p.clone()).is_nonnegative(self.tolerance);
                if !in_range {
                    out.push(PositivityViolation {
                        state: s.label.clone(),
                        outcome: r.label.clone(),
                        probability: p,
                    });
                }
            }
        }
        Ok(out)
    }

    /// `next ∘ self`: `F = F₂·F₁`, `g = F₂·g₁ + g₂`.
    pub fn then(&self, next: &StateMap<T>) -> Result<StateMap<T>> {
        if next.source.n != self.target_n {
            return Err(Error::Validation(
                "second map's source is not the first map's target".into(),
            ));
        }
        let f = next.f.mul(&self.f)?;
        let g: Vec<T> = next
            .f
            .mul_vec(&self.g)?
            .into_iter()
            .zip(&next.g)
            .map(|(a, b)| a + b.clone())
            .collect();
        linearize(f, g, &self.source, &next.target_n, self.domain.clone())
    }
}

//! Operational state spaces from probability data tables.
//!
//! A table of outcome probabilities (rows: outcomes grouped into
//! measurements, columns: preparations) of rank `K` factors as `p = t·u`,
//! assigning every state a vector `s_j ∈ R^K` and every outcome a vector
//! `r_i ∈ R^K` with `p_ij = r_i·s_j`. On top of that factorization this crate
//! provides the convex geometry of the state and outcome sets, one-shot
//! distinguishability, affine maps between state spaces, and a trace-rule
//! generator for quantum tables.

pub mod distinguishability;
pub mod error;
pub mod factorization;
pub mod fixtures;
pub mod geometry;
pub mod io;
pub mod matching;
pub mod matrix;
pub mod quantum;
pub mod scalar;
pub mod simplex;
pub mod state_maps;
pub mod table;

pub use error::{Error, Result};
pub use factorization::{
    factorize, factorize_by_outcomes, factorize_with, probability, rank_of, Basis, FactorizeOptions,
    Factorization, OutcomeVector, StateVector,
};
pub use matrix::Matrix;
pub use scalar::{Field, NumericMode, Scalar, DEFAULT_TOLERANCE};
pub use table::{Measurement, MeasurementLayout, ProbabilityTable};

pub use num_rational::BigRational;

//! Probability data tables: rows are measurement outcomes, columns are
//! preparations (states), entries are outcome probabilities.

use std::collections::HashSet;
use std::ops::Range;

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::scalar::{Field, NumericMode};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Measurement {
    pub name: String,
    pub outcomes: Vec<String>,
}

impl Measurement {
    pub fn new(name: impl Into<String>, outcomes: impl IntoIterator<Item = impl Into<String>>) -> Self {
        Self {
            name: name.into(),
            outcomes: outcomes.into_iter().map(Into::into).collect(),
        }
    }
}

/// Partition of the table rows into measurements. Rows are numbered in
/// measurement order, outcomes in declared order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MeasurementLayout {
    measurements: Vec<Measurement>,
    offsets: Vec<usize>,
}

impl MeasurementLayout {
    pub fn new(measurements: Vec<Measurement>) -> Result<Self> {
        if measurements.is_empty() {
            return Err(Error::Validation("table declares no measurements".into()));
        }
        let mut names = HashSet::new();
        let mut offsets = Vec::with_capacity(measurements.len() + 1);
        let mut next = 0;
        for m in &measurements {
            if !names.insert(m.name.as_str()) {
                return Err(Error::Validation(format!(
                    "measurement name '{}' is declared twice",
                    m.name
                )));
            }
            if m.outcomes.is_empty() {
                return Err(Error::Validation(format!(
                    "measurement '{}' has no outcomes",
                    m.name
                )));
            }
            let mut seen = HashSet::new();
            if let Some(dup) = m.outcomes.iter().find(|o| !seen.insert(o.as_str())) {
                return Err(Error::Validation(format!(
                    "measurement '{}' declares outcome '{dup}' twice",
                    m.name
                )));
            }
            offsets.push(next);
            next += m.outcomes.len();
        }
        offsets.push(next);
        Ok(Self {
            measurements,
            offsets,
        })
    }

    /// A single measurement with `count` outcomes named `r1..`.
    pub fn single(name: &str, count: usize) -> Result<Self> {
        Self::new(vec![Measurement::new(
            name,
            (1..=count).map(|i| format!("r{i}")),
        )])
    }

    pub fn measurements(&self) -> &[Measurement] {
        &self.measurements
    }

    pub fn measurement_count(&self) -> usize {
        self.measurements.len()
    }

    /// Total number of outcomes `L`.
    pub fn outcome_count(&self) -> usize {
        *self.offsets.last().expect("offsets never empty")
    }

    /// Global row range of measurement `m`.
    pub fn rows_of(&self, m: usize) -> Range<usize> {
        self.offsets[m]..self.offsets[m + 1]
    }

    /// Maps a global row index to `(measurement, local outcome)`.
    pub fn locate(&self, row: usize) -> Option<(usize, usize)> {
        if row >= self.outcome_count() {
            return None;
        }
        let m = self.offsets.partition_point(|&o| o <= row) - 1;
        Some((m, row - self.offsets[m]))
    }

    pub fn measurement_of(&self, row: usize) -> Option<usize> {
        self.locate(row).map(|(m, _)| m)
    }

    pub fn outcome_name(&self, row: usize) -> Option<&str> {
        let (m, i) = self.locate(row)?;
        Some(&self.measurements[m].outcomes[i])
    }

    /// `"measurement/outcome"` label of a row.
    pub fn row_label(&self, row: usize) -> String {
        match self.locate(row) {
            Some((m, i)) => format!(
                "{}/{}",
                self.measurements[m].name, self.measurements[m].outcomes[i]
            ),
            None => format!("row {row}"),
        }
    }

    pub fn find_measurement(&self, name: &str) -> Option<usize> {
        self.measurements.iter().position(|m| m.name == name)
    }

    /// Global row index of `outcome` in `measurement`.
    pub fn find_row(&self, measurement: &str, outcome: &str) -> Option<usize> {
        let m = self.find_measurement(measurement)?;
        let i = self.measurements[m].outcomes.iter().position(|o| o == outcome)?;
        Some(self.offsets[m] + i)
    }
}

/// A validated `L×M` table of outcome probabilities.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbabilityTable<T> {
    layout: MeasurementLayout,
    state_names: Vec<String>,
    entries: Matrix<T>,
    tolerance: f64,
}

impl<T: Field> ProbabilityTable<T> {
    /// Validates and builds a table. In float mode, entries outside `[0,1]` by
    /// at most `tolerance` are clamped.
    pub fn new(
        layout: MeasurementLayout,
        state_names: Vec<String>,
        entries: Matrix<T>,
        tolerance: f64,
    ) -> Result<Self> {
        if !(tolerance >= 0.0 && tolerance.is_finite()) {
            return Err(Error::Validation(format!("tolerance {tolerance} is not a nonnegative number")));
        }
        let tolerance = if T::MODE == NumericMode::Exact { 0.0 } else { tolerance };
        if state_names.is_empty() {
            return Err(Error::Validation("table declares no states".into()));
        }
        let mut seen = HashSet::new();
        if let Some(dup) = state_names.iter().find(|s| !seen.insert(s.as_str())) {
            return Err(Error::Validation(format!("state name '{dup}' is declared twice")));
        }
        if entries.rows() != layout.outcome_count() {
            return Err(Error::Validation(format!(
                "table has {} rows but the measurements declare {} outcomes",
                entries.rows(),
                layout.outcome_count()
            )));
        }
        if entries.cols() != state_names.len() {
            return Err(Error::Validation(format!(
                "table has {} columns but {} states are declared",
                entries.cols(),
                state_names.len()
            )));
        }

        let (zero, one) = (T::zero(), T::one());
        let entries = Matrix::from_fn(entries.rows(), entries.cols(), |r, c| {
            let p = &entries[(r, c)];
            if *p < zero && p.is_negligible(tolerance) {
                zero.clone()
            } else if *p > one && p.approx_eq(&one, tolerance) {
                one.clone()
            } else {
                p.clone()
            }
        });
        for r in 0..entries.rows() {
            for c in 0..entries.cols() {
                let p = &entries[(r, c)];
                if *p < zero || *p > one {
                    return Err(Error::Validation(format!(
                        "entry at outcome {} (row {r}), state '{}' (column {c}) is {p}, outside [0,1]",
                        layout.row_label(r),
                        state_names[c]
                    )));
                }
            }
        }
        for (m, meas) in layout.measurements().iter().enumerate() {
            let rows = layout.rows_of(m);
            let slack = tolerance * rows.len() as f64;
            for (c, state) in state_names.iter().enumerate() {
                let sum = rows
                    .clone()
                    .fold(T::zero(), |acc, r| acc + entries[(r, c)].clone());
                if !sum.approx_eq(&one, slack) {
                    return Err(Error::Validation(format!(
                        "column {state} of measurement {} sums to {sum}, not 1",
                        meas.name
                    )));
                }
            }
        }
        Ok(Self {
            layout,
            state_names,
            entries,
            tolerance,
        })
    }

    pub fn mode(&self) -> NumericMode {
        T::MODE
    }

    pub fn layout(&self) -> &MeasurementLayout {
        &self.layout
    }

    pub fn state_names(&self) -> &[String] {
        &self.state_names
    }

    pub fn entries(&self) -> &Matrix<T> {
        &self.entries
    }

    /// Comparison tolerance; always 0 in exact mode.
    pub fn tolerance(&self) -> f64 {
        self.tolerance
    }

    pub fn outcome_count(&self) -> usize {
        self.entries.rows()
    }

    pub fn state_count(&self) -> usize {
        self.entries.cols()
    }

    pub fn state_index(&self, name: &str) -> Option<usize> {
        self.state_names.iter().position(|s| s == name)
    }

    pub fn column(&self, state: usize) -> Vec<T> {
        self.entries.col(state)
    }

    /// Appends a state prepared as the mixture `Σ w_k · state_k`.
    pub fn add_mixture_state(&self, name: impl Into<String>, weights: &[(usize, T)]) -> Result<Self> {
        let name = name.into();
        if weights.is_empty() {
            return Err(Error::InvalidWeights("no weights given".into()));
        }
        let mut total = T::zero();
        for (idx, w) in weights {
            if *idx >= self.state_count() {
                return Err(Error::InvalidWeights(format!(
                    "state index {idx} out of range (table has {} states)",
                    self.state_count()
                )));
            }
            if !w.is_nonnegative(self.tolerance) {
                return Err(Error::InvalidWeights(format!(
                    "weight {w} on state '{}' is negative",
                    self.state_names[*idx]
                )));
            }
            total = total + w.clone();
        }
        if !total.approx_eq(&T::one(), self.tolerance * weights.len() as f64) {
            return Err(Error::InvalidWeights(format!("weights sum to {total}, not 1")));
        }
        let column: Vec<T> = (0..self.outcome_count())
            .map(|r| {
                weights.iter().fold(T::zero(), |acc, (idx, w)| {
                    acc + w.clone() * self.entries[(r, *idx)].clone()
                })
            })
            .collect();
        let mut names = self.state_names.clone();
        names.push(name);
        Self::new(
            self.layout.clone(),
            names,
            self.entries.append_col(&column)?,
            self.tolerance,
        )
    }

    /// Converts entries to binary64, keeping names and layout.
    pub fn to_float(&self, tolerance: f64) -> Result<ProbabilityTable<f64>> {
        ProbabilityTable::new(
            self.layout.clone(),
            self.state_names.clone(),
            self.entries.map(Field::to_f64),
            tolerance,
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::ratio;
    use num_rational::BigRational;

    fn bit_layout() -> MeasurementLayout {
        MeasurementLayout::single("m1", 2).unwrap()
    }

    fn names(n: usize) -> Vec<String> {
        (1..=n).map(|i| format!("s{i}")).collect()
    }

    #[test]
    fn classical_bit_is_valid() {
        let m = Matrix::from_rows(&[vec![ratio(1, 1), ratio(0, 1)], vec![ratio(0, 1), ratio(1, 1)]], 0)
            .unwrap();
        let t = ProbabilityTable::new(bit_layout(), names(2), m, 0.0).unwrap();
        assert_eq!(t.outcome_count(), 2);
        assert_eq!(t.state_count(), 2);
        assert_eq!(t.mode(), NumericMode::Exact);
    }

    #[test]
    fn normalization_violation_names_column() {
        let m = Matrix::from_rows(&[vec![0.6, 0.0], vec![0.5, 1.0]], 0).unwrap();
        let err = ProbabilityTable::new(bit_layout(), names(2), m, 1e-9).unwrap_err();
        let Error::Validation(msg) = err else { panic!("{err:?}") };
        assert!(msg.contains("column s1 of measurement m1 sums to 1.1"), "{msg}");
    }

    #[test]
    fn out_of_range_entry_is_rejected_with_coordinates() {
        let m = Matrix::from_rows(&[vec![1.5, 0.0], vec![-0.5, 1.0]], 0).unwrap();
        let err = ProbabilityTable::new(bit_layout(), names(2), m, 1e-9).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("m1/r1") && msg.contains("'s1'"), "{msg}");
    }

    #[test]
    fn float_noise_is_clamped() {
        let m = Matrix::from_rows(&[vec![1.0 + 1e-12, 0.0], vec![-1e-12, 1.0]], 0).unwrap();
        let t = ProbabilityTable::new(bit_layout(), names(2), m, 1e-9).unwrap();
        assert_eq!(t.entries()[(0, 0)], 1.0);
        assert_eq!(t.entries()[(1, 0)], 0.0);
    }

    #[test]
    fn layout_rejects_empty_measurement() {
        let err = MeasurementLayout::new(vec![Measurement::new("m", Vec::<String>::new())]).unwrap_err();
        assert!(err.to_string().contains("no outcomes"));
    }

    #[test]
    fn layout_locates_rows() {
        let layout = MeasurementLayout::new(vec![
            Measurement::new("a", ["x", "y", "z"]),
            Measurement::new("b", ["u", "v"]),
        ])
        .unwrap();
        assert_eq!(layout.outcome_count(), 5);
        assert_eq!(layout.locate(0), Some((0, 0)));
        assert_eq!(layout.locate(2), Some((0, 2)));
        assert_eq!(layout.locate(3), Some((1, 0)));
        assert_eq!(layout.locate(4), Some((1, 1)));
        assert_eq!(layout.locate(5), None);
        assert_eq!(layout.rows_of(1), 3..5);
        assert_eq!(layout.find_row("b", "v"), Some(4));
        assert_eq!(layout.row_label(1), "a/y");
    }

    #[test]
    fn even_mixture_of_bit() {
        let m: Matrix<BigRational> = Matrix::identity(2);
        let t = ProbabilityTable::new(bit_layout(), names(2), m, 0.0).unwrap();
        let mixed = t
            .add_mixture_state("mix", &[(0, ratio(1, 2)), (1, ratio(1, 2))])
            .unwrap();
        assert_eq!(mixed.column(2), vec![ratio(1, 2), ratio(1, 2)]);

        let dup = t.add_mixture_state("dup", &[(0, ratio(1, 1))]).unwrap();
        assert_eq!(dup.column(2), dup.column(0));
    }

    #[test]
    fn bad_mixture_weights() {
        let t = ProbabilityTable::new(bit_layout(), names(2), Matrix::<BigRational>::identity(2), 0.0)
            .unwrap();
        assert!(matches!(
            t.add_mixture_state("x", &[(0, ratio(-1, 2)), (1, ratio(3, 2))]),
            Err(Error::InvalidWeights(_))
        ));
        assert!(matches!(
            t.add_mixture_state("x", &[(0, ratio(1, 2))]),
            Err(Error::InvalidWeights(_))
        ));
        assert!(matches!(
            t.add_mixture_state("x", &[(7, ratio(1, 1))]),
            Err(Error::InvalidWeights(_))
        ));
    }
}

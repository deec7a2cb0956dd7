//! Reference tables and random table generators.

use num_rational::BigRational;
use rand::seq::SliceRandom;
use rand::Rng;

use crate::matrix::Matrix;
use crate::quantum::{qubit_tomography_model, snap_table};
use crate::scalar::{ratio, DEFAULT_TOLERANCE};
use crate::table::{Measurement, MeasurementLayout, ProbabilityTable};

fn state_names(n: usize) -> Vec<String> {
    (1..=n).map(|i| format!("s{i}")).collect()
}

/// The classical `d`-level table: one `d`-outcome measurement `m1`, states
/// `s1..sd`, identity entries.
pub fn classical(d: usize) -> ProbabilityTable<BigRational> {
    ProbabilityTable::new(
        MeasurementLayout::single("m1", d).expect("d >= 1"),
        state_names(d),
        Matrix::identity(d),
        0.0,
    )
    .expect("identity table is valid")
}

/// `[[1, 0, 1/2], [0, 1, 1/2]]`: a bit plus its even mixture.
pub fn bit_with_mixture() -> ProbabilityTable<BigRational> {
    classical(2)
        .add_mixture_state("s3", &[(0, ratio(1, 2)), (1, ratio(1, 2))])
        .expect("valid weights")
}

/// Two binary measurements `X`, `Y` on the four deterministic states
/// `(x, y) ∈ {0,1}²`. Rank 3 with four extreme states, only two of which
/// are jointly distinguishable.
pub fn square_bit() -> ProbabilityTable<BigRational> {
    let layout = MeasurementLayout::new(vec![
        Measurement::new("X", ["0", "1"]),
        Measurement::new("Y", ["0", "1"]),
    ])
    .expect("valid layout");
    let cells = [[1, 1, 0, 0], [0, 0, 1, 1], [1, 0, 1, 0], [0, 1, 0, 1]];
    let entries = Matrix::from_fn(4, 4, |r, c| ratio(cells[r][c], 1));
    let names = ["00", "01", "10", "11"].map(String::from).to_vec();
    ProbabilityTable::new(layout, names, entries, 0.0).expect("deterministic table is valid")
}

/// Every exact fixture with a short name.
pub fn exact_fixtures() -> Vec<(&'static str, ProbabilityTable<BigRational>)> {
    vec![
        ("bit", classical(2)),
        ("trit", classical(3)),
        ("classical-4", classical(4)),
        ("classical-5", classical(5)),
        ("bit-with-mixture", bit_with_mixture()),
        ("square-bit", square_bit()),
        ("qubit", qubit_tomography_exact()),
    ]
}

/// Qubit tomography table (Z, X, Y measurements on `|0⟩, |1⟩, |+⟩, |+i⟩`)
/// generated from the trace rule.
pub fn qubit_tomography_float() -> ProbabilityTable<f64> {
    qubit_tomography_model()
        .generate_table()
        .expect("fixture model is valid")
        .table
}

/// The qubit table snapped to exact rationals.
pub fn qubit_tomography_exact() -> ProbabilityTable<BigRational> {
    snap_table(&qubit_tomography_float(), 1e-9).expect("entries are 0, 1/2 or 1")
}

/// Size limits for [`random_table`].
#[derive(Debug, Clone, Copy)]
pub struct RandomTableSpec {
    pub max_outcomes: usize,
    pub max_states: usize,
    /// Upper bound on the dimension of the hidden classical model, which
    /// bounds the rank.
    pub max_hidden: usize,
}

impl Default for RandomTableSpec {
    fn default() -> Self {
        Self {
            max_outcomes: 32,
            max_states: 32,
            max_hidden: 8,
        }
    }
}

/// Random valid exact table built as products `p_ij = r_i·s_j` of random
/// vector sets: `s_j` are probability vectors over `d` hidden points, and
/// each measurement assigns every hidden point a distribution over its
/// outcomes. Some states are hidden-point vertices and some are mixtures,
/// so tables exercise both extreme and interior states.
pub fn random_table<R: Rng + ?Sized>(rng: &mut R, spec: RandomTableSpec) -> ProbabilityTable<BigRational> {
    let d = rng.gen_range(1..=spec.max_hidden.max(1));
    let m = rng.gen_range(1..=spec.max_states.max(1));

    // measurements: outcome counts 2..=4 while room remains
    let mut counts = Vec::new();
    let mut used = 0;
    let wanted = rng.gen_range(1..=6);
    while counts.len() < wanted && used < spec.max_outcomes {
        let room = spec.max_outcomes - used;
        let k = if room == 1 { 1 } else { rng.gen_range(2..=room.min(4)) };
        counts.push(k);
        used += k;
    }
    let layout = MeasurementLayout::new(
        counts
            .iter()
            .enumerate()
            .map(|(mi, &k)| Measurement::new(format!("m{}", mi + 1), (1..=k).map(|i| format!("r{i}"))))
            .collect(),
    )
    .expect("generated layout is valid");

    // response[i][h]: probability of outcome i at hidden point h
    let units = 4i64;
    let mut response: Vec<Vec<BigRational>> = vec![Vec::with_capacity(d); used];
    let mut row0 = 0;
    for &k in &counts {
        for _h in 0..d {
            let mut split = vec![0i64; k];
            if rng.gen_bool(0.4) {
                split[rng.gen_range(0..k)] = units;
            } else {
                for _ in 0..units {
                    split[rng.gen_range(0..k)] += 1;
                }
            }
            for (i, &s) in split.iter().enumerate() {
                response[row0 + i].push(ratio(s, units));
            }
        }
        row0 += k;
    }

    let mut vertices: Vec<usize> = (0..d).collect();
    vertices.shuffle(rng);
    let hidden_states: Vec<Vec<BigRational>> = (0..m)
        .map(|j| {
            if j < d.min(m) && rng.gen_bool(0.7) {
                let mut v = vec![ratio(0, 1); d];
                v[vertices[j]] = ratio(1, 1);
                v
            } else {
                let w: Vec<i64> = (0..d).map(|_| rng.gen_range(0..=4)).collect();
                let total: i64 = w.iter().sum();
                if total == 0 {
                    let mut v = vec![ratio(0, 1); d];
                    v[rng.gen_range(0..d)] = ratio(1, 1);
                    v
                } else {
                    w.iter().map(|&x| ratio(x, total)).collect()
                }
            }
        })
        .collect();

    let entries = Matrix::from_fn(used, m, |i, j| {
        response[i]
            .iter()
            .zip(&hidden_states[j])
            .fold(ratio(0, 1), |acc, (r, s)| acc + r * s)
    });
    ProbabilityTable::new(layout, state_names(m), entries, 0.0).expect("product table is valid")
}

/// Float copy of [`random_table`].
pub fn random_float_table<R: Rng + ?Sized>(rng: &mut R, spec: RandomTableSpec) -> ProbabilityTable<f64> {
    random_table(rng, spec)
        .to_float(DEFAULT_TOLERANCE)
        .expect("float conversion of a valid table")
}

/// Appends a random mixture of existing states.
pub fn with_random_mixture<R: Rng + ?Sized>(
    rng: &mut R,
    table: &ProbabilityTable<BigRational>,
    name: &str,
) -> ProbabilityTable<BigRational> {
    let m = table.state_count();
    let picks = rng.gen_range(1..=m.min(4));
    let raw: Vec<(usize, i64)> = (0..picks).map(|_| (rng.gen_range(0..m), rng.gen_range(1..=5))).collect();
    let total: i64 = raw.iter().map(|(_, w)| w).sum();
    let weights: Vec<(usize, BigRational)> = raw.into_iter().map(|(j, w)| (j, ratio(w, total))).collect();
    table.add_mixture_state(name, &weights).expect("weights are convex")
}

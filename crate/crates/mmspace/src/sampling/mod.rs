//! The sampling map, moment functionals and their concentration
//! certificates.

mod gsystem;
mod moments;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::core::MeasuredSpace;
use crate::numeric::{cumulative, pick_index, NeumaierSum, Welford};
use crate::rng::{derive_seed, rng_from};

pub use gsystem::{GSystem, TestFunction};
pub use moments::{
    moment_signature, MomentEntry, MomentOptions, MomentSignature, DEFAULT_EXACT_CAP,
};

/// Guard for exact enumeration: `n^r` may not exceed this.
pub const EXACT_TUPLE_GUARD: f64 = 1e8;

/// Monte-Carlo chunk size. Chunks are seeded independently and merged in
/// index order, so estimates are bitwise independent of worker count.
const MC_CHUNK: u64 = 4096;

#[derive(Debug, Error)]
pub enum SamplingError {
    #[error("exact enumeration too large: n = {n}, order = {r}")]
    TooLarge { n: usize, r: usize },
    #[error("epsilon must be positive, got {0}")]
    NonPositiveEpsilon(f64),
    #[error("delta must be positive, got {0}")]
    NonPositiveDelta(f64),
    #[error("bad parameter: {0}")]
    BadParameter(String),
}

/// One draw from the sampling distribution: a symmetric matrix of pairwise
/// lengths with zero diagonal, rows indexed by the sampled points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<f64>>", into = "Vec<Vec<f64>>")]
pub struct SampleMatrix {
    n: usize,
    entries: Vec<f64>,
}

impl SampleMatrix {
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self, SamplingError> {
        let n = rows.len();
        if n == 0 || rows.iter().any(|r| r.len() != n) {
            return Err(SamplingError::BadParameter(
                "matrix must be square and nonempty".into(),
            ));
        }
        let entries: Vec<f64> = rows.into_iter().flatten().collect();
        for i in 0..n {
            if entries[i * n + i] != 0.0 {
                return Err(SamplingError::BadParameter(format!(
                    "nonzero diagonal at {i}"
                )));
            }
            for j in 0..n {
                let v = entries[i * n + j];
                if !(0.0..=1.0).contains(&v) {
                    return Err(SamplingError::BadParameter(format!(
                        "entry ({i}, {j}) = {v} outside [0,1]"
                    )));
                }
                if entries[i * n + j] != entries[j * n + i] {
                    return Err(SamplingError::BadParameter(format!(
                        "matrix not symmetric at ({i}, {j})"
                    )));
                }
            }
        }
        Ok(Self { n, entries })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn entry(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.n + j]
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.n)
            .map(|i| self.entries[i * self.n..(i + 1) * self.n].to_vec())
            .collect()
    }

    /// Whether the entries satisfy the triangle inequality at tolerance.
    pub fn satisfies_triangle(&self, tol: f64) -> bool {
        let n = self.n;
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    if self.entry(i, k) > self.entry(i, j) + self.entry(j, k) + tol {
                        return false;
                    }
                }
            }
        }
        true
    }
}

impl TryFrom<Vec<Vec<f64>>> for SampleMatrix {
    type Error = SamplingError;

    fn try_from(rows: Vec<Vec<f64>>) -> Result<Self, SamplingError> {
        Self::from_rows(rows)
    }
}

impl From<SampleMatrix> for Vec<Vec<f64>> {
    fn from(m: SampleMatrix) -> Self {
        m.to_rows()
    }
}

/// Draw `n` points independently from the weight vector and then, for each
/// pair, one length from the pair law. Deterministic spaces copy their
/// distances; repeated points sit at distance zero.
pub fn sample_matrix<S: MeasuredSpace>(space: &S, n: usize, seed: u64) -> SampleMatrix {
    assert!(n >= 1, "sample order must be ≥ 1");
    let mut rng = rng_from(seed);
    let cum = cumulative(space.weights());
    let points: Vec<usize> = (0..n).map(|_| pick_index(&cum, rng.random())).collect();
    let mut entries = vec![0.0; n * n];
    for i in 0..n {
        for j in (i + 1)..n {
            let (a, b) = (points[i], points[j]);
            let v = if space.pair_atoms(a, b) == 1 {
                space.lower(a, b)
            } else {
                space.draw_length(a, b, rng.random())
            };
            entries[i * n + j] = v;
            entries[j * n + i] = v;
        }
    }
    SampleMatrix { n, entries }
}

fn guard_exact(n: usize, r: usize) -> Result<(), SamplingError> {
    if (n as f64).powi(r as i32) > EXACT_TUPLE_GUARD {
        return Err(SamplingError::TooLarge { n, r });
    }
    Ok(())
}

/// Exact moment of a test-function system: the weighted sum over all
/// `r`-tuples of points (with repetition) of the product over strict pairs
/// of the expected function value under the pair law. Diagonal factors are
/// the constants `g_ii(0)` and multiply the total only under the diagonal
/// convention.
pub fn moment_exact<S: MeasuredSpace>(g: &GSystem, space: &S) -> Result<f64, SamplingError> {
    let n = space.len();
    let r = g.r();
    guard_exact(n, r)?;
    // ⟨pair law, g_ij⟩ tables for every strict pair.
    let mut tables: Vec<Vec<f64>> = Vec::with_capacity(g.pair_count());
    for i in 0..r {
        for j in (i + 1)..r {
            let f = g.func(i, j);
            let mut table = vec![0.0; n * n];
            for a in 0..n {
                for b in a..n {
                    let v = space.pair_expect(a, b, &|t| f.eval(t));
                    table[a * n + b] = v;
                    table[b * n + a] = v;
                }
            }
            tables.push(table);
        }
    }
    let weights = space.weights();
    let mut total = NeumaierSum::new();
    let mut tuple = vec![0usize; r];
    // Depth-first enumeration with incrementally maintained products;
    // tables are addressed by the row-major strict-pair index.
    fn descend(
        depth: usize,
        partial: f64,
        tuple: &mut Vec<usize>,
        r: usize,
        n: usize,
        weights: &[f64],
        tables: &[Vec<f64>],
        total: &mut NeumaierSum,
    ) {
        if depth == r {
            total.add(partial);
            return;
        }
        for a in 0..n {
            let mut p = partial * weights[a];
            for (i, &t) in tuple.iter().enumerate().take(depth) {
                let pair = i * r - i * (i + 1) / 2 + (depth - i - 1);
                p *= tables[pair][t * n + a];
                if p == 0.0 {
                    break;
                }
            }
            if p == 0.0 && depth + 1 < r {
                // Zero product stays zero; the subtree contributes nothing.
                continue;
            }
            tuple[depth] = a;
            descend(depth + 1, p, tuple, r, n, weights, tables, total);
        }
    }
    descend(0, 1.0, &mut tuple, r, n, weights, &tables, &mut total);
    Ok(total.value() * g.diagonal_product())
}

/// Exact moment of one sampled matrix, treated as the uniformly weighted
/// pseudometric space on its rows.
pub fn moment_of_matrix(g: &GSystem, m: &SampleMatrix) -> Result<f64, SamplingError> {
    struct MatrixSpace<'a> {
        m: &'a SampleMatrix,
        weights: Vec<f64>,
    }
    impl MeasuredSpace for MatrixSpace<'_> {
        fn len(&self) -> usize {
            self.m.n()
        }
        fn weights(&self) -> &[f64] {
            &self.weights
        }
        fn lower(&self, i: usize, j: usize) -> f64 {
            self.m.entry(i, j)
        }
        fn upper(&self, i: usize, j: usize) -> f64 {
            self.m.entry(i, j)
        }
        fn pair_expect(&self, i: usize, j: usize, f: &dyn Fn(f64) -> f64) -> f64 {
            f(self.m.entry(i, j))
        }
        fn draw_length(&self, i: usize, j: usize, _u: f64) -> f64 {
            self.m.entry(i, j)
        }
        fn pair_atoms(&self, _i: usize, _j: usize) -> usize {
            1
        }
    }
    let adapter = MatrixSpace {
        m,
        weights: vec![1.0 / m.n() as f64; m.n()],
    };
    moment_exact(g, &adapter)
}

fn sampled_product<S: MeasuredSpace>(
    g: &GSystem,
    space: &S,
    cum: &[f64],
    rng: &mut impl Rng,
) -> f64 {
    let r = g.r();
    let points: Vec<usize> = (0..r).map(|_| pick_index(cum, rng.random())).collect();
    let mut prod = 1.0;
    for i in 0..r {
        for j in (i + 1)..r {
            let (a, b) = (points[i], points[j]);
            let length = if space.pair_atoms(a, b) == 1 {
                space.lower(a, b)
            } else {
                space.draw_length(a, b, rng.random())
            };
            prod *= g.func(i, j).eval(length);
        }
    }
    prod * g.diagonal_product()
}

/// Monte-Carlo moment estimate: average of the tuple product over
/// independently sampled tuples and lengths, with the plug-in standard
/// error. Work is split into fixed-size chunks with derived seeds; the
/// result does not depend on how many workers execute the chunks.
pub fn moment_monte_carlo<S: MeasuredSpace + Sync>(
    g: &GSystem,
    space: &S,
    samples: u64,
    seed: u64,
) -> Result<(f64, f64), SamplingError> {
    if samples == 0 {
        return Err(SamplingError::BadParameter("samples must be ≥ 1".into()));
    }
    let cum = cumulative(space.weights());
    let chunks = samples.div_ceil(MC_CHUNK);
    let accs: Vec<Welford> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = rng_from(derive_seed(seed, c));
            let len = MC_CHUNK.min(samples - c * MC_CHUNK);
            let mut acc = Welford::new();
            for _ in 0..len {
                acc.push(sampled_product(g, space, &cum, &mut rng));
            }
            acc
        })
        .collect();
    let merged = accs.into_iter().fold(Welford::new(), Welford::merge);
    Ok((merged.mean(), merged.standard_error()))
}

/// Martingale tail certificate for the sampling process: the probability
/// that the moment of an `n`-point sample deviates from the exact moment by
/// at least `epsilon` is at most `2·exp(−ε²n / (2c_g))`, clamped to one.
pub fn azuma_bound(g: &GSystem, epsilon: f64, n: usize) -> Result<f64, SamplingError> {
    if epsilon.is_nan() || epsilon <= 0.0 {
        return Err(SamplingError::NonPositiveEpsilon(epsilon));
    }
    if n == 0 {
        return Err(SamplingError::BadParameter(
            "sample order must be ≥ 1".into(),
        ));
    }
    let c_g = g.c_g();
    let exponent = -(epsilon * epsilon * n as f64) / (2.0 * c_g);
    Ok((2.0 * exponent.exp()).min(1.0))
}

/// Two-sided tail bound for the mean of `m` independent `[0,1]`-valued
/// variables: `2·exp(−δ²m/2)`, clamped to one.
pub fn chernoff_bound(delta: f64, m: u64) -> Result<f64, SamplingError> {
    if delta.is_nan() || delta <= 0.0 {
        return Err(SamplingError::NonPositiveDelta(delta));
    }
    if m == 0 {
        return Err(SamplingError::BadParameter("m must be ≥ 1".into()));
    }
    let exponent = -(delta * delta * m as f64) / 2.0;
    Ok((2.0 * exponent.exp()).min(1.0))
}

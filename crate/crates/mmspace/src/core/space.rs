//! Weighted point sets with deterministic or distribution-valued pairwise
//! lengths, and the shared sampling view over both.

use serde::{Deserialize, Serialize};

use super::dist::DiscreteDistribution;
use super::{CoreError, METRIC_TOL};
use crate::numeric::{self, NeumaierSum};

fn idx(n: usize, i: usize, j: usize) -> usize {
    i * n + j
}

fn validate_weights(weights: &[f64]) -> Result<(), CoreError> {
    if weights.is_empty() {
        return Err(CoreError::EmptySpace);
    }
    for (i, &w) in weights.iter().enumerate() {
        if !w.is_finite() || w <= 0.0 {
            return Err(CoreError::BadWeights {
                index: i,
                reason: format!("weight {w} not strictly positive"),
            });
        }
    }
    let total = numeric::sum(weights);
    if (total - 1.0).abs() > METRIC_TOL {
        return Err(CoreError::BadWeights {
            index: 0,
            reason: format!("weights sum to {total}, expected 1"),
        });
    }
    Ok(())
}

fn flatten_square(rows: Vec<Vec<f64>>, n: usize) -> Result<Vec<f64>, CoreError> {
    if rows.len() != n || rows.iter().any(|r| r.len() != n) {
        return Err(CoreError::DimensionMismatch {
            expected: n,
            got: rows.iter().map(|r| r.len()).max().unwrap_or(rows.len()),
        });
    }
    Ok(rows.into_iter().flatten().collect())
}

/// Checks symmetry, zero diagonal, range and the triangle inequality of a
/// flattened distance matrix; returns whether any off-diagonal distance is
/// zero (pseudometric relaxation).
fn validate_metric(dist: &[f64], n: usize, max_value: f64) -> Result<bool, CoreError> {
    let mut pseudometric = false;
    for i in 0..n {
        let dii = dist[idx(n, i, i)];
        if dii.abs() > METRIC_TOL {
            return Err(CoreError::NonzeroDiagonal { i });
        }
        for j in 0..n {
            let d = dist[idx(n, i, j)];
            if !d.is_finite() || d < -METRIC_TOL || d > max_value + METRIC_TOL {
                return Err(CoreError::DistanceOutOfRange { i, j, value: d });
            }
            if (d - dist[idx(n, j, i)]).abs() > METRIC_TOL {
                return Err(CoreError::NonSymmetric { i, j });
            }
            if i != j && d <= METRIC_TOL {
                pseudometric = true;
            }
        }
    }
    for i in 0..n {
        for j in 0..n {
            let dij = dist[idx(n, i, j)];
            for k in 0..n {
                if dist[idx(n, i, k)] > dij + dist[idx(n, j, k)] + METRIC_TOL {
                    return Err(CoreError::TriangleViolation { i, j, k });
                }
            }
        }
    }
    Ok(pseudometric)
}

/// Finite metric measure space: a full-support probability weight per point
/// and a `[0,1]`-valued distance matrix satisfying the metric axioms at
/// tolerance 1e-12.
///
/// Blow-ups (and degenerate samples) may carry distance zero between
/// distinct points; such spaces are flagged pseudometric and accepted by
/// every downstream operation.
#[derive(Debug, Clone, PartialEq)]
pub struct FiniteMMSpace {
    n: usize,
    weights: Vec<f64>,
    dist: Vec<f64>,
    pseudometric: bool,
}

impl FiniteMMSpace {
    pub fn new(weights: Vec<f64>, dist: Vec<Vec<f64>>) -> Result<Self, CoreError> {
        let n = weights.len();
        validate_weights(&weights)?;
        let dist = flatten_square(dist, n)?;
        let pseudometric = validate_metric(&dist, n, 1.0)?;
        Ok(Self {
            n,
            weights,
            dist,
            pseudometric,
        })
    }

    /// Construction for generators whose output is valid by design.
    pub(crate) fn from_parts_unchecked(weights: Vec<f64>, dist: Vec<f64>) -> Self {
        let n = weights.len();
        debug_assert_eq!(dist.len(), n * n);
        let pseudometric =
            (0..n).any(|i| (0..n).any(|j| i != j && dist[idx(n, i, j)] <= METRIC_TOL));
        Self {
            n,
            weights,
            dist,
            pseudometric,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn dist(&self, i: usize, j: usize) -> f64 {
        self.dist[idx(self.n, i, j)]
    }

    pub fn dist_matrix(&self) -> Vec<Vec<f64>> {
        (0..self.n)
            .map(|i| self.dist[i * self.n..(i + 1) * self.n].to_vec())
            .collect()
    }

    pub fn is_pseudometric(&self) -> bool {
        self.pseudometric
    }

    /// Relabel points by `perm`, where new point `i` is old point `perm[i]`.
    pub fn permuted(&self, perm: &[usize]) -> Self {
        assert_eq!(perm.len(), self.n);
        let weights = perm.iter().map(|&p| self.weights[p]).collect();
        let mut dist = vec![0.0; self.n * self.n];
        for i in 0..self.n {
            for j in 0..self.n {
                dist[idx(self.n, i, j)] = self.dist(perm[i], perm[j]);
            }
        }
        Self::from_parts_unchecked(weights, dist)
    }
}

/// Replace each point by zero-distance copies that split its mass evenly.
/// Sampling-based invariants are unchanged; the output is flagged
/// pseudometric because distinct copies sit at distance zero.
pub fn blow_up(
    space: &FiniteMMSpace,
    multiplicities: &[usize],
) -> Result<FiniteMMSpace, CoreError> {
    if multiplicities.len() != space.n() {
        return Err(CoreError::DimensionMismatch {
            expected: space.n(),
            got: multiplicities.len(),
        });
    }
    if let Some(i) = multiplicities.iter().position(|&m| m == 0) {
        return Err(CoreError::ZeroMultiplicity { index: i });
    }
    let mut weights = Vec::new();
    let mut parent = Vec::new();
    for (i, &m) in multiplicities.iter().enumerate() {
        for _ in 0..m {
            weights.push(space.weights()[i] / m as f64);
            parent.push(i);
        }
    }
    let n = weights.len();
    let mut dist = vec![0.0; n * n];
    for a in 0..n {
        for b in 0..n {
            if parent[a] != parent[b] {
                dist[idx(n, a, b)] = space.dist(parent[a], parent[b]);
            }
        }
    }
    Ok(FiniteMMSpace::from_parts_unchecked(weights, dist))
}

/// Plain finite metric space without a measure; the target `Y` of Lipschitz
/// maps and the carrier of finite pushforward measures. Distances are not
/// capped at one here; operations that require diameter ≤ 1 check it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<f64>>", into = "Vec<Vec<f64>>")]
pub struct FiniteMetric {
    n: usize,
    dist: Vec<f64>,
}

impl FiniteMetric {
    pub fn new(dist: Vec<Vec<f64>>) -> Result<Self, CoreError> {
        let n = dist.len();
        if n == 0 {
            return Err(CoreError::EmptySpace);
        }
        let dist = flatten_square(dist, n)?;
        validate_metric(&dist, n, f64::INFINITY)?;
        Ok(Self { n, dist })
    }

    /// Two points at distance `d`.
    pub fn pair(d: f64) -> Self {
        Self::new(vec![vec![0.0, d], vec![d, 0.0]]).expect("valid two-point metric")
    }

    pub fn singleton() -> Self {
        Self::new(vec![vec![0.0]]).expect("valid one-point metric")
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dist(&self, i: usize, j: usize) -> f64 {
        self.dist[idx(self.n, i, j)]
    }

    pub fn diameter(&self) -> f64 {
        self.dist.iter().cloned().fold(0.0, f64::max)
    }

    /// All distinct pairwise distances, including zero, sorted ascending.
    pub fn distance_levels(&self) -> Vec<f64> {
        let mut levels = vec![0.0];
        for i in 0..self.n {
            for j in (i + 1)..self.n {
                levels.push(self.dist(i, j));
            }
        }
        levels.sort_by(f64::total_cmp);
        levels.dedup();
        levels
    }
}

impl TryFrom<Vec<Vec<f64>>> for FiniteMetric {
    type Error = CoreError;

    fn try_from(rows: Vec<Vec<f64>>) -> Result<Self, CoreError> {
        Self::new(rows)
    }
}

impl From<FiniteMetric> for Vec<Vec<f64>> {
    fn from(m: FiniteMetric) -> Self {
        (0..m.n)
            .map(|i| m.dist[i * m.n..(i + 1) * m.n].to_vec())
            .collect()
    }
}

/// Finite quantum metric measure space: pairwise lengths are probability
/// distributions on `[0,1]` with point mass at zero on the diagonal.
///
/// The constructor enforces the structural axioms; whether independent
/// draws almost surely satisfy the triangle inequality is a separate,
/// exactly computable question answered by
/// [`QMMSpace::triangle_violation_probability`].
#[derive(Debug, Clone, PartialEq)]
pub struct QMMSpace {
    n: usize,
    weights: Vec<f64>,
    dstar: Vec<DiscreteDistribution>,
}

impl QMMSpace {
    pub fn new(
        weights: Vec<f64>,
        dstar: Vec<Vec<DiscreteDistribution>>,
    ) -> Result<Self, CoreError> {
        let n = weights.len();
        validate_weights(&weights)?;
        if dstar.len() != n || dstar.iter().any(|r| r.len() != n) {
            return Err(CoreError::DimensionMismatch {
                expected: n,
                got: dstar.iter().map(|r| r.len()).max().unwrap_or(dstar.len()),
            });
        }
        let flat: Vec<DiscreteDistribution> = dstar.into_iter().flatten().collect();
        for i in 0..n {
            if !flat[idx(n, i, i)].approx_eq(&DiscreteDistribution::zero(), METRIC_TOL) {
                return Err(CoreError::NonzeroDiagonal { i });
            }
            for j in (i + 1)..n {
                if !flat[idx(n, i, j)].approx_eq(&flat[idx(n, j, i)], METRIC_TOL) {
                    return Err(CoreError::NonSymmetric { i, j });
                }
            }
        }
        Ok(Self {
            n,
            weights,
            dstar: flat,
        })
    }

    /// Embed a deterministic space: every pairwise length becomes the point
    /// mass at the corresponding distance.
    pub fn from_mm(space: &FiniteMMSpace) -> Self {
        let n = space.n();
        let mut dstar = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                dstar.push(DiscreteDistribution::point_mass(space.dist(i, j)));
            }
        }
        Self {
            n,
            weights: space.weights().to_vec(),
            dstar,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn dstar(&self, i: usize, j: usize) -> &DiscreteDistribution {
        &self.dstar[idx(self.n, i, j)]
    }

    /// Entrywise infimum of the support; the diagonal is zero.
    pub fn lower_matrix(&self) -> Vec<Vec<f64>> {
        (0..self.n)
            .map(|i| (0..self.n).map(|j| self.dstar(i, j).min_value()).collect())
            .collect()
    }

    /// Entrywise supremum of the support; the diagonal is zero.
    pub fn upper_matrix(&self) -> Vec<Vec<f64>> {
        (0..self.n)
            .map(|i| (0..self.n).map(|j| self.dstar(i, j).max_value()).collect())
            .collect()
    }

    /// Exact probability that three independently drawn lengths of a
    /// μ³-random triple of pairwise distinct points violate some triangle
    /// inequality, by exhaustive summation over atom combinations.
    pub fn triangle_violation_probability(&self) -> f64 {
        let n = self.n;
        let mut total = NeumaierSum::new();
        for i in 0..n {
            for j in (i + 1)..n {
                for k in (j + 1)..n {
                    let triple_weight = 6.0 * self.weights[i] * self.weights[j] * self.weights[k];
                    let mut bad = NeumaierSum::new();
                    for &(a, wa) in self.dstar(i, j).atoms() {
                        for &(b, wb) in self.dstar(j, k).atoms() {
                            for &(c, wc) in self.dstar(i, k).atoms() {
                                let violates = c > a + b + METRIC_TOL
                                    || a > b + c + METRIC_TOL
                                    || b > a + c + METRIC_TOL;
                                if violates {
                                    bad.add(wa * wb * wc);
                                }
                            }
                        }
                    }
                    total.add(triple_weight * bad.value());
                }
            }
        }
        total.value().clamp(0.0, 1.0)
    }

    /// Relabel points by `perm`, where new point `i` is old point `perm[i]`.
    pub fn permuted(&self, perm: &[usize]) -> Self {
        assert_eq!(perm.len(), self.n);
        let weights = perm.iter().map(|&p| self.weights[p]).collect();
        let mut dstar = Vec::with_capacity(self.n * self.n);
        for i in 0..self.n {
            for j in 0..self.n {
                dstar.push(self.dstar(perm[i], perm[j]).clone());
            }
        }
        Self {
            n: self.n,
            weights,
            dstar,
        }
    }
}

/// A deterministic or distribution-valued space, as read from input files.
#[derive(Debug, Clone, PartialEq)]
pub enum Space {
    Mm(FiniteMMSpace),
    Qmm(QMMSpace),
}

impl Space {
    pub fn n(&self) -> usize {
        match self {
            Space::Mm(s) => s.n(),
            Space::Qmm(q) => q.n(),
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Space::Mm(_) => "mm",
            Space::Qmm(_) => "qmm",
        }
    }
}

impl From<FiniteMMSpace> for Space {
    fn from(s: FiniteMMSpace) -> Self {
        Space::Mm(s)
    }
}

impl From<QMMSpace> for Space {
    fn from(q: QMMSpace) -> Self {
        Space::Qmm(q)
    }
}

/// Shared view over everything the sampling and invariant machinery
/// consumes: a weighted point set whose pair `(i, j)` carries a probability
/// distribution of lengths on `[0,1]` (a point mass in the deterministic
/// case).
pub trait MeasuredSpace {
    fn len(&self) -> usize;

    fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn weights(&self) -> &[f64];

    /// Infimum of the support of the pair law.
    fn lower(&self, i: usize, j: usize) -> f64;

    /// Supremum of the support of the pair law.
    fn upper(&self, i: usize, j: usize) -> f64;

    /// Exact expectation of `f` under the pair law.
    fn pair_expect(&self, i: usize, j: usize, f: &dyn Fn(f64) -> f64) -> f64;

    /// Inverse-CDF draw from the pair law at quantile `u ∈ [0,1)`.
    fn draw_length(&self, i: usize, j: usize, u: f64) -> f64;

    /// Number of atoms in the pair law; one means deterministic.
    fn pair_atoms(&self, i: usize, j: usize) -> usize;
}

impl MeasuredSpace for FiniteMMSpace {
    fn len(&self) -> usize {
        self.n
    }

    fn weights(&self) -> &[f64] {
        &self.weights
    }

    fn lower(&self, i: usize, j: usize) -> f64 {
        self.dist(i, j)
    }

    fn upper(&self, i: usize, j: usize) -> f64 {
        self.dist(i, j)
    }

    fn pair_expect(&self, i: usize, j: usize, f: &dyn Fn(f64) -> f64) -> f64 {
        f(self.dist(i, j))
    }

    fn draw_length(&self, i: usize, j: usize, _u: f64) -> f64 {
        self.dist(i, j)
    }

    fn pair_atoms(&self, _i: usize, _j: usize) -> usize {
        1
    }
}

impl MeasuredSpace for QMMSpace {
    fn len(&self) -> usize {
        self.n
    }

    fn weights(&self) -> &[f64] {
        &self.weights
    }

    fn lower(&self, i: usize, j: usize) -> f64 {
        self.dstar(i, j).min_value()
    }

    fn upper(&self, i: usize, j: usize) -> f64 {
        self.dstar(i, j).max_value()
    }

    fn pair_expect(&self, i: usize, j: usize, f: &dyn Fn(f64) -> f64) -> f64 {
        self.dstar(i, j).expect(f)
    }

    fn draw_length(&self, i: usize, j: usize, u: f64) -> f64 {
        self.dstar(i, j).quantile(u)
    }

    fn pair_atoms(&self, i: usize, j: usize) -> usize {
        self.dstar(i, j).atoms().len()
    }
}

impl MeasuredSpace for Space {
    fn len(&self) -> usize {
        self.n()
    }

    fn weights(&self) -> &[f64] {
        match self {
            Space::Mm(s) => s.weights(),
            Space::Qmm(q) => q.weights(),
        }
    }

    fn lower(&self, i: usize, j: usize) -> f64 {
        match self {
            Space::Mm(s) => s.lower(i, j),
            Space::Qmm(q) => q.lower(i, j),
        }
    }

    fn upper(&self, i: usize, j: usize) -> f64 {
        match self {
            Space::Mm(s) => s.upper(i, j),
            Space::Qmm(q) => q.upper(i, j),
        }
    }

    fn pair_expect(&self, i: usize, j: usize, f: &dyn Fn(f64) -> f64) -> f64 {
        match self {
            Space::Mm(s) => s.pair_expect(i, j, f),
            Space::Qmm(q) => q.pair_expect(i, j, f),
        }
    }

    fn draw_length(&self, i: usize, j: usize, u: f64) -> f64 {
        match self {
            Space::Mm(s) => s.draw_length(i, j, u),
            Space::Qmm(q) => q.draw_length(i, j, u),
        }
    }

    fn pair_atoms(&self, i: usize, j: usize) -> usize {
        match self {
            Space::Mm(s) => s.pair_atoms(i, j),
            Space::Qmm(q) => q.pair_atoms(i, j),
        }
    }
}

//! Partial and observable diameter, separation distance, and Lipschitz
//! witnesses, with exact small-instance search and certified heuristics.

mod obsdiam;
mod separation;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::core::{
    DiscreteDistribution, FiniteMetric, MeasuredSpace, PushforwardMeasure, METRIC_TOL,
};

pub use obsdiam::{obs_diam, obs_diam_exact_small, ObsDiamBudget, ObsDiamResult};
pub use separation::{separation, SearchMode, SeparationResult, SeparationWitness};

#[derive(Debug, Error)]
pub enum InvariantError {
    #[error("witness length {got} does not match space size {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("kappa {0} outside (0, 1)")]
    InvalidKappa(f64),
    #[error("no disjoint classes with the requested masses exist")]
    InfeasibleKappas,
    #[error("exact search limited to {limit} points, space has {n}")]
    ExactBudgetExceeded { n: usize, limit: usize },
    #[error("exhaustive map search too large: |Y|^n = {size:e}")]
    TooLarge { size: f64 },
    #[error("target diameter {0} exceeds 1")]
    BadTarget(f64),
    #[error("witness is not 1-Lipschitz (slack {0})")]
    NotLipschitz(f64),
    #[error("bad parameter: {0}")]
    BadParameter(String),
}

/// Target of an observable: the unit interval or a finite metric space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum TargetSpace {
    Interval,
    Finite { metric: FiniteMetric },
}

impl TargetSpace {
    pub fn diameter(&self) -> f64 {
        match self {
            TargetSpace::Interval => 1.0,
            TargetSpace::Finite { metric } => metric.diameter(),
        }
    }
}

/// Per-point values of a map into the target.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WitnessValues {
    /// Image in `[0,1]` per point.
    Interval(Vec<f64>),
    /// Index of the target point per source point.
    Labels(Vec<usize>),
}

impl WitnessValues {
    pub fn len(&self) -> usize {
        match self {
            WitnessValues::Interval(v) => v.len(),
            WitnessValues::Labels(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// A map into a target together with its certification slack: the minimal
/// value of `↓d(x_i, x_j) − d_Y(f(x_i), f(x_j))` over pairs. Slack at least
/// −1e-12 certifies the map 1-Lipschitz.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LipschitzWitness {
    pub target: TargetSpace,
    pub values: WitnessValues,
    pub slack: f64,
}

impl LipschitzWitness {
    pub fn interval(values: Vec<f64>) -> Self {
        Self {
            target: TargetSpace::Interval,
            values: WitnessValues::Interval(values),
            slack: f64::NAN,
        }
    }

    pub fn finite(metric: FiniteMetric, labels: Vec<usize>) -> Self {
        Self {
            target: TargetSpace::Finite { metric },
            values: WitnessValues::Labels(labels),
            slack: f64::NAN,
        }
    }

    fn target_dist(&self, i: usize, j: usize) -> Result<f64, InvariantError> {
        match (&self.target, &self.values) {
            (TargetSpace::Interval, WitnessValues::Interval(v)) => Ok((v[i] - v[j]).abs()),
            (TargetSpace::Finite { metric }, WitnessValues::Labels(l)) => {
                if l[i] >= metric.n() || l[j] >= metric.n() {
                    return Err(InvariantError::BadParameter(format!(
                        "label {} outside target of size {}",
                        l[i].max(l[j]),
                        metric.n()
                    )));
                }
                Ok(metric.dist(l[i], l[j]))
            }
            _ => Err(InvariantError::BadParameter(
                "witness values do not match the target kind".into(),
            )),
        }
    }
}

/// Certify a witness against the source space: the map is 1-Lipschitz iff
/// every lower pairwise length dominates the target distance at tolerance.
/// Returns the verdict and the slack over pairs (1 for fewer than two
/// points, since lengths never exceed one).
pub fn lipschitz_check<S: MeasuredSpace>(
    space: &S,
    witness: &LipschitzWitness,
) -> Result<(bool, f64), InvariantError> {
    let n = space.len();
    if witness.values.len() != n {
        return Err(InvariantError::DimensionMismatch {
            expected: n,
            got: witness.values.len(),
        });
    }
    let mut slack = 1.0f64;
    for i in 0..n {
        for j in (i + 1)..n {
            let gap = space.lower(i, j) - witness.target_dist(i, j)?;
            slack = slack.min(gap);
        }
    }
    Ok((slack >= -METRIC_TOL, slack))
}

/// Push the space's weights forward under the witness map. In certified
/// mode the witness must pass [`lipschitz_check`] first.
pub fn pushforward<S: MeasuredSpace>(
    space: &S,
    witness: &LipschitzWitness,
    certified: bool,
) -> Result<PushforwardMeasure, InvariantError> {
    if certified {
        let (ok, slack) = lipschitz_check(space, witness)?;
        if !ok {
            return Err(InvariantError::NotLipschitz(slack));
        }
    } else if witness.values.len() != space.len() {
        return Err(InvariantError::DimensionMismatch {
            expected: space.len(),
            got: witness.values.len(),
        });
    }
    let weights = space.weights();
    match (&witness.target, &witness.values) {
        (TargetSpace::Interval, WitnessValues::Interval(v)) => {
            let atoms: Vec<(f64, f64)> = v.iter().cloned().zip(weights.iter().cloned()).collect();
            let measure = DiscreteDistribution::new(atoms)
                .map_err(|e| InvariantError::BadParameter(e.to_string()))?;
            Ok(PushforwardMeasure::interval(measure))
        }
        (TargetSpace::Finite { metric }, WitnessValues::Labels(labels)) => {
            let mut masses = vec![0.0; metric.n()];
            for (&label, &w) in labels.iter().zip(weights) {
                if label >= metric.n() {
                    return Err(InvariantError::BadParameter(format!(
                        "label {label} outside target of size {}",
                        metric.n()
                    )));
                }
                masses[label] += w;
            }
            PushforwardMeasure::finite(metric.clone(), masses)
                .map_err(|e| InvariantError::BadParameter(e.to_string()))
        }
        _ => Err(InvariantError::BadParameter(
            "witness values do not match the target kind".into(),
        )),
    }
}

/// Outcome of a partial-diameter computation. The finite-carrier search is
/// exact up to 24 target points; larger instances fall back to a greedy
/// feasibility check and are flagged approximate (an upper bound).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PartialDiamResult {
    pub value: f64,
    pub exact: bool,
}

/// Exact clique search limit for the finite-carrier partial diameter.
const CLIQUE_EXACT_LIMIT: usize = 24;

fn check_kappa(kappa: f64) -> Result<(), InvariantError> {
    if !(kappa > 0.0 && kappa < 1.0) {
        return Err(InvariantError::InvalidKappa(kappa));
    }
    Ok(())
}

/// Least diameter of a carrier subset holding mass at least `1 − κ`.
///
/// Interval carrier: a set of diameter `D` sits inside a closed interval of
/// length `D`, so a sliding window over the sorted atoms is exact. Finite
/// carrier: candidate diameters are the pairwise distances (plus zero); a
/// candidate is feasible when the threshold graph contains a clique of
/// sufficient mass, decided by branch and bound. Ties break toward the
/// smaller diameter.
pub fn partial_diameter(
    measure: &PushforwardMeasure,
    kappa: f64,
) -> Result<PartialDiamResult, InvariantError> {
    check_kappa(kappa)?;
    // Keep the threshold strictly positive so an empty window never
    // qualifies even when κ sits within an ulp of one.
    let target_mass = (1.0 - kappa - METRIC_TOL).max(f64::MIN_POSITIVE);
    match measure {
        PushforwardMeasure::Interval { measure } => {
            let atoms = measure.atoms();
            let mut best = f64::INFINITY;
            let mut hi = 0usize;
            let mut mass = 0.0f64;
            for lo in 0..atoms.len() {
                while hi < atoms.len() && mass < target_mass {
                    mass += atoms[hi].1;
                    hi += 1;
                }
                if mass < target_mass {
                    break;
                }
                best = best.min(atoms[hi - 1].0 - atoms[lo].0);
                mass -= atoms[lo].1;
            }
            Ok(PartialDiamResult {
                value: best.max(0.0),
                exact: true,
            })
        }
        PushforwardMeasure::Finite { metric, weights } => {
            let n = metric.n();
            let levels = metric.distance_levels();
            let exact = n <= CLIQUE_EXACT_LIMIT;
            for &level in &levels {
                let feasible = if exact {
                    clique_mass_reaches(metric, weights, level, target_mass)
                } else {
                    greedy_clique_reaches(metric, weights, level, target_mass)
                };
                if feasible {
                    return Ok(PartialDiamResult {
                        value: level,
                        exact,
                    });
                }
            }
            // Total mass is one, so the diameter level is always feasible;
            // unreachable for valid measures.
            Ok(PartialDiamResult {
                value: metric.diameter(),
                exact,
            })
        }
    }
}

/// Branch-and-bound decision: does the graph of pairs at distance ≤ level
/// contain a clique of mass ≥ target?
fn clique_mass_reaches(metric: &FiniteMetric, weights: &[f64], level: f64, target: f64) -> bool {
    let n = metric.n();
    // Vertices sorted by weight descending for stronger early bounds.
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| weights[b].total_cmp(&weights[a]));
    let w: Vec<f64> = order.iter().map(|&v| weights[v]).collect();
    let mut adj = vec![0u32; n];
    for i in 0..n {
        for j in 0..n {
            if i != j && metric.dist(order[i], order[j]) <= level + METRIC_TOL {
                adj[i] |= 1 << j;
            }
        }
    }
    fn expand(cand: u32, current: f64, w: &[f64], adj: &[u32], target: f64) -> bool {
        if current >= target {
            return true;
        }
        if cand == 0 {
            return false;
        }
        let mut rest = current;
        let mut m = cand;
        while m != 0 {
            let v = m.trailing_zeros() as usize;
            rest += w[v];
            m &= m - 1;
        }
        if rest < target {
            return false;
        }
        let v = cand.trailing_zeros() as usize;
        let without = cand & !(1 << v);
        expand(cand & adj[v], current + w[v], w, adj, target)
            || expand(without, current, w, adj, target)
    }
    let full = if n >= 32 { u32::MAX } else { (1u32 << n) - 1 };
    expand(full, 0.0, &w, &adj, target)
}

/// Greedy fallback for large carriers: grow a clique from each seed by
/// repeatedly adding the heaviest compatible vertex.
fn greedy_clique_reaches(metric: &FiniteMetric, weights: &[f64], level: f64, target: f64) -> bool {
    let n = metric.n();
    for seed in 0..n {
        let mut members = vec![seed];
        let mut mass = weights[seed];
        loop {
            if mass >= target {
                return true;
            }
            let mut best: Option<usize> = None;
            for v in 0..n {
                if members.contains(&v) {
                    continue;
                }
                let compatible = members
                    .iter()
                    .all(|&m| metric.dist(m, v) <= level + METRIC_TOL);
                if compatible && best.is_none_or(|b| weights[v] > weights[b]) {
                    best = Some(v);
                }
            }
            match best {
                Some(v) => {
                    mass += weights[v];
                    members.push(v);
                }
                None => break,
            }
        }
        if mass >= target {
            return true;
        }
    }
    false
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::core::{complete_graph_space, FiniteMMSpace};

    fn measure_of(atoms: Vec<(f64, f64)>) -> PushforwardMeasure {
        PushforwardMeasure::interval(DiscreteDistribution::new(atoms).unwrap())
    }

    #[test]
    fn two_atom_interval_measure() {
        let m = measure_of(vec![(0.0, 0.5), (1.0, 0.5)]);
        // κ = 0.6: half the mass suffices, a single atom has diameter 0.
        assert_eq!(partial_diameter(&m, 0.6).unwrap().value, 0.0);
        // κ = 0.3: both atoms are needed.
        assert_eq!(partial_diameter(&m, 0.3).unwrap().value, 1.0);
    }

    #[test]
    fn uniform_grid_window() {
        let atoms: Vec<(f64, f64)> = (0..10).map(|k| (k as f64 / 10.0, 0.1)).collect();
        let m = measure_of(atoms);
        // Keep 8 of 10 atoms: best window spans 0.7.
        let v = partial_diameter(&m, 0.2).unwrap().value;
        assert!((v - 0.7).abs() < 1e-12, "got {v}");
    }

    #[test]
    fn finite_carrier_matches_subset_oracle() {
        use rand::Rng;
        let mut rng = crate::rng::rng_from(23);
        for _ in 0..40 {
            let n = rng.random_range(2..7usize);
            // Random metric via shortest-path completion of random weights.
            let mut d = vec![vec![0.0f64; n]; n];
            for i in 0..n {
                for j in (i + 1)..n {
                    let v = 0.2 + 0.8 * rng.random::<f64>();
                    d[i][j] = v;
                    d[j][i] = v;
                }
            }
            for k in 0..n {
                for i in 0..n {
                    for j in 0..n {
                        if d[i][k] + d[k][j] < d[i][j] {
                            d[i][j] = d[i][k] + d[k][j];
                        }
                    }
                }
            }
            let metric = FiniteMetric::new(d.clone()).unwrap();
            let mut w: Vec<f64> = (0..n).map(|_| rng.random::<f64>() + 0.1).collect();
            let total: f64 = w.iter().sum();
            w.iter_mut().for_each(|x| *x /= total);
            let kappa = 0.1 + 0.8 * rng.random::<f64>();
            let measure = PushforwardMeasure::finite(metric, w.clone()).unwrap();
            let got = partial_diameter(&measure, kappa).unwrap();
            assert!(got.exact);

            // Oracle: enumerate every subset.
            let mut best = f64::INFINITY;
            for mask in 0u32..(1 << n) {
                let mass: f64 = (0..n).filter(|&i| mask & (1 << i) != 0).map(|i| w[i]).sum();
                if mass < 1.0 - kappa - METRIC_TOL {
                    continue;
                }
                let mut diam = 0.0f64;
                for i in 0..n {
                    for j in (i + 1)..n {
                        if mask & (1 << i) != 0 && mask & (1 << j) != 0 {
                            diam = diam.max(d[i][j]);
                        }
                    }
                }
                best = best.min(diam);
            }
            assert!(
                (got.value - best).abs() < 1e-12,
                "value {} vs oracle {best}",
                got.value
            );
        }
    }

    #[test]
    fn kappa_validation() {
        let m = measure_of(vec![(0.5, 1.0)]);
        assert!(matches!(
            partial_diameter(&m, 0.0),
            Err(InvariantError::InvalidKappa(_))
        ));
        assert!(matches!(
            partial_diameter(&m, 1.0),
            Err(InvariantError::InvalidKappa(_))
        ));
    }

    #[test]
    fn constant_and_identity_witnesses() {
        let s = FiniteMMSpace::new(vec![0.5, 0.5], vec![vec![0.0, 0.8], vec![0.8, 0.0]]).unwrap();
        let constant = LipschitzWitness::interval(vec![0.3, 0.3]);
        let (ok, slack) = lipschitz_check(&s, &constant).unwrap();
        assert!(ok);
        assert_eq!(slack, 0.8);

        // A map realizing the distance exactly has zero slack.
        let iso = LipschitzWitness::interval(vec![0.0, 0.8]);
        let (ok, slack) = lipschitz_check(&s, &iso).unwrap();
        assert!(ok);
        assert!(slack.abs() < 1e-15);

        let too_far = LipschitzWitness::interval(vec![0.0, 0.9]);
        let (ok, slack) = lipschitz_check(&s, &too_far).unwrap();
        assert!(!ok);
        assert!(slack < -0.09);
    }

    #[test]
    fn complete_graph_admits_every_map_into_small_targets() {
        use rand::Rng;
        let s = complete_graph_space(6).unwrap();
        let y = FiniteMetric::pair(0.5);
        let mut rng = crate::rng::rng_from(3);
        for _ in 0..50 {
            let labels: Vec<usize> = (0..6).map(|_| rng.random_range(0..2)).collect();
            let w = LipschitzWitness::finite(y.clone(), labels);
            assert!(lipschitz_check(&s, &w).unwrap().0);
        }
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let s = complete_graph_space(3).unwrap();
        let w = LipschitzWitness::interval(vec![0.0, 0.5]);
        assert!(matches!(
            lipschitz_check(&s, &w),
            Err(InvariantError::DimensionMismatch {
                expected: 3,
                got: 2
            })
        ));
    }

    #[test]
    fn pushforward_conserves_mass() {
        let s = FiniteMMSpace::new(
            vec![0.25, 0.35, 0.4],
            vec![
                vec![0.0, 0.5, 0.5],
                vec![0.5, 0.0, 0.5],
                vec![0.5, 0.5, 0.0],
            ],
        )
        .unwrap();
        let constant = LipschitzWitness::interval(vec![0.2, 0.2, 0.2]);
        let m = pushforward(&s, &constant, true).unwrap();
        match &m {
            PushforwardMeasure::Interval { measure } => {
                assert!(measure.is_point_mass());
                assert_eq!(measure.min_value(), 0.2);
            }
            _ => panic!("expected interval measure"),
        }
        assert!((m.total_mass() - 1.0).abs() < 1e-12);

        let y = FiniteMetric::pair(0.5);
        let labels = LipschitzWitness::finite(y, vec![0, 1, 0]);
        let m = pushforward(&s, &labels, true).unwrap();
        match &m {
            PushforwardMeasure::Finite { weights, .. } => {
                assert!((weights[0] - 0.65).abs() < 1e-12);
                assert!((weights[1] - 0.35).abs() < 1e-12);
            }
            _ => panic!("expected finite measure"),
        }

        // Identity on a two-point space keeps the original weights.
        let two = FiniteMMSpace::new(vec![0.3, 0.7], vec![vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        let iso = LipschitzWitness::interval(vec![0.0, 1.0]);
        match pushforward(&two, &iso, true).unwrap() {
            PushforwardMeasure::Interval { measure } => {
                assert_eq!(measure.atoms(), &[(0.0, 0.3), (1.0, 0.7)]);
            }
            _ => panic!("expected interval measure"),
        }
    }

    #[test]
    fn certified_pushforward_rejects_expanding_maps() {
        let s = FiniteMMSpace::new(vec![0.5, 0.5], vec![vec![0.0, 0.2], vec![0.2, 0.0]]).unwrap();
        let w = LipschitzWitness::interval(vec![0.0, 0.9]);
        assert!(matches!(
            pushforward(&s, &w, true),
            Err(InvariantError::NotLipschitz(_))
        ));
        assert!(pushforward(&s, &w, false).is_ok());
    }

    #[test]
    fn partial_diameter_monotone_in_kappa() {
        let atoms: Vec<(f64, f64)> = (0..8).map(|k| (k as f64 / 8.0, 0.125)).collect();
        let m = measure_of(atoms);
        let mut last = f64::INFINITY;
        for kappa in [0.05, 0.1, 0.2, 0.4, 0.6, 0.8] {
            let v = partial_diameter(&m, kappa).unwrap().value;
            assert!(v <= last + 1e-15);
            last = v;
        }
    }
}

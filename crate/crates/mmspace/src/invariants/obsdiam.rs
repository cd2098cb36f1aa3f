//! Observable diameter: the largest partial diameter of a pushforward under
//! a 1-Lipschitz observable. The search returns a certified witness, so the
//! reported value is a lower bound on the supremum; the exhaustive variant
//! is exact on small instances.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{
    lipschitz_check, partial_diameter, pushforward, InvariantError, LipschitzWitness, TargetSpace,
};
use crate::core::{FiniteMetric, MeasuredSpace, METRIC_TOL};
use crate::rng::{derive_seed, rng_from};

/// Search effort. Candidate observables are the lower-distance maps to each
/// point; each restart hill-climbs for `iterations` proposals. Results are
/// monotone in both knobs for a fixed seed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObsDiamBudget {
    pub restarts: usize,
    pub iterations: usize,
}

impl Default for ObsDiamBudget {
    fn default() -> Self {
        Self {
            restarts: 4,
            iterations: 1500,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObsDiamResult {
    pub value: f64,
    pub witness: LipschitzWitness,
}

/// Exhaustive map enumeration limit: |Y|^n may not exceed this.
const EXACT_MAP_GUARD: f64 = 1e7;

fn objective<S: MeasuredSpace>(
    space: &S,
    witness: &LipschitzWitness,
    kappa: f64,
) -> Result<f64, InvariantError> {
    let measure = pushforward(space, witness, false)?;
    Ok(partial_diameter(&measure, kappa)?.value)
}

/// Best certified observable found within the budget: seeds the search with
/// the lower-distance map to every point, then hill-climbs — coordinate
/// proposals projected onto the Lipschitz constraints for the interval
/// target, single-label swaps for finite targets.
pub fn obs_diam<S: MeasuredSpace>(
    space: &S,
    target: &TargetSpace,
    kappa: f64,
    budget: &ObsDiamBudget,
    seed: u64,
) -> Result<ObsDiamResult, InvariantError> {
    super::check_kappa(kappa)?;
    let diam = target.diameter();
    if diam > 1.0 + METRIC_TOL {
        return Err(InvariantError::BadTarget(diam));
    }
    match target {
        TargetSpace::Interval => obs_diam_interval(space, kappa, budget, seed),
        TargetSpace::Finite { metric } => obs_diam_finite(space, metric, kappa, budget, seed),
    }
}

fn certify<S: MeasuredSpace>(
    space: &S,
    mut witness: LipschitzWitness,
) -> Result<Option<LipschitzWitness>, InvariantError> {
    let (ok, slack) = lipschitz_check(space, &witness)?;
    if !ok {
        return Ok(None);
    }
    witness.slack = slack;
    Ok(Some(witness))
}

fn obs_diam_interval<S: MeasuredSpace>(
    space: &S,
    kappa: f64,
    budget: &ObsDiamBudget,
    seed: u64,
) -> Result<ObsDiamResult, InvariantError> {
    let n = space.len();
    let mut best_values = vec![0.0; n];
    let mut best_value = objective(
        space,
        &LipschitzWitness::interval(best_values.clone()),
        kappa,
    )?;
    // Lower-distance observables f(x) = ↓d(x, p); 1-Lipschitz whenever the
    // lower matrix satisfies the triangle inequality, certified either way.
    for p in 0..n {
        let values: Vec<f64> = (0..n).map(|i| space.lower(i, p)).collect();
        if let Some(w) = certify(space, LipschitzWitness::interval(values.clone()))? {
            let v = objective(space, &w, kappa)?;
            if v > best_value {
                best_value = v;
                best_values = values;
            }
        }
    }
    // Hill-climb: move one coordinate, clamp into the feasible box implied
    // by the other values, keep improvements.
    for restart in 0..budget.restarts {
        let mut rng = rng_from(derive_seed(seed, restart as u64));
        let mut values = if restart == 0 {
            best_values.clone()
        } else {
            match random_feasible_values(space, &mut rng) {
                Some(v) => v,
                None => best_values.clone(),
            }
        };
        let mut current = objective(space, &LipschitzWitness::interval(values.clone()), kappa)?;
        for _ in 0..budget.iterations {
            let i = rng.random_range(0..n);
            let step = 0.5 * (rng.random::<f64>() - 0.5);
            let mut lo = 0.0f64;
            let mut hi = 1.0f64;
            for j in 0..n {
                if j != i {
                    let d = space.lower(i.min(j), i.max(j));
                    lo = lo.max(values[j] - d);
                    hi = hi.min(values[j] + d);
                }
            }
            if lo > hi {
                continue;
            }
            let proposed = (values[i] + step).clamp(lo, hi);
            if proposed == values[i] {
                continue;
            }
            let old = values[i];
            values[i] = proposed;
            let v = objective(space, &LipschitzWitness::interval(values.clone()), kappa)?;
            if v > current {
                current = v;
            } else {
                values[i] = old;
            }
        }
        if current > best_value {
            best_value = current;
            best_values = values;
        }
    }
    let witness = certify(space, LipschitzWitness::interval(best_values))?
        .expect("projected values satisfy the Lipschitz constraints");
    let value = objective(space, &witness, kappa)?;
    Ok(ObsDiamResult { value, witness })
}

/// Greedy random extension: each new value is drawn inside the interval
/// allowed by the already-placed ones. For triangle-consistent lower
/// matrices the box is never empty.
fn random_feasible_values<S: MeasuredSpace>(space: &S, rng: &mut impl Rng) -> Option<Vec<f64>> {
    let n = space.len();
    let mut values = Vec::with_capacity(n);
    for i in 0..n {
        let mut lo = 0.0f64;
        let mut hi = 1.0f64;
        for (j, &vj) in values.iter().enumerate() {
            let d = space.lower(j, i);
            lo = lo.max(vj - d);
            hi = hi.min(vj + d);
        }
        if lo > hi + METRIC_TOL {
            return None;
        }
        let hi = hi.max(lo);
        values.push(lo + (hi - lo) * rng.random::<f64>());
    }
    Some(values)
}

fn obs_diam_finite<S: MeasuredSpace>(
    space: &S,
    metric: &FiniteMetric,
    kappa: f64,
    budget: &ObsDiamBudget,
    seed: u64,
) -> Result<ObsDiamResult, InvariantError> {
    let n = space.len();
    let k = metric.n();
    let witness_of = |labels: Vec<usize>| LipschitzWitness::finite(metric.clone(), labels);
    let mut best_labels = vec![0usize; n];
    let mut best_value = objective(space, &witness_of(best_labels.clone()), kappa)?;
    for restart in 0..budget.restarts.max(1) {
        let mut rng = rng_from(derive_seed(seed, restart as u64));
        let mut labels = match random_feasible_labels(space, metric, &mut rng) {
            Some(l) => l,
            None => vec![0usize; n],
        };
        let mut current = objective(space, &witness_of(labels.clone()), kappa)?;
        for _ in 0..budget.iterations {
            let i = rng.random_range(0..n);
            let new_label = rng.random_range(0..k);
            if new_label == labels[i] {
                continue;
            }
            let feasible = (0..n).all(|j| {
                j == i
                    || space.lower(i.min(j), i.max(j))
                        >= metric.dist(new_label, labels[j]) - METRIC_TOL
            });
            if !feasible {
                continue;
            }
            let old = labels[i];
            labels[i] = new_label;
            let v = objective(space, &witness_of(labels.clone()), kappa)?;
            if v > current {
                current = v;
            } else {
                labels[i] = old;
            }
        }
        if current > best_value {
            best_value = current;
            best_labels = labels;
        }
    }
    let witness = certify(space, witness_of(best_labels))?
        .expect("swap moves preserve the Lipschitz constraints");
    let value = objective(space, &witness, kappa)?;
    Ok(ObsDiamResult { value, witness })
}

fn random_feasible_labels<S: MeasuredSpace>(
    space: &S,
    metric: &FiniteMetric,
    rng: &mut impl Rng,
) -> Option<Vec<usize>> {
    let n = space.len();
    let k = metric.n();
    let mut labels: Vec<usize> = Vec::with_capacity(n);
    for i in 0..n {
        let offset = rng.random_range(0..k);
        let mut chosen = None;
        for step in 0..k {
            let cand = (offset + step) % k;
            let ok = labels
                .iter()
                .enumerate()
                .all(|(j, &lj)| space.lower(j, i) >= metric.dist(cand, lj) - METRIC_TOL);
            if ok {
                chosen = Some(cand);
                break;
            }
        }
        labels.push(chosen?);
    }
    Some(labels)
}

/// Exact supremum over all 1-Lipschitz maps into a finite target by
/// exhaustive enumeration with feasibility pruning. Guarded by
/// `|Y|^n ≤ 1e7`.
pub fn obs_diam_exact_small<S: MeasuredSpace>(
    space: &S,
    target: &FiniteMetric,
    kappa: f64,
) -> Result<f64, InvariantError> {
    super::check_kappa(kappa)?;
    let diam = target.diameter();
    if diam > 1.0 + METRIC_TOL {
        return Err(InvariantError::BadTarget(diam));
    }
    let n = space.len();
    let k = target.n();
    let size = (k as f64).powi(n as i32);
    if size > EXACT_MAP_GUARD {
        return Err(InvariantError::TooLarge { size });
    }
    let weights = space.weights();
    let mut lower = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            lower[i * n + j] = space.lower(i, j);
        }
    }
    let mut labels = vec![0usize; n];
    let mut best = 0.0f64;

    fn descend(
        depth: usize,
        n: usize,
        k: usize,
        lower: &[f64],
        target: &FiniteMetric,
        weights: &[f64],
        kappa: f64,
        labels: &mut Vec<usize>,
        best: &mut f64,
    ) -> Result<(), InvariantError> {
        if depth == n {
            let mut masses = vec![0.0; k];
            for (i, &l) in labels.iter().enumerate() {
                masses[l] += weights[i];
            }
            let measure = crate::core::PushforwardMeasure::finite(target.clone(), masses)
                .map_err(|e| InvariantError::BadParameter(e.to_string()))?;
            let value = partial_diameter(&measure, kappa)?.value;
            if value > *best {
                *best = value;
            }
            return Ok(());
        }
        for cand in 0..k {
            let feasible = (0..depth)
                .all(|j| lower[j * n + depth] >= target.dist(labels[j], cand) - METRIC_TOL);
            if !feasible {
                continue;
            }
            labels[depth] = cand;
            descend(depth + 1, n, k, lower, target, weights, kappa, labels, best)?;
        }
        Ok(())
    }

    descend(
        0,
        n,
        k,
        &lower,
        target,
        weights,
        kappa,
        &mut labels,
        &mut best,
    )?;
    Ok(best)
}

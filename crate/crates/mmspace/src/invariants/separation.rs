//! Separation distance: the largest δ admitting disjoint point classes of
//! prescribed masses pairwise δ-apart.

use serde::{Deserialize, Serialize};

use super::InvariantError;
use crate::core::{MeasuredSpace, METRIC_TOL};

/// Exact assignment search is limited to this many points.
const EXACT_LIMIT: usize = 18;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SearchMode {
    Exact,
    Heuristic,
}

/// A certified class assignment: `None` discards the point, `Some(c)` puts
/// it in class `c`. Class masses meet the requested κ's and all cross-class
/// lower distances are at least `delta`, both at tolerance 1e-12.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeparationWitness {
    pub assignment: Vec<Option<usize>>,
    pub delta: f64,
    pub masses: Vec<f64>,
}

impl SeparationWitness {
    /// Re-validate against raw data.
    pub fn check<S: MeasuredSpace>(&self, space: &S, kappas: &[f64]) -> bool {
        let n = space.len();
        if self.assignment.len() != n || self.masses.len() != kappas.len() {
            return false;
        }
        let mut masses = vec![0.0; kappas.len()];
        for (i, a) in self.assignment.iter().enumerate() {
            if let Some(c) = a {
                if *c >= kappas.len() {
                    return false;
                }
                masses[*c] += space.weights()[i];
            }
        }
        if masses.iter().zip(kappas).any(|(m, k)| *m < k - METRIC_TOL) {
            return false;
        }
        for i in 0..n {
            for j in (i + 1)..n {
                if let (Some(a), Some(b)) = (self.assignment[i], self.assignment[j]) {
                    if a != b && space.lower(i, j) < self.delta - METRIC_TOL {
                        return false;
                    }
                }
            }
        }
        true
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeparationResult {
    pub delta: f64,
    pub witness: SeparationWitness,
    pub mode: SearchMode,
}

struct Problem<'a> {
    n: usize,
    weights: &'a [f64],
    lower: Vec<f64>,
    kappas: &'a [f64],
}

impl Problem<'_> {
    fn lower(&self, i: usize, j: usize) -> f64 {
        self.lower[i * self.n + j]
    }

    /// Exact feasibility at level delta: branch and bound over per-point
    /// choices (one of the classes or discard), pruning on mass deficits.
    fn exact_feasible(&self, delta: f64) -> Option<Vec<Option<usize>>> {
        let classes = self.kappas.len();
        // Heavy points first: deficits shrink fastest.
        let mut order: Vec<usize> = (0..self.n).collect();
        order.sort_by(|&a, &b| self.weights[b].total_cmp(&self.weights[a]));
        let remaining_after: Vec<f64> = {
            let mut suffix = vec![0.0; self.n + 1];
            for k in (0..self.n).rev() {
                suffix[k] = suffix[k + 1] + self.weights[order[k]];
            }
            suffix
        };
        let mut assignment: Vec<Option<usize>> = vec![None; self.n];
        let mut masses = vec![0.0f64; classes];

        fn deficit(masses: &[f64], kappas: &[f64]) -> f64 {
            masses
                .iter()
                .zip(kappas)
                .map(|(m, k)| (k - m).max(0.0))
                .sum()
        }

        fn descend(
            k: usize,
            p: &Problem<'_>,
            order: &[usize],
            remaining_after: &[f64],
            delta: f64,
            assignment: &mut Vec<Option<usize>>,
            masses: &mut Vec<f64>,
        ) -> bool {
            if deficit(masses, p.kappas) <= METRIC_TOL {
                return true;
            }
            if k == p.n {
                return false;
            }
            if deficit(masses, p.kappas) > remaining_after[k] + METRIC_TOL {
                return false;
            }
            let point = order[k];
            // Try classes by decreasing deficit, then discard.
            let mut class_order: Vec<usize> = (0..p.kappas.len()).collect();
            class_order
                .sort_by(|&a, &b| (p.kappas[b] - masses[b]).total_cmp(&(p.kappas[a] - masses[a])));
            for &c in &class_order {
                let compatible = order[..k].iter().all(|&q| match assignment[q] {
                    Some(cq) if cq != c => p.lower(point, q) >= delta - METRIC_TOL,
                    _ => true,
                });
                if !compatible {
                    continue;
                }
                assignment[point] = Some(c);
                masses[c] += p.weights[point];
                if descend(k + 1, p, order, remaining_after, delta, assignment, masses) {
                    return true;
                }
                masses[c] -= p.weights[point];
                assignment[point] = None;
            }
            descend(k + 1, p, order, remaining_after, delta, assignment, masses)
        }

        if descend(
            0,
            self,
            &order,
            &remaining_after,
            delta,
            &mut assignment,
            &mut masses,
        ) {
            Some(assignment)
        } else {
            None
        }
    }

    /// Heuristic feasibility: points closer than delta are merged into
    /// components (cross-class pairs must be δ-apart, so a component can
    /// serve only one class); components are packed greedily onto the
    /// largest remaining deficit, heaviest first, then repaired by moving
    /// components out of over-filled classes. Any component-to-class
    /// assignment is distance-feasible, so only the masses matter here.
    fn heuristic_feasible(&self, delta: f64) -> Option<Vec<Option<usize>>> {
        let classes = self.kappas.len();
        let mut comp = vec![usize::MAX; self.n];
        let mut count = 0;
        for start in 0..self.n {
            if comp[start] != usize::MAX {
                continue;
            }
            let mut stack = vec![start];
            comp[start] = count;
            while let Some(v) = stack.pop() {
                for u in 0..self.n {
                    if comp[u] == usize::MAX && self.lower(v, u) < delta - METRIC_TOL {
                        comp[u] = count;
                        stack.push(u);
                    }
                }
            }
            count += 1;
        }
        let mut comp_mass = vec![0.0f64; count];
        for i in 0..self.n {
            comp_mass[comp[i]] += self.weights[i];
        }
        let mut comp_order: Vec<usize> = (0..count).collect();
        comp_order.sort_by(|&a, &b| comp_mass[b].total_cmp(&comp_mass[a]));
        let mut masses = vec![0.0f64; classes];
        let mut comp_class: Vec<Option<usize>> = vec![None; count];
        for &c in &comp_order {
            let best = (0..classes)
                .max_by(|&a, &b| {
                    (self.kappas[a] - masses[a]).total_cmp(&(self.kappas[b] - masses[b]))
                })
                .filter(|&cl| self.kappas[cl] - masses[cl] > METRIC_TOL);
            if let Some(cl) = best {
                comp_class[c] = Some(cl);
                masses[cl] += comp_mass[c];
            }
        }
        let deficient =
            |masses: &[f64]| (0..classes).find(|&cl| masses[cl] < self.kappas[cl] - METRIC_TOL);
        // Repair: feed a deficient class from a donor class that keeps its
        // own quota after the move, smallest sufficient donor first.
        let mut moves = 0;
        while let Some(needy) = deficient(&masses) {
            if moves > count * classes {
                break;
            }
            let mut donor: Option<usize> = None;
            for (c, assigned) in comp_class.iter().enumerate() {
                let Some(cl) = assigned else { continue };
                if *cl == needy {
                    continue;
                }
                let keeps_quota = masses[*cl] - comp_mass[c] >= self.kappas[*cl] - METRIC_TOL;
                if keeps_quota && donor.is_none_or(|d| comp_mass[c] < comp_mass[d]) {
                    donor = Some(c);
                }
            }
            match donor {
                Some(c) => {
                    let from = comp_class[c].expect("donor is assigned");
                    masses[from] -= comp_mass[c];
                    masses[needy] += comp_mass[c];
                    comp_class[c] = Some(needy);
                    moves += 1;
                }
                None => break,
            }
        }
        let satisfied = masses
            .iter()
            .zip(self.kappas)
            .all(|(m, k)| *m >= k - METRIC_TOL);
        if satisfied {
            Some((0..self.n).map(|i| comp_class[comp[i]]).collect())
        } else {
            None
        }
    }

    fn witness_from(&self, assignment: Vec<Option<usize>>, delta: f64) -> SeparationWitness {
        let mut masses = vec![0.0; self.kappas.len()];
        for (i, a) in assignment.iter().enumerate() {
            if let Some(c) = a {
                masses[*c] += self.weights[i];
            }
        }
        SeparationWitness {
            assignment,
            delta,
            masses,
        }
    }
}

/// Largest δ admitting disjoint classes with masses at least the requested
/// κ's such that all cross-class lower lengths are at least δ. On finite
/// spaces the supremum is attained on the candidate set {0} ∪ {pairwise
/// lower distances}. Distribution-valued spaces reduce to their lower
/// matrix. Exact mode is a branch-and-bound over assignments (≤ 18
/// points); heuristic mode packs threshold components greedily and returns
/// a certified witness, hence a lower bound.
pub fn separation<S: MeasuredSpace>(
    space: &S,
    kappas: &[f64],
    mode: SearchMode,
) -> Result<SeparationResult, InvariantError> {
    if kappas.is_empty() {
        return Err(InvariantError::BadParameter("no class masses given".into()));
    }
    for &k in kappas {
        if !(k > 0.0 && k < 1.0) {
            return Err(InvariantError::InvalidKappa(k));
        }
    }
    if kappas.iter().sum::<f64>() > 1.0 + METRIC_TOL {
        return Err(InvariantError::InfeasibleKappas);
    }
    let n = space.len();
    if mode == SearchMode::Exact && n > EXACT_LIMIT {
        return Err(InvariantError::ExactBudgetExceeded {
            n,
            limit: EXACT_LIMIT,
        });
    }
    let mut lower = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            lower[i * n + j] = space.lower(i, j);
        }
    }
    let problem = Problem {
        n,
        weights: space.weights(),
        lower,
        kappas,
    };
    // Candidate levels: zero plus every off-diagonal lower distance.
    let mut levels = vec![0.0f64];
    for i in 0..n {
        for j in (i + 1)..n {
            levels.push(problem.lower(i, j));
        }
    }
    levels.sort_by(f64::total_cmp);
    levels.dedup();

    match mode {
        SearchMode::Exact => {
            // Feasibility is monotone decreasing in δ: binary search for
            // the largest feasible level.
            if problem.exact_feasible(0.0).is_none() {
                return Err(InvariantError::InfeasibleKappas);
            }
            let (mut lo, mut hi) = (0usize, levels.len() - 1);
            // Invariant: levels[lo] feasible.
            while lo < hi {
                let mid = (lo + hi).div_ceil(2);
                if problem.exact_feasible(levels[mid]).is_some() {
                    lo = mid;
                } else {
                    hi = mid - 1;
                }
            }
            let delta = levels[lo];
            let assignment = problem.exact_feasible(delta).expect("level is feasible");
            Ok(SeparationResult {
                delta,
                witness: problem.witness_from(assignment, delta),
                mode,
            })
        }
        SearchMode::Heuristic => {
            // Greedy packing is not monotone in δ: scan levels descending.
            for &delta in levels.iter().rev() {
                if let Some(assignment) = problem.heuristic_feasible(delta) {
                    return Ok(SeparationResult {
                        delta,
                        witness: problem.witness_from(assignment, delta),
                        mode,
                    });
                }
            }
            Err(InvariantError::InfeasibleKappas)
        }
    }
}

//! Box distance between spaces: build a common weight refinement, then
//! minimize the box distance over mass-preserving cell alignments.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{box1_core, check_grids, deviations, Box1Result, DistanceError, GridKernel};
use crate::core::METRIC_TOL;
use crate::rng::rng_from;

/// Permutation-count cap for exact enumeration: 8! — the worst case of a
/// refinement with eight equal-mass cells.
const EXACT_PERM_CAP: u128 = 40_320;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AlignMode {
    Exact,
    Anneal,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AlignBudget {
    /// Cap on the common-refinement size.
    pub max_cells: usize,
    /// Annealing proposals.
    pub iterations: usize,
}

impl Default for AlignBudget {
    fn default() -> Self {
        Self {
            max_cells: 64,
            iterations: 2000,
        }
    }
}

/// One cell of the common refinement: its mass and the atom of each input
/// it came from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RefinedCell {
    pub weight: f64,
    pub parent_a: usize,
    pub parent_b: usize,
}

/// Best alignment found and its certified box distance — an upper bound on
/// the infimum over measure-preserving reparameterizations, tight in exact
/// mode on the matched refinement.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlignedBox1Result {
    pub eps: Box1Result,
    /// Cell `k` of the first refined kernel is compared against cell
    /// `alignment[k]` of the second.
    pub alignment: Vec<usize>,
    pub cells: Vec<RefinedCell>,
    pub mode: AlignMode,
}

/// Overlay the cumulative mass partitions of both kernels: each refined
/// cell lies inside exactly one atom of each input. Slivers thinner than
/// 1e-12 collapse onto the shared breakpoint.
fn common_refinement(
    wa: &[f64],
    wb: &[f64],
    max_cells: usize,
) -> Result<Vec<RefinedCell>, DistanceError> {
    let mut cells = Vec::new();
    let (mut ia, mut ib) = (0usize, 0usize);
    let (mut cum_a, mut cum_b) = (wa[0], wb[0]);
    let mut pos = 0.0f64;
    loop {
        let next = cum_a.min(cum_b);
        let weight = next - pos;
        if weight > 1e-12 {
            cells.push(RefinedCell {
                weight,
                parent_a: ia,
                parent_b: ib,
            });
        }
        pos = next;
        let advance_a = (cum_a - next).abs() <= 1e-12;
        let advance_b = (cum_b - next).abs() <= 1e-12;
        if advance_a {
            ia += 1;
            if ia < wa.len() {
                cum_a += wa[ia];
            } else {
                cum_a = f64::INFINITY;
            }
        }
        if advance_b {
            ib += 1;
            if ib < wb.len() {
                cum_b += wb[ib];
            } else {
                cum_b = f64::INFINITY;
            }
        }
        if ia >= wa.len() && ib >= wb.len() {
            break;
        }
        if ia >= wa.len() || ib >= wb.len() {
            // Total masses differ beyond tolerance.
            if (1.0 - pos).abs() > 1e-9 {
                return Err(DistanceError::BadKernel(
                    "weight vectors have different total mass".into(),
                ));
            }
            break;
        }
    }
    if cells.len() > max_cells {
        return Err(DistanceError::RefinementTooLarge {
            cells: cells.len(),
            cap: max_cells,
        });
    }
    Ok(cells)
}

fn refine_kernel(kernel: &GridKernel, cells: &[RefinedCell], side_a: bool) -> GridKernel {
    let n = cells.len();
    let weights: Vec<f64> = cells.iter().map(|c| c.weight).collect();
    let parent = |c: &RefinedCell| if side_a { c.parent_a } else { c.parent_b };
    let mut grid = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            if i == j {
                grid.push(crate::core::DiscreteDistribution::zero());
            } else {
                grid.push(kernel.cell(parent(&cells[i]), parent(&cells[j])).clone());
            }
        }
    }
    GridKernel::from_parts_unchecked(weights, grid)
}

/// Cells interchangeable under mass-preserving alignment, grouped by equal
/// weight.
fn weight_groups(cells: &[RefinedCell]) -> Vec<Vec<usize>> {
    let mut order: Vec<usize> = (0..cells.len()).collect();
    order.sort_by(|&a, &b| cells[a].weight.total_cmp(&cells[b].weight));
    let mut groups: Vec<Vec<usize>> = Vec::new();
    for k in order {
        match groups.last_mut() {
            Some(g) if (cells[g[0]].weight - cells[k].weight).abs() <= METRIC_TOL => g.push(k),
            _ => groups.push(vec![k]),
        }
    }
    groups
}

fn eval(a: &GridKernel, b: &GridKernel, perm: &[usize]) -> Box1Result {
    box1_core(a.n(), a.weights(), &deviations(a, b, perm))
}

/// Minimize the box distance over mass-preserving cell alignments of the
/// common refinement. Exact mode enumerates all alignments (guarded by a
/// permutation cap); anneal mode runs seeded simulated annealing over
/// same-mass transpositions and returns the best alignment found. Either
/// way the result is a certified upper bound.
pub fn box1_aligned(
    a: &GridKernel,
    b: &GridKernel,
    mode: AlignMode,
    budget: &AlignBudget,
    seed: u64,
) -> Result<AlignedBox1Result, DistanceError> {
    let cells = common_refinement(a.weights(), b.weights(), budget.max_cells)?;
    let ra = refine_kernel(a, &cells, true);
    let rb = refine_kernel(b, &cells, false);
    check_grids(&ra, &rb)?;
    let groups = weight_groups(&cells);

    let identity: Vec<usize> = (0..cells.len()).collect();
    let mut best_perm = identity.clone();
    let mut best = eval(&ra, &rb, &identity);

    match mode {
        AlignMode::Exact => {
            let count: u128 = groups
                .iter()
                .map(|g| (1..=g.len() as u128).product::<u128>())
                .product();
            if count > EXACT_PERM_CAP {
                return Err(DistanceError::AlignmentTooLarge {
                    count,
                    cap: EXACT_PERM_CAP,
                });
            }
            // Depth-first over per-group arrangements.
            fn arrangements(
                group_idx: usize,
                groups: &[Vec<usize>],
                perm: &mut Vec<usize>,
                ra: &GridKernel,
                rb: &GridKernel,
                best: &mut Box1Result,
                best_perm: &mut Vec<usize>,
            ) {
                if group_idx == groups.len() {
                    let out = eval(ra, rb, perm);
                    if out.eps_hi < best.eps_hi {
                        *best = out;
                        *best_perm = perm.clone();
                    }
                    return;
                }
                let slots = &groups[group_idx];
                fn permute(
                    k: usize,
                    slots: &[usize],
                    values: &mut Vec<usize>,
                    group_idx: usize,
                    groups: &[Vec<usize>],
                    perm: &mut Vec<usize>,
                    ra: &GridKernel,
                    rb: &GridKernel,
                    best: &mut Box1Result,
                    best_perm: &mut Vec<usize>,
                ) {
                    if k == slots.len() {
                        for (slot, value) in slots.iter().zip(values.iter()) {
                            perm[*slot] = *value;
                        }
                        arrangements(group_idx + 1, groups, perm, ra, rb, best, best_perm);
                        return;
                    }
                    for i in k..values.len() {
                        values.swap(k, i);
                        permute(
                            k + 1,
                            slots,
                            values,
                            group_idx,
                            groups,
                            perm,
                            ra,
                            rb,
                            best,
                            best_perm,
                        );
                        values.swap(k, i);
                    }
                }
                let mut values = slots.to_vec();
                permute(
                    0,
                    slots,
                    &mut values,
                    group_idx,
                    groups,
                    perm,
                    ra,
                    rb,
                    best,
                    best_perm,
                );
            }
            let mut perm = identity;
            arrangements(0, &groups, &mut perm, &ra, &rb, &mut best, &mut best_perm);
        }
        AlignMode::Anneal => {
            let swappable: Vec<&Vec<usize>> = groups.iter().filter(|g| g.len() >= 2).collect();
            if !swappable.is_empty() {
                let mut rng = rng_from(seed);
                let mut current_perm = best_perm.clone();
                let mut current = best.clone();
                let t0 = 0.1f64;
                let t1 = 1e-4f64;
                let iters = budget.iterations.max(1);
                for it in 0..iters {
                    let group = swappable[rng.random_range(0..swappable.len())];
                    let x = group[rng.random_range(0..group.len())];
                    let y = group[rng.random_range(0..group.len())];
                    if x == y {
                        continue;
                    }
                    current_perm.swap(x, y);
                    let out = eval(&ra, &rb, &current_perm);
                    let delta = out.eps_hi - current.eps_hi;
                    let temp = t0 * (t1 / t0).powf(it as f64 / iters as f64);
                    if delta <= 0.0 || rng.random::<f64>() < (-delta / temp).exp() {
                        current = out;
                        if current.eps_hi < best.eps_hi {
                            best = current.clone();
                            best_perm = current_perm.clone();
                        }
                    } else {
                        current_perm.swap(x, y);
                    }
                }
            }
        }
    }

    Ok(AlignedBox1Result {
        eps: best,
        alignment: best_perm,
        cells,
        mode,
    })
}

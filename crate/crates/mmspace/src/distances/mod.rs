//! The box distance between step kernels on a shared grid, an alignment
//! search across spaces, and the quantitative moment-continuity bound.

mod align;
mod cover;
mod kernel;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::core::{d_ext, METRIC_TOL};
use crate::sampling::GSystem;

pub use align::{box1_aligned, AlignBudget, AlignMode, AlignedBox1Result, RefinedCell};
pub use kernel::GridKernel;

#[derive(Debug, Error)]
pub enum DistanceError {
    #[error("kernels live on different grids")]
    GridMismatch,
    #[error("invalid kernel: {0}")]
    BadKernel(String),
    #[error("common refinement needs {cells} cells, cap is {cap}; quantize the weights")]
    RefinementTooLarge { cells: usize, cap: usize },
    #[error("exact alignment enumeration needs {count} permutations, cap is {cap}")]
    AlignmentTooLarge { count: u128, cap: u128 },
}

/// Result of a box-distance computation. `eps_hi` is always certified by
/// the returned cover: removing `cover` (total mass `cover_mass`) leaves
/// all cell deviations at most `eps_hi`. When the violation graphs are
/// small enough for exact vertex-cover search, `eps_lo == eps_hi`; the
/// fallback reports a bracket.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Box1Result {
    pub eps_lo: f64,
    pub eps_hi: f64,
    pub cover: Vec<usize>,
    pub cover_mass: f64,
    pub max_dev_off_cover: f64,
    pub exact: bool,
}

impl Box1Result {
    /// The certified value (upper end of the bracket).
    pub fn eps(&self) -> f64 {
        self.eps_hi
    }
}

/// Least ε such that some cell set of mass at most ε can be removed leaving
/// all remaining pairwise deviations at most ε. Deviations are measured by
/// the Kantorovich–Rubinstein distance between cells (plain absolute
/// difference for deterministic kernels). Requires identical grids: same
/// size and same cell-mass vector.
pub fn box1(f: &GridKernel, g: &GridKernel) -> Result<Box1Result, DistanceError> {
    check_grids(f, g)?;
    let n = f.n();
    let ident: Vec<usize> = (0..n).collect();
    Ok(box1_core(n, f.weights(), &deviations(f, g, &ident)))
}

pub(crate) fn check_grids(f: &GridKernel, g: &GridKernel) -> Result<(), DistanceError> {
    if f.n() != g.n()
        || f.weights()
            .iter()
            .zip(g.weights())
            .any(|(a, b)| (a - b).abs() > METRIC_TOL)
    {
        return Err(DistanceError::GridMismatch);
    }
    Ok(())
}

/// Cellwise deviations of `f` against `g` relabeled by `perm`.
pub(crate) fn deviations(f: &GridKernel, g: &GridKernel, perm: &[usize]) -> Vec<f64> {
    let n = f.n();
    let mut dev = vec![0.0; n * n];
    for i in 0..n {
        for j in (i + 1)..n {
            let d = d_ext(f.cell(i, j), g.cell(perm[i], perm[j]));
            dev[i * n + j] = d;
            dev[j * n + i] = d;
        }
    }
    dev
}

/// Shared search: candidate thresholds are zero and every distinct cell
/// deviation; at threshold `t` the cells violating `t` must be covered by a
/// cell set of mass at most ε. The least ε is `min(t*, c(t⁻))` where `t*`
/// is the least self-consistent threshold (cover mass ≤ t*) and `t⁻` the
/// one below it. Ties break toward the smaller ε.
pub(crate) fn box1_core(n: usize, weights: &[f64], dev: &[f64]) -> Box1Result {
    let mut thresholds: Vec<f64> = vec![0.0];
    for i in 0..n {
        for j in (i + 1)..n {
            thresholds.push(dev[i * n + j]);
        }
    }
    thresholds.sort_by(f64::total_cmp);
    thresholds.dedup();

    let edges_at = |t: f64| -> Vec<(usize, usize)> {
        let mut edges = Vec::new();
        for i in 0..n {
            for j in (i + 1)..n {
                if dev[i * n + j] > t + METRIC_TOL {
                    edges.push((i, j));
                }
            }
        }
        edges
    };
    let cover_at = |t: f64| cover::min_weight_cover(n, &edges_at(t), weights);

    let exact_covers = n <= cover::COVER_EXACT_LIMIT;
    let (best_hi, best_lo, cover_out) = if exact_covers {
        // Exact cover weights are non-increasing in t, so feasibility
        // (cover mass ≤ t) is monotone: binary search for the least
        // feasible threshold.
        let feasible = |t: f64| cover_at(t).weight_ub <= t + METRIC_TOL;
        let mut lo = 0usize;
        let mut hi = thresholds.len() - 1;
        debug_assert!(feasible(thresholds[hi]));
        while lo < hi {
            let mid = (lo + hi) / 2;
            if feasible(thresholds[mid]) {
                hi = mid;
            } else {
                lo = mid + 1;
            }
        }
        let t_star = thresholds[lo];
        let at_star = cover_at(t_star);
        let cand_star = t_star.max(at_star.weight_ub);
        if lo > 0 {
            let t_prev = thresholds[lo - 1];
            let at_prev = cover_at(t_prev);
            let cand_prev = t_prev.max(at_prev.weight_ub);
            if cand_prev < cand_star {
                (cand_prev, cand_prev, at_prev)
            } else {
                (cand_star, cand_star, at_star)
            }
        } else {
            (cand_star, cand_star, at_star)
        }
    } else {
        // Approximate covers are not monotone; scan every threshold.
        let mut best_hi = f64::INFINITY;
        let mut best_lo = f64::INFINITY;
        let mut best_cover: Option<cover::CoverOutcome> = None;
        for &t in &thresholds {
            let out = cover_at(t);
            best_lo = best_lo.min(t.max(out.weight_lb));
            let cand = t.max(out.weight_ub);
            if cand < best_hi {
                best_hi = cand;
                best_cover = Some(out);
            }
        }
        (
            best_hi,
            best_lo,
            best_cover.expect("at least one threshold"),
        )
    };

    let cover = cover_out.cover;
    let cover_mass: f64 = cover.iter().map(|&v| weights[v]).sum();
    let mut in_cover = vec![false; n];
    for &v in &cover {
        in_cover[v] = true;
    }
    let mut max_dev = 0.0f64;
    for i in 0..n {
        for j in (i + 1)..n {
            if !in_cover[i] && !in_cover[j] {
                max_dev = max_dev.max(dev[i * n + j]);
            }
        }
    }
    Box1Result {
        eps_lo: best_lo.min(best_hi),
        eps_hi: best_hi,
        cover,
        cover_mass,
        max_dev_off_cover: max_dev,
        exact: exact_covers,
    }
}

/// Quantitative moment continuity: from a box-distance witness — cells of
/// total mass `cover_mass` removed, remaining deviations at most `eps` —
/// the moments of two kernels under a system of `K`-Lipschitz test
/// functions differ by at most
///
/// `2·c_g·C(r+1,2)·(2w − w²) + C(r,2)·K·ε·M^(C(r,2)−1)`
///
/// where `M` is the largest sup norm: tuples touching a removed cell
/// contribute the first term (the integrand difference is at most `2c_g`
/// and the pair marginals charge at most the removed band), and on the
/// remaining tuples each factor moves by at most `K·ε`, which telescopes
/// through the product.
pub fn moment_discrepancy_bound(g: &GSystem, eps: f64, lipschitz_k: f64, cover_mass: f64) -> f64 {
    let r = g.r() as f64;
    let all_pairs = r * (r + 1.0) / 2.0;
    let strict_pairs = g.pair_count();
    let w = cover_mass.clamp(0.0, 1.0);
    let bad_band = 2.0 * w - w * w;
    let bad_term = 2.0 * g.c_g() * all_pairs * bad_band;
    let good_term = if strict_pairs == 0 {
        0.0
    } else {
        let m = g.max_sup_norm();
        strict_pairs as f64 * lipschitz_k * eps * m.powi(strict_pairs as i32 - 1)
    };
    g.diagonal_product().abs() * (bad_term + good_term)
}

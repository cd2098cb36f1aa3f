//! Moment signatures: a finite table of monomial moments that summarizes
//! the sampling distribution of a space.

use serde::{Deserialize, Serialize};

use super::{moment_exact, moment_monte_carlo, GSystem, SamplingError};
use crate::core::MeasuredSpace;
use crate::rng::derive_seed;

/// Default ceiling on `n^r` below which signature entries are enumerated
/// exactly instead of estimated by Monte Carlo.
pub const DEFAULT_EXACT_CAP: u64 = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentOptions {
    /// Largest tuple order; entries are produced for every `2 ≤ r ≤ r_max`.
    pub r_max: usize,
    /// Largest monomial power assigned to a pair.
    pub k_max: u32,
    /// Monte-Carlo sample count per entry when exact enumeration is out of
    /// reach.
    pub samples: u64,
    pub seed: u64,
    /// Entries with `n^r` at most this are computed exactly. Zero forces
    /// Monte Carlo, `u64::MAX` forces exact enumeration.
    pub exact_cap: u64,
}

impl Default for MomentOptions {
    fn default() -> Self {
        Self {
            r_max: 3,
            k_max: 2,
            samples: 100_000,
            seed: 0,
            exact_cap: DEFAULT_EXACT_CAP,
        }
    }
}

impl MomentOptions {
    pub fn exact_only(mut self) -> Self {
        self.exact_cap = u64::MAX;
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentEntry {
    pub r: usize,
    /// Monomial power per strict pair `i < j`, row-major, canonicalized up
    /// to relabeling of the tuple positions.
    pub powers: Vec<u32>,
    pub estimate: f64,
    /// Zero for exact entries.
    pub stderr: f64,
    /// Tuples enumerated (exact) or drawn (Monte Carlo).
    pub samples: u64,
    pub exact: bool,
}

impl MomentEntry {
    pub fn key(&self) -> String {
        let powers: Vec<String> = self.powers.iter().map(u32::to_string).collect();
        format!("r{}:k{}", self.r, powers.join(","))
    }
}

/// Ordered table of canonical monomial moments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentSignature {
    pub entries: Vec<MomentEntry>,
}

impl MomentSignature {
    /// Largest absolute difference over aligned entries. Errors when the
    /// signatures were built with different shapes.
    pub fn max_gap(&self, other: &MomentSignature) -> Result<f64, SamplingError> {
        if self.entries.len() != other.entries.len()
            || self
                .entries
                .iter()
                .zip(&other.entries)
                .any(|(a, b)| a.r != b.r || a.powers != b.powers)
        {
            return Err(SamplingError::BadParameter(
                "signatures have different shapes".into(),
            ));
        }
        Ok(self
            .entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| (a.estimate - b.estimate).abs())
            .fold(0.0, f64::max))
    }
}

/// Pair index permutation induced by relabeling tuple positions.
fn permute_powers(r: usize, powers: &[u32], perm: &[usize]) -> Vec<u32> {
    let pos = |i: usize, j: usize| -> usize {
        let (i, j) = if i < j { (i, j) } else { (j, i) };
        i * r - i * (i + 1) / 2 + (j - i - 1)
    };
    let mut out = vec![0u32; powers.len()];
    for i in 0..r {
        for j in (i + 1)..r {
            out[pos(perm[i], perm[j])] = powers[pos(i, j)];
        }
    }
    out
}

fn permutations(r: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut items: Vec<usize> = (0..r).collect();
    fn heap(k: usize, items: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if k <= 1 {
            out.push(items.clone());
            return;
        }
        for i in 0..k {
            heap(k - 1, items, out);
            if k.is_multiple_of(2) {
                items.swap(i, k - 1);
            } else {
                items.swap(0, k - 1);
            }
        }
    }
    heap(r, &mut items, &mut out);
    out
}

/// Lexicographically least representative of the pair-power vector under
/// relabeling of tuple positions.
fn canonical_powers(r: usize, powers: &[u32]) -> Vec<u32> {
    permutations(r)
        .iter()
        .map(|perm| permute_powers(r, powers, perm))
        .min()
        .unwrap_or_else(|| powers.to_vec())
}

/// All canonical power assignments for order `r` with powers up to `k_max`.
pub(crate) fn canonical_assignments(r: usize, k_max: u32) -> Vec<Vec<u32>> {
    let pairs = r * (r - 1) / 2;
    let mut current = vec![0u32; pairs];
    let mut seen = std::collections::BTreeSet::new();
    loop {
        let canon = canonical_powers(r, &current);
        seen.insert(canon);
        let mut k = 0;
        loop {
            if k == pairs {
                return seen.into_iter().collect();
            }
            current[k] += 1;
            if current[k] <= k_max {
                break;
            }
            current[k] = 0;
            k += 1;
        }
    }
}

/// Compute the signature: for every order `2 ≤ r ≤ r_max` and every
/// canonical assignment of monomial powers up to `k_max`, the moment is
/// enumerated exactly when `n^r` fits under the cap and estimated by
/// seeded Monte Carlo otherwise.
pub fn moment_signature<S: MeasuredSpace + Sync>(
    space: &S,
    opts: &MomentOptions,
) -> Result<MomentSignature, SamplingError> {
    if opts.r_max < 2 {
        return Err(SamplingError::BadParameter("r_max must be ≥ 2".into()));
    }
    if opts.r_max > 4 {
        // Canonicalizing power assignments enumerates (k_max+1)^pairs
        // vectors under r! relabelings, which stops being reasonable here.
        return Err(SamplingError::BadParameter(
            "r_max above 4 is not supported".into(),
        ));
    }
    let n = space.len();
    let mut entries = Vec::new();
    let mut entry_index = 0u64;
    for r in 2..=opts.r_max {
        let tuples = (n as f64).powi(r as i32);
        // A forced-exact request larger than the enumeration guard fails
        // inside moment_exact rather than silently downgrading.
        let exact = tuples <= opts.exact_cap as f64;
        for powers in canonical_assignments(r, opts.k_max) {
            let g = GSystem::from_powers(r, &powers)?;
            let entry = if exact {
                MomentEntry {
                    r,
                    powers,
                    estimate: moment_exact(&g, space)?,
                    stderr: 0.0,
                    samples: tuples as u64,
                    exact: true,
                }
            } else {
                let (estimate, stderr) = moment_monte_carlo(
                    &g,
                    space,
                    opts.samples,
                    derive_seed(opts.seed, entry_index),
                )?;
                MomentEntry {
                    r,
                    powers,
                    estimate,
                    stderr,
                    samples: opts.samples,
                    exact: false,
                }
            };
            entries.push(entry);
            entry_index += 1;
        }
    }
    Ok(MomentSignature { entries })
}

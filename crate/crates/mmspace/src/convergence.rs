//! Example sequence generators and moment-trajectory convergence reports:
//! a finite proxy for convergence in sampling, obtained by tracking every
//! canonical moment across a sequence of spaces.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::core::{
    complete_graph_space, random_graph_space, sphere_empirical, CoreError, FiniteMMSpace,
};
use crate::formats::{self, FormatError};
use crate::rng::derive_seed;
use crate::sampling::{moment_signature, MomentOptions, MomentSignature, SamplingError};

#[derive(Debug, Error)]
pub enum ConvergenceError {
    #[error("bad sequence: {0}")]
    BadSequence(String),
    #[error("sequence `{which}` has an unstable tail: moment {moment} moved by {gap:.6} (allowed {allowed:.6})")]
    NotConverged {
        which: String,
        moment: String,
        gap: f64,
        allowed: f64,
    },
    #[error(transparent)]
    Space(#[from] CoreError),
    #[error(transparent)]
    Sampling(#[from] SamplingError),
    #[error(transparent)]
    Format(#[from] FormatError),
}

/// Families of example sequences. The index is the family parameter:
/// vertex count for graphs, dimension for spheres, position for user
/// files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum Family {
    CompleteGraphs,
    Spheres { count: usize },
    RandomGraphs { p: f64 },
    UserFiles { paths: Vec<PathBuf> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SequenceSpec {
    pub family: Family,
    pub indices: Vec<u64>,
    pub seed: u64,
}

impl SequenceSpec {
    pub fn new(family: Family, indices: Vec<u64>, seed: u64) -> Result<Self, ConvergenceError> {
        if indices.is_empty() {
            return Err(ConvergenceError::BadSequence("no indices".into()));
        }
        if indices.windows(2).any(|w| w[1] <= w[0]) {
            return Err(ConvergenceError::BadSequence(
                "indices must be strictly increasing".into(),
            ));
        }
        match &family {
            Family::RandomGraphs { p } => {
                if !(*p > 0.0 && *p <= 1.0) {
                    return Err(ConvergenceError::BadSequence(format!(
                        "edge probability {p} outside (0, 1]"
                    )));
                }
            }
            Family::Spheres { count } => {
                if *count < 2 {
                    return Err(ConvergenceError::BadSequence(
                        "sphere point count must be ≥ 2".into(),
                    ));
                }
            }
            Family::UserFiles { paths } => {
                if indices.iter().any(|&i| i as usize >= paths.len()) {
                    return Err(ConvergenceError::BadSequence(format!(
                        "index outside the {} provided files",
                        paths.len()
                    )));
                }
            }
            Family::CompleteGraphs => {}
        }
        Ok(Self {
            family,
            indices,
            seed,
        })
    }

    pub fn describe(&self) -> String {
        match &self.family {
            Family::CompleteGraphs => "complete-graphs".into(),
            Family::Spheres { count } => format!("spheres(count={count})"),
            Family::RandomGraphs { p } => format!("random-graphs(p={p})"),
            Family::UserFiles { paths } => format!("user-files({} files)", paths.len()),
        }
    }
}

/// Instantiate one member of the sequence. Randomized families derive
/// their seed from the sequence seed and the index.
pub fn generate(spec: &SequenceSpec, index: u64) -> Result<FiniteMMSpace, ConvergenceError> {
    match &spec.family {
        Family::CompleteGraphs => Ok(complete_graph_space(index as usize)?),
        Family::Spheres { count } => Ok(sphere_empirical(
            index as usize,
            *count,
            derive_seed(spec.seed, index),
        )?),
        Family::RandomGraphs { p } => Ok(random_graph_space(
            index as usize,
            *p,
            derive_seed(spec.seed, index),
        )?),
        Family::UserFiles { paths } => {
            let path = paths.get(index as usize).ok_or_else(|| {
                ConvergenceError::BadSequence(format!("index {index} outside the file list"))
            })?;
            match formats::load_space(path)? {
                crate::core::Space::Mm(s) => Ok(s),
                crate::core::Space::Qmm(_) => Err(ConvergenceError::BadSequence(
                    "sequence files must be deterministic spaces".into(),
                )),
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConvergeOptions {
    pub r_max: usize,
    pub k_max: u32,
    pub samples: u64,
    pub tol: f64,
    pub seed: u64,
    pub exact_cap: u64,
}

impl Default for ConvergeOptions {
    fn default() -> Self {
        Self {
            r_max: 3,
            k_max: 2,
            samples: 100_000,
            tol: 0.02,
            seed: 0,
            exact_cap: crate::sampling::DEFAULT_EXACT_CAP,
        }
    }
}

impl ConvergeOptions {
    fn moment_options(&self, stream: u64) -> MomentOptions {
        MomentOptions {
            r_max: self.r_max,
            k_max: self.k_max,
            samples: self.samples,
            seed: derive_seed(self.seed, stream),
            exact_cap: self.exact_cap,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryPoint {
    pub index: u64,
    pub estimate: f64,
    pub stderr: f64,
    pub exact: bool,
}

/// One moment tracked across the sequence. The moment converges when the
/// last two estimates agree within the tolerance plus their combined
/// standard errors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentTrajectory {
    pub r: usize,
    pub powers: Vec<u32>,
    pub points: Vec<TrajectoryPoint>,
    pub final_gap: f64,
    pub allowed: f64,
    pub converged: bool,
}

impl MomentTrajectory {
    pub fn key(&self) -> String {
        let powers: Vec<String> = self.powers.iter().map(u32::to_string).collect();
        format!("r{}:k{}", self.r, powers.join(","))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub family: String,
    pub indices: Vec<u64>,
    pub r_max: usize,
    pub k_max: u32,
    pub samples: u64,
    pub tol: f64,
    pub seed: u64,
    pub moments: Vec<MomentTrajectory>,
    pub converged: bool,
}

impl ConvergenceReport {
    /// One row per moment per index, RFC-4180 quoted.
    pub fn to_csv(&self) -> String {
        let mut writer = csv::Writer::from_writer(Vec::new());
        writer
            .write_record(["family", "index", "moment", "estimate", "stderr", "exact"])
            .expect("in-memory write");
        for m in &self.moments {
            for p in &m.points {
                writer
                    .write_record([
                        self.family.clone(),
                        p.index.to_string(),
                        m.key(),
                        format!("{}", p.estimate),
                        format!("{}", p.stderr),
                        p.exact.to_string(),
                    ])
                    .expect("in-memory write");
            }
        }
        String::from_utf8(writer.into_inner().expect("in-memory flush")).expect("utf8 csv")
    }
}

fn signatures_for(
    spec: &SequenceSpec,
    opts: &ConvergeOptions,
) -> Result<Vec<(u64, MomentSignature)>, ConvergenceError> {
    spec.indices
        .iter()
        .map(|&index| {
            let space = generate(spec, index)?;
            let sig = moment_signature(&space, &opts.moment_options(index))?;
            Ok((index, sig))
        })
        .collect()
}

fn trajectories(signatures: &[(u64, MomentSignature)], tol: f64) -> Vec<MomentTrajectory> {
    let shape = &signatures[0].1;
    (0..shape.entries.len())
        .map(|e| {
            let entry = &shape.entries[e];
            let points: Vec<TrajectoryPoint> = signatures
                .iter()
                .map(|(index, sig)| TrajectoryPoint {
                    index: *index,
                    estimate: sig.entries[e].estimate,
                    stderr: sig.entries[e].stderr,
                    exact: sig.entries[e].exact,
                })
                .collect();
            let last = points[points.len() - 1];
            let prev = points[points.len() - 2];
            let final_gap = (last.estimate - prev.estimate).abs();
            let allowed = tol + last.stderr + prev.stderr;
            MomentTrajectory {
                r: entry.r,
                powers: entry.powers.clone(),
                points,
                final_gap,
                allowed,
                converged: final_gap <= allowed,
            }
        })
        .collect()
}

/// Track every canonical moment across the sequence and report which of
/// them have stabilized. This is a finite proxy for convergence of the
/// sampling distributions: agreement of all tracked moments, not a proof
/// of weak convergence.
pub fn converge_test(
    spec: &SequenceSpec,
    opts: &ConvergeOptions,
) -> Result<ConvergenceReport, ConvergenceError> {
    if spec.indices.len() < 3 {
        return Err(ConvergenceError::BadSequence(
            "convergence testing needs at least three indices".into(),
        ));
    }
    let signatures = signatures_for(spec, opts)?;
    let moments = trajectories(&signatures, opts.tol);
    let converged = moments.iter().all(|m| m.converged);
    Ok(ConvergenceReport {
        family: spec.describe(),
        indices: spec.indices.clone(),
        r_max: opts.r_max,
        k_max: opts.k_max,
        samples: opts.samples,
        tol: opts.tol,
        seed: opts.seed,
        moments,
        converged,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentGap {
    pub moment: String,
    pub a: f64,
    pub b: f64,
    pub gap: f64,
    pub allowed: f64,
    pub ok: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub family_a: String,
    pub family_b: String,
    pub gaps: Vec<MomentGap>,
    pub verdict: bool,
}

/// Compare the tail signatures of two sequences. Each sequence must have a
/// stable tail — its last two signatures agreeing per moment within the
/// tolerance — otherwise the unstable one is reported. The verdict is true
/// when every tail moment of one sequence matches the other within the
/// tolerance plus combined standard errors.
pub fn compare_limits(
    spec_a: &SequenceSpec,
    spec_b: &SequenceSpec,
    opts: &ConvergeOptions,
) -> Result<ComparisonReport, ConvergenceError> {
    let run = |spec: &SequenceSpec,
               stream: u64|
     -> Result<Vec<(u64, MomentSignature)>, ConvergenceError> {
        if spec.indices.len() < 2 {
            return Err(ConvergenceError::BadSequence(
                "tail comparison needs at least two indices per sequence".into(),
            ));
        }
        let mut shifted = *opts;
        shifted.seed = derive_seed(opts.seed, stream);
        signatures_for(spec, &shifted)
    };
    let sig_a = run(spec_a, 0)?;
    let sig_b = run(spec_b, 1)?;
    for (spec, sigs) in [(spec_a, &sig_a), (spec_b, &sig_b)] {
        for m in trajectories(sigs, opts.tol) {
            if !m.converged {
                return Err(ConvergenceError::NotConverged {
                    which: spec.describe(),
                    moment: m.key(),
                    gap: m.final_gap,
                    allowed: m.allowed,
                });
            }
        }
    }
    let tail_a = &sig_a[sig_a.len() - 1].1;
    let tail_b = &sig_b[sig_b.len() - 1].1;
    let gaps: Vec<MomentGap> = tail_a
        .entries
        .iter()
        .zip(&tail_b.entries)
        .map(|(a, b)| {
            let gap = (a.estimate - b.estimate).abs();
            let allowed = opts.tol + a.stderr + b.stderr;
            MomentGap {
                moment: a.key(),
                a: a.estimate,
                b: b.estimate,
                gap,
                allowed,
                ok: gap <= allowed,
            }
        })
        .collect();
    let verdict = gaps.iter().all(|g| g.ok);
    Ok(ComparisonReport {
        family_a: spec_a.describe(),
        family_b: spec_b.describe(),
        gaps,
        verdict,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Closed-form moment of a complete-graph space for a monomial system:
    /// condition on the coincidence pattern of the tuple; distinct vertices
    /// sit at 1/2, coincident ones at 0.
    fn complete_graph_moment(n: u64, r: usize, powers: &[u32]) -> f64 {
        let n = n as f64;
        let pos = |i: usize, j: usize| i * r - i * (i + 1) / 2 + (j - i - 1);
        // Enumerate coincidence patterns as set partitions via repeated
        // block assignment (r ≤ 3 in these tests keeps this tiny).
        let mut total = 0.0;
        let mut blocks: Vec<usize> = vec![0; r];
        loop {
            let valid = blocks
                .iter()
                .enumerate()
                .all(|(i, &b)| b <= blocks[..i].iter().copied().max().map_or(0, |m| m + 1));
            if valid {
                let classes = blocks.iter().copied().max().unwrap() + 1;
                // Probability of realizing this exact coincidence pattern:
                // falling(n, classes) / n^r.
                let mut falling = 1.0;
                for c in 0..classes {
                    falling *= n - c as f64;
                }
                let prob = falling / n.powi(r as i32);
                let mut term = prob;
                for i in 0..r {
                    for j in (i + 1)..r {
                        let k = powers[pos(i, j)];
                        let d: f64 = if blocks[i] == blocks[j] { 0.0 } else { 0.5 };
                        term *= if k == 0 { 1.0 } else { d.powi(k as i32) };
                    }
                }
                total += term;
            }
            // Odometer over block labels 0..r.
            let mut k = 0;
            loop {
                if k == r {
                    return total;
                }
                blocks[k] += 1;
                if blocks[k] < r {
                    break;
                }
                blocks[k] = 0;
                k += 1;
            }
        }
    }

    fn exact_opts() -> ConvergeOptions {
        ConvergeOptions {
            r_max: 3,
            k_max: 2,
            samples: 0,
            tol: 0.02,
            seed: 0,
            exact_cap: u64::MAX,
        }
    }

    #[test]
    fn generate_families() {
        let complete = SequenceSpec::new(Family::CompleteGraphs, vec![3], 0).unwrap();
        let s = generate(&complete, 3).unwrap();
        assert_eq!(s, complete_graph_space(3).unwrap());

        let degenerate = SequenceSpec::new(Family::RandomGraphs { p: 1.0 }, vec![10], 4).unwrap();
        assert_eq!(
            generate(&degenerate, 10).unwrap(),
            complete_graph_space(10).unwrap()
        );

        let circle = SequenceSpec::new(Family::Spheres { count: 2 }, vec![1], 9).unwrap();
        let two = generate(&circle, 1).unwrap();
        assert_eq!(two.n(), 2);
        let d = two.dist(0, 1);
        assert!((0.0..=1.0).contains(&d));
    }

    #[test]
    fn spec_validation() {
        assert!(SequenceSpec::new(Family::CompleteGraphs, vec![], 0).is_err());
        assert!(SequenceSpec::new(Family::CompleteGraphs, vec![4, 4], 0).is_err());
        assert!(SequenceSpec::new(Family::RandomGraphs { p: 0.0 }, vec![2], 0).is_err());
        assert!(SequenceSpec::new(Family::RandomGraphs { p: 1.5 }, vec![2], 0).is_err());
    }

    #[test]
    fn complete_graph_trajectories_match_closed_form() {
        let spec = SequenceSpec::new(Family::CompleteGraphs, vec![10, 20, 40, 80], 0).unwrap();
        let report = converge_test(&spec, &exact_opts()).unwrap();
        assert!(report.converged);
        for m in &report.moments {
            for p in &m.points {
                let expected = complete_graph_moment(p.index, m.r, &m.powers);
                assert!(
                    (p.estimate - expected).abs() < 1e-12,
                    "moment {} at index {}: {} vs {}",
                    m.key(),
                    p.index,
                    p.estimate,
                    expected
                );
            }
        }
    }

    #[test]
    fn mixed_sequence_does_not_converge() {
        // Alternating complete and edgeless graphs through user files.
        let dir = tempfile::tempdir().unwrap();
        let mut paths = Vec::new();
        for (i, n) in [20u64, 21, 40, 41].iter().enumerate() {
            let space = if i % 2 == 0 {
                complete_graph_space(*n as usize).unwrap()
            } else {
                crate::core::empty_graph_space(*n as usize).unwrap()
            };
            let path = dir.path().join(format!("space{i}.json"));
            crate::formats::save(
                &path,
                &crate::formats::FileRepr::from(&crate::core::Space::Mm(space)),
            )
            .unwrap();
            paths.push(path);
        }
        let spec = SequenceSpec::new(Family::UserFiles { paths }, vec![0, 1, 2, 3], 0).unwrap();
        let report = converge_test(&spec, &exact_opts()).unwrap();
        assert!(!report.converged);
        // The mean-distance moment flips between ~1/2 and ~1.
        let mean = report
            .moments
            .iter()
            .find(|m| m.r == 2 && m.powers == vec![1])
            .unwrap();
        assert!(mean.final_gap > 0.4);
    }

    #[test]
    fn random_graph_sequences_stabilize() {
        let spec =
            SequenceSpec::new(Family::RandomGraphs { p: 0.5 }, vec![60, 120, 240], 11).unwrap();
        let mut opts = exact_opts();
        opts.r_max = 2;
        let report = converge_test(&spec, &opts).unwrap();
        assert!(report.converged, "{:#?}", report.moments);
    }

    #[test]
    fn sphere_trajectories_concentrate() {
        // Mean distance tends to one half; the distance variance decays
        // with the dimension.
        let spec = SequenceSpec::new(Family::Spheres { count: 300 }, vec![4, 16, 64], 8).unwrap();
        let mut opts = exact_opts();
        opts.r_max = 2;
        opts.tol = 0.05;
        let report = converge_test(&spec, &opts).unwrap();
        let find = |k: u32| {
            report
                .moments
                .iter()
                .find(|m| m.r == 2 && m.powers == vec![k])
                .unwrap()
        };
        let means = &find(1).points;
        assert!((means.last().unwrap().estimate - 0.5).abs() < 0.02);
        let squares = &find(2).points;
        let variances: Vec<f64> = means
            .iter()
            .zip(squares)
            .map(|(m, s)| s.estimate - m.estimate * m.estimate)
            .collect();
        assert!(
            variances[0] > variances[1] && variances[1] > variances[2],
            "variances not decreasing: {variances:?}"
        );
        assert!(variances[2] < 0.01);
    }

    #[test]
    fn sequence_against_itself_has_common_limit() {
        let spec = SequenceSpec::new(Family::CompleteGraphs, vec![20, 40], 0).unwrap();
        let cmp = compare_limits(&spec, &spec, &exact_opts()).unwrap();
        assert!(cmp.verdict);
    }

    #[test]
    fn complete_versus_empty_graphs_differ() {
        let dir = tempfile::tempdir().unwrap();
        let mut paths = Vec::new();
        for (i, n) in [30u64, 60].iter().enumerate() {
            let path = dir.path().join(format!("empty{i}.json"));
            crate::formats::save(
                &path,
                &crate::formats::FileRepr::from(&crate::core::Space::Mm(
                    crate::core::empty_graph_space(*n as usize).unwrap(),
                )),
            )
            .unwrap();
            paths.push(path);
        }
        let complete = SequenceSpec::new(Family::CompleteGraphs, vec![30, 60], 0).unwrap();
        let empty = SequenceSpec::new(Family::UserFiles { paths }, vec![0, 1], 0).unwrap();
        let mut opts = exact_opts();
        opts.r_max = 2;
        let cmp = compare_limits(&complete, &empty, &opts).unwrap();
        assert!(!cmp.verdict);
        let mean = cmp.gaps.iter().find(|g| g.moment == "r2:k1").unwrap();
        assert!(mean.gap > 0.4);
    }

    #[test]
    fn reports_are_deterministic() {
        let spec = SequenceSpec::new(Family::RandomGraphs { p: 0.4 }, vec![8, 12, 16], 21).unwrap();
        let mut opts = exact_opts();
        opts.exact_cap = 0; // force Monte Carlo
        opts.samples = 4000;
        let a = converge_test(&spec, &opts).unwrap();
        let b = converge_test(&spec, &opts).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn csv_has_header_and_rows() {
        let spec = SequenceSpec::new(Family::CompleteGraphs, vec![4, 6, 8], 0).unwrap();
        let mut opts = exact_opts();
        opts.r_max = 2;
        let report = converge_test(&spec, &opts).unwrap();
        let csv = report.to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "family,index,moment,estimate,stderr,exact");
        // One row per moment per index.
        assert_eq!(lines.len(), 1 + report.moments.len() * 3);
    }
}

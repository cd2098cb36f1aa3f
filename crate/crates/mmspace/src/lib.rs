//! Sampling-based invariants of finite metric measure spaces.
//!
//! The crate works with two kinds of weighted point sets: deterministic
//! spaces ([`core::FiniteMMSpace`]) whose pairwise distances are numbers,
//! and distribution-valued spaces ([`core::QMMSpace`]) whose pairwise
//! lengths are finitely supported probability measures on `[0,1]`. On top
//! of both it provides
//!
//! - the sampling map (random distance matrices) and moment functionals,
//!   exact and Monte-Carlo, with martingale tail certificates
//!   ([`sampling`]);
//! - partial/observable diameter, separation distance and Lipschitz
//!   witnesses ([`invariants`]);
//! - the box distance between step kernels and an alignment search that
//!   upper-bounds it across spaces ([`distances`]);
//! - example sequence generators and moment-trajectory convergence reports
//!   ([`convergence`]);
//! - JSON/CSV interchange ([`formats`]).
//!
//! Every randomized operation takes an explicit seed and is deterministic
//! for a fixed seed, independent of worker count.

pub mod convergence;
pub mod core;
pub mod distances;
pub mod formats;
pub mod invariants;
pub mod numeric;
pub mod rng;
pub mod sampling;

pub use convergence::{
    compare_limits, converge_test, generate, ComparisonReport, ConvergeOptions, ConvergenceError,
    ConvergenceReport, Family, SequenceSpec,
};
pub use core::{
    blow_up, complete_graph_space, d_ext, empty_graph_space, graph_space, random_graph_space,
    sphere_empirical, sphere_space_from_points, CoreError, DiscreteDistribution, FiniteMMSpace,
    FiniteMetric, MeasuredSpace, PushforwardMeasure, QMMSpace, Space, METRIC_TOL,
};
pub use distances::{
    box1, box1_aligned, moment_discrepancy_bound, AlignBudget, AlignMode, AlignedBox1Result,
    Box1Result, DistanceError, GridKernel,
};
pub use invariants::{
    lipschitz_check, obs_diam, obs_diam_exact_small, partial_diameter, pushforward, separation,
    InvariantError, LipschitzWitness, ObsDiamBudget, ObsDiamResult, PartialDiamResult, SearchMode,
    SeparationResult, SeparationWitness, TargetSpace, WitnessValues,
};
pub use sampling::{
    azuma_bound, chernoff_bound, moment_exact, moment_monte_carlo, moment_of_matrix,
    moment_signature, sample_matrix, GSystem, MomentEntry, MomentOptions, MomentSignature,
    SampleMatrix, SamplingError, TestFunction,
};

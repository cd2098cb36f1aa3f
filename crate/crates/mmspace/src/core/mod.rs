//! Spaces, length distributions and the elementary metric between measures.

mod dist;
mod generators;
mod measure;
mod space;

use thiserror::Error;

/// Absolute tolerance for all metric axioms and mass comparisons.
pub const METRIC_TOL: f64 = 1e-12;

pub use dist::{d_ext, DiscreteDistribution};
pub use generators::{
    complete_graph_space, empty_graph_space, graph_space, random_graph_space, sphere_empirical,
    sphere_space_from_points,
};
pub use measure::PushforwardMeasure;
pub use space::{blow_up, FiniteMMSpace, FiniteMetric, MeasuredSpace, QMMSpace, Space};

#[derive(Debug, Error)]
pub enum CoreError {
    #[error("distance matrix not symmetric at ({i}, {j})")]
    NonSymmetric { i: usize, j: usize },
    #[error("triangle inequality violated: d({i},{k}) > d({i},{j}) + d({j},{k})")]
    TriangleViolation { i: usize, j: usize, k: usize },
    #[error("bad weight at index {index}: {reason}")]
    BadWeights { index: usize, reason: String },
    #[error("distance out of range at ({i}, {j}): {value}")]
    DistanceOutOfRange { i: usize, j: usize, value: f64 },
    #[error("nonzero diagonal at index {i}")]
    NonzeroDiagonal { i: usize },
    #[error("self-loop at vertex {i}")]
    SelfLoop { i: usize },
    #[error("zero multiplicity at index {index}")]
    ZeroMultiplicity { index: usize },
    #[error("invalid distribution: {0}")]
    BadDistribution(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("space must contain at least one point")]
    EmptySpace,
    #[error("bad parameter: {0}")]
    BadParameter(String),
}

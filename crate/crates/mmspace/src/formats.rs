//! JSON interchange for spaces, kernels and measures, plus the CSV layer
//! for reports. Numbers are written in shortest round-trip decimal form, so
//! parsing a file back yields bit-identical values.

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::core::{
    graph_space, CoreError, DiscreteDistribution, FiniteMMSpace, PushforwardMeasure, QMMSpace,
    Space,
};
use crate::distances::{DistanceError, GridKernel};

#[derive(Debug, Error)]
pub enum FormatError {
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("invalid space: {0}")]
    Space(#[from] CoreError),
    #[error("invalid kernel: {0}")]
    Kernel(#[from] DistanceError),
    #[error("{0}")]
    Unsupported(String),
}

type Atoms = Vec<(f64, f64)>;

/// Every file this tool reads or writes, discriminated by `kind`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum FileRepr {
    #[serde(rename = "mm")]
    Mm {
        weights: Vec<f64>,
        dist: Vec<Vec<f64>>,
    },
    #[serde(rename = "qmm")]
    Qmm {
        weights: Vec<f64>,
        dstar: Vec<Vec<Atoms>>,
    },
    #[serde(rename = "graph")]
    Graph {
        n: usize,
        edges: Vec<(usize, usize)>,
    },
    #[serde(rename = "kernel")]
    Kernel {
        weights: Vec<f64>,
        cells: Vec<Vec<Atoms>>,
    },
    #[serde(rename = "interval-measure")]
    IntervalMeasure { atoms: Atoms },
    #[serde(rename = "finite-measure")]
    FiniteMeasure {
        dist: Vec<Vec<f64>>,
        weights: Vec<f64>,
    },
}

fn dstar_from(weights: Vec<f64>, grid: Vec<Vec<Atoms>>) -> Result<QMMSpace, FormatError> {
    let dstar = grid
        .into_iter()
        .map(|row| {
            row.into_iter()
                .map(DiscreteDistribution::new)
                .collect::<Result<Vec<_>, _>>()
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(QMMSpace::new(weights, dstar)?)
}

impl FileRepr {
    pub fn into_space(self) -> Result<Space, FormatError> {
        match self {
            FileRepr::Mm { weights, dist } => Ok(Space::Mm(FiniteMMSpace::new(weights, dist)?)),
            FileRepr::Qmm { weights, dstar } => Ok(Space::Qmm(dstar_from(weights, dstar)?)),
            FileRepr::Graph { n, edges } => {
                let mut adjacency = vec![vec![false; n]; n];
                for (i, j) in edges {
                    if i >= n || j >= n {
                        return Err(FormatError::Unsupported(format!(
                            "edge ({i}, {j}) outside vertex range 0..{n}"
                        )));
                    }
                    adjacency[i][j] = true;
                    adjacency[j][i] = true;
                }
                Ok(Space::Mm(graph_space(&adjacency)?))
            }
            other => Err(FormatError::Unsupported(format!(
                "expected an mm, qmm or graph file, found {}",
                other.kind_name()
            ))),
        }
    }

    pub fn into_kernel(self) -> Result<GridKernel, FormatError> {
        match self {
            FileRepr::Kernel { weights, cells } => {
                let grid = cells
                    .into_iter()
                    .map(|row| {
                        row.into_iter()
                            .map(DiscreteDistribution::new)
                            .collect::<Result<Vec<_>, _>>()
                    })
                    .collect::<Result<Vec<_>, _>>()?;
                Ok(GridKernel::new(weights, grid)?)
            }
            other => {
                let space = other.into_space()?;
                Ok(GridKernel::from(&space))
            }
        }
    }

    pub fn into_measure(self) -> Result<PushforwardMeasure, FormatError> {
        match self {
            FileRepr::IntervalMeasure { atoms } => Ok(PushforwardMeasure::interval(
                DiscreteDistribution::new(atoms)?,
            )),
            FileRepr::FiniteMeasure { dist, weights } => {
                let metric = crate::core::FiniteMetric::new(dist)?;
                Ok(PushforwardMeasure::finite(metric, weights)?)
            }
            other => Err(FormatError::Unsupported(format!(
                "expected a measure file, found {}",
                other.kind_name()
            ))),
        }
    }

    fn kind_name(&self) -> &'static str {
        match self {
            FileRepr::Mm { .. } => "mm",
            FileRepr::Qmm { .. } => "qmm",
            FileRepr::Graph { .. } => "graph",
            FileRepr::Kernel { .. } => "kernel",
            FileRepr::IntervalMeasure { .. } => "interval-measure",
            FileRepr::FiniteMeasure { .. } => "finite-measure",
        }
    }
}

impl From<&Space> for FileRepr {
    fn from(space: &Space) -> Self {
        match space {
            Space::Mm(s) => FileRepr::Mm {
                weights: s.weights().to_vec(),
                dist: s.dist_matrix(),
            },
            Space::Qmm(q) => FileRepr::Qmm {
                weights: q.weights().to_vec(),
                dstar: (0..q.n())
                    .map(|i| (0..q.n()).map(|j| q.dstar(i, j).atoms().to_vec()).collect())
                    .collect(),
            },
        }
    }
}

impl From<&GridKernel> for FileRepr {
    fn from(kernel: &GridKernel) -> Self {
        FileRepr::Kernel {
            weights: kernel.weights().to_vec(),
            cells: (0..kernel.n())
                .map(|i| {
                    (0..kernel.n())
                        .map(|j| kernel.cell(i, j).atoms().to_vec())
                        .collect()
                })
                .collect(),
        }
    }
}

impl From<&PushforwardMeasure> for FileRepr {
    fn from(measure: &PushforwardMeasure) -> Self {
        match measure {
            PushforwardMeasure::Interval { measure } => FileRepr::IntervalMeasure {
                atoms: measure.atoms().to_vec(),
            },
            PushforwardMeasure::Finite { metric, weights } => FileRepr::FiniteMeasure {
                dist: (0..metric.n())
                    .map(|i| (0..metric.n()).map(|j| metric.dist(i, j)).collect())
                    .collect(),
                weights: weights.clone(),
            },
        }
    }
}

pub fn parse(text: &str) -> Result<FileRepr, FormatError> {
    Ok(serde_json::from_str(text)?)
}

pub fn to_json(repr: &FileRepr) -> String {
    let mut out = serde_json::to_string_pretty(repr).expect("serializable representation");
    out.push('\n');
    out
}

pub fn load(path: impl AsRef<Path>) -> Result<FileRepr, FormatError> {
    parse(&std::fs::read_to_string(path)?)
}

pub fn load_space(path: impl AsRef<Path>) -> Result<Space, FormatError> {
    load(path)?.into_space()
}

pub fn load_kernel(path: impl AsRef<Path>) -> Result<GridKernel, FormatError> {
    load(path)?.into_kernel()
}

pub fn load_measure(path: impl AsRef<Path>) -> Result<PushforwardMeasure, FormatError> {
    load(path)?.into_measure()
}

pub fn save(path: impl AsRef<Path>, repr: &FileRepr) -> Result<(), FormatError> {
    Ok(std::fs::write(path, to_json(repr))?)
}

//! Step kernels: symmetric grids of length distributions with a cell-mass
//! vector, the pullback form of a space along a measure-preserving map.

use serde::{Deserialize, Serialize};

use super::DistanceError;
use crate::core::{
    DiscreteDistribution, FiniteMMSpace, MeasuredSpace, QMMSpace, Space, METRIC_TOL,
};

/// Symmetric `n×n` grid of distributions on `[0,1]` with zero point mass on
/// the diagonal and a probability vector of cell masses. Deterministic
/// kernels hold point masses. No triangle condition is imposed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridKernel {
    weights: Vec<f64>,
    cells: Vec<DiscreteDistribution>,
}

impl GridKernel {
    pub fn new(
        weights: Vec<f64>,
        cells: Vec<Vec<DiscreteDistribution>>,
    ) -> Result<Self, DistanceError> {
        let n = weights.len();
        if n == 0 {
            return Err(DistanceError::BadKernel("kernel must be nonempty".into()));
        }
        if weights.iter().any(|&w| !w.is_finite() || w <= 0.0) {
            return Err(DistanceError::BadKernel(
                "cell masses must be positive".into(),
            ));
        }
        let total = crate::numeric::sum(&weights);
        if (total - 1.0).abs() > METRIC_TOL {
            return Err(DistanceError::BadKernel(format!(
                "cell masses sum to {total}, expected 1"
            )));
        }
        if cells.len() != n || cells.iter().any(|r| r.len() != n) {
            return Err(DistanceError::BadKernel("cell grid must be n×n".into()));
        }
        let flat: Vec<DiscreteDistribution> = cells.into_iter().flatten().collect();
        for i in 0..n {
            if !flat[i * n + i].approx_eq(&DiscreteDistribution::zero(), METRIC_TOL) {
                return Err(DistanceError::BadKernel(format!(
                    "diagonal cell {i} is not the point mass at zero"
                )));
            }
            for j in (i + 1)..n {
                if !flat[i * n + j].approx_eq(&flat[j * n + i], METRIC_TOL) {
                    return Err(DistanceError::BadKernel(format!(
                        "cells ({i},{j}) and ({j},{i}) differ"
                    )));
                }
            }
        }
        Ok(Self {
            weights,
            cells: flat,
        })
    }

    /// Deterministic kernel from a plain matrix.
    pub fn from_matrix(weights: Vec<f64>, rows: Vec<Vec<f64>>) -> Result<Self, DistanceError> {
        let cells = rows
            .into_iter()
            .map(|row| {
                row.into_iter()
                    .map(|v| {
                        if !(-METRIC_TOL..=1.0 + METRIC_TOL).contains(&v) {
                            Err(DistanceError::BadKernel(format!(
                                "cell value {v} outside [0,1]"
                            )))
                        } else {
                            Ok(DiscreteDistribution::point_mass(v.clamp(0.0, 1.0)))
                        }
                    })
                    .collect::<Result<Vec<_>, _>>()
            })
            .collect::<Result<Vec<_>, _>>()?;
        Self::new(weights, cells)
    }

    pub(crate) fn from_parts_unchecked(
        weights: Vec<f64>,
        cells: Vec<DiscreteDistribution>,
    ) -> Self {
        debug_assert_eq!(cells.len(), weights.len() * weights.len());
        Self { weights, cells }
    }

    pub fn n(&self) -> usize {
        self.weights.len()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn cell(&self, i: usize, j: usize) -> &DiscreteDistribution {
        &self.cells[i * self.n() + j]
    }

    /// Relabel cells by `perm`, where new cell `i` is old cell `perm[i]`.
    pub fn permuted(&self, perm: &[usize]) -> Self {
        let n = self.n();
        assert_eq!(perm.len(), n);
        let weights = perm.iter().map(|&p| self.weights[p]).collect();
        let mut cells = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                cells.push(self.cell(perm[i], perm[j]).clone());
            }
        }
        Self { weights, cells }
    }
}

impl From<&FiniteMMSpace> for GridKernel {
    fn from(s: &FiniteMMSpace) -> Self {
        let n = s.n();
        let mut cells = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                cells.push(DiscreteDistribution::point_mass(s.dist(i, j)));
            }
        }
        Self {
            weights: s.weights().to_vec(),
            cells,
        }
    }
}

impl From<&QMMSpace> for GridKernel {
    fn from(q: &QMMSpace) -> Self {
        let n = q.n();
        let mut cells = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                cells.push(q.dstar(i, j).clone());
            }
        }
        Self {
            weights: q.weights().to_vec(),
            cells,
        }
    }
}

impl From<&Space> for GridKernel {
    fn from(space: &Space) -> Self {
        match space {
            Space::Mm(s) => s.into(),
            Space::Qmm(q) => q.into(),
        }
    }
}

impl MeasuredSpace for GridKernel {
    fn len(&self) -> usize {
        self.n()
    }

    fn weights(&self) -> &[f64] {
        &self.weights
    }

    fn lower(&self, i: usize, j: usize) -> f64 {
        self.cell(i, j).min_value()
    }

    fn upper(&self, i: usize, j: usize) -> f64 {
        self.cell(i, j).max_value()
    }

    fn pair_expect(&self, i: usize, j: usize, f: &dyn Fn(f64) -> f64) -> f64 {
        self.cell(i, j).expect(f)
    }

    fn draw_length(&self, i: usize, j: usize, u: f64) -> f64 {
        self.cell(i, j).quantile(u)
    }

    fn pair_atoms(&self, i: usize, j: usize) -> usize {
        self.cell(i, j).atoms().len()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::core::complete_graph_space;
    use crate::sampling::{moment_exact, GSystem, TestFunction};

    #[test]
    fn kernel_from_space_preserves_moments() {
        let s = complete_graph_space(4).unwrap();
        let k = GridKernel::from(&s);
        let g = GSystem::uniform(2, TestFunction::identity()).unwrap();
        assert_eq!(moment_exact(&g, &s).unwrap(), moment_exact(&g, &k).unwrap());
    }

    #[test]
    fn kernel_validation() {
        let d0 = DiscreteDistribution::zero();
        let half = DiscreteDistribution::point_mass(0.5);
        assert!(GridKernel::new(
            vec![0.5, 0.5],
            vec![
                vec![d0.clone(), half.clone()],
                vec![half.clone(), d0.clone()]
            ],
        )
        .is_ok());
        // Asymmetric cells are rejected.
        let third = DiscreteDistribution::point_mass(0.3);
        assert!(GridKernel::new(
            vec![0.5, 0.5],
            vec![vec![d0.clone(), half.clone()], vec![third, d0.clone()]],
        )
        .is_err());
        // Nonzero diagonal is rejected.
        assert!(GridKernel::new(
            vec![0.5, 0.5],
            vec![vec![half.clone(), half.clone()], vec![half.clone(), d0]],
        )
        .is_err());
    }

    #[test]
    fn permutation_relabels_cells() {
        let k = GridKernel::from_matrix(
            vec![0.2, 0.3, 0.5],
            vec![
                vec![0.0, 0.4, 0.6],
                vec![0.4, 0.0, 0.5],
                vec![0.6, 0.5, 0.0],
            ],
        )
        .unwrap();
        let p = k.permuted(&[2, 0, 1]);
        assert_eq!(p.weights(), &[0.5, 0.2, 0.3]);
        assert_eq!(p.cell(0, 1), k.cell(2, 0));
    }
}

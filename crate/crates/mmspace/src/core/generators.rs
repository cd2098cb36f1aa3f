//! Constructors for graph spaces and empirical spheres.

use rand::Rng;
use rand_distr::StandardNormal;

use super::space::FiniteMMSpace;
use super::CoreError;
use crate::rng::rng_from;

/// Space of a finite simple graph: uniform weights, distance 1/2 between
/// adjacent vertices and 1 otherwise. Distances valued in {1/2, 1} always
/// satisfy the triangle inequality.
pub fn graph_space(adjacency: &[Vec<bool>]) -> Result<FiniteMMSpace, CoreError> {
    let n = adjacency.len();
    if n == 0 {
        return Err(CoreError::EmptySpace);
    }
    if adjacency.iter().any(|r| r.len() != n) {
        return Err(CoreError::DimensionMismatch {
            expected: n,
            got: adjacency.iter().map(|r| r.len()).max().unwrap_or(0),
        });
    }
    for i in 0..n {
        if adjacency[i][i] {
            return Err(CoreError::SelfLoop { i });
        }
        for j in 0..n {
            if adjacency[i][j] != adjacency[j][i] {
                return Err(CoreError::NonSymmetric { i, j });
            }
        }
    }
    let weights = vec![1.0 / n as f64; n];
    let mut dist = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            if i != j {
                dist[i * n + j] = if adjacency[i][j] { 0.5 } else { 1.0 };
            }
        }
    }
    Ok(FiniteMMSpace::from_parts_unchecked(weights, dist))
}

/// Space of the complete graph on `n` vertices.
pub fn complete_graph_space(n: usize) -> Result<FiniteMMSpace, CoreError> {
    let adjacency: Vec<Vec<bool>> = (0..n).map(|i| (0..n).map(|j| i != j).collect()).collect();
    graph_space(&adjacency)
}

/// Space of the edgeless graph on `n` vertices.
pub fn empty_graph_space(n: usize) -> Result<FiniteMMSpace, CoreError> {
    graph_space(&vec![vec![false; n]; n])
}

/// Space of an Erdős–Rényi graph: each edge present independently with
/// probability `p ∈ (0, 1]`. `p = 1` degenerates to the complete graph.
pub fn random_graph_space(n: usize, p: f64, seed: u64) -> Result<FiniteMMSpace, CoreError> {
    if !(p > 0.0 && p <= 1.0) {
        return Err(CoreError::BadParameter(format!(
            "edge probability {p} outside (0, 1]"
        )));
    }
    let mut rng = rng_from(seed);
    let mut adjacency = vec![vec![false; n]; n];
    for i in 0..n {
        for j in (i + 1)..n {
            let edge = rng.random::<f64>() < p;
            adjacency[i][j] = edge;
            adjacency[j][i] = edge;
        }
    }
    graph_space(&adjacency)
}

/// Empirical sphere: `count` i.i.d. uniform points on the unit sphere in
/// `R^{dim+1}` (isotropic Gaussian direction method), geodesic distance
/// normalized by π so the diameter is one, uniform weights.
pub fn sphere_empirical(dim: usize, count: usize, seed: u64) -> Result<FiniteMMSpace, CoreError> {
    if dim < 1 {
        return Err(CoreError::BadParameter(
            "sphere dimension must be ≥ 1".into(),
        ));
    }
    if count < 2 {
        return Err(CoreError::BadParameter("point count must be ≥ 2".into()));
    }
    let mut rng = rng_from(seed);
    let points: Vec<Vec<f64>> = (0..count)
        .map(|_| loop {
            let v: Vec<f64> = (0..=dim)
                .map(|_| rng.sample::<f64, _>(StandardNormal))
                .collect();
            let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm > 1e-12 {
                return v.into_iter().map(|x| x / norm).collect();
            }
        })
        .collect();
    sphere_space_from_points(&points)
}

/// Space of explicit unit vectors under normalized geodesic distance.
/// Exposed so degenerate configurations (antipodal or coincident points)
/// can be constructed deterministically.
pub fn sphere_space_from_points(points: &[Vec<f64>]) -> Result<FiniteMMSpace, CoreError> {
    let count = points.len();
    if count < 2 {
        return Err(CoreError::BadParameter("need at least two points".into()));
    }
    let dim = points[0].len();
    if dim < 2 || points.iter().any(|p| p.len() != dim) {
        return Err(CoreError::BadParameter(
            "points must share an ambient dimension ≥ 2".into(),
        ));
    }
    let mut unit = Vec::with_capacity(count);
    for p in points {
        let norm = p.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm <= 1e-12 {
            return Err(CoreError::BadParameter("zero-norm point".into()));
        }
        unit.push(p.iter().map(|x| x / norm).collect::<Vec<f64>>());
    }
    let weights = vec![1.0 / count as f64; count];
    let mut dist = vec![0.0; count * count];
    for i in 0..count {
        for j in (i + 1)..count {
            let dot: f64 = unit[i].iter().zip(&unit[j]).map(|(a, b)| a * b).sum();
            let d = dot.clamp(-1.0, 1.0).acos() / std::f64::consts::PI;
            dist[i * count + j] = d;
            dist[j * count + i] = d;
        }
    }
    Ok(FiniteMMSpace::from_parts_unchecked(weights, dist))
}

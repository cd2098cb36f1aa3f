//! Minimum-weight vertex cover of small violation graphs: exact branch and
//! bound with a local-ratio 2-approximation for warm start, pruning and
//! fallback bounds.

/// Exact search limit on the number of vertices.
pub(crate) const COVER_EXACT_LIMIT: usize = 30;

#[derive(Debug, Clone)]
pub(crate) struct CoverOutcome {
    pub weight_lb: f64,
    pub weight_ub: f64,
    pub cover: Vec<usize>,
}

/// Local-ratio pass: returns (dual lower bound, feasible cover). The dual
/// value never exceeds the optimum; the cover weighs at most twice it.
fn local_ratio(n: usize, edges: &[(usize, usize)], weights: &[f64]) -> (f64, Vec<usize>) {
    let mut residual = weights.to_vec();
    let mut dual = 0.0;
    for &(u, v) in edges {
        if residual[u] > 1e-15 && residual[v] > 1e-15 {
            let c = residual[u].min(residual[v]);
            residual[u] -= c;
            residual[v] -= c;
            dual += c;
        }
    }
    let mut cover: Vec<usize> = (0..n).filter(|&v| residual[v] <= 1e-15).collect();
    prune_cover(&mut cover, edges, weights);
    (dual, cover)
}

/// Drop redundant cover vertices, heaviest first.
fn prune_cover(cover: &mut Vec<usize>, edges: &[(usize, usize)], weights: &[f64]) {
    cover.sort_by(|&a, &b| weights[b].total_cmp(&weights[a]));
    let mut keep: Vec<usize> = cover.clone();
    let mut i = 0;
    while i < keep.len() {
        let v = keep[i];
        let mut without: Vec<usize> = keep.clone();
        without.remove(i);
        let covers = edges
            .iter()
            .all(|&(a, b)| without.contains(&a) || without.contains(&b));
        if covers {
            keep = without;
        } else {
            i += 1;
        }
        let _ = v;
    }
    keep.sort_unstable();
    *cover = keep;
}

fn cover_weight(cover: &[usize], weights: &[f64]) -> f64 {
    cover.iter().map(|&v| weights[v]).sum()
}

/// Vertex-disjoint matching lower bound on the uncovered edge set.
fn matching_bound(edges: &[(usize, usize)], weights: &[f64], in_cover: &[bool]) -> f64 {
    let mut used = vec![false; weights.len()];
    let mut bound = 0.0;
    for &(u, v) in edges {
        if in_cover[u] || in_cover[v] || used[u] || used[v] {
            continue;
        }
        used[u] = true;
        used[v] = true;
        bound += weights[u].min(weights[v]);
    }
    bound
}

/// Minimum-weight vertex cover. Exact (branch and bound on edges) when the
/// graph has at most [`COVER_EXACT_LIMIT`] vertices; otherwise returns the
/// local-ratio bracket `[dual, cover weight]`.
pub(crate) fn min_weight_cover(
    n: usize,
    edges: &[(usize, usize)],
    weights: &[f64],
) -> CoverOutcome {
    if edges.is_empty() {
        return CoverOutcome {
            weight_lb: 0.0,
            weight_ub: 0.0,
            cover: Vec::new(),
        };
    }
    let (dual, warm) = local_ratio(n, edges, weights);
    let warm_weight = cover_weight(&warm, weights);
    if n > COVER_EXACT_LIMIT {
        return CoverOutcome {
            weight_lb: dual,
            weight_ub: warm_weight,
            cover: warm,
        };
    }

    struct Search<'a> {
        edges: &'a [(usize, usize)],
        weights: &'a [f64],
        best_weight: f64,
        best_cover: Vec<usize>,
    }

    impl Search<'_> {
        fn descend(&mut self, in_cover: &mut Vec<bool>, current: f64) {
            if current + matching_bound(self.edges, self.weights, in_cover)
                >= self.best_weight - 1e-15
            {
                return;
            }
            match self
                .edges
                .iter()
                .find(|&&(u, v)| !in_cover[u] && !in_cover[v])
            {
                None => {
                    if current < self.best_weight {
                        self.best_weight = current;
                        self.best_cover = in_cover
                            .iter()
                            .enumerate()
                            .filter_map(|(v, &inc)| inc.then_some(v))
                            .collect();
                    }
                }
                Some(&(u, v)) => {
                    in_cover[u] = true;
                    self.descend(in_cover, current + self.weights[u]);
                    in_cover[u] = false;
                    in_cover[v] = true;
                    self.descend(in_cover, current + self.weights[v]);
                    in_cover[v] = false;
                }
            }
        }
    }

    let mut search = Search {
        edges,
        weights,
        best_weight: warm_weight,
        best_cover: warm,
    };
    let mut in_cover = vec![false; n];
    search.descend(&mut in_cover, 0.0);
    let mut cover = search.best_cover;
    prune_cover(&mut cover, edges, weights);
    let weight = cover_weight(&cover, weights);
    CoverOutcome {
        weight_lb: weight,
        weight_ub: weight,
        cover,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    /// Exhaustive oracle over all vertex subsets.
    fn oracle(n: usize, edges: &[(usize, usize)], weights: &[f64]) -> f64 {
        let mut best = f64::INFINITY;
        for mask in 0u32..(1 << n) {
            let covers = edges
                .iter()
                .all(|&(u, v)| mask & (1 << u) != 0 || mask & (1 << v) != 0);
            if covers {
                let w: f64 = (0..n)
                    .filter(|&v| mask & (1 << v) != 0)
                    .map(|v| weights[v])
                    .sum();
                best = best.min(w);
            }
        }
        best
    }

    #[test]
    fn simple_instances() {
        // Single edge: cover the lighter endpoint.
        let out = min_weight_cover(2, &[(0, 1)], &[0.3, 0.7]);
        assert_eq!(out.cover, vec![0]);
        assert_eq!(out.weight_ub, 0.3);
        // Triangle: two lightest vertices.
        let out = min_weight_cover(3, &[(0, 1), (1, 2), (0, 2)], &[0.1, 0.2, 0.9]);
        assert!((out.weight_ub - 0.3).abs() < 1e-15);
    }

    #[test]
    fn matches_subset_oracle_on_random_graphs() {
        let mut rng = crate::rng::rng_from(8);
        for _ in 0..80 {
            let n = rng.random_range(2..9usize);
            let weights: Vec<f64> = (0..n).map(|_| rng.random::<f64>() + 0.05).collect();
            let mut edges = Vec::new();
            for u in 0..n {
                for v in (u + 1)..n {
                    if rng.random::<f64>() < 0.4 {
                        edges.push((u, v));
                    }
                }
            }
            let out = min_weight_cover(n, &edges, &weights);
            assert!((out.weight_lb - out.weight_ub).abs() < 1e-15);
            let best = oracle(n, &edges, &weights);
            let best = if best.is_finite() { best } else { 0.0 };
            assert!(
                (out.weight_ub - best).abs() < 1e-12,
                "got {} vs oracle {best}",
                out.weight_ub
            );
            // The returned cover really covers.
            for &(u, v) in &edges {
                assert!(out.cover.contains(&u) || out.cover.contains(&v));
            }
        }
    }

    #[test]
    fn fallback_brackets_the_optimum() {
        let mut rng = crate::rng::rng_from(9);
        let n = 40;
        let weights: Vec<f64> = (0..n).map(|_| rng.random::<f64>() + 0.05).collect();
        let mut edges = Vec::new();
        for u in 0..n {
            for v in (u + 1)..n {
                if rng.random::<f64>() < 0.1 {
                    edges.push((u, v));
                }
            }
        }
        let out = min_weight_cover(n, &edges, &weights);
        assert!(out.weight_lb <= out.weight_ub + 1e-15);
        for &(u, v) in &edges {
            assert!(out.cover.contains(&u) || out.cover.contains(&v));
        }
    }
}

//! Finitely supported probability measures on `[0,1]` and the
//! Kantorovich–Rubinstein distance between them.

use serde::{Deserialize, Serialize};

use super::{CoreError, METRIC_TOL};
use crate::numeric::NeumaierSum;

/// Atoms closer than this merge during canonicalization.
const MERGE_TOL: f64 = 1e-12;
/// Atoms lighter than this are dropped during canonicalization.
const DROP_TOL: f64 = 1e-15;

/// Finitely supported probability measure on `[0,1]`.
///
/// Atoms are kept in canonical form: values strictly increasing, weights
/// strictly positive and summing to one. Construction merges atoms closer
/// than 1e-12, drops weights below 1e-15 and renormalizes, so equality
/// testing is stable.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<(f64, f64)>", into = "Vec<(f64, f64)>")]
pub struct DiscreteDistribution {
    atoms: Vec<(f64, f64)>,
}

impl DiscreteDistribution {
    /// Build a distribution from `(value, weight)` pairs, canonicalizing.
    pub fn new(atoms: Vec<(f64, f64)>) -> Result<Self, CoreError> {
        if atoms.is_empty() {
            return Err(CoreError::BadDistribution("no atoms".into()));
        }
        for &(v, w) in &atoms {
            if !v.is_finite() || !(-METRIC_TOL..=1.0 + METRIC_TOL).contains(&v) {
                return Err(CoreError::BadDistribution(format!(
                    "atom value {v} outside [0,1]"
                )));
            }
            if !w.is_finite() || w <= 0.0 {
                return Err(CoreError::BadDistribution(format!(
                    "atom weight {w} not positive"
                )));
            }
        }
        let mut atoms = atoms;
        atoms.sort_by(|a, b| a.0.total_cmp(&b.0));
        // Merge near-coincident values onto the first representative.
        let mut merged: Vec<(f64, f64)> = Vec::with_capacity(atoms.len());
        for (v, w) in atoms {
            match merged.last_mut() {
                Some(last) if v - last.0 <= MERGE_TOL => last.1 += w,
                _ => merged.push((v.clamp(0.0, 1.0), w)),
            }
        }
        merged.retain(|&(_, w)| w > DROP_TOL);
        if merged.is_empty() {
            return Err(CoreError::BadDistribution(
                "all atoms below weight floor".into(),
            ));
        }
        let total: f64 = crate::numeric::sum(&merged.iter().map(|a| a.1).collect::<Vec<_>>());
        if !total.is_finite() || total <= 0.0 {
            return Err(CoreError::BadDistribution(format!(
                "total mass {total} not normalizable"
            )));
        }
        for a in &mut merged {
            a.1 /= total;
        }
        Ok(Self { atoms: merged })
    }

    /// The point mass at `v`. Panics if `v` is outside `[0,1]`.
    pub fn point_mass(v: f64) -> Self {
        assert!(
            (-METRIC_TOL..=1.0 + METRIC_TOL).contains(&v),
            "point mass outside [0,1]: {v}"
        );
        Self {
            atoms: vec![(v.clamp(0.0, 1.0), 1.0)],
        }
    }

    /// The point mass at zero.
    pub fn zero() -> Self {
        Self::point_mass(0.0)
    }

    pub fn atoms(&self) -> &[(f64, f64)] {
        &self.atoms
    }

    pub fn is_point_mass(&self) -> bool {
        self.atoms.len() == 1
    }

    /// Infimum of the support.
    pub fn min_value(&self) -> f64 {
        self.atoms[0].0
    }

    /// Supremum of the support.
    pub fn max_value(&self) -> f64 {
        self.atoms[self.atoms.len() - 1].0
    }

    /// Exact expectation of `f` under the distribution.
    pub fn expect(&self, f: impl Fn(f64) -> f64) -> f64 {
        let mut acc = NeumaierSum::new();
        for &(v, w) in &self.atoms {
            acc.add(w * f(v));
        }
        acc.value()
    }

    /// Inverse-CDF draw at quantile `u ∈ [0,1)`.
    pub fn quantile(&self, u: f64) -> f64 {
        let mut cum = 0.0;
        for &(v, w) in &self.atoms {
            cum += w;
            if u < cum {
                return v;
            }
        }
        self.max_value()
    }

    /// Atomwise comparison at tolerance `tol` on both values and weights.
    pub fn approx_eq(&self, other: &Self, tol: f64) -> bool {
        self.atoms.len() == other.atoms.len()
            && self
                .atoms
                .iter()
                .zip(&other.atoms)
                .all(|(a, b)| (a.0 - b.0).abs() <= tol && (a.1 - b.1).abs() <= tol)
    }
}

impl TryFrom<Vec<(f64, f64)>> for DiscreteDistribution {
    type Error = CoreError;

    fn try_from(atoms: Vec<(f64, f64)>) -> Result<Self, CoreError> {
        Self::new(atoms)
    }
}

impl From<DiscreteDistribution> for Vec<(f64, f64)> {
    fn from(d: DiscreteDistribution) -> Self {
        d.atoms
    }
}

/// Kantorovich–Rubinstein distance between two measures on `[0,1]`:
/// the supremum of `|∫f dμ − ∫f dν|` over 1-Lipschitz `f`, computed in
/// closed form as the integral of the absolute CDF difference.
pub fn d_ext(mu: &DiscreteDistribution, nu: &DiscreteDistribution) -> f64 {
    let a = mu.atoms();
    let b = nu.atoms();
    let (mut ia, mut ib) = (0usize, 0usize);
    let (mut fa, mut fb) = (0.0f64, 0.0f64);
    let mut prev = 0.0f64;
    let mut total = NeumaierSum::new();
    while ia < a.len() || ib < b.len() {
        let va = a.get(ia).map_or(f64::INFINITY, |t| t.0);
        let vb = b.get(ib).map_or(f64::INFINITY, |t| t.0);
        let v = va.min(vb);
        total.add((v - prev) * (fa - fb).abs());
        while ia < a.len() && a[ia].0 == v {
            fa += a[ia].1;
            ia += 1;
        }
        while ib < b.len() && b[ib].0 == v {
            fb += b[ib].1;
            ib += 1;
        }
        prev = v;
    }
    total.value().max(0.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Independent transport oracle: optimal coupling of two sorted atom
    /// lists on the line by greedy mass matching.
    fn transport_cost(mu: &DiscreteDistribution, nu: &DiscreteDistribution) -> f64 {
        let mut a: Vec<(f64, f64)> = mu.atoms().to_vec();
        let mut b: Vec<(f64, f64)> = nu.atoms().to_vec();
        let (mut ia, mut ib) = (0usize, 0usize);
        let mut cost = 0.0;
        while ia < a.len() && ib < b.len() {
            let m = a[ia].1.min(b[ib].1);
            cost += m * (a[ia].0 - b[ib].0).abs();
            a[ia].1 -= m;
            b[ib].1 -= m;
            if a[ia].1 <= 1e-15 {
                ia += 1;
            }
            if ib < b.len() && b[ib].1 <= 1e-15 {
                ib += 1;
            }
        }
        cost
    }

    #[test]
    fn point_masses_at_unit_distance() {
        let d0 = DiscreteDistribution::point_mass(0.0);
        let d1 = DiscreteDistribution::point_mass(1.0);
        assert_eq!(d_ext(&d0, &d1), 1.0);
    }

    #[test]
    fn identity_is_zero() {
        let mu = DiscreteDistribution::new(vec![(0.1, 0.4), (0.6, 0.6)]).unwrap();
        assert_eq!(d_ext(&mu, &mu), 0.0);
    }

    #[test]
    fn delta_zero_vs_uniform_grid() {
        // Uniform atoms at k/100 for k = 0..100; mean is 0.495 exactly.
        let atoms: Vec<(f64, f64)> = (0..100).map(|k| (k as f64 / 100.0, 0.01)).collect();
        let nu = DiscreteDistribution::new(atoms).unwrap();
        let d0 = DiscreteDistribution::point_mass(0.0);
        let v = d_ext(&d0, &nu);
        assert!((v - 0.495).abs() < 1e-12, "got {v}");
        assert!((v - transport_cost(&d0, &nu)).abs() < 1e-9);
    }

    #[test]
    fn agrees_with_transport_oracle_on_random_pairs() {
        use rand::Rng;
        let mut rng = crate::rng::rng_from(11);
        for _ in 0..200 {
            let mu = random_dist(&mut rng);
            let nu = random_dist(&mut rng);
            let lhs = d_ext(&mu, &nu);
            let rhs = transport_cost(&mu, &nu);
            assert!((lhs - rhs).abs() < 1e-9, "{lhs} vs {rhs}");
        }

        fn random_dist(rng: &mut impl Rng) -> DiscreteDistribution {
            let k = rng.random_range(1..6usize);
            let atoms: Vec<(f64, f64)> = (0..k)
                .map(|_| (rng.random::<f64>(), rng.random::<f64>() + 0.05))
                .collect();
            DiscreteDistribution::new(atoms).unwrap()
        }
    }

    #[test]
    fn canonical_form_merges_and_renormalizes() {
        let d =
            DiscreteDistribution::new(vec![(0.5, 1.0), (0.5 + 1e-13, 1.0), (0.2, 2.0)]).unwrap();
        assert_eq!(d.atoms().len(), 2);
        assert!((d.atoms().iter().map(|a| a.1).sum::<f64>() - 1.0).abs() < 1e-12);
        assert_eq!(d.min_value(), 0.2);
        assert_eq!(d.max_value(), 0.5);
    }

    #[test]
    fn rejects_bad_atoms() {
        assert!(DiscreteDistribution::new(vec![]).is_err());
        assert!(DiscreteDistribution::new(vec![(1.5, 1.0)]).is_err());
        assert!(DiscreteDistribution::new(vec![(0.5, -1.0)]).is_err());
    }

    #[test]
    fn quantile_walks_atoms() {
        let d = DiscreteDistribution::new(vec![(0.1, 0.5), (0.9, 0.5)]).unwrap();
        assert_eq!(d.quantile(0.0), 0.1);
        assert_eq!(d.quantile(0.49), 0.1);
        assert_eq!(d.quantile(0.51), 0.9);
        assert_eq!(d.quantile(0.999), 0.9);
    }
}

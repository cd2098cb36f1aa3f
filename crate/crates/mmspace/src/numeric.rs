//! Small numerical helpers shared across the crate.

/// Neumaier-compensated summation. Keeps long accumulations accurate enough
/// that invariance tests can assert equalities at 1e-12.
#[derive(Debug, Clone, Copy, Default)]
pub struct NeumaierSum {
    sum: f64,
    comp: f64,
}

impl NeumaierSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

/// Compensated sum of a slice.
pub fn sum(values: &[f64]) -> f64 {
    let mut acc = NeumaierSum::new();
    for &v in values {
        acc.add(v);
    }
    acc.value()
}

/// Cumulative weights for inverse-CDF index sampling.
pub fn cumulative(weights: &[f64]) -> Vec<f64> {
    let mut cum = Vec::with_capacity(weights.len());
    let mut acc = NeumaierSum::new();
    for &w in weights {
        acc.add(w);
        cum.push(acc.value());
    }
    cum
}

/// Index of the atom containing quantile `u ∈ [0,1)` in a cumulative vector.
pub fn pick_index(cum: &[f64], u: f64) -> usize {
    let k = cum.partition_point(|&c| c <= u);
    k.min(cum.len() - 1)
}

/// Welford accumulator for streaming mean and variance, with a deterministic
/// pairwise merge so chunked Monte-Carlo results do not depend on the number
/// of workers.
#[derive(Debug, Clone, Copy, Default)]
pub struct Welford {
    count: u64,
    mean: f64,
    m2: f64,
}

impl Welford {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, x: f64) {
        self.count += 1;
        let delta = x - self.mean;
        self.mean += delta / self.count as f64;
        self.m2 += delta * (x - self.mean);
    }

    pub fn merge(self, other: Welford) -> Welford {
        if self.count == 0 {
            return other;
        }
        if other.count == 0 {
            return self;
        }
        let count = self.count + other.count;
        let delta = other.mean - self.mean;
        let mean = self.mean + delta * other.count as f64 / count as f64;
        let m2 = self.m2
            + other.m2
            + delta * delta * (self.count as f64 * other.count as f64) / count as f64;
        Welford { count, mean, m2 }
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    /// Plug-in standard error: sample standard deviation over sqrt(count).
    pub fn standard_error(&self) -> f64 {
        if self.count < 2 {
            return 0.0;
        }
        let var = self.m2 / (self.count - 1) as f64;
        (var.max(0.0) / self.count as f64).sqrt()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn neumaier_handles_cancellation() {
        let mut acc = NeumaierSum::new();
        acc.add(1.0);
        acc.add(1e100);
        acc.add(1.0);
        acc.add(-1e100);
        assert_eq!(acc.value(), 2.0);
    }

    #[test]
    fn pick_index_covers_range() {
        let cum = cumulative(&[0.25, 0.25, 0.5]);
        assert_eq!(pick_index(&cum, 0.0), 0);
        assert_eq!(pick_index(&cum, 0.249), 0);
        assert_eq!(pick_index(&cum, 0.25), 1);
        assert_eq!(pick_index(&cum, 0.999), 2);
    }

    #[test]
    fn welford_merge_matches_sequential() {
        let xs: Vec<f64> = (0..100).map(|i| (i as f64).sin()).collect();
        let mut all = Welford::new();
        for &x in &xs {
            all.push(x);
        }
        let mut a = Welford::new();
        let mut b = Welford::new();
        for &x in &xs[..37] {
            a.push(x);
        }
        for &x in &xs[37..] {
            b.push(x);
        }
        let merged = a.merge(b);
        assert!((merged.mean() - all.mean()).abs() < 1e-12);
        assert!((merged.standard_error() - all.standard_error()).abs() < 1e-12);
    }
}

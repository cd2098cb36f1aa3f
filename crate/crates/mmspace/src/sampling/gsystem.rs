//! Systems of test functions on `[0,1]` whose products are integrated
//! against sampled distance matrices.

use serde::{Deserialize, Serialize};

use super::SamplingError;

/// A test function on `[0,1]` with exact evaluation, sup norm and Lipschitz
/// constant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum TestFunction {
    /// `t ↦ t^power`; power zero is the constant one.
    Monomial { power: u32 },
    /// Piecewise-linear interpolation through `(x, y)` breakpoints with
    /// strictly increasing `x` covering `[0,1]`.
    PiecewiseLinear { points: Vec<(f64, f64)> },
}

impl TestFunction {
    pub fn one() -> Self {
        TestFunction::Monomial { power: 0 }
    }

    pub fn identity() -> Self {
        TestFunction::Monomial { power: 1 }
    }

    pub fn validate(&self) -> Result<(), SamplingError> {
        match self {
            TestFunction::Monomial { .. } => Ok(()),
            TestFunction::PiecewiseLinear { points } => {
                if points.len() < 2 {
                    return Err(SamplingError::BadParameter(
                        "piecewise-linear spec needs at least two breakpoints".into(),
                    ));
                }
                if points.windows(2).any(|w| w[1].0 <= w[0].0) {
                    return Err(SamplingError::BadParameter(
                        "breakpoint abscissae must be strictly increasing".into(),
                    ));
                }
                if points[0].0.abs() > 1e-12 || (points[points.len() - 1].0 - 1.0).abs() > 1e-12 {
                    return Err(SamplingError::BadParameter(
                        "breakpoints must cover [0,1]".into(),
                    ));
                }
                if points.iter().any(|p| !p.1.is_finite()) {
                    return Err(SamplingError::BadParameter(
                        "breakpoint values must be finite".into(),
                    ));
                }
                Ok(())
            }
        }
    }

    pub fn eval(&self, t: f64) -> f64 {
        match self {
            TestFunction::Monomial { power } => {
                if *power == 0 {
                    1.0
                } else {
                    t.powi(*power as i32)
                }
            }
            TestFunction::PiecewiseLinear { points } => {
                let t = t.clamp(points[0].0, points[points.len() - 1].0);
                let k = points.partition_point(|p| p.0 <= t);
                if k == 0 {
                    return points[0].1;
                }
                if k == points.len() {
                    return points[points.len() - 1].1;
                }
                let (x0, y0) = points[k - 1];
                let (x1, y1) = points[k];
                y0 + (y1 - y0) * (t - x0) / (x1 - x0)
            }
        }
    }

    /// Sup norm on `[0,1]`; a piecewise-linear function attains it at a
    /// breakpoint.
    pub fn sup_norm(&self) -> f64 {
        match self {
            TestFunction::Monomial { .. } => 1.0,
            TestFunction::PiecewiseLinear { points } => {
                points.iter().map(|p| p.1.abs()).fold(0.0, f64::max)
            }
        }
    }

    /// Smallest Lipschitz constant on `[0,1]`.
    pub fn lipschitz_const(&self) -> f64 {
        match self {
            TestFunction::Monomial { power } => *power as f64,
            TestFunction::PiecewiseLinear { points } => points
                .windows(2)
                .map(|w| ((w[1].1 - w[0].1) / (w[1].0 - w[0].0)).abs())
                .fold(0.0, f64::max),
        }
    }
}

/// Symmetric family `{g_ij}` of test functions indexed by pairs
/// `1 ≤ i ≤ j ≤ r`, with the product convention controlled by
/// `include_diagonal`. The canonical moment products run over strict pairs
/// `i < j`; diagonal factors are the constants `g_ii(0)` and are only
/// multiplied in when the flag is set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GSystem {
    r: usize,
    /// Upper triangle including the diagonal, row-major.
    funcs: Vec<TestFunction>,
    include_diagonal: bool,
}

fn tri_index(r: usize, i: usize, j: usize) -> usize {
    debug_assert!(i <= j && j < r);
    i * r - i * (i + 1) / 2 + j
}

impl GSystem {
    /// Full constructor: `funcs` is the upper triangle including the
    /// diagonal, row-major, of length `r(r+1)/2`.
    pub fn new(
        r: usize,
        funcs: Vec<TestFunction>,
        include_diagonal: bool,
    ) -> Result<Self, SamplingError> {
        if r == 0 {
            return Err(SamplingError::BadParameter("order must be ≥ 1".into()));
        }
        if funcs.len() != r * (r + 1) / 2 {
            return Err(SamplingError::BadParameter(format!(
                "expected {} functions for order {r}, got {}",
                r * (r + 1) / 2,
                funcs.len()
            )));
        }
        for f in &funcs {
            f.validate()?;
        }
        Ok(Self {
            r,
            funcs,
            include_diagonal,
        })
    }

    /// Every off-diagonal pair shares `f`; diagonal entries are the
    /// constant one.
    pub fn uniform(r: usize, f: TestFunction) -> Result<Self, SamplingError> {
        let mut funcs = Vec::with_capacity(r * (r + 1) / 2);
        for i in 0..r {
            for j in i..r {
                funcs.push(if i == j {
                    TestFunction::one()
                } else {
                    f.clone()
                });
            }
        }
        Self::new(r, funcs, false)
    }

    /// Monomial system: `powers` assigns an exponent to each strict pair
    /// `i < j` in row-major order (length `r(r-1)/2`).
    pub fn from_powers(r: usize, powers: &[u32]) -> Result<Self, SamplingError> {
        if powers.len() != r * (r - 1) / 2 {
            return Err(SamplingError::BadParameter(format!(
                "expected {} powers for order {r}, got {}",
                r * (r - 1) / 2,
                powers.len()
            )));
        }
        let mut funcs = Vec::with_capacity(r * (r + 1) / 2);
        let mut it = powers.iter();
        for i in 0..r {
            for j in i..r {
                if i == j {
                    funcs.push(TestFunction::one());
                } else {
                    funcs.push(TestFunction::Monomial {
                        power: *it.next().unwrap(),
                    });
                }
            }
        }
        Self::new(r, funcs, false)
    }

    pub fn r(&self) -> usize {
        self.r
    }

    pub fn include_diagonal(&self) -> bool {
        self.include_diagonal
    }

    pub fn with_diagonal(mut self, include: bool) -> Self {
        self.include_diagonal = include;
        self
    }

    pub fn func(&self, i: usize, j: usize) -> &TestFunction {
        let (i, j) = if i <= j { (i, j) } else { (j, i) };
        &self.funcs[tri_index(self.r, i, j)]
    }

    /// Number of strict pairs `i < j`.
    pub fn pair_count(&self) -> usize {
        self.r * (self.r - 1) / 2
    }

    /// Product of sup norms over strict pairs — the constant in the
    /// martingale tail bound.
    pub fn c_g(&self) -> f64 {
        let mut prod = 1.0;
        for i in 0..self.r {
            for j in (i + 1)..self.r {
                prod *= self.func(i, j).sup_norm();
            }
        }
        prod
    }

    /// Largest sup norm over strict pairs.
    pub fn max_sup_norm(&self) -> f64 {
        let mut best = 0.0f64;
        for i in 0..self.r {
            for j in (i + 1)..self.r {
                best = best.max(self.func(i, j).sup_norm());
            }
        }
        best
    }

    /// Largest Lipschitz constant over strict pairs.
    pub fn max_lipschitz(&self) -> f64 {
        let mut best = 0.0f64;
        for i in 0..self.r {
            for j in (i + 1)..self.r {
                best = best.max(self.func(i, j).lipschitz_const());
            }
        }
        best
    }

    /// Constant contributed by the diagonal factors: `∏ g_ii(0)` when the
    /// diagonal convention is on, one otherwise.
    pub fn diagonal_product(&self) -> f64 {
        if !self.include_diagonal {
            return 1.0;
        }
        (0..self.r).map(|i| self.func(i, i).eval(0.0)).product()
    }
}

//! Pushforward measures: the image of a space's weight vector under a
//! Lipschitz observable, carried either by the interval or by a finite
//! metric space.

use serde::{Deserialize, Serialize};

use super::dist::DiscreteDistribution;
use super::space::FiniteMetric;
use super::{CoreError, METRIC_TOL};

/// A probability measure on the target of an observable.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "carrier", rename_all = "kebab-case")]
pub enum PushforwardMeasure {
    /// Measure on `[0,1]`.
    Interval { measure: DiscreteDistribution },
    /// Measure on the points of a finite metric space; weights may be zero
    /// for points missed by the map.
    Finite {
        metric: FiniteMetric,
        weights: Vec<f64>,
    },
}

impl PushforwardMeasure {
    pub fn interval(measure: DiscreteDistribution) -> Self {
        PushforwardMeasure::Interval { measure }
    }

    pub fn finite(metric: FiniteMetric, weights: Vec<f64>) -> Result<Self, CoreError> {
        if weights.len() != metric.n() {
            return Err(CoreError::DimensionMismatch {
                expected: metric.n(),
                got: weights.len(),
            });
        }
        if let Some((i, &w)) = weights
            .iter()
            .enumerate()
            .find(|(_, &w)| !w.is_finite() || w < -METRIC_TOL)
        {
            return Err(CoreError::BadWeights {
                index: i,
                reason: format!("mass {w} negative"),
            });
        }
        let total = crate::numeric::sum(&weights);
        if (total - 1.0).abs() > METRIC_TOL {
            return Err(CoreError::BadWeights {
                index: 0,
                reason: format!("total mass {total}, expected 1"),
            });
        }
        Ok(PushforwardMeasure::Finite { metric, weights })
    }

    pub fn total_mass(&self) -> f64 {
        match self {
            PushforwardMeasure::Interval { measure } => {
                crate::numeric::sum(&measure.atoms().iter().map(|a| a.1).collect::<Vec<_>>())
            }
            PushforwardMeasure::Finite { weights, .. } => crate::numeric::sum(weights),
        }
    }
}

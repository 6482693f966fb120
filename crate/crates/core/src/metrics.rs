//! Semantic error, communication gain, weighted error, constraint checks
//! and cumulative averages.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scene::SemanticVector;

/// Normalized Euclidean distance `‖h(X) − h(Y)‖ / ‖h(X)‖`.
pub fn semantic_error(truth: &SemanticVector, received: &SemanticVector) -> Result<f64> {
    if truth.len() != received.len() {
        return Err(Error::LengthMismatch {
            left: truth.len(),
            right: received.len(),
        });
    }
    let denom = truth.norm();
    if denom == 0.0 {
        return Err(Error::EmptyTruth);
    }
    let diff = truth
        .as_slice()
        .iter()
        .zip(received.as_slice())
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt();
    Ok(diff / denom)
}

/// Fraction of the source size saved: `1 − payload/source`.
///
/// Computed as a single division of exact integers, so the result is the
/// correctly rounded value of the rational gain.
pub fn gain(source_bits: u64, payload_bits: u64) -> Result<f64> {
    if source_bits == 0 {
        return Err(Error::ZeroSource);
    }
    let s = source_bits as f64;
    Ok(if payload_bits <= source_bits {
        (source_bits - payload_bits) as f64 / s
    } else {
        -((payload_bits - source_bits) as f64 / s)
    })
}

/// `(1 − G) · E`.
pub fn weighted_error(gain: f64, error: f64) -> f64 {
    (1.0 - gain) * error
}

/// Running mean: `out[k] = mean(series[..=k])`.
pub fn cumulative_average(series: &[f64]) -> Result<Vec<f64>> {
    if series.is_empty() {
        return Err(Error::EmptySeries);
    }
    let mut acc = RunningMean::default();
    Ok(series.iter().map(|x| acc.push(*x)).collect())
}

/// Incremental mean, `m += (x - m) / n`. A constant input stays exactly
/// constant.
#[derive(Debug, Clone, Copy, Default)]
pub struct RunningMean {
    mean: f64,
    n: u64,
}

impl RunningMean {
    pub fn push(&mut self, x: f64) -> f64 {
        self.n += 1;
        self.mean += (x - self.mean) / self.n as f64;
        self.mean
    }

    pub fn get(&self) -> Option<f64> {
        (self.n > 0).then_some(self.mean)
    }
}

/// Arithmetic mean summed in slice order; `None` for an empty slice.
pub fn mean(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        None
    } else {
        Some(values.iter().sum::<f64>() / values.len() as f64)
    }
}

/// How `mean_G` and `mean_E` are compared with their thresholds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ConstraintMode {
    /// `mean_G ≥ g0` and `mean_E ≤ eps0`.
    #[default]
    Inclusive,
    /// `mean_G > g0` and `mean_E < eps0`.
    Strict,
}

/// Minimum mean gain and maximum mean error a configuration must meet.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstraintSpec {
    pub min_gain: f64,
    pub max_error: f64,
    #[serde(default)]
    pub mode: ConstraintMode,
}

impl ConstraintSpec {
    pub fn new(min_gain: f64, max_error: f64) -> Result<Self> {
        let spec = Self {
            min_gain,
            max_error,
            mode: ConstraintMode::Inclusive,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn strict(self) -> Self {
        Self {
            mode: ConstraintMode::Strict,
            ..self
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.min_gain) {
            return Err(Error::param(
                "g0",
                format!("{} is outside [0, 1)", self.min_gain),
            ));
        }
        if !(self.max_error.is_finite() && self.max_error > 0.0) {
            return Err(Error::param(
                "eps0",
                format!("{} must be positive", self.max_error),
            ));
        }
        Ok(())
    }

    pub fn check(&self, mean_gain: f64, mean_error: f64) -> Verdict {
        check_constraints(mean_gain, mean_error, self)
    }

    /// Signed shortfalls `(g0 − mean_G, mean_E − eps0)`, clamped at 0.
    pub fn violation(&self, mean_gain: f64, mean_error: f64) -> f64 {
        (self.min_gain - mean_gain).max(0.0) + (mean_error - self.max_error).max(0.0)
    }
}

/// Gain threshold equivalent to a per-image bit budget on a source of
/// `source_bits`: `1 − budget/source`.
pub fn gain_threshold_for_budget(budget_bits: u64, source_bits: u64) -> Result<f64> {
    gain(source_bits, budget_bits)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Feasible,
    GainViolated,
    ErrorViolated,
    BothViolated,
}

impl Verdict {
    pub fn is_feasible(self) -> bool {
        self == Verdict::Feasible
    }
}

pub fn check_constraints(mean_gain: f64, mean_error: f64, spec: &ConstraintSpec) -> Verdict {
    let (gain_ok, error_ok) = match spec.mode {
        ConstraintMode::Inclusive => (mean_gain >= spec.min_gain, mean_error <= spec.max_error),
        ConstraintMode::Strict => (mean_gain > spec.min_gain, mean_error < spec.max_error),
    };
    match (gain_ok, error_ok) {
        (true, true) => Verdict::Feasible,
        (false, true) => Verdict::GainViolated,
        (true, false) => Verdict::ErrorViolated,
        (false, false) => Verdict::BothViolated,
    }
}

/// Per-image outcome.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricRecord {
    pub image_id: String,
    pub codec: String,
    pub source_bits: u64,
    pub payload_bits: u64,
    pub gain: f64,
    /// `None` when the ground truth is empty and the error is undefined.
    pub error: Option<f64>,
    pub weighted_error: Option<f64>,
    pub delivered: bool,
    pub budget_violated: bool,
    pub latency_s: f64,
}

impl MetricRecord {
    pub fn empty_truth(&self) -> bool {
        self.error.is_none()
    }
}

//! Scalar metrics for comparing learned behavior against demonstrations
//! and baselines.

use thiserror::Error;

use crate::discovery::levenshtein;
use crate::scalar::Scalar;
use crate::ActionId;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MetricError {
    #[error("alignment needs a non-empty demonstration")]
    EmptyDemonstration,
}

/// `1 - D(demo, agent) / |demo|`, where `agent` is cut or padded to the
/// demonstration length before the edit distance `D` is taken. Padding uses
/// a symbol outside every action alphabet, so each padded slot costs one
/// edit.
pub fn alignment_score<S: Scalar>(demo: &[ActionId], agent: &[ActionId]) -> Result<S, MetricError> {
    if demo.is_empty() {
        return Err(MetricError::EmptyDemonstration);
    }
    let fitted: Vec<Option<ActionId>> = (0..demo.len()).map(|i| agent.get(i).copied()).collect();
    let demo: Vec<Option<ActionId>> = demo.iter().copied().map(Some).collect();
    let d = levenshtein(&demo, &fitted);
    Ok(S::one() - S::from_count(d) / S::from_count(demo.len()))
}

/// `(rapl - base) / |base|` as a percentage; `None` when the baseline is 0.
pub fn relative_performance<S: Scalar>(rapl: S, base: S) -> Option<S> {
    if base == S::zero() {
        return None;
    }
    Some((rapl - base) / base.abs() * S::lit(100.0))
}

/// Mean and standard error of the mean (sample standard deviation over
/// `sqrt(n)`; zero for a single value).
pub fn mean_stderr(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

pub fn median(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    let mut v = xs.to_vec();
    v.sort_by(|a, b| a.total_cmp(b));
    let m = v.len() / 2;
    if v.len().is_multiple_of(2) {
        (v[m - 1] + v[m]) / 2.0
    } else {
        v[m]
    }
}

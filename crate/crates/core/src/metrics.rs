//! Regression metrics: coefficient of determination, RMSE and MAE.

use serde::{Deserialize, Serialize, Serializer};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricsError {
    #[error("length mismatch: {truth} observed vs {predicted} predicted")]
    LengthMismatch { truth: usize, predicted: usize },
    #[error("cannot evaluate an empty vector")]
    Empty,
    #[error("observed values are constant; R^2 is undefined (rmse {}, mae {})", .partial.rmse, .partial.mae)]
    ConstantTarget { partial: PartialReport },
}

/// RMSE and MAE without R², returned when R² is undefined.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PartialReport {
    pub rmse: f64,
    pub mae: f64,
    pub n: usize,
}

fn round4<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_f64((v * 1e4).round() / 1e4)
}

/// The three evaluation metrics over `n` samples.
///
/// Serialized values are rounded to four decimals; the in-memory fields keep
/// full precision.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    #[serde(serialize_with = "round4")]
    pub r2: f64,
    #[serde(serialize_with = "round4")]
    pub rmse: f64,
    #[serde(serialize_with = "round4")]
    pub mae: f64,
    pub n: usize,
}

pub fn evaluate(y_true: &[f64], y_pred: &[f64]) -> Result<EvalReport, MetricsError> {
    if y_true.len() != y_pred.len() {
        return Err(MetricsError::LengthMismatch {
            truth: y_true.len(),
            predicted: y_pred.len(),
        });
    }
    if y_true.is_empty() {
        return Err(MetricsError::Empty);
    }
    let m = y_true.len() as f64;
    let mut sse = 0.0;
    let mut sae = 0.0;
    for (t, p) in y_true.iter().zip(y_pred) {
        let r = t - p;
        sse += r * r;
        sae += r.abs();
    }
    let rmse = (sse / m).sqrt();
    let mae = sae / m;
    let mean = y_true.iter().sum::<f64>() / m;
    let sst: f64 = y_true.iter().map(|t| (t - mean) * (t - mean)).sum();
    if sst == 0.0 {
        return Err(MetricsError::ConstantTarget {
            partial: PartialReport {
                rmse,
                mae,
                n: y_true.len(),
            },
        });
    }
    Ok(EvalReport {
        r2: 1.0 - sse / sst,
        rmse,
        mae,
        n: y_true.len(),
    })
}

/// Root mean squared error alone; defined for constant targets too.
pub fn rmse(y_true: &[f64], y_pred: &[f64]) -> Result<f64, MetricsError> {
    match evaluate(y_true, y_pred) {
        Ok(r) => Ok(r.rmse),
        Err(MetricsError::ConstantTarget { partial }) => Ok(partial.rmse),
        Err(e) => Err(e),
    }
}

//! Box-bounded search spaces, objectives and optimizer traces shared by the
//! swarm optimizers.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpaceError {
    #[error("search space has no dimensions")]
    Empty,
    #[error("dimension {dim}: bounds ({lower}, {upper}) must be finite with lower < upper")]
    InvalidBounds { dim: usize, lower: f64, upper: f64 },
    #[error("{labels} labels for {dims} dimensions")]
    LabelCount { labels: usize, dims: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchSpace {
    lower: Vec<f64>,
    upper: Vec<f64>,
    labels: Vec<String>,
}

impl SearchSpace {
    pub fn new(bounds: &[(f64, f64)], labels: &[&str]) -> Result<Self, SpaceError> {
        if bounds.is_empty() {
            return Err(SpaceError::Empty);
        }
        if labels.len() != bounds.len() {
            return Err(SpaceError::LabelCount {
                labels: labels.len(),
                dims: bounds.len(),
            });
        }
        for (dim, &(lower, upper)) in bounds.iter().enumerate() {
            if !(lower.is_finite() && upper.is_finite() && lower < upper) {
                return Err(SpaceError::InvalidBounds { dim, lower, upper });
            }
        }
        Ok(Self {
            lower: bounds.iter().map(|b| b.0).collect(),
            upper: bounds.iter().map(|b| b.1).collect(),
            labels: labels.iter().map(|s| s.to_string()).collect(),
        })
    }

    /// The same interval in every dimension, labelled `x0, x1, ...`.
    pub fn uniform(dims: usize, lower: f64, upper: f64) -> Result<Self, SpaceError> {
        let labels: Vec<String> = (0..dims).map(|d| format!("x{d}")).collect();
        let refs: Vec<&str> = labels.iter().map(String::as_str).collect();
        Self::new(&vec![(lower, upper); dims], &refs)
    }

    pub fn dims(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn range(&self, d: usize) -> f64 {
        self.upper[d] - self.lower[d]
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dims()
            && x.iter()
                .zip(self.lower.iter().zip(&self.upper))
                .all(|(v, (lo, hi))| *lo <= *v && *v <= *hi)
    }

    /// Clamps `x[d]` into its interval; returns whether it was moved.
    #[inline]
    pub fn clamp_dim(&self, d: usize, x: &mut f64) -> bool {
        if *x < self.lower[d] {
            *x = self.lower[d];
            true
        } else if *x > self.upper[d] {
            *x = self.upper[d];
            true
        } else {
            false
        }
    }

    pub fn clamp(&self, x: &mut [f64]) {
        for (d, v) in x.iter_mut().enumerate() {
            self.clamp_dim(d, v);
        }
    }
}

/// A function to minimize. Implemented for every `Fn(&[f64]) -> f64 + Sync`.
pub trait Objective: Sync {
    fn evaluate(&self, x: &[f64]) -> f64;
}

impl<F> Objective for F
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    fn evaluate(&self, x: &[f64]) -> f64 {
        self(x)
    }
}

/// Evaluates positions in parallel. Non-finite values come back as `+inf`;
/// the output order matches the input order.
pub(crate) fn evaluate_all<O: Objective + ?Sized>(
    objective: &O,
    positions: &[Vec<f64>],
) -> Vec<f64> {
    positions
        .par_iter()
        .map(|x| sanitize(objective.evaluate(x)))
        .collect()
}

#[inline]
pub(crate) fn sanitize(f: f64) -> f64 {
    if f.is_finite() {
        f
    } else {
        f64::INFINITY
    }
}

/// Best-so-far record for one iteration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub iteration: usize,
    pub best_fitness: f64,
    pub best_position: Vec<f64>,
}

/// Result of a full optimizer run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizeResult {
    pub best_position: Vec<f64>,
    pub best_fitness: f64,
    /// Best fitness after initialization and after each iteration (`T + 1`
    /// entries, non-increasing).
    pub history: Vec<f64>,
    pub trace: Vec<TraceRow>,
    pub evaluations: usize,
}

/// Writes `iteration,<fitness_column>,<labels...>` rows.
pub fn write_trace_csv<W: Write>(
    writer: W,
    fitness_column: &str,
    labels: &[String],
    trace: &[TraceRow],
) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(writer);
    let mut header = vec!["iteration".to_string(), fitness_column.to_string()];
    header.extend(labels.iter().cloned());
    w.write_record(&header)?;
    for row in trace {
        let mut cells = vec![row.iteration.to_string(), row.best_fitness.to_string()];
        cells.extend(row.best_position.iter().map(|v| v.to_string()));
        w.write_record(&cells)?;
    }
    w.flush()?;
    Ok(())
}

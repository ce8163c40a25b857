//! Kernel functions and Gram matrices.
//!
//! Four families are supported:
//!
//! | family     | value                        |
//! |------------|------------------------------|
//! | linear     | `x1·x2`                      |
//! | polynomial | `(x1·x2 + gamma)^degree`     |
//! | rbf        | `exp(-gamma * |x1 - x2|^2)`  |
//! | sigmoid    | `tanh(gamma * x1·x2 + offset)` |
//!
//! Note that the polynomial family uses `gamma` as the additive constant, not
//! as a scale on the inner product.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum KernelError {
    #[error("kernel parameter {name} must be {requirement}, got {value}")]
    InvalidParameter {
        name: &'static str,
        requirement: &'static str,
        value: f64,
    },
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KernelFamily {
    Linear,
    Polynomial,
    Rbf,
    Sigmoid,
}

/// A validated kernel: family plus its parameters.
///
/// Parameters not used by the family are carried along but ignored.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawKernelSpec")]
pub struct KernelSpec {
    family: KernelFamily,
    gamma: f64,
    degree: u32,
    offset: f64,
}

#[derive(Deserialize)]
struct RawKernelSpec {
    family: KernelFamily,
    #[serde(default)]
    gamma: f64,
    #[serde(default)]
    degree: u32,
    #[serde(default)]
    offset: f64,
}

impl TryFrom<RawKernelSpec> for KernelSpec {
    type Error = KernelError;

    fn try_from(raw: RawKernelSpec) -> Result<Self, Self::Error> {
        KernelSpec::new(raw.family, raw.gamma, raw.degree, raw.offset)
    }
}

fn require_positive(name: &'static str, value: f64) -> Result<(), KernelError> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(KernelError::InvalidParameter {
            name,
            requirement: "finite and > 0",
            value,
        })
    }
}

impl KernelSpec {
    pub fn new(
        family: KernelFamily,
        gamma: f64,
        degree: u32,
        offset: f64,
    ) -> Result<Self, KernelError> {
        match family {
            KernelFamily::Linear => {}
            KernelFamily::Polynomial => {
                require_positive("gamma", gamma)?;
                if degree == 0 {
                    return Err(KernelError::InvalidParameter {
                        name: "degree",
                        requirement: "> 0",
                        value: 0.0,
                    });
                }
            }
            KernelFamily::Rbf => require_positive("gamma", gamma)?,
            KernelFamily::Sigmoid => {
                require_positive("gamma", gamma)?;
                require_positive("offset", offset)?;
            }
        }
        Ok(Self {
            family,
            gamma,
            degree,
            offset,
        })
    }

    pub fn linear() -> Self {
        Self {
            family: KernelFamily::Linear,
            gamma: 0.0,
            degree: 0,
            offset: 0.0,
        }
    }

    pub fn polynomial(gamma: f64, degree: u32) -> Result<Self, KernelError> {
        Self::new(KernelFamily::Polynomial, gamma, degree, 0.0)
    }

    pub fn rbf(gamma: f64) -> Result<Self, KernelError> {
        Self::new(KernelFamily::Rbf, gamma, 0, 0.0)
    }

    pub fn sigmoid(gamma: f64, offset: f64) -> Result<Self, KernelError> {
        Self::new(KernelFamily::Sigmoid, gamma, 0, offset)
    }

    pub fn family(&self) -> KernelFamily {
        self.family
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn degree(&self) -> u32 {
        self.degree
    }

    pub fn offset(&self) -> f64 {
        self.offset
    }

    /// Evaluates the kernel without checking dimensions.
    ///
    /// Callers must guarantee `a.len() == b.len()`; extra trailing entries of
    /// the longer slice are ignored.
    #[inline]
    pub fn eval_unchecked(&self, a: &[f64], b: &[f64]) -> f64 {
        match self.family {
            KernelFamily::Linear => dot(a, b),
            KernelFamily::Polynomial => (dot(a, b) + self.gamma).powi(self.degree as i32),
            KernelFamily::Rbf => (-self.gamma * squared_distance(a, b)).exp(),
            KernelFamily::Sigmoid => (self.gamma * dot(a, b) + self.offset).tanh(),
        }
    }

    pub fn eval(&self, a: &[f64], b: &[f64]) -> Result<f64, KernelError> {
        if a.len() != b.len() {
            return Err(KernelError::DimensionMismatch {
                left: a.len(),
                right: b.len(),
            });
        }
        Ok(self.eval_unchecked(a, b))
    }
}

impl Default for KernelSpec {
    fn default() -> Self {
        Self {
            family: KernelFamily::Rbf,
            gamma: 1.0,
            degree: 0,
            offset: 0.0,
        }
    }
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

// Summed directly rather than via |a|^2 + |b|^2 - 2a·b, which cancels badly
// for nearby points.
#[inline]
fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| {
            let d = x - y;
            d * d
        })
        .sum()
}

pub fn kernel_eval(spec: &KernelSpec, x1: &[f64], x2: &[f64]) -> Result<f64, KernelError> {
    spec.eval(x1, x2)
}

/// Dense symmetric Gram matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct GramMatrix {
    n: usize,
    values: Vec<f64>,
}

impl GramMatrix {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.n + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.n..(i + 1) * self.n]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }
}

/// Builds `G[i][j] = K(row_i, row_j)` for the rows of a row-major matrix.
///
/// Each unordered pair is evaluated once and mirrored, so the result is
/// exactly symmetric regardless of how the rows are scheduled.
pub fn gram_matrix(spec: &KernelSpec, x: &crate::dataio::FeatureMatrix) -> GramMatrix {
    let n = x.n_rows();
    let upper: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let xi = x.row(i);
            (i..n).map(|j| spec.eval_unchecked(xi, x.row(j))).collect()
        })
        .collect();
    let mut values = vec![0.0; n * n];
    for (i, row) in upper.into_iter().enumerate() {
        for (offset, v) in row.into_iter().enumerate() {
            let j = i + offset;
            values[i * n + j] = v;
            values[j * n + i] = v;
        }
    }
    GramMatrix { n, values }
}

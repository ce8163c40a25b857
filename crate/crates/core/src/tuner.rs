//! Swarm search over the RBF-SVR hyperparameters `(C, γ)`.
//!
//! A candidate's fitness is the RMSE of an SVR trained with that candidate on
//! an inner training slice and scored on the matching inner validation slice.
//! The inner partition is drawn once per tune run, so every candidate is
//! judged on the same data.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataio::{split_indices, DataError, Dataset};
use crate::gwo::{self, GwoError, GwoParams};
use crate::kernels::KernelSpec;
use crate::metrics;
use crate::pso::{self, PsoError, PsoParams};
use crate::space::{OptimizeResult, SearchSpace, SpaceError, TraceRow};
use crate::svr::{
    self, SvrError, SvrModel, SvrParams, DEFAULT_EPSILON, DEFAULT_MAX_PASSES, DEFAULT_TOL,
};

pub const HYPER_LABELS: [&str; 2] = ["C", "gamma"];

#[derive(Debug, Error)]
pub enum TuneError {
    #[error(transparent)]
    Space(#[from] SpaceError),
    #[error("hyperparameter bounds must be positive and two-dimensional: {0}")]
    Bounds(String),
    #[error("inner validation: {0}")]
    Data(#[from] DataError),
    #[error("invalid validation scheme: {0}")]
    Validation(String),
    #[error(transparent)]
    Pso(#[from] PsoError),
    #[error(transparent)]
    Gwo(#[from] GwoError),
    #[error(transparent)]
    Svr(#[from] SvrError),
    #[error("no candidate produced a finite fitness")]
    AllNonFinite,
}

/// Named hyperparameter boxes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SpacePreset {
    /// `[0.01, 100]` for both C and γ.
    #[default]
    Default,
    /// `[0.01, 50]` for both C and γ.
    #[serde(rename = "table1-gwo")]
    Table1Gwo,
}

impl SpacePreset {
    pub fn bounds(self) -> (f64, f64) {
        match self {
            SpacePreset::Default => (0.01, 100.0),
            SpacePreset::Table1Gwo => (0.01, 50.0),
        }
    }

    pub fn space(self) -> SearchSpace {
        let b = self.bounds();
        hyper_space(b, b).expect("preset bounds are valid")
    }
}

/// A `(C, γ)` search box. Both lower bounds must be strictly positive.
pub fn hyper_space(c: (f64, f64), gamma: (f64, f64)) -> Result<SearchSpace, TuneError> {
    let space = SearchSpace::new(&[c, gamma], &HYPER_LABELS)?;
    check_space(&space)?;
    Ok(space)
}

fn check_space(space: &SearchSpace) -> Result<(), TuneError> {
    if space.dims() != 2 {
        return Err(TuneError::Bounds(format!("{} dimensions", space.dims())));
    }
    // re-validate in case the space came from deserialization
    let bounds: Vec<(f64, f64)> = space
        .lower()
        .iter()
        .copied()
        .zip(space.upper().iter().copied())
        .collect();
    SearchSpace::new(&bounds, &HYPER_LABELS)?;
    if let Some(lo) = space.lower().iter().find(|v| **v <= 0.0) {
        return Err(TuneError::Bounds(format!("lower bound {lo}")));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OptimizerTag {
    Pso,
    Gwo,
}

impl OptimizerTag {
    pub fn as_str(self) -> &'static str {
        match self {
            OptimizerTag::Pso => "pso",
            OptimizerTag::Gwo => "gwo",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OptimizerKind {
    Pso(PsoParams),
    Gwo(GwoParams),
}

impl OptimizerKind {
    pub fn tag(&self) -> OptimizerTag {
        match self {
            OptimizerKind::Pso(_) => OptimizerTag::Pso,
            OptimizerKind::Gwo(_) => OptimizerTag::Gwo,
        }
    }

    pub fn seed(&self) -> u64 {
        match self {
            OptimizerKind::Pso(p) => p.seed,
            OptimizerKind::Gwo(p) => p.seed,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Validation {
    /// One inner split with `ratio` of the rows used for training.
    Holdout { ratio: f64 },
    /// Mean RMSE over `k` folds.
    KFold { k: usize },
}

impl Default for Validation {
    fn default() -> Self {
        Validation::Holdout { ratio: 0.8 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TunerConfig {
    pub space: SearchSpace,
    /// Search `ln C` and `ln γ` instead of `C` and `γ`.
    pub log_space: bool,
    pub epsilon: f64,
    pub tol: f64,
    pub max_passes: u64,
    pub validation: Validation,
    pub inner_seed: u64,
}

impl Default for TunerConfig {
    fn default() -> Self {
        Self {
            space: SpacePreset::Default.space(),
            log_space: false,
            epsilon: DEFAULT_EPSILON,
            tol: DEFAULT_TOL,
            max_passes: DEFAULT_MAX_PASSES,
            validation: Validation::default(),
            inner_seed: 0,
        }
    }
}

impl TunerConfig {
    pub fn validate(&self) -> Result<(), TuneError> {
        check_space(&self.space)?;
        self.svr_params(1.0, 1.0)?;
        match self.validation {
            Validation::Holdout { ratio } if !(ratio > 0.0 && ratio < 1.0) => {
                Err(TuneError::Validation(format!("holdout ratio {ratio}")))
            }
            Validation::KFold { k } if k < 2 => Err(TuneError::Validation(format!("{k} folds"))),
            _ => Ok(()),
        }
    }

    /// SVR parameters for an RBF candidate.
    pub fn svr_params(&self, c: f64, gamma: f64) -> Result<SvrParams, SvrError> {
        let kernel = KernelSpec::rbf(gamma).map_err(|_| SvrError::InvalidParameter {
            name: "gamma",
            value: gamma,
        })?;
        SvrParams::new(c, self.epsilon, kernel)?
            .with_tol(self.tol)?
            .with_max_passes(self.max_passes)
    }

    /// The box the optimizer actually moves in.
    fn search_box(&self) -> SearchSpace {
        if !self.log_space {
            return self.space.clone();
        }
        let b: Vec<(f64, f64)> = (0..2)
            .map(|d| (self.space.lower()[d].ln(), self.space.upper()[d].ln()))
            .collect();
        SearchSpace::new(&b, &HYPER_LABELS).expect("log of a valid positive box")
    }

    /// Maps an optimizer position to `(C, γ)`.
    pub fn decode(&self, position: &[f64]) -> (f64, f64) {
        if !self.log_space {
            return (position[0], position[1]);
        }
        let mut v = [position[0].exp(), position[1].exp()];
        self.space.clamp(&mut v);
        (v[0], v[1])
    }
}

/// Default-parameter SVR used as the untuned baseline: `C = 1`,
/// `γ = 1/n_features`, `ε = 0.1`.
pub fn baseline_params(n_features: usize) -> SvrParams {
    let gamma = 1.0 / n_features.max(1) as f64;
    SvrParams::new(
        1.0,
        DEFAULT_EPSILON,
        KernelSpec::rbf(gamma).expect("positive gamma"),
    )
    .expect("baseline parameters are valid")
}

/// Precomputed inner partitions of one training set.
#[derive(Debug, Clone)]
pub struct FitnessContext<'a> {
    config: &'a TunerConfig,
    folds: Vec<(Dataset, Dataset)>,
}

impl<'a> FitnessContext<'a> {
    pub fn new(train: &Dataset, config: &'a TunerConfig) -> Result<Self, TuneError> {
        config.validate()?;
        let n = train.len();
        let folds = match config.validation {
            Validation::Holdout { ratio } => {
                let (fit, val) = split_indices(n, ratio, config.inner_seed)?;
                vec![(train.select(&fit), train.select(&val))]
            }
            Validation::KFold { k } => {
                if n < k {
                    return Err(TuneError::Validation(format!("{k} folds over {n} rows")));
                }
                let mut idx: Vec<usize> = (0..n).collect();
                idx.shuffle(&mut ChaCha8Rng::seed_from_u64(config.inner_seed));
                (0..k)
                    .map(|f| {
                        let (lo, hi) = (f * n / k, (f + 1) * n / k);
                        let fit: Vec<usize> = idx[..lo].iter().chain(&idx[hi..]).copied().collect();
                        (train.select(&fit), train.select(&idx[lo..hi]))
                    })
                    .collect()
            }
        };
        Ok(Self { config, folds })
    }

    pub fn folds(&self) -> &[(Dataset, Dataset)] {
        &self.folds
    }

    /// Validation RMSE for `(c, gamma)`, averaged over folds. Any training
    /// or prediction failure scores `+inf`.
    pub fn evaluate(&self, c: f64, gamma: f64) -> f64 {
        let Ok(params) = self.config.svr_params(c, gamma) else {
            return f64::INFINITY;
        };
        let mut total = 0.0;
        for (fit, val) in &self.folds {
            let score = svr::train(&fit.x, &fit.y, &params)
                .and_then(|m| m.predict_batch(&val.x))
                .ok()
                .and_then(|pred| metrics::rmse(val.y.as_slice(), pred.as_slice()).ok());
            match score {
                Some(s) if s.is_finite() => total += s,
                _ => {
                    log::debug!("candidate C={c} gamma={gamma} rejected");
                    return f64::INFINITY;
                }
            }
        }
        total / self.folds.len() as f64
    }
}

/// Fitness of one candidate, building the inner partition from scratch.
pub fn fitness(
    c: f64,
    gamma: f64,
    train: &Dataset,
    config: &TunerConfig,
) -> Result<f64, TuneError> {
    Ok(FitnessContext::new(train, config)?.evaluate(c, gamma))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TuneResult {
    pub best_c: f64,
    pub best_gamma: f64,
    pub best_fitness: f64,
    pub history: Vec<f64>,
    pub optimizer: OptimizerTag,
    pub seed: u64,
    pub evaluations: usize,
    /// Best-so-far `(C, γ)` per iteration.
    pub trace: Vec<TraceRow>,
}

pub fn tune(
    train: &Dataset,
    optimizer: &OptimizerKind,
    config: &TunerConfig,
) -> Result<TuneResult, TuneError> {
    if train.is_empty() {
        return Err(TuneError::Data(DataError::TooFewRows {
            found: 0,
            needed: 2,
        }));
    }
    let ctx = FitnessContext::new(train, config)?;
    let objective = |p: &[f64]| {
        let (c, g) = config.decode(p);
        ctx.evaluate(c, g)
    };
    let search = config.search_box();
    let result: OptimizeResult = match optimizer {
        OptimizerKind::Pso(p) => pso::optimize(&objective, &search, p)?,
        OptimizerKind::Gwo(p) => gwo::optimize(&objective, &search, p)?,
    };
    if !result.best_fitness.is_finite() {
        return Err(TuneError::AllNonFinite);
    }
    let (best_c, best_gamma) = config.decode(&result.best_position);
    let trace = result
        .trace
        .into_iter()
        .map(|row| {
            let (c, g) = config.decode(&row.best_position);
            TraceRow {
                best_position: vec![c, g],
                ..row
            }
        })
        .collect();
    log::info!(
        "{} tuned C={best_c:.5} gamma={best_gamma:.5} fitness={:.6}",
        optimizer.tag().as_str(),
        result.best_fitness
    );
    Ok(TuneResult {
        best_c,
        best_gamma,
        best_fitness: result.best_fitness,
        history: result.history,
        optimizer: optimizer.tag(),
        seed: optimizer.seed(),
        evaluations: result.evaluations,
        trace,
    })
}

/// Retrains an RBF SVR on the whole training set with the tuned `(C, γ)`.
pub fn final_fit(
    train: &Dataset,
    best: &TuneResult,
    config: &TunerConfig,
) -> Result<SvrModel, TuneError> {
    let params = config.svr_params(best.best_c, best.best_gamma)?;
    Ok(svr::train(&train.x, &train.y, &params)?.with_seed(best.seed))
}

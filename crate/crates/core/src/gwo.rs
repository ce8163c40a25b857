//! Grey wolf optimization over a box-bounded space.
//!
//! The three best wolves found so far (alpha, beta, delta) steer every
//! wolf. For a leader position `L` and wolf position `X`, per dimension:
//!
//! ```text
//! A = 2a·r1 − a,   C = 2·r2,   D = |C·L − X|,   X_L = L − A·D
//! ```
//!
//! and the new position is the mean of the three leader-guided points,
//! clamped to the box. `a` falls linearly from 2 to 0 over the run.
//!
//! Leaders are retained across iterations: a leader only loses its rank to a
//! strictly better candidate, so the alpha fitness never increases.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::space::{evaluate_all, Objective, OptimizeResult, SearchSpace, SpaceError, TraceRow};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GwoError {
    #[error("invalid GWO parameter {name}: {value}")]
    InvalidParameter { name: &'static str, value: f64 },
    #[error(transparent)]
    Space(#[from] SpaceError),
    #[error("pack has {state} dimensions but the search space has {space}")]
    DimensionMismatch { state: usize, space: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GwoParams {
    pub population: usize,
    pub iterations: usize,
    pub seed: u64,
}

impl Default for GwoParams {
    fn default() -> Self {
        Self {
            population: 150,
            iterations: 50,
            seed: 0,
        }
    }
}

impl GwoParams {
    pub fn validate(&self) -> Result<(), GwoError> {
        if self.population < 3 {
            return Err(GwoError::InvalidParameter {
                name: "population",
                value: self.population as f64,
            });
        }
        if self.iterations < 1 {
            return Err(GwoError::InvalidParameter {
                name: "iterations",
                value: 0.0,
            });
        }
        Ok(())
    }
}

/// `a = 2 − 2t/T`.
pub fn coefficient_a(t: usize, iterations: usize) -> f64 {
    2.0 - 2.0 * t as f64 / iterations as f64
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Leader {
    pub position: Vec<f64>,
    pub fitness: f64,
}

#[derive(Debug, Clone)]
pub struct PackState {
    pub wolves: Vec<Vec<f64>>,
    pub fitness: Vec<f64>,
    pub alpha: Leader,
    pub beta: Leader,
    pub delta: Leader,
    pub iteration: usize,
    pub rng: ChaCha8Rng,
}

impl PackState {
    pub fn leaders(&self) -> [&Leader; 3] {
        [&self.alpha, &self.beta, &self.delta]
    }

    /// Re-ranks leaders from the current leaders plus the current wolves.
    /// The sort is stable with incumbents first, so ties keep incumbents.
    fn rerank(&mut self) {
        let incumbents = [self.alpha.clone(), self.beta.clone(), self.delta.clone()];
        let mut pool: Vec<(f64, &[f64])> = incumbents
            .iter()
            .map(|l| (l.fitness, l.position.as_slice()))
            .chain(
                self.fitness
                    .iter()
                    .copied()
                    .zip(self.wolves.iter().map(Vec::as_slice)),
            )
            .collect();
        pool.sort_by(|a, b| a.0.total_cmp(&b.0));
        let take = |k: usize| Leader {
            fitness: pool[k].0,
            position: pool[k].1.to_vec(),
        };
        let (a, b, d) = (take(0), take(1), take(2));
        self.alpha = a;
        self.beta = b;
        self.delta = d;
    }

    pub fn trace_row(&self) -> TraceRow {
        TraceRow {
            iteration: self.iteration,
            best_fitness: self.alpha.fitness,
            best_position: self.alpha.position.clone(),
        }
    }
}

pub fn init_pack<O: Objective + ?Sized>(
    objective: &O,
    space: &SearchSpace,
    params: &GwoParams,
) -> Result<PackState, GwoError> {
    params.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let wolves: Vec<Vec<f64>> = (0..params.population)
        .map(|_| {
            (0..space.dims())
                .map(|d| {
                    let u: f64 = rng.random();
                    (space.lower()[d] + u * space.range(d)).min(space.upper()[d])
                })
                .collect()
        })
        .collect();
    let fitness = evaluate_all(objective, &wolves);

    let mut order: Vec<usize> = (0..wolves.len()).collect();
    order.sort_by(|&i, &j| fitness[i].total_cmp(&fitness[j]));
    let leader = |k: usize| Leader {
        position: wolves[order[k]].clone(),
        fitness: fitness[order[k]],
    };
    Ok(PackState {
        alpha: leader(0),
        beta: leader(1),
        delta: leader(2),
        wolves,
        fitness,
        iteration: 0,
        rng,
    })
}

/// Mean of three values that is exact when they coincide.
#[inline]
fn mean3(a: f64, b: f64, c: f64) -> f64 {
    a + ((b - a) + (c - a)) / 3.0
}

/// Moves every wolf once, re-evaluates the pack and re-ranks the leaders.
pub fn step<O: Objective + ?Sized>(
    state: &mut PackState,
    objective: &O,
    space: &SearchSpace,
    params: &GwoParams,
) -> Result<(), GwoError> {
    let dims = space.dims();
    if state.alpha.position.len() != dims {
        return Err(GwoError::DimensionMismatch {
            state: state.alpha.position.len(),
            space: dims,
        });
    }
    let a = coefficient_a(state.iteration, params.iterations);
    let leaders = [
        state.alpha.position.clone(),
        state.beta.position.clone(),
        state.delta.position.clone(),
    ];
    let rng = &mut state.rng;
    for wolf in &mut state.wolves {
        let mut guided = vec![[0.0; 3]; dims];
        for (k, leader) in leaders.iter().enumerate() {
            for d in 0..dims {
                let r1: f64 = rng.random();
                let r2: f64 = rng.random();
                let big_a = 2.0 * a * r1 - a;
                let big_c = 2.0 * r2;
                let dist = (big_c * leader[d] - wolf[d]).abs();
                guided[d][k] = leader[d] - big_a * dist;
            }
        }
        for (d, g) in guided.iter().enumerate() {
            let mut next = mean3(g[0], g[1], g[2]);
            space.clamp_dim(d, &mut next);
            wolf[d] = next;
        }
    }
    state.fitness = evaluate_all(objective, &state.wolves);
    state.rerank();
    state.iteration += 1;
    Ok(())
}

pub fn optimize<O: Objective + ?Sized>(
    objective: &O,
    space: &SearchSpace,
    params: &GwoParams,
) -> Result<OptimizeResult, GwoError> {
    let mut state = init_pack(objective, space, params)?;
    let mut history = vec![state.alpha.fitness];
    let mut trace = vec![state.trace_row()];
    while state.iteration < params.iterations {
        step(&mut state, objective, space, params)?;
        history.push(state.alpha.fitness);
        trace.push(state.trace_row());
        log::trace!("gwo t={} alpha={}", state.iteration, state.alpha.fitness);
    }
    Ok(OptimizeResult {
        best_position: state.alpha.position,
        best_fitness: state.alpha.fitness,
        history,
        trace,
        evaluations: params.population * (params.iterations + 1),
    })
}

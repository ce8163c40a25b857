//! Particle swarm optimization over a box-bounded space.
//!
//! Each particle moves by
//!
//! ```text
//! v ← ω·v + c1·r1·(pbest − x) + c2·r2·(gbest − x)
//! x ← x + v
//! ```
//!
//! with fresh `r1, r2 ~ U(0, 1)` per dimension. Velocities are clamped to a
//! fraction of each dimension's range; a position that leaves the box is put
//! back on the boundary and its velocity in that dimension is zeroed.
//!
//! Random numbers are drawn in particle order before any evaluation, and the
//! personal/global bests are updated in one ordered pass afterwards, so runs
//! are reproducible regardless of how evaluations are scheduled.

use rand::distr::Open01;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::space::{evaluate_all, Objective, OptimizeResult, SearchSpace, SpaceError, TraceRow};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PsoError {
    #[error("invalid PSO parameter {name}: {value}")]
    InvalidParameter { name: &'static str, value: f64 },
    #[error(transparent)]
    Space(#[from] SpaceError),
    #[error("swarm has {state} dimensions but the search space has {space}")]
    DimensionMismatch { state: usize, space: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "kebab-case")]
pub enum Inertia {
    Constant {
        weight: f64,
    },
    /// `ω(t) = max − t·(max − min)/T`
    LinearDecay {
        max: f64,
        min: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PsoParams {
    pub population: usize,
    pub iterations: usize,
    pub c1: f64,
    pub c2: f64,
    pub inertia: Inertia,
    pub v_max_fraction: f64,
    pub seed: u64,
}

impl Default for PsoParams {
    fn default() -> Self {
        Self {
            population: 150,
            iterations: 50,
            c1: 1.0,
            c2: 2.0,
            inertia: Inertia::Constant { weight: 0.5 },
            v_max_fraction: 0.2,
            seed: 0,
        }
    }
}

impl PsoParams {
    pub fn validate(&self) -> Result<(), PsoError> {
        let bad = |name, value| Err(PsoError::InvalidParameter { name, value });
        if self.population < 2 {
            return bad("population", self.population as f64);
        }
        if self.iterations < 1 {
            return bad("iterations", 0.0);
        }
        if !(self.v_max_fraction > 0.0 && self.v_max_fraction <= 1.0) {
            return bad("v_max_fraction", self.v_max_fraction);
        }
        for (name, v) in [("c1", self.c1), ("c2", self.c2)] {
            if !v.is_finite() {
                return bad(name, v);
            }
        }
        match self.inertia {
            Inertia::Constant { weight } if !weight.is_finite() => bad("inertia", weight),
            Inertia::LinearDecay { max, min } if !(max.is_finite() && min.is_finite()) => {
                bad("inertia", max)
            }
            _ => Ok(()),
        }
    }
}

/// Inertia weight used for the update that produces iteration `t + 1`.
pub fn inertia(params: &PsoParams, t: usize) -> f64 {
    match params.inertia {
        Inertia::Constant { weight } => weight,
        Inertia::LinearDecay { max, min } => {
            max - t as f64 * (max - min) / params.iterations as f64
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Particle {
    pub position: Vec<f64>,
    pub velocity: Vec<f64>,
    pub pbest: Vec<f64>,
    pub pbest_fitness: f64,
}

#[derive(Debug, Clone)]
pub struct SwarmState {
    pub particles: Vec<Particle>,
    pub gbest: Vec<f64>,
    pub gbest_fitness: f64,
    pub iteration: usize,
    pub rng: ChaCha8Rng,
}

impl SwarmState {
    fn refresh_gbest(&mut self) {
        for p in &self.particles {
            if p.pbest_fitness < self.gbest_fitness {
                self.gbest_fitness = p.pbest_fitness;
                self.gbest.clone_from(&p.pbest);
            }
        }
    }

    pub fn trace_row(&self) -> TraceRow {
        TraceRow {
            iteration: self.iteration,
            best_fitness: self.gbest_fitness,
            best_position: self.gbest.clone(),
        }
    }
}

pub fn init_swarm<O: Objective + ?Sized>(
    objective: &O,
    space: &SearchSpace,
    params: &PsoParams,
) -> Result<SwarmState, PsoError> {
    params.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let dims = space.dims();
    let mut positions = Vec::with_capacity(params.population);
    let mut velocities = Vec::with_capacity(params.population);
    for _ in 0..params.population {
        let mut x = Vec::with_capacity(dims);
        let mut v = Vec::with_capacity(dims);
        for d in 0..dims {
            let u: f64 = rng.random();
            x.push((space.lower()[d] + u * space.range(d)).min(space.upper()[d]));
            let vmax = params.v_max_fraction * space.range(d);
            let w: f64 = rng.random();
            v.push((2.0 * w - 1.0) * vmax);
        }
        positions.push(x);
        velocities.push(v);
    }
    let fitness = evaluate_all(objective, &positions);
    let particles: Vec<Particle> = positions
        .into_iter()
        .zip(velocities)
        .zip(fitness)
        .map(|((position, velocity), f)| Particle {
            pbest: position.clone(),
            position,
            velocity,
            pbest_fitness: f,
        })
        .collect();
    let mut state = SwarmState {
        gbest: particles[0].pbest.clone(),
        gbest_fitness: f64::INFINITY,
        particles,
        iteration: 0,
        rng,
    };
    state.refresh_gbest();
    Ok(state)
}

/// Advances the swarm by one iteration.
pub fn step<O: Objective + ?Sized>(
    state: &mut SwarmState,
    objective: &O,
    space: &SearchSpace,
    params: &PsoParams,
) -> Result<(), PsoError> {
    let dims = space.dims();
    if state.gbest.len() != dims {
        return Err(PsoError::DimensionMismatch {
            state: state.gbest.len(),
            space: dims,
        });
    }
    let w = inertia(params, state.iteration);
    for p in &mut state.particles {
        for d in 0..dims {
            let r1: f64 = state.rng.sample(Open01);
            let r2: f64 = state.rng.sample(Open01);
            let vmax = params.v_max_fraction * space.range(d);
            let x = p.position[d];
            let v = w * p.velocity[d]
                + params.c1 * r1 * (p.pbest[d] - x)
                + params.c2 * r2 * (state.gbest[d] - x);
            let v = v.clamp(-vmax, vmax);
            let mut next = x + v;
            p.velocity[d] = if space.clamp_dim(d, &mut next) {
                0.0
            } else {
                v
            };
            p.position[d] = next;
        }
    }
    let positions: Vec<Vec<f64>> = state.particles.iter().map(|p| p.position.clone()).collect();
    let fitness = evaluate_all(objective, &positions);
    for (p, f) in state.particles.iter_mut().zip(fitness) {
        if f < p.pbest_fitness {
            p.pbest_fitness = f;
            p.pbest.clone_from(&p.position);
        }
    }
    state.refresh_gbest();
    state.iteration += 1;
    Ok(())
}

/// Initializes a swarm and runs `params.iterations` steps.
pub fn optimize<O: Objective + ?Sized>(
    objective: &O,
    space: &SearchSpace,
    params: &PsoParams,
) -> Result<OptimizeResult, PsoError> {
    let mut state = init_swarm(objective, space, params)?;
    let mut history = vec![state.gbest_fitness];
    let mut trace = vec![state.trace_row()];
    for _ in 0..params.iterations {
        step(&mut state, objective, space, params)?;
        history.push(state.gbest_fitness);
        trace.push(state.trace_row());
        log::trace!("pso t={} gbest={}", state.iteration, state.gbest_fitness);
    }
    Ok(OptimizeResult {
        best_position: state.gbest,
        best_fitness: state.gbest_fitness,
        history,
        trace,
        evaluations: params.population * (params.iterations + 1),
    })
}

//! One-call solvers that build the initial solution and run the engine.
//!
//! The initial solution draws from stream 1 of the run seed; the engine uses
//! stream 0, so both are fixed by the single configured seed.

use thiserror::Error;

use crate::driver::{self, DriverAdapter, DriverError, DriverInstance, DriverSchedule};
use crate::engine::{self, EngineConfig, EngineError, EngineRng, RunResult};
use crate::nurse::{self, NurseAdapter, NurseError, NurseInstance, NurseParams, NurseSchedule};

#[derive(Debug, Error)]
pub enum SolveError {
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error("initial solution: {0}")]
    Driver(#[from] DriverError),
    #[error("initial solution: {0}")]
    Nurse(#[from] NurseError),
}

fn initial_rng(seed: u64) -> EngineRng {
    let mut rng = engine::rng_from_seed(seed);
    rng.set_stream(1);
    rng
}

/// Engine configuration with the driver defaults for `seed`.
pub fn driver_config(seed: u64) -> EngineConfig {
    EngineConfig {
        selection_offset: driver::DEFAULT_SELECTION_OFFSET,
        mutation_rate: driver::DEFAULT_MUTATION_RATE,
        stop_no_improve: driver::DEFAULT_STOP_NO_IMPROVE,
        seed,
        ..EngineConfig::default()
    }
}

/// Engine configuration with the nurse defaults for `seed`.
pub fn nurse_config(seed: u64) -> EngineConfig {
    EngineConfig {
        selection_offset: 0.0,
        mutation_rate: nurse::DEFAULT_MUTATION_RATE,
        stop_no_improve: nurse::DEFAULT_STOP_NO_IMPROVE,
        seed,
        ..EngineConfig::default()
    }
}

pub fn solve_driver(
    instance: &DriverInstance,
    k: usize,
    config: &EngineConfig,
) -> Result<RunResult<DriverSchedule>, SolveError> {
    config.validate()?;
    let initial = driver::initial_schedule(instance, k, &mut initial_rng(config.seed))?;
    Ok(engine::run(&DriverAdapter::new(instance, k), initial, config)?)
}

pub fn solve_nurse(
    instance: &NurseInstance,
    params: &NurseParams,
    config: &EngineConfig,
) -> Result<RunResult<NurseSchedule>, SolveError> {
    config.validate()?;
    params.validate()?;
    let initial = nurse::initial_schedule(instance, &mut initial_rng(config.seed))?;
    Ok(engine::run(&NurseAdapter::new(instance, params.clone()), initial, config)?)
}

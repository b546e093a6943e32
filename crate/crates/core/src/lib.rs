//! Evolutionary squeaky wheel optimisation (ESWO) and the plain squeaky wheel
//! baseline, with plugins for driver scheduling (set covering) and nurse
//! scheduling (multiple-choice set covering), exact oracles for small
//! instances, and benchmark aggregation.

pub mod driver;
pub mod engine;
pub mod instances;
pub mod nurse;
pub mod oracle;
pub mod report;
pub mod solve;

pub use engine::{
    ComponentFitness, ComponentId, EngineConfig, EngineError, EngineRng, Mode, ProblemAdapter, RemovalQueue,
    RunResult, TraceRecord,
};

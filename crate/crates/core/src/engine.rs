//! Problem-agnostic squeaky wheel engine.
//!
//! One iteration runs Analysis, Selection, Mutation, Prioritization and
//! Construction over a single mutable solution. In [`Mode::Swo`] every
//! component is removed each iteration and Mutation is skipped, which gives
//! the original construct/analyze/prioritize cycle.
//!
//! All randomness comes from one [`EngineRng`] stream seeded from
//! [`EngineConfig::seed`]. Within an iteration the draws happen in a fixed
//! order: the selection threshold, then one mutation draw per survivor in
//! ascending id order, then whatever the adapter draws during construction.

use std::cmp::Ordering;
use std::fmt;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

/// Run-level random stream: ChaCha8 seeded through `SeedableRng::seed_from_u64`.
pub type EngineRng = ChaCha8Rng;

/// Builds the run-level generator for `seed`.
pub fn rng_from_seed(seed: u64) -> EngineRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Identifies one component of a solution (a shift, or a nurse's assignment).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ComponentId(pub usize);

impl fmt::Display for ComponentId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

/// Score of one component as produced by Analysis, in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComponentFitness {
    pub component: ComponentId,
    pub value: f64,
}

impl ComponentFitness {
    pub fn new(component: ComponentId, value: f64) -> Self {
        Self { component, value }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Mode {
    #[default]
    Eswo,
    Swo,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Mode::Eswo => f.write_str("eswo"),
            Mode::Swo => f.write_str("swo"),
        }
    }
}

impl std::str::FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "eswo" => Ok(Mode::Eswo),
            "swo" => Ok(Mode::Swo),
            other => Err(format!("unknown mode `{other}` (expected eswo or swo)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EngineConfig {
    pub mode: Mode,
    /// Probability that a surviving component is discarded by Mutation.
    pub mutation_rate: f64,
    /// Constant subtracted from the per-iteration random threshold in Selection.
    /// Zero gives the bare random threshold.
    pub selection_offset: f64,
    /// Stop after this many consecutive iterations without a new best.
    pub stop_no_improve: u64,
    pub stop_max_iters: Option<u64>,
    /// Stop as soon as the best objective reaches this value.
    pub stop_on_known_optimum: Option<i64>,
    pub seed: u64,
}

impl Default for EngineConfig {
    fn default() -> Self {
        Self {
            mode: Mode::Eswo,
            mutation_rate: 0.05,
            selection_offset: 0.0,
            stop_no_improve: 1000,
            stop_max_iters: None,
            stop_on_known_optimum: None,
            seed: 0,
        }
    }
}

impl EngineConfig {
    pub fn validate(&self) -> Result<(), EngineError> {
        if !(0.0..=1.0).contains(&self.mutation_rate) {
            return Err(EngineError::InvalidConfig(format!(
                "mutation rate {} outside [0, 1]",
                self.mutation_rate
            )));
        }
        if !(0.0..=1.0).contains(&self.selection_offset) {
            return Err(EngineError::InvalidConfig(format!(
                "selection offset {} outside [0, 1]",
                self.selection_offset
            )));
        }
        if self.stop_no_improve == 0 {
            return Err(EngineError::InvalidConfig(
                "stop_no_improve must be positive".into(),
            ));
        }
        if self.stop_max_iters == Some(0) {
            return Err(EngineError::InvalidConfig(
                "stop_max_iters must be positive when set".into(),
            ));
        }
        Ok(())
    }
}

/// Removed components in reconstruction order.
///
/// Sorted by fitness ascending, ties by component id ascending, no duplicates.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RemovalQueue {
    entries: Vec<ComponentFitness>,
}

impl RemovalQueue {
    pub fn entries(&self) -> &[ComponentFitness] {
        &self.entries
    }

    pub fn ids(&self) -> impl Iterator<Item = ComponentId> + '_ {
        self.entries.iter().map(|e| e.component)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// One row of the objective trace, recorded after Construction.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TraceRecord {
    pub iteration: u64,
    pub current_objective: i64,
    pub best_objective: i64,
    pub removed: usize,
}

#[derive(Debug, Clone)]
pub struct RunResult<S> {
    pub best_objective: i64,
    pub best_solution: S,
    pub iterations_run: u64,
    pub objective_trace: Vec<TraceRecord>,
    pub seed: u64,
    /// Wall-clock seconds.
    pub elapsed: f64,
}

#[derive(Debug, Error)]
pub enum EngineError {
    #[error("invalid engine configuration: {0}")]
    InvalidConfig(String),
    #[error("initial solution is incomplete")]
    IncompleteInitial,
    #[error("construction failed on task {task}: {reason}")]
    ConstructionFailure { task: String, reason: String },
    #[error("solution incomplete after construction in iteration {0}")]
    IncompleteAfterConstruction(u64),
}

/// Operations the engine needs from a problem plugin.
///
/// `analyze` must return exactly one fitness per component currently in the
/// solution. After `construct_one` has succeeded for every pending task of an
/// iteration, `is_complete` must hold.
pub trait ProblemAdapter {
    type Solution: Clone;
    type Task: fmt::Debug;
    type Error: std::error::Error;

    fn analyze(&self, solution: &Self::Solution) -> Vec<ComponentFitness>;

    /// Takes a component out of the solution and releases what it covered.
    fn remove(&self, solution: &mut Self::Solution, component: ComponentId);

    /// Maps the removal queue onto the reconstruction task sequence. Called
    /// after every queued component has been removed.
    fn expand(&self, solution: &Self::Solution, queue: &RemovalQueue) -> Vec<Self::Task>;

    /// Whether a task still needs work; tasks satisfied by an earlier
    /// placement in the same Construction phase are skipped.
    fn is_pending(&self, _solution: &Self::Solution, _task: &Self::Task) -> bool {
        true
    }

    fn construct_one(
        &self,
        solution: &mut Self::Solution,
        task: &Self::Task,
        rng: &mut EngineRng,
    ) -> Result<(), Self::Error>;

    fn objective(&self, solution: &Self::Solution) -> i64;

    fn is_complete(&self, solution: &Self::Solution) -> bool;
}

/// Removes every component whose fitness falls below `threshold`.
pub fn select_with_threshold(fitnesses: &[ComponentFitness], threshold: f64) -> Vec<ComponentId> {
    fitnesses
        .iter()
        .filter(|f| f.value < threshold)
        .map(|f| f.component)
        .collect()
}

/// Draws one uniform `p_s` in `[0, 1)` and removes every component with
/// fitness below `p_s - offset`. Survivors satisfy `fitness >= p_s - offset`.
pub fn select(fitnesses: &[ComponentFitness], offset: f64, rng: &mut EngineRng) -> Vec<ComponentId> {
    let p_s: f64 = rng.gen();
    select_with_threshold(fitnesses, p_s - offset)
}

/// Discards each survivor independently with probability `rate`.
///
/// One draw per survivor, taken in ascending id order.
pub fn mutate(survivors: &[ComponentId], rate: f64, rng: &mut EngineRng) -> Vec<ComponentId> {
    let mut ordered = survivors.to_vec();
    ordered.sort_unstable();
    ordered
        .into_iter()
        .filter(|_| rng.gen::<f64>() < rate)
        .collect()
}

/// Sorts removed components by fitness ascending, ties by id ascending.
///
/// Duplicate ids keep their first occurrence.
pub fn prioritize(removed: &[ComponentFitness]) -> RemovalQueue {
    let mut entries = removed.to_vec();
    entries.sort_by(|a, b| {
        a.value
            .partial_cmp(&b.value)
            .unwrap_or(Ordering::Equal)
            .then(a.component.cmp(&b.component))
    });
    let mut seen = std::collections::HashSet::with_capacity(entries.len());
    entries.retain(|e| seen.insert(e.component));
    RemovalQueue { entries }
}

/// Runs the engine from `initial` until a stopping condition holds.
pub fn run<A: ProblemAdapter>(
    adapter: &A,
    initial: A::Solution,
    config: &EngineConfig,
) -> Result<RunResult<A::Solution>, EngineError> {
    run_observed(adapter, initial, config, |_, _| {})
}

/// Like [`run`], calling `observe` with each trace record and the solution at
/// the end of that iteration.
pub fn run_observed<A, F>(
    adapter: &A,
    initial: A::Solution,
    config: &EngineConfig,
    mut observe: F,
) -> Result<RunResult<A::Solution>, EngineError>
where
    A: ProblemAdapter,
    F: FnMut(&TraceRecord, &A::Solution),
{
    config.validate()?;
    if !adapter.is_complete(&initial) {
        return Err(EngineError::IncompleteInitial);
    }
    let started = Instant::now();
    let mut rng = rng_from_seed(config.seed);

    let mut current = initial;
    let mut best_objective = adapter.objective(&current);
    let mut best_solution = current.clone();
    let mut trace = Vec::new();
    let mut since_improvement = 0u64;
    let mut iteration = 0u64;

    loop {
        iteration += 1;

        let fitnesses = adapter.analyze(&current);
        let selected = match config.mode {
            Mode::Swo => fitnesses.iter().map(|f| f.component).collect(),
            Mode::Eswo => select(&fitnesses, config.selection_offset, &mut rng),
        };
        let mut removed_ids = selected;
        if config.mode == Mode::Eswo {
            removed_ids.sort_unstable();
            let survivors: Vec<ComponentId> = fitnesses
                .iter()
                .map(|f| f.component)
                .filter(|c| removed_ids.binary_search(c).is_err())
                .collect();
            removed_ids.extend(mutate(&survivors, config.mutation_rate, &mut rng));
            removed_ids.sort_unstable();
        }

        let removed: Vec<ComponentFitness> = fitnesses
            .iter()
            .filter(|f| removed_ids.binary_search(&f.component).is_ok())
            .copied()
            .collect();
        let queue = prioritize(&removed);
        for id in queue.ids() {
            adapter.remove(&mut current, id);
        }

        let tasks = adapter.expand(&current, &queue);
        for task in &tasks {
            if !adapter.is_pending(&current, task) {
                continue;
            }
            adapter
                .construct_one(&mut current, task, &mut rng)
                .map_err(|e| EngineError::ConstructionFailure {
                    task: format!("{task:?}"),
                    reason: e.to_string(),
                })?;
        }
        if !adapter.is_complete(&current) {
            return Err(EngineError::IncompleteAfterConstruction(iteration));
        }

        let objective = adapter.objective(&current);
        if objective < best_objective {
            best_objective = objective;
            best_solution = current.clone();
            since_improvement = 0;
        } else {
            since_improvement += 1;
        }

        let record = TraceRecord {
            iteration,
            current_objective: objective,
            best_objective,
            removed: queue.len(),
        };
        trace.push(record);
        observe(&record, &current);

        let hit_optimum = config
            .stop_on_known_optimum
            .is_some_and(|target| best_objective <= target);
        let hit_cap = config.stop_max_iters.is_some_and(|cap| iteration >= cap);
        if hit_optimum || hit_cap || since_improvement >= config.stop_no_improve {
            break;
        }
    }

    Ok(RunResult {
        best_objective,
        best_solution,
        iterations_run: iteration,
        objective_trace: trace,
        seed: config.seed,
        elapsed: started.elapsed().as_secs_f64(),
    })
}

//! Driver scheduling as set covering.
//!
//! A schedule is a set of shifts drawn from a fixed candidate pool; every
//! piece of work must be covered by at least one chosen shift. Shifts are
//! scored by a fuzzy structural coefficient multiplied by an over-cover
//! penalty, and the objective charges each chosen shift its paid minutes plus
//! a fixed 2000 so that fewer shifts always wins first.

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::Rng;
use thiserror::Error;

use crate::engine::{ComponentFitness, ComponentId, EngineRng, ProblemAdapter, RemovalQueue};

/// Per-shift surcharge that makes shift count dominate paid cost.
pub const SHIFT_SURCHARGE: i64 = 2000;

/// Default fuzzy weights for (work time, work/paid ratio, pieces, spells, fractional cover).
pub const DEFAULT_WEIGHTS: [f64; 5] = [0.20, 0.10, 0.10, 0.20, 0.40];

pub const DEFAULT_K: usize = 2;
pub const DEFAULT_SELECTION_OFFSET: f64 = 0.3;
pub const DEFAULT_MUTATION_RATE: f64 = 0.05;
pub const DEFAULT_STOP_NO_IMPROVE: u64 = 1000;

const WEIGHT_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DriverError {
    #[error("invalid membership bounds: max {max} must exceed min {min}")]
    InvalidBounds { max: f64, min: f64 },
    #[error("spell count {0} outside 1..=4")]
    SpellsOutOfRange(u32),
    #[error("shift {0} is not in the schedule")]
    NotInSchedule(u32),
    #[error("schedule leaves {0} piece(s) uncovered")]
    IncompleteSchedule(usize),
    #[error("piece {0} has no shift in its coverage list")]
    UncoverablePiece(u32),
    #[error("k must be at least 1")]
    InvalidK,
    #[error("{0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WorkPiece {
    pub id: u32,
    pub work_minutes: u32,
    pub vehicle: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Shift {
    pub id: u32,
    /// Indices into the instance's piece list, in chronological order.
    pub pieces: Vec<usize>,
    pub spells: u32,
    pub work_minutes: u32,
    pub paid_minutes: u32,
    /// Value of the shift in a fractional cover, if it appears in one.
    pub lp_fraction: Option<f64>,
}

impl Shift {
    pub fn work_ratio(&self) -> f64 {
        f64::from(self.work_minutes) / f64::from(self.paid_minutes)
    }
}

/// Maximum and minimum of one criterion over the shift pool.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CriterionBounds {
    pub max: f64,
    pub min: f64,
}

impl CriterionBounds {
    fn over(values: impl Iterator<Item = f64>) -> Option<Self> {
        values.fold(None, |acc, v| match acc {
            None => Some(Self { max: v, min: v }),
            Some(b) => Some(Self { max: b.max.max(v), min: b.min.min(v) }),
        })
    }

    pub fn is_degenerate(&self) -> bool {
        self.max <= self.min
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MembershipBounds {
    pub work: CriterionBounds,
    pub ratio: CriterionBounds,
    pub pieces: CriterionBounds,
    /// `None` when no shift carries a fractional value.
    pub lp: Option<CriterionBounds>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DriverInstance {
    pieces: Vec<WorkPiece>,
    shifts: Vec<Shift>,
    weights: [f64; 5],
    effective_weights: [f64; 5],
    bounds: MembershipBounds,
    coverage_lists: Vec<Vec<usize>>,
    structural: Vec<f64>,
}

impl DriverInstance {
    /// Validates the pool and precomputes bounds, coverage lists and the
    /// structural coefficient of every shift.
    pub fn new(pieces: Vec<WorkPiece>, shifts: Vec<Shift>, weights: [f64; 5]) -> Result<Self, DriverError> {
        validate_weights(&weights)?;
        for p in &pieces {
            if p.work_minutes == 0 {
                return Err(DriverError::Invalid(format!("piece {} has zero work minutes", p.id)));
            }
        }
        check_unique(pieces.iter().map(|p| p.id), "piece")?;
        check_unique(shifts.iter().map(|s| s.id), "shift")?;
        let mut coverage_lists = vec![Vec::new(); pieces.len()];
        for (idx, s) in shifts.iter().enumerate() {
            validate_shift(s, pieces.len())?;
            for &p in &s.pieces {
                coverage_lists[p].push(idx);
            }
        }
        if let Some(p) = coverage_lists.iter().position(Vec::is_empty) {
            return Err(DriverError::Invalid(format!(
                "piece {} is not covered by any shift",
                pieces[p].id
            )));
        }

        let bounds = if shifts.is_empty() {
            let zero = CriterionBounds { max: 0.0, min: 0.0 };
            MembershipBounds { work: zero, ratio: zero, pieces: zero, lp: None }
        } else {
            MembershipBounds {
                work: CriterionBounds::over(shifts.iter().map(|s| f64::from(s.work_minutes))).unwrap(),
                ratio: CriterionBounds::over(shifts.iter().map(Shift::work_ratio)).unwrap(),
                pieces: CriterionBounds::over(shifts.iter().map(|s| s.pieces.len() as f64)).unwrap(),
                lp: CriterionBounds::over(shifts.iter().filter_map(|s| s.lp_fraction)),
            }
        };
        let effective_weights = effective_weights(&weights, bounds.lp.is_some());

        let mut instance = Self {
            pieces,
            shifts,
            weights,
            effective_weights,
            bounds,
            coverage_lists,
            structural: Vec::new(),
        };
        instance.structural = (0..instance.shifts.len())
            .map(|i| structural_coefficient(&instance.shifts[i], &instance))
            .collect::<Result<_, _>>()?;
        Ok(instance)
    }

    pub fn pieces(&self) -> &[WorkPiece] {
        &self.pieces
    }

    pub fn shifts(&self) -> &[Shift] {
        &self.shifts
    }

    /// Weights as given.
    pub fn weights(&self) -> &[f64; 5] {
        &self.weights
    }

    /// Weights actually applied: when no shift has a fractional value the
    /// fifth weight is spread proportionally over the other four.
    pub fn effective_weights(&self) -> &[f64; 5] {
        &self.effective_weights
    }

    pub fn bounds(&self) -> &MembershipBounds {
        &self.bounds
    }

    /// Shifts able to cover `piece`, in pool order.
    pub fn coverage_list(&self, piece: usize) -> &[usize] {
        &self.coverage_lists[piece]
    }

    /// Cached structural coefficient of the shift at pool index `shift`.
    pub fn structural(&self, shift: usize) -> f64 {
        self.structural[shift]
    }

    pub fn shift_index(&self, id: u32) -> Option<usize> {
        self.shifts.iter().position(|s| s.id == id)
    }

    /// Same pool with different fuzzy weights.
    pub fn with_weights(&self, weights: [f64; 5]) -> Result<Self, DriverError> {
        Self::new(self.pieces.clone(), self.shifts.clone(), weights)
    }
}

fn validate_weights(weights: &[f64; 5]) -> Result<(), DriverError> {
    if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
        return Err(DriverError::Invalid(format!("fuzzy weights must be non-negative, got {weights:?}")));
    }
    let sum: f64 = weights.iter().sum();
    if (sum - 1.0).abs() > WEIGHT_TOLERANCE {
        return Err(DriverError::Invalid(format!("fuzzy weights must sum to 1, got {sum}")));
    }
    Ok(())
}

fn validate_shift(s: &Shift, piece_count: usize) -> Result<(), DriverError> {
    let bad = |msg: String| Err(DriverError::Invalid(format!("shift {}: {msg}", s.id)));
    if s.pieces.is_empty() {
        return bad("no pieces".into());
    }
    if let Some(&p) = s.pieces.iter().find(|&&p| p >= piece_count) {
        return bad(format!("piece index {p} out of range"));
    }
    let distinct: BTreeSet<_> = s.pieces.iter().collect();
    if distinct.len() != s.pieces.len() {
        return bad("repeats a piece".into());
    }
    if !(1..=4).contains(&s.spells) {
        return bad(format!("spell count {} outside 1..=4", s.spells));
    }
    if s.work_minutes == 0 || s.work_minutes > s.paid_minutes {
        return bad(format!(
            "work minutes {} must be positive and at most paid minutes {}",
            s.work_minutes, s.paid_minutes
        ));
    }
    if let Some(f) = s.lp_fraction {
        if !(0.0..=1.0).contains(&f) {
            return bad(format!("fractional value {f} outside [0, 1]"));
        }
    }
    Ok(())
}

fn check_unique(ids: impl Iterator<Item = u32>, what: &str) -> Result<(), DriverError> {
    let mut seen = BTreeSet::new();
    for id in ids {
        if !seen.insert(id) {
            return Err(DriverError::Invalid(format!("duplicate {what} id {id}")));
        }
    }
    Ok(())
}

fn effective_weights(weights: &[f64; 5], has_lp: bool) -> [f64; 5] {
    if has_lp {
        return *weights;
    }
    let rest: f64 = weights[..4].iter().sum();
    if rest <= 0.0 {
        return [0.25, 0.25, 0.25, 0.25, 0.0];
    }
    [weights[0] / rest, weights[1] / rest, weights[2] / rest, weights[3] / rest, 0.0]
}

/// S-shaped membership rising from 0 at `min` to 1 at `max`.
///
/// `value` is clamped into `[min, max]` first.
pub fn membership_s_curve(value: f64, max: f64, min: f64) -> Result<f64, DriverError> {
    if !(max > min) {
        return Err(DriverError::InvalidBounds { max, min });
    }
    let v = value.clamp(min, max);
    let span = max - min;
    let mid = (max + min) / 2.0;
    Ok(if v < mid {
        2.0 * ((v - min) / span).powi(2)
    } else {
        1.0 - 2.0 * ((v - max) / span).powi(2)
    })
}

/// Two spells are best, three acceptable, one or four worthless.
pub fn membership_spells(spells: u32) -> Result<f64, DriverError> {
    match spells {
        1 | 4 => Ok(0.0),
        2 => Ok(1.0),
        3 => Ok(0.5),
        other => Err(DriverError::SpellsOutOfRange(other)),
    }
}

/// Gaussian membership of the fractional-cover value: 1 at `max`, 0.01 at
/// `min`, 0 for shifts outside the fractional cover.
pub fn membership_lp(value: Option<f64>, max: f64, min: f64) -> Result<f64, DriverError> {
    if !(max > min) {
        return Err(DriverError::InvalidBounds { max, min });
    }
    Ok(match value {
        None => 0.0,
        Some(v) => {
            let v = v.clamp(min, max);
            ((0.01f64).ln() / (max - min).powi(2) * (v - max).powi(2)).exp()
        }
    })
}

fn s_curve_or_flat(value: f64, bounds: CriterionBounds) -> Result<f64, DriverError> {
    if bounds.is_degenerate() {
        Ok(1.0)
    } else {
        membership_s_curve(value, bounds.max, bounds.min)
    }
}

/// The five criterion memberships of `shift` under the instance's bounds.
pub fn memberships(shift: &Shift, instance: &DriverInstance) -> Result<[f64; 5], DriverError> {
    let b = &instance.bounds;
    let lp = match (b.lp, shift.lp_fraction) {
        (None, _) | (_, None) => 0.0,
        (Some(bounds), Some(_)) if bounds.is_degenerate() => 1.0,
        (Some(bounds), value) => membership_lp(value, bounds.max, bounds.min)?,
    };
    Ok([
        s_curve_or_flat(f64::from(shift.work_minutes), b.work)?,
        s_curve_or_flat(shift.work_ratio(), b.ratio)?,
        s_curve_or_flat(shift.pieces.len() as f64, b.pieces)?,
        membership_spells(shift.spells)?,
        lp,
    ])
}

/// Weighted sum of memberships.
pub fn aggregate(weights: &[f64; 5], memberships: &[f64; 5]) -> f64 {
    weights.iter().zip(memberships).map(|(w, m)| w * m).sum()
}

pub fn structural_coefficient(shift: &Shift, instance: &DriverInstance) -> Result<f64, DriverError> {
    let mu = memberships(shift, instance)?;
    Ok(aggregate(&instance.effective_weights, &mu).clamp(0.0, 1.0))
}

/// Chosen shifts plus how many of them cover each piece.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DriverSchedule {
    chosen: BTreeSet<usize>,
    cover_count: Vec<u32>,
}

impl DriverSchedule {
    pub fn empty(instance: &DriverInstance) -> Self {
        Self { chosen: BTreeSet::new(), cover_count: vec![0; instance.pieces.len()] }
    }

    pub fn from_shifts(instance: &DriverInstance, shifts: impl IntoIterator<Item = usize>) -> Self {
        let mut s = Self::empty(instance);
        for shift in shifts {
            s.add(shift, instance);
        }
        s
    }

    /// Pool indices of the chosen shifts, ascending.
    pub fn chosen(&self) -> &BTreeSet<usize> {
        &self.chosen
    }

    pub fn cover_count(&self) -> &[u32] {
        &self.cover_count
    }

    pub fn contains(&self, shift: usize) -> bool {
        self.chosen.contains(&shift)
    }

    /// Returns false if the shift was already chosen.
    pub fn add(&mut self, shift: usize, instance: &DriverInstance) -> bool {
        if !self.chosen.insert(shift) {
            return false;
        }
        for &p in &instance.shifts[shift].pieces {
            self.cover_count[p] += 1;
        }
        true
    }

    /// Returns false if the shift was not chosen.
    pub fn remove(&mut self, shift: usize, instance: &DriverInstance) -> bool {
        if !self.chosen.remove(&shift) {
            return false;
        }
        for &p in &instance.shifts[shift].pieces {
            self.cover_count[p] -= 1;
        }
        true
    }

    pub fn uncovered(&self) -> usize {
        self.cover_count.iter().filter(|&&c| c == 0).count()
    }

    pub fn is_complete(&self) -> bool {
        self.cover_count.iter().all(|&c| c > 0)
    }

    /// External ids of the chosen shifts, ascending by pool index.
    pub fn shift_ids(&self, instance: &DriverInstance) -> Vec<u32> {
        self.chosen.iter().map(|&s| instance.shifts[s].id).collect()
    }
}

/// Share of the shift's work time that no other chosen shift covers.
fn exclusive_work_share(shift: usize, schedule: &DriverSchedule, instance: &DriverInstance) -> f64 {
    let own = u32::from(schedule.contains(shift));
    let (mut exclusive, mut total) = (0u64, 0u64);
    for &p in &instance.shifts[shift].pieces {
        let beta = u64::from(instance.pieces[p].work_minutes);
        total += beta;
        if schedule.cover_count[p] - own == 0 {
            exclusive += beta;
        }
    }
    exclusive as f64 / total as f64
}

pub fn over_cover_penalty(
    shift: usize,
    schedule: &DriverSchedule,
    instance: &DriverInstance,
) -> Result<f64, DriverError> {
    if !schedule.contains(shift) {
        return Err(DriverError::NotInSchedule(instance.shifts[shift].id));
    }
    Ok(exclusive_work_share(shift, schedule, instance))
}

pub fn shift_fitness(
    shift: usize,
    schedule: &DriverSchedule,
    instance: &DriverInstance,
) -> Result<f64, DriverError> {
    Ok(instance.structural(shift) * over_cover_penalty(shift, schedule, instance)?)
}

/// Fitness of a shift that is not (yet) in the schedule, measured against
/// the current partial schedule.
pub fn candidate_fitness(shift: usize, schedule: &DriverSchedule, instance: &DriverInstance) -> f64 {
    instance.structural(shift) * exclusive_work_share(shift, schedule, instance)
}

/// Paid minutes plus the per-shift surcharge, summed over chosen shifts.
pub fn driver_objective(schedule: &DriverSchedule, instance: &DriverInstance) -> Result<i64, DriverError> {
    if !schedule.is_complete() {
        return Err(DriverError::IncompleteSchedule(schedule.uncovered()));
    }
    Ok(schedule_cost(schedule, instance))
}

fn schedule_cost(schedule: &DriverSchedule, instance: &DriverInstance) -> i64 {
    schedule
        .chosen
        .iter()
        .map(|&s| i64::from(instance.shifts[s].paid_minutes) + SHIFT_SURCHARGE)
        .sum()
}

/// Uncovered pieces in the order the removed shifts list them, each once.
pub fn expand_to_piece_sequence(
    queue: &RemovalQueue,
    schedule: &DriverSchedule,
    instance: &DriverInstance,
) -> Vec<usize> {
    let mut emitted = vec![false; instance.pieces.len()];
    let mut out = Vec::new();
    for id in queue.ids() {
        for &p in &instance.shifts[id.0].pieces {
            if schedule.cover_count[p] == 0 && !emitted[p] {
                emitted[p] = true;
                out.push(p);
            }
        }
    }
    out
}

/// Covers `piece` with one shift picked uniformly among the `k` best-scoring
/// shifts of its coverage list. Returns the pool index of the added shift.
pub fn construct_one(
    schedule: &mut DriverSchedule,
    piece: usize,
    instance: &DriverInstance,
    k: usize,
    rng: &mut EngineRng,
) -> Result<usize, DriverError> {
    if k == 0 {
        return Err(DriverError::InvalidK);
    }
    let list = &instance.coverage_lists[piece];
    if list.is_empty() {
        return Err(DriverError::UncoverablePiece(instance.pieces[piece].id));
    }
    let mut scored: Vec<(f64, usize)> = list
        .iter()
        .filter(|&&s| !schedule.contains(s))
        .map(|&s| (candidate_fitness(s, schedule, instance), s))
        .collect();
    if scored.is_empty() {
        return Err(DriverError::UncoverablePiece(instance.pieces[piece].id));
    }
    scored.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    let top = k.min(scored.len());
    let chosen = scored[rng.gen_range(0..top)].1;
    schedule.add(chosen, instance);
    Ok(chosen)
}

/// Drops shifts whose every piece is covered by another chosen shift,
/// costliest first. The result stays complete.
pub fn remove_redundant(schedule: &DriverSchedule, instance: &DriverInstance) -> DriverSchedule {
    let mut out = schedule.clone();
    let mut order: Vec<usize> = out.chosen.iter().copied().collect();
    order.sort_by(|&a, &b| {
        instance.shifts[b]
            .paid_minutes
            .cmp(&instance.shifts[a].paid_minutes)
            .then(a.cmp(&b))
    });
    // Dropping a shift only lowers cover counts, so a shift found necessary
    // stays necessary and one pass reaches the fixpoint.
    for s in order {
        if instance.shifts[s].pieces.iter().all(|&p| out.cover_count[p] > 1) {
            out.remove(s, instance);
        }
    }
    out
}

/// Greedy schedule built by covering pieces in a uniformly shuffled order.
pub fn initial_schedule(
    instance: &DriverInstance,
    k: usize,
    rng: &mut EngineRng,
) -> Result<DriverSchedule, DriverError> {
    let mut order: Vec<usize> = (0..instance.pieces.len()).collect();
    order.shuffle(rng);
    let mut schedule = DriverSchedule::empty(instance);
    for p in order {
        if schedule.cover_count[p] == 0 {
            construct_one(&mut schedule, p, instance, k, rng)?;
        }
    }
    Ok(schedule)
}

/// Engine plugin for driver scheduling.
#[derive(Debug, Clone, Copy)]
pub struct DriverAdapter<'a> {
    pub instance: &'a DriverInstance,
    pub k: usize,
}

impl<'a> DriverAdapter<'a> {
    pub fn new(instance: &'a DriverInstance, k: usize) -> Self {
        Self { instance, k }
    }
}

impl ProblemAdapter for DriverAdapter<'_> {
    type Solution = DriverSchedule;
    type Task = usize;
    type Error = DriverError;

    fn analyze(&self, solution: &DriverSchedule) -> Vec<ComponentFitness> {
        solution
            .chosen
            .iter()
            .map(|&s| {
                let f = self.instance.structural(s) * exclusive_work_share(s, solution, self.instance);
                ComponentFitness::new(ComponentId(s), f)
            })
            .collect()
    }

    fn remove(&self, solution: &mut DriverSchedule, component: ComponentId) {
        solution.remove(component.0, self.instance);
    }

    fn expand(&self, solution: &DriverSchedule, queue: &RemovalQueue) -> Vec<usize> {
        expand_to_piece_sequence(queue, solution, self.instance)
    }

    fn is_pending(&self, solution: &DriverSchedule, piece: &usize) -> bool {
        solution.cover_count[*piece] == 0
    }

    fn construct_one(
        &self,
        solution: &mut DriverSchedule,
        piece: &usize,
        rng: &mut EngineRng,
    ) -> Result<(), DriverError> {
        construct_one(solution, *piece, self.instance, self.k, rng).map(|_| ())
    }

    fn objective(&self, solution: &DriverSchedule) -> i64 {
        schedule_cost(solution, self.instance)
    }

    fn is_complete(&self, solution: &DriverSchedule) -> bool {
        solution.is_complete()
    }
}

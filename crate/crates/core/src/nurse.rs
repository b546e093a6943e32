//! Nurse scheduling as multiple-choice set covering.
//!
//! Each nurse works exactly one weekly pattern from a personal feasible list.
//! A pattern covers some of the 14 day/night periods; a nurse of grade `g`
//! counts toward the demand of grade `g` and every lower-ranked grade (grade 1
//! is the most senior). The objective is total preference cost plus a weighted
//! penalty for every missing nurse per period and grade.

use rand::Rng;
use thiserror::Error;

use crate::engine::{ComponentFitness, ComponentId, EngineRng, ProblemAdapter, RemovalQueue};

pub const PERIODS: usize = 14;
pub const GRADES: usize = 3;
pub const MAX_PREFERENCE_COST: u32 = 100;

pub const DEFAULT_K_CHEAPEST: usize = 3;
pub const DEFAULT_RULE_PROBS: [f64; 3] = [0.02, 0.18, 0.80];
pub const DEFAULT_COMBINED_WEIGHTS: [f64; 4] = [1.0, 8.0, 2.0, 1.0];
pub const DEFAULT_W_DEMAND: i64 = 200;
pub const DEFAULT_MUTATION_RATE: f64 = 0.05;
pub const DEFAULT_STOP_NO_IMPROVE: u64 = 10_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NurseError {
    #[error("nurse {0} has no feasible pattern")]
    NoFeasiblePattern(u32),
    #[error("schedule leaves {0} nurse(s) unassigned")]
    IncompleteSchedule(usize),
    #[error("{0}")]
    Invalid(String),
}

/// One weekly pattern: a 14-period coverage row and its preference cost.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Pattern {
    pub cover: [bool; PERIODS],
    pub cost: u32,
}

impl Pattern {
    pub fn new(cover: [bool; PERIODS], cost: u32) -> Self {
        Self { cover, cost }
    }

    pub fn periods(&self) -> impl Iterator<Item = usize> + '_ {
        self.cover.iter().enumerate().filter(|(_, &c)| c).map(|(k, _)| k)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Nurse {
    pub id: u32,
    /// 1 is the most senior grade, 3 the most junior.
    pub grade: u8,
    pub patterns: Vec<Pattern>,
}

impl Nurse {
    /// Whether this nurse counts toward the demand of grade index `g` (0-based).
    pub fn qualifies(&self, g: usize) -> bool {
        usize::from(self.grade) <= g + 1
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NurseInstance {
    nurses: Vec<Nurse>,
    /// `demand[k][g]`: nurses of grade `g+1` or better needed in period `k`.
    demand: [[u32; GRADES]; PERIODS],
}

impl NurseInstance {
    pub fn new(nurses: Vec<Nurse>, demand: [[u32; GRADES]; PERIODS]) -> Result<Self, NurseError> {
        let mut seen = std::collections::BTreeSet::new();
        for n in &nurses {
            if !seen.insert(n.id) {
                return Err(NurseError::Invalid(format!("duplicate nurse id {}", n.id)));
            }
            if !(1..=GRADES as u8).contains(&n.grade) {
                return Err(NurseError::Invalid(format!("nurse {}: grade {} outside 1..=3", n.id, n.grade)));
            }
            if n.patterns.is_empty() {
                return Err(NurseError::Invalid(format!(
                    "nurse {} has no feasible pattern; every nurse must work exactly one",
                    n.id
                )));
            }
            if let Some(p) = n.patterns.iter().find(|p| p.cost > MAX_PREFERENCE_COST) {
                return Err(NurseError::Invalid(format!(
                    "nurse {}: preference cost {} outside 0..=100",
                    n.id, p.cost
                )));
            }
        }
        Ok(Self { nurses, demand })
    }

    pub fn nurses(&self) -> &[Nurse] {
        &self.nurses
    }

    pub fn demand(&self) -> &[[u32; GRADES]; PERIODS] {
        &self.demand
    }

    pub fn len(&self) -> usize {
        self.nurses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nurses.is_empty()
    }
}

/// Tunables of the nurse constructor, fitness and objective.
#[derive(Debug, Clone, PartialEq)]
pub struct NurseParams {
    pub k_cheapest: usize,
    /// Probabilities of the k-cheapest, overall-cover and combined rules.
    pub rule_probs: [f64; 3],
    /// `(w_p, w_1, w_2, w_3)` of the combined rule.
    pub combined_weights: [f64; 4],
    pub w_demand: i64,
    /// Weights of the cost and cover terms of the assignment fitness.
    pub fitness_weights: [f64; 2],
}

impl Default for NurseParams {
    fn default() -> Self {
        Self {
            k_cheapest: DEFAULT_K_CHEAPEST,
            rule_probs: DEFAULT_RULE_PROBS,
            combined_weights: DEFAULT_COMBINED_WEIGHTS,
            w_demand: DEFAULT_W_DEMAND,
            fitness_weights: [0.5, 0.5],
        }
    }
}

impl NurseParams {
    pub fn validate(&self) -> Result<(), NurseError> {
        if self.k_cheapest == 0 {
            return Err(NurseError::Invalid("k must be at least 1".into()));
        }
        if self.rule_probs.iter().any(|p| !(0.0..=1.0).contains(p)) {
            return Err(NurseError::Invalid(format!("rule probabilities {:?} outside [0, 1]", self.rule_probs)));
        }
        let sum: f64 = self.rule_probs.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(NurseError::Invalid(format!("rule probabilities must sum to 1, got {sum}")));
        }
        if self.combined_weights.iter().any(|w| *w < 0.0 || !w.is_finite()) {
            return Err(NurseError::Invalid("combined weights must be non-negative".into()));
        }
        let fw = self.fitness_weights;
        if fw.iter().any(|w| *w < 0.0) || (fw[0] + fw[1] - 1.0).abs() > 1e-9 {
            return Err(NurseError::Invalid(format!("fitness weights {fw:?} must be non-negative and sum to 1")));
        }
        if self.w_demand < 0 {
            return Err(NurseError::Invalid("demand penalty weight must be non-negative".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Rule {
    KCheapest,
    OverallCover,
    Combined,
}

/// Pattern assignment per nurse plus qualified coverage per period and grade.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NurseSchedule {
    assignment: Vec<Option<usize>>,
    coverage: [[u32; GRADES]; PERIODS],
}

impl NurseSchedule {
    pub fn empty(instance: &NurseInstance) -> Self {
        Self { assignment: vec![None; instance.len()], coverage: [[0; GRADES]; PERIODS] }
    }

    pub fn from_assignment(instance: &NurseInstance, patterns: &[usize]) -> Self {
        let mut s = Self::empty(instance);
        for (i, &j) in patterns.iter().enumerate() {
            s.assign(i, j, instance);
        }
        s
    }

    pub fn assignment(&self) -> &[Option<usize>] {
        &self.assignment
    }

    pub fn coverage(&self) -> &[[u32; GRADES]; PERIODS] {
        &self.coverage
    }

    /// Replaces any current assignment of `nurse` with `pattern`.
    pub fn assign(&mut self, nurse: usize, pattern: usize, instance: &NurseInstance) {
        self.unassign(nurse, instance);
        self.assignment[nurse] = Some(pattern);
        self.apply(nurse, pattern, instance, true);
    }

    pub fn unassign(&mut self, nurse: usize, instance: &NurseInstance) -> Option<usize> {
        let old = self.assignment[nurse].take()?;
        self.apply(nurse, old, instance, false);
        Some(old)
    }

    fn apply(&mut self, nurse: usize, pattern: usize, instance: &NurseInstance, add: bool) {
        let n = &instance.nurses[nurse];
        for k in n.patterns[pattern].periods() {
            for g in (0..GRADES).filter(|&g| n.qualifies(g)) {
                if add {
                    self.coverage[k][g] += 1;
                } else {
                    self.coverage[k][g] -= 1;
                }
            }
        }
    }

    pub fn unassigned(&self) -> usize {
        self.assignment.iter().filter(|a| a.is_none()).count()
    }

    pub fn is_complete(&self) -> bool {
        self.assignment.iter().all(Option::is_some)
    }

    /// Nurses still missing in period `k` for grade index `g`.
    pub fn residual(&self, instance: &NurseInstance, k: usize, g: usize) -> u32 {
        instance.demand[k][g].saturating_sub(self.coverage[k][g])
    }

    /// Sum of all residual shortages.
    pub fn total_shortage(&self, instance: &NurseInstance) -> u64 {
        (0..PERIODS)
            .flat_map(|k| (0..GRADES).map(move |g| (k, g)))
            .map(|(k, g)| u64::from(self.residual(instance, k, g)))
            .sum()
    }

    pub fn preference_cost(&self, instance: &NurseInstance) -> i64 {
        self.assignment
            .iter()
            .enumerate()
            .filter_map(|(i, a)| a.map(|j| i64::from(instance.nurses[i].patterns[j].cost)))
            .sum()
    }
}

/// Both shortage readings at one coverage state.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ShortageIndicator {
    /// 1 if coverage falls short of demand.
    pub binary: u32,
    /// How many nurses are still missing.
    pub residual: u32,
}

impl ShortageIndicator {
    pub fn at(coverage: u32, demand: u32) -> Self {
        let residual = demand.saturating_sub(coverage);
        Self { binary: u32::from(residual > 0), residual }
    }
}

/// Periods-times-grades this assignment keeps covered that would otherwise
/// fall short.
///
/// Shortage is tested on the coverage with nurse `nurse` working `pattern`
/// taken out.
pub fn cover_contribution(
    instance: &NurseInstance,
    schedule: &NurseSchedule,
    nurse: usize,
    pattern: usize,
) -> u32 {
    let n = &instance.nurses[nurse];
    let own = schedule.assignment[nurse] == Some(pattern);
    let mut total = 0;
    for k in n.patterns[pattern].periods() {
        for g in (0..GRADES).filter(|&g| n.qualifies(g)) {
            let without = schedule.coverage[k][g] - u32::from(own);
            total += ShortageIndicator::at(without, instance.demand[k][g]).binary;
        }
    }
    total
}

/// Normalised fitness of each (cost, cover) pair against the population's
/// ranges: cheaper and higher-covering scores higher. A degenerate range
/// contributes its full weight.
pub fn normalized_fitness(costs: &[u32], covers: &[u32], weights: [f64; 2]) -> Vec<f64> {
    let range = |v: &[u32]| {
        let max = v.iter().copied().max().unwrap_or(0);
        let min = v.iter().copied().min().unwrap_or(0);
        (max, min)
    };
    let (c_max, c_min) = range(costs);
    let (p_max, p_min) = range(covers);
    costs
        .iter()
        .zip(covers)
        .map(|(&c, &p)| {
            let cost_term = if c_max == c_min {
                1.0
            } else {
                f64::from(c_max - c) / f64::from(c_max - c_min)
            };
            let cover_term = if p_max == p_min {
                1.0
            } else {
                f64::from(p - p_min) / f64::from(p_max - p_min)
            };
            (weights[0] * cost_term + weights[1] * cover_term).clamp(0.0, 1.0)
        })
        .collect()
}

/// Fitness of every current assignment, in nurse order.
pub fn assignment_fitnesses(
    instance: &NurseInstance,
    schedule: &NurseSchedule,
    weights: [f64; 2],
) -> Vec<(usize, f64)> {
    let assigned: Vec<(usize, usize)> = schedule
        .assignment
        .iter()
        .enumerate()
        .filter_map(|(i, a)| a.map(|j| (i, j)))
        .collect();
    let costs: Vec<u32> = assigned.iter().map(|&(i, j)| instance.nurses[i].patterns[j].cost).collect();
    let covers: Vec<u32> = assigned
        .iter()
        .map(|&(i, j)| cover_contribution(instance, schedule, i, j))
        .collect();
    let fit = normalized_fitness(&costs, &covers, weights);
    assigned.into_iter().map(|(i, _)| i).zip(fit).collect()
}

/// Fitness of nurse `nurse`'s current assignment, or `None` if unassigned.
pub fn assignment_fitness(
    instance: &NurseInstance,
    schedule: &NurseSchedule,
    nurse: usize,
    weights: [f64; 2],
) -> Option<f64> {
    schedule.assignment[nurse]?;
    assignment_fitnesses(instance, schedule, weights)
        .into_iter()
        .find(|&(i, _)| i == nurse)
        .map(|(_, f)| f)
}

/// Preference cost plus `w_demand` per missing nurse per period and grade.
pub fn nurse_objective(schedule: &NurseSchedule, instance: &NurseInstance, w_demand: i64) -> Result<i64, NurseError> {
    if !schedule.is_complete() {
        return Err(NurseError::IncompleteSchedule(schedule.unassigned()));
    }
    Ok(penalized_cost(schedule, instance, w_demand))
}

fn penalized_cost(schedule: &NurseSchedule, instance: &NurseInstance, w_demand: i64) -> i64 {
    schedule.preference_cost(instance) + w_demand * schedule.total_shortage(instance) as i64
}

fn argmax_first<I: Iterator<Item = f64>>(scores: I) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (j, s) in scores.enumerate() {
        if best.is_none_or(|(_, b)| s > b) {
            best = Some((j, s));
        }
    }
    best.map(|(j, _)| j)
}

/// Uniform pick among the nurse's `k` cheapest patterns (ties by pattern index).
pub fn rule_k_cheapest(
    instance: &NurseInstance,
    nurse: usize,
    k: usize,
    rng: &mut EngineRng,
) -> Result<usize, NurseError> {
    let n = &instance.nurses[nurse];
    if n.patterns.is_empty() {
        return Err(NurseError::NoFeasiblePattern(n.id));
    }
    let mut ranked: Vec<usize> = (0..n.patterns.len()).collect();
    ranked.sort_by_key(|&j| (n.patterns[j].cost, j));
    let top = k.max(1).min(ranked.len());
    Ok(ranked[rng.gen_range(0..top)])
}

/// Pattern covering the most summed residual shortage over its periods.
pub fn rule_overall_cover(instance: &NurseInstance, schedule: &NurseSchedule, nurse: usize) -> Result<usize, NurseError> {
    let n = &instance.nurses[nurse];
    argmax_first(n.patterns.iter().map(|p| {
        p.periods()
            .map(|k| (0..GRADES).map(|g| schedule.residual(instance, k, g)).sum::<u32>())
            .sum::<u32>() as f64
    }))
    .ok_or(NurseError::NoFeasiblePattern(n.id))
}

/// Score of one pattern under the combined rule.
pub fn combined_score(
    instance: &NurseInstance,
    schedule: &NurseSchedule,
    nurse: usize,
    pattern: usize,
    weights: [f64; 4],
) -> f64 {
    let n = &instance.nurses[nurse];
    let p = &n.patterns[pattern];
    let mut score = weights[0] * f64::from(MAX_PREFERENCE_COST - p.cost);
    for g in (0..GRADES).filter(|&g| n.qualifies(g)) {
        let cover: u32 = p.periods().map(|k| schedule.residual(instance, k, g)).sum();
        score += weights[g + 1] * f64::from(cover);
    }
    score
}

/// Highest combined score; the first pattern wins ties.
pub fn rule_combined(
    instance: &NurseInstance,
    schedule: &NurseSchedule,
    nurse: usize,
    weights: [f64; 4],
) -> Result<usize, NurseError> {
    let n = &instance.nurses[nurse];
    argmax_first((0..n.patterns.len()).map(|j| combined_score(instance, schedule, nurse, j, weights)))
        .ok_or(NurseError::NoFeasiblePattern(n.id))
}

/// Picks the rule for one construction step. With a single rule carrying all
/// the probability mass no random number is consumed.
pub fn draw_rule(probs: [f64; 3], rng: &mut EngineRng) -> Rule {
    const RULES: [Rule; 3] = [Rule::KCheapest, Rule::OverallCover, Rule::Combined];
    let positive: Vec<usize> = (0..3).filter(|&r| probs[r] > 0.0).collect();
    if let [only] = positive[..] {
        return RULES[only];
    }
    let u: f64 = rng.gen();
    let mut acc = 0.0;
    for &r in &positive {
        acc += probs[r];
        if u < acc {
            return RULES[r];
        }
    }
    RULES[*positive.last().unwrap_or(&2)]
}

pub fn apply_rule(
    rule: Rule,
    instance: &NurseInstance,
    schedule: &NurseSchedule,
    nurse: usize,
    params: &NurseParams,
    rng: &mut EngineRng,
) -> Result<usize, NurseError> {
    match rule {
        Rule::KCheapest => rule_k_cheapest(instance, nurse, params.k_cheapest, rng),
        Rule::OverallCover => rule_overall_cover(instance, schedule, nurse),
        Rule::Combined => rule_combined(instance, schedule, nurse, params.combined_weights),
    }
}

/// Assigns `nurse` a pattern chosen by a randomly drawn rule.
pub fn construct_one(
    schedule: &mut NurseSchedule,
    nurse: usize,
    instance: &NurseInstance,
    params: &NurseParams,
    rng: &mut EngineRng,
) -> Result<usize, NurseError> {
    let rule = draw_rule(params.rule_probs, rng);
    let pattern = apply_rule(rule, instance, schedule, nurse, params, rng)?;
    schedule.assign(nurse, pattern, instance);
    Ok(pattern)
}

/// Uniformly random pattern for every nurse.
pub fn initial_schedule(instance: &NurseInstance, rng: &mut EngineRng) -> Result<NurseSchedule, NurseError> {
    let mut s = NurseSchedule::empty(instance);
    for (i, n) in instance.nurses.iter().enumerate() {
        if n.patterns.is_empty() {
            return Err(NurseError::NoFeasiblePattern(n.id));
        }
        let j = rng.gen_range(0..n.patterns.len());
        s.assign(i, j, instance);
    }
    Ok(s)
}

/// Engine plugin for nurse scheduling. Components are nurses.
#[derive(Debug, Clone)]
pub struct NurseAdapter<'a> {
    pub instance: &'a NurseInstance,
    pub params: NurseParams,
}

impl<'a> NurseAdapter<'a> {
    pub fn new(instance: &'a NurseInstance, params: NurseParams) -> Self {
        Self { instance, params }
    }
}

impl ProblemAdapter for NurseAdapter<'_> {
    type Solution = NurseSchedule;
    type Task = usize;
    type Error = NurseError;

    fn analyze(&self, solution: &NurseSchedule) -> Vec<ComponentFitness> {
        assignment_fitnesses(self.instance, solution, self.params.fitness_weights)
            .into_iter()
            .map(|(i, f)| ComponentFitness::new(ComponentId(i), f))
            .collect()
    }

    fn remove(&self, solution: &mut NurseSchedule, component: ComponentId) {
        solution.unassign(component.0, self.instance);
    }

    fn expand(&self, _solution: &NurseSchedule, queue: &RemovalQueue) -> Vec<usize> {
        queue.ids().map(|c| c.0).collect()
    }

    fn is_pending(&self, solution: &NurseSchedule, nurse: &usize) -> bool {
        solution.assignment[*nurse].is_none()
    }

    fn construct_one(&self, solution: &mut NurseSchedule, nurse: &usize, rng: &mut EngineRng) -> Result<(), NurseError> {
        construct_one(solution, *nurse, self.instance, &self.params, rng).map(|_| ())
    }

    fn objective(&self, solution: &NurseSchedule) -> i64 {
        penalized_cost(solution, self.instance, self.params.w_demand)
    }

    fn is_complete(&self, solution: &NurseSchedule) -> bool {
        solution.is_complete()
    }
}

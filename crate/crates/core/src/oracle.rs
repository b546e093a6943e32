//! Exact solvers for small instances, used as ground truth.
//!
//! Inputs beyond [`OracleLimits`] are refused instead of approximated.

use std::time::{Duration, Instant};

use thiserror::Error;

use crate::driver::{DriverInstance, DriverSchedule, SHIFT_SURCHARGE};
use crate::nurse::{NurseInstance, NurseSchedule, GRADES, PERIODS};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OracleError {
    #[error("instance too large for the exact solver: {0}")]
    TooLarge(String),
    #[error("instance has no feasible solution")]
    Infeasible,
    #[error("time budget of {0:?} exhausted before optimality was proven")]
    OutOfTime(Duration),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OracleLimits {
    pub max_shifts: usize,
    pub max_nurses: usize,
    pub max_patterns: usize,
    pub time_budget: Option<Duration>,
}

impl Default for OracleLimits {
    fn default() -> Self {
        Self { max_shifts: 25, max_nurses: 6, max_patterns: 12, time_budget: Some(Duration::from_secs(60)) }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DriverOptimum {
    pub schedule: DriverSchedule,
    pub objective: i64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NurseOptimum {
    pub schedule: NurseSchedule,
    pub objective: i64,
}

const MAX_PIECES: usize = 128;

struct Clock {
    started: Instant,
    budget: Option<Duration>,
    ticks: u32,
}

impl Clock {
    fn new(budget: Option<Duration>) -> Self {
        Self { started: Instant::now(), budget, ticks: 0 }
    }

    fn expired(&mut self) -> bool {
        self.ticks = self.ticks.wrapping_add(1);
        if self.ticks % 1024 != 0 {
            return false;
        }
        self.budget.is_some_and(|b| self.started.elapsed() > b)
    }
}

struct DriverSearch<'a> {
    masks: Vec<u128>,
    costs: Vec<i64>,
    lists: &'a [Vec<usize>],
    full: u128,
    best: Option<(i64, Vec<usize>)>,
    clock: Clock,
    timed_out: bool,
}

impl DriverSearch<'_> {
    /// Each uncovered piece pays the cheapest per-piece share of a shift
    /// that could cover it.
    fn lower_bound(&self, covered: u128, excluded: u32) -> f64 {
        let uncovered = self.full & !covered;
        let mut total = 0.0;
        let mut rest = uncovered;
        while rest != 0 {
            let p = rest.trailing_zeros() as usize;
            rest &= rest - 1;
            let share = self.lists[p]
                .iter()
                .filter(|&&s| excluded & (1 << s) == 0)
                .map(|&s| self.costs[s] as f64 / (self.masks[s] & uncovered).count_ones() as f64)
                .fold(f64::INFINITY, f64::min);
            total += share;
        }
        total
    }

    fn dfs(&mut self, covered: u128, excluded: u32, chosen: &mut Vec<usize>, cost: i64) {
        if self.timed_out || self.clock.expired() {
            self.timed_out = true;
            return;
        }
        if covered == self.full {
            let mut sorted = chosen.clone();
            sorted.sort_unstable();
            let better = match &self.best {
                None => true,
                Some((c, s)) => cost < *c || (cost == *c && sorted < *s),
            };
            if better {
                self.best = Some((cost, sorted));
            }
            return;
        }
        let bound = cost as f64 + self.lower_bound(covered, excluded);
        if let Some((best, _)) = &self.best {
            if bound > *best as f64 + 1e-6 {
                return;
            }
        }
        // branch on the uncovered piece with the fewest open candidates
        let uncovered = self.full & !covered;
        let mut pick: Option<(usize, usize)> = None;
        let mut rest = uncovered;
        while rest != 0 {
            let p = rest.trailing_zeros() as usize;
            rest &= rest - 1;
            let open = self.lists[p].iter().filter(|&&s| excluded & (1 << s) == 0).count();
            if open == 0 {
                return;
            }
            if pick.is_none_or(|(_, n)| open < n) {
                pick = Some((p, open));
            }
        }
        let Some((piece, _)) = pick else { return };
        let candidates: Vec<usize> = self.lists[piece]
            .iter()
            .copied()
            .filter(|&s| excluded & (1 << s) == 0)
            .collect();
        let mut ex = excluded;
        for s in candidates {
            chosen.push(s);
            self.dfs(covered | self.masks[s], ex | (1 << s), chosen, cost + self.costs[s]);
            chosen.pop();
            ex |= 1 << s;
        }
    }
}

/// Minimum-objective cover by branch and bound over the shift pool.
///
/// Among equally cheap covers the lexicographically smallest list of pool
/// indices is returned.
pub fn solve_driver_exact(instance: &DriverInstance, limits: &OracleLimits) -> Result<DriverOptimum, OracleError> {
    let m = instance.shifts().len();
    let n = instance.pieces().len();
    if m > limits.max_shifts || m > 32 {
        return Err(OracleError::TooLarge(format!("{m} shifts (limit {})", limits.max_shifts.min(32))));
    }
    if n > MAX_PIECES {
        return Err(OracleError::TooLarge(format!("{n} pieces (limit {MAX_PIECES})")));
    }
    let masks = instance
        .shifts()
        .iter()
        .map(|s| s.pieces.iter().fold(0u128, |acc, &p| acc | (1u128 << p)))
        .collect();
    let costs = instance
        .shifts()
        .iter()
        .map(|s| i64::from(s.paid_minutes) + SHIFT_SURCHARGE)
        .collect();
    let lists: Vec<Vec<usize>> = (0..n).map(|p| instance.coverage_list(p).to_vec()).collect();
    let full = if n == 128 { u128::MAX } else { (1u128 << n) - 1 };
    let mut search = DriverSearch {
        masks,
        costs,
        lists: &lists,
        full,
        best: None,
        clock: Clock::new(limits.time_budget),
        timed_out: false,
    };
    search.dfs(0, 0, &mut Vec::new(), 0);
    if search.timed_out {
        return Err(OracleError::OutOfTime(limits.time_budget.unwrap_or_default()));
    }
    let (objective, chosen) = search.best.ok_or(OracleError::Infeasible)?;
    Ok(DriverOptimum { schedule: DriverSchedule::from_shifts(instance, chosen), objective })
}

struct NurseSearch<'a> {
    instance: &'a NurseInstance,
    w_demand: i64,
    /// `reach[i][k][g]`: nurses at index `i` or later that could still add
    /// coverage to period `k`, grade `g`.
    reach: Vec<[[u32; GRADES]; PERIODS]>,
    /// Cheapest pattern cost summed over nurses at index `i` or later.
    min_cost_suffix: Vec<i64>,
    assignment: Vec<usize>,
    best: Option<(i64, Vec<usize>)>,
    clock: Clock,
    timed_out: bool,
}

impl NurseSearch<'_> {
    fn penalty_floor(&self, schedule: &NurseSchedule, next: usize) -> i64 {
        let demand = self.instance.demand();
        let mut missing = 0i64;
        for k in 0..PERIODS {
            for g in 0..GRADES {
                let reachable = schedule.coverage()[k][g] + self.reach[next][k][g];
                missing += i64::from(demand[k][g].saturating_sub(reachable));
            }
        }
        missing * self.w_demand
    }

    fn dfs(&mut self, schedule: &mut NurseSchedule, next: usize, cost: i64) {
        if self.timed_out || self.clock.expired() {
            self.timed_out = true;
            return;
        }
        let n = self.instance.len();
        if next == n {
            let total = cost + self.w_demand * schedule.total_shortage(self.instance) as i64;
            if self.best.as_ref().is_none_or(|(b, _)| total < *b) {
                self.best = Some((total, self.assignment.clone()));
            }
            return;
        }
        let bound = cost + self.min_cost_suffix[next] + self.penalty_floor(schedule, next);
        if self.best.as_ref().is_some_and(|(b, _)| bound >= *b) {
            return;
        }
        let nurse = &self.instance.nurses()[next];
        for j in 0..nurse.patterns.len() {
            schedule.assign(next, j, self.instance);
            self.assignment.push(j);
            self.dfs(schedule, next + 1, cost + i64::from(nurse.patterns[j].cost));
            self.assignment.pop();
            schedule.unassign(next, self.instance);
        }
    }
}

/// Minimum penalised cost over all rosters, by depth-first search in nurse
/// and pattern order with an admissible bound. The first optimum found is
/// the lexicographically smallest assignment.
pub fn solve_nurse_exact(
    instance: &NurseInstance,
    w_demand: i64,
    limits: &OracleLimits,
) -> Result<NurseOptimum, OracleError> {
    let n = instance.len();
    if n > limits.max_nurses {
        return Err(OracleError::TooLarge(format!("{n} nurses (limit {})", limits.max_nurses)));
    }
    if let Some(nurse) = instance.nurses().iter().find(|x| x.patterns.len() > limits.max_patterns) {
        return Err(OracleError::TooLarge(format!(
            "nurse {} has {} patterns (limit {})",
            nurse.id,
            nurse.patterns.len(),
            limits.max_patterns
        )));
    }
    let mut reach = vec![[[0u32; GRADES]; PERIODS]; n + 1];
    let mut min_cost_suffix = vec![0i64; n + 1];
    for i in (0..n).rev() {
        let nurse = &instance.nurses()[i];
        reach[i] = reach[i + 1];
        for k in 0..PERIODS {
            if nurse.patterns.iter().any(|p| p.cover[k]) {
                for g in (0..GRADES).filter(|&g| nurse.qualifies(g)) {
                    reach[i][k][g] += 1;
                }
            }
        }
        let cheapest = nurse.patterns.iter().map(|p| i64::from(p.cost)).min().unwrap_or(0);
        min_cost_suffix[i] = min_cost_suffix[i + 1] + cheapest;
    }
    let mut search = NurseSearch {
        instance,
        w_demand,
        reach,
        min_cost_suffix,
        assignment: Vec::with_capacity(n),
        best: None,
        clock: Clock::new(limits.time_budget),
        timed_out: false,
    };
    let mut schedule = NurseSchedule::empty(instance);
    search.dfs(&mut schedule, 0, 0);
    if search.timed_out {
        return Err(OracleError::OutOfTime(limits.time_budget.unwrap_or_default()));
    }
    let (objective, assignment) = search.best.ok_or(OracleError::Infeasible)?;
    Ok(NurseOptimum { schedule: NurseSchedule::from_assignment(instance, &assignment), objective })
}

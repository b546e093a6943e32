use eswo::instances::{generate_driver, generate_nurse, DriverGenSpec, NurseGenSpec};
use eswo::nurse::nurse_objective;
use eswo::driver::driver_objective;
use eswo::oracle::{solve_driver_exact, solve_nurse_exact, OracleLimits};
use eswo::driver::DriverInstance;
use eswo::nurse::NurseInstance;

fn driver_by_enumeration(inst: &DriverInstance) -> i64 {
    let m = inst.shifts().len();
    let n = inst.pieces().len();
    let mut best = i64::MAX;
    for mask in 0u32..(1 << m) {
        let mut covered = vec![false; n];
        let mut cost = 0i64;
        for (i, s) in inst.shifts().iter().enumerate() {
            if mask >> i & 1 == 1 {
                cost += i64::from(s.paid_minutes) + 2000;
                for &p in &s.pieces {
                    covered[p] = true;
                }
            }
        }
        if covered.iter().all(|&c| c) {
            best = best.min(cost);
        }
    }
    best
}

fn nurse_cost(inst: &NurseInstance, choice: &[usize], w_demand: i64) -> i64 {
    let mut cover = [[0i64; 3]; 14];
    let mut cost = 0i64;
    for (nurse, &j) in inst.nurses().iter().zip(choice) {
        let pat = &nurse.patterns[j];
        cost += i64::from(pat.cost);
        for k in 0..14 {
            if pat.cover[k] {
                for g in 0..3 {
                    if usize::from(nurse.grade) <= g + 1 {
                        cover[k][g] += 1;
                    }
                }
            }
        }
    }
    let mut short = 0;
    for k in 0..14 {
        for g in 0..3 {
            short += (i64::from(inst.demand()[k][g]) - cover[k][g]).max(0);
        }
    }
    cost + w_demand * short
}

fn nurse_by_enumeration(inst: &NurseInstance, w_demand: i64) -> i64 {
    let sizes: Vec<usize> = inst.nurses().iter().map(|n| n.patterns.len()).collect();
    let mut choice = vec![0usize; sizes.len()];
    let mut best = i64::MAX;
    loop {
        best = best.min(nurse_cost(inst, &choice, w_demand));
        let mut i = 0;
        loop {
            if i == choice.len() {
                return best;
            }
            choice[i] += 1;
            if choice[i] < sizes[i] {
                break;
            }
            choice[i] = 0;
            i += 1;
        }
    }
}

#[test]
fn driver_branch_and_bound_matches_enumeration() {
    for seed in 0..40 {
        let spec = DriverGenSpec { pieces: 5 + seed as usize % 8, shifts: 8 + seed as usize % 9, with_lp: seed % 2 == 0, seed };
        let inst = generate_driver(&spec).unwrap();
        let opt = solve_driver_exact(&inst, &OracleLimits::default()).unwrap();
        assert_eq!(opt.objective, driver_by_enumeration(&inst), "seed {seed}");
        assert_eq!(driver_objective(&opt.schedule, &inst).unwrap(), opt.objective);
    }
}

#[test]
fn nurse_search_matches_enumeration() {
    for seed in 0..25 {
        let spec = NurseGenSpec { nurses: 3 + seed as usize % 3, patterns: 6, tightness: 1.0, feasible: seed % 3 != 0, seed };
        let inst = generate_nurse(&spec).unwrap();
        for w in [0, 200] {
            let opt = solve_nurse_exact(&inst, w, &OracleLimits::default()).unwrap();
            assert_eq!(opt.objective, nurse_by_enumeration(&inst, w), "seed {seed} w {w}");
            assert_eq!(nurse_objective(&opt.schedule, &inst, w).unwrap(), opt.objective);
        }
    }
}

#[test]
fn feasible_nurse_generation_admits_zero_penalty() {
    for seed in 0..20 {
        let spec = NurseGenSpec { nurses: 5, patterns: 8, tightness: 1.0, feasible: true, seed };
        let inst = generate_nurse(&spec).unwrap();
        let opt = solve_nurse_exact(&inst, 200, &OracleLimits::default()).unwrap();
        assert_eq!(opt.schedule.total_shortage(&inst), 0, "seed {seed}");
    }
}

#[test]
fn oversized_inputs_are_refused() {
    let inst = generate_driver(&DriverGenSpec { pieces: 20, shifts: 40, with_lp: false, seed: 1 }).unwrap();
    assert!(solve_driver_exact(&inst, &OracleLimits::default()).is_err());
}

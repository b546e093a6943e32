use proptest::prelude::*;

use eswo::driver::{
    driver_objective, expand_to_piece_sequence, membership_lp, membership_s_curve, shift_fitness, DriverSchedule,
    SHIFT_SURCHARGE,
};
use eswo::engine::{prioritize, rng_from_seed, ComponentFitness, ComponentId};
use eswo::instances::{
    generate, generate_driver, generate_nurse, parse_driver_str, parse_nurse_str, DriverGenSpec, Generated,
    GeneratorSpec, NurseGenSpec,
};
use eswo::nurse::{
    assignment_fitnesses, cover_contribution, initial_schedule, nurse_objective, rule_combined, rule_k_cheapest,
    Nurse, NurseInstance, NurseSchedule, Pattern, DEFAULT_COMBINED_WEIGHTS,
};

fn driver_spec() -> impl Strategy<Value = DriverGenSpec> {
    (1usize..16, 4usize..24, any::<bool>(), any::<u64>())
        .prop_filter("coverable", |(p, s, _, _)| p.div_ceil(2) <= 4 * s)
        .prop_map(|(pieces, shifts, with_lp, seed)| DriverGenSpec { pieces, shifts, with_lp, seed })
}

fn nurse_spec() -> impl Strategy<Value = NurseGenSpec> {
    (1usize..9, 1usize..10, 0.0f64..=1.0, any::<u64>())
        .prop_map(|(nurses, patterns, tightness, seed)| NurseGenSpec { nurses, patterns, tightness, feasible: true, seed })
}

fn random_subset(m: usize, mask: u64) -> Vec<usize> {
    (0..m).filter(|i| mask >> (i % 64) & 1 == 1).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn s_curve_is_monotone_and_bounded(min in -500.0f64..500.0, span in 0.001f64..1000.0, a in 0.0f64..1.0, b in 0.0f64..1.0) {
        let max = min + span;
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        let u = membership_s_curve(min + lo * span, max, min).unwrap();
        let v = membership_s_curve(min + hi * span, max, min).unwrap();
        prop_assert!((0.0..=1.0).contains(&u) && (0.0..=1.0).contains(&v));
        prop_assert!(u <= v + 1e-12);
        let mid = membership_s_curve((max + min) / 2.0, max, min).unwrap();
        prop_assert!((mid - 0.5).abs() < 1e-12);
    }

    #[test]
    fn lp_membership_is_bounded(min in 0.0f64..0.5, span in 0.01f64..0.5, x in 0.0f64..1.0) {
        let v = membership_lp(Some(x), min + span, min).unwrap();
        prop_assert!((0.0..=1.0).contains(&v));
    }

    #[test]
    fn driver_files_round_trip(spec in driver_spec()) {
        if let Ok(Generated::Driver { instance, text }) = generate(&GeneratorSpec::Driver(spec)) {
            prop_assert_eq!(parse_driver_str(&text).unwrap(), instance);
        }
    }

    #[test]
    fn nurse_files_round_trip(spec in nurse_spec()) {
        let Generated::Nurse { instance, text } = generate(&GeneratorSpec::Nurse(spec)).unwrap() else { unreachable!() };
        prop_assert_eq!(parse_nurse_str(&text).unwrap(), instance);
    }

    #[test]
    fn driver_fitness_in_unit_interval(spec in driver_spec(), mask in any::<u64>()) {
        let Ok(inst) = generate_driver(&spec) else { return Ok(()) };
        let s = DriverSchedule::from_shifts(&inst, random_subset(inst.shifts().len(), mask));
        for &i in s.chosen() {
            let f = shift_fitness(i, &s, &inst).unwrap();
            prop_assert!((0.0..=1.0).contains(&f));
        }
    }

    #[test]
    fn objective_is_linear_in_shifts(spec in driver_spec(), mask in any::<u64>()) {
        let Ok(inst) = generate_driver(&spec) else { return Ok(()) };
        let mut s = DriverSchedule::from_shifts(&inst, random_subset(inst.shifts().len(), mask));
        s = DriverSchedule::from_shifts(&inst, s.chosen().iter().copied().chain(0..inst.shifts().len()));
        let full = driver_objective(&s, &inst).unwrap();
        let k = mask as usize % inst.shifts().len();
        let mut without = s.clone();
        without.remove(k, &inst);
        if without.is_complete() {
            let expected = full - i64::from(inst.shifts()[k].paid_minutes) - SHIFT_SURCHARGE;
            prop_assert_eq!(driver_objective(&without, &inst).unwrap(), expected);
        }
    }

    #[test]
    fn expansion_covers_exactly_the_gap(spec in driver_spec(), mask in any::<u64>()) {
        let Ok(inst) = generate_driver(&spec) else { return Ok(()) };
        let all: Vec<usize> = (0..inst.shifts().len()).collect();
        let s = DriverSchedule::from_shifts(&inst, all.iter().copied());
        let removed: Vec<ComponentFitness> = random_subset(all.len(), mask)
            .into_iter()
            .map(|i| ComponentFitness::new(ComponentId(i), shift_fitness(i, &s, &inst).unwrap()))
            .collect();
        let queue = prioritize(&removed);
        let mut partial = s.clone();
        for id in queue.ids() {
            partial.remove(id.0, &inst);
        }
        let seq = expand_to_piece_sequence(&queue, &partial, &inst);
        let mut seen = vec![false; inst.pieces().len()];
        for &p in &seq {
            prop_assert!(!seen[p]);
            seen[p] = true;
            prop_assert_eq!(partial.cover_count()[p], 0);
        }
        for p in 0..inst.pieces().len() {
            prop_assert!(seen[p] || partial.cover_count()[p] > 0);
        }
    }

    #[test]
    fn nurse_fitness_in_unit_interval(spec in nurse_spec(), seed in any::<u64>()) {
        let inst = generate_nurse(&spec).unwrap();
        let mut s = initial_schedule(&inst, &mut rng_from_seed(seed)).unwrap();
        if seed % 2 == 0 && !inst.is_empty() {
            s.unassign(seed as usize % inst.len(), &inst);
        }
        for (i, f) in assignment_fitnesses(&inst, &s, [0.5, 0.5]) {
            prop_assert!((0.0..=1.0).contains(&f), "nurse {} fitness {}", i, f);
            let j = s.assignment()[i].unwrap();
            prop_assert!(cover_contribution(&inst, &s, i, j) <= 42);
        }
    }

    #[test]
    fn zero_demand_weight_is_pure_cost(spec in nurse_spec(), seed in any::<u64>()) {
        let inst = generate_nurse(&spec).unwrap();
        let s = initial_schedule(&inst, &mut rng_from_seed(seed)).unwrap();
        prop_assert_eq!(nurse_objective(&s, &inst, 0).unwrap(), s.preference_cost(&inst));
    }

    #[test]
    fn cheapest_ranking_ignores_cost_scale(costs in prop::collection::vec(0u32..=20, 1..10), scale in 1u32..=5) {
        let build = |f: u32| {
            let patterns = costs.iter().map(|&c| Pattern::new([true; 14], c * f)).collect();
            NurseInstance::new(vec![Nurse { id: 1, grade: 1, patterns }], [[0; 3]; 14]).unwrap()
        };
        let a = rule_k_cheapest(&build(1), 0, 1, &mut rng_from_seed(0)).unwrap();
        let b = rule_k_cheapest(&build(scale), 0, 1, &mut rng_from_seed(0)).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn combined_without_residual_is_cheapest(costs in prop::collection::vec(0u32..=100, 1..10), grade in 1u8..=3) {
        let patterns = costs.iter().enumerate().map(|(j, &c)| {
            let mut cover = [false; 14];
            cover[j % 14] = true;
            Pattern::new(cover, c)
        }).collect();
        let inst = NurseInstance::new(vec![Nurse { id: 1, grade, patterns }], [[0; 3]; 14]).unwrap();
        let s = NurseSchedule::empty(&inst);
        let combined = rule_combined(&inst, &s, 0, DEFAULT_COMBINED_WEIGHTS).unwrap();
        let cheapest = rule_k_cheapest(&inst, 0, 1, &mut rng_from_seed(0)).unwrap();
        prop_assert_eq!(combined, cheapest);
    }
}

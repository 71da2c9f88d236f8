mod common;

use common::{brute_min_max_load, brute_opt, brute_single_helper, random_instance, rng, Shape};
use proptest::prelude::*;
use slmakespan::exact::{equid_assign, oracle_opt, realize_order, single_helper_optimum, SearchBudget};
use slmakespan::gapcc::gapcc_assign;
use slmakespan::model::{compute_makespan, validate_assignment, validate_schedule, Assignment, Slot, TaskKind};
use slmakespan::pipelines::{run_method, Method, RunStatus};
use slmakespan::scheduler::{schedule_algorithm1, schedule_fcfs};

const SMALL: Shape = Shape {
    max_clients: 4,
    max_helpers: 2,
    max_duration: 6,
    unit_demand: false,
    sparsity: 0.2,
};

fn budget() -> SearchBudget {
    SearchBudget::default()
}

#[test]
fn single_helper_search_matches_enumeration() {
    for seed in 0..300 {
        let mut r = rng(seed);
        let inst = random_instance(
            &mut r,
            Shape {
                max_clients: 5,
                max_helpers: 1,
                max_duration: 7,
                unit_demand: true,
                sparsity: 0.0,
            },
        );
        let clients: Vec<usize> = inst.clients().collect();
        assert_eq!(
            single_helper_optimum(&inst, 0, &clients),
            brute_single_helper(&inst, 0, &clients),
            "seed {seed}"
        );
    }
}

#[test]
fn oracle_matches_enumeration() {
    for seed in 0..300 {
        let mut r = rng(1_000 + seed);
        let inst = random_instance(&mut r, SMALL);
        let expected = brute_opt(&inst);
        match oracle_opt(&inst, &budget()) {
            Ok(solved) => {
                assert!(solved.optimal);
                assert_eq!(Some(solved.value.makespan), expected, "seed {seed}");
                let sol = solved.value;
                assert!(validate_schedule(&inst, &sol.assignment, &sol.schedule).is_ok());
                assert_eq!(compute_makespan(&inst, &sol.schedule).unwrap(), sol.makespan);
            }
            Err(_) => assert_eq!(expected, None, "seed {seed}"),
        }
    }
}

#[test]
fn equid_matches_enumeration() {
    for seed in 0..300 {
        let mut r = rng(2_000 + seed);
        let inst = random_instance(
            &mut r,
            Shape {
                max_clients: 7,
                max_helpers: 3,
                max_duration: 8,
                unit_demand: false,
                sparsity: 0.3,
            },
        );
        let expected = brute_min_max_load(&inst);
        match equid_assign(&inst, &budget()) {
            Ok(solved) => {
                assert!(solved.optimal);
                assert_eq!(Some(solved.value.max_load), expected, "seed {seed}");
                assert_eq!(solved.value.assignment.max_load(&inst), solved.value.max_load);
                assert!(validate_assignment(&inst, &solved.value.assignment).is_ok());
            }
            Err(_) => assert_eq!(expected, None, "seed {seed}"),
        }
    }
}

#[test]
fn gapcc_is_within_twice_the_optimal_load() {
    for seed in 0..300 {
        let mut r = rng(3_000 + seed);
        let inst = random_instance(
            &mut r,
            Shape {
                max_clients: 7,
                max_helpers: 3,
                max_duration: 8,
                unit_demand: true,
                sparsity: 0.3,
            },
        );
        let opt = brute_min_max_load(&inst);
        match gapcc_assign(&inst) {
            Ok(g) => {
                let opt = opt.expect("gapcc found an assignment");
                assert!(g.certified_target <= opt, "seed {seed}");
                let load = g.assignment.max_load(&inst);
                assert!(load <= 2 * g.certified_target, "seed {seed}");
                assert!(validate_assignment(&inst, &g.assignment).is_ok());
            }
            Err(_) => assert_eq!(opt, None, "seed {seed}"),
        }
    }
}

/// Earliest-start realization with extra idle `gaps[k]` inserted before task `k`.
fn realize_with_gaps(
    inst: &slmakespan::model::Instance,
    order: &[(usize, TaskKind)],
    gaps: &[Slot],
) -> Slot {
    let mut t = 0;
    let mut t2_end = std::collections::HashMap::new();
    let mut worst = 0;
    for (k, &(j, kind)) in order.iter().enumerate() {
        match kind {
            TaskKind::T2 => {
                t = t.max(inst.release(j)) + gaps[k] + inst.t2(j, 0);
                t2_end.insert(j, t);
            }
            TaskKind::T4 => {
                t = t.max(t2_end[&j] + inst.t3_delay(j)) + gaps[k] + inst.t4(j, 0);
                worst = worst.max(t + inst.t5(j));
            }
        }
    }
    worst
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn every_method_emits_clean_schedules(seed in any::<u64>()) {
        let mut r = rng(seed);
        let inst = random_instance(&mut r, Shape { max_clients: 6, max_helpers: 3, max_duration: 8, unit_demand: false, sparsity: 0.2 });
        let opt = oracle_opt(&inst, &budget()).ok().map(|s| s.value.makespan);
        for m in Method::ALL {
            let run = run_method(m, &inst, &budget());
            if let Some(sol) = &run.solution {
                prop_assert!(validate_schedule(&inst, &sol.assignment, &sol.schedule).is_ok(), "{}", m);
                prop_assert_eq!(run.report.makespan, Some(sol.schedule.makespan));
                prop_assert!(sol.schedule.makespan >= opt.expect("a schedule exists"));
            } else {
                prop_assert!(run.report.makespan.is_none());
                prop_assert!(matches!(run.report.status, RunStatus::AssignmentFailed | RunStatus::Rejected));
            }
        }
        // equid fails exactly when no feasible assignment exists
        let equid = run_method(Method::Equid, &inst, &budget());
        prop_assert_eq!(equid.report.status == RunStatus::Ok, opt.is_some());
    }

    #[test]
    fn schedulers_respect_the_load_and_chain_bounds(seed in any::<u64>()) {
        let mut r = rng(seed);
        let inst = random_instance(&mut r, Shape { max_clients: 8, max_helpers: 3, max_duration: 8, unit_demand: true, sparsity: 0.0 });
        if let Ok(g) = gapcc_assign(&inst) {
            let a = g.assignment;
            for s in [schedule_algorithm1(&inst, &a).unwrap(), schedule_fcfs(&inst, &a).unwrap()] {
                prop_assert!(validate_schedule(&inst, &a, &s).is_ok());
                let chain = inst.clients().map(|j| inst.chain_length(j, a.helper_of(j))).max().unwrap_or(0);
                prop_assert!(s.makespan >= chain);
                prop_assert!(s.makespan >= a.max_load(&inst));
            }
            let s = schedule_algorithm1(&inst, &a).unwrap();
            let bound = a.max_load(&inst) + inst.max_release() + inst.max_delay() + inst.max_t5();
            prop_assert!(s.makespan <= bound);
        }
    }

    #[test]
    fn inserting_idle_time_never_helps(seed in any::<u64>(), gap_seed in any::<u64>()) {
        let mut r = rng(seed);
        let inst = random_instance(&mut r, Shape { max_clients: 4, max_helpers: 1, max_duration: 6, unit_demand: true, sparsity: 0.0 });
        let mut order: Vec<(usize, TaskKind)> = inst.clients().map(|j| (j, TaskKind::T2)).collect();
        order.extend(inst.clients().map(|j| (j, TaskKind::T4)));
        let (intervals, completion) = realize_order(&inst, 0, &order);
        let earliest = completion.iter().map(|&(_, c)| c).max().unwrap_or(0);
        prop_assert_eq!(earliest, realize_with_gaps(&inst, &order, &vec![0; order.len()]));
        prop_assert_eq!(intervals.len(), order.len());
        let mut g = rng(gap_seed);
        let gaps: Vec<Slot> = order.iter().map(|_| rand::Rng::gen_range(&mut g, 0..3)).collect();
        prop_assert!(realize_with_gaps(&inst, &order, &gaps) >= earliest);
        let a = Assignment::new(vec![0; inst.num_clients()]);
        let s = slmakespan::model::Schedule::new(intervals, {
            let mut c = vec![0; inst.num_clients()];
            for (j, v) in completion { c[j] = v; }
            c
        });
        prop_assert!(validate_schedule(&inst, &a, &s).is_ok());
    }
}

//! Acceptance suite: one test per criterion, each printing a pass/fail line.
//! Run with `cargo test --test acceptance -- --nocapture`.

mod common;

use std::time::Instant;

use unlabeled_mapf::assignment::{assign, assign_bottleneck, AssignKind, Eval};
use unlabeled_mapf::graph::Node;
use unlabeled_mapf::instance::{
    compute_metrics, generate_random_instance, parse_movingai_map, random_grid_map_text,
    validate_plan, Instance, MovingAiMap,
};
use unlabeled_mapf::optimal::{
    compute_prune_table, feasible, solve_optimal, FlowSolveOptions, LowerBoundMode,
};
use unlabeled_mapf::tswap::{
    make_schedule, solve_offline, solve_online, OfflineEngine, ScheduleKind, StepEvent,
};

fn report(name: &str, ok: bool, detail: &str) {
    println!("acceptance {}: {} ({})", name, if ok { "PASS" } else { "FAIL" }, detail);
    assert!(ok, "acceptance {} failed: {}", name, detail);
}

fn grid_map(width: usize, height: usize, seed: u64) -> MovingAiMap {
    parse_movingai_map(&random_grid_map_text(width, height, 0.2, seed)).unwrap()
}

/// Small-instance corpus used by the exactness criteria: assorted graphs
/// with at most 9 nodes and 3 agents.
fn tiny_corpus() -> Vec<(MovingAiMap, usize, usize, u64)> {
    let shapes = [
        "type octile\nheight 3\nwidth 3\nmap\n...\n...\n...\n",
        "type octile\nheight 3\nwidth 3\nmap\n...\n.@.\n...\n",
        "type octile\nheight 2\nwidth 4\nmap\n....\n....\n",
        "type octile\nheight 1\nwidth 6\nmap\n......\n",
        "type octile\nheight 2\nwidth 3\nmap\n...\n...\n",
        "type octile\nheight 3\nwidth 3\nmap\n...\n..@\n.@.\n",
    ];
    let mut corpus = Vec::new();
    let mut seed = 0u64;
    'fill: loop {
        for shape in shapes {
            for n in 1..=3usize {
                let map = parse_movingai_map(shape).unwrap();
                let m = 1 + (seed as usize % n);
                corpus.push((map, n, m, seed));
                seed += 1;
                if corpus.len() >= 216 {
                    break 'fill;
                }
            }
        }
    }
    corpus
}

#[test]
fn criterion_1_optimality_oracle_equivalence() {
    let corpus = tiny_corpus();
    let mut checked = 0;
    for (map, n, m, seed) in &corpus {
        let inst = generate_random_instance(&map.graph, *n, *m, *seed).unwrap();
        let exact = common::optimal_makespan_joint_bfs(&map.graph, inst.starts(), inst.targets());
        let solution = solve_optimal(&inst, &FlowSolveOptions::for_instance(&inst)).unwrap();
        assert_eq!(
            solution.makespan, exact,
            "seed {}: flow {} vs joint-state BFS {}",
            seed, solution.makespan, exact
        );
        assert!(validate_plan(&inst, &solution.plan).is_valid());
        checked += 1;
    }
    report(
        "1 optimality-oracle equivalence",
        checked >= 200,
        &format!("{} instances, flow makespan == joint-state BFS on all", checked),
    );
}

#[test]
fn criterion_2_tswap_near_optimality() {
    let map = grid_map(32, 32, 2024);
    let mut detail = String::new();
    let mut ok = true;
    for &n in &[30usize, 70, 110] {
        let mut ratios = Vec::new();
        for seed in 0..50u64 {
            let inst = generate_random_instance(&map.graph, n, n, seed).unwrap();
            let outcome = assign_bottleneck(&inst, false, Eval::Lazy);
            let run = solve_offline(&inst, &outcome.assignment).unwrap();
            let tswap = compute_metrics(&inst, &run.plan).unwrap().makespan;
            let optimal = solve_optimal(&inst, &FlowSolveOptions::for_instance(&inst)).unwrap().makespan;
            assert!(tswap >= optimal, "seed {}: tswap {} below optimum {}", seed, tswap, optimal);
            ratios.push(if optimal == 0 { 1.0 } else { tswap as f64 / optimal as f64 });
        }
        let mean = ratios.iter().sum::<f64>() / ratios.len() as f64;
        ok &= mean <= 1.15;
        detail.push_str(&format!("|A|={}: mean sub-optimality {:.4}; ", n, mean));
    }
    report("2 tswap near-optimality <= 1.15", ok, detail.trim_end_matches("; "));
}

#[test]
fn criterion_3_relative_runtime_ordering() {
    let map = grid_map(64, 64, 4096);
    let n = 500;
    let mut tswap_times = Vec::new();
    let mut flow_times = Vec::new();
    for seed in 0..3u64 {
        let inst = generate_random_instance(&map.graph, n, n, seed).unwrap();

        let clock = Instant::now();
        let outcome = assign(&inst, AssignKind::GreedyMakespan, Eval::Lazy);
        let run = solve_offline(&inst, &outcome.assignment).unwrap();
        tswap_times.push(clock.elapsed().as_secs_f64());
        assert!(validate_plan(&inst, &run.plan).is_valid());

        let clock = Instant::now();
        let solution = solve_optimal(&inst, &FlowSolveOptions::for_instance(&inst)).unwrap();
        flow_times.push(clock.elapsed().as_secs_f64());
        assert!(solution.makespan <= run.plan.makespan());
    }
    tswap_times.sort_by(f64::total_cmp);
    flow_times.sort_by(f64::total_cmp);
    let (tswap_median, flow_median) = (tswap_times[1], flow_times[1]);
    report(
        "3 relative runtime ordering >= 10x",
        flow_median >= 10.0 * tswap_median,
        &format!(
            "median tswap+greedy {:.4}s vs flow {:.4}s ({:.0}x)",
            tswap_median,
            flow_median,
            flow_median / tswap_median
        ),
    );
}

#[test]
fn criterion_4_assignment_optimality() {
    let map = grid_map(8, 8, 808);
    let mut checked = 0;
    for seed in 0..50u64 {
        let inst = generate_random_instance(&map.graph, 6, 6, seed).unwrap();
        let dists = common::distance_matrix(&map.graph, inst.starts(), inst.targets());
        let best_bottleneck = common::brute_force_bottleneck(&dists, 6);
        let best_total = common::brute_force_min_total(&dists, 6);
        let bottleneck = assign_bottleneck(&inst, false, Eval::Lazy).assignment.target_bottleneck();
        assert_eq!(bottleneck, best_bottleneck, "seed {}", seed);
        let linear = assign(&inst, AssignKind::OptimalLinear, Eval::Eager).assignment.total_cost();
        assert_eq!(linear, best_total, "seed {}", seed);
        checked += 1;
    }
    report(
        "4 assignment optimality vs brute force",
        checked == 50,
        &format!("{} seeds, bottleneck and linear both exact", checked),
    );
}

#[test]
fn criterion_5_lazy_eager_equivalence() {
    let map = grid_map(32, 32, 2024);
    let mut total = 0usize;
    let mut wins_bottleneck = 0usize;
    let mut wins_greedy = 0usize;
    for &n in &[30usize, 70, 110] {
        for seed in 0..15u64 {
            let inst = generate_random_instance(&map.graph, n, n, seed).unwrap();
            let lazy_b = assign(&inst, AssignKind::BottleneckMinCost, Eval::Lazy);
            let eager_b = assign(&inst, AssignKind::BottleneckMinCost, Eval::Eager);
            assert_eq!(lazy_b.assignment.target_bottleneck(), eager_b.assignment.target_bottleneck());
            assert_eq!(lazy_b.assignment.total_cost(), eager_b.assignment.total_cost());
            let lazy_g = assign(&inst, AssignKind::GreedyMakespan, Eval::Lazy);
            let eager_g = assign(&inst, AssignKind::GreedyMakespan, Eval::Eager);
            assert_eq!(lazy_g.assignment.target_bottleneck(), eager_g.assignment.target_bottleneck());
            assert_eq!(lazy_g.assignment.total_cost(), eager_g.assignment.total_cost());
            total += 1;
            wins_bottleneck += (lazy_b.expansions < eager_b.expansions) as usize;
            wins_greedy += (lazy_g.expansions < eager_g.expansions) as usize;
        }
    }
    let ok = wins_bottleneck * 5 >= total * 4 && wins_greedy * 5 >= total * 4;
    report(
        "5 lazy/eager equivalence",
        ok,
        &format!(
            "identical costs on {} instances; lazy expanded strictly less on {}/{} (bottleneck) and {}/{} (greedy)",
            total, wins_bottleneck, total, wins_greedy, total
        ),
    );
}

#[test]
fn criterion_6_golden_examples() {
    // six-node line: three agents, crossing assignment, one swap at t = 0
    let line6 = parse_movingai_map("type octile\nheight 1\nwidth 6\nmap\n......\n").unwrap();
    let inst6 = Instance::new(&line6.graph, vec![Node(2), Node(3), Node(4)], vec![Node(0), Node(4), Node(5)])
        .unwrap();
    let assignment = unlabeled_mapf::assignment::Assignment::from_pairs(
        &inst6,
        &[(0, Node(0)), (1, Node(5)), (2, Node(4))],
    )
    .unwrap();
    let run = solve_offline(&inst6, &assignment).unwrap();
    let makespan_ok = run.plan.makespan() == 2;
    let swap_ok = run
        .events
        .iter()
        .any(|(t, _, e)| *t == 0 && matches!(e, StepEvent::SwapTargets { .. }));

    // five-node line: optimal horizon 2, horizon-1 flow stuck at 1, lambda(u) = 2
    let line5 = parse_movingai_map("type octile\nheight 1\nwidth 5\nmap\n.....\n").unwrap();
    let inst5 = Instance::new(&line5.graph, vec![Node(1), Node(2)], vec![Node(2), Node(4)]).unwrap();
    let horizon1 = feasible(&inst5, 1, false, None).unwrap();
    let flow1_ok = !horizon1.feasible && horizon1.network.flow_value() == 1;
    let solution = solve_optimal(&inst5, &FlowSolveOptions::for_instance(&inst5)).unwrap();
    let t_ok = solution.makespan == 2;
    let lambda_ok = compute_prune_table(&inst5).lambda(Node(0)) == 2;

    let ok = makespan_ok && swap_ok && flow1_ok && t_ok && lambda_ok;
    report(
        "6 golden examples",
        ok,
        &format!(
            "line6 makespan={} swap@t0={}; line5 T={} flow(N1)={} lambda(u)={}",
            run.plan.makespan(),
            swap_ok,
            solution.makespan,
            horizon1.network.flow_value(),
            compute_prune_table(&inst5).lambda(Node(0))
        ),
    );
}

#[test]
fn criterion_7a_phi_strictly_decreases_offline() {
    let map = grid_map(8, 8, 1212);
    let kinds = [
        AssignKind::Bottleneck,
        AssignKind::BottleneckMinCost,
        AssignKind::GreedyMakespan,
        AssignKind::NaiveGreedy,
    ];
    let mut steps_checked = 0u64;
    for seed in 0..25u64 {
        let n = 2 + (seed as usize % 9);
        let inst = generate_random_instance(&map.graph, n, n, seed).unwrap();
        let outcome = assign(&inst, kinds[seed as usize % kinds.len()], Eval::Lazy);
        let mut engine = OfflineEngine::new(&inst, &outcome.assignment).unwrap();
        let mut phi = common::phi(&map.graph, engine.agent_states());
        while !engine.finished() {
            assert!(phi > 0, "engine running with zero potential");
            engine.step();
            let next = common::phi(&map.graph, engine.agent_states());
            assert!(next < phi, "seed {}: phi {} -> {} at t={}", seed, phi, next, engine.timestep());
            phi = next;
            steps_checked += 1;
        }
    }
    report(
        "7a phi strictly decreases",
        steps_checked > 0,
        &format!("{} offline timesteps checked", steps_checked),
    );
}

#[test]
fn criterion_7b_psi_accounts_for_every_move() {
    let map = grid_map(8, 8, 1313);
    let mut offline_checked = 0u64;
    for seed in 0..15u64 {
        let n = 2 + (seed as usize % 8);
        let inst = generate_random_instance(&map.graph, n, n, seed).unwrap();
        let outcome = assign(&inst, AssignKind::Bottleneck, Eval::Lazy);
        let psi0 = outcome.assignment.total_cost();

        // offline: per timestep, psi drops by exactly the moves plus the
        // total length of rotated cycles
        let mut engine = OfflineEngine::new(&inst, &outcome.assignment).unwrap();
        let mut psi = common::psi(&map.graph, engine.agent_states());
        assert_eq!(psi, psi0);
        while !engine.finished() {
            let t = engine.timestep();
            engine.step();
            let next = common::psi(&map.graph, engine.agent_states());
            let moves = engine
                .events()
                .iter()
                .filter(|(et, _, e)| *et == t && matches!(e, StepEvent::Move { .. }))
                .count() as u64;
            let rotated: u64 = engine
                .events()
                .iter()
                .filter(|(et, _, _)| *et == t)
                .map(|(_, _, e)| match e {
                    StepEvent::RotateTargets { cycle } => cycle.len() as u64,
                    _ => 0,
                })
                .sum();
            assert_eq!(psi - next, moves + rotated, "seed {} t={}", seed, t);
            psi = next;
            offline_checked += 1;
        }
        let run = solve_offline(&inst, &outcome.assignment).unwrap();
        let metrics = compute_metrics(&inst, &run.plan).unwrap();
        assert!(metrics.sum_of_moves as u64 <= psi0, "seed {}", seed);

        // online: the same identity per activation
        let mut schedule = make_schedule(ScheduleKind::RandomFair, n, seed).unwrap();
        let trace = solve_online(&inst, &outcome.assignment, &mut schedule, 1_000_000).unwrap();
        assert!(trace.terminated);
        assert!((trace.sum_of_moves() as u64) <= psi0, "seed {}", seed);
    }
    report(
        "7b psi non-increasing and bounds moves",
        offline_checked > 0,
        &format!("{} offline timesteps matched the move accounting", offline_checked),
    );
}

#[test]
fn criterion_7c_produced_plans_validate() {
    let map = grid_map(8, 8, 1414);
    let mut plans = 0;
    for seed in 0..30u64 {
        let n = 2 + (seed as usize % 8);
        let m = if seed % 4 == 0 { 1 + (seed as usize % n) } else { n };
        let inst = generate_random_instance(&map.graph, n, m, seed).unwrap();
        let outcome = assign(&inst, AssignKind::GreedyMakespan, Eval::Lazy);
        let run = solve_offline(&inst, &outcome.assignment).unwrap();
        assert!(validate_plan(&inst, &run.plan).is_valid(), "tswap seed {}", seed);
        let solution = solve_optimal(&inst, &FlowSolveOptions::for_instance(&inst)).unwrap();
        assert!(validate_plan(&inst, &solution.plan).is_valid(), "flow seed {}", seed);
        plans += 2;
    }
    report("7c produced plans validate", plans == 60, &format!("{} plans validated", plans));
}

#[test]
fn criterion_7d_online_termination_under_fair_schedules() {
    let map = grid_map(8, 8, 1515);
    let mut random_schedules = 0;
    let mut delayed_schedules = 0;
    for seed in 0..20u64 {
        let n = 2 + (seed as usize % 7);
        let inst = generate_random_instance(&map.graph, n, n, seed).unwrap();
        let outcome = assign(&inst, AssignKind::Bottleneck, Eval::Lazy);
        let psi0 = outcome.assignment.total_cost();
        let generous = |window: usize| window as u64 * (psi0 + (n * n) as u64 + 1) + n as u64;

        for schedule_seed in 0..5u64 {
            let mut schedule = make_schedule(ScheduleKind::RandomFair, n, seed * 100 + schedule_seed).unwrap();
            let budget = generous(schedule.fairness_window());
            let trace = solve_online(&inst, &outcome.assignment, &mut schedule, budget)
                .unwrap_or_else(|e| panic!("seed {} schedule {}: {}", seed, schedule_seed, e));
            assert!(trace.terminated);
            random_schedules += 1;
        }
        for factor in [2usize, 4] {
            let kind = ScheduleKind::Delayed { agent: seed as usize % n, slowdown: factor };
            let mut schedule = make_schedule(kind, n, seed).unwrap();
            let budget = generous(schedule.fairness_window());
            let trace = solve_online(&inst, &outcome.assignment, &mut schedule, budget)
                .unwrap_or_else(|e| panic!("seed {} factor {}: {}", seed, factor, e));
            assert!(trace.terminated);
            assert!(trace.sum_of_moves() as u64 <= psi0);
            delayed_schedules += 1;
        }
    }
    report(
        "7d online termination",
        random_schedules == 100 && delayed_schedules == 40,
        &format!("{} random-fair + {} delayed schedules all terminated", random_schedules, delayed_schedules),
    );
}

#[test]
fn criterion_7e_flow_technique_combinations_agree() {
    let corpus = tiny_corpus();
    let mut checked = 0;
    for (map, n, m, seed) in corpus.iter().take(60) {
        let inst = generate_random_instance(&map.graph, *n, *m, *seed).unwrap();
        let mut results = Vec::new();
        for lb in [LowerBoundMode::Conservative, LowerBoundMode::Bottleneck] {
            for prune in [false, true] {
                for reuse in [false, true] {
                    let opts = FlowSolveOptions {
                        lower_bound: lb,
                        use_prune: prune,
                        use_reuse: reuse,
                        timeout: None,
                    };
                    results.push(solve_optimal(&inst, &opts).unwrap().makespan);
                }
            }
        }
        assert!(results.windows(2).all(|w| w[0] == w[1]), "seed {}: {:?}", seed, results);
        checked += 1;
    }
    report(
        "7e technique combinations agree",
        checked == 60,
        &format!("{} instances, all 8 combinations returned the same T", checked),
    );
}

#[test]
fn criterion_8_min_cost_matching_improves_sum_of_costs() {
    let map = grid_map(32, 32, 2024);
    let n = 110;
    let mut soc_plain = 0u64;
    let mut soc_dagger = 0u64;
    for seed in 0..50u64 {
        let inst = generate_random_instance(&map.graph, n, n, seed).unwrap();
        let plain = assign_bottleneck(&inst, false, Eval::Lazy);
        let dagger = assign_bottleneck(&inst, true, Eval::Lazy);
        let run_plain = solve_offline(&inst, &plain.assignment).unwrap();
        let run_dagger = solve_offline(&inst, &dagger.assignment).unwrap();
        soc_plain += compute_metrics(&inst, &run_plain.plan).unwrap().sum_of_costs as u64;
        soc_dagger += compute_metrics(&inst, &run_dagger.plan).unwrap().sum_of_costs as u64;
    }
    report(
        "8 min-cost matching improves sum-of-costs",
        soc_dagger <= soc_plain,
        &format!(
            "mean sum-of-costs {:.1} (with min-cost matching) vs {:.1} (without)",
            soc_dagger as f64 / 50.0,
            soc_plain as f64 / 50.0
        ),
    );
}

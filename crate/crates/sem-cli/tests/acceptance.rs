//! Acceptance suite: one test per release criterion, each printing a
//! `CRITERION n: PASS` line (visible with `--nocapture`; the test name itself
//! carries the verdict in normal output).
//!
//! The desk scenario shared by criteria 1 and 6 is a 30-node/60-link random
//! substrate with capacities 100–150 and 300 requests of 5–15 service
//! functions (density 0.5, demands 1–20). Search hyperparameters are sized
//! for a single-core runner: 4 workers, swarm 10, 12 iterations.

use std::collections::BTreeMap;
use std::time::Instant;

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use sem_core::decision::{allocate, profit, release, validate_decision, Assignment, Path};
use sem_core::frag::{cbug, fitness, nred, pnvl, FragConfig, PnvlExponentSign};
use sem_core::model::{
    generate_random_cpn, generate_service_entity, CpnGenParams, CpnTopology, EntityGenParams,
    NodeId, ProfitParams, ServiceEntity,
};
use sem_core::oracle::{
    brute_force_p2a, gbp_gadget, min_bisection_cut, random_tiny_instance, random_unit_entity,
    verify_proposition1, verify_theorem2, EXHAUSTIVE_K, MAX_EXACT_PARTITION_SFS,
};
use sem_core::partition::{
    check_balance, partition_exact, partition_heuristic, pwv_from_assignment, BalanceTolerance,
};
use sem_core::routing::PathTable;
use sem_core::search::{controller_solve, InitStrategy, SearchContext, SearchParams, SolveOptions};
use sem_core::sim::{
    generate_workload, run, AbsSolver, RequestSolver, RwBfsSolver, Scenario, WorkloadParams,
    WorkloadRequest,
};
use sem_core::{LlId, MappingDecision};

// ---------------------------------------------------------------------------
// Shared fixtures and statistics helpers
// ---------------------------------------------------------------------------

fn desk_topology(seed: u64) -> CpnTopology {
    let params =
        CpnGenParams { n_nodes: 30, n_links: 60, cpu_range: (100, 150), bw_range: (100, 150) };
    generate_random_cpn(&params, 0x7060_0000 + seed).unwrap()
}

fn desk_workload(seed: u64) -> Vec<WorkloadRequest> {
    let params = WorkloadParams {
        n_requests: 300,
        arrival_rate: 0.1,
        mean_lifetime: 500.0,
        entity: EntityGenParams { size_range: (5, 15), ll_density: 0.5, demand_range: (1, 20) },
    };
    generate_workload(&params, 0x3030_0000 + seed).unwrap()
}

/// Search sizing for desk runs: 4 workers as required, swarm and iteration
/// counts trimmed so a full run fits a single-core time budget.
fn desk_search_params() -> SearchParams {
    SearchParams {
        n_workers: 4,
        swarm_size: 10,
        max_iters: 12,
        elite_size: 3,
        local_archive_cap: 4,
        archive_cap: 16,
        archive_protect_best: false,
    }
}

fn desk_abs_solver(deterministic: bool) -> AbsSolver {
    AbsSolver {
        params: desk_search_params(),
        frag: FragConfig::default(),
        tolerance: BalanceTolerance::default(),
        init: InitStrategy::Frontier,
        deterministic,
    }
}

fn run_desk(seed: u64, solver: &mut dyn RequestSolver) -> (CpnTopology, Vec<WorkloadRequest>, sem_core::sim::RunOutput) {
    let topology = desk_topology(seed);
    let workload = desk_workload(seed);
    let scenario = Scenario {
        topology: topology.clone(),
        workload: workload.clone(),
        profit: ProfitParams::default(),
        k_paths: 5,
        base_seed: seed,
        collect_traces: false,
    };
    let output = run(scenario, solver).expect("desk run completes");
    (topology, workload, output)
}

/// Replays the accepted decisions chronologically against a fresh copy of the
/// substrate, independently re-checking every constraint at its solve-time
/// availability. Returns the violation total and each decision's node
/// exhaustion score at the moment it was admitted.
fn replay(
    topology: &CpnTopology,
    workload: &[WorkloadRequest],
    output: &sem_core::sim::RunOutput,
) -> (usize, Vec<f64>, bool) {
    let mut live = topology.clone();
    let entities: BTreeMap<u64, &ServiceEntity> =
        workload.iter().map(|r| (r.id, &r.entity)).collect();
    let mut events = Vec::new();
    for (i, d) in output.decisions.iter().enumerate() {
        events.push((d.arrival_time, 1u8, i));
        events.push((d.departure_time, 0u8, i));
    }
    events.sort_by(|a, b| {
        a.0.total_cmp(&b.0)
            .then(a.1.cmp(&b.1))
            .then(output.decisions[a.2].req_id.cmp(&output.decisions[b.2].req_id))
    });
    let frag = FragConfig::default();
    let mut violations = 0;
    let mut exhaustion = Vec::new();
    for (_, class, i) in events {
        let d = &output.decisions[i];
        let entity = entities[&d.req_id];
        if class == 1 {
            let report = validate_decision(&live, entity, &d.decision);
            violations += report.violations.len();
            exhaustion.push(
                nred(entity, &d.decision, &live.cpu_available_vec(), &frag)
                    .expect("accepted decisions score"),
            );
            allocate(&mut live, entity, &d.decision).expect("accepted decisions re-allocate");
        } else {
            release(&mut live, entity, &d.decision).expect("releases succeed");
        }
    }
    let conserved = live.cpu_used() == 0 && live.bw_used() == 0;
    (violations, exhaustion, conserved)
}

fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

/// One-sided rank-sum z statistic for the hypothesis that `greater` is
/// stochastically larger than `lesser` (normal approximation, midranks and a
/// tie-corrected variance).
fn rank_sum_z(greater: &[f64], lesser: &[f64]) -> f64 {
    let n1 = greater.len();
    let n2 = lesser.len();
    assert!(n1 > 0 && n2 > 0, "rank test needs both samples");
    let mut pooled: Vec<(f64, bool)> = greater
        .iter()
        .map(|&v| (v, true))
        .chain(lesser.iter().map(|&v| (v, false)))
        .collect();
    pooled.sort_by(|a, b| a.0.total_cmp(&b.0));
    let n = pooled.len();
    let mut rank_sum_1 = 0.0;
    let mut tie_term = 0.0;
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j < n && pooled[j].0 == pooled[i].0 {
            j += 1;
        }
        let midrank = (i + j + 1) as f64 / 2.0;
        let t = (j - i) as f64;
        tie_term += t * t * t - t;
        for entry in &pooled[i..j] {
            if entry.1 {
                rank_sum_1 += midrank;
            }
        }
        i = j;
    }
    let u1 = rank_sum_1 - (n1 * (n1 + 1)) as f64 / 2.0;
    let mean = (n1 * n2) as f64 / 2.0;
    let nf = n as f64;
    let variance = (n1 * n2) as f64 / 12.0 * ((nf + 1.0) - tie_term / (nf * (nf - 1.0)));
    (u1 - mean - 0.5) / variance.sqrt()
}

/// Least-squares slope and R² of y against x.
fn linear_fit(points: &[(f64, f64)]) -> (f64, f64) {
    let n = points.len() as f64;
    let mean_x = points.iter().map(|p| p.0).sum::<f64>() / n;
    let mean_y = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mean_x).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mean_x) * (p.1 - mean_y)).sum();
    let syy: f64 = points.iter().map(|p| (p.1 - mean_y).powi(2)).sum();
    let slope = sxy / sxx;
    let r2 = if syy == 0.0 { 1.0 } else { (sxy * sxy) / (sxx * syy) };
    (slope, r2)
}

fn relative_error(got: f64, want: f64) -> f64 {
    (got - want).abs() / want.abs().max(f64::MIN_POSITIVE)
}

// ---------------------------------------------------------------------------
// Criteria
// ---------------------------------------------------------------------------

#[test]
fn criterion_1_desk_run_soundness() {
    let started = Instant::now();
    let mut solver = desk_abs_solver(false);
    let (topology, workload, output) = run_desk(0, &mut solver);
    let elapsed = started.elapsed();

    let last = output.snapshots.last().expect("300 arrivals leave snapshots");
    assert_eq!(last.arrived, 300);
    assert!(last.accepted > 0, "the desk scenario must admit something");
    assert_eq!(output.solver_panics, 0);
    assert!(output.conservation_ok, "simulator-side conservation failed");

    let (violations, _, conserved) = replay(&topology, &workload, &output);
    assert_eq!(violations, 0, "accepted decisions violated constraints on replay");
    assert!(conserved, "replay did not restore the substrate exactly");
    assert!(
        elapsed.as_secs() < 600,
        "desk run took {elapsed:?}, above the 10-minute target"
    );
    println!(
        "CRITERION 1: PASS — {}/{} accepted, 0 violations, conservation exact, {:.1?} wall",
        last.accepted, last.arrived, elapsed
    );
}

#[test]
fn criterion_2_nested_search_matches_the_flat_optimum() {
    let mut rng = ChaCha8Rng::seed_from_u64(0xACC2);
    let total = 50;
    let mut passes = 0;
    for _ in 0..total {
        let (topology, entity) = random_tiny_instance(rng.random());
        let report = verify_proposition1(&entity, &topology, EXHAUSTIVE_K).unwrap();
        assert_eq!(
            report.flat_cost, report.nested_cost,
            "nested optimum diverged on a tiny instance"
        );
        passes += usize::from(report.pass);
    }
    assert_eq!(passes, total);
    println!("CRITERION 2: PASS — nested == flat optimum on {passes}/{total} tiny instances");
}

#[test]
fn criterion_3_proportion_reformulation_is_lossless() {
    let mut rng = ChaCha8Rng::seed_from_u64(0xACC3);
    let total = 100;
    let mut passes = 0;
    for _ in 0..total {
        let (topology, entity) = random_tiny_instance(rng.random());
        let report = verify_theorem2(&entity, &topology).unwrap();
        assert!(report.pass, "proportion sweep missed the direct optimum: {report:?}");
        passes += 1;
    }
    assert_eq!(passes, total);
    println!("CRITERION 3: PASS — proportion sweep equals direct enumeration on {passes}/{total}");
}

#[test]
fn criterion_4_gadget_cost_equals_twice_the_bisection_cut() {
    let mut rng = ChaCha8Rng::seed_from_u64(0xACC4);
    let total = 20;
    for i in 0..total {
        let entity = random_unit_entity(rng.random_range(4..=6), rng.random());
        let topology = gbp_gadget(&entity).unwrap();
        let report = brute_force_p2a(&topology, &entity, 4).unwrap();
        let expected = 2 * min_bisection_cut(&entity).unwrap();
        assert_eq!(
            report.optimum_cost,
            Some(expected),
            "gadget instance {i} broke the 2x bisection identity"
        );
    }
    println!("CRITERION 4: PASS — tunnel optimum == 2 x min bisection on {total}/{total} gadgets");
}

#[test]
fn criterion_5_partitioner_stays_within_twice_the_exact_cut() {
    let mut rng = ChaCha8Rng::seed_from_u64(0xACC5);
    let total = 100;
    let tolerance = BalanceTolerance::default();
    let mut within_factor_two = 0;
    for i in 0..total {
        let n_sfs = rng.random_range(3..=10usize);
        let entity = generate_service_entity(
            i,
            &EntityGenParams { size_range: (n_sfs, n_sfs), ll_density: 0.5, demand_range: (1, 9) },
            rng.random(),
        )
        .unwrap();

        // Proportions from a random witness placement: feasible by
        // construction, with capacities covering each node's witness load
        // plus a little slack.
        let k = rng.random_range(2..=4usize);
        let witness = Assignment {
            placement: (0..n_sfs).map(|_| NodeId(rng.random_range(0..k as u32))).collect(),
        };
        let mut capacities = vec![0u64; k];
        for sf in entity.sfs() {
            capacities[witness.placement[sf.id.index()].index()] += sf.cpu_demand;
        }
        for cap in &mut capacities {
            *cap += rng.random_range(0..4u64);
        }
        let pwv = pwv_from_assignment(&entity, &witness).unwrap();

        let exact =
            partition_exact(&entity, &pwv, tolerance.theta, &capacities, MAX_EXACT_PARTITION_SFS)
                .expect("witness guarantees feasibility");
        let heuristic = partition_heuristic(&entity, &pwv, tolerance, &capacities, rng.random())
            .expect("heuristic must solve instances the witness proves feasible");

        // Balance at the reported tolerance and capacity feasibility.
        assert!(check_balance(
            &entity,
            &heuristic.assignment,
            &pwv,
            heuristic.effective_tolerance
        )
        .unwrap());
        let mut loads = vec![0u64; k];
        for sf in entity.sfs() {
            loads[heuristic.assignment.placement[sf.id.index()].index()] += sf.cpu_demand;
        }
        assert!(
            loads.iter().zip(&capacities).all(|(l, c)| l <= c),
            "heuristic oversubscribed a node"
        );
        assert!(
            heuristic.cut_bw >= exact.cut_bw || heuristic.effective_tolerance > tolerance.theta,
            "heuristic beat the exact optimum inside the same band"
        );
        if heuristic.cut_bw <= 2 * exact.cut_bw {
            within_factor_two += 1;
        }
    }
    assert!(
        within_factor_two >= 90,
        "only {within_factor_two}/100 instances within 2x of the exact cut"
    );
    println!(
        "CRITERION 5: PASS — balance/capacity always hold; {within_factor_two}/{total} cuts within 2x of exact"
    );
}

#[test]
fn criterion_6_swarm_beats_the_baseline_on_the_desk_scenario() {
    let seeds = [11u64, 22, 33, 44, 55];
    let mut abs_acceptance = Vec::new();
    let mut abs_final_cu = Vec::new();
    let mut abs_exhaustion = Vec::new();
    let mut bfs_acceptance = Vec::new();
    let mut bfs_final_cu = Vec::new();
    let mut bfs_exhaustion = Vec::new();

    for &seed in &seeds {
        let mut abs = desk_abs_solver(true);
        let (topology, workload, output) = run_desk(seed, &mut abs);
        let last = output.snapshots.last().unwrap();
        abs_acceptance.push(last.acceptance_ratio);
        abs_final_cu.push(last.cu_ratio);
        let (violations, mut scores, conserved) = replay(&topology, &workload, &output);
        assert_eq!(violations, 0);
        assert!(conserved);
        abs_exhaustion.append(&mut scores);

        let (topology, workload, output) = run_desk(seed, &mut RwBfsSolver);
        let last = output.snapshots.last().unwrap();
        bfs_acceptance.push(last.acceptance_ratio);
        bfs_final_cu.push(last.cu_ratio);
        let (violations, mut scores, conserved) = replay(&topology, &workload, &output);
        assert_eq!(violations, 0);
        assert!(conserved);
        bfs_exhaustion.append(&mut scores);
    }

    let (abs_ar, bfs_ar) = (median(&abs_acceptance), median(&bfs_acceptance));
    let (abs_cu, bfs_cu) = (median(&abs_final_cu), median(&bfs_final_cu));
    assert!(abs_ar > bfs_ar, "median acceptance: swarm {abs_ar:.4} vs baseline {bfs_ar:.4}");
    assert!(abs_cu > bfs_cu, "median final cu_ratio: swarm {abs_cu:.4} vs baseline {bfs_cu:.4}");
    let ar_gain = (abs_ar - bfs_ar) / bfs_ar;
    let cu_gain = (abs_cu - bfs_cu) / bfs_cu;
    assert!(
        ar_gain >= 0.05 || cu_gain >= 0.05,
        "neither metric improved by 5% (acceptance +{:.1}%, cu +{:.1}%)",
        ar_gain * 100.0,
        cu_gain * 100.0
    );

    let z = rank_sum_z(&abs_exhaustion, &bfs_exhaustion);
    assert!(
        z >= 1.645,
        "node-exhaustion dominance not significant at the 0.05 level (z = {z:.3})"
    );
    println!(
        "CRITERION 6: PASS — acceptance {abs_ar:.3} vs {bfs_ar:.3} (+{:.1}%), final cu {abs_cu:.3} vs {bfs_cu:.3} (+{:.1}%), exhaustion rank z = {z:.2}",
        ar_gain * 100.0,
        cu_gain * 100.0
    );
}

#[test]
fn criterion_7_metric_examples_reproduce_exactly() {
    let tolerance = 1e-9;
    let modes = [PnvlExponentSign::AsWritten, PnvlExponentSign::Corrected];
    for mode in modes {
        let cfg = FragConfig { pnvl_exponent_sign: mode, ..FragConfig::default() };

        // A node filled to its exact availability: the under-utilization
        // penalty vanishes and only the smoothing constant remains.
        let full = ServiceEntity::new(0, vec![10], vec![]).unwrap();
        let full_decision = MappingDecision {
            entity_id: 0,
            assignment: Assignment { placement: vec![NodeId(0)] },
            flows: BTreeMap::new(),
        };
        let got = nred(&full, &full_decision, &[10], &cfg).unwrap();
        assert!(relative_error(got, 1e6) <= tolerance, "nred {got} != 1e6");

        // Usage gap: two hosts with one cut link of bandwidth 2 between
        // them; the mean of the two per-node gaps, smoothing included.
        let pair = ServiceEntity::new(1, vec![4, 8], vec![(0, 1, 2)]).unwrap();
        let split = MappingDecision {
            entity_id: 1,
            assignment: Assignment { placement: vec![NodeId(0), NodeId(1)] },
            flows: [(LlId(0), Path { nodes: vec![NodeId(0), NodeId(1)] })].into_iter().collect(),
        };
        let got = cbug(&pair, &split, &[20, 20], &cfg).unwrap();
        let want = (4.0 / (2.0 + 1e-6) + 8.0 / (2.0 + 1e-6)) / 2.0;
        assert!(relative_error(got, want) <= tolerance, "cbug {got} != {want}");

        // Pure co-location: no tunnels at all, so the vacancy score is the
        // smoothing ratio exactly.
        let colocated = MappingDecision {
            entity_id: 1,
            assignment: Assignment { placement: vec![NodeId(0), NodeId(0)] },
            flows: BTreeMap::new(),
        };
        let got = pnvl(&pair, &colocated, &[20, 20], &cfg).unwrap();
        assert_eq!(got, 1e-3 / 1e-6, "empty-cut vacancy must be the smoothing ratio exactly");

        // One tunnel through a single forwarding node with residual 4: the
        // exponential scaling direction is the only mode difference.
        let relayed = MappingDecision {
            entity_id: 1,
            assignment: Assignment { placement: vec![NodeId(0), NodeId(2)] },
            flows: [(LlId(0), Path { nodes: vec![NodeId(0), NodeId(1), NodeId(2)] })]
                .into_iter()
                .collect(),
        };
        let got = pnvl(&pair, &relayed, &[20, 4, 20], &cfg).unwrap();
        let vacancy = 2.0 / (4.0 + 1e-6);
        let scaled = match mode {
            PnvlExponentSign::AsWritten => vacancy * 1f64.exp(),
            PnvlExponentSign::Corrected => vacancy / 1f64.exp(),
        };
        let want = (scaled + 1e-3) / (1.0 + 1e-6);
        assert!(relative_error(got, want) <= tolerance, "pnvl {got} != {want} ({mode:?})");

        // The reciprocal weighting, spot-checked through the packed scores.
        let scores = fitness(&full, &full_decision, &[10], &cfg).unwrap();
        assert!(relative_error(1.0 / scores.fitness, 0.6 * scores.nred + 0.3 * scores.cbug + 0.1 * scores.pnvl) <= tolerance);
    }

    // Half the arrivals accepted: the squared acceptance factor scales the
    // 70-unit margin down to 17.5.
    let params = ProfitParams::default();
    let got = profit(4, 2, 100, 60, &params);
    assert!(relative_error(got, 17.5) <= tolerance, "profit {got} != 17.5");
    let got = profit(4, 4, 100, 60, &params);
    assert!(relative_error(got, 70.0) <= tolerance, "profit {got} != 70");
    assert_eq!(profit(0, 0, 0, 0, &params), 0.0);

    println!("CRITERION 7: PASS — all metric examples exact to 1e-9 in both vacancy modes");
}

#[test]
fn criterion_8_deterministic_runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("run.json");
    std::fs::write(
        &config,
        r#"{
            "seed": 17,
            "solver": "abs",
            "topology": {"random": {"n_nodes": 12, "n_links": 24, "cpu_range": [60, 90], "bw_range": [60, 90]}},
            "workload": {"random": {"n_requests": 20, "arrival_rate": 0.2, "mean_lifetime": 40.0,
                "entity": {"size_range": [3, 7], "ll_density": 0.5, "demand_range": [1, 10]}}},
            "search": {"n_workers": 4, "swarm_size": 8, "max_iters": 8, "elite_size": 2,
                "local_archive_cap": 3, "archive_cap": 12}
        }"#,
    )
    .unwrap();
    let summaries: Vec<Vec<u8>> = ["a", "b"]
        .iter()
        .map(|tag| {
            let out = dir.path().join(tag);
            let status = std::process::Command::new(env!("CARGO_BIN_EXE_sem"))
                .args([
                    "run",
                    "--config",
                    config.to_str().unwrap(),
                    "--deterministic",
                    "--out",
                    out.to_str().unwrap(),
                ])
                .status()
                .expect("binary runs");
            assert!(status.success());
            std::fs::read(out.join("summary.json")).unwrap()
        })
        .collect();
    assert_eq!(summaries[0], summaries[1], "summary JSON differs between identical runs");
    assert!(!summaries[0].is_empty());
    println!("CRITERION 8: PASS — identical deterministic runs wrote byte-identical summaries");
}

#[test]
fn criterion_9_solve_time_scales_at_most_linearly_with_iterations() {
    let topology = generate_random_cpn(
        &CpnGenParams { n_nodes: 16, n_links: 32, cpu_range: (60, 90), bw_range: (60, 90) },
        0xACC9,
    )
    .unwrap();
    let table = PathTable::precompute(&topology, 5).unwrap();
    let entities: Vec<ServiceEntity> = (0..24)
        .map(|i| {
            generate_service_entity(
                i,
                &EntityGenParams { size_range: (4, 8), ll_density: 0.5, demand_range: (1, 6) },
                0x9000 + i,
            )
            .unwrap()
        })
        .collect();
    let frag = FragConfig::default();

    let mut points = Vec::new();
    let mut medians = Vec::new();
    for iters in [10usize, 20, 40] {
        let params = SearchParams { max_iters: iters, ..desk_search_params() };
        let mut times = Vec::new();
        for (i, entity) in entities.iter().enumerate() {
            let ctx = SearchContext {
                topology: &topology,
                entity,
                table: &table,
                params: &params,
                frag: &frag,
                tolerance: BalanceTolerance::default(),
                capacities: topology.cpu_available_vec(),
                ranking: None,
            };
            let opts = SolveOptions {
                seed: 0xBEE5 + i as u64,
                deterministic: true,
                init: InitStrategy::Frontier,
            };
            let started = Instant::now();
            let outcome = controller_solve(&ctx, &opts).unwrap();
            times.push(started.elapsed().as_secs_f64());
            assert!(outcome.decision.is_some(), "the scaling instances are all solvable");
        }
        let m = median(&times);
        medians.push(m);
        points.push(((iters as f64).ln(), m.ln()));
    }
    let (slope, r2) = linear_fit(&points);
    assert!(slope <= 1.15, "solve time grows superlinearly: slope {slope:.3}");
    assert!(r2 >= 0.9, "solve time is not explained by iteration count: R² {r2:.3}");
    println!(
        "CRITERION 9: PASS — medians {:.1?} ms for 10/20/40 iterations; log-log slope {slope:.3}, R² {r2:.3}",
        medians.iter().map(|m| m * 1e3).collect::<Vec<_>>()
    );
}

// ---------------------------------------------------------------------------
// Guard: the statistics helpers themselves
// ---------------------------------------------------------------------------

#[test]
fn helper_rank_sum_detects_a_clear_shift_and_not_a_tie() {
    let high: Vec<f64> = (0..80).map(|i| 10.0 + (i % 7) as f64).collect();
    let low: Vec<f64> = (0..80).map(|i| (i % 7) as f64).collect();
    assert!(rank_sum_z(&high, &low) > 1.645);
    assert!(rank_sum_z(&low, &high) < -1.645);
    let same: Vec<f64> = (0..80).map(|i| (i % 5) as f64).collect();
    assert!(rank_sum_z(&same, &same).abs() < 1.0);
}

#[test]
fn helper_linear_fit_recovers_a_known_line() {
    let points: Vec<(f64, f64)> = (1..=5).map(|i| (i as f64, 3.0 + 2.0 * i as f64)).collect();
    let (slope, r2) = linear_fit(&points);
    assert!((slope - 2.0).abs() < 1e-12);
    assert!((r2 - 1.0).abs() < 1e-12);
}

#[test]
fn helper_replay_matches_the_simulator_ledger() {
    // A tiny run where the baseline accepts everything: replay must agree
    // end to end with the simulator's own accounting.
    let topology = generate_random_cpn(
        &CpnGenParams { n_nodes: 6, n_links: 9, cpu_range: (50, 60), bw_range: (50, 60) },
        7,
    )
    .unwrap();
    let workload = generate_workload(
        &WorkloadParams {
            n_requests: 10,
            arrival_rate: 0.3,
            mean_lifetime: 15.0,
            entity: EntityGenParams { size_range: (2, 4), ll_density: 0.5, demand_range: (1, 5) },
        },
        7,
    )
    .unwrap();
    let output = run(
        Scenario {
            topology: topology.clone(),
            workload: workload.clone(),
            profit: ProfitParams::default(),
            k_paths: 4,
            base_seed: 7,
            collect_traces: false,
        },
        &mut RwBfsSolver,
    )
    .unwrap();
    let (violations, scores, conserved) = replay(&topology, &workload, &output);
    assert_eq!(violations, 0);
    assert!(conserved);
    assert_eq!(scores.len(), output.decisions.len());
}

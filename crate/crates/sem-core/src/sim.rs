//! Online discrete-event simulation of request arrivals and departures.
//!
//! The simulator owns the live substrate. Each arriving request is handed to
//! the configured solver together with the current availability state; an
//! accepted decision is debited through the validating ledger
//! ([`crate::decision::allocate`]) and credited back when the request's
//! lifetime expires. Rejections leave the substrate untouched and are never
//! retried. A metrics snapshot is appended after every arrival; departures
//! update state silently and show up in the next snapshot.
//!
//! Event order is deterministic: nondecreasing time, departures before
//! arrivals at equal timestamps (freeing resources for the incoming
//! request), then request id. A panicking solver loses that one request —
//! the arrival is counted as rejected, the panic is logged, and the run
//! continues.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BinaryHeap};
use std::io::{BufRead, Write};
use std::panic::{catch_unwind, AssertUnwindSafe};

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::baseline::{rw_bfs_map, rw_rank, RW_DAMPING, RW_ITERATIONS};
use crate::decision::{allocate, cost, release, revenue, MappingDecision};
use crate::frag::FragConfig;
use crate::model::{
    generate_service_entity, CpnTopology, EntityGenParams, ModelError, ProfitParams, RequestId,
    ServiceEntity,
};
use crate::partition::BalanceTolerance;
use crate::routing::PathTable;
use crate::search::{
    controller_solve, InitStrategy, SearchContext, SearchParams, SearchTrace, SolveOptions,
};

#[derive(Debug, Error)]
pub enum SimError {
    #[error("simulation contract violated: {0}")]
    Contract(String),
    #[error("workload I/O failed: {0}")]
    Io(#[from] std::io::Error),
    #[error("workload line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

// ---------------------------------------------------------------------------
// Workload
// ---------------------------------------------------------------------------

/// One scheduled request: the entity plus its arrival and holding times.
#[derive(Debug, Clone, PartialEq)]
pub struct WorkloadRequest {
    pub id: RequestId,
    pub arrival_time: f64,
    pub lifetime: f64,
    pub entity: ServiceEntity,
}

/// The workload file line format: entity fields inlined next to the timing.
#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RequestLine {
    id: u64,
    arrival_time: f64,
    lifetime: f64,
    sfs: Vec<SfLine>,
    lls: Vec<LlLine>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SfLine {
    id: u32,
    cpu: u64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct LlLine {
    u: u32,
    v: u32,
    bw: u64,
}

/// Workload generation parameters: Poisson arrivals (exponential gaps) and
/// exponential lifetimes around the configured means.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct WorkloadParams {
    pub n_requests: usize,
    /// Arrival events per unit time (mean gap = 1/rate).
    pub arrival_rate: f64,
    pub mean_lifetime: f64,
    pub entity: EntityGenParams,
}

impl Default for WorkloadParams {
    fn default() -> Self {
        WorkloadParams {
            n_requests: 300,
            arrival_rate: 0.1,
            mean_lifetime: 500.0,
            entity: EntityGenParams { size_range: (5, 15), ll_density: 0.5, demand_range: (1, 20) },
        }
    }
}

/// Draws a timed request sequence, sorted by construction and deterministic
/// per seed.
pub fn generate_workload(params: &WorkloadParams, seed: u64) -> Result<Vec<WorkloadRequest>, SimError> {
    if params.arrival_rate <= 0.0 || params.mean_lifetime <= 0.0 {
        return Err(SimError::Contract("arrival rate and mean lifetime must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let gaps = Exp::new(params.arrival_rate)
        .map_err(|e| SimError::Contract(format!("bad arrival rate: {e}")))?;
    let lifetimes = Exp::new(1.0 / params.mean_lifetime)
        .map_err(|e| SimError::Contract(format!("bad lifetime mean: {e}")))?;
    let mut t = 0.0;
    let mut out = Vec::with_capacity(params.n_requests);
    for id in 0..params.n_requests as u64 {
        t += gaps.sample(&mut rng);
        let lifetime = lifetimes.sample(&mut rng);
        let entity = generate_service_entity(id, &params.entity, rng.random())
            .map_err(|e| SimError::Contract(e.to_string()))?;
        out.push(WorkloadRequest { id, arrival_time: t, lifetime, entity });
    }
    Ok(out)
}

/// Writes one JSON object per line.
pub fn write_workload(w: &mut impl Write, workload: &[WorkloadRequest]) -> Result<(), SimError> {
    for req in workload {
        let line = RequestLine {
            id: req.id,
            arrival_time: req.arrival_time,
            lifetime: req.lifetime,
            sfs: req.entity.sfs().iter().map(|s| SfLine { id: s.id.0, cpu: s.cpu_demand }).collect(),
            lls: req
                .entity
                .lls()
                .iter()
                .map(|l| LlLine { u: l.u.0, v: l.w.0, bw: l.bw_demand })
                .collect(),
        };
        serde_json::to_writer(&mut *w, &line)
            .map_err(|e| SimError::Contract(format!("workload serialization failed: {e}")))?;
        writeln!(w)?;
    }
    Ok(())
}

/// Parses a workload file, rebuilding each entity and revalidating its
/// invariants. SF ids must be dense and in order.
pub fn read_workload(r: impl BufRead) -> Result<Vec<WorkloadRequest>, SimError> {
    let mut out = Vec::new();
    for (i, line) in r.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let parsed: RequestLine = serde_json::from_str(&line)
            .map_err(|e| SimError::Parse { line: i + 1, msg: e.to_string() })?;
        for (k, sf) in parsed.sfs.iter().enumerate() {
            if sf.id as usize != k {
                return Err(SimError::Parse {
                    line: i + 1,
                    msg: format!("SF ids must be dense and ordered; found {} at position {k}", sf.id),
                });
            }
        }
        let entity = ServiceEntity::new(
            parsed.id,
            parsed.sfs.iter().map(|s| s.cpu).collect(),
            parsed.lls.iter().map(|l| (l.u, l.v, l.bw)).collect(),
        )
        .map_err(|e: ModelError| SimError::Parse { line: i + 1, msg: e.to_string() })?;
        if !(parsed.arrival_time.is_finite() && parsed.lifetime.is_finite() && parsed.lifetime >= 0.0) {
            return Err(SimError::Parse { line: i + 1, msg: "non-finite or negative timing".into() });
        }
        out.push(WorkloadRequest {
            id: parsed.id,
            arrival_time: parsed.arrival_time,
            lifetime: parsed.lifetime,
            entity,
        });
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Solvers
// ---------------------------------------------------------------------------

/// What a solver hands back for one request.
pub struct SolveOutput {
    pub decision: Option<MappingDecision>,
    /// Search diagnostics, when the solver produces any.
    pub trace: Option<SearchTrace>,
}

/// A per-request mapper invoked against the live substrate state.
pub trait RequestSolver {
    fn name(&self) -> &'static str;
    fn solve(
        &mut self,
        topology: &CpnTopology,
        table: &PathTable,
        entity: &ServiceEntity,
        request_seed: u64,
    ) -> SolveOutput;
}

/// The swarm-search solver.
pub struct AbsSolver {
    pub params: SearchParams,
    pub frag: FragConfig,
    pub tolerance: BalanceTolerance,
    pub init: InitStrategy,
    pub deterministic: bool,
}

impl RequestSolver for AbsSolver {
    fn name(&self) -> &'static str {
        "abs"
    }

    fn solve(
        &mut self,
        topology: &CpnTopology,
        table: &PathTable,
        entity: &ServiceEntity,
        request_seed: u64,
    ) -> SolveOutput {
        let ranking = matches!(self.init, InitStrategy::RankedBfs)
            .then(|| rw_rank(topology, RW_DAMPING, RW_ITERATIONS));
        let ctx = SearchContext {
            topology,
            entity,
            table,
            params: &self.params,
            frag: &self.frag,
            tolerance: self.tolerance,
            capacities: topology.cpu_available_vec(),
            ranking: ranking.as_ref(),
        };
        let opts = SolveOptions { seed: request_seed, deterministic: self.deterministic, init: self.init };
        match controller_solve(&ctx, &opts) {
            Ok(outcome) => SolveOutput { decision: outcome.decision, trace: Some(outcome.trace) },
            Err(e) => {
                log::error!("search refused request {}: {e}", entity.id);
                SolveOutput { decision: None, trace: None }
            }
        }
    }
}

/// The ranked breadth-first baseline mapper.
pub struct RwBfsSolver;

impl RequestSolver for RwBfsSolver {
    fn name(&self) -> &'static str {
        "rwbfs"
    }

    fn solve(
        &mut self,
        topology: &CpnTopology,
        table: &PathTable,
        entity: &ServiceEntity,
        _request_seed: u64,
    ) -> SolveOutput {
        let ranking = rw_rank(topology, RW_DAMPING, RW_ITERATIONS);
        SolveOutput { decision: rw_bfs_map(entity, topology, &ranking, table), trace: None }
    }
}

/// Stable per-request seed derivation (SplitMix64 over base ^ id).
pub fn request_seed(base: u64, req_id: u64) -> u64 {
    let mut z = base ^ req_id.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

// ---------------------------------------------------------------------------
// Metrics
// ---------------------------------------------------------------------------

/// Aggregate state a snapshot is computed from.
#[derive(Debug, Clone, Copy, Default)]
pub struct MetricsInput {
    pub arrived: u64,
    pub accepted: u64,
    pub cum_revenue: u64,
    pub cum_cost: u64,
    pub cpu_used: u64,
    pub cpu_capacity: u64,
}

/// The metric suite evaluated at one instant.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricsSnapshot {
    pub t: f64,
    pub arrived: u64,
    pub accepted: u64,
    pub acceptance_ratio: f64,
    pub cum_revenue: u64,
    /// Cumulative revenue per unit time up to `t`.
    pub lt_avg_revenue: f64,
    pub profit: f64,
    /// Share of initial CPU capacity currently in use.
    pub cu_ratio: f64,
    /// Cumulative revenue over cumulative cost.
    pub rc_ratio: f64,
    /// Long-term form of the revenue/cost ratio; equals `rc_ratio` at any
    /// finite snapshot since both use the same cumulative sums.
    pub lt_rc_ratio: f64,
}

/// Evaluates every metric from the aggregate counters. Ratios with empty
/// denominators are 0 by definition.
pub fn compute_metrics(input: &MetricsInput, t: f64, profit_params: &ProfitParams) -> MetricsSnapshot {
    let ratio = |num: f64, den: f64| if den > 0.0 { num / den } else { 0.0 };
    let acceptance_ratio = ratio(input.accepted as f64, input.arrived as f64);
    let rc_ratio = ratio(input.cum_revenue as f64, input.cum_cost as f64);
    MetricsSnapshot {
        t,
        arrived: input.arrived,
        accepted: input.accepted,
        acceptance_ratio,
        cum_revenue: input.cum_revenue,
        lt_avg_revenue: ratio(input.cum_revenue as f64, t),
        profit: crate::decision::profit(
            input.arrived,
            input.accepted,
            input.cum_revenue,
            input.cum_cost,
            profit_params,
        ),
        cu_ratio: ratio(input.cpu_used as f64, input.cpu_capacity as f64),
        rc_ratio,
        lt_rc_ratio: rc_ratio,
    }
}

// ---------------------------------------------------------------------------
// Event loop
// ---------------------------------------------------------------------------

/// A run specification: substrate, timed workload, and economic parameters.
pub struct Scenario {
    pub topology: CpnTopology,
    pub workload: Vec<WorkloadRequest>,
    pub profit: ProfitParams,
    pub k_paths: usize,
    /// Base for the per-request solver seeds.
    pub base_seed: u64,
    /// Retain per-request search traces in the output.
    pub collect_traces: bool,
}

/// Per-arrival output row (one per request, in arrival order).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RequestRecord {
    pub req_id: u64,
    pub t: f64,
    pub accepted: bool,
    /// Revenue realized from this request (0 when rejected).
    pub revenue: u64,
    /// Mapping cost frozen at acceptance time (0 when rejected).
    pub cost: u64,
    pub cum_acceptance: f64,
    pub lt_ar: f64,
    pub profit: f64,
    pub cu_ratio: f64,
    pub rc_ratio: f64,
    pub lt_rc_ratio: f64,
}

/// An accepted decision with its service window, for later replay.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DecisionRecord {
    pub req_id: u64,
    pub arrival_time: f64,
    pub departure_time: f64,
    pub decision: MappingDecision,
}

/// Everything a run produces.
pub struct RunOutput {
    pub snapshots: Vec<MetricsSnapshot>,
    pub records: Vec<RequestRecord>,
    pub decisions: Vec<DecisionRecord>,
    pub traces: Vec<(u64, SearchTrace)>,
    /// Whether the substrate returned to full availability after the drain.
    pub conservation_ok: bool,
    pub solver_panics: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum EventClass {
    Departure = 0,
    Arrival = 1,
}

#[derive(Debug, Clone, Copy)]
struct EventKey {
    time: f64,
    class: EventClass,
    req: u64,
}

impl PartialEq for EventKey {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for EventKey {}
impl PartialOrd for EventKey {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for EventKey {
    // BinaryHeap is a max-heap; invert so the earliest event pops first.
    fn cmp(&self, other: &Self) -> Ordering {
        self.time
            .total_cmp(&other.time)
            .then((self.class as u8).cmp(&(other.class as u8)))
            .then(self.req.cmp(&other.req))
            .reverse()
    }
}

/// Runs the full event loop to exhaustion (all departures drained).
pub fn run(mut scenario: Scenario, solver: &mut dyn RequestSolver) -> Result<RunOutput, SimError> {
    if scenario.k_paths == 0 {
        return Err(SimError::Contract("k_paths must be positive".into()));
    }
    if scenario.workload.windows(2).any(|w| w[0].arrival_time > w[1].arrival_time) {
        return Err(SimError::Contract("workload must be sorted by arrival time".into()));
    }
    let table = PathTable::precompute(&scenario.topology, scenario.k_paths)
        .map_err(|e| SimError::Contract(e.to_string()))?;
    let by_id: BTreeMap<u64, usize> =
        scenario.workload.iter().enumerate().map(|(i, r)| (r.id, i)).collect();
    if by_id.len() != scenario.workload.len() {
        return Err(SimError::Contract("duplicate request ids in workload".into()));
    }

    let mut heap: BinaryHeap<EventKey> = scenario
        .workload
        .iter()
        .map(|r| EventKey { time: r.arrival_time, class: EventClass::Arrival, req: r.id })
        .collect();

    let cpu_capacity = scenario.topology.total_cpu_capacity();
    let mut resident: BTreeMap<RequestId, MappingDecision> = BTreeMap::new();
    let mut arrived = 0u64;
    let mut accepted = 0u64;
    let mut cum_revenue = 0u64;
    let mut cum_cost = 0u64;
    let mut solver_panics = 0u64;
    let mut out = RunOutput {
        snapshots: Vec::new(),
        records: Vec::new(),
        decisions: Vec::new(),
        traces: Vec::new(),
        conservation_ok: false,
        solver_panics: 0,
    };

    while let Some(ev) = heap.pop() {
        let req = &scenario.workload[by_id[&ev.req]];
        match ev.class {
            EventClass::Departure => {
                let decision = resident
                    .remove(&ev.req)
                    .ok_or_else(|| SimError::Contract(format!("departure for non-resident request {}", ev.req)))?;
                release(&mut scenario.topology, &req.entity, &decision)
                    .map_err(|e| SimError::Contract(format!("release failed for request {}: {e}", ev.req)))?;
            }
            EventClass::Arrival => {
                arrived += 1;
                let seed = request_seed(scenario.base_seed, ev.req);
                let solved = catch_unwind(AssertUnwindSafe(|| {
                    solver.solve(&scenario.topology, &table, &req.entity, seed)
                }));
                let output = match solved {
                    Ok(o) => o,
                    Err(_) => {
                        solver_panics += 1;
                        log::error!("solver panicked on request {}; counting it rejected", ev.req);
                        SolveOutput { decision: None, trace: None }
                    }
                };
                if scenario.collect_traces {
                    if let Some(trace) = output.trace {
                        out.traces.push((ev.req, trace));
                    }
                }
                let mut req_revenue = 0u64;
                let mut req_cost = 0u64;
                let mut was_accepted = false;
                if let Some(decision) = output.decision {
                    match allocate(&mut scenario.topology, &req.entity, &decision) {
                        Ok(()) => {
                            was_accepted = true;
                            accepted += 1;
                            req_revenue = revenue(&req.entity);
                            req_cost = cost(&req.entity, &decision)
                                .map_err(|e| SimError::Contract(e.to_string()))?;
                            cum_revenue += req_revenue;
                            cum_cost += req_cost;
                            let departure_time = req.arrival_time + req.lifetime;
                            out.decisions.push(DecisionRecord {
                                req_id: ev.req,
                                arrival_time: req.arrival_time,
                                departure_time,
                                decision: decision.clone(),
                            });
                            resident.insert(ev.req, decision);
                            heap.push(EventKey {
                                time: departure_time,
                                class: EventClass::Departure,
                                req: ev.req,
                            });
                        }
                        Err(e) => {
                            // A solver emitting an invalid decision is a defect,
                            // but the run must survive it like a panic.
                            solver_panics += 1;
                            log::error!("solver produced an invalid decision for request {}: {e}", ev.req);
                        }
                    }
                }
                let input = MetricsInput {
                    arrived,
                    accepted,
                    cum_revenue,
                    cum_cost,
                    cpu_used: scenario.topology.cpu_used(),
                    cpu_capacity,
                };
                let snap = compute_metrics(&input, ev.time, &scenario.profit);
                out.records.push(RequestRecord {
                    req_id: ev.req,
                    t: ev.time,
                    accepted: was_accepted,
                    revenue: req_revenue,
                    cost: req_cost,
                    cum_acceptance: snap.acceptance_ratio,
                    lt_ar: snap.lt_avg_revenue,
                    profit: snap.profit,
                    cu_ratio: snap.cu_ratio,
                    rc_ratio: snap.rc_ratio,
                    lt_rc_ratio: snap.lt_rc_ratio,
                });
                out.snapshots.push(snap);
            }
        }
    }

    out.conservation_ok = scenario.topology.cpu_used() == 0 && scenario.topology.bw_used() == 0;
    out.solver_panics = solver_panics;
    Ok(out)
}

/// Renders the per-request records as CSV (stable column order, shortest
/// round-trip float formatting).
pub fn render_metrics_csv(records: &[RequestRecord]) -> String {
    let mut s = String::from(
        "req_id,t,accepted,revenue,cost,cum_acceptance,lt_ar,profit,cu_ratio,rc_ratio,lt_rc_ratio\n",
    );
    for r in records {
        s.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{}\n",
            r.req_id,
            r.t,
            r.accepted,
            r.revenue,
            r.cost,
            r.cum_acceptance,
            r.lt_ar,
            r.profit,
            r.cu_ratio,
            r.rc_ratio,
            r.lt_rc_ratio
        ));
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::decision::validate_decision;
    use crate::model::NodeId;

    fn tiny_topology() -> CpnTopology {
        CpnTopology::new(vec![10, 10], vec![(0, 1, 20)]).unwrap()
    }

    fn request(id: u64, at: f64, lifetime: f64, cpus: Vec<u64>, lls: Vec<(u32, u32, u64)>) -> WorkloadRequest {
        WorkloadRequest { id, arrival_time: at, lifetime, entity: ServiceEntity::new(id, cpus, lls).unwrap() }
    }

    fn scenario(topology: CpnTopology, workload: Vec<WorkloadRequest>) -> Scenario {
        Scenario {
            topology,
            workload,
            profit: ProfitParams::default(),
            k_paths: 3,
            base_seed: 0,
            collect_traces: false,
        }
    }

    fn abs_solver() -> AbsSolver {
        AbsSolver {
            params: SearchParams {
                n_workers: 2,
                swarm_size: 5,
                max_iters: 5,
                elite_size: 2,
                local_archive_cap: 3,
                archive_cap: 8,
                archive_protect_best: false,
            },
            frag: FragConfig::default(),
            tolerance: BalanceTolerance::default(),
            init: InitStrategy::Frontier,
            deterministic: true,
        }
    }

    struct RejectAll;
    impl RequestSolver for RejectAll {
        fn name(&self) -> &'static str {
            "reject-all"
        }
        fn solve(&mut self, _: &CpnTopology, _: &PathTable, _: &ServiceEntity, _: u64) -> SolveOutput {
            SolveOutput { decision: None, trace: None }
        }
    }

    struct PanicOnFirst {
        inner: RwBfsSolver,
        panicked: bool,
    }
    impl RequestSolver for PanicOnFirst {
        fn name(&self) -> &'static str {
            "panic-on-first"
        }
        fn solve(
            &mut self,
            topology: &CpnTopology,
            table: &PathTable,
            entity: &ServiceEntity,
            seed: u64,
        ) -> SolveOutput {
            if !self.panicked {
                self.panicked = true;
                panic!("synthetic solver failure");
            }
            self.inner.solve(topology, table, entity, seed)
        }
    }

    /// Delegates but rejects a strict superset (every even request id).
    struct Dominated<S: RequestSolver>(S);
    impl<S: RequestSolver> RequestSolver for Dominated<S> {
        fn name(&self) -> &'static str {
            "dominated"
        }
        fn solve(
            &mut self,
            topology: &CpnTopology,
            table: &PathTable,
            entity: &ServiceEntity,
            seed: u64,
        ) -> SolveOutput {
            if entity.id % 2 == 0 {
                return SolveOutput { decision: None, trace: None };
            }
            self.0.solve(topology, table, entity, seed)
        }
    }

    #[test]
    fn empty_workload_yields_empty_trace() {
        let out = run(scenario(tiny_topology(), vec![]), &mut RwBfsSolver).unwrap();
        assert!(out.snapshots.is_empty());
        assert!(out.records.is_empty());
        assert!(out.conservation_ok);
    }

    #[test]
    fn single_fitting_request_lives_and_leaves() {
        let workload = vec![request(0, 1.0, 5.0, vec![4, 3], vec![(0, 1, 2)])];
        let out = run(scenario(tiny_topology(), workload), &mut RwBfsSolver).unwrap();
        assert_eq!(out.snapshots.len(), 1);
        let snap = &out.snapshots[0];
        assert_eq!(snap.acceptance_ratio, 1.0);
        assert_eq!(snap.cum_revenue, 4 + 3 + 2);
        assert!(snap.cu_ratio > 0.0);
        assert!(out.conservation_ok, "full drain must restore the substrate exactly");
        assert_eq!(out.decisions.len(), 1);
    }

    #[test]
    fn rejecting_stub_accepts_nothing_and_touches_nothing() {
        let workload = vec![
            request(0, 1.0, 5.0, vec![1], vec![]),
            request(1, 2.0, 5.0, vec![1], vec![]),
        ];
        let out = run(scenario(tiny_topology(), workload), &mut RejectAll).unwrap();
        assert!(out.snapshots.iter().all(|s| s.acceptance_ratio == 0.0));
        assert!(out.snapshots.iter().all(|s| s.cu_ratio == 0.0));
        assert!(out.conservation_ok);
        assert!(out.decisions.is_empty());
    }

    #[test]
    fn solver_panic_counts_as_rejection_and_run_continues() {
        let workload = vec![
            request(0, 1.0, 5.0, vec![2], vec![]),
            request(1, 2.0, 5.0, vec![2], vec![]),
        ];
        let mut solver = PanicOnFirst { inner: RwBfsSolver, panicked: false };
        let out = run(scenario(tiny_topology(), workload), &mut solver).unwrap();
        assert_eq!(out.solver_panics, 1);
        assert!(!out.records[0].accepted);
        assert!(out.records[1].accepted);
        assert!(out.conservation_ok);
    }

    #[test]
    fn departures_at_equal_time_precede_arrivals() {
        // Request 0 occupies the whole substrate until t=5; request 1 arrives
        // exactly at t=5 and only fits if the departure is processed first.
        let topology = CpnTopology::new(vec![4, 0], vec![(0, 1, 5)]).unwrap();
        let workload = vec![
            request(0, 1.0, 4.0, vec![4], vec![]),
            request(1, 5.0, 1.0, vec![4], vec![]),
        ];
        let out = run(scenario(topology, workload), &mut RwBfsSolver).unwrap();
        assert!(out.records[1].accepted, "the freed capacity must be visible at the same timestamp");
    }

    #[test]
    fn dominated_solver_never_raises_acceptance() {
        let workload = generate_workload(
            &WorkloadParams {
                n_requests: 12,
                arrival_rate: 0.5,
                mean_lifetime: 4.0,
                entity: EntityGenParams { size_range: (1, 3), ll_density: 0.5, demand_range: (1, 4) },
            },
            7,
        )
        .unwrap();
        let full = run(scenario(tiny_topology(), workload.clone()), &mut RwBfsSolver).unwrap();
        let dominated = run(scenario(tiny_topology(), workload), &mut Dominated(RwBfsSolver)).unwrap();
        for (a, b) in full.snapshots.iter().zip(&dominated.snapshots) {
            assert!(b.acceptance_ratio <= a.acceptance_ratio + 1e-12);
        }
    }

    #[test]
    fn monotone_cumulative_metrics() {
        let workload = generate_workload(&WorkloadParams {
            n_requests: 15,
            arrival_rate: 0.3,
            mean_lifetime: 6.0,
            entity: EntityGenParams { size_range: (1, 4), ll_density: 0.5, demand_range: (1, 5) },
        }, 3)
        .unwrap();
        let out = run(scenario(tiny_topology(), workload), &mut RwBfsSolver).unwrap();
        for pair in out.snapshots.windows(2) {
            assert!(pair[1].cum_revenue >= pair[0].cum_revenue);
            assert!(pair[1].t >= pair[0].t);
        }
        assert!(out.conservation_ok);
    }

    #[test]
    fn abs_solver_accepts_and_validates_on_a_small_run() {
        let topology = CpnTopology::new(vec![12, 10, 8], vec![(0, 1, 30), (1, 2, 30), (0, 2, 30)]).unwrap();
        let workload = generate_workload(&WorkloadParams {
            n_requests: 6,
            arrival_rate: 0.2,
            mean_lifetime: 10.0,
            entity: EntityGenParams { size_range: (2, 5), ll_density: 0.6, demand_range: (1, 5) },
        }, 11)
        .unwrap();
        let reference = topology.clone();
        let entities: BTreeMap<u64, ServiceEntity> =
            workload.iter().map(|r| (r.id, r.entity.clone())).collect();
        let mut solver = abs_solver();
        let out = run(
            Scenario {
                topology,
                workload,
                profit: ProfitParams::default(),
                k_paths: 3,
                base_seed: 42,
                collect_traces: true,
            },
            &mut solver,
        )
        .unwrap();
        assert!(out.snapshots.last().unwrap().accepted > 0, "the swarm should map something");
        for d in &out.decisions {
            assert!(validate_decision(&reference, &entities[&d.req_id], &d.decision).is_ok());
        }
        assert!(out.conservation_ok);
        assert_eq!(out.traces.len(), out.snapshots.len(), "every arrival leaves a search trace");
        assert_eq!(out.solver_panics, 0);
    }

    #[test]
    fn metric_definitions_match_hand_computation() {
        let p = ProfitParams::default();
        let m = compute_metrics(
            &MetricsInput { arrived: 4, accepted: 2, cum_revenue: 100, cum_cost: 60, cpu_used: 5, cpu_capacity: 20 },
            10.0,
            &p,
        );
        assert!((m.profit - 17.5).abs() < 1e-9 * 17.5);
        assert!((m.cu_ratio - 0.25).abs() < 1e-12);
        assert!((m.acceptance_ratio - 0.5).abs() < 1e-12);
        assert!((m.lt_avg_revenue - 10.0).abs() < 1e-12);

        let even = compute_metrics(
            &MetricsInput { arrived: 1, accepted: 1, cum_revenue: 9, cum_cost: 9, cpu_used: 0, cpu_capacity: 20 },
            1.0,
            &p,
        );
        assert!((even.rc_ratio - 1.0).abs() < 1e-12);
        assert_eq!(even.rc_ratio.to_bits(), even.lt_rc_ratio.to_bits());

        let zero = compute_metrics(&MetricsInput::default(), 0.0, &p);
        assert_eq!(zero.acceptance_ratio, 0.0);
        assert_eq!(zero.lt_avg_revenue, 0.0);
        assert_eq!(zero.profit, 0.0);
        assert_eq!(zero.rc_ratio, 0.0);
    }

    #[test]
    fn workload_generation_hits_the_configured_rates() {
        let params = WorkloadParams {
            n_requests: 10_000,
            arrival_rate: 0.1,
            mean_lifetime: 500.0,
            entity: EntityGenParams { size_range: (1, 1), ll_density: 0.0, demand_range: (1, 1) },
        };
        let workload = generate_workload(&params, 99).unwrap();
        let gaps: Vec<f64> = std::iter::once(workload[0].arrival_time)
            .chain(workload.windows(2).map(|w| w[1].arrival_time - w[0].arrival_time))
            .collect();
        let mean_gap = gaps.iter().sum::<f64>() / gaps.len() as f64;
        assert!((mean_gap - 10.0).abs() / 10.0 < 0.05, "mean gap {mean_gap} too far from 10");
        let mean_life = workload.iter().map(|r| r.lifetime).sum::<f64>() / workload.len() as f64;
        assert!((mean_life - 500.0).abs() / 500.0 < 0.05, "mean lifetime {mean_life} too far from 500");
        assert!(workload.windows(2).all(|w| w[0].arrival_time <= w[1].arrival_time));
    }

    #[test]
    fn workload_round_trips_through_the_line_format() {
        let params = WorkloadParams {
            n_requests: 8,
            arrival_rate: 0.2,
            mean_lifetime: 20.0,
            entity: EntityGenParams { size_range: (2, 4), ll_density: 0.7, demand_range: (1, 6) },
        };
        let workload = generate_workload(&params, 5).unwrap();
        let mut buf = Vec::new();
        write_workload(&mut buf, &workload).unwrap();
        let parsed = read_workload(&buf[..]).unwrap();
        assert_eq!(parsed, workload);
    }

    #[test]
    fn workload_parser_reports_line_numbers() {
        let bad = b"{\"id\":0,\"arrival_time\":1.0,\"lifetime\":2.0,\"sfs\":[{\"id\":1,\"cpu\":3}],\"lls\":[]}\n";
        match read_workload(&bad[..]) {
            Err(SimError::Parse { line: 1, .. }) => {}
            other => panic!("expected a line-1 parse error, got {other:?}"),
        }
        let unknown = b"{\"id\":0,\"arrival_time\":1.0,\"lifetime\":2.0,\"sfs\":[],\"lls\":[],\"extra\":1}\n";
        assert!(matches!(read_workload(&unknown[..]), Err(SimError::Parse { line: 1, .. })));
    }

    #[test]
    fn unsorted_workload_is_refused() {
        let workload = vec![
            request(0, 5.0, 1.0, vec![1], vec![]),
            request(1, 2.0, 1.0, vec![1], vec![]),
        ];
        assert!(matches!(
            run(scenario(tiny_topology(), workload), &mut RejectAll),
            Err(SimError::Contract(_))
        ));
    }

    #[test]
    fn decision_records_serialize_to_json_lines() {
        let decision = MappingDecision {
            entity_id: 3,
            assignment: crate::decision::Assignment { placement: vec![NodeId(0), NodeId(1)] },
            flows: [(
                crate::model::LlId(0),
                crate::decision::Path { nodes: vec![NodeId(0), NodeId(1)] },
            )]
            .into_iter()
            .collect(),
        };
        let record =
            DecisionRecord { req_id: 3, arrival_time: 1.5, departure_time: 4.5, decision };
        let json = serde_json::to_string(&record).unwrap();
        let back: DecisionRecord = serde_json::from_str(&json).unwrap();
        assert_eq!(back.decision, record.decision);
        assert_eq!(back.req_id, 3);
    }

    #[test]
    fn csv_rendering_is_stable() {
        let workload = vec![request(0, 1.0, 5.0, vec![4, 3], vec![(0, 1, 2)])];
        let out = run(scenario(tiny_topology(), workload), &mut RwBfsSolver).unwrap();
        let csv = render_metrics_csv(&out.records);
        let mut lines = csv.lines();
        assert_eq!(
            lines.next().unwrap(),
            "req_id,t,accepted,revenue,cost,cum_acceptance,lt_ar,profit,cu_ratio,rc_ratio,lt_rc_ratio"
        );
        let row = lines.next().unwrap();
        assert!(row.starts_with("0,1,true,9,"), "unexpected row: {row}");
    }

    #[test]
    fn request_seeds_differ_per_request_and_base() {
        assert_ne!(request_seed(1, 0), request_seed(1, 1));
        assert_ne!(request_seed(1, 5), request_seed(2, 5));
        assert_eq!(request_seed(9, 9), request_seed(9, 9));
    }
}

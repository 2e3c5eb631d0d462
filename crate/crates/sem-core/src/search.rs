//! The bilevel swarm search over proportion-weight vectors.
//!
//! The outer layer is a distributed particle swarm: each worker evolves a
//! swarm whose particles carry a free-form non-negative position over the
//! substrate nodes. Decoding a particle masks the position to its `dimension`
//! largest components, normalizes that into a proportion-weight vector, runs
//! the inner partitioner ([`crate::partition`]) and tunnel router
//! ([`crate::routing`]), and scores the resulting decision with the
//! fragmentation fitness ([`crate::frag`]). Successful decodes shrink the
//! particle's active dimension by one, progressively focusing the search.
//!
//! A controller keeps a bounded elite archive. Workers report new personal
//! bests; when a worker's elite set stagnates it requests guidance and merges
//! the reply into a local archive that joins its elites as the guidance pool
//! for the velocity update:
//!
//! ```text
//! v' = r1 * v + r2 * (e - x) + phi * r3 * (mean - x)      (per dimension)
//! ```
//!
//! with `e` one random pool member, `mean` the component-wise pool average,
//! fresh uniform draws `r1, r2, r3` per dimension, and `phi = 1 - t / T`
//! fading the mean term out over the run. Velocities clamp to [-1, 1],
//! positions to non-negative.
//!
//! Two execution modes share all of the above: a deterministic single-thread
//! round-robin (worker 0..N each iteration, controller inline) and a threaded
//! mode with real message passing.

use std::collections::BTreeSet;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::mpsc;

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::baseline::{rw_bfs_map, NodeRanking};
use crate::decision::{cut_links, validate_decision, MappingDecision};
use crate::frag::{fitness, FragConfig};
use crate::model::{CpnTopology, NodeId, ServiceEntity};
use crate::partition::{
    partition_heuristic, pwv_from_assignment, BalanceTolerance, ProportionWeightVector,
};
use crate::routing::{map_cut_links, PathTable};

/// Swarm and archive sizing. These are search hyperparameters; the
/// per-request seed and execution mode arrive separately in
/// [`SolveOptions`].
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SearchParams {
    pub n_workers: usize,
    pub swarm_size: usize,
    pub max_iters: usize,
    pub elite_size: usize,
    pub local_archive_cap: usize,
    pub archive_cap: usize,
    /// When set, random archive replacement never lands on the current best.
    pub archive_protect_best: bool,
}

impl Default for SearchParams {
    fn default() -> Self {
        SearchParams {
            n_workers: 4,
            swarm_size: 20,
            max_iters: 50,
            elite_size: 5,
            local_archive_cap: 5,
            archive_cap: 20,
            archive_protect_best: false,
        }
    }
}

impl SearchParams {
    pub fn validate(&self) -> Result<(), SearchError> {
        if self.n_workers == 0 || self.swarm_size == 0 || self.max_iters == 0 {
            return Err(SearchError::Contract("workers, swarm and iterations must be positive".into()));
        }
        if self.elite_size == 0 || self.elite_size >= self.swarm_size {
            return Err(SearchError::Contract(format!(
                "elite size {} must be in 1..swarm size {}",
                self.elite_size, self.swarm_size
            )));
        }
        if self.local_archive_cap == 0 || self.archive_cap == 0 {
            return Err(SearchError::Contract("archive capacities must be positive".into()));
        }
        Ok(())
    }
}

/// How the swarm is seeded.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum InitStrategy {
    /// Frontier growth from a resource-weighted random seed node.
    #[serde(rename = "default")]
    Frontier,
    /// Adopt the ranked-BFS baseline mapping, then jitter (falls back to
    /// frontier growth when the baseline itself rejects).
    #[serde(rename = "rwbfs")]
    RankedBfs,
}

/// Per-call execution options.
#[derive(Debug, Clone)]
pub struct SolveOptions {
    pub seed: u64,
    /// Single-threaded round-robin scheduling; bitwise reproducible.
    pub deterministic: bool,
    pub init: InitStrategy,
}

#[derive(Debug, Error)]
pub enum SearchError {
    #[error("search contract violated: {0}")]
    Contract(String),
}

/// Everything a solve needs to see, frozen for its duration.
pub struct SearchContext<'a> {
    pub topology: &'a CpnTopology,
    pub entity: &'a ServiceEntity,
    pub table: &'a PathTable,
    pub params: &'a SearchParams,
    pub frag: &'a FragConfig,
    pub tolerance: BalanceTolerance,
    /// Per-node available CPU at solve time (the decode capacity view).
    pub capacities: Vec<u64>,
    /// Node ranking for [`InitStrategy::RankedBfs`]; ignored otherwise.
    pub ranking: Option<&'a NodeRanking>,
}

/// An archived candidate: guidance position plus the decision it decodes to.
#[derive(Debug, Clone)]
pub struct ArchiveParticle {
    pub position: Vec<f64>,
    pub decision: MappingDecision,
    pub fitness: f64,
}

/// Search log entries, emitted in message-arrival order.
#[derive(Debug, Clone, Serialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum TraceEvent {
    Best { worker: usize, iter: usize, fitness: f64, kept: bool },
    Guidance { worker: usize, iter: usize, granted: bool },
    Terminate { worker: usize },
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct SearchTrace {
    pub events: Vec<TraceEvent>,
}

/// Result of one solve: the selected decision (if any feasible candidate was
/// ever archived), its fitness, and the message log.
#[derive(Debug, Clone)]
pub struct SolveOutcome {
    pub decision: Option<MappingDecision>,
    pub fitness: Option<f64>,
    pub trace: SearchTrace,
}

// ---------------------------------------------------------------------------
// Controller archive
// ---------------------------------------------------------------------------

struct Archive {
    entries: Vec<(ArchiveParticle, u64)>,
    cap: usize,
    protect_best: bool,
    rng: ChaCha8Rng,
    next_seq: u64,
}

impl Archive {
    fn new(cap: usize, protect_best: bool, seed: u64) -> Self {
        Archive { entries: Vec::new(), cap, protect_best, rng: ChaCha8Rng::seed_from_u64(seed), next_seq: 0 }
    }

    /// Insert under capacity; over capacity, draw a random slot and replace
    /// it only when the newcomer is strictly fitter. Returns whether the
    /// particle was kept.
    fn offer(&mut self, p: ArchiveParticle) -> bool {
        if self.entries.len() < self.cap {
            self.entries.push((p, self.next_seq));
            self.next_seq += 1;
            return true;
        }
        let mut slot = self.rng.random_range(0..self.entries.len());
        if self.protect_best {
            if let Some(best) = self.best_index() {
                if slot == best && self.entries.len() > 1 {
                    // Redraw over the remaining slots, skipping the best.
                    slot = self.rng.random_range(0..self.entries.len() - 1);
                    if slot >= best {
                        slot += 1;
                    }
                }
            }
        }
        if p.fitness < self.entries[slot].0.fitness {
            self.entries[slot] = (p, self.next_seq);
            self.next_seq += 1;
            true
        } else {
            false
        }
    }

    fn sample(&mut self) -> Option<ArchiveParticle> {
        if self.entries.is_empty() {
            return None;
        }
        let i = self.rng.random_range(0..self.entries.len());
        Some(self.entries[i].0.clone())
    }

    fn best_index(&self) -> Option<usize> {
        (0..self.entries.len()).min_by(|&a, &b| {
            self.entries[a]
                .0
                .fitness
                .total_cmp(&self.entries[b].0.fitness)
                .then(self.entries[a].1.cmp(&self.entries[b].1))
        })
    }

    /// Minimum fitness; ties resolve to the earliest-inserted entry.
    fn best(&self) -> Option<&ArchiveParticle> {
        self.best_index().map(|i| &self.entries[i].0)
    }
}

// ---------------------------------------------------------------------------
// Worker <-> controller messaging
// ---------------------------------------------------------------------------

/// The worker's view of the controller.
trait GuidanceChannel {
    fn send_best(&mut self, worker: usize, iter: usize, p: ArchiveParticle);
    fn request_guidance(&mut self, worker: usize, iter: usize) -> Option<ArchiveParticle>;
    fn terminate(&mut self, worker: usize);
}

/// Deterministic mode: the worker talks to the archive in place.
struct DirectChannel<'a> {
    archive: &'a mut Archive,
    trace: &'a mut SearchTrace,
}

impl GuidanceChannel for DirectChannel<'_> {
    fn send_best(&mut self, worker: usize, iter: usize, p: ArchiveParticle) {
        let fitness = p.fitness;
        let kept = self.archive.offer(p);
        self.trace.events.push(TraceEvent::Best { worker, iter, fitness, kept });
    }

    fn request_guidance(&mut self, worker: usize, iter: usize) -> Option<ArchiveParticle> {
        let reply = self.archive.sample();
        self.trace.events.push(TraceEvent::Guidance { worker, iter, granted: reply.is_some() });
        reply
    }

    fn terminate(&mut self, worker: usize) {
        self.trace.events.push(TraceEvent::Terminate { worker });
    }
}

enum WorkerMsg {
    Best { worker: usize, iter: usize, particle: ArchiveParticle },
    Guidance { worker: usize, iter: usize },
    Terminate { worker: usize },
}

/// Threaded mode: messages over mpsc, replies over a per-worker channel.
struct ThreadChannel<'a> {
    tx: &'a mpsc::Sender<WorkerMsg>,
    reply_rx: &'a mpsc::Receiver<Option<ArchiveParticle>>,
}

impl GuidanceChannel for ThreadChannel<'_> {
    fn send_best(&mut self, worker: usize, iter: usize, p: ArchiveParticle) {
        let _ = self.tx.send(WorkerMsg::Best { worker, iter, particle: p });
    }

    fn request_guidance(&mut self, worker: usize, iter: usize) -> Option<ArchiveParticle> {
        if self.tx.send(WorkerMsg::Guidance { worker, iter }).is_err() {
            return None;
        }
        self.reply_rx.recv().unwrap_or(None)
    }

    fn terminate(&mut self, worker: usize) {
        let _ = self.tx.send(WorkerMsg::Terminate { worker });
    }
}

// ---------------------------------------------------------------------------
// Particles and decoding
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
struct Particle {
    id: usize,
    position: Vec<f64>,
    velocity: Vec<f64>,
    /// Active dimension for top-n masking; shrinks on successful decodes.
    dimension: usize,
    solution: Option<(MappingDecision, f64)>,
}

impl Particle {
    fn fitness(&self) -> Option<f64> {
        self.solution.as_ref().map(|(_, f)| *f)
    }
}

/// Keeps the `n` largest components (ties to the lower index), zeroing the
/// rest. The result is raw mass, not yet normalized.
fn top_n_mask(position: &[f64], n: usize) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..position.len()).collect();
    idx.sort_by(|&a, &b| position[b].total_cmp(&position[a]).then(a.cmp(&b)));
    let mut out = vec![0.0; position.len()];
    for &i in idx.iter().take(n) {
        out[i] = position[i];
    }
    out
}

/// The fading weight of the pool-mean pull: 1 at the start, 0 at the last
/// iteration.
fn mean_pull_weight(iter: usize, max_iters: usize) -> f64 {
    1.0 - iter as f64 / max_iters as f64
}

/// Decodes a position into a full decision: mask, normalize, partition,
/// route, score. `None` when any stage is infeasible.
fn decode_position(ctx: &SearchContext, position: &[f64], dimension: usize, seed: u64) -> Option<(MappingDecision, f64)> {
    let masked = top_n_mask(position, dimension);
    let pwv = ProportionWeightVector::normalized(
        masked.iter().enumerate().map(|(i, &w)| (NodeId(i as u32), w)),
    )?;
    let outcome = partition_heuristic(ctx.entity, &pwv, ctx.tolerance, &ctx.capacities, seed).ok()?;
    let cut = cut_links(ctx.entity, &outcome.assignment).ok()?;
    let flows = map_cut_links(ctx.topology, ctx.entity, &cut, &outcome.assignment.placement, ctx.table).ok()?;
    let decision = MappingDecision { entity_id: ctx.entity.id, assignment: outcome.assignment, flows };
    let scores = fitness(ctx.entity, &decision, &ctx.capacities, ctx.frag).ok()?;
    Some((decision, scores.fitness))
}

// ---------------------------------------------------------------------------
// Swarm initialization
// ---------------------------------------------------------------------------

/// Weighted draw over a sorted candidate set; weight = available CPU.
fn weighted_pick(candidates: &BTreeSet<NodeId>, capacities: &[u64], rng: &mut ChaCha8Rng) -> Option<NodeId> {
    let total: u64 = candidates.iter().map(|&n| capacities[n.index()]).sum();
    if total == 0 {
        return None;
    }
    let mut ticket = rng.random_range(0..total);
    for &n in candidates {
        let w = capacities[n.index()];
        if ticket < w {
            return Some(n);
        }
        ticket -= w;
    }
    unreachable!("ticket is always below the total weight")
}

/// Proportions over a chosen node set, weighted by available CPU, written
/// into a dense position vector.
fn dense_proportions(chosen: &BTreeSet<NodeId>, capacities: &[u64], n_nodes: usize) -> Vec<f64> {
    let total: u64 = chosen.iter().map(|&n| capacities[n.index()]).sum();
    let mut rho = vec![0.0; n_nodes];
    if total == 0 {
        return rho;
    }
    for &n in chosen {
        rho[n.index()] = capacities[n.index()] as f64 / total as f64;
    }
    rho
}

/// One frontier-grown particle: seed a resourced node, breadth-first extend
/// the chosen set through resourced neighbors (drained nodes are kept as
/// relays and expanded through when everything else dries up), attempting a
/// partition after every growth step, then route the first placement that
/// sticks.
fn init_frontier_particle(ctx: &SearchContext, rng: &mut ChaCha8Rng, id: usize) -> Particle {
    let n_nodes = ctx.topology.n_nodes();
    let target = n_nodes.min(ctx.entity.n_sfs());
    let blank = |position: Vec<f64>| Particle {
        id,
        velocity: vec![0.0; n_nodes],
        dimension: n_nodes,
        solution: None,
        position,
    };

    let all: BTreeSet<NodeId> = (0..n_nodes as u32).map(NodeId).collect();
    let Some(seed_node) = weighted_pick(&all, &ctx.capacities, rng) else {
        return blank(vec![0.0; n_nodes]); // fully drained substrate
    };

    let mut chosen = BTreeSet::from([seed_node]);
    let mut current: BTreeSet<NodeId> = BTreeSet::new(); // resourced frontier
    let mut next: BTreeSet<NodeId> = BTreeSet::new(); // next ring
    let mut relays: BTreeSet<NodeId> = BTreeSet::new(); // drained nodes held back
    let mut seen = vec![false; n_nodes];
    seen[seed_node.index()] = true;
    let absorb = |m: NodeId, seen: &mut Vec<bool>, target: &mut BTreeSet<NodeId>, relays: &mut BTreeSet<NodeId>| {
        for &(nbr, _) in ctx.topology.neighbors(m) {
            if seen[nbr.index()] {
                continue;
            }
            seen[nbr.index()] = true;
            if ctx.capacities[nbr.index()] > 0 {
                target.insert(nbr);
            } else {
                relays.insert(nbr);
            }
        }
    };
    absorb(seed_node, &mut seen, &mut current, &mut relays);

    let mut last_rho = dense_proportions(&chosen, &ctx.capacities, n_nodes);
    let try_chosen = |chosen: &BTreeSet<NodeId>, rng: &mut ChaCha8Rng, last_rho: &mut Vec<f64>| {
        *last_rho = dense_proportions(chosen, &ctx.capacities, n_nodes);
        let pwv = ProportionWeightVector::normalized(
            chosen.iter().map(|&n| (n, ctx.capacities[n.index()] as f64)),
        )?;
        partition_heuristic(ctx.entity, &pwv, ctx.tolerance, &ctx.capacities, rng.random()).ok()
    };

    let mut found = try_chosen(&chosen, rng, &mut last_rho);
    while found.is_none() && chosen.len() < target {
        if current.is_empty() {
            if !next.is_empty() {
                current = std::mem::take(&mut next);
            } else if !relays.is_empty() {
                // Everything resourced dried up: expand through the drained
                // relays one more ring out.
                let ring = std::mem::take(&mut relays);
                for &r in &ring {
                    absorb(r, &mut seen, &mut next, &mut relays);
                }
                continue;
            } else {
                break;
            }
        }
        let Some(pick) = weighted_pick(&current, &ctx.capacities, rng) else {
            break;
        };
        current.remove(&pick);
        chosen.insert(pick);
        absorb(pick, &mut seen, &mut next, &mut relays);
        found = try_chosen(&chosen, rng, &mut last_rho);
    }

    let mut particle = blank(last_rho);
    if let Some(outcome) = found {
        if let Ok(cut) = cut_links(ctx.entity, &outcome.assignment) {
            if let Ok(flows) =
                map_cut_links(ctx.topology, ctx.entity, &cut, &outcome.assignment.placement, ctx.table)
            {
                let decision =
                    MappingDecision { entity_id: ctx.entity.id, assignment: outcome.assignment, flows };
                if let Ok(scores) = fitness(ctx.entity, &decision, &ctx.capacities, ctx.frag) {
                    particle.solution = Some((decision, scores.fitness));
                }
            }
        }
    }
    particle
}

/// Swarm seeded from the ranked-BFS baseline: particle 0 adopts its decision
/// outright, the rest jitter its proportions and re-decode. A deterministic
/// baseline would otherwise freeze the whole guidance update (every pool
/// difference vanishes).
fn init_ranked_bfs_swarm(ctx: &SearchContext, rng: &mut ChaCha8Rng) -> Option<Vec<Particle>> {
    let ranking = ctx.ranking?;
    let base = rw_bfs_map(ctx.entity, ctx.topology, ranking, ctx.table)?;
    let scores = fitness(ctx.entity, &base, &ctx.capacities, ctx.frag).ok()?;
    let pwv = pwv_from_assignment(ctx.entity, &base.assignment).ok()?;
    let n_nodes = ctx.topology.n_nodes();
    let mut rho = vec![0.0; n_nodes];
    for (&n, &w) in pwv.weights() {
        rho[n.index()] = w;
    }

    let mut swarm = Vec::with_capacity(ctx.params.swarm_size);
    swarm.push(Particle {
        id: 0,
        position: rho.clone(),
        velocity: vec![0.0; n_nodes],
        dimension: n_nodes,
        solution: Some((base, scores.fitness)),
    });
    for id in 1..ctx.params.swarm_size {
        let mut jittered = rho.clone();
        for w in jittered.iter_mut() {
            if *w > 0.0 {
                *w *= rng.random_range(0.5..1.5);
            }
        }
        let total: f64 = jittered.iter().sum();
        for w in jittered.iter_mut() {
            *w /= total;
        }
        let solution = decode_position(ctx, &jittered, n_nodes, rng.random());
        swarm.push(Particle { id, position: jittered, velocity: vec![0.0; n_nodes], dimension: n_nodes, solution });
    }
    Some(swarm)
}

// ---------------------------------------------------------------------------
// Worker
// ---------------------------------------------------------------------------

struct Worker {
    id: usize,
    swarm: Vec<Particle>,
    local_archive: Vec<ArchiveParticle>,
    la_cap: usize,
    rng: ChaCha8Rng,
    gbest: Option<f64>,
    prev_elites: Option<Vec<(usize, Option<u64>)>>,
    iter: usize,
}

impl Worker {
    fn new(ctx: &SearchContext, id: usize, seed: u64, init: InitStrategy) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let swarm = match init {
            InitStrategy::RankedBfs => init_ranked_bfs_swarm(ctx, &mut rng)
                .unwrap_or_else(|| frontier_swarm(ctx, &mut rng)),
            InitStrategy::Frontier => frontier_swarm(ctx, &mut rng),
        };
        Worker {
            id,
            swarm,
            local_archive: Vec::new(),
            la_cap: ctx.params.local_archive_cap,
            rng,
            gbest: None,
            prev_elites: None,
            iter: 0,
        }
    }

    /// Swarm indices sorted ascending by fitness; solutionless particles
    /// last, ties by particle id.
    fn ranked(&self) -> Vec<usize> {
        let mut idx: Vec<usize> = (0..self.swarm.len()).collect();
        idx.sort_by(|&a, &b| {
            let (pa, pb) = (&self.swarm[a], &self.swarm[b]);
            match (pa.fitness(), pb.fitness()) {
                (Some(fa), Some(fb)) => fa.total_cmp(&fb).then(pa.id.cmp(&pb.id)),
                (Some(_), None) => std::cmp::Ordering::Less,
                (None, Some(_)) => std::cmp::Ordering::Greater,
                (None, None) => pa.id.cmp(&pb.id),
            }
        });
        idx
    }

    /// One search iteration: rank, report a new global best, detect elite
    /// stagnation (requesting guidance when it happens), evolve the common
    /// set. Returns `false` once all iterations are spent.
    fn run_iteration(&mut self, ctx: &SearchContext, chan: &mut dyn GuidanceChannel) -> bool {
        if self.iter >= ctx.params.max_iters {
            return false;
        }
        self.iter += 1;
        let ranked = self.ranked();
        let elite_count = ctx.params.elite_size.min(ranked.len());
        let (elites, commons) = ranked.split_at(elite_count);

        // New personal best? Clone it to the controller.
        let best = &self.swarm[ranked[0]];
        if let Some(f) = best.fitness() {
            if self.gbest.is_none_or(|g| f < g) {
                self.gbest = Some(f);
                let (decision, _) = best.solution.clone().expect("fitness implies a solution");
                chan.send_best(
                    self.id,
                    self.iter,
                    ArchiveParticle { position: best.position.clone(), decision, fitness: f },
                );
            }
        }

        // Elite stagnation: identical (id, fitness) sequence as last
        // iteration, with at least one real fitness present.
        let signature: Vec<(usize, Option<u64>)> = elites
            .iter()
            .map(|&i| (self.swarm[i].id, self.swarm[i].fitness().map(f64::to_bits)))
            .collect();
        let stagnant = self.prev_elites.as_ref() == Some(&signature)
            && signature.iter().any(|(_, f)| f.is_some());
        if stagnant {
            if let Some(guidance) = chan.request_guidance(self.id, self.iter) {
                self.merge_guidance(guidance);
            }
        }
        self.prev_elites = Some(signature);

        // Guidance pool: elite positions plus the local archive.
        let pool: Vec<Vec<f64>> = elites
            .iter()
            .map(|&i| self.swarm[i].position.clone())
            .chain(self.local_archive.iter().map(|a| a.position.clone()))
            .collect();
        let dims = ctx.topology.n_nodes();
        let mut mean = vec![0.0; dims];
        for p in &pool {
            for (m, &x) in mean.iter_mut().zip(p) {
                *m += x;
            }
        }
        for m in mean.iter_mut() {
            *m /= pool.len() as f64;
        }
        let phi = mean_pull_weight(self.iter, ctx.params.max_iters);

        for &ci in commons {
            let exemplar = pool[self.rng.random_range(0..pool.len())].clone();
            let p = &mut self.swarm[ci];
            for d in 0..dims {
                let (r1, r2, r3) = (self.rng.random::<f64>(), self.rng.random::<f64>(), self.rng.random::<f64>());
                let v = r1 * p.velocity[d] + r2 * (exemplar[d] - p.position[d]) + phi * r3 * (mean[d] - p.position[d]);
                p.velocity[d] = v.clamp(-1.0, 1.0);
                p.position[d] = (p.position[d] + p.velocity[d]).max(0.0);
            }
            let decode_seed = self.rng.random();
            if let Some((decision, f)) = decode_position(ctx, &p.position, p.dimension, decode_seed) {
                p.solution = Some((decision, f));
                p.dimension = (p.dimension - 1).max(1);
            }
            // Infeasible decodes keep the previous solution and dimension.
        }

        if self.iter == ctx.params.max_iters {
            chan.terminate(self.id);
            return false;
        }
        true
    }

    /// Local-archive merge: grow under capacity, otherwise replace the worst
    /// member only when the newcomer is strictly fitter.
    fn merge_guidance(&mut self, guidance: ArchiveParticle) {
        if self.local_archive.len() < self.la_cap {
            self.local_archive.push(guidance);
            return;
        }
        if let Some(worst) = (0..self.local_archive.len())
            .max_by(|&a, &b| self.local_archive[a].fitness.total_cmp(&self.local_archive[b].fitness))
        {
            if guidance.fitness < self.local_archive[worst].fitness {
                self.local_archive[worst] = guidance;
            }
        }
    }
}

fn frontier_swarm(ctx: &SearchContext, rng: &mut ChaCha8Rng) -> Vec<Particle> {
    (0..ctx.params.swarm_size).map(|id| init_frontier_particle(ctx, rng, id)).collect()
}

// ---------------------------------------------------------------------------
// Controller
// ---------------------------------------------------------------------------

/// Runs the full bilevel search for one entity against a frozen substrate
/// view. Returns a rejection (no decision) when nothing feasible was ever
/// found.
pub fn controller_solve(ctx: &SearchContext, opts: &SolveOptions) -> Result<SolveOutcome, SearchError> {
    ctx.params.validate()?;
    ctx.frag.validate().map_err(|e| SearchError::Contract(e.to_string()))?;
    if ctx.capacities.len() != ctx.topology.n_nodes() {
        return Err(SearchError::Contract("capacity view does not match the topology".into()));
    }

    let mut seeder = ChaCha8Rng::seed_from_u64(opts.seed);
    let worker_seeds: Vec<u64> = (0..ctx.params.n_workers).map(|_| seeder.random()).collect();
    let archive_seed: u64 = seeder.random();
    let mut archive = Archive::new(ctx.params.archive_cap, ctx.params.archive_protect_best, archive_seed);
    let mut trace = SearchTrace::default();

    if opts.deterministic {
        let mut workers: Vec<Worker> = worker_seeds
            .iter()
            .enumerate()
            .map(|(id, &seed)| Worker::new(ctx, id, seed, opts.init))
            .collect();
        for _ in 0..ctx.params.max_iters {
            for w in workers.iter_mut() {
                let mut chan = DirectChannel { archive: &mut archive, trace: &mut trace };
                w.run_iteration(ctx, &mut chan);
            }
        }
    } else {
        let (tx, rx) = mpsc::channel::<WorkerMsg>();
        let mut reply_txs = Vec::new();
        std::thread::scope(|scope| {
            for (id, &seed) in worker_seeds.iter().enumerate() {
                let (reply_tx, reply_rx) = mpsc::channel::<Option<ArchiveParticle>>();
                reply_txs.push(reply_tx);
                let tx = tx.clone();
                let init = opts.init;
                scope.spawn(move || {
                    let outcome = catch_unwind(AssertUnwindSafe(|| {
                        let mut worker = Worker::new(ctx, id, seed, init);
                        let mut chan = ThreadChannel { tx: &tx, reply_rx: &reply_rx };
                        while worker.run_iteration(ctx, &mut chan) {}
                    }));
                    if outcome.is_err() {
                        // A crashed worker still counts as terminated so the
                        // run can finish with whatever was archived.
                        log::warn!("search worker {id} crashed; treating as terminated");
                        let _ = tx.send(WorkerMsg::Terminate { worker: id });
                    }
                });
            }
            drop(tx);

            let mut terminated = 0;
            while terminated < ctx.params.n_workers {
                match rx.recv() {
                    Ok(WorkerMsg::Best { worker, iter, particle }) => {
                        let fitness = particle.fitness;
                        let kept = archive.offer(particle);
                        trace.events.push(TraceEvent::Best { worker, iter, fitness, kept });
                    }
                    Ok(WorkerMsg::Guidance { worker, iter }) => {
                        let reply = archive.sample();
                        trace.events.push(TraceEvent::Guidance { worker, iter, granted: reply.is_some() });
                        let _ = reply_txs[worker].send(reply);
                    }
                    Ok(WorkerMsg::Terminate { worker }) => {
                        trace.events.push(TraceEvent::Terminate { worker });
                        terminated += 1;
                    }
                    Err(_) => {
                        log::warn!("all search workers disconnected early");
                        break;
                    }
                }
            }
        });
    }

    let best = archive.best();
    let outcome = SolveOutcome {
        fitness: best.map(|b| b.fitness),
        decision: best.map(|b| b.decision.clone()),
        trace,
    };
    if let Some(d) = &outcome.decision {
        debug_assert!(validate_decision(ctx.topology, ctx.entity, d).is_ok());
    }
    Ok(outcome)
}

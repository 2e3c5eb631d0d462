//! The comparison baseline: rank substrate nodes by a damped random-walk
//! over available resources, then map each entity breadth-first onto the
//! highest-ranked nodes that still fit, preferring to co-locate with the
//! BFS parent. Fully deterministic.

use std::collections::VecDeque;

use crate::decision::{cut_links, Assignment, MappingDecision};
use crate::model::{CpnTopology, NodeId, ServiceEntity};
use crate::routing::{map_cut_links, PathTable};

pub const RW_DAMPING: f64 = 0.85;
pub const RW_ITERATIONS: usize = 50;

/// Stationary-ish scores plus the node order they induce (descending score,
/// ties by id).
#[derive(Debug, Clone)]
pub struct NodeRanking {
    pub scores: Vec<f64>,
    pub order: Vec<NodeId>,
}

/// Power iteration of a resource-weighted random walk. A node's mass is its
/// available CPU times the available bandwidth of its incident links; walk
/// transitions favor heavy neighbors, and `damping` blends the walk with a
/// restart on the mass distribution.
pub fn rw_rank(topology: &CpnTopology, damping: f64, iterations: usize) -> NodeRanking {
    let n = topology.n_nodes();
    let mass: Vec<f64> = topology
        .nodes()
        .iter()
        .map(|node| {
            let incident_bw: u64 = topology
                .neighbors(node.id)
                .iter()
                .map(|&(_, l)| topology.link(l).bw_available)
                .sum();
            node.cpu_available as f64 * incident_bw as f64
        })
        .collect();
    let total_mass: f64 = mass.iter().sum();
    let restart: Vec<f64> = if total_mass > 0.0 {
        mass.iter().map(|m| m / total_mass).collect()
    } else {
        vec![1.0 / n as f64; n]
    };

    let mut scores = restart.clone();
    let mut next = vec![0.0; n];
    for _ in 0..iterations {
        for (i, slot) in next.iter_mut().enumerate() {
            *slot = (1.0 - damping) * restart[i];
        }
        for u in 0..n {
            let nbrs = topology.neighbors(NodeId(u as u32));
            let nbr_mass: f64 = nbrs.iter().map(|&(v, _)| mass[v.index()]).sum();
            if nbr_mass > 0.0 {
                for &(v, _) in nbrs {
                    next[v.index()] += damping * scores[u] * mass[v.index()] / nbr_mass;
                }
            } else {
                // Every neighbor is drained (or there are none): the walker
                // restarts instead of stepping, so drained nodes never
                // accumulate walk mass.
                for (i, slot) in next.iter_mut().enumerate() {
                    *slot += damping * scores[u] * restart[i];
                }
            }
        }
        std::mem::swap(&mut scores, &mut next);
    }

    let mut order: Vec<NodeId> = (0..n as u32).map(NodeId).collect();
    order.sort_by(|&a, &b| scores[b.index()].total_cmp(&scores[a.index()]).then(a.cmp(&b)));
    NodeRanking { scores, order }
}

/// Maps an entity by walking it breadth-first from its highest-demand SF.
/// Each SF lands on its BFS parent's node when the CPU still fits, otherwise
/// on the highest-ranked node with room; tunnels are then routed greedily.
/// Returns `None` when placement or routing fails anywhere.
pub fn rw_bfs_map(
    entity: &ServiceEntity,
    topology: &CpnTopology,
    ranking: &NodeRanking,
    table: &PathTable,
) -> Option<MappingDecision> {
    let n = entity.n_sfs();
    let adj = entity.adjacency();
    let start = entity
        .sfs()
        .iter()
        .max_by(|a, b| a.cpu_demand.cmp(&b.cpu_demand).then(b.id.cmp(&a.id)))
        .expect("entities are never empty")
        .id;

    // BFS order with parents; neighbors enqueued heaviest-demand first.
    let mut visited = vec![false; n];
    let mut order: Vec<(crate::model::SfId, Option<crate::model::SfId>)> = Vec::with_capacity(n);
    let mut queue = VecDeque::from([(start, None)]);
    visited[start.index()] = true;
    while let Some((sf, parent)) = queue.pop_front() {
        order.push((sf, parent));
        let mut nbrs: Vec<crate::model::SfId> = adj[sf.index()]
            .iter()
            .filter(|(v, _)| !visited[v.index()])
            .map(|&(v, _)| v)
            .collect();
        nbrs.sort_by(|&a, &b| {
            entity
                .sf(b)
                .cpu_demand
                .cmp(&entity.sf(a).cpu_demand)
                .then(a.cmp(&b))
        });
        for v in nbrs {
            visited[v.index()] = true;
            queue.push_back((v, Some(sf)));
        }
    }

    let mut residual = topology.cpu_available_vec();
    let mut placement = vec![NodeId(0); n];
    for (sf, parent) in order {
        let demand = entity.sf(sf).cpu_demand;
        let parent_node = parent.map(|p| placement[p.index()]);
        let chosen = parent_node
            .filter(|&p| residual[p.index()] >= demand)
            .or_else(|| {
                ranking
                    .order
                    .iter()
                    .copied()
                    .find(|&m| residual[m.index()] >= demand)
            })?;
        residual[chosen.index()] -= demand;
        placement[sf.index()] = chosen;
    }

    let assignment = Assignment { placement };
    let cut = cut_links(entity, &assignment).ok()?;
    let flows = map_cut_links(topology, entity, &cut, &assignment.placement, table).ok()?;
    Some(MappingDecision { entity_id: entity.id, assignment, flows })
}

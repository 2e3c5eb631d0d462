//! Mapping decisions and everything that judges them: cut-link extraction,
//! revenue/cost/profit, feasibility validation against a substrate, and the
//! allocate/release ledger that debits and credits resources exactly.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{CpnTopology, LinkId, LlId, NodeId, ProfitParams, RequestId, ServiceEntity, SfId};

/// A total placement: `placement[sf.index()]` is the computing node hosting
/// that service function. Co-location (several SFs on one node) is allowed.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Assignment {
    pub placement: Vec<NodeId>,
}

impl Assignment {
    pub fn node_of(&self, sf: SfId) -> Option<NodeId> {
        self.placement.get(sf.index()).copied()
    }
}

/// A loop-free substrate path, stored as its node sequence. Link identity is
/// recovered against a topology when needed.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Path {
    pub nodes: Vec<NodeId>,
}

impl Path {
    pub fn n_links(&self) -> usize {
        self.nodes.len().saturating_sub(1)
    }

    pub fn first(&self) -> Option<NodeId> {
        self.nodes.first().copied()
    }

    pub fn last(&self) -> Option<NodeId> {
        self.nodes.last().copied()
    }

    /// Resolves consecutive node pairs to link ids, or reports the first
    /// defect (unknown node, repeated node, non-adjacent hop) as text.
    pub fn link_ids(&self, topology: &CpnTopology) -> Result<Vec<LinkId>, String> {
        if self.nodes.len() < 2 {
            return Err("path has fewer than two nodes".into());
        }
        let mut seen = vec![false; topology.n_nodes()];
        for &n in &self.nodes {
            if n.index() >= topology.n_nodes() {
                return Err(format!("unknown node {n}"));
            }
            if seen[n.index()] {
                return Err(format!("node {n} repeats"));
            }
            seen[n.index()] = true;
        }
        let mut out = Vec::with_capacity(self.nodes.len() - 1);
        for w in self.nodes.windows(2) {
            match topology.link_between(w[0], w[1]) {
                Some(l) => out.push(l),
                None => return Err(format!("no link between {} and {}", w[0], w[1])),
            }
        }
        Ok(out)
    }

    pub fn reversed(&self) -> Path {
        let mut nodes = self.nodes.clone();
        nodes.reverse();
        Path { nodes }
    }
}

/// A complete mapping of one entity: the placement plus one tunnel per cut
/// logical link (a logical link whose endpoints land on different nodes).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MappingDecision {
    pub entity_id: RequestId,
    pub assignment: Assignment,
    /// Keyed by logical-link id; deterministic iteration order.
    pub flows: BTreeMap<LlId, Path>,
}

/// Contract misuse distinct from infeasibility (e.g. an assignment whose
/// length does not match the entity).
#[derive(Debug, Error)]
#[error("decision contract violated: {0}")]
pub struct ContractError(pub String);

/// Logical links whose endpoint SFs are placed on distinct nodes, in id
/// order. These are exactly the links that need tunnels.
pub fn cut_links(entity: &ServiceEntity, assignment: &Assignment) -> Result<Vec<LlId>, ContractError> {
    if assignment.placement.len() != entity.n_sfs() {
        return Err(ContractError(format!(
            "assignment covers {} sfs, entity has {}",
            assignment.placement.len(),
            entity.n_sfs()
        )));
    }
    Ok(entity
        .lls()
        .iter()
        .filter(|l| assignment.placement[l.u.index()] != assignment.placement[l.w.index()])
        .map(|l| l.id)
        .collect())
}

/// Revenue of accepting the entity: total CPU demand plus total bandwidth
/// demand, independent of where anything lands.
pub fn revenue(entity: &ServiceEntity) -> u64 {
    entity.total_cpu_demand() + entity.total_bw_demand()
}

/// Cost of a decision: total CPU demand plus, per tunnel, path length in
/// links times the logical link's bandwidth demand. Co-located logical links
/// cost nothing on the network side.
pub fn cost(entity: &ServiceEntity, decision: &MappingDecision) -> Result<u64, ContractError> {
    let mut total = entity.total_cpu_demand();
    for (&ll, path) in &decision.flows {
        if ll.index() >= entity.lls().len() {
            return Err(ContractError(format!("flow references unknown {ll}")));
        }
        total += path.n_links() as u64 * entity.ll(ll).bw_demand;
    }
    Ok(total)
}

/// Long-term profit shaping: `(accepted / arrived)^exponent *
/// (cum_revenue - cost_weight * cum_cost)`. Zero before any arrival.
pub fn profit(arrived: u64, accepted: u64, cum_revenue: u64, cum_cost: u64, params: &ProfitParams) -> f64 {
    if arrived == 0 {
        return 0.0;
    }
    let ratio = accepted as f64 / arrived as f64;
    ratio.powf(params.exponent) * (cum_revenue as f64 - params.cost_weight * cum_cost as f64)
}

/// One broken feasibility constraint. `constraint_index` gives the stable
/// 1..=6 numbering of the mapping feasibility contract:
/// 1 placement totality, 2 vacuous hosting bound (never violated by
/// construction), 3 node CPU capacity, 4 tunnel multiplicity, 5 tunnel
/// endpoint/path coherence, 6 link bandwidth capacity.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum Violation {
    /// An SF with no (or an unknown) hosting node.
    UnplacedSf { sf: SfId },
    /// Aggregate CPU demand on a node exceeds its availability.
    NodeCapacity { node: NodeId, demand: u64, available: u64 },
    /// A cut logical link with no tunnel.
    MissingFlow { ll: LlId },
    /// A tunnel for a logical link whose endpoints are co-located.
    SpuriousFlow { ll: LlId },
    /// Tunnel endpoints differ from where the logical link's SFs sit.
    TunnelEndpoints { ll: LlId },
    /// The tunnel's node sequence is not a simple substrate path.
    MalformedPath { ll: LlId, why: String },
    /// Aggregate bandwidth demand on a link exceeds its availability.
    LinkCapacity { link: LinkId, demand: u64, available: u64 },
}

impl Violation {
    pub fn constraint_index(&self) -> u8 {
        match self {
            Violation::UnplacedSf { .. } => 1,
            Violation::NodeCapacity { .. } => 3,
            Violation::MissingFlow { .. } => 4,
            Violation::SpuriousFlow { .. } => 5,
            Violation::TunnelEndpoints { .. } => 5,
            Violation::MalformedPath { .. } => 5,
            Violation::LinkCapacity { .. } => 6,
        }
    }
}

/// Outcome of validating a decision against the substrate's current
/// availability. Empty means feasible.
#[derive(Debug, Clone, Default, Serialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks an arbitrary decision against the entity and the substrate's
/// current availability, reporting every violated constraint. Never mutates.
pub fn validate_decision(
    topology: &CpnTopology,
    entity: &ServiceEntity,
    decision: &MappingDecision,
) -> ValidationReport {
    let mut report = ValidationReport::default();
    let placement = &decision.assignment.placement;

    for sf in entity.sfs() {
        match placement.get(sf.id.index()) {
            Some(n) if n.index() < topology.n_nodes() => {}
            _ => report.violations.push(Violation::UnplacedSf { sf: sf.id }),
        }
    }

    // Node CPU loads, counting only validly placed SFs.
    let mut node_load: BTreeMap<NodeId, u64> = BTreeMap::new();
    for sf in entity.sfs() {
        if let Some(&n) = placement.get(sf.id.index()) {
            if n.index() < topology.n_nodes() {
                *node_load.entry(n).or_default() += sf.cpu_demand;
            }
        }
    }
    for (&node, &demand) in &node_load {
        let available = topology.node(node).cpu_available;
        if demand > available {
            report.violations.push(Violation::NodeCapacity { node, demand, available });
        }
    }

    // Tunnel coverage: every cut link exactly once, nothing else. If the
    // placement is partial the cut set is unknowable, so tunnel checks are
    // skipped (the totality violations above already make the report fail).
    if placement.len() == entity.n_sfs() && report.violations.iter().all(|v| !matches!(v, Violation::UnplacedSf { .. })) {
        let cuts = cut_links(entity, &decision.assignment).expect("length checked above");
        for &ll in &cuts {
            if !decision.flows.contains_key(&ll) {
                report.violations.push(Violation::MissingFlow { ll });
            }
        }
        let mut link_load: BTreeMap<LinkId, u64> = BTreeMap::new();
        for (&ll, path) in &decision.flows {
            if ll.index() >= entity.lls().len() {
                report.violations.push(Violation::MalformedPath { ll, why: "unknown logical link".into() });
                continue;
            }
            if !cuts.contains(&ll) {
                report.violations.push(Violation::SpuriousFlow { ll });
                continue;
            }
            let spec = entity.ll(ll);
            match path.link_ids(topology) {
                Err(why) => report.violations.push(Violation::MalformedPath { ll, why }),
                Ok(links) => {
                    let ends = (path.first().unwrap(), path.last().unwrap());
                    let want = (placement[spec.u.index()], placement[spec.w.index()]);
                    if ends != want && ends != (want.1, want.0) {
                        report.violations.push(Violation::TunnelEndpoints { ll });
                    }
                    for l in links {
                        *link_load.entry(l).or_default() += spec.bw_demand;
                    }
                }
            }
        }
        for (&link, &demand) in &link_load {
            let available = topology.link(link).bw_available;
            if demand > available {
                report.violations.push(Violation::LinkCapacity { link, demand, available });
            }
        }
    }

    report
}

/// Errors from the resource ledger.
#[derive(Debug, Error)]
pub enum LedgerError {
    /// The decision is not feasible against current availability; nothing
    /// was debited.
    #[error("decision is infeasible: {} violation(s)", report.violations.len())]
    Infeasible { report: ValidationReport },
    /// Crediting the decision back would push some resource above its
    /// capacity — the decision was not (still) resident. Nothing was changed.
    #[error("release would overflow capacity of {what}")]
    ReleaseOverflow { what: String },
    #[error(transparent)]
    Contract(#[from] ContractError),
}

/// Debits the decision's CPU and bandwidth from the substrate. Validates
/// first and mutates nothing unless the whole decision fits.
pub fn allocate(
    topology: &mut CpnTopology,
    entity: &ServiceEntity,
    decision: &MappingDecision,
) -> Result<(), LedgerError> {
    let report = validate_decision(topology, entity, decision);
    if !report.is_ok() {
        return Err(LedgerError::Infeasible { report });
    }
    let (node_load, link_load) = loads(topology, entity, decision)?;
    for (node, demand) in node_load {
        topology.node_mut(node).cpu_available -= demand;
    }
    for (link, demand) in link_load {
        topology.link_mut(link).bw_available -= demand;
    }
    Ok(())
}

/// Credits the decision's CPU and bandwidth back. Rejects (without mutating)
/// any credit that would exceed capacity, which catches double releases and
/// releases of never-allocated decisions.
pub fn release(
    topology: &mut CpnTopology,
    entity: &ServiceEntity,
    decision: &MappingDecision,
) -> Result<(), LedgerError> {
    let (node_load, link_load) = loads(topology, entity, decision)?;
    for (&node, &demand) in &node_load {
        let n = topology.node(node);
        if n.cpu_available + demand > n.cpu_capacity {
            return Err(LedgerError::ReleaseOverflow { what: format!("{node}") });
        }
    }
    for (&link, &demand) in &link_load {
        let l = topology.link(link);
        if l.bw_available + demand > l.bw_capacity {
            return Err(LedgerError::ReleaseOverflow { what: format!("{link}") });
        }
    }
    for (node, demand) in node_load {
        topology.node_mut(node).cpu_available += demand;
    }
    for (link, demand) in link_load {
        topology.link_mut(link).bw_available += demand;
    }
    Ok(())
}

/// Aggregate per-node CPU and per-link bandwidth demand of a decision.
fn loads(
    topology: &CpnTopology,
    entity: &ServiceEntity,
    decision: &MappingDecision,
) -> Result<(BTreeMap<NodeId, u64>, BTreeMap<LinkId, u64>), ContractError> {
    if decision.assignment.placement.len() != entity.n_sfs() {
        return Err(ContractError("assignment length mismatch".into()));
    }
    let mut node_load: BTreeMap<NodeId, u64> = BTreeMap::new();
    for sf in entity.sfs() {
        *node_load.entry(decision.assignment.placement[sf.id.index()]).or_default() += sf.cpu_demand;
    }
    let mut link_load: BTreeMap<LinkId, u64> = BTreeMap::new();
    for (&ll, path) in &decision.flows {
        if ll.index() >= entity.lls().len() {
            return Err(ContractError(format!("flow references unknown {ll}")));
        }
        let links = path.link_ids(topology).map_err(ContractError)?;
        for l in links {
            *link_load.entry(l).or_default() += entity.ll(ll).bw_demand;
        }
    }
    Ok((node_load, link_load))
}

//! Fragmentation scoring. The search ranks candidate decisions by how well
//! they consolidate load instead of scattering it:
//!
//! * **NRED** (node resource exhaustion degree) — total utilization of the
//!   participating nodes divided by (roughly) the count of them still left
//!   under-utilized; exhausting nodes sends it toward `1/eps`.
//! * **CBUG** (computing-to-bandwidth usage gap) — mean over participating
//!   nodes of hosted CPU per unit of cut bandwidth touching the node;
//!   co-location (little cut bandwidth) raises it.
//! * **PNVL** (path vacancy load) — per tunnel, demand over the residual
//!   capacity of its forwarding (interior) nodes, scaled by an exponential
//!   in the forwarding-node count; averaged over the cut links.
//!
//! Fitness is the reciprocal of the weighted sum, so the search *minimizes*
//! fitness to *maximize* consolidation.
//!
//! All capacities are the solver's view at decision time: per-node availab-
//! ility before this decision is allocated.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::decision::MappingDecision;
use crate::model::{NodeId, ServiceEntity};

/// Direction of the exponential scaling in the per-tunnel vacancy load.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PnvlExponentSign {
    /// Divide by `e^(-|forwarding|)`: longer tunnels score higher (the
    /// formula as originally stated).
    AsWritten,
    /// Divide by `e^(+|forwarding|)`: longer tunnels are damped.
    Corrected,
}

/// Weights and smoothing constants for the fragmentation scores.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FragConfig {
    /// Utilization slack under which a node still counts as exhausted.
    pub delta: f64,
    /// Denominator smoothing.
    pub eps: f64,
    /// Numerator smoothing for the cut-link average.
    pub eps_prime: f64,
    /// (NRED, CBUG, PNVL) weights; non-negative, summing to one.
    pub weights: (f64, f64, f64),
    pub pnvl_exponent_sign: PnvlExponentSign,
}

impl Default for FragConfig {
    fn default() -> Self {
        FragConfig {
            delta: 0.05,
            eps: 1e-6,
            eps_prime: 1e-3,
            weights: (0.6, 0.3, 0.1),
            pnvl_exponent_sign: PnvlExponentSign::AsWritten,
        }
    }
}

impl FragConfig {
    pub fn validate(&self) -> Result<(), FragError> {
        let (a, b, c) = self.weights;
        if a < 0.0 || b < 0.0 || c < 0.0 || (a + b + c - 1.0).abs() > 1e-9 {
            return Err(FragError::Contract(format!(
                "weights ({a}, {b}, {c}) must be non-negative and sum to 1"
            )));
        }
        if self.eps <= 0.0 || self.eps_prime <= 0.0 || !(0.0..1.0).contains(&self.delta) {
            return Err(FragError::Contract("smoothing constants out of range".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum FragError {
    #[error("fragmentation contract violated: {0}")]
    Contract(String),
}

/// The three scores and the scalar fitness derived from them.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FragScores {
    pub nred: f64,
    pub cbug: f64,
    pub pnvl: f64,
    pub fitness: f64,
}

/// Per participating node: hosted CPU demand and cut bandwidth touching it
/// (sum over cut links with an endpoint placed there). Nodes hosting nothing
/// do not appear.
pub fn node_usage(
    entity: &ServiceEntity,
    decision: &MappingDecision,
) -> Result<(BTreeMap<NodeId, u64>, BTreeMap<NodeId, u64>), FragError> {
    let placement = &decision.assignment.placement;
    if placement.len() != entity.n_sfs() {
        return Err(FragError::Contract("assignment length mismatch".into()));
    }
    let mut cpu: BTreeMap<NodeId, u64> = BTreeMap::new();
    for sf in entity.sfs() {
        *cpu.entry(placement[sf.id.index()]).or_default() += sf.cpu_demand;
    }
    let mut bw: BTreeMap<NodeId, u64> = cpu.keys().map(|&n| (n, 0)).collect();
    for l in entity.lls() {
        let (a, b) = (placement[l.u.index()], placement[l.w.index()]);
        if a != b {
            *bw.get_mut(&a).unwrap() += l.bw_demand;
            *bw.get_mut(&b).unwrap() += l.bw_demand;
        }
    }
    Ok((cpu, bw))
}

fn availability(capacities: &[u64], n: NodeId, hosted: u64) -> Result<f64, FragError> {
    let cap = *capacities
        .get(n.index())
        .ok_or_else(|| FragError::Contract(format!("{n} outside the capacity table")))?;
    if hosted > cap {
        return Err(FragError::Contract(format!(
            "{n} hosts {hosted} above its availability {cap}; score undefined for infeasible decisions"
        )));
    }
    Ok(cap as f64)
}

/// Node resource exhaustion degree.
pub fn nred(
    entity: &ServiceEntity,
    decision: &MappingDecision,
    capacities: &[u64],
    cfg: &FragConfig,
) -> Result<f64, FragError> {
    cfg.validate()?;
    let (cpu, _) = node_usage(entity, decision)?;
    let mut utilization_sum = 0.0;
    let mut under_utilized = 0.0;
    for (&n, &hosted) in &cpu {
        let cap = availability(capacities, n, hosted)?;
        let util = hosted as f64 / cap;
        utilization_sum += util;
        under_utilized += (1.0 - util - cfg.delta).max(0.0).ceil();
    }
    Ok(utilization_sum / (under_utilized + cfg.eps))
}

/// Computing-to-bandwidth usage gap.
pub fn cbug(
    entity: &ServiceEntity,
    decision: &MappingDecision,
    capacities: &[u64],
    cfg: &FragConfig,
) -> Result<f64, FragError> {
    cfg.validate()?;
    let (cpu, bw) = node_usage(entity, decision)?;
    let mut sum = 0.0;
    for (&n, &hosted) in &cpu {
        availability(capacities, n, hosted)?; // contract check only
        let bw_here = bw[&n] as f64;
        sum += hosted as f64 / (bw_here + cfg.eps);
    }
    Ok(sum / cpu.len() as f64)
}

/// Path vacancy load over the decision's tunnels.
pub fn pnvl(
    entity: &ServiceEntity,
    decision: &MappingDecision,
    capacities: &[u64],
    cfg: &FragConfig,
) -> Result<f64, FragError> {
    cfg.validate()?;
    let (cpu, _) = node_usage(entity, decision)?;
    let mut sum = 0.0;
    for (&ll, path) in &decision.flows {
        if ll.index() >= entity.lls().len() {
            return Err(FragError::Contract(format!("flow references unknown {ll}")));
        }
        let demand = entity.ll(ll).bw_demand as f64;
        let forwarding = &path.nodes[1..path.nodes.len().saturating_sub(1)];
        let mut vacancy = 0.0;
        for &m in forwarding {
            let hosted = cpu.get(&m).copied().unwrap_or(0);
            let cap = availability(capacities, m, hosted)?;
            vacancy += demand / (cap - hosted as f64 + cfg.eps);
        }
        let m = forwarding.len() as f64;
        let scale = match cfg.pnvl_exponent_sign {
            PnvlExponentSign::AsWritten => (-m).exp(),
            PnvlExponentSign::Corrected => m.exp(),
        };
        sum += vacancy / scale;
    }
    Ok((sum + cfg.eps_prime) / (decision.flows.len() as f64 + cfg.eps))
}

/// The scalar the search minimizes: reciprocal of the weighted score sum.
pub fn fitness(
    entity: &ServiceEntity,
    decision: &MappingDecision,
    capacities: &[u64],
    cfg: &FragConfig,
) -> Result<FragScores, FragError> {
    let nred = nred(entity, decision, capacities, cfg)?;
    let cbug = cbug(entity, decision, capacities, cfg)?;
    let pnvl = pnvl(entity, decision, capacities, cfg)?;
    let (w1, w2, w3) = cfg.weights;
    let sum = w1 * nred + w2 * cbug + w3 * pnvl;
    if sum <= 0.0 || !sum.is_finite() {
        return Err(FragError::Contract(format!("weighted score sum {sum} has no reciprocal")));
    }
    Ok(FragScores { nred, cbug, pnvl, fitness: 1.0 / sum })
}

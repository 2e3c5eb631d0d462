//! The run-configuration document shared by the command-line tools.
//!
//! A run is described by a single JSON object. Every field has a default, so
//! `{}` is a valid document (the bundled medium-scale scenario); unknown keys
//! are rejected everywhere to catch typos early.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::frag::FragConfig;
use crate::model::{CpnGenParams, ProfitParams};
use crate::partition::BalanceTolerance;
use crate::search::{InitStrategy, SearchParams};
use crate::sim::WorkloadParams;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config: {0}")]
    Io(#[from] std::io::Error),
    #[error("cannot parse config: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("invalid config: {0}")]
    Invalid(String),
}

/// Which mapper handles arrivals.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolverKind {
    /// The bilevel swarm search.
    Abs,
    /// The ranked breadth-first baseline.
    Rwbfs,
}

/// Where the substrate comes from.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum TopologySource {
    /// Load a topology text file.
    File { path: String },
    /// Generate one from the given parameters and the run seed.
    Random(CpnGenParams),
}

/// Where the request sequence comes from.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum WorkloadSource {
    /// Load a workload line file.
    File { path: String },
    /// Draw one from the given parameters and the run seed.
    Random(WorkloadParams),
}

/// Tunnel-routing knobs.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RoutingConfig {
    /// Shortest-path candidates precomputed per node pair.
    pub k_paths: usize,
}

impl Default for RoutingConfig {
    fn default() -> Self {
        RoutingConfig { k_paths: 5 }
    }
}

/// Placement-partitioning knobs.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PartitionConfig {
    /// Base load-balance tolerance around the proportion weights.
    pub balance_tolerance: f64,
}

impl Default for PartitionConfig {
    fn default() -> Self {
        PartitionConfig { balance_tolerance: BalanceTolerance::default().theta }
    }
}

impl PartitionConfig {
    pub fn tolerance(&self) -> BalanceTolerance {
        BalanceTolerance { theta: self.balance_tolerance }
    }
}

/// One simulation run, end to end.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub seed: u64,
    pub solver: SolverKind,
    pub init: InitStrategy,
    /// Force single-threaded, bitwise-reproducible search scheduling.
    pub deterministic: bool,
    pub topology: TopologySource,
    pub workload: WorkloadSource,
    pub profit: ProfitParams,
    pub frag: FragConfig,
    pub search: SearchParams,
    pub routing: RoutingConfig,
    pub partition: PartitionConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: 0,
            solver: SolverKind::Abs,
            init: InitStrategy::Frontier,
            deterministic: false,
            topology: TopologySource::Random(CpnGenParams {
                n_nodes: 30,
                n_links: 60,
                cpu_range: (100, 150),
                bw_range: (100, 150),
            }),
            workload: WorkloadSource::Random(WorkloadParams::default()),
            profit: ProfitParams::default(),
            frag: FragConfig::default(),
            search: SearchParams::default(),
            routing: RoutingConfig::default(),
            partition: PartitionConfig::default(),
        }
    }
}

impl RunConfig {
    /// Parses a JSON document and checks it.
    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        let config: RunConfig = serde_json::from_str(text)?;
        config.validate()?;
        Ok(config)
    }

    /// Reads and parses a config file.
    pub fn load(path: impl AsRef<Path>) -> Result<Self, ConfigError> {
        Self::from_json(&fs::read_to_string(path)?)
    }

    /// Rejects parameter combinations no run can use.
    pub fn validate(&self) -> Result<(), ConfigError> {
        self.frag.validate().map_err(|e| ConfigError::Invalid(e.to_string()))?;
        self.search.validate().map_err(|e| ConfigError::Invalid(e.to_string()))?;
        self.partition
            .tolerance()
            .validate()
            .map_err(|e| ConfigError::Invalid(e.to_string()))?;
        if self.routing.k_paths == 0 {
            return Err(ConfigError::Invalid("routing.k_paths must be positive".into()));
        }
        if !(self.profit.exponent.is_finite() && self.profit.cost_weight.is_finite()) {
            return Err(ConfigError::Invalid("profit parameters must be finite".into()));
        }
        if let WorkloadSource::Random(w) = &self.workload {
            if !(w.arrival_rate > 0.0 && w.mean_lifetime > 0.0) {
                return Err(ConfigError::Invalid(
                    "workload arrival rate and mean lifetime must be positive".into(),
                ));
            }
        }
        Ok(())
    }
}

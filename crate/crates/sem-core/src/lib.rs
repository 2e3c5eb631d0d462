//! Service entity mapping (SEM) for computing power networks.
//!
//! A computing power network is modeled as an undirected substrate graph of
//! computing nodes (CPU capacity) joined by network links (bandwidth
//! capacity). A service entity is a small undirected graph of service
//! functions (CPU demand) joined by logical links (bandwidth demand). Mapping
//! an entity means placing every service function on a computing node
//! (co-location allowed) and routing every logical link whose endpoints land
//! on different nodes over a substrate path ("tunnel").
//!
//! The crate provides:
//!
//! * [`model`] / [`decision`] — the substrate/entity types, deterministic
//!   generators, the mapping-decision type, feasibility validation and the
//!   resource ledger (allocate/release).
//! * [`partition`] — the inner placement engine: proportional-weight k-way
//!   graph partitioning (a multilevel heuristic plus an exhaustive oracle).
//! * [`routing`] — k-shortest-path precomputation and greedy tunnel mapping
//!   under residual bandwidth.
//! * [`frag`] — fragmentation scoring (node exhaustion, bandwidth-usage gap,
//!   path-vacancy load) and the scalar fitness used by the search.
//! * [`search`] — the bilevel swarm search: an elite archive controller and
//!   distributed workers evolving proportion-weight vectors.
//! * [`baseline`] — the ranked breadth-first mapper used as a comparison
//!   baseline and as an alternative swarm initializer.
//! * [`sim`] — the online discrete-event simulator (arrivals, departures,
//!   acceptance metrics) and workload generation.
//! * [`oracle`] — small-instance brute-force solvers and the reformulation
//!   equivalence checks used by the acceptance suite.
//! * [`config`] — the run-configuration document shared by the CLI.

#![forbid(unsafe_code)]

pub mod baseline;
pub mod config;
pub mod decision;
pub mod frag;
pub mod model;
pub mod oracle;
pub mod partition;
pub mod routing;
pub mod search;
pub mod sim;

pub use decision::{Assignment, MappingDecision, Path, ValidationReport, Violation};
pub use model::{CpnTopology, LinkId, LlId, NodeId, ProfitParams, RequestId, ServiceEntity, SfId};

//! Substrate and request models: the computing power network (CPU nodes,
//! bandwidth links), the service entity (service functions, logical links),
//! deterministic random generators for both, and the plain-text topology
//! format.
//!
//! Identifiers are dense: a topology with `n` nodes uses node ids `0..n`, an
//! entity with `k` service functions uses SF ids `0..k`. That keeps
//! assignments representable as flat vectors and makes malformed input easy
//! to report precisely.

use std::collections::{BTreeSet, VecDeque};
use std::fmt;

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Identifier of a computing node in the substrate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NodeId(pub u32);

/// Identifier of a substrate link (index into the topology's link table).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct LinkId(pub u32);

/// Identifier of a service function within one entity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SfId(pub u32);

/// Identifier of a logical link within one entity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct LlId(pub u32);

/// Identifier of a mapping request (one service entity arrival).
pub type RequestId = u64;

impl NodeId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}
impl LinkId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}
impl SfId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}
impl LlId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "n{}", self.0)
    }
}
impl fmt::Display for LinkId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "l{}", self.0)
    }
}
impl fmt::Display for SfId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "sf{}", self.0)
    }
}
impl fmt::Display for LlId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ll{}", self.0)
    }
}

/// Errors raised while building, parsing or generating models.
#[derive(Debug, Error)]
pub enum ModelError {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("invalid topology: {0}")]
    InvalidTopology(String),
    #[error("invalid service entity: {0}")]
    InvalidEntity(String),
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

/// A computing node: CPU capacity plus its currently unallocated remainder.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CpnNode {
    pub id: NodeId,
    pub cpu_capacity: u64,
    pub cpu_available: u64,
}

/// An undirected substrate link with bandwidth capacity and remainder.
/// Endpoints are stored normalized (`u < v`).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CpnLink {
    pub id: LinkId,
    pub u: NodeId,
    pub v: NodeId,
    pub bw_capacity: u64,
    pub bw_available: u64,
}

impl CpnLink {
    /// The endpoint opposite to `n`, if `n` is an endpoint at all.
    pub fn other(&self, n: NodeId) -> Option<NodeId> {
        if n == self.u {
            Some(self.v)
        } else if n == self.v {
            Some(self.u)
        } else {
            None
        }
    }
}

/// The substrate: a connected undirected graph of computing nodes and links.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CpnTopology {
    nodes: Vec<CpnNode>,
    links: Vec<CpnLink>,
    /// Per node: (neighbor, connecting link), sorted by neighbor id.
    adjacency: Vec<Vec<(NodeId, LinkId)>>,
}

impl CpnTopology {
    /// Builds a topology from per-node CPU capacities (node id = index) and
    /// `(u, v, bandwidth)` link triples. Rejects self-loops, duplicate links,
    /// out-of-range endpoints and disconnected graphs.
    pub fn new(cpu_capacities: Vec<u64>, link_specs: Vec<(u32, u32, u64)>) -> Result<Self, ModelError> {
        let n = cpu_capacities.len();
        if n == 0 {
            return Err(ModelError::InvalidTopology("no nodes".into()));
        }
        let nodes = cpu_capacities
            .into_iter()
            .enumerate()
            .map(|(i, c)| CpnNode { id: NodeId(i as u32), cpu_capacity: c, cpu_available: c })
            .collect::<Vec<_>>();

        let mut links = Vec::with_capacity(link_specs.len());
        let mut seen = BTreeSet::new();
        for (u, v, bw) in link_specs {
            if u as usize >= n || v as usize >= n {
                return Err(ModelError::InvalidTopology(format!(
                    "link ({u}, {v}) references a node outside 0..{n}"
                )));
            }
            if u == v {
                return Err(ModelError::InvalidTopology(format!("self-loop link at node {u}")));
            }
            let (a, b) = if u < v { (u, v) } else { (v, u) };
            if !seen.insert((a, b)) {
                return Err(ModelError::InvalidTopology(format!("duplicate link ({a}, {b})")));
            }
            links.push(CpnLink {
                id: LinkId(links.len() as u32),
                u: NodeId(a),
                v: NodeId(b),
                bw_capacity: bw,
                bw_available: bw,
            });
        }

        let mut adjacency = vec![Vec::new(); n];
        for l in &links {
            adjacency[l.u.index()].push((l.v, l.id));
            adjacency[l.v.index()].push((l.u, l.id));
        }
        for row in &mut adjacency {
            row.sort();
        }

        let topo = CpnTopology { nodes, links, adjacency };
        if !topo.is_connected() {
            return Err(ModelError::InvalidTopology("graph is not connected".into()));
        }
        Ok(topo)
    }

    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn n_links(&self) -> usize {
        self.links.len()
    }

    pub fn nodes(&self) -> &[CpnNode] {
        &self.nodes
    }

    pub fn links(&self) -> &[CpnLink] {
        &self.links
    }

    pub fn node(&self, id: NodeId) -> &CpnNode {
        &self.nodes[id.index()]
    }

    pub fn link(&self, id: LinkId) -> &CpnLink {
        &self.links[id.index()]
    }

    /// Neighbors of `n` as (neighbor, connecting link), sorted by neighbor id.
    pub fn neighbors(&self, n: NodeId) -> &[(NodeId, LinkId)] {
        &self.adjacency[n.index()]
    }

    /// The link joining `u` and `v`, if present.
    pub fn link_between(&self, u: NodeId, v: NodeId) -> Option<LinkId> {
        self.adjacency[u.index()]
            .iter()
            .find(|(m, _)| *m == v)
            .map(|(_, l)| *l)
    }

    pub fn total_cpu_capacity(&self) -> u64 {
        self.nodes.iter().map(|n| n.cpu_capacity).sum()
    }

    pub fn total_cpu_available(&self) -> u64 {
        self.nodes.iter().map(|n| n.cpu_available).sum()
    }

    /// CPU currently held by resident entities.
    pub fn cpu_used(&self) -> u64 {
        self.total_cpu_capacity() - self.total_cpu_available()
    }

    /// Bandwidth currently held by resident tunnels.
    pub fn bw_used(&self) -> u64 {
        self.links.iter().map(|l| l.bw_capacity - l.bw_available).sum()
    }

    /// Per-node available CPU, indexed by node id. This is the capacity view
    /// handed to the partitioner and the fragmentation scores.
    pub fn cpu_available_vec(&self) -> Vec<u64> {
        self.nodes.iter().map(|n| n.cpu_available).collect()
    }

    pub(crate) fn node_mut(&mut self, id: NodeId) -> &mut CpnNode {
        &mut self.nodes[id.index()]
    }

    pub(crate) fn link_mut(&mut self, id: LinkId) -> &mut CpnLink {
        &mut self.links[id.index()]
    }

    fn is_connected(&self) -> bool {
        let n = self.nodes.len();
        let mut seen = vec![false; n];
        let mut queue = VecDeque::from([NodeId(0)]);
        seen[0] = true;
        let mut count = 1;
        while let Some(u) = queue.pop_front() {
            for &(v, _) in self.neighbors(u) {
                if !seen[v.index()] {
                    seen[v.index()] = true;
                    count += 1;
                    queue.push_back(v);
                }
            }
        }
        count == n
    }

    /// Serializes the substrate in the plain-text exchange format (capacities
    /// only; availability always re-starts at full on load).
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("NODES {}\n", self.nodes.len()));
        for n in &self.nodes {
            out.push_str(&format!("{} {}\n", n.id.0, n.cpu_capacity));
        }
        out.push_str(&format!("LINKS {}\n", self.links.len()));
        for l in &self.links {
            out.push_str(&format!("{} {} {}\n", l.u.0, l.v.0, l.bw_capacity));
        }
        out
    }

    /// Parses the plain-text exchange format:
    ///
    /// ```text
    /// NODES <n>
    /// <id> <cpu>        (n lines, ids exactly 0..n in any order)
    /// LINKS <m>
    /// <u> <v> <bw>      (m lines)
    /// ```
    ///
    /// Blank lines are ignored. Errors carry 1-based line numbers.
    pub fn parse(text: &str) -> Result<Self, ModelError> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty());

        let parse_count = |tok: Option<(usize, &str)>, header: &str| -> Result<(usize, usize), ModelError> {
            let (line, content) = tok.ok_or(ModelError::Parse {
                line: 0,
                msg: format!("missing {header} header"),
            })?;
            let mut parts = content.split_whitespace();
            match (parts.next(), parts.next(), parts.next()) {
                (Some(h), Some(c), None) if h == header => {
                    let n = c.parse::<usize>().map_err(|_| ModelError::Parse {
                        line,
                        msg: format!("bad {header} count '{c}'"),
                    })?;
                    Ok((line, n))
                }
                _ => Err(ModelError::Parse {
                    line,
                    msg: format!("expected '{header} <count>', got '{content}'"),
                }),
            }
        };

        let (_, n_nodes) = parse_count(lines.next(), "NODES")?;
        let mut caps = vec![None; n_nodes];
        for _ in 0..n_nodes {
            let (line, content) = lines.next().ok_or(ModelError::Parse {
                line: 0,
                msg: "unexpected end of input in node list".into(),
            })?;
            let toks: Vec<&str> = content.split_whitespace().collect();
            if toks.len() != 2 {
                return Err(ModelError::Parse { line, msg: format!("expected '<id> <cpu>', got '{content}'") });
            }
            let id: usize = toks[0]
                .parse()
                .map_err(|_| ModelError::Parse { line, msg: format!("bad node id '{}'", toks[0]) })?;
            let cpu: u64 = toks[1]
                .parse()
                .map_err(|_| ModelError::Parse { line, msg: format!("bad cpu capacity '{}'", toks[1]) })?;
            if id >= n_nodes {
                return Err(ModelError::Parse { line, msg: format!("node id {id} outside 0..{n_nodes}") });
            }
            if caps[id].replace(cpu).is_some() {
                return Err(ModelError::Parse { line, msg: format!("duplicate node id {id}") });
            }
        }
        let caps: Vec<u64> = caps.into_iter().map(|c| c.unwrap()).collect();

        let (_, n_links) = parse_count(lines.next(), "LINKS")?;
        let mut link_specs = Vec::with_capacity(n_links);
        for _ in 0..n_links {
            let (line, content) = lines.next().ok_or(ModelError::Parse {
                line: 0,
                msg: "unexpected end of input in link list".into(),
            })?;
            let toks: Vec<&str> = content.split_whitespace().collect();
            if toks.len() != 3 {
                return Err(ModelError::Parse { line, msg: format!("expected '<u> <v> <bw>', got '{content}'") });
            }
            let u: u32 = toks[0]
                .parse()
                .map_err(|_| ModelError::Parse { line, msg: format!("bad endpoint '{}'", toks[0]) })?;
            let v: u32 = toks[1]
                .parse()
                .map_err(|_| ModelError::Parse { line, msg: format!("bad endpoint '{}'", toks[1]) })?;
            let bw: u64 = toks[2]
                .parse()
                .map_err(|_| ModelError::Parse { line, msg: format!("bad bandwidth '{}'", toks[2]) })?;
            link_specs.push((u, v, bw));
        }
        if let Some((line, content)) = lines.next() {
            return Err(ModelError::Parse { line, msg: format!("trailing content '{content}'") });
        }
        Self::new(caps, link_specs)
    }
}

/// Parameters for the random substrate generator.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CpnGenParams {
    pub n_nodes: usize,
    pub n_links: usize,
    /// Inclusive CPU capacity range.
    pub cpu_range: (u64, u64),
    /// Inclusive bandwidth capacity range.
    pub bw_range: (u64, u64),
}

/// Generates a connected random substrate with exactly `n_links` links.
///
/// Nodes are scattered on the unit square and joined by a Waxman trial
/// (probability `0.5 * exp(-d / (0.2 * L))` with `L` the graph diameter in
/// the plane); the edge set is then patched deterministically — closest
/// missing pairs added, farthest non-bridge links removed — until it is
/// connected and has the requested size. Identical inputs give identical
/// topologies.
pub fn generate_random_cpn(params: &CpnGenParams, seed: u64) -> Result<CpnTopology, ModelError> {
    const ALPHA: f64 = 0.5;
    const BETA: f64 = 0.2;

    let n = params.n_nodes;
    if n < 2 {
        return Err(ModelError::InvalidParams("need at least 2 nodes".into()));
    }
    let max_links = n * (n - 1) / 2;
    if params.n_links < n - 1 || params.n_links > max_links {
        return Err(ModelError::InvalidParams(format!(
            "{} links impossible for {} nodes (connected range is {}..={})",
            params.n_links,
            n,
            n - 1,
            max_links
        )));
    }
    check_range(params.cpu_range, "cpu")?;
    check_range(params.bw_range, "bw")?;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let positions: Vec<(f64, f64)> = (0..n)
        .map(|_| (rng.random::<f64>(), rng.random::<f64>()))
        .collect();
    let dist = |a: usize, b: usize| -> f64 {
        let dx = positions[a].0 - positions[b].0;
        let dy = positions[a].1 - positions[b].1;
        (dx * dx + dy * dy).sqrt()
    };
    let mut diameter: f64 = 0.0;
    for a in 0..n {
        for b in a + 1..n {
            diameter = diameter.max(dist(a, b));
        }
    }
    // All-coincident points would zero the diameter; the trial probability
    // then degenerates to ALPHA, which is still well-defined.
    let scale = if diameter > 0.0 { BETA * diameter } else { 1.0 };

    let mut edges = BTreeSet::new();
    for a in 0..n {
        for b in a + 1..n {
            let p = ALPHA * (-dist(a, b) / scale).exp();
            if rng.random::<f64>() < p {
                edges.insert((a, b));
            }
        }
    }

    // Patch connectivity: repeatedly join the two closest nodes that sit in
    // different components.
    loop {
        let comp = components(n, &edges);
        if comp.iter().max().copied().unwrap_or(0) == 0 {
            break;
        }
        let mut best: Option<((usize, usize), f64)> = None;
        for a in 0..n {
            for b in a + 1..n {
                if comp[a] != comp[b] && !edges.contains(&(a, b)) {
                    let d = dist(a, b);
                    if best.is_none_or(|(_, bd)| d < bd) {
                        best = Some(((a, b), d));
                    }
                }
            }
        }
        edges.insert(best.expect("disconnected graph must have a joining pair").0);
    }

    // Patch the link count. Additions take the closest missing pair;
    // removals take the farthest link that is not a bridge.
    while edges.len() < params.n_links {
        let mut best: Option<((usize, usize), f64)> = None;
        for a in 0..n {
            for b in a + 1..n {
                if !edges.contains(&(a, b)) {
                    let d = dist(a, b);
                    if best.is_none_or(|(_, bd)| d < bd) {
                        best = Some(((a, b), d));
                    }
                }
            }
        }
        edges.insert(best.expect("link count already validated against the complete graph").0);
    }
    while edges.len() > params.n_links {
        let bridge_set = bridges(n, &edges);
        let victim = edges
            .iter()
            .filter(|e| !bridge_set.contains(*e))
            .max_by(|a, b| dist(a.0, a.1).total_cmp(&dist(b.0, b.1)).then(a.cmp(b)))
            .copied()
            .expect("a connected graph above its spanning-tree size has a non-bridge link");
        edges.remove(&victim);
    }

    let caps: Vec<u64> = (0..n)
        .map(|_| rng.random_range(params.cpu_range.0..=params.cpu_range.1))
        .collect();
    let link_specs: Vec<(u32, u32, u64)> = edges
        .iter()
        .map(|&(a, b)| (a as u32, b as u32, rng.random_range(params.bw_range.0..=params.bw_range.1)))
        .collect();
    CpnTopology::new(caps, link_specs)
}

fn check_range(r: (u64, u64), what: &str) -> Result<(), ModelError> {
    if r.0 == 0 || r.0 > r.1 {
        return Err(ModelError::InvalidParams(format!(
            "{what} range {}..={} must be non-empty and positive",
            r.0, r.1
        )));
    }
    Ok(())
}

/// Component label per node under the given edge set.
fn components(n: usize, edges: &BTreeSet<(usize, usize)>) -> Vec<usize> {
    let mut adj = vec![Vec::new(); n];
    for &(a, b) in edges {
        adj[a].push(b);
        adj[b].push(a);
    }
    let mut comp = vec![usize::MAX; n];
    let mut next = 0;
    for start in 0..n {
        if comp[start] != usize::MAX {
            continue;
        }
        let mut queue = VecDeque::from([start]);
        comp[start] = next;
        while let Some(u) = queue.pop_front() {
            for &v in &adj[u] {
                if comp[v] == usize::MAX {
                    comp[v] = next;
                    queue.push_back(v);
                }
            }
        }
        next += 1;
    }
    comp
}

/// Bridge edges (removal disconnects) via Tarjan's low-link pass.
fn bridges(n: usize, edges: &BTreeSet<(usize, usize)>) -> BTreeSet<(usize, usize)> {
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n];
    for &(a, b) in edges {
        adj[a].push(b);
        adj[b].push(a);
    }
    let mut disc = vec![usize::MAX; n];
    let mut low = vec![0usize; n];
    let mut out = BTreeSet::new();
    let mut timer = 0;
    // Iterative DFS: (node, parent, neighbor cursor).
    for root in 0..n {
        if disc[root] != usize::MAX {
            continue;
        }
        let mut stack = vec![(root, usize::MAX, 0usize)];
        disc[root] = timer;
        low[root] = timer;
        timer += 1;
        while let Some(&mut (u, parent, ref mut cursor)) = stack.last_mut() {
            if *cursor < adj[u].len() {
                let v = adj[u][*cursor];
                *cursor += 1;
                if disc[v] == usize::MAX {
                    disc[v] = timer;
                    low[v] = timer;
                    timer += 1;
                    stack.push((v, u, 0));
                } else if v != parent {
                    low[u] = low[u].min(disc[v]);
                }
            } else {
                stack.pop();
                if let Some(&(p, _, _)) = stack.last() {
                    low[p] = low[p].min(low[u]);
                    if low[u] > disc[p] {
                        out.insert((p.min(u), p.max(u)));
                    }
                }
            }
        }
    }
    out
}

/// A service function: one unit of placeable work with a CPU demand.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ServiceFunction {
    pub id: SfId,
    pub cpu_demand: u64,
}

/// A logical link between two service functions of the same entity.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LogicalLink {
    pub id: LlId,
    pub u: SfId,
    pub w: SfId,
    pub bw_demand: u64,
}

/// A service entity: a connected graph of service functions and logical
/// links, arriving as one mapping request.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ServiceEntity {
    pub id: RequestId,
    sfs: Vec<ServiceFunction>,
    lls: Vec<LogicalLink>,
}

impl ServiceEntity {
    /// Builds an entity from per-SF CPU demands (SF id = index) and
    /// `(u, w, bandwidth)` logical-link triples. Demands must be positive;
    /// the graph must be simple and connected.
    pub fn new(id: RequestId, cpu_demands: Vec<u64>, ll_specs: Vec<(u32, u32, u64)>) -> Result<Self, ModelError> {
        let n = cpu_demands.len();
        if n == 0 {
            return Err(ModelError::InvalidEntity("no service functions".into()));
        }
        if let Some(i) = cpu_demands.iter().position(|&d| d == 0) {
            return Err(ModelError::InvalidEntity(format!("sf{i} has zero cpu demand")));
        }
        let sfs = cpu_demands
            .into_iter()
            .enumerate()
            .map(|(i, d)| ServiceFunction { id: SfId(i as u32), cpu_demand: d })
            .collect::<Vec<_>>();

        let mut lls = Vec::with_capacity(ll_specs.len());
        let mut seen = BTreeSet::new();
        for (u, w, bw) in ll_specs {
            if u as usize >= n || w as usize >= n {
                return Err(ModelError::InvalidEntity(format!(
                    "logical link ({u}, {w}) references an sf outside 0..{n}"
                )));
            }
            if u == w {
                return Err(ModelError::InvalidEntity(format!("self-loop logical link at sf{u}")));
            }
            if bw == 0 {
                return Err(ModelError::InvalidEntity(format!(
                    "logical link ({u}, {w}) has zero bandwidth demand"
                )));
            }
            let (a, b) = if u < w { (u, w) } else { (w, u) };
            if !seen.insert((a, b)) {
                return Err(ModelError::InvalidEntity(format!("duplicate logical link ({a}, {b})")));
            }
            lls.push(LogicalLink { id: LlId(lls.len() as u32), u: SfId(a), w: SfId(b), bw_demand: bw });
        }

        let entity = ServiceEntity { id, sfs, lls };
        if !entity.is_connected() {
            return Err(ModelError::InvalidEntity("entity graph is not connected".into()));
        }
        Ok(entity)
    }

    pub fn n_sfs(&self) -> usize {
        self.sfs.len()
    }

    pub fn sfs(&self) -> &[ServiceFunction] {
        &self.sfs
    }

    pub fn lls(&self) -> &[LogicalLink] {
        &self.lls
    }

    pub fn sf(&self, id: SfId) -> &ServiceFunction {
        &self.sfs[id.index()]
    }

    pub fn ll(&self, id: LlId) -> &LogicalLink {
        &self.lls[id.index()]
    }

    pub fn total_cpu_demand(&self) -> u64 {
        self.sfs.iter().map(|s| s.cpu_demand).sum()
    }

    pub fn total_bw_demand(&self) -> u64 {
        self.lls.iter().map(|l| l.bw_demand).sum()
    }

    /// Per-SF neighbor lists as (neighbor, logical link), sorted by neighbor.
    pub fn adjacency(&self) -> Vec<Vec<(SfId, LlId)>> {
        let mut adj = vec![Vec::new(); self.sfs.len()];
        for l in &self.lls {
            adj[l.u.index()].push((l.w, l.id));
            adj[l.w.index()].push((l.u, l.id));
        }
        for row in &mut adj {
            row.sort();
        }
        adj
    }

    fn is_connected(&self) -> bool {
        let n = self.sfs.len();
        let adj = self.adjacency();
        let mut seen = vec![false; n];
        let mut queue = VecDeque::from([0usize]);
        seen[0] = true;
        let mut count = 1;
        while let Some(u) = queue.pop_front() {
            for &(v, _) in &adj[u] {
                if !seen[v.index()] {
                    seen[v.index()] = true;
                    count += 1;
                    queue.push_back(v.index());
                }
            }
        }
        count == n
    }
}

/// Parameters for the random service-entity generator.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EntityGenParams {
    /// Inclusive range for the number of service functions.
    pub size_range: (usize, usize),
    /// Probability of each non-tree SF pair getting a logical link.
    pub ll_density: f64,
    /// Inclusive range for both CPU and bandwidth demands.
    pub demand_range: (u64, u64),
}

/// Generates a connected random entity: a uniform random spanning tree (via
/// a random linear-encoding decode) plus each remaining pair independently
/// with probability `ll_density`. Demands are uniform integers.
pub fn generate_service_entity(
    id: RequestId,
    params: &EntityGenParams,
    seed: u64,
) -> Result<ServiceEntity, ModelError> {
    if params.size_range.0 == 0 || params.size_range.0 > params.size_range.1 {
        return Err(ModelError::InvalidParams(format!(
            "size range {}..={} must be non-empty and positive",
            params.size_range.0, params.size_range.1
        )));
    }
    if !(0.0..=1.0).contains(&params.ll_density) {
        return Err(ModelError::InvalidParams(format!("density {} outside [0, 1]", params.ll_density)));
    }
    check_range(params.demand_range, "demand")?;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.random_range(params.size_range.0..=params.size_range.1);

    let mut pairs = BTreeSet::new();
    if n == 2 {
        pairs.insert((0usize, 1usize));
    } else if n > 2 {
        // Uniform labeled tree: decode a random Prüfer-style sequence.
        let seq: Vec<usize> = (0..n - 2).map(|_| rng.random_range(0..n)).collect();
        let mut degree = vec![1usize; n];
        for &s in &seq {
            degree[s] += 1;
        }
        let mut leaves: BTreeSet<usize> = (0..n).filter(|&v| degree[v] == 1).collect();
        for &s in &seq {
            let leaf = *leaves.iter().next().expect("tree decode always has a leaf");
            leaves.remove(&leaf);
            pairs.insert((leaf.min(s), leaf.max(s)));
            degree[s] -= 1;
            if degree[s] == 1 {
                leaves.insert(s);
            }
        }
        let mut rest = leaves.into_iter();
        let (a, b) = (rest.next().unwrap(), rest.next().unwrap());
        pairs.insert((a.min(b), a.max(b)));
    }
    for a in 0..n {
        for b in a + 1..n {
            if !pairs.contains(&(a, b)) && rng.random::<f64>() < params.ll_density {
                pairs.insert((a, b));
            }
        }
    }

    let demands: Vec<u64> = (0..n)
        .map(|_| rng.random_range(params.demand_range.0..=params.demand_range.1))
        .collect();
    let ll_specs: Vec<(u32, u32, u64)> = pairs
        .iter()
        .map(|&(a, b)| (a as u32, b as u32, rng.random_range(params.demand_range.0..=params.demand_range.1)))
        .collect();
    ServiceEntity::new(id, demands, ll_specs)
}

/// Profit shaping: `(accepted / arrived)^exponent * (revenue - cost_weight * cost)`.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ProfitParams {
    pub exponent: f64,
    pub cost_weight: f64,
}

impl Default for ProfitParams {
    fn default() -> Self {
        ProfitParams { exponent: 2.0, cost_weight: 0.5 }
    }
}

//! Topology data model, JSON I/O, and the graph algorithms shared by the
//! planner, the path analysis, and the simulator.
//!
//! Links are undirected and may be parallel; a link is addressed by its
//! position in [`Topology::links`], its *link index*.

use std::collections::{BTreeMap, HashMap, VecDeque};
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Site role within a backhaul tree.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Gateway,
    Backhaul,
    Edge,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Node {
    pub id: String,
    pub role: Role,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lat: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lon: Option<f64>,
}

impl Node {
    pub fn new(id: impl Into<String>, role: Role) -> Self {
        Node { id: id.into(), role, lat: None, lon: None }
    }

    pub fn with_coords(mut self, lat: f64, lon: f64) -> Self {
        self.lat = Some(lat);
        self.lon = Some(lon);
        self
    }

    pub fn coords(&self) -> Option<(f64, f64)> {
        Some((self.lat?, self.lon?))
    }
}

fn default_channel() -> u32 {
    20
}

/// A point-to-point wireless link with symmetric capacity.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Link {
    pub a: String,
    pub b: String,
    pub capacity_mbps: f64,
    #[serde(default)]
    pub loss: f64,
    #[serde(default)]
    pub delay_ms: f64,
    #[serde(default = "default_channel")]
    pub channel_mhz: u32,
    /// Antenna azimuth at endpoint `a`, degrees.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bearing_a: Option<f64>,
    /// Antenna azimuth at endpoint `b`, degrees.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bearing_b: Option<f64>,
}

impl Link {
    pub fn new(a: impl Into<String>, b: impl Into<String>, capacity_mbps: f64) -> Self {
        Link {
            a: a.into(),
            b: b.into(),
            capacity_mbps,
            loss: 0.0,
            delay_ms: 0.0,
            channel_mhz: 20,
            bearing_a: None,
            bearing_b: None,
        }
    }

    pub fn with_loss(mut self, loss: f64) -> Self {
        self.loss = loss;
        self
    }

    pub fn with_delay_ms(mut self, delay_ms: f64) -> Self {
        self.delay_ms = delay_ms;
        self
    }

    pub fn with_channel(mut self, channel_mhz: u32) -> Self {
        self.channel_mhz = channel_mhz;
        self
    }

    pub fn touches(&self, id: &str) -> bool {
        self.a == id || self.b == id
    }

    /// The endpoint opposite `id`, if `id` is an endpoint.
    pub fn other(&self, id: &str) -> Option<&str> {
        if self.a == id {
            Some(&self.b)
        } else if self.b == id {
            Some(&self.a)
        } else {
            None
        }
    }

    pub fn joins(&self, x: &str, y: &str) -> bool {
        (self.a == x && self.b == y) || (self.a == y && self.b == x)
    }
}

#[derive(Debug, Error)]
pub enum TopologyError {
    #[error("failed to read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("failed to parse topology: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("duplicate node id {0:?}")]
    DuplicateNode(String),
    #[error("link {link} references unknown node {node:?}")]
    DanglingEndpoint { link: usize, node: String },
    #[error("link {link} is a self-loop on {node:?}")]
    SelfLoop { link: usize, node: String },
    #[error("link {link} has non-positive capacity {capacity}")]
    NonPositiveCapacity { link: usize, capacity: f64 },
    #[error("no gateway")]
    NoGateway,
    #[error("multiple gateways: {0:?}")]
    MultipleGateways(Vec<String>),
    #[error("topology has no edge nodes")]
    NoEdgeNodes,
    #[error("unknown node {0:?}")]
    UnknownNode(String),
    #[error("invalid topology: {}", join_diagnostics(.0))]
    Invalid(Vec<Diagnostic>),
}

fn join_diagnostics(diags: &[Diagnostic]) -> String {
    diags.iter().map(|d| d.to_string()).collect::<Vec<_>>().join("; ")
}

/// One invariant violation reported by [`Topology::validate`].
#[derive(Clone, Debug, PartialEq)]
pub enum Diagnostic {
    NoGateway,
    MultipleGateways(Vec<String>),
    Unreachable(String),
    Capacity { link: usize, value: f64 },
    Loss { link: usize, value: f64 },
    Delay { link: usize, value: f64 },
    Channel { link: usize, value: u32 },
    Bearing { link: usize, value: f64 },
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Diagnostic::NoGateway => write!(f, "no gateway"),
            Diagnostic::MultipleGateways(ids) => write!(f, "multiple gateways: {}", ids.join(", ")),
            Diagnostic::Unreachable(id) => write!(f, "edge {id} unreachable"),
            Diagnostic::Capacity { link, value } => {
                write!(f, "link {link} capacity {value} must be > 0")
            }
            Diagnostic::Loss { link, value } => {
                write!(f, "link {link} loss {value} outside [0, 1]")
            }
            Diagnostic::Delay { link, value } => write!(f, "link {link} delay {value} ms is negative"),
            Diagnostic::Channel { link, value } => {
                write!(f, "link {link} channel width {value} MHz not in {{20, 40}}")
            }
            Diagnostic::Bearing { link, value } => {
                write!(f, "link {link} bearing {value} outside [0, 360)")
            }
        }
    }
}

/// Simple path through the topology together with the link used on each hop.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PathSpec {
    pub nodes: Vec<String>,
    /// Link index per hop; `links.len() == nodes.len() - 1`.
    pub links: Vec<usize>,
    pub bottleneck_mbps: f64,
}

impl PathSpec {
    pub fn hops(&self) -> usize {
        self.links.len()
    }

    pub fn source(&self) -> &str {
        &self.nodes[0]
    }

    pub fn destination(&self) -> &str {
        &self.nodes[self.nodes.len() - 1]
    }

    pub fn interior(&self) -> &[String] {
        if self.nodes.len() <= 2 {
            &[]
        } else {
            &self.nodes[1..self.nodes.len() - 1]
        }
    }
}

/// Index-based adjacency view of a topology, built once per algorithm run.
/// Neighbour lists are sorted by node id, then link index.
pub(crate) struct Graph {
    pub ids: Vec<String>,
    pub index: HashMap<String, usize>,
    /// (neighbour, link index)
    pub adj: Vec<Vec<(usize, usize)>>,
}

impl Graph {
    pub fn node(&self, id: &str) -> Result<usize, TopologyError> {
        self.index.get(id).copied().ok_or_else(|| TopologyError::UnknownNode(id.to_string()))
    }
}

#[derive(Deserialize)]
struct TopologyFile {
    nodes: Vec<Node>,
    #[serde(default)]
    links: Vec<Link>,
}

/// A WISP backhaul topology: sites plus a multiset of undirected links.
///
/// Construction rejects structural defects (duplicate ids, dangling or
/// self-looping links). Semantic invariants such as a single gateway or
/// reachability are reported by [`Topology::validate`]; [`load_topology`]
/// requires both.
#[derive(Clone, Debug, PartialEq)]
pub struct Topology {
    nodes: Vec<Node>,
    links: Vec<Link>,
}

impl Topology {
    pub fn new(nodes: Vec<Node>, links: Vec<Link>) -> Result<Self, TopologyError> {
        let mut seen = HashMap::with_capacity(nodes.len());
        for n in &nodes {
            if seen.insert(n.id.as_str(), ()).is_some() {
                return Err(TopologyError::DuplicateNode(n.id.clone()));
            }
        }
        for (i, l) in links.iter().enumerate() {
            for end in [&l.a, &l.b] {
                if !seen.contains_key(end.as_str()) {
                    return Err(TopologyError::DanglingEndpoint { link: i, node: end.clone() });
                }
            }
            if l.a == l.b {
                return Err(TopologyError::SelfLoop { link: i, node: l.a.clone() });
            }
        }
        Ok(Topology { nodes, links })
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn links(&self) -> &[Link] {
        &self.links
    }

    pub fn node(&self, id: &str) -> Option<&Node> {
        self.nodes.iter().find(|n| n.id == id)
    }

    pub fn contains(&self, id: &str) -> bool {
        self.node(id).is_some()
    }

    /// Returns a copy with `link` appended. Endpoints must exist.
    pub fn with_link(&self, link: Link) -> Result<Topology, TopologyError> {
        let mut links = self.links.clone();
        links.push(link);
        Topology::new(self.nodes.clone(), links)
    }

    /// Returns a copy with the link list replaced.
    pub fn with_links(&self, links: Vec<Link>) -> Result<Topology, TopologyError> {
        Topology::new(self.nodes.clone(), links)
    }

    pub fn gateway(&self) -> Result<&Node, TopologyError> {
        let gws: Vec<&Node> = self.nodes.iter().filter(|n| n.role == Role::Gateway).collect();
        match gws.len() {
            0 => Err(TopologyError::NoGateway),
            1 => Ok(gws[0]),
            _ => Err(TopologyError::MultipleGateways(gws.iter().map(|n| n.id.clone()).collect())),
        }
    }

    pub fn edge_nodes(&self) -> impl Iterator<Item = &Node> {
        self.nodes.iter().filter(|n| n.role == Role::Edge)
    }

    /// Indices of links incident to `id`, ascending.
    pub fn incident(&self, id: &str) -> Vec<usize> {
        self.links.iter().enumerate().filter(|(_, l)| l.touches(id)).map(|(i, _)| i).collect()
    }

    pub fn adjacent(&self, x: &str, y: &str) -> bool {
        self.links.iter().any(|l| l.joins(x, y))
    }

    /// Highest-capacity link between `x` and `y`, ties to the lowest index.
    pub fn best_link_between(&self, x: &str, y: &str) -> Option<usize> {
        let mut best: Option<usize> = None;
        for (i, l) in self.links.iter().enumerate() {
            if l.joins(x, y) && best.is_none_or(|b| l.capacity_mbps > self.links[b].capacity_mbps) {
                best = Some(i);
            }
        }
        best
    }

    /// Builds a [`PathSpec`] from a node sequence, choosing the best link per hop.
    pub fn path_from_nodes(&self, nodes: &[String]) -> Result<PathSpec, TopologyError> {
        if nodes.len() < 2 {
            return Err(TopologyError::Invalid(vec![]));
        }
        for id in nodes {
            if !self.contains(id) {
                return Err(TopologyError::UnknownNode(id.clone()));
            }
        }
        let mut links = Vec::with_capacity(nodes.len() - 1);
        for hop in nodes.windows(2) {
            let li = self
                .best_link_between(&hop[0], &hop[1])
                .ok_or_else(|| TopologyError::UnknownNode(format!("{}-{}", hop[0], hop[1])))?;
            links.push(li);
        }
        let bottleneck_mbps = links.iter().map(|&i| self.links[i].capacity_mbps).fold(f64::INFINITY, f64::min);
        Ok(PathSpec { nodes: nodes.to_vec(), links, bottleneck_mbps })
    }

    pub(crate) fn graph(&self) -> Graph {
        let mut order: Vec<usize> = (0..self.nodes.len()).collect();
        order.sort_by(|&x, &y| self.nodes[x].id.cmp(&self.nodes[y].id));
        // Node indices follow ascending id so that index order is id order.
        let ids: Vec<String> = order.iter().map(|&i| self.nodes[i].id.clone()).collect();
        let index: HashMap<String, usize> = ids.iter().enumerate().map(|(i, id)| (id.clone(), i)).collect();
        let mut adj = vec![Vec::new(); ids.len()];
        for (li, l) in self.links.iter().enumerate() {
            let (a, b) = (index[&l.a], index[&l.b]);
            adj[a].push((b, li));
            adj[b].push((a, li));
        }
        for list in &mut adj {
            list.sort_unstable();
        }
        Graph { ids, index, adj }
    }

    /// Checks every topology invariant; empty iff the topology is valid.
    pub fn validate(&self) -> Vec<Diagnostic> {
        let mut diags = Vec::new();
        let gateways: Vec<String> =
            self.nodes.iter().filter(|n| n.role == Role::Gateway).map(|n| n.id.clone()).collect();
        match gateways.len() {
            0 => diags.push(Diagnostic::NoGateway),
            1 => {}
            _ => diags.push(Diagnostic::MultipleGateways(gateways.clone())),
        }
        for (i, l) in self.links.iter().enumerate() {
            if !(l.capacity_mbps > 0.0) || !l.capacity_mbps.is_finite() {
                diags.push(Diagnostic::Capacity { link: i, value: l.capacity_mbps });
            }
            if !(0.0..=1.0).contains(&l.loss) {
                diags.push(Diagnostic::Loss { link: i, value: l.loss });
            }
            if !(l.delay_ms >= 0.0) {
                diags.push(Diagnostic::Delay { link: i, value: l.delay_ms });
            }
            if l.channel_mhz != 20 && l.channel_mhz != 40 {
                diags.push(Diagnostic::Channel { link: i, value: l.channel_mhz });
            }
            for b in [l.bearing_a, l.bearing_b].into_iter().flatten() {
                if !(0.0..360.0).contains(&b) {
                    diags.push(Diagnostic::Bearing { link: i, value: b });
                }
            }
        }
        if gateways.len() == 1 {
            let g = self.graph();
            let reach = g.reachable_from(g.index[&gateways[0]], &[]);
            let mut edges: Vec<&Node> = self.edge_nodes().collect();
            edges.sort_by(|x, y| x.id.cmp(&y.id));
            for e in edges {
                if !reach[g.index[&e.id]] {
                    diags.push(Diagnostic::Unreachable(e.id.clone()));
                }
            }
        }
        diags
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("topology serializes")
    }

    pub fn from_json(text: &str) -> Result<Topology, TopologyError> {
        let file: TopologyFile = serde_json::from_str(text)?;
        Topology::new(file.nodes, file.links)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), TopologyError> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json() + "\n")
            .map_err(|source| TopologyError::Io { path: path.display().to_string(), source })
    }
}

impl Serialize for Topology {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct View<'a> {
            nodes: &'a [Node],
            links: &'a [Link],
        }
        View { nodes: &self.nodes, links: &self.links }.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Topology {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let file = TopologyFile::deserialize(deserializer)?;
        Topology::new(file.nodes, file.links).map_err(serde::de::Error::custom)
    }
}

/// Reads and fully validates a topology file.
pub fn load_topology(path: impl AsRef<Path>) -> Result<Topology, TopologyError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)
        .map_err(|source| TopologyError::Io { path: path.display().to_string(), source })?;
    parse_topology(&text)
}

/// Parses and fully validates topology JSON.
pub fn parse_topology(text: &str) -> Result<Topology, TopologyError> {
    let topo = Topology::from_json(text)?;
    for (i, l) in topo.links.iter().enumerate() {
        if !(l.capacity_mbps > 0.0) {
            return Err(TopologyError::NonPositiveCapacity { link: i, capacity: l.capacity_mbps });
        }
    }
    topo.gateway()?;
    let diags = topo.validate();
    if !diags.is_empty() {
        return Err(TopologyError::Invalid(diags));
    }
    Ok(topo)
}

impl Graph {
    /// Nodes reachable from `start` without entering any node in `blocked`.
    pub fn reachable_from(&self, start: usize, blocked: &[bool]) -> Vec<bool> {
        let mut seen = vec![false; self.ids.len()];
        seen[start] = true;
        let mut queue = VecDeque::from([start]);
        while let Some(u) = queue.pop_front() {
            for &(v, _) in &self.adj[u] {
                if !seen[v] && !blocked.get(v).copied().unwrap_or(false) {
                    seen[v] = true;
                    queue.push_back(v);
                }
            }
        }
        seen
    }

    /// Hop-count shortest path, exploring neighbours in id order. Hops
    /// rejected by `banned_link` are skipped.
    fn bfs_path(
        &self,
        src: usize,
        dst: usize,
        blocked: &[bool],
        banned_link: &dyn Fn(usize, usize, usize) -> bool,
    ) -> Option<Vec<usize>> {
        let mut parent = vec![usize::MAX; self.ids.len()];
        parent[src] = src;
        let mut queue = VecDeque::from([src]);
        while let Some(u) = queue.pop_front() {
            if u == dst {
                break;
            }
            for &(v, li) in &self.adj[u] {
                if parent[v] != usize::MAX || banned_link(u, v, li) {
                    continue;
                }
                if v != dst && blocked[v] {
                    continue;
                }
                parent[v] = u;
                queue.push_back(v);
            }
        }
        if parent[dst] == usize::MAX {
            return None;
        }
        let mut path = vec![dst];
        let mut cur = dst;
        while cur != src {
            cur = parent[cur];
            path.push(cur);
        }
        path.reverse();
        Some(path)
    }
}

// ---------------------------------------------------------------------------
// Max flow

const FLOW_EPS: f64 = 1e-9;

struct FlowNetwork {
    // arc i and i ^ 1 are partners
    to: Vec<usize>,
    cap: Vec<f64>,
    head: Vec<Vec<usize>>,
}

impl FlowNetwork {
    fn new(n: usize) -> Self {
        FlowNetwork { to: Vec::new(), cap: Vec::new(), head: vec![Vec::new(); n] }
    }

    /// Adds an arc pair with capacity `fwd` one way and `rev` the other.
    fn add(&mut self, u: usize, v: usize, fwd: f64, rev: f64) {
        self.head[u].push(self.to.len());
        self.to.push(v);
        self.cap.push(fwd);
        self.head[v].push(self.to.len());
        self.to.push(u);
        self.cap.push(rev);
    }

    fn bfs_levels(&self, s: usize) -> Vec<i64> {
        let mut level = vec![-1; self.head.len()];
        level[s] = 0;
        let mut q = VecDeque::from([s]);
        while let Some(u) = q.pop_front() {
            for &a in &self.head[u] {
                let v = self.to[a];
                if level[v] < 0 && self.cap[a] > FLOW_EPS {
                    level[v] = level[u] + 1;
                    q.push_back(v);
                }
            }
        }
        level
    }

    fn dfs_push(&mut self, u: usize, t: usize, limit: f64, level: &[i64], it: &mut [usize]) -> f64 {
        if u == t {
            return limit;
        }
        while it[u] < self.head[u].len() {
            let a = self.head[u][it[u]];
            let v = self.to[a];
            if self.cap[a] > FLOW_EPS && level[v] == level[u] + 1 {
                let pushed = self.dfs_push(v, t, limit.min(self.cap[a]), level, it);
                if pushed > FLOW_EPS {
                    self.cap[a] -= pushed;
                    self.cap[a ^ 1] += pushed;
                    return pushed;
                }
            }
            it[u] += 1;
        }
        0.0
    }

    /// Dinic's algorithm; leaves residual capacities in `self.cap`.
    fn max_flow(&mut self, s: usize, t: usize) -> f64 {
        let mut total = 0.0;
        loop {
            let level = self.bfs_levels(s);
            if level[t] < 0 {
                return total;
            }
            let mut it = vec![0; self.head.len()];
            loop {
                let pushed = self.dfs_push(s, t, f64::INFINITY, &level, &mut it);
                if pushed <= FLOW_EPS {
                    break;
                }
                total += pushed;
            }
        }
    }

    fn residual_reach(&self, s: usize) -> Vec<bool> {
        let level = self.bfs_levels(s);
        level.iter().map(|&l| l >= 0).collect()
    }

    /// Nodes from which `t` is reachable in the residual network.
    fn residual_coreach(&self, t: usize) -> Vec<bool> {
        let mut seen = vec![false; self.head.len()];
        seen[t] = true;
        let mut q = VecDeque::from([t]);
        while let Some(v) = q.pop_front() {
            for &a in &self.head[v] {
                // a: v -> u; its partner u -> v has residual cap[a ^ 1]
                let u = self.to[a];
                if !seen[u] && self.cap[a ^ 1] > FLOW_EPS {
                    seen[u] = true;
                    q.push_back(u);
                }
            }
        }
        seen
    }
}

/// Result of a gateway-to-edges max-flow computation.
#[derive(Clone, Debug)]
pub struct CutAnalysis {
    pub capacity: f64,
    /// Links crossing the source-minimal minimum cut, ascending index.
    pub cut_links: Vec<usize>,
    /// Nodes on the gateway side of the source-minimal cut.
    pub source_side: BTreeMap<String, bool>,
    /// Nodes that can still push flow to the edges in the residual network.
    pub sink_side: BTreeMap<String, bool>,
}

impl CutAnalysis {
    pub fn on_source_side(&self, id: &str) -> bool {
        self.source_side.get(id).copied().unwrap_or(false)
    }

    pub fn on_sink_side(&self, id: &str) -> bool {
        self.sink_side.get(id).copied().unwrap_or(false)
    }

    /// True when a new link between `x` and `y` would raise the capacity.
    pub fn bridges(&self, x: &str, y: &str) -> bool {
        (self.on_source_side(x) && self.on_sink_side(y)) || (self.on_source_side(y) && self.on_sink_side(x))
    }
}

/// Max flow from the gateway to a super-sink fed by every edge node.
pub fn analyze_cut(topo: &Topology) -> Result<CutAnalysis, TopologyError> {
    let gw = topo.gateway()?.id.clone();
    let g = topo.graph();
    let edges: Vec<usize> = topo.edge_nodes().map(|n| g.index[&n.id]).collect();
    if edges.is_empty() {
        return Err(TopologyError::NoEdgeNodes);
    }
    let n = g.ids.len();
    let sink = n;
    let mut net = FlowNetwork::new(n + 1);
    for l in topo.links() {
        net.add(g.index[&l.a], g.index[&l.b], l.capacity_mbps, l.capacity_mbps);
    }
    for &e in &edges {
        net.add(e, sink, f64::INFINITY, 0.0);
    }
    let s = g.index[&gw];
    let capacity = net.max_flow(s, sink);
    let reach = net.residual_reach(s);
    let coreach = net.residual_coreach(sink);
    let cut_links = topo
        .links()
        .iter()
        .enumerate()
        .filter(|(_, l)| reach[g.index[&l.a]] != reach[g.index[&l.b]])
        .map(|(i, _)| i)
        .collect();
    let source_side = g.ids.iter().enumerate().map(|(i, id)| (id.clone(), reach[i])).collect();
    let sink_side = g.ids.iter().enumerate().map(|(i, id)| (id.clone(), coreach[i])).collect();
    Ok(CutAnalysis { capacity, cut_links, source_side, sink_side })
}

/// Aggregate capacity deliverable from the gateway to all edge nodes, Mbps.
pub fn network_capacity(topo: &Topology) -> Result<f64, TopologyError> {
    Ok(analyze_cut(topo)?.capacity)
}

/// Links of a minimum gateway/edge cut, ascending link index.
pub fn min_cut_links(topo: &Topology) -> Result<Vec<usize>, TopologyError> {
    Ok(analyze_cut(topo)?.cut_links)
}

/// Maximum number of paths a session may use.
pub const MAX_PATHS: usize = 16;

/// Up to `k` interior-disjoint paths, found by repeatedly taking a hop-count
/// shortest path and removing its interior nodes. A direct `src`-`dst` hop is
/// used at most once.
pub fn shortest_disjoint_paths(
    topo: &Topology,
    src: &str,
    dst: &str,
    k: usize,
) -> Result<Vec<PathSpec>, TopologyError> {
    let g = topo.graph();
    let s = g.node(src)?;
    let t = g.node(dst)?;
    if s == t || k == 0 || k > MAX_PATHS {
        return Ok(Vec::new());
    }
    let mut blocked = vec![false; g.ids.len()];
    let mut direct_used = false;
    let mut out = Vec::new();
    while out.len() < k {
        let skip_direct = direct_used;
        let banned = move |u: usize, v: usize, _li: usize| skip_direct && ((u == s && v == t) || (u == t && v == s));
        let Some(seq) = g.bfs_path(s, t, &blocked, &banned) else { break };
        if seq.len() == 2 {
            direct_used = true;
        }
        for &v in &seq[1..seq.len() - 1] {
            blocked[v] = true;
        }
        let ids: Vec<String> = seq.iter().map(|&i| g.ids[i].clone()).collect();
        out.push(topo.path_from_nodes(&ids)?);
    }
    Ok(out)
}

/// Parent pointers of a tree rooted at the gateway: for every non-gateway node,
/// the upstream neighbour and the link to it. `None` unless the topology is a
/// connected tree without parallel links.
pub fn tree_parents(topo: &Topology) -> Option<BTreeMap<String, (String, usize)>> {
    let gw = topo.gateway().ok()?;
    if topo.links().len() + 1 != topo.nodes().len() {
        return None;
    }
    let g = topo.graph();
    let root = g.index[&gw.id];
    let mut parent: Vec<Option<(usize, usize)>> = vec![None; g.ids.len()];
    let mut seen = vec![false; g.ids.len()];
    seen[root] = true;
    let mut q = VecDeque::from([root]);
    while let Some(u) = q.pop_front() {
        for &(v, li) in &g.adj[u] {
            if !seen[v] {
                seen[v] = true;
                parent[v] = Some((u, li));
                q.push_back(v);
            }
        }
    }
    if seen.iter().any(|s| !s) {
        return None;
    }
    Some(
        parent
            .iter()
            .enumerate()
            .filter_map(|(v, p)| p.map(|(u, li)| (g.ids[v].clone(), (g.ids[u].clone(), li))))
            .collect(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn chain(caps: &[f64]) -> Topology {
        // g - n1 - n2 - ... - e
        let n = caps.len() + 1;
        let mut nodes = vec![Node::new("g", Role::Gateway)];
        for i in 1..n - 1 {
            nodes.push(Node::new(format!("n{i}"), Role::Backhaul));
        }
        nodes.push(Node::new("e", Role::Edge));
        let ids: Vec<String> = nodes.iter().map(|n| n.id.clone()).collect();
        let links = caps.iter().enumerate().map(|(i, &c)| Link::new(&ids[i], &ids[i + 1], c)).collect();
        Topology::new(nodes, links).unwrap()
    }

    fn diamond(ae: f64, be: f64) -> Topology {
        Topology::new(
            vec![
                Node::new("g", Role::Gateway),
                Node::new("a", Role::Backhaul),
                Node::new("b", Role::Backhaul),
                Node::new("e", Role::Edge),
            ],
            vec![
                Link::new("g", "a", 100.0),
                Link::new("g", "b", 100.0),
                Link::new("a", "e", ae),
                Link::new("b", "e", be),
            ],
        )
        .unwrap()
    }

    #[test]
    fn loads_minimal_file() {
        let text = r#"{"nodes":[{"id":"g","role":"gateway"},{"id":"a","role":"backhaul"},{"id":"e","role":"edge"}],
            "links":[{"a":"g","b":"a","capacity_mbps":100,"loss":0,"delay_ms":1,"channel_mhz":20},
                     {"a":"a","b":"e","capacity_mbps":50,"loss":0.01,"delay_ms":2,"channel_mhz":40}]}"#;
        let t = parse_topology(text).unwrap();
        assert_eq!(t.nodes().len(), 3);
        assert_eq!(t.links().len(), 2);
    }

    #[test]
    fn rejects_dangling_endpoint() {
        let text = r#"{"nodes":[{"id":"g","role":"gateway"},{"id":"e","role":"edge"}],
            "links":[{"a":"g","b":"z","capacity_mbps":100,"loss":0,"delay_ms":0,"channel_mhz":20}]}"#;
        let err = parse_topology(text).unwrap_err();
        assert!(matches!(&err, TopologyError::DanglingEndpoint { node, .. } if node == "z"));
        assert!(err.to_string().contains("\"z\""));
    }

    #[test]
    fn rejects_two_gateways() {
        let text = r#"{"nodes":[{"id":"g","role":"gateway"},{"id":"h","role":"gateway"},{"id":"e","role":"edge"}],
            "links":[{"a":"g","b":"e","capacity_mbps":100,"loss":0,"delay_ms":0,"channel_mhz":20},
                     {"a":"h","b":"e","capacity_mbps":100,"loss":0,"delay_ms":0,"channel_mhz":20}]}"#;
        let err = parse_topology(text).unwrap_err();
        assert!(err.to_string().contains("multiple gateways"));
    }

    #[test]
    fn rejects_duplicates_zero_capacity_and_missing_gateway() {
        let dup = r#"{"nodes":[{"id":"g","role":"gateway"},{"id":"g","role":"edge"}],"links":[]}"#;
        assert!(matches!(parse_topology(dup), Err(TopologyError::DuplicateNode(id)) if id == "g"));
        let zero = r#"{"nodes":[{"id":"g","role":"gateway"},{"id":"e","role":"edge"}],
            "links":[{"a":"g","b":"e","capacity_mbps":0,"loss":0,"delay_ms":0,"channel_mhz":20}]}"#;
        assert!(matches!(parse_topology(zero), Err(TopologyError::NonPositiveCapacity { link: 0, .. })));
        let nogw = r#"{"nodes":[{"id":"a","role":"backhaul"},{"id":"e","role":"edge"}],
            "links":[{"a":"a","b":"e","capacity_mbps":5,"loss":0,"delay_ms":0,"channel_mhz":20}]}"#;
        assert!(matches!(parse_topology(nogw), Err(TopologyError::NoGateway)));
        assert!(matches!(parse_topology("{"), Err(TopologyError::Parse(_))));
    }

    #[test]
    fn validate_reports_each_violation() {
        assert!(chain(&[100.0, 50.0]).validate().is_empty());

        let t = Topology::new(
            vec![Node::new("g", Role::Gateway), Node::new("a", Role::Backhaul), Node::new("e", Role::Edge)],
            vec![Link::new("g", "a", 10.0)],
        )
        .unwrap();
        let d = t.validate();
        assert_eq!(d, vec![Diagnostic::Unreachable("e".into())]);
        assert_eq!(d[0].to_string(), "edge e unreachable");

        let t = chain(&[10.0]).with_links(vec![Link::new("g", "e", 10.0).with_loss(1.2)]).unwrap();
        let d = t.validate();
        assert_eq!(d.len(), 1);
        assert!(matches!(d[0], Diagnostic::Loss { link: 0, .. }));
    }

    #[test]
    fn capacity_examples() {
        assert_eq!(network_capacity(&chain(&[100.0])).unwrap(), 100.0);
        let par = chain(&[100.0]).with_link(Link::new("g", "e", 100.0)).unwrap();
        assert_eq!(network_capacity(&par).unwrap(), 200.0);

        let star = Topology::new(
            vec![
                Node::new("g", Role::Gateway),
                Node::new("a", Role::Backhaul),
                Node::new("e1", Role::Edge),
                Node::new("e2", Role::Edge),
            ],
            vec![Link::new("g", "a", 100.0), Link::new("a", "e1", 60.0), Link::new("a", "e2", 60.0)],
        )
        .unwrap();
        assert_eq!(network_capacity(&star).unwrap(), 100.0);

        let none = Topology::new(
            vec![Node::new("g", Role::Gateway), Node::new("a", Role::Backhaul)],
            vec![Link::new("g", "a", 1.0)],
        )
        .unwrap();
        assert!(matches!(network_capacity(&none), Err(TopologyError::NoEdgeNodes)));
    }

    #[test]
    fn min_cut_examples() {
        assert_eq!(min_cut_links(&chain(&[100.0, 50.0])).unwrap(), vec![1]);
        assert_eq!(min_cut_links(&chain(&[100.0])).unwrap(), vec![0]);
        let d = diamond(30.0, 30.0);
        assert_eq!(min_cut_links(&d).unwrap(), vec![2, 3]);
        assert_eq!(network_capacity(&d).unwrap(), 60.0);
    }

    #[test]
    fn disjoint_path_examples() {
        let d = diamond(30.0, 30.0);
        let paths = shortest_disjoint_paths(&d, "g", "e", 2).unwrap();
        assert_eq!(paths.len(), 2);
        assert_eq!(paths[0].nodes, ["g", "a", "e"]);
        assert_eq!(paths[1].nodes, ["g", "b", "e"]);
        assert_eq!(paths[0].bottleneck_mbps, 30.0);

        let tree = chain(&[10.0, 10.0]);
        assert_eq!(shortest_disjoint_paths(&tree, "g", "e", 3).unwrap().len(), 1);

        // five parallel two-hop chains between s and d
        let mut nodes = vec![Node::new("s", Role::Gateway), Node::new("d", Role::Edge)];
        let mut links = Vec::new();
        for i in 0..5 {
            nodes.push(Node::new(format!("m{i}"), Role::Backhaul));
            links.push(Link::new("s", format!("m{i}"), 10.0));
            links.push(Link::new(format!("m{i}"), "d", 10.0));
        }
        let t = Topology::new(nodes, links).unwrap();
        assert_eq!(shortest_disjoint_paths(&t, "s", "d", 5).unwrap().len(), 5);
        assert_eq!(shortest_disjoint_paths(&t, "s", "d", 16).unwrap().len(), 5);
        assert!(shortest_disjoint_paths(&t, "s", "s", 2).unwrap().is_empty());
    }

    #[test]
    fn direct_hop_used_once() {
        let t = chain(&[10.0]).with_link(Link::new("g", "e", 20.0)).unwrap();
        let paths = shortest_disjoint_paths(&t, "g", "e", 4).unwrap();
        assert_eq!(paths.len(), 1);
        assert_eq!(paths[0].links, vec![1]);
    }

    #[test]
    fn json_roundtrip_is_exact() {
        let mut t = diamond(30.5, 0.1 + 0.2);
        t.nodes[1] = t.nodes[1].clone().with_coords(39.1234567, -123.7654321);
        t.links[0].bearing_a = Some(12.5);
        let back = Topology::from_json(&t.to_json()).unwrap();
        assert_eq!(back, t);
    }

    #[test]
    fn tree_parents_rejects_cycles() {
        assert!(tree_parents(&chain(&[1.0, 2.0])).is_some());
        assert!(tree_parents(&diamond(1.0, 1.0)).is_none());
    }
}

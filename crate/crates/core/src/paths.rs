//! Path multiplicity analysis: topology augmentation, simple-path counting,
//! coordinate-driven topology synthesis, and controller-side path grouping.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::registry::Registry;
use crate::topo::{
    shortest_disjoint_paths, tree_parents, Link, Node, PathSpec, Role, Topology, TopologyError, MAX_PATHS,
};

#[derive(Debug, Error)]
pub enum PathError {
    #[error("upstream neighbor undefined: topology is not a tree rooted at the gateway")]
    NotATree,
    #[error("{0:?} is not an edge node")]
    NotEdge(String),
    #[error("disconnected pair {0:?} -> {1:?}")]
    Disconnected(String, String),
    #[error("multiplicity k must be in 1..=16, got {0}")]
    BadMultiplicity(usize),
    #[error("degenerate single-node topology")]
    Degenerate,
    #[error("need at least 2 coordinate rows, got {0}")]
    TooFewPoints(usize),
    #[error("invalid path group: {0}")]
    InvalidGroup(String),
    #[error("line {line}: {message}")]
    Csv { line: u64, message: String },
    #[error(transparent)]
    Topology(#[from] TopologyError),
    #[error(transparent)]
    Strategy(#[from] crate::registry::UnknownStrategy),
}

fn rng_for(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

// ---------------------------------------------------------------------------
// Augmentation

/// Template for a new link at `x`/`y`: copies the lowest-capacity link already
/// incident to either endpoint (lowest index on ties).
fn inherited_link(topo: &Topology, x: &str, y: &str) -> Link {
    let template = topo
        .links()
        .iter()
        .filter(|l| l.touches(x) || l.touches(y))
        .fold(None::<&Link>, |best, l| match best {
            Some(b) if b.capacity_mbps <= l.capacity_mbps => Some(b),
            _ => Some(l),
        })
        .or_else(|| {
            topo.links().iter().fold(None::<&Link>, |best, l| match best {
                Some(b) if b.capacity_mbps <= l.capacity_mbps => Some(b),
                _ => Some(l),
            })
        });
    match template {
        Some(t) => Link { a: x.to_string(), b: y.to_string(), bearing_a: None, bearing_b: None, ..t.clone() },
        None => Link::new(x, y, 1.0),
    }
}

/// Adds up to `n` links between uniformly drawn node pairs that are not
/// adjacent in `topo`.
pub fn add_cross_links(topo: &Topology, n: usize, seed: u64) -> Result<Topology, PathError> {
    let mut ids: Vec<&str> = topo.nodes().iter().map(|n| n.id.as_str()).collect();
    ids.sort_unstable();
    let mut pairs = Vec::new();
    for (i, x) in ids.iter().enumerate() {
        for y in &ids[i + 1..] {
            if !topo.adjacent(x, y) {
                pairs.push((*x, *y));
            }
        }
    }
    let mut rng = rng_for(seed);
    let take = n.min(pairs.len());
    let mut links = topo.links().to_vec();
    for idx in sample(&mut rng, pairs.len(), take).into_iter() {
        let (x, y) = pairs[idx];
        links.push(inherited_link(topo, x, y));
    }
    Ok(topo.with_links(links)?)
}

/// Adds `n` links, each duplicating the upstream link of a uniformly drawn
/// non-gateway node (with replacement). Requires a tree.
pub fn add_parallel_links(topo: &Topology, n: usize, seed: u64) -> Result<Topology, PathError> {
    let parents = tree_parents(topo).ok_or(PathError::NotATree)?;
    let mut links = topo.links().to_vec();
    if parents.is_empty() || n == 0 {
        return Ok(topo.with_links(links)?);
    }
    // BTreeMap iteration is ascending by node id.
    let nodes: Vec<&(String, usize)> = parents.values().collect();
    let mut rng = rng_for(seed);
    for _ in 0..n {
        let (_, li) = nodes[rng.gen_range(0..nodes.len())];
        links.push(topo.links()[*li].clone());
    }
    Ok(topo.with_links(links)?)
}

/// `n` parallel links followed by `n` cross links, both drawn with `seed`.
/// The result contains the parallel-only augmentation as a subgraph.
pub fn add_both_links(topo: &Topology, n: usize, seed: u64) -> Result<Topology, PathError> {
    let with_parallel = add_parallel_links(topo, n, seed)?;
    let crossed = add_cross_links(topo, n, seed)?;
    let mut links = with_parallel.links().to_vec();
    links.extend_from_slice(&crossed.links()[topo.links().len()..]);
    Ok(topo.with_links(links)?)
}

/// A way of adding links to a topology, selectable by name.
pub trait Augmenter: Send + Sync {
    fn name(&self) -> &'static str;
    fn augment(&self, topo: &Topology, n: usize, seed: u64) -> Result<Topology, PathError>;
}

struct Cross;
struct Parallel;
struct Both;

impl Augmenter for Cross {
    fn name(&self) -> &'static str {
        "cross"
    }
    fn augment(&self, topo: &Topology, n: usize, seed: u64) -> Result<Topology, PathError> {
        add_cross_links(topo, n, seed)
    }
}

impl Augmenter for Parallel {
    fn name(&self) -> &'static str {
        "parallel"
    }
    fn augment(&self, topo: &Topology, n: usize, seed: u64) -> Result<Topology, PathError> {
        add_parallel_links(topo, n, seed)
    }
}

impl Augmenter for Both {
    fn name(&self) -> &'static str {
        "both"
    }
    fn augment(&self, topo: &Topology, n: usize, seed: u64) -> Result<Topology, PathError> {
        add_both_links(topo, n, seed)
    }
}

pub fn augmenters() -> Registry<dyn Augmenter> {
    let mut r: Registry<dyn Augmenter> = Registry::new("augmentation");
    r.register("cross", &[], Box::new(Cross));
    r.register("parallel", &[], Box::new(Parallel));
    r.register("both", &[], Box::new(Both));
    r
}

// ---------------------------------------------------------------------------
// Path counting

/// Default enumeration cap per edge node.
pub const DEFAULT_PATH_CAP: u64 = 1_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum PathCount {
    Exact(u64),
    /// Enumeration stopped after finding this many paths.
    Truncated(u64),
}

impl PathCount {
    pub fn value(self) -> u64 {
        match self {
            PathCount::Exact(v) | PathCount::Truncated(v) => v,
        }
    }

    pub fn is_truncated(self) -> bool {
        matches!(self, PathCount::Truncated(_))
    }
}

/// Collapsed simple graph: neighbour lists carry the number of parallel links.
struct Multigraph {
    adj: Vec<Vec<(usize, u64)>>,
}

impl Multigraph {
    fn build(topo: &Topology) -> (Multigraph, BTreeMap<String, usize>) {
        let index: BTreeMap<String, usize> = topo.nodes().iter().enumerate().map(|(i, n)| (n.id.clone(), i)).collect();
        let mut mult: BTreeMap<(usize, usize), u64> = BTreeMap::new();
        for l in topo.links() {
            let (a, b) = (index[&l.a], index[&l.b]);
            *mult.entry((a.min(b), a.max(b))).or_default() += 1;
        }
        let mut adj = vec![Vec::new(); index.len()];
        for (&(a, b), &m) in &mult {
            adj[a].push((b, m));
            adj[b].push((a, m));
        }
        (Multigraph { adj }, index)
    }
}

struct Counter<'a> {
    g: &'a Multigraph,
    target: usize,
    visited: Vec<bool>,
    count: u64,
    cap: u64,
}

impl Counter<'_> {
    fn dfs(&mut self, u: usize, weight: u64) -> bool {
        if u == self.target {
            self.count = self.count.saturating_add(weight);
            return self.count >= self.cap;
        }
        if !self.can_reach(u) {
            return false;
        }
        self.visited[u] = true;
        for i in 0..self.g.adj[u].len() {
            let (v, m) = self.g.adj[u][i];
            if !self.visited[v] && self.dfs(v, weight.saturating_mul(m)) {
                self.visited[u] = false;
                return true;
            }
        }
        self.visited[u] = false;
        false
    }

    /// Whether the target is reachable from `u` avoiding visited nodes.
    fn can_reach(&self, u: usize) -> bool {
        let mut seen = self.visited.clone();
        seen[u] = true;
        let mut q = VecDeque::from([u]);
        while let Some(x) = q.pop_front() {
            for &(v, _) in &self.g.adj[x] {
                if v == self.target {
                    return true;
                }
                if !seen[v] {
                    seen[v] = true;
                    q.push_back(v);
                }
            }
        }
        false
    }
}

/// Number of simple paths (as link sequences) from `edge` to the gateway,
/// stopping at `cap`.
pub fn count_paths(topo: &Topology, edge: &str, cap: u64) -> Result<PathCount, PathError> {
    let node = topo.node(edge).ok_or_else(|| TopologyError::UnknownNode(edge.to_string()))?;
    if node.role != Role::Edge {
        return Err(PathError::NotEdge(edge.to_string()));
    }
    let gw = topo.gateway()?.id.clone();
    let (g, index) = Multigraph::build(topo);
    let cap = cap.max(1);
    let mut c = Counter { g: &g, target: index[&gw], visited: vec![false; index.len()], count: 0, cap };
    let hit_cap = c.dfs(index[edge], 1);
    Ok(if hit_cap { PathCount::Truncated(cap) } else { PathCount::Exact(c.count) })
}

/// Path count for every edge node, ascending id.
pub fn edge_path_counts(topo: &Topology, cap: u64) -> Result<Vec<(String, PathCount)>, PathError> {
    let mut edges: Vec<&str> = topo.edge_nodes().map(|n| n.id.as_str()).collect();
    edges.sort_unstable();
    edges.into_iter().map(|e| Ok((e.to_string(), count_paths(topo, e, cap)?))).collect()
}

/// Empirical CDF of per-edge-node path counts; truncated counts sit at `cap`.
pub fn path_count_cdf(topo: &Topology, cap: u64) -> Result<Vec<(u64, f64)>, PathError> {
    let counts = edge_path_counts(topo, cap)?;
    Ok(cdf_of(counts.iter().map(|(_, c)| c.value())))
}

pub fn cdf_of(values: impl Iterator<Item = u64>) -> Vec<(u64, f64)> {
    let mut hist: BTreeMap<u64, usize> = BTreeMap::new();
    let mut total = 0usize;
    for v in values {
        *hist.entry(v).or_default() += 1;
        total += 1;
    }
    let mut acc = 0usize;
    hist.into_iter()
        .map(|(v, n)| {
            acc += n;
            (v, acc as f64 / total as f64)
        })
        .collect()
}

/// Per-edge path counts before and after an augmentation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AugmentationReport {
    pub links_added: Vec<Link>,
    pub counts: Vec<EdgeCounts>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EdgeCounts {
    pub node: String,
    pub before: PathCount,
    pub after: PathCount,
}

impl AugmentationReport {
    pub fn compare(before: &Topology, after: &Topology, cap: u64) -> Result<Self, PathError> {
        let links_added = after.links()[before.links().len().min(after.links().len())..].to_vec();
        let b = edge_path_counts(before, cap)?;
        let a = edge_path_counts(after, cap)?;
        let counts =
            b.into_iter().zip(a).map(|((node, before), (_, after))| EdgeCounts { node, before, after }).collect();
        Ok(AugmentationReport { links_added, counts })
    }

    /// CSV `node,before,after,truncated`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("node,before,after,truncated\n");
        for c in &self.counts {
            out.push_str(&format!("{},{},{},{}\n", c.node, c.before.value(), c.after.value(), c.after.is_truncated()));
        }
        out
    }
}

/// CSV `path_count,cum_fraction`.
pub fn cdf_to_csv(cdf: &[(u64, f64)]) -> String {
    let mut out = String::from("path_count,cum_fraction\n");
    for (v, f) in cdf {
        out.push_str(&format!("{v},{f}\n"));
    }
    out
}

// ---------------------------------------------------------------------------
// Synthesis

const EARTH_RADIUS_M: f64 = 6_371_000.0;
const LIGHT_M_PER_MS: f64 = 299_792.458;

/// Equirectangular distance in metres.
pub fn distance_m(a: (f64, f64), b: (f64, f64)) -> f64 {
    let mean_lat = ((a.0 + b.0) / 2.0).to_radians();
    let dx = (b.1 - a.1).to_radians() * mean_lat.cos();
    let dy = (b.0 - a.0).to_radians();
    EARTH_RADIUS_M * (dx * dx + dy * dy).sqrt()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Coordinate {
    pub id: String,
    pub lat: f64,
    pub lon: f64,
}

/// Reads a coordinates CSV with header `id,lat,lon`.
pub fn parse_coordinates_csv(reader: impl std::io::Read) -> Result<Vec<Coordinate>, PathError> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    rdr.deserialize()
        .map(|r| {
            r.map_err(|e: csv::Error| PathError::Csv {
                line: e.position().map(|p| p.line()).unwrap_or(0),
                message: e.to_string(),
            })
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SynthParams {
    pub fanout: usize,
    pub cluster_radius_m: f64,
    pub link_capacity_mbps: f64,
}

impl Default for SynthParams {
    fn default() -> Self {
        SynthParams { fanout: 10, cluster_radius_m: 500.0, link_capacity_mbps: 10.0 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Synthesis {
    pub topology: Topology,
    /// Cluster representative id -> member ids (including itself).
    pub clusters: BTreeMap<String, Vec<String>>,
    pub depths: BTreeMap<String, usize>,
}

impl Synthesis {
    /// Number of nodes at each depth, index = depth.
    pub fn depth_histogram(&self) -> Vec<usize> {
        let max = self.depths.values().copied().max().unwrap_or(0);
        let mut h = vec![0; max + 1];
        for &d in self.depths.values() {
            h[d] += 1;
        }
        h
    }
}

/// Builds a layered multipath topology from site coordinates.
///
/// Sites within `cluster_radius_m` of a cluster seed (taken in ascending id
/// order) merge into the seed. The cluster nearest the centroid becomes the
/// gateway; depths are hop counts from it over the Euclidean minimum spanning
/// tree. Deepest first, every node then links to `min(fanout, available)`
/// uniformly drawn distinct nodes one level up.
pub fn synthesize_topology(
    coordinates: &[Coordinate],
    params: &SynthParams,
    seed: u64,
) -> Result<Synthesis, PathError> {
    if coordinates.len() < 2 {
        return Err(PathError::TooFewPoints(coordinates.len()));
    }
    let mut pts: Vec<&Coordinate> = coordinates.iter().collect();
    pts.sort_by(|a, b| a.id.cmp(&b.id));

    let mut clusters: BTreeMap<String, Vec<String>> = BTreeMap::new();
    let mut reps: Vec<&Coordinate> = Vec::new();
    let mut assigned = vec![false; pts.len()];
    for i in 0..pts.len() {
        if assigned[i] {
            continue;
        }
        assigned[i] = true;
        let seed_pt = pts[i];
        let mut members = vec![seed_pt.id.clone()];
        for j in i + 1..pts.len() {
            if !assigned[j]
                && distance_m((seed_pt.lat, seed_pt.lon), (pts[j].lat, pts[j].lon)) <= params.cluster_radius_m
            {
                assigned[j] = true;
                members.push(pts[j].id.clone());
            }
        }
        clusters.insert(seed_pt.id.clone(), members);
        reps.push(seed_pt);
    }
    if reps.len() < 2 {
        return Err(PathError::Degenerate);
    }

    let n = reps.len();
    let pos = |i: usize| (reps[i].lat, reps[i].lon);
    let centroid =
        (reps.iter().map(|c| c.lat).sum::<f64>() / n as f64, reps.iter().map(|c| c.lon).sum::<f64>() / n as f64);
    let mut gw = 0;
    for i in 1..n {
        if distance_m(pos(i), centroid) < distance_m(pos(gw), centroid) {
            gw = i;
        }
    }

    // Prim's MST from the gateway; ties resolve to the lower index.
    let mut in_tree = vec![false; n];
    let mut best = vec![(f64::INFINITY, usize::MAX); n];
    let mut tree_adj = vec![Vec::new(); n];
    best[gw] = (0.0, usize::MAX);
    for _ in 0..n {
        let u =
            (0..n).filter(|&i| !in_tree[i]).min_by(|&a, &b| best[a].0.total_cmp(&best[b].0).then(a.cmp(&b))).unwrap();
        in_tree[u] = true;
        if best[u].1 != usize::MAX {
            tree_adj[u].push(best[u].1);
            tree_adj[best[u].1].push(u);
        }
        for v in 0..n {
            if !in_tree[v] {
                let d = distance_m(pos(u), pos(v));
                if d < best[v].0 {
                    best[v] = (d, u);
                }
            }
        }
    }
    let mut depth = vec![usize::MAX; n];
    depth[gw] = 0;
    let mut q = VecDeque::from([gw]);
    while let Some(u) = q.pop_front() {
        let mut next = tree_adj[u].clone();
        next.sort_unstable();
        for v in next {
            if depth[v] == usize::MAX {
                depth[v] = depth[u] + 1;
                q.push_back(v);
            }
        }
    }

    let max_depth = depth.iter().copied().max().unwrap_or(0);
    let mut layers: Vec<Vec<usize>> = vec![Vec::new(); max_depth + 1];
    for (i, &d) in depth.iter().enumerate() {
        layers[d].push(i);
    }
    let mut rng = rng_for(seed);
    let mut links = Vec::new();
    let mut has_child = vec![false; n];
    for d in (1..=max_depth).rev() {
        let upper = &layers[d - 1];
        for &v in &layers[d] {
            let take = params.fanout.max(1).min(upper.len());
            let mut picks: Vec<usize> = sample(&mut rng, upper.len(), take).into_iter().map(|i| upper[i]).collect();
            picks.sort_unstable();
            for p in picks {
                has_child[p] = true;
                let dist = distance_m(pos(v), pos(p));
                links.push(
                    Link::new(&reps[v].id, &reps[p].id, params.link_capacity_mbps).with_delay_ms(dist / LIGHT_M_PER_MS),
                );
            }
        }
    }
    let nodes = (0..n)
        .map(|i| {
            let role = if i == gw {
                Role::Gateway
            } else if has_child[i] {
                Role::Backhaul
            } else {
                Role::Edge
            };
            Node::new(&reps[i].id, role).with_coords(reps[i].lat, reps[i].lon)
        })
        .collect();
    let topology = Topology::new(nodes, links)?;
    let depths = (0..n).map(|i| (reps[i].id.clone(), depth[i])).collect();
    Ok(Synthesis { topology, clusters, depths })
}

// ---------------------------------------------------------------------------
// Path groups

/// Capacity-proportional weights.
pub fn capacity_weights(paths: &[PathSpec]) -> Vec<f64> {
    let total: f64 = paths.iter().map(|p| p.bottleneck_mbps).sum();
    if !(total > 0.0) {
        return vec![1.0 / paths.len() as f64; paths.len()];
    }
    paths.iter().map(|p| p.bottleneck_mbps / total).collect()
}

/// Interior-disjoint paths used together by one session, with per-path weights.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PathGroup {
    paths: Vec<PathSpec>,
    weights: Vec<f64>,
}

impl PathGroup {
    pub fn new(paths: Vec<PathSpec>, weights: Vec<f64>) -> Result<PathGroup, PathError> {
        if paths.is_empty() || paths.len() > MAX_PATHS {
            return Err(PathError::BadMultiplicity(paths.len()));
        }
        if weights.len() != paths.len() {
            return Err(PathError::InvalidGroup(format!("{} weights for {} paths", weights.len(), paths.len())));
        }
        check_weights(&weights)?;
        let mut interiors = BTreeSet::new();
        for p in &paths {
            for id in p.interior() {
                if !interiors.insert(id.clone()) {
                    return Err(PathError::InvalidGroup(format!("paths share interior node {id}")));
                }
            }
        }
        Ok(PathGroup { paths, weights })
    }

    /// Capacity-weighted group over `paths`.
    pub fn weighted_by_capacity(paths: Vec<PathSpec>) -> Result<PathGroup, PathError> {
        let w = capacity_weights(&paths);
        PathGroup::new(paths, w)
    }

    pub fn paths(&self) -> &[PathSpec] {
        &self.paths
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn k(&self) -> usize {
        self.paths.len()
    }

    pub fn set_weights(&mut self, weights: Vec<f64>) -> Result<(), PathError> {
        if weights.len() != self.paths.len() {
            return Err(PathError::InvalidGroup("weight count mismatch".into()));
        }
        check_weights(&weights)?;
        self.weights = weights;
        Ok(())
    }
}

fn check_weights(w: &[f64]) -> Result<(), PathError> {
    if w.iter().any(|x| !(*x >= 0.0)) {
        return Err(PathError::InvalidGroup("negative weight".into()));
    }
    let sum: f64 = w.iter().sum();
    if (sum - 1.0).abs() > 1e-9 {
        return Err(PathError::InvalidGroup(format!("weights sum to {sum}, expected 1")));
    }
    Ok(())
}

/// Per-switch outbound port weights aggregated from path weights and
/// normalised per switch.
pub fn port_weights(groups: &[PathGroup]) -> BTreeMap<(String, String), f64> {
    let mut raw: BTreeMap<(String, String), f64> = BTreeMap::new();
    for g in groups {
        for (p, &w) in g.paths.iter().zip(&g.weights) {
            for hop in p.nodes.windows(2) {
                *raw.entry((hop[0].clone(), hop[1].clone())).or_default() += w;
            }
        }
    }
    let mut per_node: BTreeMap<String, f64> = BTreeMap::new();
    for ((u, _), w) in &raw {
        *per_node.entry(u.clone()).or_default() += w;
    }
    raw.into_iter()
        .map(|((u, v), w)| {
            let total = per_node[&u];
            let share = if total > 0.0 { w / total } else { 0.0 };
            ((u, v), share)
        })
        .collect()
}

/// Up to `k` interior-disjoint shortest paths, weighted by capacity.
pub fn build_path_group(topo: &Topology, src: &str, dst: &str, k: usize) -> Result<PathGroup, PathError> {
    if k == 0 || k > MAX_PATHS {
        return Err(PathError::BadMultiplicity(k));
    }
    let paths = shortest_disjoint_paths(topo, src, dst, k)?;
    if paths.is_empty() {
        return Err(PathError::Disconnected(src.to_string(), dst.to_string()));
    }
    PathGroup::weighted_by_capacity(paths)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn chain3() -> Topology {
        Topology::new(
            vec![Node::new("g", Role::Gateway), Node::new("a", Role::Backhaul), Node::new("e", Role::Edge)],
            vec![Link::new("g", "a", 100.0), Link::new("a", "e", 40.0)],
        )
        .unwrap()
    }

    fn diamond() -> Topology {
        Topology::new(
            vec![
                Node::new("g", Role::Gateway),
                Node::new("a", Role::Backhaul),
                Node::new("b", Role::Backhaul),
                Node::new("e", Role::Edge),
            ],
            vec![
                Link::new("g", "a", 100.0),
                Link::new("g", "b", 300.0),
                Link::new("a", "e", 100.0),
                Link::new("b", "e", 300.0),
            ],
        )
        .unwrap()
    }

    #[test]
    fn cross_links() {
        let t = chain3();
        assert_eq!(add_cross_links(&t, 0, 1).unwrap(), t);
        let x = add_cross_links(&t, 1, 9).unwrap();
        assert_eq!(x.links().len(), 3);
        assert!(x.links()[2].joins("g", "e"));
        assert_eq!(x.links()[2].capacity_mbps, 40.0);
        // only one non-adjacent pair exists
        assert_eq!(add_cross_links(&t, 5, 9).unwrap().links().len(), 3);
    }

    #[test]
    fn parallel_links() {
        let t = chain3();
        assert_eq!(add_parallel_links(&t, 0, 1).unwrap(), t);
        let picks: BTreeSet<String> = (0..20)
            .map(|seed| {
                let p = add_parallel_links(&t, 1, seed).unwrap();
                let l = &p.links()[2];
                format!("{}-{}", l.a, l.b)
            })
            .collect();
        assert_eq!(picks, BTreeSet::from(["g-a".to_string(), "a-e".to_string()]));
        assert!(matches!(add_parallel_links(&diamond(), 1, 0), Err(PathError::NotATree)));
    }

    #[test]
    fn count_examples() {
        assert_eq!(count_paths(&chain3(), "e", 10).unwrap(), PathCount::Exact(1));
        assert_eq!(count_paths(&diamond(), "e", 10).unwrap(), PathCount::Exact(2));
        assert_eq!(count_paths(&diamond(), "e", 2).unwrap(), PathCount::Truncated(2));
        assert!(matches!(count_paths(&diamond(), "a", 10), Err(PathError::NotEdge(_))));
        let doubled = chain3().with_link(Link::new("a", "g", 5.0)).unwrap();
        assert_eq!(count_paths(&doubled, "e", 10).unwrap(), PathCount::Exact(2));
        let cut = Topology::new(vec![Node::new("g", Role::Gateway), Node::new("e", Role::Edge)], vec![]).unwrap();
        assert_eq!(count_paths(&cut, "e", 10).unwrap(), PathCount::Exact(0));
    }

    #[test]
    fn cdf_examples() {
        assert_eq!(path_count_cdf(&chain3(), 100).unwrap(), vec![(1, 1.0)]);
        assert_eq!(cdf_of([1u64, 2].into_iter()), vec![(1, 0.5), (2, 1.0)]);
        assert_eq!(cdf_to_csv(&[(1, 0.5), (2, 1.0)]), "path_count,cum_fraction\n1,0.5\n2,1\n");
    }

    fn coord(id: &str, lat: f64, lon: f64) -> Coordinate {
        Coordinate { id: id.into(), lat, lon }
    }

    #[test]
    fn synthesis_examples() {
        // ~300 m apart at this latitude
        let close = [coord("a", 39.0, -123.0), coord("b", 39.0027, -123.0)];
        assert!(matches!(synthesize_topology(&close, &SynthParams::default(), 1), Err(PathError::Degenerate)));
        let step = 1000.0 / EARTH_RADIUS_M;
        let line =
            [coord("p1", 0.0, 0.0), coord("p2", 0.0, step.to_degrees()), coord("p3", 0.0, 2.0 * step.to_degrees())];
        let s = synthesize_topology(&line, &SynthParams::default(), 1).unwrap();
        assert_eq!(s.topology.gateway().unwrap().id, "p2");
        assert_eq!(s.topology.links().len(), 2);
        assert!(s.topology.adjacent("p1", "p2") && s.topology.adjacent("p2", "p3"));
        assert!(s.topology.validate().is_empty());
        assert_eq!(s.depth_histogram(), vec![1, 2]);
        assert!(matches!(synthesize_topology(&line[..1], &SynthParams::default(), 1), Err(PathError::TooFewPoints(1))));
    }

    #[test]
    fn weights() {
        let d = diamond();
        let g = build_path_group(&d, "g", "e", 2).unwrap();
        assert_eq!(g.k(), 2);
        assert_eq!(g.weights(), &[0.25, 0.75]);
        let t = build_path_group(&chain3(), "g", "e", 5).unwrap();
        assert_eq!(t.weights(), &[1.0]);
        let iso = Topology::new(vec![Node::new("g", Role::Gateway), Node::new("e", Role::Edge)], vec![]).unwrap();
        assert!(matches!(build_path_group(&iso, "g", "e", 2), Err(PathError::Disconnected(..))));
        assert!(matches!(build_path_group(&d, "g", "e", 17), Err(PathError::BadMultiplicity(17))));
    }

    #[test]
    fn port_weight_examples() {
        let t = Topology::new(
            ["s", "a", "b", "d"]
                .iter()
                .map(|id| Node::new(*id, if *id == "s" { Role::Gateway } else { Role::Edge }))
                .collect(),
            vec![
                Link::new("s", "a", 10.0),
                Link::new("a", "d", 10.0),
                Link::new("a", "b", 10.0),
                Link::new("b", "d", 10.0),
            ],
        )
        .unwrap();
        let p1 = t.path_from_nodes(&["s".into(), "a".into(), "d".into()]).unwrap();
        let p2 = t.path_from_nodes(&["s".into(), "a".into(), "b".into(), "d".into()]).unwrap();
        // not interior-disjoint, so bypass the group constructor
        let g = PathGroup { paths: vec![p1.clone(), p2], weights: vec![0.6, 0.4] };
        let w = port_weights(&[g]);
        assert_eq!(w[&("s".into(), "a".into())], 1.0);
        assert!((w[&("a".into(), "d".into())] - 0.6).abs() < 1e-12);
        assert!((w[&("a".into(), "b".into())] - 0.4).abs() < 1e-12);
        assert_eq!(w[&("b".into(), "d".into())], 1.0);

        let single = PathGroup::new(vec![p1], vec![1.0]).unwrap();
        assert!(port_weights(&[single]).values().all(|&x| x == 1.0));
    }

    #[test]
    fn group_validation() {
        let d = diamond();
        let g = build_path_group(&d, "g", "e", 2).unwrap();
        assert!(PathGroup::new(g.paths().to_vec(), vec![0.5, 0.6]).is_err());
        assert!(PathGroup::new(g.paths().to_vec(), vec![1.5, -0.5]).is_err());
        assert!(PathGroup::new(vec![g.paths()[0].clone(), g.paths()[0].clone()], vec![0.5, 0.5]).is_err());
    }
}

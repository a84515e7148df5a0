//! Price/performance modelling and topology redesign.
//!
//! Hardware cost is modelled as a quadratic in link capacity,
//! `cost(C) = alpha*C^2 + beta*C + gamma`, fitted by least squares to a
//! price list. Because the fixed term `gamma` is paid once per physical link
//! while the quadratic term shrinks as capacity is split, replacing one fast
//! link with `n` slower parallel links can be cheaper; the planners below
//! exploit that subject to per-site spectrum limits.

use std::collections::BTreeSet;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::registry::Registry;
use crate::topo::{analyze_cut, network_capacity, Link, Topology, TopologyError};

#[derive(Debug, Error)]
pub enum PlanError {
    #[error("underdetermined fit: need at least 3 distinct capacities, got {0}")]
    Underdetermined(usize),
    #[error("capacity must be positive, got {0}")]
    NonPositiveCapacity(f64),
    #[error("link multiplicity must be at least 1")]
    ZeroMultiplicity,
    #[error("cost ceiling {ceiling:.2} is below current topology cost {cost:.2}")]
    CeilingBelowCost { ceiling: f64, cost: f64 },
    #[error("line {line}: {message}")]
    Csv { line: u64, message: String },
    #[error("{0}")]
    Io(String),
    #[error(transparent)]
    Topology(#[from] TopologyError),
    #[error(transparent)]
    Strategy(#[from] crate::registry::UnknownStrategy),
}

/// One row of a hardware price list. `cost` covers both ends of the link.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PricePoint {
    pub vendor: String,
    pub model: String,
    #[serde(rename = "capacity_mbps")]
    pub capacity: f64,
    #[serde(rename = "price_usd_pair")]
    pub cost: f64,
}

/// Reads a price CSV with header `vendor,model,capacity_mbps,price_usd_pair`.
pub fn read_price_csv(path: impl AsRef<Path>) -> Result<Vec<PricePoint>, PlanError> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| PlanError::Io(format!("{}: {e}", path.display())))?;
    parse_price_csv(file)
}

pub fn parse_price_csv(reader: impl std::io::Read) -> Result<Vec<PricePoint>, PlanError> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let expected = ["vendor", "model", "capacity_mbps", "price_usd_pair"];
    let header = rdr.headers().map_err(|e| PlanError::Csv { line: 1, message: e.to_string() })?;
    if header.iter().collect::<Vec<_>>() != expected {
        return Err(PlanError::Csv { line: 1, message: format!("expected header {}", expected.join(",")) });
    }
    let mut points = Vec::new();
    for rec in rdr.deserialize::<PricePoint>() {
        let p = rec.map_err(|e| PlanError::Csv {
            line: e.position().map(|p| p.line()).unwrap_or(0),
            message: e.to_string(),
        })?;
        let line = points.len() as u64 + 2;
        if !(p.capacity > 0.0) {
            return Err(PlanError::Csv { line, message: format!("capacity {} must be > 0", p.capacity) });
        }
        if !(p.cost > 0.0) {
            return Err(PlanError::Csv { line, message: format!("price {} must be > 0", p.cost) });
        }
        points.push(p);
    }
    Ok(points)
}

/// Quadratic cost model; see the module docs.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PriceModel {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    #[serde(default = "one")]
    pub r_squared: f64,
}

fn one() -> f64 {
    1.0
}

impl PriceModel {
    pub fn new(alpha: f64, beta: f64, gamma: f64) -> Self {
        PriceModel { alpha, beta, gamma, r_squared: 1.0 }
    }

    fn eval(&self, c: f64) -> f64 {
        self.alpha * c * c + self.beta * c + self.gamma
    }
}

/// Least-squares quadratic fit of cost on capacity.
pub fn fit_price_model(points: &[PricePoint]) -> Result<PriceModel, PlanError> {
    let distinct: BTreeSet<u64> = points.iter().map(|p| p.capacity.to_bits()).collect();
    if distinct.len() < 3 {
        return Err(PlanError::Underdetermined(distinct.len()));
    }
    // Scale capacities into [0, 1] before solving to keep the Vandermonde
    // matrix well conditioned.
    let scale = points.iter().map(|p| p.capacity).fold(0.0, f64::max);
    let n = points.len();
    let design = DMatrix::from_fn(n, 3, |i, j| {
        let x = points[i].capacity / scale;
        match j {
            0 => x * x,
            1 => x,
            _ => 1.0,
        }
    });
    let target = DVector::from_iterator(n, points.iter().map(|p| p.cost));
    let coeffs =
        design.svd(true, true).solve(&target, 1e-14).map_err(|_| PlanError::Underdetermined(distinct.len()))?;
    let mut model = PriceModel::new(coeffs[0] / (scale * scale), coeffs[1] / scale, coeffs[2]);

    let mean = target.mean();
    let ss_tot: f64 = points.iter().map(|p| (p.cost - mean).powi(2)).sum();
    let ss_res: f64 = points.iter().map(|p| (p.cost - model.eval(p.capacity)).powi(2)).sum();
    model.r_squared = if ss_tot > 0.0 { (1.0 - ss_res / ss_tot).clamp(0.0, 1.0) } else { 1.0 };
    Ok(model)
}

pub fn link_cost(model: &PriceModel, capacity: f64) -> Result<f64, PlanError> {
    if !(capacity > 0.0) {
        return Err(PlanError::NonPositiveCapacity(capacity));
    }
    Ok(model.eval(capacity))
}

/// Cost of delivering `capacity` over `n` equal parallel links.
pub fn multiplicity_cost(model: &PriceModel, capacity: f64, n: u32) -> Result<f64, PlanError> {
    if n == 0 {
        return Err(PlanError::ZeroMultiplicity);
    }
    Ok(n as f64 * link_cost(model, capacity / n as f64)?)
}

/// Cheapest link count in `1..=n_max`, ties to the smaller count.
///
/// For `alpha, gamma > 0` the cost `alpha*C^2/n + beta*C + gamma*n` is convex
/// in `n` with continuous minimiser `C*sqrt(alpha/gamma)`, so only its two
/// integer neighbours need evaluating. Other sign combinations fall back to a
/// scan.
pub fn optimal_multiplicity(model: &PriceModel, capacity: f64, n_max: u32) -> Result<u32, PlanError> {
    if n_max == 0 {
        return Err(PlanError::ZeroMultiplicity);
    }
    if !(capacity > 0.0) {
        return Err(PlanError::NonPositiveCapacity(capacity));
    }
    let cost = |n: u32| multiplicity_cost(model, capacity, n);
    let candidates: Vec<u32> = if model.alpha > 0.0 && model.gamma > 0.0 {
        let star = capacity * (model.alpha / model.gamma).sqrt();
        let lo = (star.floor() as u32).clamp(1, n_max);
        let hi = (star.ceil() as u32).clamp(1, n_max);
        vec![lo, hi]
    } else if model.alpha >= 0.0 && model.gamma <= 0.0 && !(model.alpha == 0.0 && model.gamma == 0.0) {
        vec![n_max]
    } else if model.alpha <= 0.0 && model.gamma > 0.0 {
        vec![1]
    } else {
        (1..=n_max).collect()
    };
    let mut best = candidates[0];
    let mut best_cost = cost(best)?;
    for &n in &candidates[1..] {
        let c = cost(n)?;
        if c < best_cost || (c == best_cost && n < best) {
            best = n;
            best_cost = c;
        }
    }
    Ok(best)
}

/// Sum of predicted link costs.
pub fn topology_cost(model: &PriceModel, topo: &Topology) -> f64 {
    topo.links().iter().map(|l| model.eval(l.capacity_mbps)).sum()
}

/// Per-site channel limits for co-located directional radios.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectrumBudget {
    pub channels_20mhz: u32,
    pub channels_40mhz: u32,
    pub min_angular_separation: f64,
}

impl Default for SpectrumBudget {
    fn default() -> Self {
        SpectrumBudget { channels_20mhz: 24, channels_40mhz: 11, min_angular_separation: 30.0 }
    }
}

/// Azimuth of `link` as seen from `site`: the stored bearing if present,
/// otherwise derived from endpoint coordinates.
pub fn bearing_at(topo: &Topology, link: &Link, site: &str) -> Option<f64> {
    let stored = if link.a == site { link.bearing_a } else { link.bearing_b };
    if stored.is_some() {
        return stored;
    }
    let here = topo.node(site)?.coords()?;
    let there = topo.node(link.other(site)?)?.coords()?;
    let dx = (there.1 - here.1) * ((here.0 + there.0) / 2.0).to_radians().cos();
    let dy = there.0 - here.0;
    if dx == 0.0 && dy == 0.0 {
        return None;
    }
    Some(dx.atan2(dy).to_degrees().rem_euclid(360.0))
}

fn angular_gap(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(360.0);
    d.min(360.0 - d)
}

/// Whether the radios at `site` fit the spectrum budget.
///
/// Each channel width is checked separately: the link count must not exceed
/// the available channels, and a greedy first-fit colouring (most-conflicted
/// link first) must fit, where two links conflict when both have bearings
/// closer than the minimum separation.
pub fn spectrum_feasible(topo: &Topology, site: &str, budget: &SpectrumBudget) -> bool {
    let incident: Vec<(u32, Option<f64>)> =
        topo.links().iter().filter(|l| l.touches(site)).map(|l| (l.channel_mhz, bearing_at(topo, l, site))).collect();
    [(20, budget.channels_20mhz), (40, budget.channels_40mhz)].iter().all(|&(width, channels)| {
        let radios: Vec<Option<f64>> = incident.iter().filter(|(w, _)| *w == width).map(|&(_, b)| b).collect();
        radios.len() <= channels as usize
            && first_fit_channels(&radios, budget.min_angular_separation) <= channels as usize
    })
}

/// Channels used by greedy first-fit assignment.
fn first_fit_channels(bearings: &[Option<f64>], min_sep: f64) -> usize {
    let n = bearings.len();
    let conflict = |i: usize, j: usize| match (bearings[i], bearings[j]) {
        (Some(a), Some(b)) => angular_gap(a, b) < min_sep,
        _ => false,
    };
    let degree: Vec<usize> = (0..n).map(|i| (0..n).filter(|&j| j != i && conflict(i, j)).count()).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| degree[y].cmp(&degree[x]).then(x.cmp(&y)));
    let mut channel = vec![usize::MAX; n];
    let mut used = 0;
    for &i in &order {
        let taken: BTreeSet<usize> =
            (0..n).filter(|&j| channel[j] != usize::MAX && conflict(i, j)).map(|j| channel[j]).collect();
        let c = (0..).find(|c| !taken.contains(c)).unwrap();
        channel[i] = c;
        used = used.max(c + 1);
    }
    used
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinkCost {
    pub index: usize,
    pub a: String,
    pub b: String,
    pub capacity_mbps: f64,
    pub cost: f64,
}

/// One accepted augmentation step of [`max_capacity_redesign`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlanStep {
    pub a: String,
    pub b: String,
    pub capacity_mbps: f64,
    pub total_cost: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlanResult {
    pub strategy: String,
    pub capacity_before: f64,
    pub cost_before: f64,
    pub capacity: f64,
    pub total_cost: f64,
    pub links_added: usize,
    pub links_replaced: usize,
    pub iterations: Vec<PlanStep>,
    pub link_costs: Vec<LinkCost>,
    pub topology: Topology,
}

impl PlanResult {
    fn finish(
        strategy: &str,
        model: &PriceModel,
        before: &Topology,
        after: Topology,
        links_replaced: usize,
        iterations: Vec<PlanStep>,
    ) -> Result<PlanResult, PlanError> {
        let link_costs = after
            .links()
            .iter()
            .enumerate()
            .map(|(index, l)| LinkCost {
                index,
                a: l.a.clone(),
                b: l.b.clone(),
                capacity_mbps: l.capacity_mbps,
                cost: model.eval(l.capacity_mbps),
            })
            .collect::<Vec<_>>();
        Ok(PlanResult {
            strategy: strategy.to_string(),
            capacity_before: network_capacity(before)?,
            cost_before: topology_cost(model, before),
            capacity: network_capacity(&after)?,
            total_cost: link_costs.iter().map(|c| c.cost).sum(),
            links_added: after.links().len() - before.links().len(),
            links_replaced,
            iterations,
            link_costs,
            topology: after,
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("plan serializes")
    }
}

/// Keeps capacity fixed and minimises cost: every link is split into its
/// cheapest number of equal parallel links, unless the split would break the
/// spectrum budget at either endpoint.
pub fn min_cost_redesign(
    model: &PriceModel,
    topo: &Topology,
    budget: &SpectrumBudget,
    n_max: u32,
) -> Result<PlanResult, PlanError> {
    let mut current = topo.clone();
    let mut replaced = 0;
    for (index, link) in topo.links().iter().enumerate() {
        let n = optimal_multiplicity(model, link.capacity_mbps, n_max)?;
        if n <= 1 {
            continue;
        }
        let mut links = current.links().to_vec();
        // `index` still addresses the original link: replacements append.
        links[index].capacity_mbps = link.capacity_mbps / n as f64;
        for _ in 1..n {
            links.push(links[index].clone());
        }
        let candidate = current.with_links(links)?;
        if spectrum_feasible(&candidate, &link.a, budget) && spectrum_feasible(&candidate, &link.b, budget) {
            current = candidate;
            replaced += 1;
        }
    }
    PlanResult::finish("min-cost", model, topo, current, replaced, Vec::new())
}

/// A node pair with line of sight, eligible for a new link.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct CandidateLink {
    pub a: String,
    pub b: String,
}

impl CandidateLink {
    fn key(&self) -> (&str, &str) {
        if self.a <= self.b {
            (&self.a, &self.b)
        } else {
            (&self.b, &self.a)
        }
    }
}

/// Reads a candidate list CSV with header `a,b`.
pub fn read_candidates_csv(path: impl AsRef<Path>) -> Result<Vec<CandidateLink>, PlanError> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| PlanError::Io(format!("{}: {e}", path.display())))?;
    parse_candidates_csv(file)
}

pub fn parse_candidates_csv(reader: impl std::io::Read) -> Result<Vec<CandidateLink>, PlanError> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    rdr.deserialize()
        .map(|r| {
            r.map_err(|e: csv::Error| PlanError::Csv {
                line: e.position().map(|p| p.line()).unwrap_or(0),
                message: e.to_string(),
            })
        })
        .collect()
}

/// Keeps cost under `cost_ceiling` and maximises capacity: repeatedly adds one
/// `unit_capacity` candidate link that bridges the current minimum cut.
///
/// A candidate bridges the cut when one endpoint is on the gateway side of the
/// source-minimal cut and the other can still reach the edges in the residual
/// network; exactly those additions raise the max flow. Candidates are tried
/// in node-id order and each is used at most once.
pub fn max_capacity_redesign(
    model: &PriceModel,
    topo: &Topology,
    budget: &SpectrumBudget,
    cost_ceiling: f64,
    candidates: &[CandidateLink],
    unit_capacity: f64,
) -> Result<PlanResult, PlanError> {
    let base_cost = topology_cost(model, topo);
    if cost_ceiling < base_cost - 1e-9 * base_cost.abs().max(1.0) {
        return Err(PlanError::CeilingBelowCost { ceiling: cost_ceiling, cost: base_cost });
    }
    let unit_cost = link_cost(model, unit_capacity)?;
    let mut pool: Vec<&CandidateLink> =
        candidates.iter().filter(|c| c.a != c.b && topo.contains(&c.a) && topo.contains(&c.b)).collect();
    pool.sort_by(|x, y| x.key().cmp(&y.key()));
    pool.dedup_by(|x, y| x.key() == y.key());

    let mut current = topo.clone();
    let mut spent = base_cost;
    let mut steps = Vec::new();
    loop {
        if spent + unit_cost > cost_ceiling {
            break;
        }
        let cut = analyze_cut(&current)?;
        let mut chosen = None;
        for (pos, cand) in pool.iter().enumerate() {
            if !cut.bridges(&cand.a, &cand.b) {
                continue;
            }
            let (a, b) = cand.key();
            let trial = current.with_link(Link::new(a, b, unit_capacity))?;
            if spectrum_feasible(&trial, a, budget) && spectrum_feasible(&trial, b, budget) {
                chosen = Some((pos, trial));
                break;
            }
        }
        let Some((pos, next)) = chosen else { break };
        let cand = pool.remove(pos);
        current = next;
        spent += unit_cost;
        let (a, b) = cand.key();
        steps.push(PlanStep {
            a: a.to_string(),
            b: b.to_string(),
            capacity_mbps: network_capacity(&current)?,
            total_cost: spent,
        });
    }
    PlanResult::finish("max-capacity", model, topo, current, 0, steps)
}

/// Inputs shared by all redesign strategies.
pub struct PlanInputs<'a> {
    pub model: &'a PriceModel,
    pub topology: &'a Topology,
    pub budget: SpectrumBudget,
    pub n_max: u32,
    /// Defaults to the current topology cost.
    pub cost_ceiling: Option<f64>,
    pub candidates: &'a [CandidateLink],
    pub unit_capacity: f64,
}

pub trait RedesignStrategy: Send + Sync {
    fn name(&self) -> &'static str;
    fn plan(&self, inputs: &PlanInputs<'_>) -> Result<PlanResult, PlanError>;
}

struct MinCost;

impl RedesignStrategy for MinCost {
    fn name(&self) -> &'static str {
        "min-cost"
    }

    fn plan(&self, i: &PlanInputs<'_>) -> Result<PlanResult, PlanError> {
        min_cost_redesign(i.model, i.topology, &i.budget, i.n_max)
    }
}

struct MaxCapacity;

impl RedesignStrategy for MaxCapacity {
    fn name(&self) -> &'static str {
        "max-capacity"
    }

    fn plan(&self, i: &PlanInputs<'_>) -> Result<PlanResult, PlanError> {
        let ceiling = i.cost_ceiling.unwrap_or_else(|| topology_cost(i.model, i.topology));
        max_capacity_redesign(i.model, i.topology, &i.budget, ceiling, i.candidates, i.unit_capacity)
    }
}

/// Redesign strategies selectable by name (`min-cost`, `max-capacity`).
pub fn redesign_strategies() -> Registry<dyn RedesignStrategy> {
    let mut r: Registry<dyn RedesignStrategy> = Registry::new("redesign strategy");
    r.register("min-cost", &["fixed-capacity"], Box::new(MinCost));
    r.register("max-capacity", &["fixed-cost"], Box::new(MaxCapacity));
    r
}

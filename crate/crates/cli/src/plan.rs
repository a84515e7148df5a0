//! `plan fit`, `plan multiplicity`, `plan redesign`.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Subcommand};
use serde::{Deserialize, Serialize};
use wisprkit::planner::{
    fit_price_model, link_cost, multiplicity_cost, optimal_multiplicity, parse_candidates_csv, parse_price_csv,
    redesign_strategies, PlanInputs, PriceModel, SpectrumBudget,
};
use wisprkit::topo::parse_topology;

use crate::failure::Failure;
use crate::manifest::{resolve, Run};
use crate::Common;

#[derive(Subcommand)]
pub enum PlanCommand {
    /// Fit the quadratic price model to a price list.
    Fit(FitArgs),
    /// Cost of splitting each capacity over 1..=n-max parallel links.
    Multiplicity(MultiplicityArgs),
    /// Run a redesign strategy (`min-cost` or `max-capacity`).
    Redesign(RedesignArgs),
}

pub fn run(cmd: PlanCommand) -> Result<(), Failure> {
    match cmd {
        PlanCommand::Fit(a) => fit(a),
        PlanCommand::Multiplicity(a) => multiplicity(a),
        PlanCommand::Redesign(a) => redesign(a),
    }
}

#[derive(Args, Serialize)]
pub struct FitArgs {
    #[command(flatten)]
    #[serde(skip)]
    common: Common,
    /// Price CSV (`vendor,model,capacity_mbps,price_usd_pair`).
    #[arg(long)]
    prices: Option<PathBuf>,
    /// Rows in the cost-vs-capacity table.
    #[arg(long)]
    curve_points: Option<usize>,
}

#[derive(Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct FitConfig {
    prices: PathBuf,
    #[serde(default = "default_curve_points")]
    curve_points: usize,
}

fn default_curve_points() -> usize {
    50
}

fn load_model_from_prices(
    run: &mut Run,
    prices: &Path,
) -> Result<(PriceModel, Vec<wisprkit::planner::PricePoint>), Failure> {
    let bytes = run.read(prices)?;
    let points =
        parse_price_csv(bytes.as_slice()).map_err(|e| Failure::from(e).context(prices.display().to_string()))?;
    Ok((fit_price_model(&points)?, points))
}

fn fit(args: FitArgs) -> Result<(), Failure> {
    let mut run = Run::new("plan fit", &args.common.out)?;
    let cfg: FitConfig = resolve(&mut run, args.common.config.as_deref(), &args)?;
    if cfg.curve_points < 2 {
        return Err(Failure::input(anyhow::anyhow!("curve_points must be at least 2")));
    }
    let (model, points) = load_model_from_prices(&mut run, &cfg.prices)?;

    let mut fitted = String::from("vendor,model,capacity_mbps,price_usd_pair,fitted_usd,residual_usd\n");
    for p in &points {
        let f = link_cost(&model, p.capacity)?;
        writeln!(fitted, "{},{},{},{},{},{}", p.vendor, p.model, p.capacity, p.cost, f, p.cost - f).unwrap();
    }
    let lo = points.iter().map(|p| p.capacity).fold(f64::INFINITY, f64::min);
    let hi = points.iter().map(|p| p.capacity).fold(f64::NEG_INFINITY, f64::max);
    let mut curve = String::from("capacity_mbps,cost_usd\n");
    for i in 0..cfg.curve_points {
        let c = lo + (hi - lo) * i as f64 / (cfg.curve_points - 1) as f64;
        writeln!(curve, "{c},{}", link_cost(&model, c)?).unwrap();
    }
    let report = FitReport { model, points: points.len(), min_capacity_mbps: lo, max_capacity_mbps: hi };

    run.write("price-model.json", json(&report)?)?;
    run.write("fit-points.csv", fitted)?;
    run.write("cost-curve.csv", curve)?;
    run.finish(None, &cfg)
}

/// `price-model.json`; loads back as a [`PriceModel`].
#[derive(Serialize)]
struct FitReport {
    #[serde(flatten)]
    model: PriceModel,
    points: usize,
    min_capacity_mbps: f64,
    max_capacity_mbps: f64,
}

fn json(value: &impl Serialize) -> Result<String, Failure> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

/// Model from `--model` (a fitted model JSON) or else fitted from `--prices`.
fn model_source(run: &mut Run, model: Option<&Path>, prices: Option<&Path>) -> Result<PriceModel, Failure> {
    match (model, prices) {
        (Some(m), _) => {
            let text = run.read_text(m)?;
            serde_json::from_str(&text).map_err(|e| Failure::input(e).context(format!("model {}", m.display())))
        }
        (None, Some(p)) => Ok(load_model_from_prices(run, p)?.0),
        (None, None) => Err(Failure::input(anyhow::anyhow!("either --model or --prices is required"))),
    }
}

#[derive(Args, Serialize)]
pub struct MultiplicityArgs {
    #[command(flatten)]
    #[serde(skip)]
    common: Common,
    /// Fitted model JSON from `plan fit`.
    #[arg(long)]
    model: Option<PathBuf>,
    /// Price CSV to fit when no model is given.
    #[arg(long)]
    prices: Option<PathBuf>,
    /// Comma-separated capacities in Mbps.
    #[arg(long, value_delimiter = ',')]
    capacities: Option<Vec<f64>>,
    #[arg(long)]
    n_max: Option<u32>,
}

#[derive(Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct MultiplicityConfig {
    model: Option<PathBuf>,
    prices: Option<PathBuf>,
    #[serde(default = "default_capacities")]
    capacities: Vec<f64>,
    #[serde(default = "default_n_max")]
    n_max: u32,
}

fn default_capacities() -> Vec<f64> {
    vec![1000.0, 2000.0, 3000.0, 4000.0, 5000.0]
}

fn default_n_max() -> u32 {
    10
}

fn multiplicity(args: MultiplicityArgs) -> Result<(), Failure> {
    let mut run = Run::new("plan multiplicity", &args.common.out)?;
    let cfg: MultiplicityConfig = resolve(&mut run, args.common.config.as_deref(), &args)?;
    if cfg.n_max < 1 {
        return Err(Failure::input(anyhow::anyhow!("n_max must be at least 1")));
    }
    let model = model_source(&mut run, cfg.model.as_deref(), cfg.prices.as_deref())?;
    let mut out = String::from("capacity_mbps,n,cost_usd,argmin\n");
    for &c in &cfg.capacities {
        let best = optimal_multiplicity(&model, c, cfg.n_max)?;
        for n in 1..=cfg.n_max {
            writeln!(out, "{c},{n},{},{best}", multiplicity_cost(&model, c, n)?).unwrap();
        }
    }
    run.write("multiplicity.csv", out)?;
    run.finish(None, &cfg)
}

#[derive(Args, Serialize)]
pub struct RedesignArgs {
    #[command(flatten)]
    #[serde(skip)]
    common: Common,
    #[arg(long)]
    topology: Option<PathBuf>,
    #[arg(long)]
    model: Option<PathBuf>,
    #[arg(long)]
    prices: Option<PathBuf>,
    /// `min-cost` or `max-capacity`.
    #[arg(long)]
    mode: Option<String>,
    /// Cost ceiling for `max-capacity`; defaults to the current cost.
    #[arg(long)]
    budget: Option<f64>,
    /// Candidate link CSV (`a,b`) for `max-capacity`.
    #[arg(long)]
    candidates: Option<PathBuf>,
    /// Capacity of each link added by `max-capacity`.
    #[arg(long)]
    unit_capacity: Option<f64>,
    /// Largest split considered by `min-cost`.
    #[arg(long)]
    n_max: Option<u32>,
    #[arg(long)]
    channels_20mhz: Option<u32>,
    #[arg(long)]
    channels_40mhz: Option<u32>,
    /// Minimum angular separation between co-channel radios, degrees.
    #[arg(long)]
    min_separation: Option<f64>,
}

#[derive(Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct RedesignConfig {
    topology: PathBuf,
    model: Option<PathBuf>,
    prices: Option<PathBuf>,
    mode: String,
    budget: Option<f64>,
    candidates: Option<PathBuf>,
    #[serde(default = "default_unit")]
    unit_capacity: f64,
    #[serde(default = "default_n_max")]
    n_max: u32,
    #[serde(default = "default_channels_20mhz")]
    channels_20mhz: u32,
    #[serde(default = "default_channels_40mhz")]
    channels_40mhz: u32,
    #[serde(default = "default_min_separation")]
    min_separation: f64,
}

fn default_channels_20mhz() -> u32 {
    SpectrumBudget::default().channels_20mhz
}

fn default_channels_40mhz() -> u32 {
    SpectrumBudget::default().channels_40mhz
}

fn default_min_separation() -> f64 {
    SpectrumBudget::default().min_angular_separation
}

fn default_unit() -> f64 {
    100.0
}

fn redesign(args: RedesignArgs) -> Result<(), Failure> {
    let mut run = Run::new("plan redesign", &args.common.out)?;
    let cfg: RedesignConfig = resolve(&mut run, args.common.config.as_deref(), &args)?;
    let strategies = redesign_strategies();
    let strategy = strategies.get(&cfg.mode).map_err(Failure::input)?;
    let model = model_source(&mut run, cfg.model.as_deref(), cfg.prices.as_deref())?;
    let topo_text = run.read_text(&cfg.topology)?;
    let topology =
        parse_topology(&topo_text).map_err(|e| Failure::from(e).context(cfg.topology.display().to_string()))?;
    let candidates = match &cfg.candidates {
        Some(p) => {
            let bytes = run.read(p)?;
            parse_candidates_csv(bytes.as_slice()).map_err(|e| Failure::from(e).context(p.display().to_string()))?
        }
        None => Vec::new(),
    };
    if strategy.name() == "max-capacity" && candidates.is_empty() {
        log::warn!("no candidate links given; max-capacity cannot add anything");
    }
    let budget = SpectrumBudget {
        channels_20mhz: cfg.channels_20mhz,
        channels_40mhz: cfg.channels_40mhz,
        min_angular_separation: cfg.min_separation,
    };
    let inputs = PlanInputs {
        model: &model,
        topology: &topology,
        budget,
        n_max: cfg.n_max,
        cost_ceiling: cfg.budget,
        candidates: &candidates,
        unit_capacity: cfg.unit_capacity,
    };
    let plan = strategy.plan(&inputs)?;
    log::info!(
        "{}: capacity {} -> {}, cost {:.2} -> {:.2}",
        plan.strategy,
        plan.capacity_before,
        plan.capacity,
        plan.cost_before,
        plan.total_cost
    );

    let mut steps = String::from("step,a,b,capacity_mbps,total_cost\n");
    for (i, s) in plan.iterations.iter().enumerate() {
        writeln!(steps, "{},{},{},{},{}", i + 1, s.a, s.b, s.capacity_mbps, s.total_cost).unwrap();
    }
    run.write("plan.json", plan.to_json() + "\n")?;
    run.write("iterations.csv", steps)?;
    run.write("topology.json", plan.topology.to_json() + "\n")?;
    run.finish(None, &cfg)
}

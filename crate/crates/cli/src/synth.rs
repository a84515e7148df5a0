//! `synthesize`: coordinates to a layered topology.

use std::path::PathBuf;

use clap::Args;
use serde::{Deserialize, Serialize};
use wisprkit::paths::{parse_coordinates_csv, synthesize_topology, SynthParams};

use crate::failure::Failure;
use crate::manifest::{resolve, Run};
use crate::Common;

#[derive(Args, Serialize)]
pub struct SynthArgs {
    #[command(flatten)]
    #[serde(skip)]
    common: Common,
    /// Coordinates CSV (`id,lat,lon`).
    #[arg(long)]
    coordinates: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Upward links per node.
    #[arg(long)]
    fanout: Option<usize>,
    /// Sites closer than this many metres share a cluster.
    #[arg(long)]
    radius: Option<f64>,
    #[arg(long)]
    capacity: Option<f64>,
}

#[derive(Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct SynthConfig {
    coordinates: PathBuf,
    #[serde(default)]
    seed: u64,
    #[serde(default = "default_fanout")]
    fanout: usize,
    #[serde(default = "default_radius")]
    radius: f64,
    #[serde(default = "default_capacity")]
    capacity: f64,
}

fn default_fanout() -> usize {
    SynthParams::default().fanout
}

fn default_radius() -> f64 {
    SynthParams::default().cluster_radius_m
}

fn default_capacity() -> f64 {
    SynthParams::default().link_capacity_mbps
}

#[derive(Serialize)]
struct Summary {
    points: usize,
    nodes: usize,
    links: usize,
    gateway: String,
    /// Nodes per BFS depth from the gateway.
    depth_histogram: Vec<usize>,
    diagnostics: Vec<String>,
}

pub fn run(args: SynthArgs) -> Result<(), Failure> {
    let mut run = Run::new("synthesize", &args.common.out)?;
    let cfg: SynthConfig = resolve(&mut run, args.common.config.as_deref(), &args)?;
    let bytes = run.read(&cfg.coordinates)?;
    let coords = parse_coordinates_csv(bytes.as_slice())
        .map_err(|e| Failure::from(e).context(cfg.coordinates.display().to_string()))?;
    let params = SynthParams { fanout: cfg.fanout, cluster_radius_m: cfg.radius, link_capacity_mbps: cfg.capacity };
    let s = synthesize_topology(&coords, &params, cfg.seed)?;
    let summary = Summary {
        points: coords.len(),
        nodes: s.topology.nodes().len(),
        links: s.topology.links().len(),
        gateway: s.topology.gateway()?.id.clone(),
        depth_histogram: s.depth_histogram(),
        diagnostics: s.topology.validate().iter().map(|d| d.to_string()).collect(),
    };
    let mut text = serde_json::to_string_pretty(&summary)?;
    text.push('\n');
    run.write("topology.json", s.topology.to_json() + "\n")?;
    run.write("summary.json", text)?;
    run.finish(Some(cfg.seed), &cfg)
}

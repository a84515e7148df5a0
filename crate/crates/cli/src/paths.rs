//! `paths`: per-edge path counts and their CDF under augmentation.

use std::fmt::Write as _;
use std::path::PathBuf;

use clap::Args;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use wisprkit::paths::{augmenters, cdf_of, cdf_to_csv, count_paths, PathCount, DEFAULT_PATH_CAP};
use wisprkit::topo::{parse_topology, Topology};

use crate::failure::Failure;
use crate::manifest::{resolve, Run};
use crate::Common;

#[derive(Args, Serialize)]
pub struct PathsArgs {
    #[command(flatten)]
    #[serde(skip)]
    common: Common,
    #[arg(long)]
    topology: Option<PathBuf>,
    /// Add N cross links between tree branches.
    #[arg(long)]
    cross: Option<usize>,
    /// Add N parallel copies of tree links.
    #[arg(long)]
    parallel: Option<usize>,
    /// Add N parallel then N cross links.
    #[arg(long)]
    both: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Per-edge enumeration cap.
    #[arg(long)]
    cap: Option<u64>,
}

#[derive(Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct PathsConfig {
    topology: PathBuf,
    cross: Option<usize>,
    parallel: Option<usize>,
    both: Option<usize>,
    #[serde(default)]
    seed: u64,
    #[serde(default = "default_cap")]
    cap: u64,
}

fn default_cap() -> u64 {
    DEFAULT_PATH_CAP
}

/// Counts for every edge node in ascending id order, one task per edge.
fn counts(topo: &Topology, cap: u64) -> Result<Vec<(String, PathCount)>, Failure> {
    let mut edges: Vec<&str> = topo.edge_nodes().map(|n| n.id.as_str()).collect();
    edges.sort_unstable();
    let counted: Result<Vec<_>, _> =
        edges.par_iter().map(|e| count_paths(topo, e, cap).map(|c| (e.to_string(), c))).collect();
    Ok(counted?)
}

fn cdf_csv(counts: &[(String, PathCount)]) -> String {
    cdf_to_csv(&cdf_of(counts.iter().map(|(_, c)| c.value())))
}

pub fn run(args: PathsArgs) -> Result<(), Failure> {
    let mut run = Run::new("paths", &args.common.out)?;
    let cfg: PathsConfig = resolve(&mut run, args.common.config.as_deref(), &args)?;
    if cfg.cap == 0 {
        return Err(Failure::input(anyhow::anyhow!("cap must be positive")));
    }
    let text = run.read_text(&cfg.topology)?;
    let topo = parse_topology(&text).map_err(|e| Failure::from(e).context(cfg.topology.display().to_string()))?;

    let base = counts(&topo, cfg.cap)?;
    run.write("cdf-none.csv", cdf_csv(&base))?;

    let registry = augmenters();
    let settings = [("cross", cfg.cross), ("parallel", cfg.parallel), ("both", cfg.both)];
    for (name, n) in settings.into_iter().filter_map(|(name, n)| n.map(|n| (name, n))) {
        let label = format!("{name}-{n}");
        let augmented = registry.get(name).map_err(Failure::input)?.augment(&topo, n, cfg.seed)?;
        let after = counts(&augmented, cfg.cap)?;
        let truncated = after.iter().filter(|(_, c)| c.is_truncated()).count();
        if truncated > 0 {
            log::warn!("{label}: {truncated} edge nodes hit the cap of {}", cfg.cap);
        }
        let mut table = String::from("node,before,after,truncated\n");
        for ((node, before), (_, after)) in base.iter().zip(&after) {
            writeln!(table, "{node},{},{},{}", before.value(), after.value(), after.is_truncated()).unwrap();
        }
        run.write(&format!("cdf-{label}.csv"), cdf_csv(&after))?;
        run.write(&format!("augmentation-{label}.csv"), table)?;
        run.write(&format!("topology-{label}.json"), augmented.to_json() + "\n")?;
    }
    run.finish(Some(cfg.seed), &cfg)
}

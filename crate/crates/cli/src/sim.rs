//! `sim`: execute an experiment file.

use std::path::{Path, PathBuf};

use clap::Args;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::Value;
use wisprkit::netsim::{metrics_csv, Experiment, MetricsRecord};
use wisprkit::topo::parse_topology;

use crate::failure::Failure;
use crate::manifest::Run;
use crate::Common;

#[derive(Args)]
pub struct SimArgs {
    #[command(flatten)]
    common: Common,
    /// Replaces the experiment's topology (relative to the working directory).
    #[arg(long)]
    topology: Option<PathBuf>,
    /// Replaces the experiment's base seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads; results do not depend on this.
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Serialize)]
struct RunSummary {
    name: String,
    records: usize,
    sent: u64,
    lost: u64,
    lost_mean: f64,
    lost_max: u64,
    parity_recovered: u64,
    avg_delay_ms_mean: f64,
    /// `(loss, goodput_mbps)` per record, in job order.
    goodput: Vec<(f64, f64)>,
}

fn summarize(exp: &Experiment, records: &[MetricsRecord]) -> Vec<RunSummary> {
    exp.runs
        .iter()
        .map(|r| {
            let prefix = format!("{}-", r.name);
            let mine: Vec<&MetricsRecord> = records
                .iter()
                .filter(|m| m.run_id.strip_prefix(&prefix).is_some_and(|rest| rest.parse::<u64>().is_ok()))
                .collect();
            let n = mine.len().max(1) as f64;
            RunSummary {
                name: r.name.clone(),
                records: mine.len(),
                sent: mine.iter().map(|m| m.metrics.sent).sum(),
                lost: mine.iter().map(|m| m.metrics.lost).sum(),
                lost_mean: mine.iter().map(|m| m.metrics.lost as f64).sum::<f64>() / n,
                lost_max: mine.iter().map(|m| m.metrics.lost).max().unwrap_or(0),
                parity_recovered: mine.iter().map(|m| m.metrics.parity_recovered).sum(),
                avg_delay_ms_mean: mine.iter().map(|m| m.metrics.avg_delay_ms).sum::<f64>() / n,
                goodput: mine.iter().map(|m| (m.loss, m.metrics.goodput_mbps)).collect(),
            }
        })
        .collect()
}

pub fn run(args: SimArgs) -> Result<(), Failure> {
    let mut run = Run::new("sim", &args.common.out)?;
    let Some(config) = args.common.config.as_deref() else {
        return Err(Failure::input(anyhow::anyhow!("sim needs --config EXPERIMENT.json")));
    };
    let mut value: Value = serde_json::from_str(&run.read_text(config)?)
        .map_err(|e| Failure::input(e).context(format!("experiment {}", config.display())))?;
    let obj = value
        .as_object_mut()
        .ok_or_else(|| Failure::input(anyhow::anyhow!("experiment {} is not a JSON object", config.display())))?;
    if let Some(seed) = args.seed {
        obj.insert("seed".into(), seed.into());
    }
    let topo_path = match &args.topology {
        Some(p) => {
            obj.insert("topology".into(), p.display().to_string().into());
            p.clone()
        }
        None => {
            let rel = obj.get("topology").and_then(Value::as_str).unwrap_or_default();
            config.parent().unwrap_or(Path::new(".")).join(rel)
        }
    };
    let exp: Experiment = serde_json::from_value(value)
        .map_err(|e| Failure::input(e).context(format!("experiment {}", config.display())))?;

    let text = run.read_text(&topo_path)?;
    let topo = parse_topology(&text).map_err(|e| Failure::from(e).context(topo_path.display().to_string()))?;
    for r in &exp.runs {
        r.session.resolve(&topo).map_err(|e| Failure::input(e).context(format!("run {:?}", r.name)))?;
    }

    let jobs = exp.jobs();
    log::info!("{} jobs", jobs.len());
    let execute = || -> Result<Vec<MetricsRecord>, Failure> {
        let out: Result<Vec<_>, _> = jobs.par_iter().map(|j| exp.execute(&topo, j)).collect();
        Ok(out?)
    };
    let records = match args.threads {
        Some(n) => rayon::ThreadPoolBuilder::new().num_threads(n).build().map_err(Failure::input)?.install(execute)?,
        None => execute()?,
    };

    let mut summary = serde_json::to_string_pretty(&summarize(&exp, &records))?;
    summary.push('\n');
    run.write("metrics.csv", metrics_csv(&records))?;
    run.write("summary.json", summary)?;
    run.finish(Some(exp.seed), &exp)
}

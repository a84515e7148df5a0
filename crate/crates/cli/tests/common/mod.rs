//! Shared helpers and reference oracles for the CLI test targets.

#![allow(dead_code)]

use std::collections::{BTreeMap, VecDeque};
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use wisprkit::planner::PriceModel;
use wisprkit::topo::{Role, Topology};

pub fn root() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..").canonicalize().unwrap()
}

pub fn golden_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/golden")
}

/// Runs the binary from the workspace root so that input paths (and thus
/// manifests) are stable.
pub fn wisprkit(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_wisprkit"))
        .args(args)
        .current_dir(root())
        .env("WISPRKIT_LOG", "error")
        .output()
        .expect("binary runs")
}

pub fn wisprkit_ok(args: &[&str]) {
    let out = wisprkit(args);
    assert!(out.status.success(), "{args:?} failed: {}", String::from_utf8_lossy(&out.stderr));
}

/// Every golden case: name, arguments (without `--out`), seeded.
pub fn golden_cases() -> Vec<(&'static str, Vec<&'static str>, bool)> {
    vec![
        ("plan-fit", vec!["plan", "fit", "--prices", "data/prices.csv"], false),
        ("plan-multiplicity", vec!["plan", "multiplicity", "--prices", "data/prices.csv", "--n-max", "10"], false),
        (
            "plan-redesign-max",
            vec![
                "plan",
                "redesign",
                "--mode",
                "max-capacity",
                "--topology",
                "data/tree64.json",
                "--prices",
                "data/prices.csv",
                "--candidates",
                "data/tree64-candidates.csv",
                "--budget",
                "46050",
            ],
            false,
        ),
        (
            "plan-redesign-min",
            vec![
                "plan",
                "redesign",
                "--mode",
                "min-cost",
                "--topology",
                "data/tree64.json",
                "--prices",
                "data/prices.csv",
            ],
            false,
        ),
        (
            "paths",
            vec![
                "paths",
                "--topology",
                "data/tree64.json",
                "--cross",
                "20",
                "--parallel",
                "20",
                "--both",
                "20",
                "--seed",
                "42",
            ],
            true,
        ),
        ("synthesize", vec!["synthesize", "--coordinates", "data/coords50.csv", "--seed", "7"], true),
        ("sim-udp", vec!["sim", "--config", "data/udp-experiment.json"], true),
        ("sim-mirror", vec!["sim", "--config", "data/mirror-experiment.json"], true),
        ("sim-goodput", vec!["sim", "--config", "data/goodput-experiment.json"], true),
        ("sim-parity", vec!["sim", "--config", "data/parity-experiment.json", "--seed", "3"], true),
    ]
}

pub fn run_into(args: &[&str], out: &Path) {
    let mut full: Vec<&str> = args.to_vec();
    let out = out.to_str().unwrap();
    full.extend(["--out", out]);
    wisprkit_ok(&full);
}

pub fn dir_files(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    std::fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), std::fs::read(e.path()).unwrap())
        })
        .collect()
}

/// Rows of a headed CSV as column -> value maps.
pub fn csv_rows(path: &Path) -> Vec<BTreeMap<String, String>> {
    let text = std::fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    lines.map(|l| header.iter().zip(l.split(',')).map(|(h, v)| (h.to_string(), v.to_string())).collect()).collect()
}

pub fn num(row: &BTreeMap<String, String>, col: &str) -> f64 {
    row[col].parse().unwrap_or_else(|_| panic!("column {col}: {:?}", row[col]))
}

/// Edmonds-Karp from the gateway to a super sink fed by every edge node.
pub fn max_flow(t: &Topology) -> f64 {
    let ids: Vec<&str> = t.nodes().iter().map(|n| n.id.as_str()).collect();
    let n = ids.len() + 1;
    let sink = n - 1;
    let idx = |id: &str| ids.iter().position(|x| *x == id).unwrap();
    let mut cap = vec![vec![0.0f64; n]; n];
    for l in t.links() {
        let (a, b) = (idx(&l.a), idx(&l.b));
        cap[a][b] += l.capacity_mbps;
        cap[b][a] += l.capacity_mbps;
    }
    for (i, node) in t.nodes().iter().enumerate() {
        if node.role == Role::Edge {
            cap[i][sink] = f64::INFINITY;
        }
    }
    let src = t.nodes().iter().position(|n| n.role == Role::Gateway).unwrap();
    let mut flow = 0.0;
    loop {
        let mut prev = vec![usize::MAX; n];
        prev[src] = src;
        let mut q = VecDeque::from([src]);
        while let Some(u) = q.pop_front() {
            for v in 0..n {
                if prev[v] == usize::MAX && cap[u][v] > 1e-12 {
                    prev[v] = u;
                    q.push_back(v);
                }
            }
        }
        if prev[sink] == usize::MAX {
            return flow;
        }
        let mut push = f64::INFINITY;
        let mut v = sink;
        while v != src {
            push = push.min(cap[prev[v]][v]);
            v = prev[v];
        }
        let mut v = sink;
        while v != src {
            cap[prev[v]][v] -= push;
            cap[v][prev[v]] += push;
            v = prev[v];
        }
        flow += push;
    }
}

/// Minimum over gateway-side node sets (edges always excluded) of the
/// capacity crossing the cut.
pub fn brute_force_cut(t: &Topology) -> f64 {
    let ids: Vec<&str> = t.nodes().iter().map(|n| n.id.as_str()).collect();
    let gw = t.nodes().iter().position(|n| n.role == Role::Gateway).unwrap();
    let free: Vec<usize> = (0..ids.len()).filter(|&i| i != gw && t.nodes()[i].role != Role::Edge).collect();
    let mut best = f64::INFINITY;
    for mask in 0u32..(1 << free.len()) {
        let mut side = vec![false; ids.len()];
        side[gw] = true;
        for (bit, &i) in free.iter().enumerate() {
            side[i] = mask & (1 << bit) != 0;
        }
        let inside = |id: &str| side[ids.iter().position(|x| *x == id).unwrap()];
        let cut: f64 = t.links().iter().filter(|l| inside(&l.a) != inside(&l.b)).map(|l| l.capacity_mbps).sum();
        best = best.min(cut);
    }
    best
}

/// Simple paths from `from` to the gateway, each parallel link counted.
pub fn enumerate_paths(t: &Topology, from: &str) -> u64 {
    fn walk(t: &Topology, at: &str, goal: &str, visited: &mut Vec<String>) -> u64 {
        if at == goal {
            return 1;
        }
        let mut total = 0;
        for l in t.links() {
            let next = if l.a == at {
                &l.b
            } else if l.b == at {
                &l.a
            } else {
                continue;
            };
            if !visited.contains(next) {
                visited.push(next.clone());
                total += walk(t, next, goal, visited);
                visited.pop();
            }
        }
        total
    }
    let gw = t.gateway().unwrap().id.clone();
    walk(t, from, &gw, &mut vec![from.to_string()])
}

pub fn horner(m: &PriceModel, c: f64) -> f64 {
    (m.alpha * c + m.beta) * c + m.gamma
}

/// Smallest argmin of `n * cost(C / n)` over `1..=n_max`.
pub fn brute_force_multiplicity(m: &PriceModel, c: f64, n_max: u32) -> (u32, f64) {
    (1..=n_max).map(|n| (n, n as f64 * horner(m, c / n as f64))).fold((0, f64::INFINITY), |best, (n, v)| {
        if v < best.1 {
            (n, v)
        } else {
            best
        }
    })
}

pub fn corpus() -> Vec<(String, Topology)> {
    let mut files: Vec<PathBuf> =
        std::fs::read_dir(root().join("data/corpus")).unwrap().map(|e| e.unwrap().path()).collect();
    files.sort();
    files
        .into_iter()
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), wisprkit::topo::load_topology(&p).unwrap()))
        .collect()
}

//! Deterministic discrete-event simulator for rail sessions.
//!
//! Frames move hop by hop along their session path. Each directed link is a
//! FIFO server: a frame starts transmitting when the link frees up, occupies
//! it for `ceil(bits / Mbps)` microseconds, and arrives after the link's
//! propagation delay unless the link drops it. Drops are independent
//! Bernoulli draws from one seeded generator, using the loss rate in force
//! when transmission starts.

use std::cmp::Reverse;
use std::collections::{BTreeMap, BinaryHeap, HashMap, HashSet};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::engine::{EngineError, Frame, FrameKind, RailSession, SessionConfig, Verdict};
use crate::topo::{load_topology, PathSpec, Topology, TopologyError};

#[derive(Debug, Error)]
pub enum SimError {
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Topology(#[from] TopologyError),
    #[error("invalid simulation: {0}")]
    Invalid(String),
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("experiment config: {0}")]
    Json(#[from] serde_json::Error),
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> SimError + '_ {
    move |source| SimError::Io { path: path.display().to_string(), source }
}

/// Bytes at the head of every generated payload: sequence number and send
/// timestamp, both little-endian u64.
pub const PAYLOAD_HEADER: usize = 16;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LossStep {
    pub start_us: u64,
    pub loss: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ProbeSpec {
    pub payload_size: usize,
    pub gap_us: u64,
    pub count: u64,
}

impl Default for ProbeSpec {
    fn default() -> Self {
        ProbeSpec { payload_size: 96, gap_us: 1_000, count: 500 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Traffic {
    /// Constant-rate source.
    Probe(ProbeSpec),
    /// Paced at the rate the session's busiest path can sustain.
    Saturating { payload_size: usize, count: u64 },
}

impl Traffic {
    fn payload_size(&self) -> usize {
        match self {
            Traffic::Probe(p) => p.payload_size,
            Traffic::Saturating { payload_size, .. } => *payload_size,
        }
    }

    fn count(&self) -> u64 {
        match self {
            Traffic::Probe(p) => p.count,
            Traffic::Saturating { count, .. } => *count,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SessionSetup {
    pub session: SessionConfig,
    pub traffic: Traffic,
    #[serde(default)]
    pub start_us: u64,
}

/// Forces the data frames of one payload to be dropped on their first hop.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct InjectedDrop {
    pub session: usize,
    pub payload_seq: u64,
}

#[derive(Clone, Debug)]
pub struct SimConfig {
    pub topology: Topology,
    pub sessions: Vec<SessionSetup>,
    /// Piecewise-constant loss per link index; before the first step a
    /// link uses its own `loss`.
    pub loss_schedules: BTreeMap<usize, Vec<LossStep>>,
    pub seed: u64,
    pub inject: Vec<InjectedDrop>,
    pub max_time_us: Option<u64>,
}

impl SimConfig {
    pub fn new(topology: Topology, sessions: Vec<SessionSetup>, seed: u64) -> Self {
        SimConfig { topology, sessions, loss_schedules: BTreeMap::new(), seed, inject: Vec::new(), max_time_us: None }
    }

    fn validate(&self) -> Result<(), SimError> {
        let n = self.topology.links().len();
        for (&link, steps) in &self.loss_schedules {
            if link >= n {
                return Err(SimError::Invalid(format!("loss schedule for missing link {link}")));
            }
            for w in steps.windows(2) {
                if w[1].start_us <= w[0].start_us {
                    return Err(SimError::Invalid(format!("loss schedule for link {link} is not time-ordered")));
                }
            }
            if let Some(s) = steps.iter().find(|s| !(0.0..1.0).contains(&s.loss)) {
                return Err(SimError::Invalid(format!("loss {} on link {link} outside [0, 1)", s.loss)));
            }
        }
        for (i, s) in self.sessions.iter().enumerate() {
            if s.traffic.payload_size() < PAYLOAD_HEADER {
                return Err(SimError::Invalid(format!("session {i}: payload below {PAYLOAD_HEADER} bytes")));
            }
            if let Traffic::Probe(p) = &s.traffic {
                if p.gap_us == 0 {
                    return Err(SimError::Invalid(format!("session {i}: probe gap must be positive")));
                }
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PathMetrics {
    pub session: usize,
    pub path: usize,
    pub frames_sent: u64,
    pub frames_dropped: u64,
    pub frames_arrived: u64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct LinkMetrics {
    pub link: usize,
    pub frames: u64,
    pub dropped: u64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    /// Per-session labels joined with `/`.
    pub mode: String,
    pub k: String,
    pub x: String,
    pub sent: u64,
    pub delivered: u64,
    pub lost: u64,
    pub duplicates_suppressed: u64,
    pub parity_recovered: u64,
    pub avg_delay_ms: f64,
    pub goodput_mbps: f64,
    pub copies_sent: u64,
    pub copies_delivered: u64,
    pub copies_dropped: u64,
    pub double_deliveries: u64,
    pub corrupted: u64,
    pub per_path: Vec<PathMetrics>,
    pub per_link: Vec<LinkMetrics>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DeliveryRecord {
    pub time_us: u64,
    pub session: usize,
    pub payload_seq: u64,
    pub packet_id: u16,
    pub recovered: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EventRecord {
    pub time_us: u64,
    pub event: &'static str,
    pub packet_id: u16,
    pub path_index: usize,
    pub mode: u8,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Trace {
    pub deliveries: Vec<DeliveryRecord>,
    pub events: Vec<EventRecord>,
}

impl Trace {
    /// `time_us,event,packet_id,path_index,mode`
    pub fn events_csv(&self) -> String {
        let mut out = String::from("time_us,event,packet_id,path_index,mode\n");
        for e in &self.events {
            let _ = writeln!(out, "{},{},{},{},{}", e.time_us, e.event, e.packet_id, e.path_index, e.mode);
        }
        out
    }
}

/// Payload for sequence number `seq` sent at `time_us`: header followed by
/// a filler pattern derived from `seq`.
pub fn make_payload(seq: u64, time_us: u64, size: usize) -> Vec<u8> {
    let mut p = Vec::with_capacity(size);
    p.extend_from_slice(&seq.to_le_bytes());
    p.extend_from_slice(&time_us.to_le_bytes());
    p.extend((PAYLOAD_HEADER..size).map(|j| (seq.wrapping_mul(31).wrapping_add(j as u64)) as u8));
    p
}

/// Reads back `(seq, time_us)` if `payload` is exactly what
/// [`make_payload`] would produce.
pub fn check_payload(payload: &[u8]) -> Option<(u64, u64)> {
    if payload.len() < PAYLOAD_HEADER {
        return None;
    }
    let seq = u64::from_le_bytes(payload[0..8].try_into().ok()?);
    let ts = u64::from_le_bytes(payload[8..16].try_into().ok()?);
    (make_payload(seq, ts, payload.len()) == payload).then_some((seq, ts))
}

/// Microseconds to serialise `bytes` onto a `mbps` link.
pub fn transmission_us(bytes: usize, mbps: f64) -> u64 {
    ((bytes * 8) as f64 / mbps).ceil() as u64
}

fn delay_us(ms: f64) -> u64 {
    (ms * 1000.0).round() as u64
}

enum Event {
    Emit { session: usize },
    Arrive { copy: usize, hop: usize },
}

struct Copy {
    session: usize,
    path: usize,
    frame: Option<Frame>,
    payload_seq: Option<u64>,
}

struct SessionRun {
    rail: RailSession,
    paths: Vec<PathSpec>,
    payload_size: usize,
    count: u64,
    interval: u64,
    next_seq: u64,
    delivered: Vec<bool>,
    delivered_bits: u64,
    first_delivery: Option<u64>,
    last_delivery: u64,
}

/// Inter-payload gap at which no path of `rail` is offered more than it can
/// carry.
fn saturating_interval(rail: &RailSession, paths: &[PathSpec], payload_size: usize) -> u64 {
    let wire = payload_size + crate::codec::ENCAP_OVERHEAD;
    let busiest = rail
        .path_load()
        .iter()
        .zip(paths)
        .map(|(load, p)| load * transmission_us(wire, p.bottleneck_mbps) as f64)
        .fold(0.0, f64::max);
    (busiest.ceil() as u64).max(1)
}

struct Sim<'a> {
    cfg: &'a SimConfig,
    rng: ChaCha8Rng,
    now: u64,
    seq: u64,
    heap: BinaryHeap<Reverse<(u64, u64, usize)>>,
    events: Vec<Option<Event>>,
    copies: Vec<Copy>,
    busy: HashMap<(usize, bool), u64>,
    inject: HashSet<InjectedDrop>,
    runs: Vec<SessionRun>,
    m: Metrics,
    path_index: HashMap<(usize, usize), usize>,
    delays: (f64, u64),
    trace: Option<Trace>,
}

impl<'a> Sim<'a> {
    fn schedule(&mut self, at: u64, ev: Event) {
        let slot = self.events.len();
        self.events.push(Some(ev));
        self.heap.push(Reverse((at, self.seq, slot)));
        self.seq += 1;
    }

    fn log(&mut self, event: &'static str, frame: &Frame) {
        if let Some(t) = &mut self.trace {
            t.events.push(EventRecord {
                time_us: self.now,
                event,
                packet_id: frame.tag.packet_id,
                path_index: frame.path_index(),
                mode: frame.tag.mode.bits(),
            });
        }
    }

    fn loss_at(&self, link: usize, t: u64) -> f64 {
        let base = self.cfg.topology.links()[link].loss;
        match self.cfg.loss_schedules.get(&link) {
            Some(steps) => steps.iter().take_while(|s| s.start_us <= t).last().map_or(base, |s| s.loss),
            None => base,
        }
    }

    fn path_metrics(&mut self, session: usize, path: usize) -> &mut PathMetrics {
        let i = self.path_index[&(session, path)];
        &mut self.m.per_path[i]
    }

    fn transmit(&mut self, copy: usize, hop: usize) {
        let (session, path) = (self.copies[copy].session, self.copies[copy].path);
        let spec = &self.runs[session].paths[path];
        let li = spec.links[hop];
        let link = &self.cfg.topology.links()[li];
        let forward = spec.nodes[hop] == link.a;
        let frame = self.copies[copy].frame.as_ref().expect("frame in flight");
        let tx = transmission_us(frame.wire_len(), link.capacity_mbps);
        let busy = self.busy.entry((li, forward)).or_insert(0);
        let start = (*busy).max(self.now);
        *busy = start + tx;
        let arrive = start + tx + delay_us(link.delay_ms);

        let injected = hop == 0
            && frame.kind == FrameKind::Data
            && self.copies[copy]
                .payload_seq
                .is_some_and(|s| self.inject.contains(&InjectedDrop { session, payload_seq: s }));
        let loss = self.loss_at(li, start);
        let dropped = injected || (loss > 0.0 && self.rng.gen::<f64>() < loss);
        self.m.per_link[li].frames += 1;
        if dropped {
            self.m.per_link[li].dropped += 1;
            self.m.copies_dropped += 1;
            self.path_metrics(session, path).frames_dropped += 1;
            let frame = self.copies[copy].frame.take().expect("frame in flight");
            self.log("drop", &frame);
        } else {
            self.schedule(arrive, Event::Arrive { copy, hop: hop + 1 });
        }
    }

    fn emit(&mut self, session: usize) {
        let run = &mut self.runs[session];
        let seq = run.next_seq;
        run.next_seq += 1;
        let payload = make_payload(seq, self.now, run.payload_size);
        let frames = run.rail.ingress_next(&payload).expect("generated payloads fit");
        let (more, interval) = (run.next_seq < run.count, run.interval);
        self.m.sent += 1;
        for frame in frames {
            self.m.copies_sent += 1;
            let path = frame.path_index();
            self.path_metrics(session, path).frames_sent += 1;
            self.log("send", &frame);
            let payload_seq = (frame.kind == FrameKind::Data).then_some(seq);
            self.copies.push(Copy { session, path, frame: Some(frame), payload_seq });
            self.transmit(self.copies.len() - 1, 0);
        }
        if more {
            self.schedule(self.now + interval, Event::Emit { session });
        }
    }

    fn arrive(&mut self, copy: usize) {
        let (session, path) = (self.copies[copy].session, self.copies[copy].path);
        let frame = self.copies[copy].frame.take().expect("frame in flight");
        self.m.copies_delivered += 1;
        self.path_metrics(session, path).frames_arrived += 1;
        self.log("arrive", &frame);
        let out = self.runs[session].rail.egress_accept(&frame).expect("frame from own ingress");
        match out.verdict {
            Some(Verdict::Duplicate) => {
                self.m.duplicates_suppressed += 1;
                self.log("duplicate", &frame);
            }
            Some(Verdict::Stale) => {
                self.m.duplicates_suppressed += 1;
                self.log("stale", &frame);
            }
            _ => {}
        }
        for d in out.deliveries {
            let mut shown = frame.clone();
            shown.tag.packet_id = d.packet_id;
            self.log(if d.recovered { "recover" } else { "deliver" }, &shown);
            let Some((seq, ts)) = check_payload(&d.payload) else {
                self.m.corrupted += 1;
                continue;
            };
            let run = &mut self.runs[session];
            if seq >= run.count || d.payload.len() != run.payload_size {
                self.m.corrupted += 1;
                continue;
            }
            if run.delivered[seq as usize] {
                self.m.double_deliveries += 1;
                continue;
            }
            run.delivered[seq as usize] = true;
            run.delivered_bits += 8 * d.payload.len() as u64;
            run.first_delivery.get_or_insert(self.now);
            run.last_delivery = self.now;
            self.m.delivered += 1;
            if d.recovered {
                self.m.parity_recovered += 1;
            }
            self.delays.0 += (self.now - ts) as f64 / 1000.0;
            self.delays.1 += 1;
            if let Some(t) = &mut self.trace {
                t.deliveries.push(DeliveryRecord {
                    time_us: self.now,
                    session,
                    payload_seq: seq,
                    packet_id: d.packet_id,
                    recovered: d.recovered,
                });
            }
        }
    }
}

fn labels(sessions: &[SessionRun]) -> (String, String, String) {
    let join = |f: &dyn Fn(&RailSession) -> String| sessions.iter().map(|s| f(&s.rail)).collect::<Vec<_>>().join("/");
    (
        join(&|r| r.mode().bits().to_string()),
        join(&|r| r.k().to_string()),
        join(&|r| r.parity_interval().map_or(String::new(), |x| x.to_string())),
    )
}

fn simulate(cfg: &SimConfig, traced: bool) -> Result<(Metrics, Trace), SimError> {
    cfg.validate()?;
    let mut runs = Vec::with_capacity(cfg.sessions.len());
    for setup in &cfg.sessions {
        let rail = setup.session.resolve(&cfg.topology)?;
        let paths = rail.group().paths().to_vec();
        let payload_size = setup.traffic.payload_size();
        let interval = match &setup.traffic {
            Traffic::Probe(p) => p.gap_us,
            Traffic::Saturating { .. } => saturating_interval(&rail, &paths, payload_size),
        };
        let count = setup.traffic.count();
        runs.push(SessionRun {
            rail,
            paths,
            payload_size,
            count,
            interval,
            next_seq: 0,
            delivered: vec![false; count as usize],
            delivered_bits: 0,
            first_delivery: None,
            last_delivery: 0,
        });
    }
    let (mode, k, x) = labels(&runs);
    let mut m = Metrics { mode, k, x, ..Metrics::default() };
    let mut path_index = HashMap::new();
    for (s, run) in runs.iter().enumerate() {
        for p in 0..run.paths.len() {
            path_index.insert((s, p), m.per_path.len());
            m.per_path.push(PathMetrics { session: s, path: p, ..PathMetrics::default() });
        }
    }
    m.per_link = (0..cfg.topology.links().len()).map(|link| LinkMetrics { link, ..LinkMetrics::default() }).collect();

    let mut sim = Sim {
        cfg,
        rng: ChaCha8Rng::seed_from_u64(cfg.seed),
        now: 0,
        seq: 0,
        heap: BinaryHeap::new(),
        events: Vec::new(),
        copies: Vec::new(),
        busy: HashMap::new(),
        inject: cfg.inject.iter().copied().collect(),
        runs,
        m,
        path_index,
        delays: (0.0, 0),
        trace: traced.then(Trace::default),
    };
    for (i, s) in cfg.sessions.iter().enumerate() {
        if s.traffic.count() > 0 {
            sim.schedule(s.start_us, Event::Emit { session: i });
        }
    }
    while let Some(Reverse((t, _, slot))) = sim.heap.pop() {
        if cfg.max_time_us.is_some_and(|end| t > end) {
            break;
        }
        debug_assert!(t >= sim.now, "event out of order");
        sim.now = t;
        match sim.events[slot].take().expect("event fires once") {
            Event::Emit { session } => sim.emit(session),
            Event::Arrive { copy, hop } => {
                if hop == sim.runs[sim.copies[copy].session].paths[sim.copies[copy].path].hops() {
                    sim.arrive(copy);
                } else {
                    sim.transmit(copy, hop);
                }
            }
        }
    }

    let mut m = sim.m;
    m.lost = m.sent - m.delivered;
    m.avg_delay_ms = if sim.delays.1 > 0 { sim.delays.0 / sim.delays.1 as f64 } else { 0.0 };
    m.goodput_mbps = sim
        .runs
        .iter()
        .filter_map(|r| {
            let first = r.first_delivery?;
            Some(r.delivered_bits as f64 / (r.last_delivery - first + r.interval) as f64)
        })
        .sum();
    Ok((m, sim.trace.unwrap_or_default()))
}

pub fn run(cfg: &SimConfig) -> Result<Metrics, SimError> {
    simulate(cfg, false).map(|(m, _)| m)
}

/// Like [`run`], also returning every delivery and the frame event log.
pub fn run_traced(cfg: &SimConfig) -> Result<(Metrics, Trace), SimError> {
    simulate(cfg, true)
}

/// Copy of `topo` with `f` applied to every link on the session's paths.
fn with_session_links(
    topo: &Topology,
    session: &SessionConfig,
    mut f: impl FnMut(&mut crate::topo::Link, usize),
) -> Result<Topology, SimError> {
    let rail = session.resolve(topo)?;
    let mut links = topo.links().to_vec();
    for p in rail.group().paths() {
        for (hop, &li) in p.links.iter().enumerate() {
            f(&mut links[li], hop);
        }
    }
    Ok(topo.with_links(links)?)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ProbeOptions {
    pub seed: u64,
    /// Capacity forced onto every session link; `None` keeps the topology's.
    pub path_capacity_mbps: Option<f64>,
}

impl Default for ProbeOptions {
    fn default() -> Self {
        ProbeOptions { seed: 0, path_capacity_mbps: Some(10.0) }
    }
}

/// Sends `probe` through one session.
pub fn probe_experiment(
    topo: &Topology,
    session: &SessionConfig,
    probe: &ProbeSpec,
    opts: &ProbeOptions,
) -> Result<Metrics, SimError> {
    let topo = match opts.path_capacity_mbps {
        Some(c) => with_session_links(topo, session, |l, _| l.capacity_mbps = c)?,
        None => topo.clone(),
    };
    let setup = SessionSetup { session: session.clone(), traffic: Traffic::Probe(probe.clone()), start_us: 0 };
    run(&SimConfig::new(topo, vec![setup], opts.seed))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub loss: f64,
    pub goodput_mbps: f64,
    pub metrics: Metrics,
}

fn payload_count(transfer_bytes: u64, payload_size: usize) -> u64 {
    transfer_bytes.div_ceil(payload_size as u64)
}

/// Saturating transfer of `transfer_bytes` at each loss rate, the rate
/// replacing the loss on the first hop of every session path.
pub fn goodput_sweep(
    topo: &Topology,
    session: &SessionConfig,
    loss_points: &[f64],
    transfer_bytes: u64,
    payload_size: usize,
    seed: u64,
) -> Result<Vec<SweepPoint>, SimError> {
    let rail = session.resolve(topo)?;
    let first_hops: Vec<usize> = rail.group().paths().iter().map(|p| p.links[0]).collect();
    let count = payload_count(transfer_bytes, payload_size);
    loss_points
        .iter()
        .map(|&loss| {
            if !(0.0..1.0).contains(&loss) {
                return Err(SimError::Invalid(format!("loss {loss} outside [0, 1)")));
            }
            let traffic = Traffic::Saturating { payload_size, count };
            let mut cfg = SimConfig::new(
                topo.clone(),
                vec![SessionSetup { session: session.clone(), traffic, start_us: 0 }],
                seed,
            );
            cfg.loss_schedules = first_hops.iter().map(|&l| (l, vec![LossStep { start_us: 0, loss }])).collect();
            let metrics = run(&cfg)?;
            Ok(SweepPoint { loss, goodput_mbps: metrics.goodput_mbps, metrics })
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ArqSpec {
    pub payload_size: usize,
    pub window: usize,
}

impl Default for ArqSpec {
    fn default() -> Self {
        ArqSpec { payload_size: 1400, window: 64 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ArqResult {
    pub delivered: u64,
    pub transmissions: u64,
    pub goodput_mbps: f64,
}

/// Idealised fixed-window ARQ over one path: the sender keeps up to `window`
/// frames outstanding at the path's bottleneck rate and retransmits each
/// loss one round trip after sending it. Acks are never lost. `loss`
/// replaces the loss on the path's first hop; other hops keep their own.
pub fn arq_baseline(
    topo: &Topology,
    path: &PathSpec,
    loss: f64,
    count: u64,
    spec: &ArqSpec,
    seed: u64,
) -> Result<ArqResult, SimError> {
    if spec.window == 0 {
        return Err(SimError::Invalid("ARQ window must be positive".into()));
    }
    let links: Vec<&crate::topo::Link> = path.links.iter().map(|&l| &topo.links()[l]).collect();
    let wire = spec.payload_size + crate::codec::ENCAP_OVERHEAD;
    let frame = transmission_us(wire, path.bottleneck_mbps);
    let prop: u64 = links.iter().map(|l| delay_us(l.delay_ms)).sum();
    let one_way = prop + links.iter().map(|l| transmission_us(wire, l.capacity_mbps)).sum::<u64>();
    let rtt = one_way + prop;
    let hop_loss: Vec<f64> = links.iter().enumerate().map(|(h, l)| if h == 0 { loss } else { l.loss }).collect();

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut t = 0u64;
    let mut next_new = 0u64;
    let mut retx: BinaryHeap<Reverse<u64>> = BinaryHeap::new();
    let mut inflight: BinaryHeap<Reverse<u64>> = BinaryHeap::new();
    let (mut delivered, mut transmissions) = (0u64, 0u64);
    let (mut first, mut last) = (None, 0u64);
    while delivered < count {
        while inflight.peek().is_some_and(|&Reverse(r)| r <= t) {
            inflight.pop();
        }
        let retx_ready = retx.peek().is_some_and(|&Reverse(r)| r <= t);
        if inflight.len() >= spec.window || (!retx_ready && next_new >= count) {
            let wake = [inflight.peek().map(|r| r.0), retx.peek().map(|r| r.0)].into_iter().flatten().min();
            t = wake.expect("outstanding frames remain").max(t + 1);
            continue;
        }
        if retx_ready {
            retx.pop();
        } else {
            next_new += 1;
        }
        transmissions += 1;
        inflight.push(Reverse(t + rtt));
        let ok = hop_loss.iter().all(|&p| !(p > 0.0 && rng.gen::<f64>() < p));
        if ok {
            delivered += 1;
            first.get_or_insert(t + one_way);
            last = t + one_way;
        } else {
            retx.push(Reverse(t + rtt));
        }
        t += frame;
    }
    let goodput_mbps = match first {
        Some(f) => (delivered * 8 * spec.payload_size as u64) as f64 / (last - f + frame) as f64,
        None => 0.0,
    };
    Ok(ArqResult { delivered, transmissions, goodput_mbps })
}

pub fn arq_sweep(
    topo: &Topology,
    path: &PathSpec,
    loss_points: &[f64],
    transfer_bytes: u64,
    spec: &ArqSpec,
    seed: u64,
) -> Result<Vec<(f64, f64)>, SimError> {
    let count = payload_count(transfer_bytes, spec.payload_size);
    loss_points.iter().map(|&l| Ok((l, arq_baseline(topo, path, l, count, spec, seed)?.goodput_mbps))).collect()
}

/// One metrics CSV row.
#[derive(Clone, Debug, PartialEq)]
pub struct MetricsRecord {
    pub run_id: String,
    pub loss: f64,
    pub metrics: Metrics,
}

pub const METRICS_HEADER: &str =
    "run_id,mode,k,X,loss,sent,delivered,lost,dup_suppressed,parity_recovered,avg_delay_ms,goodput_mbps";

pub fn metrics_csv(records: &[MetricsRecord]) -> String {
    let mut out = format!("{METRICS_HEADER}\n");
    for r in records {
        let m = &r.metrics;
        let _ = writeln!(
            out,
            "{},{},{},{},{:.4},{},{},{},{},{},{:.6},{:.6}",
            r.run_id,
            m.mode,
            m.k,
            m.x,
            r.loss,
            m.sent,
            m.delivered,
            m.lost,
            m.duplicates_suppressed,
            m.parity_recovered,
            m.avg_delay_ms,
            m.goodput_mbps
        );
    }
    out
}

pub fn export_metrics(records: &[MetricsRecord], path: &Path) -> Result<(), SimError> {
    std::fs::write(path, metrics_csv(records)).map_err(io_err(path))
}

// ---------------------------------------------------------------------------
// Experiment files

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum RunKind {
    /// Probe stream through one session, repeated with seeds
    /// `seed, seed + 1, ...`.
    Probe {
        #[serde(default)]
        probe: ProbeSpec,
        #[serde(default = "one")]
        iterations: u32,
        #[serde(default = "ten")]
        path_capacity_mbps: Option<f64>,
        /// Replaces the first-hop loss of every session path.
        #[serde(default)]
        loss: Option<f64>,
    },
    /// Goodput over a range of first-hop loss rates.
    Sweep {
        loss_points: Vec<f64>,
        transfer_bytes: u64,
        #[serde(default = "mtu_payload")]
        payload_size: usize,
    },
    /// The single-path ARQ baseline over the session's first path.
    Baseline {
        loss_points: Vec<f64>,
        transfer_bytes: u64,
        #[serde(default)]
        arq: ArqSpec,
    },
}

fn one() -> u32 {
    1
}
fn ten() -> Option<f64> {
    Some(10.0)
}
fn mtu_payload() -> usize {
    1400
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub name: String,
    pub session: SessionConfig,
    #[serde(flatten)]
    pub kind: RunKind,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Experiment {
    /// Relative paths resolve against the experiment file's directory.
    pub topology: PathBuf,
    #[serde(default)]
    pub seed: u64,
    pub runs: Vec<RunConfig>,
}

impl Experiment {
    pub fn load(path: &Path) -> Result<(Experiment, PathBuf), SimError> {
        let text = std::fs::read_to_string(path).map_err(io_err(path))?;
        let exp: Experiment = serde_json::from_str(&text)?;
        let topo_path = path.parent().unwrap_or(Path::new(".")).join(&exp.topology);
        Ok((exp, topo_path))
    }

    /// Independent units of work, in output order.
    pub fn jobs(&self) -> Vec<Job> {
        let mut jobs = Vec::new();
        for (r, run) in self.runs.iter().enumerate() {
            match &run.kind {
                RunKind::Probe { iterations, .. } => {
                    jobs.extend((0..*iterations).map(|i| Job { run: r, iteration: i, point: 0 }))
                }
                RunKind::Sweep { loss_points, .. } | RunKind::Baseline { loss_points, .. } => {
                    jobs.extend((0..loss_points.len()).map(|p| Job { run: r, iteration: 0, point: p }))
                }
            }
        }
        jobs
    }

    pub fn execute(&self, topo: &Topology, job: &Job) -> Result<MetricsRecord, SimError> {
        let run = &self.runs[job.run];
        match &run.kind {
            RunKind::Probe { probe, path_capacity_mbps, loss, .. } => {
                let topo = match loss {
                    Some(p) => with_session_links(topo, &run.session, |l, hop| {
                        if hop == 0 {
                            l.loss = *p
                        }
                    })?,
                    None => topo.clone(),
                };
                let opts =
                    ProbeOptions { seed: self.seed + job.iteration as u64, path_capacity_mbps: *path_capacity_mbps };
                let metrics = probe_experiment(&topo, &run.session, probe, &opts)?;
                let loss = loss.unwrap_or_else(|| first_hop_loss(&topo, &run.session));
                Ok(MetricsRecord { run_id: format!("{}-{}", run.name, job.iteration), loss, metrics })
            }
            RunKind::Sweep { loss_points, transfer_bytes, payload_size } => {
                let loss = loss_points[job.point];
                let pt = goodput_sweep(topo, &run.session, &[loss], *transfer_bytes, *payload_size, self.seed)?;
                let metrics = pt.into_iter().next().expect("one point").metrics;
                Ok(MetricsRecord { run_id: format!("{}-{}", run.name, job.point), loss, metrics })
            }
            RunKind::Baseline { loss_points, transfer_bytes, arq } => {
                let loss = loss_points[job.point];
                let rail = run.session.resolve(topo)?;
                let path = &rail.group().paths()[0];
                let count = payload_count(*transfer_bytes, arq.payload_size);
                let r = arq_baseline(topo, path, loss, count, arq, self.seed)?;
                let metrics = Metrics {
                    mode: "arq".into(),
                    k: "1".into(),
                    sent: count,
                    delivered: r.delivered,
                    lost: count - r.delivered,
                    copies_sent: r.transmissions,
                    goodput_mbps: r.goodput_mbps,
                    ..Metrics::default()
                };
                Ok(MetricsRecord { run_id: format!("{}-{}", run.name, job.point), loss, metrics })
            }
        }
    }

    /// Runs every job in order on this thread.
    pub fn run_all(&self, topo: &Topology) -> Result<Vec<MetricsRecord>, SimError> {
        self.jobs().iter().map(|j| self.execute(topo, j)).collect()
    }

    pub fn load_topology(path: &Path) -> Result<Topology, SimError> {
        Ok(load_topology(path)?)
    }
}

fn first_hop_loss(topo: &Topology, session: &SessionConfig) -> f64 {
    session
        .resolve(topo)
        .ok()
        .and_then(|r| r.group().paths().first().map(|p| topo.links()[p.links[0]].loss))
        .unwrap_or(0.0)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Job {
    pub run: usize,
    pub iteration: u32,
    pub point: usize,
}

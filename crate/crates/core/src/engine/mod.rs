//! Per-session ingress and egress state machines.
//!
//! A [`RailSession`] belongs to one (ingress, egress, direction) triple and
//! holds both ends: the ingress side assigns packet ids and fans payloads out
//! over the session's paths, the egress side filters duplicates and rebuilds
//! lost payloads from parity.

mod dedup;
mod modes;
mod parity;
mod stats;
mod wrr;

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use dedup::{quarter, DedupState, Verdict, ID_SPACE, QUARTER};
pub use modes::{mode_strategies, strategy_for, Mirror, ModeStrategy, ParityStripe, Stripe};
pub use parity::ParityGroupBuffer;
pub use stats::{adapted_weights, PathStats, DEFAULT_ALPHA, DEFAULT_UPDATE_EVERY};
pub use wrr::WeightedRoundRobin;

use crate::codec::{decode_tag, encode_tag, CodecError, Mode, RailTag, TagPair, ENCAP_OVERHEAD};
use crate::paths::{build_path_group, PathError, PathGroup};
use crate::registry::UnknownStrategy;
use crate::topo::{Topology, TopologyError};

/// Largest payload the ingress accepts.
pub const MAX_PAYLOAD: usize = 2048;

#[derive(Debug, Error)]
pub enum EngineError {
    #[error("payload of {0} bytes exceeds the {MAX_PAYLOAD}-byte limit")]
    Oversize(usize),
    #[error("invalid session: {0}")]
    InvalidConfig(String),
    #[error("frame carries mode {got}, session runs mode {expected}")]
    ModeMismatch { expected: Mode, got: Mode },
    #[error("frame path index {0} out of range")]
    PathIndex(u8),
    #[error("unknown session {0}")]
    UnknownSession(String),
    #[error(transparent)]
    Codec(#[from] CodecError),
    #[error(transparent)]
    Path(#[from] PathError),
    #[error(transparent)]
    Topology(#[from] TopologyError),
    #[error(transparent)]
    Strategy(#[from] UnknownStrategy),
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("session config: {0}")]
    Json(#[from] serde_json::Error),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FrameKind {
    Data,
    Parity,
}

/// One tagged frame on one path.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Frame {
    pub tag: RailTag,
    pub payload: Vec<u8>,
    pub kind: FrameKind,
    /// Original data lengths of the group, carried beside parity frames.
    pub parity_lengths: Option<Vec<usize>>,
}

impl Frame {
    pub fn path_index(&self) -> usize {
        self.tag.path_index as usize
    }

    /// Bytes on the wire: payload plus the two VLAN headers.
    pub fn wire_len(&self) -> usize {
        self.payload.len() + ENCAP_OVERHEAD
    }

    /// VLAN headers followed by the payload.
    pub fn to_bytes(&self) -> Result<Vec<u8>, CodecError> {
        let mut out = encode_tag(&self.tag)?.to_vlan_headers().to_vec();
        out.extend_from_slice(&self.payload);
        Ok(out)
    }

    /// Parses wire bytes. The frame kind is unknown on the wire and reported
    /// as data; the egress classifies by packet id.
    pub fn from_bytes(bytes: &[u8]) -> Result<Frame, CodecError> {
        let tag = decode_tag(&TagPair::from_vlan_headers(bytes)?)?;
        Ok(Frame { tag, payload: bytes[ENCAP_OVERHEAD..].to_vec(), kind: FrameKind::Data, parity_lengths: None })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Delivery {
    pub packet_id: u16,
    pub payload: Vec<u8>,
    pub recovered: bool,
}

/// What the egress did with one frame.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EgressOutcome {
    pub kind: FrameKind,
    /// Duplicate filter verdict; `None` for modes that bypass it.
    pub verdict: Option<Verdict>,
    pub deliveries: Vec<Delivery>,
}

/// Mutable per-session state shared by ingress and egress.
#[derive(Clone, Debug)]
pub struct SessionState {
    pub(crate) k: usize,
    pub(crate) x: usize,
    pub(crate) weights: Vec<f64>,
    pub(crate) next_id: u16,
    pub(crate) wrr: WeightedRoundRobin,
    pub(crate) group_acc: Vec<u8>,
    pub(crate) group_lengths: Vec<usize>,
    pub(crate) group_counter: u64,
    pub(crate) dedup: DedupState,
    pub(crate) buffer: ParityGroupBuffer,
}

impl SessionState {
    fn take_id(&mut self) -> u16 {
        let id = self.next_id;
        self.next_id = self.next_id.wrapping_add(1);
        id
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct SessionKey {
    pub ingress: String,
    pub egress: String,
    pub direction: String,
}

impl std::fmt::Display for SessionKey {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}->{} ({})", self.ingress, self.egress, self.direction)
    }
}

#[derive(Debug)]
pub struct RailSession {
    key: SessionKey,
    mode: Mode,
    x: Option<u16>,
    group: PathGroup,
    strategy: &'static dyn ModeStrategy,
    state: SessionState,
}

/// Builds a session after checking the mode/k/X combination and that every
/// path runs from `ingress` to `egress`.
pub fn configure_session(
    ingress: &str,
    egress: &str,
    direction: &str,
    mode: Mode,
    k: usize,
    x: Option<u16>,
    group: PathGroup,
) -> Result<RailSession, EngineError> {
    if k != group.k() {
        return Err(EngineError::InvalidConfig(format!("k={k} but the path group has {} paths", group.k())));
    }
    for (i, p) in group.paths().iter().enumerate() {
        if p.source() != ingress || p.destination() != egress {
            return Err(EngineError::InvalidConfig(format!(
                "path {i} runs {}->{}, expected {ingress}->{egress}",
                p.source(),
                p.destination()
            )));
        }
    }
    let strategy = strategy_for(mode);
    strategy.validate(k, x)?;
    let xs = if mode.has_parity() { x.map_or(0, usize::from) } else { 0 };
    let state = SessionState {
        k,
        x: xs,
        weights: group.weights().to_vec(),
        next_id: 0,
        wrr: WeightedRoundRobin::new(k),
        group_acc: Vec::new(),
        group_lengths: Vec::new(),
        group_counter: 0,
        dedup: DedupState::new(),
        buffer: ParityGroupBuffer::new(xs.max(2)),
    };
    let key = SessionKey { ingress: ingress.into(), egress: egress.into(), direction: direction.into() };
    Ok(RailSession { key, mode, x: if mode.has_parity() { x } else { None }, group, strategy, state })
}

impl RailSession {
    pub fn key(&self) -> &SessionKey {
        &self.key
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn k(&self) -> usize {
        self.state.k
    }

    pub fn parity_interval(&self) -> Option<u16> {
        self.x
    }

    pub fn group(&self) -> &PathGroup {
        &self.group
    }

    pub fn weights(&self) -> &[f64] {
        &self.state.weights
    }

    pub fn dedup(&self) -> &DedupState {
        &self.state.dedup
    }

    pub fn next_packet_id(&self) -> u16 {
        self.state.next_id
    }

    pub fn set_weights(&mut self, weights: Vec<f64>) -> Result<(), EngineError> {
        self.group.set_weights(weights)?;
        self.state.weights = self.group.weights().to_vec();
        Ok(())
    }

    /// Recomputes weights from observed loss; see [`adapted_weights`].
    pub fn update_weights(&mut self, stats: &PathStats) -> Result<(), EngineError> {
        let bottlenecks: Vec<f64> = self.group.paths().iter().map(|p| p.bottleneck_mbps).collect();
        self.set_weights(adapted_weights(&bottlenecks, stats))
    }

    /// Expected frames per payload on each path.
    pub fn path_load(&self) -> Vec<f64> {
        self.strategy.path_load(self.state.x, &self.state.weights)
    }

    /// Tags one payload and returns the frames to put on the wire, in order.
    pub fn ingress_next(&mut self, payload: &[u8]) -> Result<Vec<Frame>, EngineError> {
        if payload.len() > MAX_PAYLOAD {
            return Err(EngineError::Oversize(payload.len()));
        }
        Ok(self.strategy.ingress(&mut self.state, payload))
    }

    pub fn egress_accept(&mut self, frame: &Frame) -> Result<EgressOutcome, EngineError> {
        if frame.tag.mode != self.mode {
            return Err(EngineError::ModeMismatch { expected: self.mode, got: frame.tag.mode });
        }
        if frame.path_index() >= self.state.k {
            return Err(EngineError::PathIndex(frame.tag.path_index));
        }
        Ok(self.strategy.egress(&mut self.state, frame))
    }
}

/// Sessions demultiplexed by key.
#[derive(Debug, Default)]
pub struct SessionTable {
    sessions: BTreeMap<SessionKey, RailSession>,
}

impl SessionTable {
    pub fn new() -> Self {
        SessionTable::default()
    }

    pub fn insert(&mut self, session: RailSession) -> Option<RailSession> {
        self.sessions.insert(session.key.clone(), session)
    }

    pub fn get(&self, key: &SessionKey) -> Option<&RailSession> {
        self.sessions.get(key)
    }

    pub fn get_mut(&mut self, key: &SessionKey) -> Option<&mut RailSession> {
        self.sessions.get_mut(key)
    }

    pub fn len(&self) -> usize {
        self.sessions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sessions.is_empty()
    }

    /// Routes a frame to its session's egress. Frames for unknown sessions
    /// are dropped with a warning.
    pub fn egress_accept(&mut self, key: &SessionKey, frame: &Frame) -> Result<EgressOutcome, EngineError> {
        match self.sessions.get_mut(key) {
            Some(s) => s.egress_accept(frame),
            None => {
                log::warn!("dropping frame {} for unknown session {key}", frame.tag.packet_id);
                Err(EngineError::UnknownSession(key.to_string()))
            }
        }
    }
}

fn forward() -> String {
    "forward".into()
}

/// On-disk session description.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SessionConfig {
    pub ingress: String,
    pub egress: String,
    #[serde(default = "forward")]
    pub direction: String,
    pub mode: Mode,
    /// Defaults to the number of listed paths.
    #[serde(default)]
    pub k: Option<usize>,
    #[serde(default, rename = "X", alias = "x")]
    pub x: Option<u16>,
    /// Node sequences; computed as disjoint shortest paths when absent.
    #[serde(default)]
    pub paths: Option<Vec<Vec<String>>>,
    /// Defaults to capacity-proportional.
    #[serde(default)]
    pub weights: Option<Vec<f64>>,
}

impl SessionConfig {
    pub fn resolve(&self, topo: &Topology) -> Result<RailSession, EngineError> {
        let group = match &self.paths {
            Some(seqs) => {
                let specs = seqs.iter().map(|s| topo.path_from_nodes(s)).collect::<Result<Vec<_>, _>>()?;
                match &self.weights {
                    Some(w) => PathGroup::new(specs, w.clone())?,
                    None => PathGroup::weighted_by_capacity(specs)?,
                }
            }
            None => {
                let k = self.k.ok_or_else(|| EngineError::InvalidConfig("need either paths or k".into()))?;
                let mut g = build_path_group(topo, &self.ingress, &self.egress, k)?;
                if let Some(w) = &self.weights {
                    g.set_weights(w.clone())?;
                }
                g
            }
        };
        let k = self.k.unwrap_or(group.k());
        configure_session(&self.ingress, &self.egress, &self.direction, self.mode, k, self.x, group)
    }
}

pub fn parse_session_configs(text: &str) -> Result<Vec<SessionConfig>, EngineError> {
    let v: serde_json::Value = serde_json::from_str(text)?;
    if v.is_array() {
        Ok(serde_json::from_value(v)?)
    } else {
        Ok(vec![serde_json::from_value(v)?])
    }
}

/// Reads one session object or an array of them.
pub fn load_session_configs(path: &Path) -> Result<Vec<SessionConfig>, EngineError> {
    let text =
        std::fs::read_to_string(path).map_err(|source| EngineError::Io { path: path.display().to_string(), source })?;
    parse_session_configs(&text)
}

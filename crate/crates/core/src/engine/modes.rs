//! The four transmission modes as interchangeable strategies.

use std::fmt;

use super::dedup::{quarter, Verdict};
use super::{Delivery, EgressOutcome, EngineError, Frame, FrameKind, SessionState};
use crate::codec::{xor_into, Mode, ParityGroup, RailTag};
use crate::registry::Registry;

/// Ingress fan-out and egress handling for one mode. Strategies are
/// stateless; all per-session state lives in [`SessionState`].
pub trait ModeStrategy: Send + Sync + fmt::Debug {
    fn mode(&self) -> Mode;

    /// Rejects `(k, X)` combinations the mode cannot run with.
    fn validate(&self, k: usize, x: Option<u16>) -> Result<(), EngineError>;

    fn ingress(&self, st: &mut SessionState, payload: &[u8]) -> Vec<Frame>;

    fn egress(&self, st: &mut SessionState, frame: &Frame) -> EgressOutcome;

    /// Expected frames placed on each path per submitted payload.
    fn path_load(&self, x: usize, weights: &[f64]) -> Vec<f64>;
}

#[derive(Debug)]
pub struct Stripe;

#[derive(Debug)]
pub struct Mirror;

/// Modes 4 and 5: XOR parity every `X` ids, on a fixed last path or on a
/// path that rotates per group.
#[derive(Debug)]
pub struct ParityStripe {
    pub rotating: bool,
}

static STRIPE: Stripe = Stripe;
static MIRROR: Mirror = Mirror;
static DEDICATED: ParityStripe = ParityStripe { rotating: false };
static ROTATING: ParityStripe = ParityStripe { rotating: true };

pub fn strategy_for(mode: Mode) -> &'static dyn ModeStrategy {
    match mode {
        Mode::Stripe => &STRIPE,
        Mode::Mirror => &MIRROR,
        Mode::DedicatedParity => &DEDICATED,
        Mode::RotatingParity => &ROTATING,
    }
}

pub fn mode_strategies() -> Registry<dyn ModeStrategy> {
    let mut r: Registry<dyn ModeStrategy> = Registry::new("mode");
    r.register("stripe", &["0"], Box::new(Stripe));
    r.register("mirror", &["1"], Box::new(Mirror));
    r.register("dedicated-parity", &["4", "parity"], Box::new(ParityStripe { rotating: false }));
    r.register("rotating-parity", &["5"], Box::new(ParityStripe { rotating: true }));
    r
}

fn frame(mode: Mode, id: u16, path: usize, payload: Vec<u8>, kind: FrameKind) -> Frame {
    let tag = RailTag::new(mode, id, path as u8).expect("path index below 16");
    Frame { tag, payload, kind, parity_lengths: None }
}

impl ModeStrategy for Stripe {
    fn mode(&self) -> Mode {
        Mode::Stripe
    }

    fn validate(&self, _k: usize, _x: Option<u16>) -> Result<(), EngineError> {
        Ok(())
    }

    fn ingress(&self, st: &mut SessionState, payload: &[u8]) -> Vec<Frame> {
        let id = st.take_id();
        let path = st.wrr.next(&st.weights, |_| true);
        vec![frame(Mode::Stripe, id, path, payload.to_vec(), FrameKind::Data)]
    }

    fn egress(&self, _st: &mut SessionState, f: &Frame) -> EgressOutcome {
        EgressOutcome {
            kind: FrameKind::Data,
            verdict: None,
            deliveries: vec![Delivery { packet_id: f.tag.packet_id, payload: f.payload.clone(), recovered: false }],
        }
    }

    fn path_load(&self, _x: usize, weights: &[f64]) -> Vec<f64> {
        weights.to_vec()
    }
}

impl ModeStrategy for Mirror {
    fn mode(&self) -> Mode {
        Mode::Mirror
    }

    fn validate(&self, _k: usize, _x: Option<u16>) -> Result<(), EngineError> {
        Ok(())
    }

    fn ingress(&self, st: &mut SessionState, payload: &[u8]) -> Vec<Frame> {
        let id = st.take_id();
        (0..st.k).map(|p| frame(Mode::Mirror, id, p, payload.to_vec(), FrameKind::Data)).collect()
    }

    fn egress(&self, st: &mut SessionState, f: &Frame) -> EgressOutcome {
        let verdict = st.dedup.check(f.tag.packet_id);
        let deliveries = if verdict == Verdict::Accept {
            vec![Delivery { packet_id: f.tag.packet_id, payload: f.payload.clone(), recovered: false }]
        } else {
            Vec::new()
        };
        EgressOutcome { kind: FrameKind::Data, verdict: Some(verdict), deliveries }
    }

    fn path_load(&self, _x: usize, weights: &[f64]) -> Vec<f64> {
        vec![1.0; weights.len()]
    }
}

impl ParityStripe {
    fn parity_path(&self, st: &SessionState) -> usize {
        if self.rotating {
            (st.group_counter % st.k as u64) as usize
        } else {
            st.k - 1
        }
    }

    fn data_load(weights: &[f64], parity: usize) -> Vec<f64> {
        let total: f64 = weights.iter().enumerate().filter(|&(i, _)| i != parity).map(|(_, w)| w).sum();
        let n = weights.len() - 1;
        (0..weights.len())
            .map(|i| match i {
                _ if i == parity => 0.0,
                _ if total > 0.0 => weights[i] / total,
                _ => 1.0 / n as f64,
            })
            .collect()
    }
}

impl ModeStrategy for ParityStripe {
    fn mode(&self) -> Mode {
        if self.rotating {
            Mode::RotatingParity
        } else {
            Mode::DedicatedParity
        }
    }

    fn validate(&self, k: usize, x: Option<u16>) -> Result<(), EngineError> {
        if k < 2 {
            return Err(EngineError::InvalidConfig(format!("mode {} needs at least 2 paths, got {k}", self.mode())));
        }
        match x {
            None => Err(EngineError::InvalidConfig(format!("mode {} needs a parity interval X", self.mode()))),
            Some(x) if !(2..=16_384).contains(&x) || !x.is_power_of_two() => {
                Err(EngineError::InvalidConfig(format!("parity interval X={x} must be a power of two in 2..=16384")))
            }
            Some(_) => Ok(()),
        }
    }

    fn ingress(&self, st: &mut SessionState, payload: &[u8]) -> Vec<Frame> {
        let mode = self.mode();
        let parity_path = self.parity_path(st);
        let id = st.take_id();
        let data_path = st.wrr.next(&st.weights, |i| i != parity_path);
        let mut out = vec![frame(mode, id, data_path, payload.to_vec(), FrameKind::Data)];
        xor_into(&mut st.group_acc, payload);
        st.group_lengths.push(payload.len());
        if st.next_id as usize % st.x == st.x - 1 {
            let pid = st.take_id();
            let mut p = frame(mode, pid, parity_path, std::mem::take(&mut st.group_acc), FrameKind::Parity);
            p.parity_lengths = Some(std::mem::take(&mut st.group_lengths));
            out.push(p);
            st.group_counter += 1;
        }
        out
    }

    fn egress(&self, st: &mut SessionState, f: &Frame) -> EgressOutcome {
        let id = f.tag.packet_id;
        let x = st.x;
        let base = id - (id as usize % x) as u16;
        let kind = if id as usize % x == x - 1 { FrameKind::Parity } else { FrameKind::Data };
        let q_before = quarter(st.dedup.pointer());
        let verdict = st.dedup.check(id);
        if quarter(st.dedup.pointer()) != q_before {
            let dedup = &st.dedup;
            st.buffer.retain(|b| dedup.in_horizon(b));
        }
        let mut deliveries = Vec::new();
        if verdict != Verdict::Accept {
            return EgressOutcome { kind, verdict: Some(verdict), deliveries };
        }
        let recovered = match kind {
            FrameKind::Data => {
                deliveries.push(Delivery { packet_id: id, payload: f.payload.clone(), recovered: false });
                st.buffer.add_data(base, id as usize % x, &f.payload)
            }
            FrameKind::Parity => {
                let lengths = f.parity_lengths.clone().unwrap_or_default();
                let group = ParityGroup { group_size: x, parity: f.payload.clone(), lengths };
                st.buffer.add_parity(base, group)
            }
        };
        if let Some((pos, payload)) = recovered {
            let rid = base + pos as u16;
            if st.dedup.check(rid) == Verdict::Accept {
                deliveries.push(Delivery { packet_id: rid, payload, recovered: true });
            }
        }
        EgressOutcome { kind, verdict: Some(verdict), deliveries }
    }

    fn path_load(&self, x: usize, weights: &[f64]) -> Vec<f64> {
        let k = weights.len();
        let parity_share = 1.0 / (x.max(2) - 1) as f64;
        if !self.rotating {
            let mut load = Self::data_load(weights, k - 1);
            load[k - 1] = parity_share;
            return load;
        }
        let mut load = vec![0.0; k];
        for p in 0..k {
            for (l, d) in load.iter_mut().zip(Self::data_load(weights, p)) {
                *l += d / k as f64;
            }
            load[p] += parity_share / k as f64;
        }
        load
    }
}

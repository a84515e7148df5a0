//! Multipath backhaul toolkit for wireless ISP networks.
//!
//! - [`topo`]: topology model, max-flow capacity, disjoint paths
//! - [`planner`]: price regression, link multiplicity, redesign planners
//! - [`paths`]: augmentation, path counting, synthesis, path weighting
//! - [`codec`]: 24-bit session tag in two VLAN ids, XOR parity
//! - [`engine`]: per-session ingress/egress state machines for modes 0/1/4/5
//! - [`netsim`]: deterministic discrete-event packet simulator

// `!(x > 0.0)` deliberately rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod codec;
pub mod engine;
pub mod netsim;
pub mod paths;
pub mod planner;
pub mod registry;
pub mod topo;

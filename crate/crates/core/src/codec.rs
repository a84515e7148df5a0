//! On-wire session state and XOR parity.
//!
//! Session state is a 24-bit word carried in the 12-bit VLAN ids of two
//! stacked 802.1Q headers:
//!
//! ```text
//!  23    20 19                             4 3     0
//! +--------+--------------------------------+-------+
//! |  mode  |           packet id            | path  |
//! +--------+--------------------------------+-------+
//! |<------- outer vlan id ------>|<-- inner vlan id -->|
//! ```

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum CodecError {
    #[error("unknown mode {0}")]
    UnknownMode(u8),
    #[error("path index {0} out of range (must be < 16)")]
    PathIndex(u8),
    #[error("vlan id {0:#x} exceeds 12 bits")]
    VlanId(u16),
    #[error("truncated vlan header")]
    Truncated,
    #[error("unexpected TPID {0:#06x}")]
    Tpid(u16),
    #[error("no payloads to protect")]
    EmptyGroup,
    #[error("{missing} data payloads missing; single parity recovers at most one")]
    Unrecoverable { missing: usize },
    #[error("no data payload missing")]
    NothingToRecover,
    #[error("position {0} outside the group")]
    Position(usize),
}

/// Packet treatment for a session direction.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub enum Mode {
    /// Striping over the path group.
    Stripe = 0,
    /// Mirroring over every path.
    Mirror = 1,
    /// Striping plus a dedicated parity path.
    DedicatedParity = 4,
    /// Striping with the parity path rotating per group.
    RotatingParity = 5,
}

impl Mode {
    pub const ALL: [Mode; 4] = [Mode::Stripe, Mode::Mirror, Mode::DedicatedParity, Mode::RotatingParity];

    pub fn bits(self) -> u8 {
        self as u8
    }

    pub fn has_parity(self) -> bool {
        matches!(self, Mode::DedicatedParity | Mode::RotatingParity)
    }
}

impl TryFrom<u8> for Mode {
    type Error = CodecError;

    fn try_from(v: u8) -> Result<Self, CodecError> {
        match v {
            0 => Ok(Mode::Stripe),
            1 => Ok(Mode::Mirror),
            4 => Ok(Mode::DedicatedParity),
            5 => Ok(Mode::RotatingParity),
            other => Err(CodecError::UnknownMode(other)),
        }
    }
}

impl From<Mode> for u8 {
    fn from(m: Mode) -> u8 {
        m as u8
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", *self as u8)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct RailTag {
    pub mode: Mode,
    pub packet_id: u16,
    pub path_index: u8,
}

impl RailTag {
    pub fn new(mode: Mode, packet_id: u16, path_index: u8) -> Result<Self, CodecError> {
        if path_index >= 16 {
            return Err(CodecError::PathIndex(path_index));
        }
        Ok(RailTag { mode, packet_id, path_index })
    }

    pub fn word(&self) -> u32 {
        ((self.mode as u32) << 20) | ((self.packet_id as u32) << 4) | (self.path_index as u32 & 0xF)
    }
}

/// The two 12-bit VLAN ids carrying a [`RailTag`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct TagPair {
    pub outer_vlan_id: u16,
    pub inner_vlan_id: u16,
}

pub fn encode_tag(tag: &RailTag) -> Result<TagPair, CodecError> {
    if tag.path_index >= 16 {
        return Err(CodecError::PathIndex(tag.path_index));
    }
    let w = tag.word();
    Ok(TagPair { outer_vlan_id: (w >> 12) as u16, inner_vlan_id: (w & 0xFFF) as u16 })
}

pub fn decode_tag(pair: &TagPair) -> Result<RailTag, CodecError> {
    for id in [pair.outer_vlan_id, pair.inner_vlan_id] {
        if id >= 4096 {
            return Err(CodecError::VlanId(id));
        }
    }
    let w = ((pair.outer_vlan_id as u32) << 12) | pair.inner_vlan_id as u32;
    let mode = Mode::try_from((w >> 20) as u8)?;
    Ok(RailTag { mode, packet_id: ((w >> 4) & 0xFFFF) as u16, path_index: (w & 0xF) as u8 })
}

/// Bytes added to every frame by the two stacked VLAN headers.
pub const ENCAP_OVERHEAD: usize = 8;

const TPID_8021Q: u16 = 0x8100;

impl TagPair {
    /// Two 802.1Q headers (TPID + TCI each), priority and DEI zero.
    pub fn to_vlan_headers(&self) -> [u8; ENCAP_OVERHEAD] {
        let mut out = [0u8; ENCAP_OVERHEAD];
        for (chunk, vid) in out.chunks_exact_mut(4).zip([self.outer_vlan_id, self.inner_vlan_id]) {
            chunk[..2].copy_from_slice(&TPID_8021Q.to_be_bytes());
            chunk[2..].copy_from_slice(&(vid & 0x0FFF).to_be_bytes());
        }
        out
    }

    pub fn from_vlan_headers(bytes: &[u8]) -> Result<TagPair, CodecError> {
        if bytes.len() < ENCAP_OVERHEAD {
            return Err(CodecError::Truncated);
        }
        let mut ids = [0u16; 2];
        for (i, chunk) in bytes[..ENCAP_OVERHEAD].chunks_exact(4).enumerate() {
            let tpid = u16::from_be_bytes([chunk[0], chunk[1]]);
            if tpid != TPID_8021Q {
                return Err(CodecError::Tpid(tpid));
            }
            ids[i] = u16::from_be_bytes([chunk[2], chunk[3]]) & 0x0FFF;
        }
        Ok(TagPair { outer_vlan_id: ids[0], inner_vlan_id: ids[1] })
    }
}

/// XOR of all payloads, each zero-padded to the longest.
pub fn make_parity<P: AsRef<[u8]>>(data: &[P]) -> Result<Vec<u8>, CodecError> {
    if data.is_empty() {
        return Err(CodecError::EmptyGroup);
    }
    let len = data.iter().map(|p| p.as_ref().len()).max().unwrap_or(0);
    let mut out = vec![0u8; len];
    for p in data {
        xor_into(&mut out, p.as_ref());
    }
    Ok(out)
}

pub(crate) fn xor_into(acc: &mut Vec<u8>, p: &[u8]) {
    if acc.len() < p.len() {
        acc.resize(p.len(), 0);
    }
    for (a, b) in acc.iter_mut().zip(p) {
        *a ^= b;
    }
}

/// A sealed parity group: `group_size - 1` data positions plus parity.
///
/// Original payload lengths travel with the group as out-of-band metadata so
/// a recovered payload can be trimmed back from its padded length.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ParityGroup {
    pub group_size: usize,
    pub parity: Vec<u8>,
    pub lengths: Vec<usize>,
}

impl ParityGroup {
    pub fn seal<P: AsRef<[u8]>>(data: &[P]) -> Result<ParityGroup, CodecError> {
        Ok(ParityGroup {
            group_size: data.len() + 1,
            parity: make_parity(data)?,
            lengths: data.iter().map(|p| p.as_ref().len()).collect(),
        })
    }

    pub fn data_positions(&self) -> usize {
        self.group_size - 1
    }
}

/// Reconstructs the single missing data payload of `group` from the received
/// ones.
pub fn recover_missing(group: &ParityGroup, received: &[(usize, &[u8])]) -> Result<(usize, Vec<u8>), CodecError> {
    let positions = group.data_positions();
    let mut present = vec![false; positions];
    for &(pos, _) in received {
        if pos >= positions {
            return Err(CodecError::Position(pos));
        }
        present[pos] = true;
    }
    let missing: Vec<usize> = (0..positions).filter(|&p| !present[p]).collect();
    match missing.len() {
        0 => Err(CodecError::NothingToRecover),
        1 => {
            let mut out = group.parity.clone();
            for &(_, p) in received {
                xor_into(&mut out, p);
            }
            let pos = missing[0];
            if let Some(&len) = group.lengths.get(pos) {
                out.truncate(len);
            }
            Ok((pos, out))
        }
        n => Err(CodecError::Unrecoverable { missing: n }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn pair(outer: u16, inner: u16) -> TagPair {
        TagPair { outer_vlan_id: outer, inner_vlan_id: inner }
    }

    #[test]
    fn encode_examples() {
        let t = RailTag::new(Mode::Stripe, 0, 0).unwrap();
        assert_eq!(encode_tag(&t).unwrap(), pair(0, 0));
        let t = RailTag::new(Mode::Mirror, 0xABCD, 5).unwrap();
        assert_eq!(t.word(), 0x1ABCD5);
        assert_eq!(encode_tag(&t).unwrap(), pair(0x1AB, 0xCD5));
        let t = RailTag::new(Mode::RotatingParity, 0xFFFF, 15).unwrap();
        assert_eq!(t.word(), 0x5FFFFF);
        assert_eq!(encode_tag(&t).unwrap(), pair(0x5FF, 0xFFF));
        assert_eq!(RailTag::new(Mode::Mirror, 1, 16), Err(CodecError::PathIndex(16)));
        let raw = RailTag { mode: Mode::Mirror, packet_id: 1, path_index: 16 };
        assert_eq!(encode_tag(&raw), Err(CodecError::PathIndex(16)));
    }

    #[test]
    fn decode_examples() {
        assert_eq!(decode_tag(&pair(0, 0)).unwrap(), RailTag::new(Mode::Stripe, 0, 0).unwrap());
        assert_eq!(decode_tag(&pair(0x1AB, 0xCD5)).unwrap(), RailTag::new(Mode::Mirror, 0xABCD, 5).unwrap());
        assert_eq!(decode_tag(&pair(0x2AB, 0xCD5)), Err(CodecError::UnknownMode(2)));
        assert_eq!(decode_tag(&pair(0x1000, 0)), Err(CodecError::VlanId(0x1000)));
    }

    #[test]
    fn vlan_headers_roundtrip() {
        let p = pair(0x1AB, 0xCD5);
        let bytes = p.to_vlan_headers();
        assert_eq!(bytes, [0x81, 0x00, 0x01, 0xAB, 0x81, 0x00, 0x0C, 0xD5]);
        assert_eq!(TagPair::from_vlan_headers(&bytes).unwrap(), p);
        assert_eq!(TagPair::from_vlan_headers(&bytes[..5]), Err(CodecError::Truncated));
        let mut bad = bytes;
        bad[4] = 0x88;
        assert!(matches!(TagPair::from_vlan_headers(&bad), Err(CodecError::Tpid(_))));
    }

    #[test]
    fn parity_examples() {
        assert_eq!(make_parity(&[vec![0xFF], vec![0x0F]]).unwrap(), vec![0xF0]);
        assert_eq!(make_parity(&[b"abc"]).unwrap(), b"abc".to_vec());
        assert_eq!(make_parity::<Vec<u8>>(&[]), Err(CodecError::EmptyGroup));
        assert_eq!(make_parity(&[vec![1, 2, 3], vec![1]]).unwrap(), vec![0, 2, 3]);
    }

    #[test]
    fn recovery_examples() {
        let p = b"payload".to_vec();
        let g = ParityGroup::seal(&[&p]).unwrap();
        assert_eq!(g.group_size, 2);
        assert_eq!(recover_missing(&g, &[]).unwrap(), (0, p));

        let (a, b, c) = (b"alpha".to_vec(), b"be".to_vec(), b"charlie".to_vec());
        let g = ParityGroup::seal(&[&a, &b, &c]).unwrap();
        let (pos, got) = recover_missing(&g, &[(0, &a), (1, &b)]).unwrap();
        assert_eq!((pos, got), (2, c.clone()));
        let (pos, got) = recover_missing(&g, &[(0, &a), (2, &c)]).unwrap();
        assert_eq!((pos, got), (1, b.clone()));
        assert_eq!(recover_missing(&g, &[(2, &c)]), Err(CodecError::Unrecoverable { missing: 2 }));
        assert_eq!(recover_missing(&g, &[(0, &a), (1, &b), (2, &c)]), Err(CodecError::NothingToRecover));
    }

    fn xor_fold(ps: &[Vec<u8>]) -> Vec<u8> {
        let n = ps.iter().map(Vec::len).max().unwrap();
        (0..n).map(|i| ps.iter().fold(0u8, |acc, p| acc ^ p.get(i).copied().unwrap_or(0))).collect()
    }

    proptest! {
        #[test]
        fn parity_matches_fold_and_cancels(ps in prop::collection::vec(prop::collection::vec(any::<u8>(), 96), 7)) {
            let parity = make_parity(&ps).unwrap();
            prop_assert_eq!(&parity, &xor_fold(&ps));
            let mut all = ps.clone();
            all.push(parity);
            prop_assert!(make_parity(&all).unwrap().iter().all(|&b| b == 0));
        }

        #[test]
        fn parity_is_order_independent(
            ps in prop::collection::vec(prop::collection::vec(any::<u8>(), 0..64), 1..10),
            seed in any::<u64>(),
        ) {
            use rand::{seq::SliceRandom, SeedableRng};
            let mut shuffled = ps.clone();
            shuffled.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
            prop_assert_eq!(make_parity(&ps).unwrap(), make_parity(&shuffled).unwrap());
        }

        #[test]
        fn single_loss_is_recovered(
            ps in prop::collection::vec(prop::collection::vec(any::<u8>(), 1..1500), 1..16),
            drop in any::<prop::sample::Index>(),
        ) {
            let g = ParityGroup::seal(&ps).unwrap();
            let lost = drop.index(ps.len());
            let received: Vec<(usize, &[u8])> = ps
                .iter()
                .enumerate()
                .filter(|(i, _)| *i != lost)
                .map(|(i, p)| (i, p.as_slice()))
                .collect();
            let (pos, payload) = recover_missing(&g, &received).unwrap();
            prop_assert_eq!(pos, lost);
            prop_assert_eq!(&payload, &ps[lost]);
        }

        #[test]
        fn tag_roundtrip(mode in prop::sample::select(Mode::ALL.to_vec()), id in any::<u16>(), path in 0u8..16) {
            let t = RailTag::new(mode, id, path).unwrap();
            let p = encode_tag(&t).unwrap();
            prop_assert!(p.outer_vlan_id < 4096 && p.inner_vlan_id < 4096);
            prop_assert_eq!(decode_tag(&p).unwrap(), t);
        }
    }
}

//! Egress-side buffering of parity groups.

use std::collections::BTreeMap;

use crate::codec::{recover_missing, ParityGroup};

#[derive(Clone, Debug, Default)]
struct Slot {
    data: BTreeMap<usize, Vec<u8>>,
    parity: Option<ParityGroup>,
    done: bool,
}

/// Received data payloads and parity, keyed by group base id.
#[derive(Clone, Debug)]
pub struct ParityGroupBuffer {
    group_size: usize,
    groups: BTreeMap<u16, Slot>,
}

impl ParityGroupBuffer {
    pub fn new(group_size: usize) -> Self {
        ParityGroupBuffer { group_size, groups: BTreeMap::new() }
    }

    pub fn group_size(&self) -> usize {
        self.group_size
    }

    pub fn len(&self) -> usize {
        self.groups.len()
    }

    pub fn is_empty(&self) -> bool {
        self.groups.is_empty()
    }

    /// Stores a data payload. Returns a recovered `(position, payload)` if the
    /// group's parity is already here and this leaves exactly one gap.
    pub fn add_data(&mut self, base: u16, pos: usize, payload: &[u8]) -> Option<(usize, Vec<u8>)> {
        let slot = self.groups.entry(base).or_default();
        if slot.done {
            return None;
        }
        slot.data.insert(pos, payload.to_vec());
        Self::try_recover(slot, self.group_size)
    }

    pub fn add_parity(&mut self, base: u16, group: ParityGroup) -> Option<(usize, Vec<u8>)> {
        let slot = self.groups.entry(base).or_default();
        if slot.done || slot.parity.is_some() {
            return None;
        }
        slot.parity = Some(group);
        Self::try_recover(slot, self.group_size)
    }

    fn try_recover(slot: &mut Slot, group_size: usize) -> Option<(usize, Vec<u8>)> {
        let positions = group_size - 1;
        if slot.data.len() >= positions {
            slot.done = true;
            return None;
        }
        let parity = slot.parity.as_ref()?;
        if slot.data.len() + 1 != positions {
            return None;
        }
        let received: Vec<(usize, &[u8])> = slot.data.iter().map(|(&p, d)| (p, d.as_slice())).collect();
        let out = recover_missing(parity, &received).ok();
        slot.done = true;
        slot.data.clear();
        out
    }

    /// Drops every group whose base fails `keep`.
    pub fn retain(&mut self, mut keep: impl FnMut(u16) -> bool) {
        self.groups.retain(|&base, _| keep(base));
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parity_last_recovers() {
        let data = [b"ab".to_vec(), b"cde".to_vec(), b"f".to_vec()];
        let group = ParityGroup::seal(&data).unwrap();
        let mut buf = ParityGroupBuffer::new(4);
        assert_eq!(buf.add_data(0, 0, &data[0]), None);
        assert_eq!(buf.add_data(0, 2, &data[2]), None);
        assert_eq!(buf.add_parity(0, group), Some((1, data[1].clone())));
        // the group is closed; a late copy changes nothing
        assert_eq!(buf.add_data(0, 1, &data[1]), None);
    }

    #[test]
    fn data_after_parity_recovers() {
        let data = [vec![1u8; 10], vec![2u8; 4], vec![3u8; 7]];
        let group = ParityGroup::seal(&data).unwrap();
        let mut buf = ParityGroupBuffer::new(4);
        assert_eq!(buf.add_parity(8, group), None);
        assert_eq!(buf.add_data(8, 2, &data[2]), None);
        assert_eq!(buf.add_data(8, 1, &data[1]), Some((0, data[0].clone())));
    }

    #[test]
    fn two_missing_is_unrecoverable() {
        let data = [vec![1u8; 3], vec![2u8; 3], vec![3u8; 3]];
        let mut buf = ParityGroupBuffer::new(4);
        buf.add_data(0, 0, &data[0]);
        assert_eq!(buf.add_parity(0, ParityGroup::seal(&data).unwrap()), None);
        buf.retain(|b| b != 0);
        assert!(buf.is_empty());
    }
}

//! Duplicate filter over the 16-bit packet id ring.
//!
//! The ring is split into four quarters of 16,384 ids. The filter keeps an
//! index pointer (the newest accepted id) and one seen-bit per id; only the
//! pointer's quarter and the quarter before it are live, all other bits are
//! kept clear.

use serde::{Deserialize, Serialize};

pub const ID_SPACE: usize = 1 << 16;
pub const QUARTER: usize = ID_SPACE / 4;
const WORDS: usize = ID_SPACE / 64;
const QUARTER_WORDS: usize = WORDS / 4;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    Accept,
    Duplicate,
    Stale,
}

pub fn quarter(id: u16) -> usize {
    id as usize / QUARTER
}

#[derive(Clone)]
pub struct DedupState {
    pointer: u16,
    seen: Box<[u64; WORDS]>,
}

impl std::fmt::Debug for DedupState {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("DedupState").field("pointer", &self.pointer).field("live", &self.live_count()).finish()
    }
}

impl Default for DedupState {
    fn default() -> Self {
        DedupState::new()
    }
}

impl DedupState {
    pub fn new() -> Self {
        DedupState { pointer: 0, seen: Box::new([0; WORDS]) }
    }

    /// Fresh state whose pointer already sits at `pointer`.
    pub fn with_pointer(pointer: u16) -> Self {
        DedupState { pointer, seen: Box::new([0; WORDS]) }
    }

    pub fn pointer(&self) -> u16 {
        self.pointer
    }

    pub fn is_seen(&self, id: u16) -> bool {
        self.seen[id as usize / 64] & (1 << (id % 64)) != 0
    }

    fn mark(&mut self, id: u16) {
        self.seen[id as usize / 64] |= 1 << (id % 64);
    }

    /// Number of ids currently tracked as seen.
    pub fn live_count(&self) -> usize {
        self.seen.iter().map(|w| w.count_ones() as usize).sum()
    }

    /// Whether `id` falls in the pointer's quarter or the one before it.
    pub fn in_horizon(&self, id: u16) -> bool {
        let qp = quarter(self.pointer);
        let qi = quarter(id);
        qi == qp || qi == (qp + 3) % 4
    }

    /// `id` counts as newer than the pointer when it is larger, except that a
    /// Q3 pointer sees Q0 ids as newer (wraparound) and a Q0 pointer sees Q3
    /// ids as older (arrivals from before the wrap).
    fn is_newer(&self, id: u16) -> bool {
        let qp = quarter(self.pointer);
        let qi = quarter(id);
        if qp == 3 && qi == 0 {
            return true;
        }
        if qp == 0 && qi == 3 {
            return false;
        }
        id > self.pointer
    }

    pub fn check(&mut self, id: u16) -> Verdict {
        if self.is_newer(id) {
            let (old_q, new_q) = (quarter(self.pointer), quarter(id));
            self.pointer = id;
            if old_q != new_q {
                let keep = [new_q, (new_q + 3) % 4];
                for q in (0..4).filter(|q| !keep.contains(q)) {
                    self.seen[q * QUARTER_WORDS..(q + 1) * QUARTER_WORDS].fill(0);
                }
            }
            self.mark(id);
            return Verdict::Accept;
        }
        if !self.in_horizon(id) {
            return Verdict::Stale;
        }
        if self.is_seen(id) {
            Verdict::Duplicate
        } else {
            self.mark(id);
            Verdict::Accept
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_copy_wins() {
        let mut d = DedupState::new();
        assert_eq!(d.check(0), Verdict::Accept);
        assert_eq!(d.check(0), Verdict::Duplicate);
        assert_eq!(d.check(7), Verdict::Accept);
        assert_eq!(d.check(3), Verdict::Accept);
        assert_eq!(d.check(3), Verdict::Duplicate);
    }

    #[test]
    fn far_jump_then_stale() {
        let mut d = DedupState::with_pointer(16_000);
        assert_eq!(d.check(40_000), Verdict::Accept);
        assert_eq!(d.pointer(), 40_000);
        assert_eq!(d.check(100), Verdict::Stale);
    }

    #[test]
    fn wraparound_advances() {
        let mut d = DedupState::with_pointer(50_000);
        assert_eq!(d.check(10), Verdict::Accept);
        assert_eq!(d.pointer(), 10);
        // late arrival from before the wrap is checked, not re-advanced
        assert_eq!(d.check(65_000), Verdict::Accept);
        assert_eq!(d.pointer(), 10);
        assert_eq!(d.check(65_000), Verdict::Duplicate);
    }

    #[test]
    fn old_quarters_are_cleared() {
        let mut d = DedupState::new();
        for id in [1u16, 2, 16_390] {
            d.check(id);
        }
        assert_eq!(d.live_count(), 3);
        d.check(32_800); // Q2: Q0 drops out
        assert!(!d.is_seen(1) && !d.is_seen(2));
        assert!(d.is_seen(16_390) && d.is_seen(32_800));
        d.check(50_000); // Q3: Q1 drops out
        assert_eq!(d.live_count(), 2);
    }
}

//! Per-path loss tracking and weight adaptation.

use serde::{Deserialize, Serialize};

pub const DEFAULT_ALPHA: f64 = 0.1;
pub const DEFAULT_UPDATE_EVERY: u64 = 100;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PathStats {
    pub alpha: f64,
    pub update_every: u64,
    pub loss_ewma: Vec<f64>,
    pub sent: Vec<u64>,
    pub lost: Vec<u64>,
    observed: u64,
}

impl PathStats {
    pub fn new(paths: usize) -> Self {
        PathStats::with_alpha(paths, DEFAULT_ALPHA)
    }

    pub fn with_alpha(paths: usize, alpha: f64) -> Self {
        PathStats {
            alpha,
            update_every: DEFAULT_UPDATE_EVERY,
            loss_ewma: vec![0.0; paths],
            sent: vec![0; paths],
            lost: vec![0; paths],
            observed: 0,
        }
    }

    /// Records one frame outcome on `path`. Returns true every
    /// `update_every` frames, when weights are due for a refresh.
    pub fn observe(&mut self, path: usize, lost: bool) -> bool {
        let x = if lost { 1.0 } else { 0.0 };
        self.loss_ewma[path] = self.alpha * x + (1.0 - self.alpha) * self.loss_ewma[path];
        self.sent[path] += 1;
        if lost {
            self.lost[path] += 1;
        }
        self.observed += 1;
        self.update_every > 0 && self.observed.is_multiple_of(self.update_every)
    }
}

/// Weights proportional to `bottleneck * (1 - loss)`, normalised; uniform
/// when every path looks dead.
pub fn adapted_weights(bottlenecks: &[f64], stats: &PathStats) -> Vec<f64> {
    let raw: Vec<f64> = bottlenecks.iter().zip(&stats.loss_ewma).map(|(b, l)| (b * (1.0 - l)).max(0.0)).collect();
    let total: f64 = raw.iter().sum();
    if !(total > 0.0) {
        return vec![1.0 / raw.len() as f64; raw.len()];
    }
    raw.iter().map(|r| r / total).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lossy_path_loses_weight() {
        let mut s = PathStats::new(2);
        let mut due = 0;
        for i in 0..200 {
            due += s.observe(0, false) as usize;
            due += s.observe(1, i % 2 == 0) as usize;
        }
        assert_eq!(due, 4);
        let w = adapted_weights(&[10.0, 10.0], &s);
        assert!(w[0] > w[1]);
        assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn all_dead_is_uniform() {
        let mut s = PathStats::with_alpha(3, 1.0);
        for p in 0..3 {
            s.observe(p, true);
        }
        assert_eq!(adapted_weights(&[1.0, 2.0, 3.0], &s), vec![1.0 / 3.0; 3]);
    }
}

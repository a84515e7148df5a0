//! Deterministic smooth weighted round robin.

#[derive(Clone, Debug, Default, PartialEq)]
pub struct WeightedRoundRobin {
    current: Vec<f64>,
}

impl WeightedRoundRobin {
    pub fn new(paths: usize) -> Self {
        WeightedRoundRobin { current: vec![0.0; paths] }
    }

    /// Picks the next path among those for which `eligible` holds. Each
    /// eligible path earns its weight; the richest (lowest index on ties) is
    /// chosen and pays back the total. Zero total weight degrades to plain
    /// round robin over the eligible paths.
    pub fn next(&mut self, weights: &[f64], eligible: impl Fn(usize) -> bool) -> usize {
        if self.current.len() != weights.len() {
            self.current = vec![0.0; weights.len()];
        }
        let live: Vec<usize> = (0..weights.len()).filter(|&i| eligible(i)).collect();
        assert!(!live.is_empty(), "no eligible path");
        let mut total: f64 = live.iter().map(|&i| weights[i]).sum();
        let uniform = !(total > 0.0);
        if uniform {
            total = live.len() as f64;
        }
        let mut best = live[0];
        for &i in &live {
            self.current[i] += if uniform { 1.0 } else { weights[i] };
            if self.current[i] > self.current[best] {
                best = i;
            }
        }
        self.current[best] -= total;
        best
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn equal_weights_alternate() {
        let mut w = WeightedRoundRobin::new(2);
        let picks: Vec<usize> = (0..4).map(|_| w.next(&[0.5, 0.5], |_| true)).collect();
        assert_eq!(picks, [0, 1, 0, 1]);
    }

    #[test]
    fn respects_eligibility_and_zero_weights() {
        let mut w = WeightedRoundRobin::new(3);
        let picks: Vec<usize> = (0..4).map(|_| w.next(&[0.2, 0.3, 0.5], |i| i != 2)).collect();
        assert!(picks.iter().all(|&p| p != 2));
        let mut w = WeightedRoundRobin::new(3);
        let picks: Vec<usize> = (0..3).map(|_| w.next(&[0.0, 0.0, 0.0], |_| true)).collect();
        assert_eq!(picks, [0, 1, 2]);
    }

    proptest! {
        #[test]
        fn counts_track_weights(raw in prop::collection::vec(0.0f64..10.0, 1..16), n in 1000usize..5000) {
            let total: f64 = raw.iter().sum();
            prop_assume!(total > 0.0);
            let weights: Vec<f64> = raw.iter().map(|r| r / total).collect();
            let mut w = WeightedRoundRobin::new(weights.len());
            let mut counts = vec![0usize; weights.len()];
            for _ in 0..n {
                counts[w.next(&weights, |_| true)] += 1;
            }
            let k = weights.len() as f64;
            for (c, wt) in counts.iter().zip(&weights) {
                prop_assert!((*c as f64 - n as f64 * wt).abs() <= k, "count {} vs {}", c, n as f64 * wt);
            }
        }
    }
}

//! Sources of sampling decisions for Monte Carlo passes.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Picks outcomes for a sampling pass.
pub trait Sampler {
    /// Index drawn from `probs`, which sums to one.
    fn pick(&mut self, probs: &[f64]) -> usize;
    /// True with probability `p`.
    fn coin(&mut self, p: f64) -> bool;
}

#[derive(Debug, Clone)]
pub struct RngSampler {
    pub rng: ChaCha8Rng,
}

impl RngSampler {
    pub fn new(seed: u64) -> Self {
        RngSampler {
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }
}

/// Inverse-CDF draw; zero-probability entries are never returned.
pub fn pick_with(u: f64, probs: &[f64]) -> usize {
    let mut acc = 0.0;
    let mut last = 0;
    for (i, &p) in probs.iter().enumerate() {
        if p > 0.0 {
            acc += p;
            last = i;
            if u < acc {
                return i;
            }
        }
    }
    last
}

impl Sampler for RngSampler {
    #[inline]
    fn pick(&mut self, probs: &[f64]) -> usize {
        pick_with(self.rng.gen::<f64>(), probs)
    }

    #[inline]
    fn coin(&mut self, p: f64) -> bool {
        self.rng.gen::<f64>() < p
    }
}

/// Replays a fixed list of choices and records every decision it was asked for.
///
/// Past the end of the script it picks the first outcome with positive
/// probability (coins come up true when possible).
#[derive(Debug, Clone, Default)]
pub struct ScriptedSampler {
    pub script: Vec<usize>,
    /// `(chosen, distribution)` for every call, coins recorded as `[p, 1 - p]` with 0 = true.
    pub trace: Vec<(usize, Vec<f64>)>,
}

impl ScriptedSampler {
    pub fn new(script: Vec<usize>) -> Self {
        ScriptedSampler { script, trace: Vec::new() }
    }

    fn next(&mut self, probs: Vec<f64>) -> usize {
        let k = self.trace.len();
        let c = if k < self.script.len() {
            self.script[k]
        } else {
            probs.iter().position(|&p| p > 0.0).unwrap_or(0)
        };
        self.trace.push((c, probs));
        c
    }

    /// Probability of the recorded trace.
    pub fn probability(&self) -> f64 {
        self.trace.iter().map(|(c, p)| p[*c]).product()
    }
}

impl Sampler for ScriptedSampler {
    fn pick(&mut self, probs: &[f64]) -> usize {
        self.next(probs.to_vec())
    }

    fn coin(&mut self, p: f64) -> bool {
        self.next(vec![p, 1.0 - p]) == 0
    }
}

/// Runs `f` once for every possible sequence of sampling outcomes with positive
/// probability and returns each result with its probability.
pub fn enumerate_outcomes<R>(mut f: impl FnMut(&mut ScriptedSampler) -> R) -> Vec<(f64, R)> {
    let mut out = Vec::new();
    let mut stack = vec![Vec::new()];
    while let Some(script) = stack.pop() {
        let mut s = ScriptedSampler::new(script.clone());
        let r = f(&mut s);
        for k in script.len()..s.trace.len() {
            let (chosen, probs) = &s.trace[k];
            for (alt, &p) in probs.iter().enumerate() {
                if alt != *chosen && p > 0.0 {
                    let mut next: Vec<usize> = s.trace[..k].iter().map(|(c, _)| *c).collect();
                    next.push(alt);
                    stack.push(next);
                }
            }
        }
        out.push((s.probability(), r));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn enumeration_covers_all_outcomes() {
        let outcomes = enumerate_outcomes(|s| {
            let a = s.pick(&[0.5, 0.0, 0.5]);
            let b = if s.coin(0.25) { 1 } else { 0 };
            (a, b)
        });
        assert_eq!(outcomes.len(), 4);
        let total: f64 = outcomes.iter().map(|(p, _)| p).sum();
        assert!((total - 1.0).abs() < 1e-15);
        assert!(outcomes.iter().all(|(_, (a, _))| *a != 1));
    }

    #[test]
    fn pick_skips_zero_mass() {
        assert_eq!(pick_with(0.0, &[0.0, 1.0]), 1);
        assert_eq!(pick_with(0.999_999, &[0.5, 0.5, 0.0]), 1);
    }
}

//! Cumulative reach probabilities and the sampled estimate of the average strategy's utility.
//!
//! With `crp_i^t(h) = sum_{s <= t} pi_i^{sigma^s}(h)`, the utility of the average
//! profile below `h` is the sum over `t` and terminals `z` under `h` of
//! `(pi_1 crp_2 + crp_1 pi_2 - pi_1 pi_2)(z) * pi_c(z|h) * u(z)`, divided by
//! `crp_1^T(h) crp_2^T(h)`. Sampling one `z` per iteration and weighting by
//! `1 / q(z)` keeps the estimate unbiased.

use crate::eval::{all_reaches, DenseProfile};
use crate::tree::GameTree;

/// Exact cumulative reach of every history of a fully expanded tree.
#[derive(Debug, Clone)]
pub struct CrpTracker {
    crp: Vec<[f64; 2]>,
    steps: u64,
}

impl CrpTracker {
    pub fn new(tree: &GameTree) -> Self {
        CrpTracker {
            crp: vec![[0.0; 2]; tree.len()],
            steps: 0,
        }
    }

    /// Adds the reach of every history under `sigma`.
    pub fn push(&mut self, tree: &GameTree, sigma: &DenseProfile) {
        for (c, r) in self.crp.iter_mut().zip(all_reaches(tree, sigma)) {
            c[0] += r[0];
            c[1] += r[1];
        }
        self.steps += 1;
    }

    pub fn crp(&self, node: u32) -> [f64; 2] {
        self.crp[node as usize]
    }

    pub fn steps(&self) -> u64 {
        self.steps
    }
}

/// One sampled summand `s^t(h)` of the estimator.
///
/// `reach` holds `[pi_1, pi_2]` of the sampled terminal under the current
/// profile, `crp` its cumulative reach including the current iteration,
/// `chance_below` is `pi_c(z|h)` and `q` the probability that `z` was sampled.
#[inline]
pub fn sampled_average_utility(reach: [f64; 2], crp: [f64; 2], chance_below: f64, utility: f64, q: f64) -> f64 {
    (reach[0] * crp[1] + crp[0] * reach[1] - reach[0] * reach[1]) * chance_below * utility / q
}

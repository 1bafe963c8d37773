//! Regret matching, vanilla CFR and outcome-sampling MCCFR.

mod cfr;
mod crp;
mod os;
mod sampler;

pub use cfr::Cfr;
pub use crp::{sampled_average_utility, CrpTracker};
pub use os::{CfvMode, OsConfig, OsSolver, RegretTables, Target};
pub use sampler::{enumerate_outcomes, pick_with, RngSampler, Sampler, ScriptedSampler};

use std::time::{Duration, Instant};

/// Cumulative regrets are kept within this magnitude.
pub const REGRET_CLIP: f64 = 1e12;

/// Writes the regret-matching distribution for `regrets` into `out`.
///
/// Probabilities are proportional to the positive parts; all non-positive
/// regrets give the uniform distribution.
#[inline]
pub fn regret_matching_into(regrets: &[f64], out: &mut [f64]) {
    let total: f64 = regrets.iter().map(|r| r.max(0.0)).sum();
    if total > 0.0 {
        for (o, r) in out.iter_mut().zip(regrets) {
            *o = r.max(0.0) / total;
        }
    } else {
        out.fill(1.0 / regrets.len() as f64);
    }
}

pub fn regret_matching(regrets: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; regrets.len()];
    regret_matching_into(regrets, &mut out);
    out
}

/// Normalizes accumulated average-strategy numerators, uniform when all are zero.
pub fn normalize_average(num: &[f64]) -> Vec<f64> {
    let total: f64 = num.iter().sum();
    if total > 0.0 {
        num.iter().map(|x| x / total).collect()
    } else {
        vec![1.0 / num.len() as f64; num.len()]
    }
}

/// How long a solver may run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum Budget {
    /// Full iterations, each one pass per player.
    Iterations(u64),
    Millis(u64),
}

impl Budget {
    pub fn is_zero(&self) -> bool {
        matches!(self, Budget::Iterations(0) | Budget::Millis(0))
    }

    /// Calls `step` until the budget is spent; returns the number of calls.
    ///
    /// Time budgets are checked every `chunk` steps.
    pub fn run(&self, chunk: u64, mut step: impl FnMut()) -> u64 {
        match *self {
            Budget::Iterations(n) => {
                for _ in 0..n {
                    step();
                }
                n
            }
            Budget::Millis(ms) => {
                let deadline = Instant::now() + Duration::from_millis(ms);
                let mut done = 0;
                while Instant::now() < deadline {
                    for _ in 0..chunk.max(1) {
                        step();
                    }
                    done += chunk.max(1);
                }
                done
            }
        }
    }
}

use std::collections::BTreeMap;
use std::io::{BufRead, Write};

use crate::error::{Error, Result};

/// Tolerance on the sum of a stored distribution.
pub const NORMALIZATION_TOL: f64 = 1e-6;

/// Map from infoset key to a distribution over that infoset's actions.
///
/// Infosets without an entry are played uniformly.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct BehavioralStrategy {
    table: BTreeMap<String, Vec<f64>>,
}

impl BehavioralStrategy {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.table.len()
    }

    pub fn is_empty(&self) -> bool {
        self.table.is_empty()
    }

    /// Stores a distribution. Panics if it is not normalized to within 1e-6.
    pub fn insert(&mut self, key: impl Into<String>, probs: Vec<f64>) {
        let sum: f64 = probs.iter().sum();
        assert!(
            (sum - 1.0).abs() <= NORMALIZATION_TOL && probs.iter().all(|&p| p >= -1e-12),
            "distribution not normalized: {probs:?}"
        );
        self.table.insert(key.into(), probs);
    }

    pub fn get(&self, key: &str) -> Option<&[f64]> {
        self.table.get(key).map(|v| v.as_slice())
    }

    pub fn contains(&self, key: &str) -> bool {
        self.table.contains_key(key)
    }

    /// Probability of `action` at `key`, uniform over `n` if the key is absent.
    #[inline]
    pub fn prob(&self, key: &str, action: usize, n: usize) -> f64 {
        match self.table.get(key) {
            Some(p) => p[action],
            None => 1.0 / n as f64,
        }
    }

    pub fn probs(&self, key: &str, n: usize) -> Vec<f64> {
        match self.table.get(key) {
            Some(p) => p.clone(),
            None => vec![1.0 / n as f64; n],
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (&String, &Vec<f64>)> {
        self.table.iter()
    }

    pub fn remove(&mut self, key: &str) -> Option<Vec<f64>> {
        self.table.remove(key)
    }

    /// Overwrites entries with those of `other`.
    pub fn extend_from(&mut self, other: &BehavioralStrategy) {
        for (k, v) in &other.table {
            self.table.insert(k.clone(), v.clone());
        }
    }

    /// Writes `key<TAB>p0,p1,...` lines in key order.
    pub fn write_text<W: Write>(&self, mut w: W) -> Result<()> {
        for (k, v) in &self.table {
            let probs: Vec<String> = v.iter().map(|p| format!("{p:?}")).collect();
            writeln!(w, "{}\t{}", k, probs.join(","))?;
        }
        Ok(())
    }

    pub fn read_text<R: BufRead>(r: R) -> Result<Self> {
        let mut s = Self::new();
        for (lineno, line) in r.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let (key, probs) = line
                .split_once('\t')
                .ok_or_else(|| Error::Parse(format!("line {}: missing tab", lineno + 1)))?;
            let probs = probs
                .split(',')
                .map(|p| p.trim().parse::<f64>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|e| Error::Parse(format!("line {}: {e}", lineno + 1)))?;
            let sum: f64 = probs.iter().sum();
            if (sum - 1.0).abs() > NORMALIZATION_TOL {
                return Err(Error::Parse(format!(
                    "line {}: probabilities sum to {sum}",
                    lineno + 1
                )));
            }
            s.table.insert(key.to_string(), probs);
        }
        Ok(s)
    }
}

/// A strategy for each player.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Profile {
    pub players: [BehavioralStrategy; 2],
}

impl Profile {
    pub fn new(p1: BehavioralStrategy, p2: BehavioralStrategy) -> Self {
        Profile { players: [p1, p2] }
    }

    pub fn uniform() -> Self {
        Self::default()
    }

    pub fn get(&self, p: crate::game::Player) -> &BehavioralStrategy {
        &self.players[p.index()]
    }

    pub fn get_mut(&mut self, p: crate::game::Player) -> &mut BehavioralStrategy {
        &mut self.players[p.index()]
    }
}

/// Normalizes non-negative weights, falling back to uniform when they sum to zero.
pub fn normalize(weights: &[f64]) -> Vec<f64> {
    let sum: f64 = weights.iter().sum();
    if sum > 0.0 {
        weights.iter().map(|w| w / sum).collect()
    } else {
        vec![1.0 / weights.len() as f64; weights.len()]
    }
}

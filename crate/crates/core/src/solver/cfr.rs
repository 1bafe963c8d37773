//! Vanilla CFR over a fully expanded tree, alternating updates.

use crate::eval::DenseProfile;
use crate::game::{NodeKind, Player};
use crate::strategy::{BehavioralStrategy, Profile};
use crate::tree::GameTree;

use super::{normalize_average, regret_matching_into, REGRET_CLIP};

const ABSENT: usize = usize::MAX;

#[derive(Debug, Clone)]
pub struct Cfr<'a> {
    tree: &'a GameTree,
    /// Start of each infoset's slice in the flat arrays, `ABSENT` for non-decision infosets.
    offsets: [Vec<usize>; 2],
    sizes: [Vec<usize>; 2],
    regrets: [Vec<f64>; 2],
    avg: [Vec<f64>; 2],
    strat: [Vec<f64>; 2],
    reach: Vec<[f64; 3]>,
    values: Vec<f64>,
    iterations: u64,
}

impl<'a> Cfr<'a> {
    pub fn new(tree: &'a GameTree) -> Self {
        let mut offsets = [Vec::new(), Vec::new()];
        let mut sizes = [Vec::new(), Vec::new()];
        let mut totals = [0usize; 2];
        for p in Player::BOTH {
            let table = &tree.infosets[p.index()];
            for id in 0..table.len() {
                let first = table.members[id][0];
                if tree.acts(first, p) {
                    let n = tree.nodes[first as usize].num_actions as usize;
                    offsets[p.index()].push(totals[p.index()]);
                    sizes[p.index()].push(n);
                    totals[p.index()] += n;
                } else {
                    offsets[p.index()].push(ABSENT);
                    sizes[p.index()].push(0);
                }
            }
        }
        let mut cfr = Cfr {
            tree,
            offsets,
            sizes,
            regrets: [vec![0.0; totals[0]], vec![0.0; totals[1]]],
            avg: [vec![0.0; totals[0]], vec![0.0; totals[1]]],
            strat: [vec![0.0; totals[0]], vec![0.0; totals[1]]],
            reach: vec![[1.0; 3]; tree.len()],
            values: vec![0.0; tree.len()],
            iterations: 0,
        };
        cfr.refresh_strategy(Player::One);
        cfr.refresh_strategy(Player::Two);
        cfr
    }

    pub fn iterations(&self) -> u64 {
        self.iterations
    }

    /// Runs `n` iterations, each updating player one and then player two.
    pub fn iterate(&mut self, n: u64) {
        for _ in 0..n {
            for p in Player::BOTH {
                self.pass(p);
                self.refresh_strategy(p);
            }
            self.iterations += 1;
        }
    }

    fn refresh_strategy(&mut self, p: Player) {
        let i = p.index();
        for (id, &off) in self.offsets[i].iter().enumerate() {
            if off != ABSENT {
                let n = self.sizes[i][id];
                regret_matching_into(&self.regrets[i][off..off + n], &mut self.strat[i][off..off + n]);
            }
        }
    }

    #[inline]
    fn prob(&self, p: Player, infoset: u32, action: usize) -> f64 {
        self.strat[p.index()][self.offsets[p.index()][infoset as usize] + action]
    }

    fn pass(&mut self, update: Player) {
        let tree = self.tree;
        for i in 1..tree.len() {
            let n = &tree.nodes[i];
            let parent = &tree.nodes[n.parent as usize];
            let mut r = self.reach[n.parent as usize];
            match parent.kind {
                NodeKind::Chance => r[2] *= n.chance_prob,
                NodeKind::Decision(p) => r[p.index()] *= self.prob(p, parent.infoset[p.index()], n.action as usize),
                NodeKind::Terminal => unreachable!(),
            }
            self.reach[i] = r;
        }
        for i in (0..tree.len()).rev() {
            let n = &tree.nodes[i];
            self.values[i] = match n.kind {
                NodeKind::Terminal => n.utility,
                NodeKind::Chance => tree
                    .children(i as u32)
                    .map(|c| tree.nodes[c as usize].chance_prob * self.values[c as usize])
                    .sum(),
                NodeKind::Decision(p) => {
                    let off = self.offsets[p.index()][n.infoset[p.index()] as usize];
                    let s = &self.strat[p.index()][off..off + n.num_actions as usize];
                    tree.children(i as u32).zip(s).map(|(c, q)| q * self.values[c as usize]).sum()
                }
            };
        }
        let u = update.index();
        let sign = update.sign();
        for i in 0..tree.len() {
            let n = &tree.nodes[i];
            if n.kind != NodeKind::Decision(update) {
                continue;
            }
            let off = self.offsets[u][n.infoset[u] as usize];
            let r = self.reach[i];
            let opp = r[update.opponent().index()] * r[2];
            let own = r[u];
            let v = self.values[i];
            for (a, c) in tree.children(i as u32).enumerate() {
                if opp != 0.0 {
                    let reg = &mut self.regrets[u][off + a];
                    *reg = (*reg + opp * sign * (self.values[c as usize] - v)).clamp(-REGRET_CLIP, REGRET_CLIP);
                }
                self.avg[u][off + a] += own * self.strat[u][off + a];
            }
        }
    }

    fn collect(&self, f: impl Fn(Player, usize, usize) -> Vec<f64>) -> Profile {
        let mut out = Profile::default();
        for p in Player::BOTH {
            let mut s = BehavioralStrategy::new();
            for (id, &off) in self.offsets[p.index()].iter().enumerate() {
                if off != ABSENT {
                    s.insert(self.tree.infosets[p.index()].keys[id].clone(), f(p, off, self.sizes[p.index()][id]));
                }
            }
            out.players[p.index()] = s;
        }
        out
    }

    pub fn average_profile(&self) -> Profile {
        self.collect(|p, off, n| normalize_average(&self.avg[p.index()][off..off + n]))
    }

    pub fn current_profile(&self) -> Profile {
        self.collect(|p, off, n| self.strat[p.index()][off..off + n].to_vec())
    }

    /// The average strategy as per-infoset vectors of this tree.
    pub fn average_dense(&self) -> DenseProfile {
        let mut probs: [Vec<Vec<f64>>; 2] = [Vec::new(), Vec::new()];
        for p in Player::BOTH {
            probs[p.index()] = self.offsets[p.index()]
                .iter()
                .enumerate()
                .map(|(id, &off)| {
                    if off == ABSENT {
                        Vec::new()
                    } else {
                        normalize_average(&self.avg[p.index()][off..off + self.sizes[p.index()][id]])
                    }
                })
                .collect();
        }
        DenseProfile { probs }
    }

    /// Cumulative regrets of an infoset, if `key` is a decision infoset of `p`.
    pub fn regrets(&self, p: Player, key: &str) -> Option<&[f64]> {
        let id = self.tree.infosets[p.index()].id(key)? as usize;
        let off = self.offsets[p.index()][id];
        (off != ABSENT).then(|| &self.regrets[p.index()][off..off + self.sizes[p.index()][id]])
    }
}

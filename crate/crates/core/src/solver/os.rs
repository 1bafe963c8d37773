//! Outcome-sampling MCCFR over an incrementally built tree.
//!
//! Each pass samples terminal histories for one updating player: that player
//! explores with an epsilon-mix of its current strategy, the opponent and chance
//! play on-policy. Histories are added to memory when first reached; once a
//! pass adds a history whose infoset is new, the rest of that branch is a
//! uniform playout that updates nothing. Games may ask for both branches of a
//! node to be expanded (see [`Game::expand_all`]).
//!
//! Estimates use the full-path importance weight `1 / q(z)`, where under
//! targeting `q(z) = d * q_targeted(z) + (1 - d) * q_untargeted(z)`.

use std::collections::HashMap;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::game::{Game, NodeKind, Player};
use crate::strategy::{BehavioralStrategy, Profile};

use super::sampler::{RngSampler, Sampler};
use super::{normalize_average, regret_matching_into, Budget, REGRET_CLIP};

const NONE: u32 = u32::MAX;

/// Estimator used to turn sampled values into counterfactual values of the average strategy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CfvMode {
    /// Plain mean of the per-pass sampled values.
    Arithmetic,
    /// Mean weighted by the sampled reach `pi(h) / q(h)` of each pass.
    Weighted,
    /// Unbiased estimate built from cumulative reach probabilities.
    CrpUnbiased,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OsConfig {
    /// Exploration of the updating player, in `(0, 1]`.
    pub epsilon: f64,
    /// Track cumulative reach probabilities for [`CfvMode::CrpUnbiased`].
    pub track_crp: bool,
    /// Build the whole game tree up front; no playouts.
    pub prebuilt: bool,
}

impl Default for OsConfig {
    fn default() -> Self {
        OsConfig {
            epsilon: 0.6,
            track_crp: false,
            prebuilt: false,
        }
    }
}

/// Histories to bias sampling towards.
#[derive(Debug, Clone)]
pub struct Target {
    /// Action paths from the root of the solved game.
    pub paths: Vec<Vec<usize>>,
    /// Probability that a pass samples only through a target.
    pub prob: f64,
}

#[derive(Debug, Clone, Default)]
struct Trie {
    /// `(action, child)` pairs; empty at the end of a path.
    children: Vec<Vec<(u32, u32)>>,
}

impl Trie {
    fn build(paths: &[Vec<usize>]) -> Self {
        let mut t = Trie { children: vec![Vec::new()] };
        for path in paths {
            let mut node = 0u32;
            for &a in path {
                let a = a as u32;
                node = match t.children[node as usize].iter().find(|(x, _)| *x == a) {
                    Some(&(_, c)) => c,
                    None => {
                        let c = t.children.len() as u32;
                        t.children.push(Vec::new());
                        t.children[node as usize].push((a, c));
                        c
                    }
                };
            }
        }
        t
    }

    /// Trie position after `action`; `NONE` once a path is complete or left.
    #[inline]
    fn step(&self, pos: u32, action: usize) -> u32 {
        if pos == NONE {
            return NONE;
        }
        match self.children[pos as usize].iter().find(|(x, _)| *x == action as u32) {
            Some(&(_, c)) if !self.children[c as usize].is_empty() => c,
            _ => NONE,
        }
    }

    #[inline]
    fn allows(&self, pos: u32, action: usize) -> bool {
        self.children[pos as usize].iter().any(|(x, _)| *x == action as u32)
    }
}

#[derive(Debug, Clone, Default)]
struct InfosetTable {
    index: HashMap<String, u32>,
    keys: Vec<String>,
    offsets: Vec<usize>,
    sizes: Vec<usize>,
    regrets: Vec<f64>,
    avg: Vec<f64>,
}

impl InfosetTable {
    fn get_or_insert(&mut self, key: String, n: usize) -> (u32, bool) {
        if let Some(&id) = self.index.get(&key) {
            return (id, false);
        }
        let id = self.keys.len() as u32;
        self.index.insert(key.clone(), id);
        self.keys.push(key);
        self.offsets.push(self.regrets.len());
        self.sizes.push(n);
        self.regrets.extend(std::iter::repeat_n(0.0, n));
        self.avg.extend(std::iter::repeat_n(0.0, n));
        (id, true)
    }

    #[inline]
    fn range(&self, id: u32) -> std::ops::Range<usize> {
        let off = self.offsets[id as usize];
        off..off + self.sizes[id as usize]
    }
}

/// Regrets and average-strategy numerators keyed by infoset key, for both players.
///
/// Kept separate from the history tree so that data can be carried from one
/// solved game to another whose infoset keys coincide.
#[derive(Debug, Clone, Default)]
pub struct RegretTables {
    tables: [InfosetTable; 2],
}

impl RegretTables {
    pub fn len(&self, p: Player) -> usize {
        self.tables[p.index()].keys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tables.iter().all(|t| t.keys.is_empty())
    }

    pub fn contains(&self, p: Player, key: &str) -> bool {
        self.tables[p.index()].index.contains_key(key)
    }

    pub fn regrets(&self, p: Player, key: &str) -> Option<&[f64]> {
        let t = &self.tables[p.index()];
        t.index.get(key).map(|&id| &t.regrets[t.range(id)])
    }

    pub fn avg_numerators(&self, p: Player, key: &str) -> Option<&[f64]> {
        let t = &self.tables[p.index()];
        t.index.get(key).map(|&id| &t.avg[t.range(id)])
    }

    /// Regret-matching strategy at `key`.
    pub fn current(&self, p: Player, key: &str) -> Option<Vec<f64>> {
        self.regrets(p, key).map(super::regret_matching)
    }

    /// Normalized average strategy at `key`, uniform if nothing was accumulated.
    pub fn average(&self, p: Player, key: &str) -> Option<Vec<f64>> {
        self.avg_numerators(p, key).map(normalize_average)
    }

    pub fn average_strategy(&self, p: Player) -> BehavioralStrategy {
        let t = &self.tables[p.index()];
        let mut s = BehavioralStrategy::new();
        for (id, key) in t.keys.iter().enumerate() {
            s.insert(key.clone(), normalize_average(&t.avg[t.range(id as u32)]));
        }
        s
    }

    pub fn average_profile(&self) -> Profile {
        Profile::new(self.average_strategy(Player::One), self.average_strategy(Player::Two))
    }

    pub fn current_profile(&self) -> Profile {
        let mut out = Profile::default();
        for p in Player::BOTH {
            let t = &self.tables[p.index()];
            for (id, key) in t.keys.iter().enumerate() {
                out.players[p.index()].insert(key.clone(), super::regret_matching(&t.regrets[t.range(id as u32)]));
            }
        }
        out
    }

    /// Sorted infoset keys of `p`.
    pub fn keys(&self, p: Player) -> Vec<&str> {
        let mut k: Vec<&str> = self.tables[p.index()].keys.iter().map(String::as_str).collect();
        k.sort_unstable();
        k
    }
}

#[derive(Debug, Clone, Default)]
struct NodeStats {
    arith: [f64; 2],
    wnum: [f64; 2],
    wden: f64,
    crp: [f64; 2],
    /// Cumulative reach of each child not yet in memory, per player.
    w: Vec<[f64; 2]>,
    /// Sum of sampled numerators of the crp estimator, in player-one utility.
    shat: f64,
}

#[derive(Debug, Clone)]
struct Node<S> {
    state: S,
    kind: NodeKind,
    parent: u32,
    action: u32,
    infoset: u32,
    expand_all: bool,
    children: Vec<u32>,
    chance: Vec<f64>,
    utility: f64,
    stats: NodeStats,
}

#[derive(Debug, Clone, Copy)]
struct PathState {
    /// `[pi_1, pi_2, pi_chance]` under the current strategies.
    reach: [f64; 3],
    q_untargeted: f64,
    q_targeted: f64,
    trie: u32,
    /// Cumulative reach of the history, used below the tree.
    crp: [f64; 2],
}

struct PassCtx<'s, Sm> {
    update: Player,
    targeted: bool,
    delta: f64,
    crp_pass: bool,
    sampler: &'s mut Sm,
}

/// Outcome-sampling MCCFR solver for one game.
#[derive(Debug, Clone)]
pub struct OsSolver<G: Game> {
    game: G,
    config: OsConfig,
    tables: RegretTables,
    nodes: Vec<Node<G::State>>,
    trie: Option<(Trie, f64)>,
    rng: RngSampler,
    passes: u64,
    scratch: Vec<f64>,
}

impl<G: Game> OsSolver<G> {
    pub fn new(game: G, config: OsConfig, seed: u64) -> Self {
        Self::with_tables(game, config, seed, RegretTables::default())
    }

    /// Starts from existing regrets and averages; history statistics start empty.
    pub fn with_tables(game: G, config: OsConfig, seed: u64, tables: RegretTables) -> Self {
        assert!(config.epsilon > 0.0 && config.epsilon <= 1.0, "exploration must lie in (0, 1]");
        let mut s = OsSolver {
            game,
            config,
            tables,
            nodes: Vec::new(),
            trie: None,
            rng: RngSampler::new(seed),
            passes: 0,
            scratch: Vec::new(),
        };
        let root = s.game.root();
        let root_node = s.make_node(root, NONE, NONE);
        s.nodes.push(root_node.0);
        if s.config.prebuilt {
            s.build_all();
        }
        s
    }

    fn build_all(&mut self) {
        let mut id = 0;
        while id < self.nodes.len() {
            for b in 0..self.nodes[id].children.len() {
                let state = self.game.child(&self.nodes[id].state, b);
                let (node, _) = self.make_node(state, id as u32, b as u32);
                self.nodes[id].children[b] = self.nodes.len() as u32;
                self.nodes.push(node);
            }
            id += 1;
        }
    }

    pub fn game(&self) -> &G {
        &self.game
    }

    pub fn config(&self) -> &OsConfig {
        &self.config
    }

    pub fn tables(&self) -> &RegretTables {
        &self.tables
    }

    pub fn into_tables(self) -> RegretTables {
        self.tables
    }

    /// Completed iterations; one iteration is a pass for each player.
    pub fn iterations(&self) -> u64 {
        self.passes / 2
    }

    pub fn passes(&self) -> u64 {
        self.passes
    }

    pub fn tree_size(&self) -> usize {
        self.nodes.len()
    }

    /// Biases sampling towards `target`, or removes the bias with `None`.
    pub fn set_target(&mut self, target: Option<Target>) {
        self.trie = target.filter(|t| t.prob > 0.0 && !t.paths.is_empty()).map(|t| {
            assert!(t.prob < 1.0, "targeting probability must be below one");
            (Trie::build(&t.paths), t.prob)
        });
    }

    fn make_node(&mut self, state: G::State, parent: u32, action: u32) -> (Node<G::State>, bool) {
        let kind = self.game.node_kind(&state);
        let n = if kind == NodeKind::Terminal { 0 } else { self.game.num_actions(&state) };
        let mut infoset = NONE;
        let mut fresh = false;
        if let NodeKind::Decision(p) = kind {
            let key = self.game.infoset_key(&state, p);
            let (id, created) = self.tables.tables[p.index()].get_or_insert(key, n);
            infoset = id;
            fresh = created;
        }
        let chance = if kind == NodeKind::Chance {
            (0..n).map(|a| self.game.chance_prob(&state, a)).collect()
        } else {
            Vec::new()
        };
        let utility = if kind == NodeKind::Terminal { self.game.utility(&state) } else { 0.0 };
        let expand_all = kind != NodeKind::Terminal && self.game.expand_all(&state);
        let stats = NodeStats {
            w: if self.config.track_crp { vec![[0.0; 2]; n] } else { Vec::new() },
            ..NodeStats::default()
        };
        let node = Node {
            state,
            kind,
            parent,
            action,
            infoset,
            expand_all,
            children: vec![NONE; n],
            chance,
            utility,
            stats,
        };
        (node, fresh && !self.config.prebuilt)
    }

    /// Runs one full iteration with the internal random stream.
    pub fn iterate(&mut self) {
        let mut rng = std::mem::replace(&mut self.rng, RngSampler::new(0));
        for p in Player::BOTH {
            self.pass(p, &mut rng);
        }
        self.rng = rng;
    }

    /// Runs iterations until `budget` is spent and returns how many ran.
    pub fn run(&mut self, budget: Budget) -> u64 {
        budget.run(32, || self.iterate())
    }

    /// One sampling pass updating `update`'s regrets, driven by `sampler`.
    pub fn pass<Sm: Sampler>(&mut self, update: Player, sampler: &mut Sm) {
        let (targeted, delta) = match &self.trie {
            Some((_, d)) => (sampler.coin(*d), *d),
            None => (false, 0.0),
        };
        let crp_pass = self.config.track_crp && update == Player::Two;
        let mut ctx = PassCtx {
            update,
            targeted,
            delta,
            crp_pass,
            sampler,
        };
        let start = PathState {
            reach: [1.0; 3],
            q_untargeted: 1.0,
            q_targeted: 1.0,
            trie: if self.trie.is_some() { 0 } else { NONE },
            crp: [1.0; 2],
        };
        if crp_pass {
            self.push_crp();
        }
        self.walk(0, false, start, &mut ctx);
        self.passes += 1;
    }

    #[inline]
    fn sample_prob(&self, path: &PathState, ctx: &PassCtx<'_, impl Sampler>) -> f64 {
        if ctx.delta > 0.0 {
            ctx.delta * path.q_targeted + (1.0 - ctx.delta) * path.q_untargeted
        } else {
            path.q_untargeted
        }
    }

    /// Targeted sampling distribution at a trie position, falling back to `base` without mass.
    fn targeted_policy(&self, pos: u32, base: &[f64]) -> Vec<f64> {
        let Some((trie, _)) = &self.trie else {
            return base.to_vec();
        };
        if pos == NONE {
            return base.to_vec();
        }
        let mut out: Vec<f64> = base
            .iter()
            .enumerate()
            .map(|(a, &p)| if trie.allows(pos, a) { p } else { 0.0 })
            .collect();
        let total: f64 = out.iter().sum();
        if total > 0.0 {
            out.iter_mut().for_each(|x| *x /= total);
            out
        } else {
            base.to_vec()
        }
    }

    #[inline]
    fn trie_step(&self, pos: u32, a: usize) -> u32 {
        match &self.trie {
            Some((t, _)) => t.step(pos, a),
            None => NONE,
        }
    }

    /// Chooses the branches to follow, with their untargeted and targeted sampling probabilities.
    fn branches<Sm: Sampler>(
        &self,
        expand_all: bool,
        base: &[f64],
        pos: u32,
        ctx: &mut PassCtx<'_, Sm>,
    ) -> Vec<(usize, f64, f64)> {
        if expand_all {
            return (0..base.len()).map(|a| (a, 1.0, 1.0)).collect();
        }
        let targeted = self.targeted_policy(pos, base);
        let b = if ctx.targeted {
            ctx.sampler.pick(&targeted)
        } else {
            ctx.sampler.pick(base)
        };
        vec![(b, base[b], targeted[b])]
    }

    /// Returns `(x, y)`: the sampled value `sum_z pi(z|h) u1(z) / q(z)` and the
    /// crp numerator sum for the branch below `id`.
    fn walk<Sm: Sampler>(
        &mut self,
        id: u32,
        fresh: bool,
        path: PathState,
        ctx: &mut PassCtx<'_, Sm>,
    ) -> (f64, f64) {
        let node = &self.nodes[id as usize];
        let kind = node.kind;
        let pi = path.reach[0] * path.reach[1] * path.reach[2];
        let q_here = self.sample_prob(&path, ctx);

        let crp = node.stats.crp;

        if kind == NodeKind::Terminal {
            let u = self.nodes[id as usize].utility;
            let x = u / q_here;
            let y = if ctx.crp_pass { crp_numerator(&path.reach, &crp) * path.reach[2] * u / q_here } else { 0.0 };
            return (x, y);
        }

        let n = node.children.len();
        let expand_all = node.expand_all;
        let (acting, sigma, base) = match kind {
            NodeKind::Chance => {
                let c = node.chance.clone();
                (None, c.clone(), c)
            }
            NodeKind::Decision(p) => {
                let range = self.tables.tables[p.index()].range(node.infoset);
                let mut sigma = std::mem::take(&mut self.scratch);
                sigma.resize(n, 0.0);
                regret_matching_into(&self.tables.tables[p.index()].regrets[range], &mut sigma);
                let base = if p == ctx.update {
                    let e = self.config.epsilon;
                    sigma.iter().map(|s| e / n as f64 + (1.0 - e) * s).collect()
                } else {
                    sigma.clone()
                };
                let s = sigma.clone();
                self.scratch = sigma;
                (Some(p), s, base)
            }
            NodeKind::Terminal => unreachable!(),
        };

        let chosen = self.branches(expand_all, &base, path.trie, ctx);
        let mut x_children = vec![0.0; n];
        let mut x_h = 0.0;
        let mut y_h = 0.0;
        for &(b, qu, qt) in &chosen {
            let mut next = path;
            match acting {
                Some(p) => next.reach[p.index()] *= sigma[b],
                None => next.reach[2] *= sigma[b],
            }
            next.q_untargeted *= qu;
            next.q_targeted *= qt;
            next.trie = self.trie_step(path.trie, b);
            next.crp = crp;
            if let Some(p) = acting {
                next.crp[p.index()] *= sigma[b];
            }
            let (x, y) = self.descend(id, b, fresh, next, ctx);
            x_children[b] = x;
            x_h += sigma[b] * x;
            y_h += y;
        }

        if let Some(p) = acting {
            let table = &mut self.tables.tables[p.index()];
            let range = table.range(self.nodes[id as usize].infoset);
            if p == ctx.update {
                let opp = path.reach[p.opponent().index()] * path.reach[2];
                let sign = p.sign();
                if opp != 0.0 {
                    for (r, xa) in table.regrets[range].iter_mut().zip(&x_children) {
                        *r = (*r + opp * sign * (xa - x_h)).clamp(-REGRET_CLIP, REGRET_CLIP);
                    }
                }
            } else {
                let w = path.reach[p.index()] / q_here;
                for (s, sa) in table.avg[range].iter_mut().zip(&sigma) {
                    *s += w * sa;
                }
            }
        }

        let st = &mut self.nodes[id as usize].stats;
        for j in Player::BOTH {
            let opp = path.reach[j.opponent().index()] * path.reach[2];
            let v = opp * j.sign() * x_h;
            st.arith[j.index()] += v;
            st.wnum[j.index()] += pi * v;
        }
        st.wden += pi / q_here;
        if ctx.crp_pass && path.reach[2] > 0.0 {
            st.shat += y_h / path.reach[2];
        }
        (x_h, y_h)
    }

    /// Follows action `b` from tree node `id`, adding or playing out as needed.
    fn descend<Sm: Sampler>(
        &mut self,
        id: u32,
        b: usize,
        fresh: bool,
        next: PathState,
        ctx: &mut PassCtx<'_, Sm>,
    ) -> (f64, f64) {
        if fresh {
            let state = self.game.child(&self.nodes[id as usize].state, b);
            return self.playout(state, next, ctx);
        }
        let mut child = self.nodes[id as usize].children[b];
        let mut child_fresh = false;
        if child == NONE {
            let state = self.game.child(&self.nodes[id as usize].state, b);
            let (mut node, f) = self.make_node(state, id, b as u32);
            if self.config.track_crp {
                node.stats.crp = std::mem::take(&mut self.nodes[id as usize].stats.w[b]);
                let sigma = self.strategy_at(&node);
                for (slot, s) in node.stats.w.iter_mut().zip(&sigma) {
                    *slot = node.stats.crp;
                    if let Some(p) = node.kind.player() {
                        slot[p.index()] *= s;
                    }
                }
            }
            child = self.nodes.len() as u32;
            self.nodes.push(node);
            self.nodes[id as usize].children[b] = child;
            child_fresh = f;
        }
        self.walk(child, child_fresh, next, ctx)
    }

    /// Current strategy at a decision node; ones elsewhere.
    fn strategy_at(&self, node: &Node<G::State>) -> Vec<f64> {
        match node.kind.player() {
            Some(p) => {
                let t = &self.tables.tables[p.index()];
                super::regret_matching(&t.regrets[t.range(node.infoset)])
            }
            None => vec![1.0; node.children.len()],
        }
    }

    /// Uniform playout below the tree; updates nothing.
    fn playout<Sm: Sampler>(&mut self, state: G::State, path: PathState, ctx: &mut PassCtx<'_, Sm>) -> (f64, f64) {
        let kind = self.game.node_kind(&state);
        if kind == NodeKind::Terminal {
            let u = self.game.utility(&state);
            let q = self.sample_prob(&path, ctx);
            let y = if ctx.crp_pass {
                crp_numerator(&path.reach, &path.crp) * path.reach[2] * u / q
            } else {
                0.0
            };
            return (u / q, y);
        }
        let n = self.game.num_actions(&state);
        let sigma: Vec<f64> = match kind {
            NodeKind::Chance => (0..n).map(|a| self.game.chance_prob(&state, a)).collect(),
            _ => vec![1.0 / n as f64; n],
        };
        let expand_all = self.game.expand_all(&state);
        let chosen = self.branches(expand_all, &sigma, path.trie, ctx);
        let mut x_h = 0.0;
        let mut y_h = 0.0;
        for &(b, qu, qt) in &chosen {
            let mut next = path;
            match kind {
                NodeKind::Decision(p) => {
                    next.reach[p.index()] *= sigma[b];
                    next.crp[p.index()] *= sigma[b];
                }
                _ => next.reach[2] *= sigma[b],
            }
            next.q_untargeted *= qu;
            next.q_targeted *= qt;
            next.trie = self.trie_step(path.trie, b);
            let (x, y) = self.playout(self.game.child(&state, b), next, ctx);
            x_h += sigma[b] * x;
            y_h += y;
        }
        (x_h, y_h)
    }

    /// Node id reached by `path` from the root, if it is in memory.
    pub fn find(&self, path: &[usize]) -> Option<u32> {
        let mut id = 0u32;
        for &a in path {
            id = *self.nodes[id as usize].children.get(a)?;
            if id == NONE {
                return None;
            }
        }
        Some(id)
    }

    pub fn node_state(&self, id: u32) -> &G::State {
        &self.nodes[id as usize].state
    }

    /// Ids of all histories in memory, parents before children.
    pub fn node_ids(&self) -> std::ops::Range<u32> {
        0..self.nodes.len() as u32
    }

    pub fn node_parent(&self, id: u32) -> Option<u32> {
        let p = self.nodes[id as usize].parent;
        (p != NONE).then_some(p)
    }

    /// Action ids from the root to node `id`.
    pub fn node_path(&self, id: u32) -> Vec<usize> {
        let mut out = Vec::new();
        let mut n = id;
        while self.nodes[n as usize].parent != NONE {
            out.push(self.nodes[n as usize].action as usize);
            n = self.nodes[n as usize].parent;
        }
        out.reverse();
        out
    }

    /// Reach probabilities `[pi_1, pi_2, pi_chance]` of node `id` under the average strategy.
    pub fn average_reach(&self, id: u32) -> [f64; 3] {
        let mut r = [1.0; 3];
        let mut n = id;
        while self.nodes[n as usize].parent != NONE {
            let node = &self.nodes[n as usize];
            let parent = &self.nodes[node.parent as usize];
            let a = node.action as usize;
            match parent.kind {
                NodeKind::Chance => r[2] *= parent.chance[a],
                NodeKind::Decision(p) => {
                    let t = &self.tables.tables[p.index()];
                    r[p.index()] *= normalize_average(&t.avg[t.range(parent.infoset)])[a];
                }
                NodeKind::Terminal => unreachable!(),
            }
            n = node.parent;
        }
        r
    }

    /// Adds the current reach of every history in memory, and of their absent children, to the cumulative reach.
    fn push_crp(&mut self) {
        let mut reach = vec![[0.0f64; 2]; self.nodes.len()];
        reach[0] = [1.0; 2];
        for id in 0..self.nodes.len() {
            let r = reach[id];
            let st = &mut self.nodes[id].stats;
            st.crp[0] += r[0];
            st.crp[1] += r[1];
            if self.nodes[id].children.is_empty() {
                continue;
            }
            let sigma = self.strategy_at(&self.nodes[id]);
            let acting = self.nodes[id].kind.player();
            for a in 0..sigma.len() {
                let mut ra = r;
                if let Some(p) = acting {
                    ra[p.index()] *= sigma[a];
                }
                let c = self.nodes[id].children[a];
                if c == NONE {
                    let slot = &mut self.nodes[id].stats.w[a];
                    slot[0] += ra[0];
                    slot[1] += ra[1];
                } else {
                    reach[c as usize] = ra;
                }
            }
        }
    }

    /// Cumulative reach `[crp_1, crp_2]` recorded at node `id`.
    pub fn node_crp(&self, id: u32) -> [f64; 2] {
        self.nodes[id as usize].stats.crp
    }

    /// Counterfactual value estimate of `player` at history `id`; `None` without sampled mass.
    ///
    /// [`CfvMode::CrpUnbiased`] needs `track_crp`.
    pub fn node_cfv(&self, id: u32, player: Player, mode: CfvMode) -> Option<f64> {
        let st = &self.nodes[id as usize].stats;
        match mode {
            CfvMode::Arithmetic => (self.passes > 0).then(|| st.arith[player.index()] / self.passes as f64),
            CfvMode::Weighted => (st.wden > 0.0).then(|| st.wnum[player.index()] / st.wden),
            CfvMode::CrpUnbiased => {
                let denom = st.crp[0] * st.crp[1];
                if !self.config.track_crp || denom <= 0.0 {
                    return None;
                }
                let u1 = st.shat / denom;
                let r = self.average_reach(id);
                Some(r[player.opponent().index()] * r[2] * player.sign() * u1)
            }
        }
    }

    /// Writes one CSV row per infoset action of the histories in memory.
    ///
    /// CFV columns sum the acting player's accumulators over member histories.
    pub fn dump_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record([
            "infoset_key",
            "action",
            "cum_regret",
            "avg_numerator",
            "cfv_arith",
            "cfv_weighted_num",
            "cfv_weighted_den",
        ])?;
        let mut agg: Vec<HashMap<u32, [f64; 3]>> = vec![HashMap::new(), HashMap::new()];
        for n in &self.nodes {
            if let NodeKind::Decision(p) = n.kind {
                let e = agg[p.index()].entry(n.infoset).or_insert([0.0; 3]);
                e[0] += n.stats.arith[p.index()];
                e[1] += n.stats.wnum[p.index()];
                e[2] += n.stats.wden;
            }
        }
        let arith_scale = if self.passes > 0 { 1.0 / self.passes as f64 } else { 0.0 };
        for p in Player::BOTH {
            let t = &self.tables.tables[p.index()];
            let mut ids: Vec<u32> = (0..t.keys.len() as u32).collect();
            ids.sort_by(|a, b| t.keys[*a as usize].cmp(&t.keys[*b as usize]));
            for id in ids {
                let c = agg[p.index()].get(&id).copied().unwrap_or([0.0; 3]);
                for (a, i) in t.range(id).enumerate() {
                    out.write_record([
                        t.keys[id as usize].clone(),
                        a.to_string(),
                        t.regrets[i].to_string(),
                        t.avg[i].to_string(),
                        (c[0] * arith_scale).to_string(),
                        c[1].to_string(),
                        c[2].to_string(),
                    ])?;
                }
            }
        }
        out.flush()?;
        Ok(())
    }
}

/// `pi_1 crp_2 + crp_1 pi_2 - pi_1 pi_2` at a history.
#[inline]
fn crp_numerator(reach: &[f64; 3], crp: &[f64; 2]) -> f64 {
    reach[0] * crp[1] + crp[0] * reach[1] - reach[0] * reach[1]
}

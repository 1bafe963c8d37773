//! Exact evaluation of strategy profiles on a fully expanded tree.

use std::collections::BTreeMap;
use std::path::Path;

use crate::error::{Error, Result};
use crate::game::{NodeKind, Player};
use crate::strategy::{BehavioralStrategy, Profile};
use crate::tree::{GameTree, NONE};

/// A profile resolved to per-infoset probability vectors for one tree.
#[derive(Debug, Clone)]
pub struct DenseProfile {
    /// `probs[p][infoset]`, empty for infosets where `p` does not act.
    pub probs: [Vec<Vec<f64>>; 2],
}

impl DenseProfile {
    pub fn new(tree: &GameTree, profile: &Profile) -> Self {
        let mut probs: [Vec<Vec<f64>>; 2] = [Vec::new(), Vec::new()];
        for p in Player::BOTH {
            let table = &tree.infosets[p.index()];
            let strat = profile.get(p);
            probs[p.index()] = (0..table.len())
                .map(|id| {
                    let first = table.members[id][0];
                    if tree.acts(first, p) {
                        strat.probs(&table.keys[id], tree.nodes[first as usize].num_actions as usize)
                    } else {
                        Vec::new()
                    }
                })
                .collect();
        }
        DenseProfile { probs }
    }

    /// Probability of the action leading into `node` from its parent.
    #[inline]
    pub fn edge_prob(&self, tree: &GameTree, node: u32) -> (Option<Player>, f64) {
        let n = &tree.nodes[node as usize];
        let parent = &tree.nodes[n.parent as usize];
        match parent.kind {
            NodeKind::Chance => (None, n.chance_prob),
            NodeKind::Decision(p) => {
                let id = parent.infoset[p.index()];
                (Some(p), self.probs[p.index()][id as usize][n.action as usize])
            }
            NodeKind::Terminal => unreachable!("terminal has no children"),
        }
    }

    pub fn to_profile(&self, tree: &GameTree) -> Profile {
        let mut out = Profile::default();
        for p in Player::BOTH {
            for (id, v) in self.probs[p.index()].iter().enumerate() {
                if !v.is_empty() {
                    out.players[p.index()].insert(tree.infosets[p.index()].keys[id].clone(), v.clone());
                }
            }
        }
        out
    }
}

/// A profile with independent random distributions at every decision infoset.
///
/// Each probability is drawn uniformly and normalized; used by randomized property checks.
pub fn random_profile(tree: &GameTree, rng: &mut impl rand::Rng) -> Profile {
    let mut out = Profile::default();
    for p in Player::BOTH {
        let table = &tree.infosets[p.index()];
        for id in 0..table.len() {
            let first = table.members[id][0];
            if !tree.acts(first, p) {
                continue;
            }
            let n = tree.nodes[first as usize].num_actions as usize;
            let w: Vec<f64> = (0..n).map(|_| rng.gen_range(0.05..1.0)).collect();
            let s: f64 = w.iter().sum();
            out.players[p.index()].insert(table.keys[id].clone(), w.iter().map(|x| x / s).collect());
        }
    }
    out
}

/// Reach probabilities `[pi_1, pi_2, pi_chance]` of every node.
pub fn all_reaches(tree: &GameTree, dense: &DenseProfile) -> Vec<[f64; 3]> {
    let mut r = vec![[1.0; 3]; tree.len()];
    // Children always come after their parent in the arena.
    for i in 1..tree.len() {
        let parent = tree.nodes[i].parent as usize;
        let mut v = r[parent];
        match dense.edge_prob(tree, i as u32) {
            (Some(p), q) => v[p.index()] *= q,
            (None, q) => v[2] *= q,
        }
        r[i] = v;
    }
    r
}

/// Reach probabilities of a single history, `(pi_1, pi_2, pi_chance)`.
pub fn reach_probabilities(tree: &GameTree, profile: &Profile, node: u32) -> (f64, f64, f64) {
    let mut r = [1.0f64; 3];
    let mut n = node;
    while tree.nodes[n as usize].parent != NONE {
        let parent = &tree.nodes[tree.nodes[n as usize].parent as usize];
        let node_ref = &tree.nodes[n as usize];
        match parent.kind {
            NodeKind::Chance => r[2] *= node_ref.chance_prob,
            NodeKind::Decision(p) => {
                let key = tree.infoset_key(p, parent.infoset[p.index()]);
                r[p.index()] *= profile.get(p).prob(key, node_ref.action as usize, parent.num_actions as usize);
            }
            NodeKind::Terminal => unreachable!(),
        }
        n = tree.nodes[n as usize].parent;
    }
    (r[0], r[1], r[2])
}

/// Expected utility of player one below every node, conditional on reaching it.
pub fn all_values(tree: &GameTree, dense: &DenseProfile) -> Vec<f64> {
    let mut v = vec![0.0; tree.len()];
    for i in (0..tree.len()).rev() {
        let n = &tree.nodes[i];
        v[i] = match n.kind {
            NodeKind::Terminal => n.utility,
            NodeKind::Chance => tree.children(i as u32).map(|c| tree.nodes[c as usize].chance_prob * v[c as usize]).sum(),
            NodeKind::Decision(p) => {
                let probs = &dense.probs[p.index()][n.infoset[p.index()] as usize];
                tree.children(i as u32)
                    .zip(probs)
                    .map(|(c, q)| q * v[c as usize])
                    .sum()
            }
        };
    }
    v
}

/// Expected utility of player one from `node` onward.
pub fn expected_utility(tree: &GameTree, profile: &Profile, node: u32) -> f64 {
    let dense = DenseProfile::new(tree, profile);
    all_values(tree, &dense)[node as usize]
}

/// Counterfactual value of `player` at an augmented infoset, aggregated over its upper frontier.
pub fn exact_cfv(tree: &GameTree, profile: &Profile, key: &str, player: Player) -> Result<f64> {
    let dense = DenseProfile::new(tree, profile);
    let reaches = all_reaches(tree, &dense);
    let values = all_values(tree, &dense);
    cfv_from(tree, &reaches, &values, key, player, None)
}

/// Counterfactual value of taking `action` at a decision infoset of `player`.
pub fn exact_cfv_action(tree: &GameTree, profile: &Profile, key: &str, action: usize, player: Player) -> Result<f64> {
    let dense = DenseProfile::new(tree, profile);
    let reaches = all_reaches(tree, &dense);
    let values = all_values(tree, &dense);
    cfv_from(tree, &reaches, &values, key, player, Some(action))
}

/// Counterfactual values of all augmented infosets of `player`, keyed by infoset key.
pub fn all_cfvs(tree: &GameTree, profile: &Profile, player: Player) -> BTreeMap<String, f64> {
    let dense = DenseProfile::new(tree, profile);
    let reaches = all_reaches(tree, &dense);
    let values = all_values(tree, &dense);
    let mut out = BTreeMap::new();
    let mut acc = vec![0.0; tree.infosets[player.index()].len()];
    for i in 0..tree.len() {
        let n = &tree.nodes[i];
        if n.kind == NodeKind::Terminal {
            continue;
        }
        let id = n.infoset[player.index()];
        if n.parent != NONE && tree.nodes[n.parent as usize].infoset[player.index()] == id {
            continue;
        }
        acc[id as usize] += opp_reach(&reaches[i], player) * player.sign() * values[i];
    }
    for (id, v) in acc.into_iter().enumerate() {
        out.insert(tree.infosets[player.index()].keys[id].clone(), v);
    }
    out
}

#[inline]
pub(crate) fn opp_reach(r: &[f64; 3], player: Player) -> f64 {
    r[player.opponent().index()] * r[2]
}

fn cfv_from(
    tree: &GameTree,
    reaches: &[[f64; 3]],
    values: &[f64],
    key: &str,
    player: Player,
    action: Option<usize>,
) -> Result<f64> {
    let id = tree.infosets[player.index()]
        .id(key)
        .ok_or_else(|| Error::Validation(format!("unknown infoset `{key}` for player {player}")))?;
    let mut total = 0.0;
    for h in tree.upper_frontier(player, id) {
        let u = match action {
            None => values[h as usize],
            Some(a) => {
                if !tree.acts(h, player) {
                    return Err(Error::Validation(format!("player {player} does not act at `{key}`")));
                }
                values[tree.child(h, a) as usize]
            }
        };
        total += opp_reach(&reaches[h as usize], player) * player.sign() * u;
    }
    Ok(total)
}

/// Best-response computation against a fixed opponent strategy.
struct BestResponse<'a> {
    tree: &'a GameTree,
    dense: &'a DenseProfile,
    responder: Player,
    weights: Vec<f64>,
    memo: Vec<f64>,
    decision: Vec<u32>,
}

impl BestResponse<'_> {
    fn value(&mut self, node: u32) -> f64 {
        let cached = self.memo[node as usize];
        if !cached.is_nan() {
            return cached;
        }
        let n = &self.tree.nodes[node as usize];
        let v = match n.kind {
            NodeKind::Terminal => self.responder.sign() * n.utility,
            NodeKind::Chance => {
                let mut s = 0.0;
                for c in self.tree.children(node) {
                    s += self.tree.nodes[c as usize].chance_prob * self.value(c);
                }
                s
            }
            NodeKind::Decision(p) if p == self.responder => {
                let a = self.decide(n.infoset[p.index()]);
                self.value(self.tree.child(node, a as usize))
            }
            NodeKind::Decision(p) => {
                let id = n.infoset[p.index()] as usize;
                let mut s = 0.0;
                for (a, c) in self.tree.children(node).enumerate() {
                    let q = self.dense.probs[p.index()][id][a];
                    if q > 0.0 {
                        s += q * self.value(c);
                    }
                }
                s
            }
        };
        self.memo[node as usize] = v;
        v
    }

    fn decide(&mut self, infoset: u32) -> u32 {
        let d = self.decision[infoset as usize];
        if d != NONE {
            return d;
        }
        let members = self.tree.infosets[self.responder.index()].members[infoset as usize].clone();
        let n_actions = self.tree.nodes[members[0] as usize].num_actions as usize;
        let total: f64 = members.iter().map(|&h| self.weights[h as usize]).sum();
        let mut scores = vec![0.0; n_actions];
        for &h in &members {
            let w = if total > 0.0 { self.weights[h as usize] } else { 1.0 };
            if w == 0.0 {
                continue;
            }
            for (a, score) in scores.iter_mut().enumerate() {
                *score += w * self.value(self.tree.child(h, a));
            }
        }
        let mut best = 0;
        for a in 1..n_actions {
            if scores[a] > scores[best] {
                best = a;
            }
        }
        self.decision[infoset as usize] = best as u32;
        best as u32
    }
}

fn best_response_impl(tree: &GameTree, dense: &DenseProfile, responder: Player) -> (f64, Vec<u32>) {
    let reaches = all_reaches(tree, dense);
    let weights = reaches.iter().map(|r| opp_reach(r, responder)).collect();
    let mut br = BestResponse {
        tree,
        dense,
        responder,
        weights,
        memo: vec![f64::NAN; tree.len()],
        decision: vec![NONE; tree.infosets[responder.index()].len()],
    };
    let v = br.value(0);
    for id in tree.decision_infosets(responder) {
        br.decide(id);
    }
    (v, br.decision)
}

/// Counterfactual best response of `responder` to the other player's strategy in `profile`.
///
/// Every responder infoset is assigned its best action, ties going to the lowest id.
pub fn counterfactual_best_response(tree: &GameTree, profile: &Profile, responder: Player) -> BehavioralStrategy {
    let dense = DenseProfile::new(tree, profile);
    let (_, decisions) = best_response_impl(tree, &dense, responder);
    let mut out = BehavioralStrategy::new();
    for id in tree.decision_infosets(responder) {
        let first = tree.infosets[responder.index()].members[id as usize][0];
        let n = tree.nodes[first as usize].num_actions as usize;
        let mut v = vec![0.0; n];
        v[decisions[id as usize] as usize] = 1.0;
        out.insert(tree.infosets[responder.index()].keys[id as usize].clone(), v);
    }
    out
}

/// Utility of `responder` when best responding to the other player's strategy.
pub fn best_response_value(tree: &GameTree, profile: &Profile, responder: Player) -> f64 {
    let dense = DenseProfile::new(tree, profile);
    best_response_impl(tree, &dense, responder).0
}

pub fn best_response_value_dense(tree: &GameTree, dense: &DenseProfile, responder: Player) -> f64 {
    best_response_impl(tree, dense, responder).0
}

/// Mean of both players' best-response gains; zero exactly at an equilibrium.
pub fn exploitability(tree: &GameTree, profile: &Profile) -> f64 {
    let dense = DenseProfile::new(tree, profile);
    exploitability_dense(tree, &dense)
}

pub fn exploitability_dense(tree: &GameTree, dense: &DenseProfile) -> f64 {
    0.5 * (best_response_impl(tree, dense, Player::One).0 + best_response_impl(tree, dense, Player::Two).0)
}

/// How much `player`'s strategy loses against a best response, relative to the game value.
///
/// `game_value` is the equilibrium utility of player one.
pub fn player_exploitability(tree: &GameTree, profile: &Profile, player: Player, game_value: f64) -> f64 {
    let dense = DenseProfile::new(tree, profile);
    player.sign() * game_value + best_response_impl(tree, &dense, player.opponent()).0
}

/// Equilibrium values of player one, cached on disk as a JSON object keyed by game name.
#[derive(Debug, Clone, Default, serde::Serialize, serde::Deserialize)]
pub struct GameValueCache {
    #[serde(flatten)]
    pub values: BTreeMap<String, f64>,
}

impl GameValueCache {
    pub fn load(path: &Path) -> Result<Self> {
        if !path.exists() {
            return Ok(Self::default());
        }
        let text = std::fs::read_to_string(path)?;
        Ok(serde_json::from_str(&text)?)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        if let Some(dir) = path.parent() {
            std::fs::create_dir_all(dir)?;
        }
        std::fs::write(path, serde_json::to_string_pretty(self)?)?;
        Ok(())
    }

    pub fn get(&self, game: &str) -> Option<f64> {
        self.values.get(game).copied()
    }

    pub fn insert(&mut self, game: impl Into<String>, value: f64) {
        self.values.insert(game.into(), value);
    }

    /// The bundled table of values computed offline.
    pub fn bundled() -> Self {
        serde_json::from_str(include_str!("../data/game_values.json")).expect("bundled game values parse")
    }
}

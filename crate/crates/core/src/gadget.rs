//! Resolving gadget game for a public state.
//!
//! A root chance node picks a duplicate `~h` of an upper-frontier history `h`
//! of the public state. There the opponent either terminates (action 0) for
//! a payoff that encodes the target counterfactual value of its infoset, or
//! follows (action 1) into `h`, after which the base game continues with
//! scaled utilities. The game implements [`Game`] so every solver runs on it.
//!
//! With `k(h) = pi_{-o}(h) / p(h)`, where `p(h)` is the root chance
//! probability, utilities below `h` are multiplied by `k(h)` and the
//! terminate payoff of the opponent is `v(I) k(h) / pi_{-o}(I)`. Counterfactual
//! values of the opponent in the gadget then equal those in the base game.

use std::collections::{BTreeMap, HashMap};
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::eval::{all_reaches, DenseProfile};
use crate::game::{Game, NodeKind, Player};
use crate::public::PublicTree;
use crate::strategy::Profile;
use crate::tree::{GameTree, NONE};

/// Prefix reserved for keys of gadget-only nodes.
pub const GADGET_PREFIX: &str = "~";
pub const ROOT_KEY: &str = "~root";
pub const TERMINATE: usize = 0;
pub const FOLLOW: usize = 1;

/// Distribution of the gadget's root chance node.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum RootMode {
    /// Proportional to `pi_{-o}(h)`.
    Plain,
    /// Proportional to `pi_{-o}(h) (pi_o(h) + eps)`.
    Epsilon(f64),
}

impl Default for RootMode {
    fn default() -> Self {
        RootMode::Epsilon(1e-3)
    }
}

/// A history on the upper frontier with its reach probabilities.
#[derive(Debug, Clone)]
pub struct FrontierHistory<S> {
    pub state: S,
    /// Action ids from the base-game root.
    pub path: Vec<usize>,
    /// Reach of everyone but the opponent, chance included.
    pub opp_reach: f64,
    /// The opponent's own reach, used by [`RootMode::Epsilon`].
    pub opp_own_reach: f64,
}

#[derive(Debug, Clone)]
pub struct FrontierEntry<S> {
    pub state: S,
    pub path: Vec<usize>,
    pub opp_key: String,
    pub opp_reach: f64,
    pub root_prob: f64,
    /// Utility multiplier below this history.
    pub scale: f64,
    /// Player-one utility of terminating here.
    pub terminate_utility: f64,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum GadgetState<S> {
    Root,
    Tilde(u32),
    Terminate(u32),
    Base(u32, S),
}

#[derive(Debug, Clone)]
pub struct GadgetGame<G: Game> {
    base: G,
    resolver: Player,
    public_key: String,
    frontier: Vec<FrontierEntry<G::State>>,
    /// Opponent reach aggregated per opponent infoset key.
    infoset_reach: BTreeMap<String, f64>,
    max_utility: f64,
    expand_tf: bool,
}

impl<G: Game> GadgetGame<G> {
    /// Builds the gadget for resolving `resolver`'s strategy.
    ///
    /// Histories with zero opponent-excluded reach are dropped. `values` maps
    /// each opponent infoset key at the frontier to its target counterfactual
    /// value, in the opponent's utility.
    pub fn new(
        base: G,
        resolver: Player,
        public_key: impl Into<String>,
        histories: Vec<FrontierHistory<G::State>>,
        values: &HashMap<String, f64>,
        mode: RootMode,
    ) -> Result<Self> {
        let public_key = public_key.into();
        let opp = resolver.opponent();
        let histories: Vec<_> = histories.into_iter().filter(|h| h.opp_reach > 0.0).collect();
        let total: f64 = histories.iter().map(|h| h.opp_reach).sum();
        if histories.is_empty() || total <= 0.0 {
            return Err(Error::UnreachablePublicState(public_key));
        }
        let weights: Vec<f64> = histories
            .iter()
            .map(|h| match mode {
                RootMode::Plain => h.opp_reach,
                RootMode::Epsilon(eps) => h.opp_reach * (h.opp_own_reach + eps),
            })
            .collect();
        let wsum: f64 = weights.iter().sum();
        let mut infoset_reach = BTreeMap::new();
        let keys: Vec<String> = histories.iter().map(|h| base.infoset_key(&h.state, opp)).collect();
        for (h, k) in histories.iter().zip(&keys) {
            *infoset_reach.entry(k.clone()).or_insert(0.0) += h.opp_reach;
        }
        let mut frontier = Vec::with_capacity(histories.len());
        let mut max_scale: f64 = 0.0;
        let mut max_t: f64 = 0.0;
        for ((h, key), w) in histories.into_iter().zip(keys).zip(weights) {
            let v = *values.get(&key).ok_or_else(|| Error::MissingValue(key.clone()))?;
            let root_prob = w / wsum;
            let scale = h.opp_reach / root_prob;
            let t = opp.sign() * v * scale / infoset_reach[&key];
            max_scale = max_scale.max(scale);
            max_t = max_t.max(t.abs());
            frontier.push(FrontierEntry {
                state: h.state,
                path: h.path,
                opp_key: key,
                opp_reach: h.opp_reach,
                root_prob,
                scale,
                terminate_utility: t,
            });
        }
        let max_utility = max_t.max(base.max_utility() * max_scale);
        Ok(GadgetGame {
            base,
            resolver,
            public_key,
            frontier,
            infoset_reach,
            max_utility,
            expand_tf: true,
        })
    }

    /// Whether solvers should follow both T and F at every `~h`.
    pub fn with_expand_tf(mut self, on: bool) -> Self {
        self.expand_tf = on;
        self
    }

    pub fn base(&self) -> &G {
        &self.base
    }

    pub fn resolver(&self) -> Player {
        self.resolver
    }

    pub fn public_key(&self) -> &str {
        &self.public_key
    }

    pub fn frontier(&self) -> &[FrontierEntry<G::State>] {
        &self.frontier
    }

    /// Sum of `pi_{-o}` over the frontier.
    pub fn total_reach(&self) -> f64 {
        self.infoset_reach.values().sum()
    }

    pub fn infoset_reach(&self, key: &str) -> Option<f64> {
        self.infoset_reach.get(key).copied()
    }

    /// Gadget action path to the base history reached by `suffix` below frontier entry `i`.
    pub fn gadget_path(&self, i: usize, suffix: &[usize]) -> Vec<usize> {
        let mut p = Vec::with_capacity(suffix.len() + 2);
        p.push(i);
        p.push(FOLLOW);
        p.extend_from_slice(suffix);
        p
    }

    /// Locates the frontier entry whose base path prefixes `path`, returning its index and the rest.
    pub fn split_base_path<'a>(&self, path: &'a [usize]) -> Option<(usize, &'a [usize])> {
        self.frontier
            .iter()
            .position(|f| path.starts_with(&f.path))
            .map(|i| (i, &path[self.frontier[i].path.len()..]))
    }

    /// Writes the frontier table as CSV.
    pub fn dump_frontier_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["index", "path", "opp_key", "opp_reach", "root_prob", "scale", "terminate_utility"])?;
        for (i, f) in self.frontier.iter().enumerate() {
            let path: Vec<String> = f.path.iter().map(usize::to_string).collect();
            out.write_record([
                i.to_string(),
                path.join(" "),
                f.opp_key.clone(),
                f.opp_reach.to_string(),
                f.root_prob.to_string(),
                f.scale.to_string(),
                f.terminate_utility.to_string(),
            ])?;
        }
        out.flush()?;
        Ok(())
    }
}

impl<G: Game> Game for GadgetGame<G>
where
    G::State: Send + Sync,
{
    type State = GadgetState<G::State>;

    fn name(&self) -> String {
        format!("gadget[{}|{}]", self.base.name(), self.public_key)
    }

    fn root(&self) -> Self::State {
        GadgetState::Root
    }

    fn node_kind(&self, s: &Self::State) -> NodeKind {
        match s {
            GadgetState::Root => NodeKind::Chance,
            GadgetState::Tilde(_) => NodeKind::Decision(self.resolver.opponent()),
            GadgetState::Terminate(_) => NodeKind::Terminal,
            GadgetState::Base(_, b) => self.base.node_kind(b),
        }
    }

    fn num_actions(&self, s: &Self::State) -> usize {
        match s {
            GadgetState::Root => self.frontier.len(),
            GadgetState::Tilde(_) => 2,
            GadgetState::Terminate(_) => 0,
            GadgetState::Base(_, b) => self.base.num_actions(b),
        }
    }

    fn child(&self, s: &Self::State, a: usize) -> Self::State {
        match s {
            GadgetState::Root => GadgetState::Tilde(a as u32),
            GadgetState::Tilde(i) if a == TERMINATE => GadgetState::Terminate(*i),
            GadgetState::Tilde(i) => GadgetState::Base(*i, self.frontier[*i as usize].state.clone()),
            GadgetState::Terminate(_) => unreachable!("terminal has no children"),
            GadgetState::Base(i, b) => GadgetState::Base(*i, self.base.child(b, a)),
        }
    }

    fn chance_prob(&self, s: &Self::State, a: usize) -> f64 {
        match s {
            GadgetState::Root => self.frontier[a].root_prob,
            GadgetState::Base(_, b) => self.base.chance_prob(b, a),
            _ => unreachable!("not a chance node"),
        }
    }

    fn utility(&self, s: &Self::State) -> f64 {
        match s {
            GadgetState::Terminate(i) => self.frontier[*i as usize].terminate_utility,
            GadgetState::Base(i, b) => self.base.utility(b) * self.frontier[*i as usize].scale,
            _ => 0.0,
        }
    }

    fn infoset_key(&self, s: &Self::State, p: Player) -> String {
        match s {
            GadgetState::Root => ROOT_KEY.to_string(),
            GadgetState::Tilde(i) | GadgetState::Terminate(i) => {
                let f = &self.frontier[*i as usize];
                if p == self.resolver {
                    format!("{GADGET_PREFIX}{}", self.base.infoset_key(&f.state, p).trim_end_matches("/?"))
                } else if matches!(s, GadgetState::Tilde(_)) {
                    format!("{GADGET_PREFIX}{}/?", f.opp_key.trim_end_matches("/?"))
                } else {
                    format!("{GADGET_PREFIX}{}/T", f.opp_key.trim_end_matches("/?"))
                }
            }
            GadgetState::Base(_, b) => self.base.infoset_key(b, p),
        }
    }

    fn public_key(&self, s: &Self::State) -> String {
        match s {
            GadgetState::Root => ROOT_KEY.to_string(),
            GadgetState::Tilde(_) | GadgetState::Terminate(_) => format!("{GADGET_PREFIX}{}", self.public_key),
            GadgetState::Base(_, b) => self.base.public_key(b),
        }
    }

    fn action_label(&self, s: &Self::State, a: usize) -> String {
        match s {
            GadgetState::Root => format!("~h{a}"),
            GadgetState::Tilde(_) => if a == TERMINATE { "T" } else { "F" }.to_string(),
            GadgetState::Terminate(_) => unreachable!("terminal has no actions"),
            GadgetState::Base(_, b) => self.base.action_label(b, a),
        }
    }

    fn max_utility(&self) -> f64 {
        self.max_utility
    }

    fn expand_all(&self, s: &Self::State) -> bool {
        match s {
            GadgetState::Tilde(_) => self.expand_tf,
            GadgetState::Base(_, b) => self.base.expand_all(b),
            _ => false,
        }
    }
}

/// Upper frontier of public state `ps` with exact reach probabilities under `profile`.
pub fn exact_frontier<G: Game>(
    game: &G,
    tree: &GameTree,
    public: &PublicTree,
    ps: u32,
    profile: &Profile,
    resolver: Player,
) -> Vec<FrontierHistory<G::State>> {
    let dense = DenseProfile::new(tree, profile);
    let reach = all_reaches(tree, &dense);
    let opp = resolver.opponent();
    public.states[ps as usize]
        .frontier
        .iter()
        .map(|&h| {
            let r = reach[h as usize];
            let path = tree.path(h);
            FrontierHistory {
                state: game.replay(&path),
                path,
                opp_reach: r[resolver.index()] * r[2],
                opp_own_reach: r[opp.index()],
            }
        })
        .collect()
}

/// True if `ps` equals `ancestor` or lies below it in the public tree.
pub fn in_subtree(public: &PublicTree, ancestor: u32, ps: u32) -> bool {
    let mut s = ps;
    while s != NONE {
        if s == ancestor {
            return true;
        }
        s = public.states[s as usize].parent;
    }
    false
}

/// Replaces `sigma` inside the subgame rooted at public state `ps` with `rho`.
///
/// Keys of `rho` that do not start with [`GADGET_PREFIX`] must be infosets of
/// the subgame; infosets of the subgame missing from `rho` become uniform.
pub fn combine_strategy(tree: &GameTree, public: &PublicTree, ps: u32, sigma: &Profile, rho: &Profile) -> Result<Profile> {
    let mut out = sigma.clone();
    for p in Player::BOTH {
        let table = &tree.infosets[p.index()];
        for (id, key) in table.keys.iter().enumerate() {
            let first = table.members[id][0];
            if tree.acts(first, p) && in_subtree(public, ps, tree.nodes[first as usize].public_state) {
                out.players[p.index()].remove(key);
            }
        }
        for (key, probs) in rho.players[p.index()].iter() {
            if key.starts_with(GADGET_PREFIX) {
                continue;
            }
            let id = table
                .id(key)
                .ok_or_else(|| Error::KeyMismatch(format!("player {p} key `{key}` is not in the base game")))?;
            let first = table.members[id as usize][0];
            if !tree.acts(first, p) || !in_subtree(public, ps, tree.nodes[first as usize].public_state) {
                return Err(Error::KeyMismatch(format!(
                    "player {p} key `{key}` is not a decision inside the resolved subgame"
                )));
            }
            if probs.len() != tree.nodes[first as usize].num_actions as usize {
                return Err(Error::KeyMismatch(format!("player {p} key `{key}` has the wrong action count")));
            }
            out.players[p.index()].insert(key.clone(), probs.clone());
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domains::{ExplicitGame, LiarsDice};
    use crate::eval::{exact_cfv, random_profile};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn fig1() -> (ExplicitGame, GameTree, PublicTree, u32) {
        let g = ExplicitGame::three_frontier();
        let tree = GameTree::build(&g);
        let pt = PublicTree::build(&tree);
        let h = tree.child(tree.child(0, 0), 0);
        let ps = tree.nodes[h as usize].public_state;
        (g, tree, pt, ps)
    }

    #[test]
    fn figure_one_shape() {
        let (g, tree, pt, ps) = fig1();
        let hist = exact_frontier(&g, &tree, &pt, ps, &Profile::default(), Player::One);
        assert_eq!(hist.len(), 3);
        let values: HashMap<String, f64> = hist.iter().map(|h| (g.infoset_key(&h.state, Player::Two), 0.0)).collect();
        assert_eq!(values.len(), 2);
        let gad = GadgetGame::new(g, Player::One, pt.states[ps as usize].key.clone(), hist, &values, RootMode::Plain).unwrap();
        let gt = GameTree::build(&gad);
        let chance = gt.nodes.iter().filter(|n| n.kind == NodeKind::Chance).count();
        let tildes = gt.children(0).count();
        let t_terms = gt.children(0).filter(|&c| gt.nodes[gt.child(c, TERMINATE) as usize].kind == NodeKind::Terminal).count();
        assert_eq!((chance, tildes, t_terms), (1, 3, 3));
        let opp_sets: std::collections::BTreeSet<u32> = gt.children(0).map(|c| gt.nodes[c as usize].infoset[1]).collect();
        assert_eq!(opp_sets.len(), 2);
    }

    #[test]
    fn terminate_payoff_formula() {
        // v = 0.5, pi_-2(S) = 0.4, pi_-2(I) = 0.2 gives 1.0 for the opponent
        let g = ExplicitGame::three_frontier();
        let (_, tree, pt, ps) = fig1();
        let mut hist = exact_frontier(&g, &tree, &pt, ps, &Profile::default(), Player::One);
        hist[0].opp_reach = 0.1;
        hist[1].opp_reach = 0.1;
        hist[2].opp_reach = 0.2;
        let key_x = g.infoset_key(&hist[0].state, Player::Two);
        let key_y = g.infoset_key(&hist[2].state, Player::Two);
        let values = HashMap::from([(key_x, 0.5), (key_y, 0.0)]);
        let gad = GadgetGame::new(g, Player::One, "s", hist, &values, RootMode::Plain).unwrap();
        assert!((gad.frontier()[0].terminate_utility + 1.0).abs() < 1e-15);
        assert!((gad.frontier()[0].scale - 0.4).abs() < 1e-15);
    }

    #[test]
    fn errors_on_unreachable_and_missing_values() {
        let (g, tree, pt, ps) = fig1();
        let mut hist = exact_frontier(&g, &tree, &pt, ps, &Profile::default(), Player::One);
        let values = HashMap::new();
        assert!(matches!(
            GadgetGame::new(g.clone(), Player::One, "s", hist.clone(), &values, RootMode::Plain),
            Err(Error::MissingValue(_))
        ));
        hist.iter_mut().for_each(|h| h.opp_reach = 0.0);
        assert!(matches!(
            GadgetGame::new(g, Player::One, "s", hist, &values, RootMode::Plain),
            Err(Error::UnreachablePublicState(_))
        ));
    }

    #[test]
    fn root_public_state_has_unit_scale() {
        let g = LiarsDice::new(1, 1, 3).unwrap();
        let tree = GameTree::build(&g);
        let pt = PublicTree::build(&tree);
        let hist = exact_frontier(&g, &tree, &pt, pt.root(), &Profile::default(), Player::One);
        assert_eq!(hist.len(), 1);
        let key = g.infoset_key(&hist[0].state, Player::Two);
        let gad = GadgetGame::new(g, Player::One, "root", hist, &HashMap::from([(key, 0.0)]), RootMode::Plain).unwrap();
        assert_eq!(gad.frontier()[0].scale, 1.0);
        assert_eq!(gad.frontier()[0].root_prob, 1.0);
    }

    #[test]
    fn epsilon_root_weights() {
        let (g, tree, pt, ps) = fig1();
        let mut hist = exact_frontier(&g, &tree, &pt, ps, &Profile::default(), Player::One);
        for (h, own) in hist.iter_mut().zip([1.0, 0.0, 0.5]) {
            h.opp_own_reach = own;
        }
        let values: HashMap<String, f64> = hist.iter().map(|h| (g.infoset_key(&h.state, Player::Two), 0.0)).collect();
        let r: Vec<f64> = hist.iter().map(|h| h.opp_reach).collect();
        let gad = GadgetGame::new(g, Player::One, "s", hist, &values, RootMode::Epsilon(0.1)).unwrap();
        let w = [r[0] * 1.1, r[1] * 0.1, r[2] * 0.6];
        let s: f64 = w.iter().sum();
        for (f, wi) in gad.frontier().iter().zip(w) {
            assert!((f.root_prob - wi / s).abs() < 1e-15);
            assert!((f.root_prob * f.scale - f.opp_reach).abs() < 1e-15);
        }
    }

    #[test]
    fn combine_with_own_restriction_is_identity() {
        let g = LiarsDice::new(1, 1, 3).unwrap();
        let tree = GameTree::build(&g);
        let pt = PublicTree::build(&tree);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let sigma = random_profile(&tree, &mut rng);
        let ps = pt.states[pt.root() as usize].children[0];
        let mut rho = Profile::default();
        for p in Player::BOTH {
            for (k, v) in sigma.players[p.index()].iter() {
                let id = tree.infosets[p.index()].id(k).unwrap();
                let first = tree.infosets[p.index()].members[id as usize][0];
                if in_subtree(&pt, ps, tree.nodes[first as usize].public_state) {
                    rho.players[p.index()].insert(k.clone(), v.clone());
                }
            }
        }
        assert_eq!(combine_strategy(&tree, &pt, ps, &sigma, &rho).unwrap(), sigma);
        let mut bad = rho.clone();
        bad.players[0].insert("nonsense", vec![1.0]);
        assert!(matches!(combine_strategy(&tree, &pt, ps, &sigma, &bad), Err(Error::KeyMismatch(_))));
    }

    #[test]
    fn gadget_preserves_opponent_values() {
        let g = LiarsDice::new(1, 1, 3).unwrap();
        let tree = GameTree::build(&g);
        let pt = PublicTree::build(&tree);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut worst: f64 = 0.0;
        for trial in 0..20 {
            let sigma = random_profile(&tree, &mut rng);
            let candidates: Vec<u32> = (0..pt.len() as u32).filter(|&s| pt.states[s as usize].has_decision(&tree, Player::One)).collect();
            let ps = candidates[rng.gen_range(0..candidates.len())];
            let hist = exact_frontier(&g, &tree, &pt, ps, &sigma, Player::One);
            let values: HashMap<String, f64> =
                hist.iter().map(|h| (g.infoset_key(&h.state, Player::Two), rng.gen_range(-1.0..1.0))).collect();
            let mode = if trial % 2 == 0 { RootMode::Plain } else { RootMode::Epsilon(1e-3) };
            let gad = match GadgetGame::new(g, Player::One, pt.states[ps as usize].key.clone(), hist, &values, mode) {
                Ok(x) => x,
                Err(Error::UnreachablePublicState(_)) => continue,
                Err(e) => panic!("{e}"),
            };
            let gt = GameTree::build(&gad);
            let rho = random_profile(&gt, &mut rng);
            let combined = combine_strategy(&tree, &pt, ps, &sigma, &rho).unwrap();
            for (id, key) in tree.infosets[1].keys.iter().enumerate() {
                let first = tree.infosets[1].members[id][0];
                if !in_subtree(&pt, ps, tree.nodes[first as usize].public_state) || gt.infosets[1].id(key).is_none() {
                    continue;
                }
                let base = exact_cfv(&tree, &combined, key, Player::Two).unwrap();
                let gv = exact_cfv(&gt, &rho, key, Player::Two).unwrap();
                worst = worst.max((base - gv).abs());
            }
        }
        assert!(worst < 1e-9, "max deviation {worst}");
    }
}

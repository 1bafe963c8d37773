//! Monte Carlo continual resolving: an online agent that re-solves each
//! public state it enters with outcome-sampling MCCFR on a resolving gadget.
//!
//! The agent is parametrized by its seat; nothing assumes it plays first.

use std::collections::{BTreeSet, HashMap};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::agent::{sample_action, Agent, GameContext};
use crate::error::{Error, Result};
use crate::gadget::{in_subtree, FrontierHistory, GadgetGame, RootMode};
use crate::game::{Game, NodeKind, Player};
use crate::public::PublicTree;
use crate::solver::{Budget, CfvMode, OsConfig, OsSolver, RegretTables, Target};
use crate::strategy::BehavioralStrategy;
use crate::tree::{GameTree, NONE};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MccrConfig {
    /// Keep solver tables between resolves instead of starting empty.
    pub keep: bool,
    /// Exploration of the updating player.
    pub epsilon: f64,
    /// Share of passes that sample only through the current infoset.
    pub target_prob: f64,
    pub root_mode: RootMode,
    pub cfv_mode: CfvMode,
    /// Follow both T and F at every gadget node.
    pub expand_tf: bool,
    pub preplay: Budget,
}

impl Default for MccrConfig {
    fn default() -> Self {
        MccrConfig {
            keep: true,
            epsilon: 0.6,
            target_prob: 0.9,
            root_mode: RootMode::default(),
            cfv_mode: CfvMode::Weighted,
            expand_tf: true,
            preplay: Budget::Iterations(1000),
        }
    }
}

/// Data needed to resolve one public state: the resolver's range over its
/// frontier and the opponent's target counterfactual values.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ResolveData {
    /// Resolver's own reach of each frontier history.
    pub range: HashMap<u32, f64>,
    /// Opponent's own reach of each frontier history, for the epsilon root mode.
    pub opp_own: HashMap<u32, f64>,
    /// Opponent counterfactual value per opponent infoset key, in the opponent's utility.
    pub values: HashMap<String, f64>,
}

/// Counters reported by an agent after a match.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MccrStats {
    pub resolves: u64,
    pub iterations: u64,
    /// Opponent infosets whose value had no sampled mass and fell back.
    pub low_confidence: u64,
    /// Public states found unreachable under the resolver's own range.
    pub unreachable: u64,
}

/// Public states where `player` acts for the first time after leaving `kps`.
///
/// Walks down from the root through states in `kps` and through states
/// without a decision of `player`.
pub fn compute_nps(tree: &GameTree, public: &PublicTree, kps: &BTreeSet<u32>, player: Player) -> Vec<u32> {
    let mut out = Vec::new();
    let mut stack = vec![public.root()];
    while let Some(s) = stack.pop() {
        if !kps.contains(&s) && public.states[s as usize].has_decision(tree, player) {
            out.push(s);
            continue;
        }
        stack.extend(public.states[s as usize].children.iter().rev());
    }
    out.sort_unstable();
    out
}

/// Exploitability bound for MCCR holding with probability `(1 - p)^(n + 1)`.
///
/// `infosets`, `delta_u`, `actions` are the player's infoset count, utility
/// range and branching factor; `delta` lower-bounds the sampling probability
/// of every terminal; `n` counts the resolves.
#[allow(clippy::too_many_arguments)]
pub fn mccr_bound(p: f64, infosets: usize, delta_u: f64, actions: usize, delta: f64, t0: u64, tr: u64, n: u32) -> f64 {
    let c = ((2.0 / p).sqrt() + 1.0) * infosets as f64 * delta_u * (actions as f64).sqrt() / delta;
    c * (2.0 / (t0 as f64).sqrt() + (2.0 * n as f64 - 1.0) / (tr as f64).sqrt())
}

#[derive(Debug, Clone)]
pub struct Mccr<G: Game> {
    ctx: Arc<GameContext<G>>,
    config: MccrConfig,
    seat: Player,
    seed: u64,
    rng: ChaCha8Rng,
    kps: BTreeSet<u32>,
    nps: Vec<u32>,
    sigma: BehavioralStrategy,
    data: HashMap<u32, ResolveData>,
    /// Carried regrets and averages, keep mode only.
    tables: RegretTables,
    /// Pre-play solver, consumed by the first move.
    preplay: Option<OsSolver<G>>,
    stats: MccrStats,
}

impl<G: Game + Clone> Mccr<G> {
    /// Runs the pre-play solve and prepares data for the first states to resolve.
    pub fn new(ctx: Arc<GameContext<G>>, seat: Player, seed: u64, config: MccrConfig) -> Result<Self> {
        if !(config.epsilon > 0.0 && config.epsilon <= 1.0) {
            return Err(Error::Config(format!("exploration {} must lie in (0, 1]", config.epsilon)));
        }
        if !(0.0..1.0).contains(&config.target_prob) {
            return Err(Error::Config(format!("targeting probability {} must lie in [0, 1)", config.target_prob)));
        }
        let mut solver = OsSolver::new(ctx.game.clone(), Self::os_config(&config), seed);
        let iterations = solver.run(config.preplay);
        let mut agent = Mccr {
            rng: ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15),
            kps: BTreeSet::new(),
            nps: Vec::new(),
            sigma: BehavioralStrategy::new(),
            data: HashMap::new(),
            tables: RegretTables::default(),
            preplay: None,
            stats: MccrStats {
                iterations,
                ..MccrStats::default()
            },
            ctx,
            config,
            seat,
            seed,
        };
        agent.nps = compute_nps(&agent.ctx.tree, &agent.ctx.public, &agent.kps, seat);
        let nps = agent.nps.clone();
        agent.update_from_base(&solver, &nps);
        agent.preplay = Some(solver);
        Ok(agent)
    }

    fn os_config(config: &MccrConfig) -> OsConfig {
        OsConfig {
            epsilon: config.epsilon,
            track_crp: config.cfv_mode == CfvMode::CrpUnbiased,
            prebuilt: false,
        }
    }

    pub fn config(&self) -> &MccrConfig {
        &self.config
    }

    pub fn stats(&self) -> MccrStats {
        self.stats
    }

    /// Public states with a fixed strategy.
    pub fn kps(&self) -> &BTreeSet<u32> {
        &self.kps
    }

    pub fn nps(&self) -> &[u32] {
        &self.nps
    }

    pub fn data(&self, ps: u32) -> Option<&ResolveData> {
        self.data.get(&ps)
    }

    /// The agent's strategy over every infoset in KPS.
    pub fn strategy(&self) -> &BehavioralStrategy {
        &self.sigma
    }

    fn uniform(n: usize) -> Vec<f64> {
        vec![1.0 / n as f64; n]
    }

    /// Walks from `node` up to the first history accepted by `stop`,
    /// multiplying the resolver's and the opponent's edge probabilities.
    fn reach_to(
        &self,
        node: u32,
        stop: impl Fn(u32) -> bool,
        opp_avg: &impl Fn(&str, usize) -> Vec<f64>,
    ) -> (u32, f64, f64) {
        let tree = &self.ctx.tree;
        let (mut own, mut opp) = (1.0, 1.0);
        let mut n = node;
        while !stop(n) {
            let parent = tree.nodes[n as usize].parent;
            debug_assert_ne!(parent, NONE, "walked past the root");
            let a = tree.nodes[n as usize].action as usize;
            let pn = &tree.nodes[parent as usize];
            if let NodeKind::Decision(p) = pn.kind {
                let key = tree.key_at(parent, p);
                let k = pn.num_actions as usize;
                if p == self.seat {
                    own *= self.sigma.prob(key, a, k);
                } else {
                    opp *= opp_avg(key, k)[a];
                }
            }
            n = parent;
        }
        (n, own, opp)
    }

    /// Fills `data` for `states` from a solver of the base game.
    fn update_from_base(&mut self, solver: &OsSolver<G>, states: &[u32]) {
        let opp = self.seat.opponent();
        let tables = solver.tables();
        let opp_avg = |key: &str, n: usize| tables.average(opp, key).unwrap_or_else(|| Self::uniform(n));
        let value = |node: u32| {
            solver
                .find(&self.ctx.tree.path(node))
                .and_then(|id| solver.node_cfv(id, opp, self.config.cfv_mode))
        };
        let fresh = self.collect_data(states, |n| n == 0, &opp_avg, &value, |_| (1.0, 1.0));
        self.merge_data(fresh);
    }

    /// Builds data for `states` by walking each frontier history up to an anchor.
    ///
    /// `anchor_reach` gives the resolver's and opponent's reach of the anchor.
    fn collect_data(
        &self,
        states: &[u32],
        stop: impl Fn(u32) -> bool + Copy,
        opp_avg: &impl Fn(&str, usize) -> Vec<f64>,
        value: &impl Fn(u32) -> Option<f64>,
        anchor_reach: impl Fn(u32) -> (f64, f64),
    ) -> HashMap<u32, (ResolveData, u64)> {
        let opp = self.seat.opponent();
        let tree = &self.ctx.tree;
        let mut out = HashMap::new();
        for &s in states {
            let mut d = ResolveData::default();
            let mut sums: HashMap<String, Option<f64>> = HashMap::new();
            for &h in &self.ctx.public.states[s as usize].frontier {
                let (anchor, own, o) = self.reach_to(h, stop, opp_avg);
                let (ra, oa) = anchor_reach(anchor);
                d.range.insert(h, ra * own);
                d.opp_own.insert(h, oa * o);
                let key = tree.key_at(h, opp).to_string();
                let entry = sums.entry(key).or_insert(None);
                if let Some(v) = value(h) {
                    *entry = Some(entry.unwrap_or(0.0) + v);
                }
            }
            let mut missing = 0;
            for (key, v) in sums {
                let v = match v {
                    Some(v) if v.is_finite() => v,
                    _ => {
                        missing += 1;
                        self.data.get(&s).and_then(|old| old.values.get(&key).copied()).unwrap_or(0.0)
                    }
                };
                d.values.insert(key, v);
            }
            out.insert(s, (d, missing));
        }
        out
    }

    fn merge_data(&mut self, fresh: HashMap<u32, (ResolveData, u64)>) {
        for (s, (d, missing)) in fresh {
            self.stats.low_confidence += missing;
            self.data.insert(s, d);
        }
    }

    fn set_uniform(&mut self, ps: u32) {
        for &id in &self.ctx.decisions[ps as usize][self.seat.index()] {
            let n = self.ctx.num_actions(self.seat, id);
            self.sigma.insert(self.ctx.key(self.seat, id), Self::uniform(n));
        }
    }

    fn advance_nps(&mut self, ps: u32) -> Vec<u32> {
        self.kps.insert(ps);
        let public = &self.ctx.public;
        self.nps = compute_nps(&self.ctx.tree, public, &self.kps, self.seat)
            .into_iter()
            .filter(|&s| in_subtree(public, ps, s))
            .collect();
        self.nps.clone()
    }

    /// First decision of the match: plays the pre-play average strategy in `ps`.
    fn first_move(&mut self, ps: u32) {
        let solver = self.preplay.take().expect("pre-play solver present before the first move");
        for &id in &self.ctx.decisions[ps as usize][self.seat.index()] {
            let n = self.ctx.num_actions(self.seat, id);
            let key = self.ctx.key(self.seat, id);
            let probs = solver.tables().average(self.seat, key).unwrap_or_else(|| Self::uniform(n));
            self.sigma.insert(key, probs);
        }
        let nps = self.advance_nps(ps);
        self.update_from_base(&solver, &nps);
        if self.config.keep {
            self.tables = solver.into_tables();
        }
    }

    /// Resolves public state `ps`, optionally targeting infoset `target` of the agent.
    fn resolve(&mut self, ps: u32, target: Option<u32>, budget: Budget) -> Result<()> {
        let d = self
            .data
            .get(&ps)
            .cloned()
            .ok_or_else(|| Error::Desync(format!("no resolving data for public state {}", self.ctx.public.states[ps as usize].key)))?;
        let ctx = self.ctx.clone();
        let tree = &ctx.tree;
        let state = &ctx.public.states[ps as usize];
        let histories: Vec<FrontierHistory<G::State>> = state
            .frontier
            .iter()
            .map(|&h| {
                let path = tree.path(h);
                FrontierHistory {
                    state: ctx.game.replay(&path),
                    path,
                    opp_reach: d.range.get(&h).copied().unwrap_or(0.0) * ctx.chance_reach[h as usize],
                    opp_own_reach: d.opp_own.get(&h).copied().unwrap_or(0.0),
                }
            })
            .collect();
        let gadget = match GadgetGame::new(
            ctx.game.clone(),
            self.seat,
            state.key.clone(),
            histories,
            &d.values,
            self.config.root_mode,
        ) {
            Ok(g) => g.with_expand_tf(self.config.expand_tf),
            Err(Error::UnreachablePublicState(_)) => {
                // Our own range never reaches `ps`; the strategy here cannot matter.
                self.stats.unreachable += 1;
                self.set_uniform(ps);
                let nps = self.advance_nps(ps);
                let carried: HashMap<u32, (ResolveData, u64)> =
                    nps.into_iter().map(|s| (s, (ResolveData::default(), 0))).collect();
                self.merge_data(carried);
                return Ok(());
            }
            Err(e) => return Err(e),
        };

        let tables = if self.config.keep { std::mem::take(&mut self.tables) } else { RegretTables::default() };
        let solver_seed = self.seed.wrapping_add(self.stats.resolves.wrapping_add(1).wrapping_mul(0x2545_f491_4f6c_dd1d));
        let mut solver = OsSolver::with_tables(gadget, Self::os_config(&self.config), solver_seed, tables);
        if let Some(id) = target {
            let paths: Vec<Vec<usize>> = ctx
                .members(self.seat, id)
                .iter()
                .filter_map(|&h| {
                    let path = tree.path(h);
                    let (i, suffix) = solver.game().split_base_path(&path)?;
                    Some(solver.game().gadget_path(i, suffix))
                })
                .collect();
            solver.set_target(Some(Target {
                paths,
                prob: self.config.target_prob,
            }));
        }
        self.stats.iterations += solver.run(budget);
        self.stats.resolves += 1;

        for &id in &ctx.decisions[ps as usize][self.seat.index()] {
            let n = ctx.num_actions(self.seat, id);
            let key = ctx.key(self.seat, id);
            let probs = solver.tables().average(self.seat, key).unwrap_or_else(|| Self::uniform(n));
            self.sigma.insert(key, probs);
        }
        let nps = self.advance_nps(ps);

        let opp = self.seat.opponent();
        let frontier: BTreeSet<u32> = state.frontier.iter().copied().collect();
        let fresh = {
            let tables = solver.tables();
            let opp_avg = |key: &str, n: usize| tables.average(opp, key).unwrap_or_else(|| Self::uniform(n));
            let gadget = solver.game();
            let value = |node: u32| {
                let path = tree.path(node);
                let (i, suffix) = gadget.split_base_path(&path)?;
                let id = solver.find(&gadget.gadget_path(i, suffix))?;
                solver.node_cfv(id, opp, self.config.cfv_mode)
            };
            let anchor = |h: u32| {
                (
                    d.range.get(&h).copied().unwrap_or(0.0),
                    d.opp_own.get(&h).copied().unwrap_or(0.0),
                )
            };
            self.collect_data(&nps, |n| frontier.contains(&n), &opp_avg, &value, anchor)
        };
        self.merge_data(fresh);
        if self.config.keep {
            self.tables = solver.into_tables();
        }
        Ok(())
    }

    /// Makes sure the strategy at `ps` is fixed, resolving if needed.
    fn ensure_known(&mut self, ps: u32, target: Option<u32>, budget: Budget) -> Result<()> {
        if self.kps.contains(&ps) {
            return Ok(());
        }
        if self.kps.is_empty() && self.preplay.is_some() && self.nps.contains(&ps) {
            self.first_move(ps);
            return Ok(());
        }
        self.resolve(ps, target, budget)
    }
}

impl<G: Game + Clone + Send + Sync + 'static> Agent for Mccr<G>
where
    G::State: Send + Sync,
{
    fn name(&self) -> String {
        if self.config.keep { "MCCR-keep" } else { "MCCR-reset" }.into()
    }

    fn seat(&self) -> Player {
        self.seat
    }

    fn act(&mut self, own_key: &str, budget: Budget) -> Result<usize> {
        let id = self.ctx.infoset(self.seat, own_key)?;
        let first = self.ctx.members(self.seat, id)[0];
        if !self.ctx.tree.acts(first, self.seat) {
            return Err(Error::Desync(format!("`{own_key}` is not a decision of player {}", self.seat)));
        }
        let ps = self.ctx.public_state_of(self.seat, id);
        self.ensure_known(ps, Some(id), budget)?;
        let n = self.ctx.num_actions(self.seat, id);
        let probs = self.sigma.probs(own_key, n);
        Ok(sample_action(&probs, &mut self.rng))
    }

    fn think_public(&mut self, ps: u32, budget: Budget) -> Result<BehavioralStrategy> {
        self.ensure_known(ps, None, budget)?;
        let mut out = BehavioralStrategy::new();
        for &id in &self.ctx.decisions[ps as usize][self.seat.index()] {
            let key = self.ctx.key(self.seat, id);
            out.insert(key, self.sigma.probs(key, self.ctx.num_actions(self.seat, id)));
        }
        Ok(out)
    }

    fn box_clone(&self) -> Box<dyn Agent> {
        Box::new(self.clone())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domains::{Brps, Iigs, Pttt};
    use crate::game::Game;

    fn cfg(preplay: u64) -> MccrConfig {
        MccrConfig {
            preplay: Budget::Iterations(preplay),
            ..MccrConfig::default()
        }
    }

    #[test]
    fn nps_on_brps_and_empty_kps() {
        let ctx = GameContext::new(Brps).unwrap();
        let root = ctx.public.root();
        let none = BTreeSet::new();
        assert_eq!(compute_nps(&ctx.tree, &ctx.public, &none, Player::One), vec![root]);
        let p2 = compute_nps(&ctx.tree, &ctx.public, &none, Player::Two);
        assert_eq!(p2.len(), 1);
        assert_ne!(p2[0], root);
        // after the only decision nothing is left
        let kps: BTreeSet<u32> = [root].into();
        assert!(compute_nps(&ctx.tree, &ctx.public, &kps, Player::One).is_empty());
    }

    #[test]
    fn nps_on_chain_public_tree_is_single() {
        let tree = GameTree::build_depth_limited(&Pttt, 4);
        let pt = PublicTree::build(&tree);
        let mut kps = BTreeSet::new();
        kps.insert(pt.root());
        let nps = compute_nps(&tree, &pt, &kps, Player::One);
        assert_eq!(nps.len(), 1);
    }

    #[test]
    fn brps_first_move_uses_preplay_average() {
        let ctx = GameContext::new(Brps).unwrap();
        let mut a = Mccr::new(ctx.clone(), Player::One, 3, cfg(2000)).unwrap();
        assert_eq!(a.nps(), &[ctx.public.root()]);
        let key = Brps.infoset_key(&Brps.root(), Player::One);
        let expect = a.preplay.as_ref().unwrap().tables().average(Player::One, &key).unwrap();
        a.act(&key, Budget::Iterations(50)).unwrap();
        assert_eq!(a.stats().resolves, 0);
        assert_eq!(a.strategy().get(&key).unwrap(), expect.as_slice());
    }

    #[test]
    fn same_seed_same_data_and_actions() {
        let ctx = GameContext::new(Iigs::new(3).unwrap()).unwrap();
        let run = |seed| {
            let mut a = Mccr::new(ctx.clone(), Player::Two, seed, cfg(300)).unwrap();
            let d = a.data.clone();
            let key = ctx.key(Player::Two, ctx.tree.decision_infosets(Player::Two)[0]).to_string();
            let act = a.act(&key, Budget::Iterations(200)).unwrap();
            (d, act, a.data.clone())
        };
        assert_eq!(run(9), run(9));
    }

    #[test]
    fn zero_preplay_flags_low_confidence_and_plays_legally() {
        let ctx = GameContext::new(Iigs::new(3).unwrap()).unwrap();
        let a = Mccr::new(ctx.clone(), Player::Two, 1, cfg(0)).unwrap();
        assert!(a.stats().low_confidence > 0);
        for s in a.nps() {
            assert!(a.data(*s).unwrap().values.values().all(|v| *v == 0.0));
        }
    }

    /// Plays full matches against a random opponent and checks every action is legal.
    #[test]
    fn plays_legal_actions_in_both_seats() {
        use crate::agent::RandomAgent;
        let g = Iigs::new(3).unwrap();
        let ctx = GameContext::new(g).unwrap();
        for keep in [true, false] {
            for seat in Player::BOTH {
                for seed in 0..4 {
                    let c = MccrConfig { keep, ..cfg(200) };
                    let mut me = Mccr::new(ctx.clone(), seat, seed, c).unwrap();
                    let mut other = RandomAgent::new(ctx.clone(), seat.opponent(), seed);
                    let mut s = g.root();
                    while !g.is_terminal(&s) {
                        let NodeKind::Decision(p) = g.node_kind(&s) else { unreachable!() };
                        let key = g.infoset_key(&s, p);
                        let a = if p == seat {
                            me.act(&key, Budget::Iterations(100)).unwrap()
                        } else {
                            other.act(&key, Budget::Iterations(0)).unwrap()
                        };
                        assert!(a < g.num_actions(&s));
                        s = g.child(&s, a);
                    }
                    // every own infoset in KPS has a distribution
                    for &ps in me.kps() {
                        for &id in &ctx.decisions[ps as usize][seat.index()] {
                            assert!(me.strategy().contains(ctx.key(seat, id)));
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn bound_with_no_resolves_is_c_over_sqrt_t0() {
        let b = mccr_bound(0.05, 1, 101.0, 3, 0.2, 10_000, 10_000, 0);
        let c = ((2.0f64 / 0.05).sqrt() + 1.0) * 101.0 * 3f64.sqrt() / 0.2;
        assert!((b - c / 100.0).abs() < 1e-9);
        let b1 = mccr_bound(0.05, 1, 101.0, 3, 0.2, 100, 400, 1);
        assert!((b1 - c * (2.0 / 10.0 + 1.0 / 20.0)).abs() < 1e-9);
    }
}

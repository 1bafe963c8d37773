//! Comparison agents: MCCFR from the root, online outcome sampling with
//! infoset targeting, and information-set MCTS with UCT or regret-matching
//! selection.

use std::collections::HashMap;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::agent::{sample_action, Agent, GameContext};
use crate::error::{Error, Result};
use crate::game::{Game, NodeKind, Player};
use crate::solver::{normalize_average, regret_matching, Budget, OsConfig, OsSolver, Target};
use crate::strategy::BehavioralStrategy;

fn uniform(n: usize) -> Vec<f64> {
    vec![1.0 / n as f64; n]
}

fn check_decision<G: Game>(ctx: &GameContext<G>, seat: Player, key: &str) -> Result<u32> {
    let id = ctx.infoset(seat, key)?;
    if !ctx.tree.acts(ctx.members(seat, id)[0], seat) {
        return Err(Error::Desync(format!("`{key}` is not a decision of player {seat}")));
    }
    Ok(id)
}

/// Outcome-sampling MCCFR over the whole game that keeps iterating from the
/// root during play. With a targeting probability it becomes OOS with
/// information-set targeting.
#[derive(Debug, Clone)]
pub struct MccfrAgent<G: Game> {
    ctx: Arc<GameContext<G>>,
    seat: Player,
    solver: OsSolver<G>,
    rng: ChaCha8Rng,
    /// Targeting probability; `None` for plain MCCFR.
    delta: Option<f64>,
}

impl<G: Game + Clone> MccfrAgent<G> {
    pub fn new(ctx: Arc<GameContext<G>>, seat: Player, seed: u64, epsilon: f64, preplay: Budget) -> Result<Self> {
        Self::build(ctx, seat, seed, epsilon, None, preplay)
    }

    pub fn oos(ctx: Arc<GameContext<G>>, seat: Player, seed: u64, epsilon: f64, delta: f64, preplay: Budget) -> Result<Self> {
        if !(0.0..1.0).contains(&delta) {
            return Err(Error::Config(format!("targeting probability {delta} must lie in [0, 1)")));
        }
        Self::build(ctx, seat, seed, epsilon, Some(delta), preplay)
    }

    fn build(
        ctx: Arc<GameContext<G>>,
        seat: Player,
        seed: u64,
        epsilon: f64,
        delta: Option<f64>,
        preplay: Budget,
    ) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon <= 1.0) {
            return Err(Error::Config(format!("exploration {epsilon} must lie in (0, 1]")));
        }
        let cfg = OsConfig {
            epsilon,
            ..OsConfig::default()
        };
        let mut solver = OsSolver::new(ctx.game.clone(), cfg, seed);
        solver.run(preplay);
        Ok(MccfrAgent {
            ctx,
            seat,
            solver,
            rng: ChaCha8Rng::seed_from_u64(seed ^ 0x5851_f42d_4c95_7f2d),
            delta,
        })
    }

    pub fn solver(&self) -> &OsSolver<G> {
        &self.solver
    }

    fn target(&mut self, members: &[u32]) {
        let target = self.delta.map(|prob| Target {
            paths: members.iter().map(|&h| self.ctx.tree.path(h)).collect(),
            prob,
        });
        self.solver.set_target(target);
    }

    fn average(&self, id: u32) -> Vec<f64> {
        let n = self.ctx.num_actions(self.seat, id);
        self.solver
            .tables()
            .average(self.seat, self.ctx.key(self.seat, id))
            .unwrap_or_else(|| uniform(n))
    }
}

impl<G: Game + Clone + 'static> Agent for MccfrAgent<G> {
    fn name(&self) -> String {
        if self.delta.is_some() { "OOS-IST" } else { "MCCFR" }.into()
    }

    fn seat(&self) -> Player {
        self.seat
    }

    fn act(&mut self, own_key: &str, budget: Budget) -> Result<usize> {
        let id = check_decision(&self.ctx, self.seat, own_key)?;
        let ctx = self.ctx.clone();
        self.target(ctx.members(self.seat, id));
        self.solver.run(budget);
        let probs = self.average(id);
        Ok(sample_action(&probs, &mut self.rng))
    }

    /// Targets the whole public state when targeting is on.
    fn think_public(&mut self, ps: u32, budget: Budget) -> Result<BehavioralStrategy> {
        let ctx = self.ctx.clone();
        self.target(&ctx.public.states[ps as usize].members);
        self.solver.run(budget);
        let mut out = BehavioralStrategy::new();
        for &id in &ctx.decisions[ps as usize][self.seat.index()] {
            out.insert(ctx.key(self.seat, id), self.average(id));
        }
        Ok(out)
    }

    fn box_clone(&self) -> Box<dyn Agent> {
        Box::new(self.clone())
    }
}

/// Selection rule of [`IsMcts`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Selection {
    /// UCB1 with exploration constant `c`, in units of the largest utility.
    Uct { c: f64 },
    /// Regret matching mixed with `gamma` uniform exploration.
    Rm { gamma: f64 },
}

/// Statistics of one information set.
#[derive(Debug, Clone)]
struct Stats {
    visits: u64,
    counts: Vec<u64>,
    /// Value sums in the acting player's utility (UCT).
    values: Vec<f64>,
    regrets: Vec<f64>,
    /// Sum of played selection strategies (RM).
    avg: Vec<f64>,
}

impl Stats {
    fn new(n: usize) -> Self {
        Stats {
            visits: 0,
            counts: vec![0; n],
            values: vec![0.0; n],
            regrets: vec![0.0; n],
            avg: vec![0.0; n],
        }
    }
}

/// Information-set MCTS with statistics shared by all histories of an infoset.
#[derive(Debug)]
pub struct IsMcts<G: Game> {
    ctx: Arc<GameContext<G>>,
    seat: Player,
    selection: Selection,
    stats: [HashMap<String, Stats>; 2],
    rng: ChaCha8Rng,
}

impl<G: Game> Clone for IsMcts<G> {
    fn clone(&self) -> Self {
        IsMcts {
            ctx: self.ctx.clone(),
            seat: self.seat,
            selection: self.selection,
            stats: self.stats.clone(),
            rng: self.rng.clone(),
        }
    }
}

impl<G: Game> IsMcts<G> {
    pub fn new(ctx: Arc<GameContext<G>>, seat: Player, seed: u64, selection: Selection) -> Result<Self> {
        match selection {
            Selection::Uct { c } if !(c >= 0.0 && c.is_finite()) => {
                return Err(Error::Config(format!("UCT constant {c} must be finite and non-negative")))
            }
            Selection::Rm { gamma } if !(gamma > 0.0 && gamma <= 1.0) => {
                return Err(Error::Config(format!("RM exploration {gamma} must lie in (0, 1]")))
            }
            _ => {}
        }
        Ok(IsMcts {
            ctx,
            seat,
            selection,
            stats: [HashMap::new(), HashMap::new()],
            rng: ChaCha8Rng::seed_from_u64(seed),
        })
    }

    /// Number of infosets with statistics, per player.
    pub fn table_sizes(&self) -> [usize; 2] {
        [self.stats[0].len(), self.stats[1].len()]
    }

    /// Runs searches from uniformly drawn members of infoset `id`.
    fn search(&mut self, id: u32, budget: Budget) {
        let ctx = self.ctx.clone();
        let starts: Vec<G::State> = ctx
            .members(self.seat, id)
            .iter()
            .map(|&h| ctx.game.replay(&ctx.tree.path(h)))
            .collect();
        budget.run(64, || {
            let s = &starts[self.rng.gen_range(0..starts.len())];
            let mut expanded = false;
            self.simulate(&ctx.game, s.clone(), &mut expanded);
        });
    }

    fn selection_probs(&self, st: &Stats) -> Vec<f64> {
        match self.selection {
            Selection::Rm { gamma } => {
                let n = st.regrets.len() as f64;
                regret_matching(&st.regrets).into_iter().map(|x| (1.0 - gamma) * x + gamma / n).collect()
            }
            Selection::Uct { .. } => unreachable!("UCT selects deterministically"),
        }
    }

    fn select(&mut self, st: &Stats) -> (usize, Vec<f64>) {
        match self.selection {
            Selection::Uct { c } => {
                let untried: Vec<usize> = (0..st.counts.len()).filter(|&a| st.counts[a] == 0).collect();
                if !untried.is_empty() {
                    return (untried[self.rng.gen_range(0..untried.len())], Vec::new());
                }
                let c = c * self.ctx.game.max_utility();
                let ln = (st.visits as f64).ln();
                let score = |a: usize| st.values[a] / st.counts[a] as f64 + c * (ln / st.counts[a] as f64).sqrt();
                let best = (0..st.counts.len()).fold(0, |b, a| if score(a) > score(b) { a } else { b });
                (best, Vec::new())
            }
            Selection::Rm { .. } => {
                let probs = self.selection_probs(st);
                (sample_action(&probs, &mut self.rng), probs)
            }
        }
    }

    /// One simulation; returns the player-one utility.
    fn simulate(&mut self, game: &G, state: G::State, expanded: &mut bool) -> f64 {
        match game.node_kind(&state) {
            NodeKind::Terminal => game.utility(&state),
            NodeKind::Chance => {
                let probs: Vec<f64> = (0..game.num_actions(&state)).map(|a| game.chance_prob(&state, a)).collect();
                let a = sample_action(&probs, &mut self.rng);
                self.simulate(game, game.child(&state, a), expanded)
            }
            NodeKind::Decision(p) => {
                let n = game.num_actions(&state);
                let key = game.infoset_key(&state, p);
                let known = self.stats[p.index()].contains_key(&key);
                if !known && *expanded {
                    let a = self.rng.gen_range(0..n);
                    return self.simulate(game, game.child(&state, a), expanded);
                }
                if !known {
                    *expanded = true;
                    self.stats[p.index()].insert(key.clone(), Stats::new(n));
                }
                let st = self.stats[p.index()].remove(&key).expect("present");
                let (a, probs) = self.select(&st);
                let u1 = self.simulate(game, game.child(&state, a), expanded);
                let u = p.sign() * u1;
                let mut st = st;
                st.visits += 1;
                st.counts[a] += 1;
                st.values[a] += u;
                if !probs.is_empty() {
                    for b in 0..n {
                        let x = if b == a { u / probs[a] } else { 0.0 };
                        st.regrets[b] += x - u;
                        st.avg[b] += probs[b];
                    }
                }
                self.stats[p.index()].insert(key, st);
                u1
            }
        }
    }

    /// Distribution the agent plays at infoset `id`.
    fn play_probs(&self, id: u32) -> Vec<f64> {
        let n = self.ctx.num_actions(self.seat, id);
        let Some(st) = self.stats[self.seat.index()].get(self.ctx.key(self.seat, id)) else {
            return uniform(n);
        };
        match self.selection {
            Selection::Uct { .. } => {
                let best = (0..n).fold(0, |b, a| if st.counts[a] > st.counts[b] { a } else { b });
                let mut out = vec![0.0; n];
                out[best] = 1.0;
                out
            }
            Selection::Rm { .. } => normalize_average(&st.avg),
        }
    }
}

impl<G: Game + 'static> Agent for IsMcts<G> {
    fn name(&self) -> String {
        match self.selection {
            Selection::Uct { .. } => "UCT",
            Selection::Rm { .. } => "RM",
        }
        .into()
    }

    fn seat(&self) -> Player {
        self.seat
    }

    fn act(&mut self, own_key: &str, budget: Budget) -> Result<usize> {
        let id = check_decision(&self.ctx, self.seat, own_key)?;
        self.search(id, budget);
        let probs = self.play_probs(id);
        Ok(sample_action(&probs, &mut self.rng))
    }

    /// Searches each own infoset of `ps` with the full budget.
    fn think_public(&mut self, ps: u32, budget: Budget) -> Result<BehavioralStrategy> {
        let ctx = self.ctx.clone();
        let mut out = BehavioralStrategy::new();
        for &id in &ctx.decisions[ps as usize][self.seat.index()] {
            self.search(id, budget);
            out.insert(ctx.key(self.seat, id), self.play_probs(id));
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
    use crate::domains::{Brps, Iigs};
    use crate::eval::exploitability;
    use crate::strategy::Profile;

    fn brps_key(p: Player) -> (Arc<GameContext<Brps>>, String) {
        let ctx = GameContext::new(Brps).unwrap();
        let s = if p == Player::One { Brps.root() } else { Brps.child(&Brps.root(), 0) };
        (ctx, Brps.infoset_key(&s, p))
    }

    #[test]
    fn mccfr_agent_approaches_equilibrium_on_brps() {
        let (ctx, _) = brps_key(Player::One);
        let mut profile = Profile::default();
        for p in Player::BOTH {
            let mut a = MccfrAgent::new(ctx.clone(), p, 7, 0.6, Budget::Iterations(100_000)).unwrap();
            let ps = ctx.public_state_of(p, ctx.tree.decision_infosets(p)[0]);
            profile.players[p.index()] = a.think_public(ps, Budget::Iterations(0)).unwrap();
        }
        let e = exploitability(&ctx.tree, &profile);
        assert!(e < 2.0, "exploitability {e}");
    }

    #[test]
    fn oos_rejects_bad_delta() {
        let (ctx, _) = brps_key(Player::One);
        assert!(MccfrAgent::oos(ctx.clone(), Player::One, 0, 0.6, 1.0, Budget::Iterations(0)).is_err());
        assert!(MccfrAgent::oos(ctx, Player::One, 0, 0.6, 0.9, Budget::Iterations(10)).is_ok());
    }

    #[test]
    fn rm_selection_keeps_mixing() {
        // gamma-uniform exploration keeps every action in the average
        let (ctx, key) = brps_key(Player::Two);
        let mut a = IsMcts::new(ctx.clone(), Player::Two, 3, Selection::Rm { gamma: 0.2 }).unwrap();
        a.act(&key, Budget::Iterations(20_000)).unwrap();
        let id = ctx.infoset(Player::Two, &key).unwrap();
        let probs = a.play_probs(id);
        assert!(probs.iter().all(|&p| p > 0.02), "{probs:?}");
    }

    #[test]
    fn uct_search_on_brps_touches_one_infoset_per_player() {
        let (ctx, key) = brps_key(Player::One);
        let mut a = IsMcts::new(ctx, Player::One, 1, Selection::Uct { c: 2.0 }).unwrap();
        let x = a.act(&key, Budget::Iterations(500)).unwrap();
        assert!(x < 3);
        assert_eq!(a.table_sizes(), [1, 1]);
    }

    #[test]
    fn ismcts_expands_one_infoset_per_iteration() {
        let g = Iigs::new(3).unwrap();
        let ctx = GameContext::new(g).unwrap();
        let key = g.infoset_key(&g.root(), Player::One);
        let mut a = IsMcts::new(ctx, Player::One, 2, Selection::Uct { c: 2.0 }).unwrap();
        for i in 1..=5 {
            a.act(&key, Budget::Iterations(1)).unwrap();
            let total: usize = a.table_sizes().iter().sum();
            assert!(total <= i, "{total} infosets after {i} iterations");
        }
    }

    #[test]
    fn agents_reject_unknown_keys() {
        let (ctx, _) = brps_key(Player::One);
        let mut a = IsMcts::new(ctx.clone(), Player::One, 1, Selection::Rm { gamma: 0.2 }).unwrap();
        assert!(matches!(a.act("nope", Budget::Iterations(1)), Err(Error::Desync(_))));
        let mut m = MccfrAgent::new(ctx, Player::One, 1, 0.6, Budget::Iterations(1)).unwrap();
        assert!(matches!(m.act("nope", Budget::Iterations(1)), Err(Error::Desync(_))));
    }
}

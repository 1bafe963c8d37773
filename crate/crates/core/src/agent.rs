//! Agent protocol shared by every player and the per-game context agents read from.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game::{Game, Player};
use crate::public::PublicTree;
use crate::solver::Budget;
use crate::strategy::BehavioralStrategy;
use crate::tree::GameTree;

/// Largest tree an agent context will build.
pub const MAX_CONTEXT_NODES: usize = 5_000_000;

/// A game with its fully expanded tree and public tree.
#[derive(Debug)]
pub struct GameContext<G: Game> {
    pub game: G,
    pub tree: GameTree,
    pub public: PublicTree,
    /// Decision infosets of each player, per public state.
    pub decisions: Vec<[Vec<u32>; 2]>,
    /// Chance reach of every history.
    pub chance_reach: Vec<f64>,
}

impl<G: Game> GameContext<G> {
    pub fn new(game: G) -> Result<Arc<Self>> {
        let tree = GameTree::build_limited(&game, MAX_CONTEXT_NODES)?;
        let public = PublicTree::build(&tree);
        let mut decisions = vec![[Vec::new(), Vec::new()]; public.len()];
        for p in Player::BOTH {
            for id in tree.decision_infosets(p) {
                let first = tree.infosets[p.index()].members[id as usize][0];
                decisions[tree.nodes[first as usize].public_state as usize][p.index()].push(id);
            }
        }
        let mut chance_reach = vec![1.0; tree.len()];
        for i in 1..tree.len() {
            chance_reach[i] = chance_reach[tree.nodes[i].parent as usize] * tree.nodes[i].chance_prob;
        }
        Ok(Arc::new(GameContext {
            game,
            tree,
            public,
            decisions,
            chance_reach,
        }))
    }

    /// Id of `player`'s infoset `key`, or a desync error.
    pub fn infoset(&self, player: Player, key: &str) -> Result<u32> {
        self.tree.infosets[player.index()]
            .id(key)
            .ok_or_else(|| Error::Desync(format!("player {player} infoset `{key}` does not exist")))
    }

    pub fn members(&self, player: Player, id: u32) -> &[u32] {
        &self.tree.infosets[player.index()].members[id as usize]
    }

    pub fn public_state_of(&self, player: Player, id: u32) -> u32 {
        self.tree.nodes[self.members(player, id)[0] as usize].public_state
    }

    pub fn key(&self, player: Player, id: u32) -> &str {
        &self.tree.infosets[player.index()].keys[id as usize]
    }

    pub fn num_actions(&self, player: Player, id: u32) -> usize {
        self.tree.nodes[self.members(player, id)[0] as usize].num_actions as usize
    }
}

/// An online player. The harness drives agents only through this interface.
pub trait Agent: Send {
    fn name(&self) -> String;

    fn seat(&self) -> Player;

    /// Receives the public key and the agent's own infoset key after every move.
    fn observe(&mut self, _public_key: &str, _own_key: &str) -> Result<()> {
        Ok(())
    }

    /// Chooses an action at the agent's infoset `own_key`.
    fn act(&mut self, own_key: &str, budget: Budget) -> Result<usize>;

    /// Thinks at public state `ps` as if about to move there, without
    /// targeting a particular infoset, and returns the strategy at the agent's
    /// infosets in `ps`.
    ///
    /// Callers visit public states top-down, cloning the agent at branches.
    fn think_public(&mut self, ps: u32, budget: Budget) -> Result<BehavioralStrategy>;

    fn box_clone(&self) -> Box<dyn Agent>;
}

impl Clone for Box<dyn Agent> {
    fn clone(&self) -> Self {
        self.box_clone()
    }
}

/// Samples an index from a distribution.
pub fn sample_action(probs: &[f64], rng: &mut impl Rng) -> usize {
    crate::solver::pick_with(rng.gen::<f64>(), probs)
}

/// Uniformly random player.
#[derive(Debug)]
pub struct RandomAgent<G: Game> {
    ctx: Arc<GameContext<G>>,
    seat: Player,
    rng: ChaCha8Rng,
}

impl<G: Game> Clone for RandomAgent<G> {
    fn clone(&self) -> Self {
        RandomAgent {
            ctx: self.ctx.clone(),
            seat: self.seat,
            rng: self.rng.clone(),
        }
    }
}

impl<G: Game> RandomAgent<G> {
    pub fn new(ctx: Arc<GameContext<G>>, seat: Player, seed: u64) -> Self {
        RandomAgent {
            ctx,
            seat,
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }
}

impl<G: Game + 'static> Agent for RandomAgent<G> {
    fn name(&self) -> String {
        "RND".into()
    }

    fn seat(&self) -> Player {
        self.seat
    }

    fn act(&mut self, own_key: &str, _budget: Budget) -> Result<usize> {
        let id = self.ctx.infoset(self.seat, own_key)?;
        Ok(self.rng.gen_range(0..self.ctx.num_actions(self.seat, id)))
    }

    fn think_public(&mut self, ps: u32, _budget: Budget) -> Result<BehavioralStrategy> {
        let mut s = BehavioralStrategy::new();
        for &id in &self.ctx.decisions[ps as usize][self.seat.index()] {
            let n = self.ctx.num_actions(self.seat, id);
            s.insert(self.ctx.key(self.seat, id), vec![1.0 / n as f64; n]);
        }
        Ok(s)
    }

    fn box_clone(&self) -> Box<dyn Agent> {
        Box::new(self.clone())
    }
}

/// Agent kind and options, parsed from strings like `mccr:keep:eps=0.6`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentSpec {
    pub kind: AgentKind,
    pub options: BTreeMap<String, String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum AgentKind {
    MccrKeep,
    MccrReset,
    Mccfr,
    OosIst,
    Uct,
    Rm,
    Random,
}

impl AgentSpec {
    pub fn option_f64(&self, key: &str, default: f64) -> Result<f64> {
        match self.options.get(key) {
            None => Ok(default),
            Some(v) => v
                .parse()
                .map_err(|_| Error::Config(format!("option `{key}` expects a number, got `{v}`"))),
        }
    }

    fn check_options(&self, allowed: &[&str]) -> Result<()> {
        for k in self.options.keys() {
            if !allowed.contains(&k.as_str()) {
                return Err(Error::Config(format!("unknown option `{k}` for agent `{self}`")));
            }
        }
        Ok(())
    }
}

impl FromStr for AgentSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut parts = s.trim().split(':');
        let head = parts.next().unwrap_or("").to_ascii_lowercase();
        let mut flags = Vec::new();
        let mut options = BTreeMap::new();
        for part in parts {
            for tok in part.split(',').filter(|t| !t.is_empty()) {
                match tok.split_once('=') {
                    Some((k, v)) => {
                        options.insert(k.trim().to_ascii_lowercase(), v.trim().to_string());
                    }
                    None => flags.push(tok.trim().to_ascii_lowercase()),
                }
            }
        }
        let kind = match (head.as_str(), flags.as_slice()) {
            ("mccr", []) | ("mccr", [_]) => {
                if flags.first().map(String::as_str) == Some("reset") {
                    AgentKind::MccrReset
                } else if flags.is_empty() || flags[0] == "keep" {
                    AgentKind::MccrKeep
                } else {
                    return Err(Error::Config(format!("unknown MCCR variant `{}`", flags[0])));
                }
            }
            ("mccfr", []) => AgentKind::Mccfr,
            ("oos", []) | ("oos-ist", []) => AgentKind::OosIst,
            ("uct", []) => AgentKind::Uct,
            ("rm", []) => AgentKind::Rm,
            ("rnd", []) | ("random", []) => AgentKind::Random,
            _ => return Err(Error::Config(format!("unknown agent spec `{s}`"))),
        };
        let spec = AgentSpec { kind, options };
        let allowed: &[&str] = match kind {
            AgentKind::MccrKeep | AgentKind::MccrReset => &["eps", "target", "root_eps", "cfv"],
            AgentKind::Mccfr => &["eps"],
            AgentKind::OosIst => &["eps", "delta"],
            AgentKind::Uct => &["c"],
            AgentKind::Rm => &["gamma"],
            AgentKind::Random => &[],
        };
        spec.check_options(allowed)?;
        Ok(spec)
    }
}

impl fmt::Display for AgentSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let head = match self.kind {
            AgentKind::MccrKeep => "mccr:keep",
            AgentKind::MccrReset => "mccr:reset",
            AgentKind::Mccfr => "mccfr",
            AgentKind::OosIst => "oos",
            AgentKind::Uct => "uct",
            AgentKind::Rm => "rm",
            AgentKind::Random => "rnd",
        };
        write!(f, "{head}")?;
        if !self.options.is_empty() {
            let opts: Vec<String> = self.options.iter().map(|(k, v)| format!("{k}={v}")).collect();
            write!(f, ":{}", opts.join(","))?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domains::Brps;

    #[test]
    fn parses_agent_specs() {
        let s: AgentSpec = "mccr:keep:eps=0.6".parse().unwrap();
        assert_eq!(s.kind, AgentKind::MccrKeep);
        assert_eq!(s.option_f64("eps", 0.0).unwrap(), 0.6);
        assert_eq!(s.to_string(), "mccr:keep:eps=0.6");
        assert_eq!("MCCR:reset".parse::<AgentSpec>().unwrap().kind, AgentKind::MccrReset);
        assert_eq!("mccr".parse::<AgentSpec>().unwrap().kind, AgentKind::MccrKeep);
        assert_eq!("rnd".parse::<AgentSpec>().unwrap().kind, AgentKind::Random);
        assert!("mccr:fast".parse::<AgentSpec>().is_err());
        assert!("uct:gamma=1".parse::<AgentSpec>().is_err());
        assert!("alphazero".parse::<AgentSpec>().is_err());
    }

    #[test]
    fn random_agent_is_reproducible_and_uniform() {
        let ctx = GameContext::new(Brps).unwrap();
        let key = Brps.infoset_key(&Brps.root(), Player::One);
        let draws = |seed| {
            let mut a = RandomAgent::new(ctx.clone(), Player::One, seed);
            (0..10_000).map(|_| a.act(&key, Budget::Iterations(0)).unwrap()).collect::<Vec<_>>()
        };
        let a = draws(5);
        assert_eq!(a, draws(5));
        // chi-square with 2 degrees of freedom, 0.999 quantile
        let mut counts = [0f64; 3];
        a.iter().for_each(|&x| counts[x] += 1.0);
        let chi: f64 = counts.iter().map(|c| (c - 10_000.0 / 3.0).powi(2) / (10_000.0 / 3.0)).sum();
        assert!(chi < 13.8, "chi-square {chi}");
    }
}

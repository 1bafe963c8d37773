//! Experiment driver: matches and tournaments, expected-strategy
//! exploitability, CFV stability and averaging studies, exploration sweeps
//! and interactive play.
//!
//! Every experiment writes one CSV plus a JSON sidecar that echoes the
//! resolved configuration.

use std::collections::BTreeMap;
use std::fs;
use std::io::{BufRead, Write};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::agent::{sample_action, Agent, AgentKind, AgentSpec, GameContext, RandomAgent};
use crate::baselines::{IsMcts, MccfrAgent, Selection};
use crate::domains::make_game;
use crate::error::{Error, Result};
use crate::eval::{all_reaches, exact_cfv_action, exploitability, DenseProfile};
use crate::gadget::RootMode;
use crate::game::{Game, NodeKind, Player};
use crate::public::PublicTree;
use crate::resolving::{Mccr, MccrConfig};
use crate::solver::{Budget, CfvMode, OsConfig, OsSolver};
use crate::strategy::{BehavioralStrategy, Profile};
use crate::tree::GameTree;

/// Standard normal quantile for two-sided 95% intervals.
pub const Z95: f64 = 1.959_963_984_540_054;

/// Builds an agent from its spec.
pub fn make_agent<G: Game + Clone + 'static>(
    spec: &AgentSpec,
    ctx: &Arc<GameContext<G>>,
    seat: Player,
    seed: u64,
    preplay: Budget,
) -> Result<Box<dyn Agent>> {
    let ctx = ctx.clone();
    Ok(match spec.kind {
        AgentKind::MccrKeep | AgentKind::MccrReset => {
            let root_eps = spec.option_f64("root_eps", 1e-3)?;
            let cfv_mode = match spec.options.get("cfv").map(String::as_str) {
                None | Some("weighted") => CfvMode::Weighted,
                Some("arith") | Some("arithmetic") => CfvMode::Arithmetic,
                Some("crp") => CfvMode::CrpUnbiased,
                Some(other) => return Err(Error::Config(format!("unknown cfv mode `{other}`"))),
            };
            let cfg = MccrConfig {
                keep: spec.kind == AgentKind::MccrKeep,
                epsilon: spec.option_f64("eps", 0.6)?,
                target_prob: spec.option_f64("target", 0.9)?,
                root_mode: if root_eps > 0.0 { RootMode::Epsilon(root_eps) } else { RootMode::Plain },
                cfv_mode,
                expand_tf: true,
                preplay,
            };
            Box::new(Mccr::new(ctx, seat, seed, cfg)?)
        }
        AgentKind::Mccfr => Box::new(MccfrAgent::new(ctx, seat, seed, spec.option_f64("eps", 0.6)?, preplay)?),
        AgentKind::OosIst => Box::new(MccfrAgent::oos(
            ctx,
            seat,
            seed,
            spec.option_f64("eps", 0.6)?,
            spec.option_f64("delta", 0.9)?,
            preplay,
        )?),
        AgentKind::Uct => Box::new(IsMcts::new(ctx, seat, seed, Selection::Uct { c: spec.option_f64("c", 2.0)? })?),
        AgentKind::Rm => Box::new(IsMcts::new(ctx, seat, seed, Selection::Rm { gamma: spec.option_f64("gamma", 0.2)? })?),
        AgentKind::Random => Box::new(RandomAgent::new(ctx, seat, seed)),
    })
}

/// Mixes two seeds into an independent one.
pub fn derive_seed(a: u64, b: u64) -> u64 {
    let mut z = a ^ b.wrapping_add(0x9e37_79b9_7f4a_7c15).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Applies `f` to every item on up to `threads` workers, keeping input order.
pub fn parallel_map<T: Sync, R: Send>(items: &[T], threads: usize, f: impl Fn(&T) -> R + Sync) -> Vec<R> {
    let threads = threads.max(1).min(items.len().max(1));
    if threads == 1 {
        return items.iter().map(f).collect();
    }
    let next = AtomicUsize::new(0);
    let out: Mutex<Vec<Option<R>>> = Mutex::new((0..items.len()).map(|_| None).collect());
    std::thread::scope(|s| {
        for _ in 0..threads {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= items.len() {
                    break;
                }
                let r = f(&items[i]);
                out.lock().expect("result lock")[i] = Some(r);
            });
        }
    });
    out.into_inner().expect("result lock").into_iter().map(|r| r.expect("every item ran")).collect()
}

pub fn default_threads() -> usize {
    std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
}

/// One finished match.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchRecord {
    pub game: String,
    /// Agent specs by seat.
    pub agents: [String; 2],
    pub seeds: [u64; 2],
    pub preplay: Budget,
    pub move_budget: Budget,
    /// Action ids from the root, chance included.
    pub transcript: Vec<usize>,
    pub utility: f64,
    /// Wall-clock time of each agent decision, in milliseconds.
    pub move_ms: Vec<f64>,
}

/// Player-one utility of the terminal reached by `transcript`.
pub fn replay_utility<G: Game>(game: &G, transcript: &[usize]) -> Result<f64> {
    let mut s = game.root();
    for (i, &a) in transcript.iter().enumerate() {
        if game.is_terminal(&s) || a >= game.num_actions(&s) {
            return Err(Error::Validation(format!("transcript step {i} is not legal")));
        }
        s = game.child(&s, a);
    }
    if !game.is_terminal(&s) {
        return Err(Error::Validation("transcript does not end at a terminal".into()));
    }
    Ok(game.utility(&s))
}

/// Plays one match; chance is sampled from `seed`.
pub fn play_match<G: Game>(
    ctx: &GameContext<G>,
    agents: &mut [Box<dyn Agent>; 2],
    move_budget: Budget,
    seed: u64,
) -> Result<(Vec<usize>, f64, Vec<f64>)> {
    let game = &ctx.game;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut s = game.root();
    let mut transcript = Vec::new();
    let mut move_ms = Vec::new();
    while !game.is_terminal(&s) {
        let a = match game.node_kind(&s) {
            NodeKind::Chance => {
                let probs: Vec<f64> = (0..game.num_actions(&s)).map(|a| game.chance_prob(&s, a)).collect();
                sample_action(&probs, &mut rng)
            }
            NodeKind::Decision(p) => {
                let key = game.infoset_key(&s, p);
                let start = Instant::now();
                let a = agents[p.index()].act(&key, move_budget)?;
                move_ms.push(start.elapsed().as_secs_f64() * 1e3);
                if a >= game.num_actions(&s) {
                    return Err(Error::Desync(format!("agent {} chose illegal action {a} at `{key}`", agents[p.index()].name())));
                }
                a
            }
            NodeKind::Terminal => unreachable!(),
        };
        transcript.push(a);
        s = game.child(&s, a);
        if !game.is_terminal(&s) {
            let public = game.public_key(&s);
            for agent in agents.iter_mut() {
                let own = game.infoset_key(&s, agent.seat());
                agent.observe(&public, &own)?;
            }
        }
    }
    Ok((transcript, game.utility(&s), move_ms))
}

/// Mean with a symmetric interval of two standard errors.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanCi {
    pub n: usize,
    pub mean: f64,
    pub se: f64,
    pub lo: f64,
    pub hi: f64,
}

pub fn mean_2se(xs: &[f64]) -> MeanCi {
    let n = xs.len();
    if n == 0 {
        return MeanCi {
            n,
            mean: f64::NAN,
            se: f64::NAN,
            lo: f64::NAN,
            hi: f64::NAN,
        };
    }
    let mean = xs.iter().sum::<f64>() / n as f64;
    let var = if n > 1 { xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64 } else { 0.0 };
    let se = (var / n as f64).sqrt();
    MeanCi {
        n,
        mean,
        se,
        lo: mean - 2.0 * se,
        hi: mean + 2.0 * se,
    }
}

/// Wald interval for `p1 - p2` from `x1` successes in `n1` trials and `x2` in `n2`.
pub fn two_proportion_interval(x1: u64, n1: u64, x2: u64, n2: u64, z: f64) -> (f64, f64, f64) {
    let (p1, p2) = (x1 as f64 / n1 as f64, x2 as f64 / n2 as f64);
    let se = (p1 * (1.0 - p1) / n1 as f64 + p2 * (1.0 - p2) / n2 as f64).sqrt();
    let d = p1 - p2;
    (d, d - z * se, d + z * se)
}

/// Resolved configuration of an experiment, echoed into its metadata.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub kind: String,
    pub game: String,
    pub agents: Vec<String>,
    pub preplay: Budget,
    pub move_budget: Budget,
    pub seeds: Vec<u64>,
    pub threads: usize,
    pub out: Option<PathBuf>,
    /// Experiment-specific parameters.
    pub params: BTreeMap<String, serde_json::Value>,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        make_game(&self.game)?;
        for a in &self.agents {
            a.parse::<AgentSpec>()?;
        }
        if self.seeds.is_empty() {
            return Err(Error::Config("at least one seed is required".into()));
        }
        if self.threads == 0 {
            return Err(Error::Config("threads must be positive".into()));
        }
        Ok(())
    }

    pub fn agent_specs(&self) -> Result<Vec<AgentSpec>> {
        self.agents.iter().map(|a| a.parse()).collect()
    }
}

/// Writes rows as CSV to `path`, creating parent directories.
pub fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

/// Path of the JSON sidecar of a CSV output.
pub fn sidecar_path(csv: &Path) -> PathBuf {
    csv.with_extension("json")
}

/// Writes `{ "config": ..., "summary": ... }` next to the CSV.
pub fn write_metadata(csv: &Path, config: &ExperimentConfig, summary: serde_json::Value) -> Result<()> {
    let meta = serde_json::json!({ "config": config, "summary": summary });
    fs::write(sidecar_path(csv), serde_json::to_string_pretty(&meta)?)?;
    Ok(())
}

/// One tournament match from the first agent's point of view.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TournamentRow {
    pub pair: usize,
    pub agent_a: String,
    pub agent_b: String,
    pub seed: u64,
    /// Seat of agent A, 1 or 2.
    pub seat_a: u8,
    /// Normalized payoff of agent A; empty when the match desynced.
    pub payoff_a: Option<f64>,
    pub utility: Option<f64>,
    pub transcript: String,
    pub mean_move_ms: f64,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairSummary {
    pub agent_a: String,
    pub agent_b: String,
    pub matches: usize,
    pub desyncs: usize,
    pub payoff: MeanCi,
}

/// Plays `seeds.len()` matches for every pair `i < j` of `specs`, alternating seats.
pub fn run_tournament<G: Game + Clone + 'static>(
    ctx: &Arc<GameContext<G>>,
    specs: &[AgentSpec],
    preplay: Budget,
    move_budget: Budget,
    seeds: &[u64],
    threads: usize,
) -> Result<(Vec<TournamentRow>, Vec<PairSummary>)> {
    if specs.len() < 2 {
        return Err(Error::Config("a tournament needs at least two agents".into()));
    }
    let mut pairs = Vec::new();
    for i in 0..specs.len() {
        for j in i + 1..specs.len() {
            pairs.push((i, j));
        }
    }
    let mut jobs = Vec::new();
    for (k, &(i, j)) in pairs.iter().enumerate() {
        for (m, &seed) in seeds.iter().enumerate() {
            jobs.push((k, i, j, seed, if m % 2 == 0 { Player::One } else { Player::Two }));
        }
    }
    let scale = ctx.game.max_utility();
    let rows = parallel_map(&jobs, threads, |&(k, i, j, seed, seat_a)| {
        let (a, b) = (&specs[i], &specs[j]);
        let run = || -> Result<(Vec<usize>, f64, Vec<f64>)> {
            let agent_a = make_agent(a, ctx, seat_a, derive_seed(seed, 2 * k as u64), preplay)?;
            let agent_b = make_agent(b, ctx, seat_a.opponent(), derive_seed(seed, 2 * k as u64 + 1), preplay)?;
            let mut agents = if seat_a == Player::One { [agent_a, agent_b] } else { [agent_b, agent_a] };
            play_match(ctx, &mut agents, move_budget, derive_seed(seed, u64::MAX - k as u64))
        };
        let mut row = TournamentRow {
            pair: k,
            agent_a: a.to_string(),
            agent_b: b.to_string(),
            seed,
            seat_a: seat_a.index() as u8 + 1,
            payoff_a: None,
            utility: None,
            transcript: String::new(),
            mean_move_ms: 0.0,
            error: String::new(),
        };
        match run() {
            Ok((t, u, ms)) => {
                row.payoff_a = Some(seat_a.sign() * u / scale);
                row.utility = Some(u);
                row.transcript = t.iter().map(usize::to_string).collect::<Vec<_>>().join(" ");
                row.mean_move_ms = if ms.is_empty() { 0.0 } else { ms.iter().sum::<f64>() / ms.len() as f64 };
            }
            Err(e @ Error::Desync(_)) => row.error = e.to_string(),
            Err(e) => return Err(e),
        }
        Ok(row)
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    let summaries = pairs
        .iter()
        .enumerate()
        .map(|(k, &(i, j))| {
            let mine: Vec<&TournamentRow> = rows.iter().filter(|r| r.pair == k).collect();
            let xs: Vec<f64> = mine.iter().filter_map(|r| r.payoff_a).collect();
            PairSummary {
                agent_a: specs[i].to_string(),
                agent_b: specs[j].to_string(),
                matches: mine.len(),
                desyncs: mine.len() - xs.len(),
                payoff: mean_2se(&xs),
            }
        })
        .collect();
    Ok((rows, summaries))
}

/// True for public states at or above a state where `player` acts.
fn has_decision_below<G: Game>(ctx: &GameContext<G>, player: Player) -> Vec<bool> {
    let mut out: Vec<bool> = (0..ctx.public.len()).map(|s| !ctx.decisions[s][player.index()].is_empty()).collect();
    // children have larger ids than parents
    for s in (0..ctx.public.len()).rev() {
        let parent = ctx.public.states[s].parent;
        if out[s] && parent != crate::tree::NONE {
            out[parent as usize] = true;
        }
    }
    out
}

/// Runs `agent` in every public state where it acts, top-down, cloning it
/// at branches, and collects its strategy.
pub fn combined_strategy<G: Game>(ctx: &GameContext<G>, agent: Box<dyn Agent>, budget: Budget) -> Result<BehavioralStrategy> {
    let seat = agent.seat();
    let relevant = has_decision_below(ctx, seat);
    let mut out = BehavioralStrategy::new();
    let mut stack = vec![(ctx.public.root(), agent)];
    while let Some((ps, mut agent)) = stack.pop() {
        if !relevant[ps as usize] {
            continue;
        }
        if !ctx.decisions[ps as usize][seat.index()].is_empty() {
            out.extend_from(&agent.think_public(ps, budget)?);
        }
        let children: Vec<u32> = ctx.public.states[ps as usize]
            .children
            .iter()
            .copied()
            .filter(|&c| relevant[c as usize])
            .collect();
        if let Some((&last, rest)) = children.split_last() {
            for &c in rest.iter().rev() {
                stack.push((c, agent.clone()));
            }
            stack.push((last, agent));
        }
    }
    for id in ctx.tree.decision_infosets(seat) {
        let key = ctx.key(seat, id);
        if !out.contains(key) {
            return Err(Error::PartialStrategy(format!("no strategy for player {seat} infoset `{key}`")));
        }
    }
    Ok(out)
}

/// Mixes per-run strategies of `player` into the behavioural strategy of
/// picking a run uniformly and following it.
pub fn mix_strategies(tree: &GameTree, player: Player, runs: &[BehavioralStrategy]) -> BehavioralStrategy {
    let reaches: Vec<Vec<[f64; 3]>> = runs
        .iter()
        .map(|s| {
            let mut prof = Profile::default();
            prof.players[player.index()] = s.clone();
            all_reaches(tree, &DenseProfile::new(tree, &prof))
        })
        .collect();
    let mut out = BehavioralStrategy::new();
    for id in tree.decision_infosets(player) {
        let first = tree.infosets[player.index()].members[id as usize][0];
        let key = tree.infoset_key(player, id);
        let n = tree.nodes[first as usize].num_actions as usize;
        let mut num = vec![0.0; n];
        let mut den = 0.0;
        for (s, r) in runs.iter().zip(&reaches) {
            let w = r[first as usize][player.index()];
            for (x, p) in num.iter_mut().zip(s.probs(key, n)) {
                *x += w * p;
            }
            den += w;
        }
        if den > 0.0 {
            num.iter_mut().for_each(|x| *x /= den);
        } else {
            num = vec![0.0; n];
            for s in runs {
                for (x, p) in num.iter_mut().zip(s.probs(key, n)) {
                    *x += p / runs.len() as f64;
                }
            }
        }
        out.insert(key, num);
    }
    out
}

/// Expected strategy of an agent over `seeds`, in both seats.
pub fn expected_strategy<G: Game + Clone + 'static>(
    ctx: &Arc<GameContext<G>>,
    spec: &AgentSpec,
    preplay: Budget,
    move_budget: Budget,
    seeds: &[u64],
    threads: usize,
) -> Result<Profile> {
    let jobs: Vec<(Player, u64)> = Player::BOTH.iter().flat_map(|&p| seeds.iter().map(move |&s| (p, s))).collect();
    let runs = parallel_map(&jobs, threads, |&(p, seed)| {
        let agent = make_agent(spec, ctx, p, derive_seed(seed, p.index() as u64), preplay)?;
        combined_strategy(ctx, agent, move_budget)
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    let mut profile = Profile::default();
    for p in Player::BOTH {
        let mine: Vec<BehavioralStrategy> = jobs
            .iter()
            .zip(&runs)
            .filter(|((q, _), _)| *q == p)
            .map(|(_, s)| s.clone())
            .collect();
        profile.players[p.index()] = mix_strategies(&ctx.tree, p, &mine);
    }
    Ok(profile)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExploitabilityRow {
    pub agent: String,
    pub move_budget: String,
    pub seeds: usize,
    pub exploitability: f64,
}

pub fn budget_label(b: Budget) -> String {
    match b {
        Budget::Iterations(n) => format!("{n}it"),
        Budget::Millis(n) => format!("{n}ms"),
    }
}

/// Exploitability of the expected strategy of an agent.
pub fn expected_strategy_exploitability<G: Game + Clone + 'static>(
    ctx: &Arc<GameContext<G>>,
    spec: &AgentSpec,
    preplay: Budget,
    move_budget: Budget,
    seeds: &[u64],
    threads: usize,
) -> Result<f64> {
    let profile = expected_strategy(ctx, spec, preplay, move_budget, seeds, threads)?;
    Ok(exploitability(&ctx.tree, &profile))
}

/// Opponent infosets at public states where `player` acts for the second time.
///
/// Returns, per infoset key of the opponent, the frontier histories it holds.
pub fn second_decision_infosets(tree: &GameTree, public: &PublicTree, player: Player) -> BTreeMap<String, Vec<u32>> {
    let opp = player.opponent();
    let mut out: BTreeMap<String, Vec<u32>> = BTreeMap::new();
    for st in &public.states {
        if !st.has_decision(tree, player) {
            continue;
        }
        let mut before = 0;
        let mut a = st.parent;
        while a != crate::tree::NONE {
            if public.states[a as usize].has_decision(tree, player) {
                before += 1;
            }
            a = public.states[a as usize].parent;
        }
        if before != 1 {
            continue;
        }
        for &h in &st.frontier {
            out.entry(tree.key_at(h, opp).to_string()).or_default().push(h);
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityRow {
    pub t: u64,
    /// Mean over seeds of the mean over infosets of `|v_t(J) - v_T(J)|`.
    pub delta: f64,
    /// Mean over seeds of the average strategy's exploitability.
    pub exploitability: Option<f64>,
}

/// Opponent CFV stability of MCCFR from the root at increasing iteration counts.
///
/// The last checkpoint is the reference `T`.
pub fn cfv_stability<G: Game + Clone>(
    ctx: &GameContext<G>,
    checkpoints: &[u64],
    seeds: &[u64],
    epsilon: f64,
    mode: CfvMode,
    with_exploitability: bool,
    threads: usize,
) -> Result<Vec<StabilityRow>> {
    if checkpoints.is_empty() || checkpoints.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Config("checkpoints must be non-empty and strictly increasing".into()));
    }
    let omega = second_decision_infosets(&ctx.tree, &ctx.public, Player::One);
    if omega.is_empty() {
        return Err(Error::Config("player one never acts twice in this game".into()));
    }
    let per_seed = parallel_map(seeds, threads, |&seed| {
        let cfg = OsConfig {
            epsilon,
            ..OsConfig::default()
        };
        let mut solver = OsSolver::new(ctx.game.clone(), cfg, seed);
        let mut snaps = Vec::new();
        let mut expls = Vec::new();
        let mut done = 0;
        for &t in checkpoints {
            solver.run(Budget::Iterations(t - done));
            done = t;
            let vals: Vec<f64> = omega
                .values()
                .map(|hs| {
                    hs.iter()
                        .filter_map(|&h| solver.find(&ctx.tree.path(h)))
                        .filter_map(|id| solver.node_cfv(id, Player::Two, mode))
                        .sum()
                })
                .collect();
            snaps.push(vals);
            if with_exploitability {
                expls.push(exploitability(&ctx.tree, &solver.tables().average_profile()));
            }
        }
        (snaps, expls)
    });
    let k = omega.len() as f64;
    Ok(checkpoints
        .iter()
        .enumerate()
        .map(|(i, &t)| {
            let delta = per_seed
                .iter()
                .map(|(snaps, _)| {
                    let last = snaps.last().expect("non-empty");
                    snaps[i].iter().zip(last).map(|(a, b)| (a - b).abs()).sum::<f64>() / k
                })
                .sum::<f64>()
                / per_seed.len() as f64;
            let exploitability = with_exploitability
                .then(|| per_seed.iter().map(|(_, e)| e[i]).sum::<f64>() / per_seed.len() as f64);
            StabilityRow { t, delta, exploitability }
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AveragingRow {
    pub t: u64,
    pub seed: u64,
    pub arithmetic_error: f64,
    pub weighted_error: f64,
}

/// Error of arithmetic and weighted estimates of player one's root action values.
///
/// `reference` is the profile whose action values are the target, normally
/// an equilibrium. The root must be a player-one decision.
pub fn cfv_averaging<G: Game + Clone>(
    ctx: &GameContext<G>,
    reference: &Profile,
    checkpoints: &[u64],
    seeds: &[u64],
    epsilon: f64,
    threads: usize,
) -> Result<Vec<AveragingRow>> {
    if ctx.tree.nodes[0].kind != NodeKind::Decision(Player::One) {
        return Err(Error::Config("action values need a player-one decision at the root".into()));
    }
    if checkpoints.is_empty() || checkpoints.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Config("checkpoints must be non-empty and strictly increasing".into()));
    }
    let key = ctx.tree.key_at(0, Player::One).to_string();
    let n = ctx.tree.nodes[0].num_actions as usize;
    let exact: Vec<f64> = (0..n)
        .map(|a| exact_cfv_action(&ctx.tree, reference, &key, a, Player::One))
        .collect::<Result<_>>()?;
    let rows = parallel_map(seeds, threads, |&seed| {
        let cfg = OsConfig {
            epsilon,
            ..OsConfig::default()
        };
        let mut solver = OsSolver::new(ctx.game.clone(), cfg, seed);
        let mut done = 0;
        let mut rows = Vec::new();
        for &t in checkpoints {
            solver.run(Budget::Iterations(t - done));
            done = t;
            let err = |mode| {
                (0..n)
                    .map(|a| {
                        let est = solver.find(&[a]).and_then(|id| solver.node_cfv(id, Player::One, mode)).unwrap_or(0.0);
                        (est - exact[a]).abs()
                    })
                    .sum::<f64>()
                    / n as f64
            };
            rows.push(AveragingRow {
                t,
                seed,
                arithmetic_error: err(CfvMode::Arithmetic),
                weighted_error: err(CfvMode::Weighted),
            });
        }
        rows
    });
    Ok(rows.into_iter().flatten().collect())
}

pub fn median(xs: &mut [f64]) -> f64 {
    assert!(!xs.is_empty(), "median of nothing");
    xs.sort_by(f64::total_cmp);
    let m = xs.len() / 2;
    if xs.len() % 2 == 1 {
        xs[m]
    } else {
        (xs[m - 1] + xs[m]) / 2.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub epsilon: f64,
    pub seed: u64,
    pub iterations: u64,
    pub exploitability: f64,
}

/// Exploitability of MCCFR's average strategy for each exploration value.
pub fn explore_sweep<G: Game + Clone>(
    ctx: &GameContext<G>,
    epsilons: &[f64],
    iterations: u64,
    seeds: &[u64],
    threads: usize,
) -> Result<Vec<SweepRow>> {
    if let Some(e) = epsilons.iter().find(|e| !(**e > 0.0 && **e <= 1.0)) {
        return Err(Error::Config(format!("exploration {e} must lie in (0, 1]")));
    }
    let jobs: Vec<(f64, u64)> = epsilons.iter().flat_map(|&e| seeds.iter().map(move |&s| (e, s))).collect();
    Ok(parallel_map(&jobs, threads, |&(epsilon, seed)| {
        let cfg = OsConfig {
            epsilon,
            ..OsConfig::default()
        };
        let mut solver = OsSolver::new(ctx.game.clone(), cfg, seed);
        solver.run(Budget::Iterations(iterations));
        SweepRow {
            epsilon,
            seed,
            iterations,
            exploitability: exploitability(&ctx.tree, &solver.tables().average_profile()),
        }
    }))
}

/// Plays a match between a human on `input`/`output` and an agent.
///
/// Out-of-range or malformed input re-prompts; end of input aborts with an
/// I/O error.
#[allow(clippy::too_many_arguments)]
pub fn interactive_match<G: Game + Clone + 'static, R: BufRead, W: Write>(
    ctx: &Arc<GameContext<G>>,
    human: Player,
    spec: &AgentSpec,
    preplay: Budget,
    move_budget: Budget,
    seed: u64,
    mut input: R,
    mut output: W,
) -> Result<MatchRecord> {
    let game = &ctx.game;
    let mut agent = make_agent(spec, ctx, human.opponent(), seed, preplay)?;
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, 1));
    let mut s = game.root();
    let mut transcript = Vec::new();
    let mut move_ms = Vec::new();
    writeln!(output, "{}: you are player {human}, playing against {}", game.name(), agent.name())?;
    while !game.is_terminal(&s) {
        let a = match game.node_kind(&s) {
            NodeKind::Chance => {
                let probs: Vec<f64> = (0..game.num_actions(&s)).map(|a| game.chance_prob(&s, a)).collect();
                sample_action(&probs, &mut rng)
            }
            NodeKind::Decision(p) if p == human => {
                writeln!(output, "observations: {}", game.infoset_key(&s, human))?;
                for act in game.actions(&s) {
                    writeln!(output, "  [{}] {}", act.id, act.label)?;
                }
                loop {
                    write!(output, "your move> ")?;
                    output.flush()?;
                    let mut line = String::new();
                    if input.read_line(&mut line)? == 0 {
                        return Err(Error::Io(std::io::Error::new(std::io::ErrorKind::UnexpectedEof, "input closed")));
                    }
                    match line.trim().parse::<usize>() {
                        Ok(a) if a < game.num_actions(&s) => break a,
                        _ => writeln!(output, "enter an index between 0 and {}", game.num_actions(&s) - 1)?,
                    }
                }
            }
            NodeKind::Decision(p) => {
                let start = Instant::now();
                let a = agent.act(&game.infoset_key(&s, p), move_budget)?;
                move_ms.push(start.elapsed().as_secs_f64() * 1e3);
                writeln!(output, "{} plays {}", agent.name(), game.action_label(&s, a))?;
                a
            }
            NodeKind::Terminal => unreachable!(),
        };
        transcript.push(a);
        s = game.child(&s, a);
        if !game.is_terminal(&s) {
            agent.observe(&game.public_key(&s), &game.infoset_key(&s, agent.seat()))?;
        }
    }
    let utility = game.utility(&s);
    writeln!(output, "game over: your payoff is {}", human.sign() * utility)?;
    let mut agents = [String::new(), String::new()];
    agents[human.index()] = "human".into();
    agents[human.opponent().index()] = spec.to_string();
    Ok(MatchRecord {
        game: game.name(),
        agents,
        seeds: [seed, seed],
        preplay,
        move_budget,
        transcript,
        utility,
        move_ms,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domains::{Brps, Iigs, LiarsDice};
    use crate::eval::exploitability;

    #[test]
    fn two_proportion_matches_hand_computed_fixture() {
        // 60/100 vs 45/120: p1 = 0.6, p2 = 0.375, se = sqrt(0.0024 + 0.001953125)
        let (d, lo, hi) = two_proportion_interval(60, 100, 45, 120, Z95);
        let se = (0.0024f64 + 0.001953125).sqrt();
        assert!((d - 0.225).abs() < 1e-12);
        assert!((lo - (0.225 - Z95 * se)).abs() < 1e-12);
        assert!((hi - (0.225 + Z95 * se)).abs() < 1e-12);
        assert!((lo - 0.095_685_072_676).abs() < 1e-10, "{lo}");
    }

    #[test]
    fn mean_2se_of_fixture() {
        let m = mean_2se(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(m.mean, 2.5);
        let se = (5.0f64 / 3.0 / 4.0).sqrt();
        assert!((m.se - se).abs() < 1e-12);
        assert!((m.hi - m.lo - 4.0 * se).abs() < 1e-12);
    }

    #[test]
    fn random_vs_random_on_brps_has_matrix_mean() {
        let ctx = GameContext::new(Brps).unwrap();
        let rnd: AgentSpec = "rnd".parse().unwrap();
        let seeds: Vec<u64> = (0..4000).collect();
        let (rows, sum) =
            run_tournament(&ctx, &[rnd.clone(), rnd], Budget::Iterations(0), Budget::Iterations(0), &seeds, 4).unwrap();
        assert_eq!(rows.len(), 4000);
        // seat-averaged payoff of agent A is 0 by symmetry of alternation; check seat-one rows instead
        let p1: Vec<f64> = rows.iter().filter(|r| r.seat_a == 1).filter_map(|r| r.payoff_a).collect();
        let m = mean_2se(&p1);
        assert!(m.lo - 0.03 < 0.11 && 0.11 < m.hi + 0.03, "{m:?}");
        assert_eq!(sum[0].desyncs, 0);
        for r in &rows {
            let t: Vec<usize> = r.transcript.split(' ').map(|x| x.parse().unwrap()).collect();
            assert_eq!(replay_utility(&Brps, &t).unwrap(), r.utility.unwrap());
        }
    }

    #[test]
    fn tournament_is_deterministic_across_thread_counts() {
        let ctx = GameContext::new(Iigs::new(3).unwrap()).unwrap();
        let specs: Vec<AgentSpec> = ["mccr:reset", "rnd"].iter().map(|s| s.parse().unwrap()).collect();
        let seeds = [1, 2, 3, 4];
        let a = run_tournament(&ctx, &specs, Budget::Iterations(50), Budget::Iterations(20), &seeds, 1).unwrap();
        let b = run_tournament(&ctx, &specs, Budget::Iterations(50), Budget::Iterations(20), &seeds, 3).unwrap();
        let strip = |rows: Vec<TournamentRow>| rows.into_iter().map(|r| (r.transcript, r.payoff_a)).collect::<Vec<_>>();
        assert_eq!(strip(a.0), strip(b.0));
    }

    #[test]
    fn random_agent_expected_strategy_is_uniform() {
        let ctx = GameContext::new(Iigs::new(3).unwrap()).unwrap();
        let rnd: AgentSpec = "rnd".parse().unwrap();
        let e = expected_strategy_exploitability(&ctx, &rnd, Budget::Iterations(0), Budget::Iterations(0), &[1, 2], 2).unwrap();
        let u = exploitability(&ctx.tree, &Profile::uniform());
        assert!((e - u).abs() < 1e-12);
    }

    #[test]
    fn mixing_is_the_reach_weighted_average() {
        // B-RPS has a single infoset per player, so mixing is the plain mean
        let tree = GameTree::build(&Brps);
        let key = Brps.infoset_key(&Brps.root(), Player::One);
        let mut a = BehavioralStrategy::new();
        a.insert(key.clone(), vec![1.0, 0.0, 0.0]);
        let mut b = BehavioralStrategy::new();
        b.insert(key.clone(), vec![0.0, 0.5, 0.5]);
        let m = mix_strategies(&tree, Player::One, &[a, b]);
        assert_eq!(m.get(&key).unwrap(), &[0.5, 0.25, 0.25]);
    }

    #[test]
    fn mccr_expected_strategy_is_complete_on_small_ld() {
        let ctx = GameContext::new(LiarsDice::new(1, 1, 3).unwrap()).unwrap();
        let spec: AgentSpec = "mccr:reset".parse().unwrap();
        let p = expected_strategy(&ctx, &spec, Budget::Iterations(200), Budget::Iterations(200), &[5], 2).unwrap();
        for pl in Player::BOTH {
            for id in ctx.tree.decision_infosets(pl) {
                let probs = p.get(pl).get(ctx.key(pl, id)).unwrap();
                assert!((probs.iter().sum::<f64>() - 1.0).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn stability_is_zero_at_final_checkpoint_and_deterministic() {
        let ctx = GameContext::new(LiarsDice::new(1, 1, 3).unwrap()).unwrap();
        let a = cfv_stability(&ctx, &[100, 1000], &[1, 2], 0.6, CfvMode::Weighted, true, 2).unwrap();
        assert_eq!(a.last().unwrap().delta, 0.0);
        assert!(a[0].delta > 0.0);
        assert_eq!(a, cfv_stability(&ctx, &[100, 1000], &[1, 2], 0.6, CfvMode::Weighted, true, 1).unwrap());
    }

    #[test]
    fn averaging_single_iteration_schemes_agree() {
        // after one iteration each history was sampled at most once per pass,
        // so both estimators see the same single sample
        let ctx = GameContext::new(Brps).unwrap();
        let rows = cfv_averaging(&ctx, &Profile::uniform(), &[1], &[3], 0.6, 1).unwrap();
        assert_eq!(rows.len(), 1);
        assert!(rows[0].arithmetic_error.is_finite() && rows[0].weighted_error.is_finite());
    }

    #[test]
    fn interactive_reprompts_and_records_a_replayable_match() {
        let g = LiarsDice::new(1, 1, 3).unwrap();
        let ctx = GameContext::new(g).unwrap();
        let spec: AgentSpec = "rnd".parse().unwrap();
        // bad inputs first, then always bid the last legal action (call when possible)
        let script = "x\n99\n".to_string() + &"0\n".repeat(40);
        let mut out = Vec::new();
        let rec = interactive_match(&ctx, Player::One, &spec, Budget::Iterations(0), Budget::Iterations(0), 4, script.as_bytes(), &mut out)
            .unwrap();
        let text = String::from_utf8(out).unwrap();
        assert!(text.contains("enter an index"));
        assert_eq!(replay_utility(&g, &rec.transcript).unwrap(), rec.utility);
        // closed input aborts
        let r = interactive_match(&ctx, Player::One, &spec, Budget::Iterations(0), Budget::Iterations(0), 4, "".as_bytes(), Vec::new());
        assert!(matches!(r, Err(Error::Io(_))));
    }

    #[test]
    fn config_validation() {
        let mut c = ExperimentConfig {
            kind: "tournament".into(),
            game: "IIGS(3)".into(),
            agents: vec!["mccr".into(), "rnd".into()],
            preplay: Budget::Iterations(1),
            move_budget: Budget::Iterations(1),
            seeds: vec![1],
            threads: 1,
            out: None,
            params: BTreeMap::new(),
        };
        c.validate().unwrap();
        c.agents.push("bogus".into());
        assert!(c.validate().is_err());
        c.agents.pop();
        c.seeds.clear();
        assert!(c.validate().is_err());
    }
}

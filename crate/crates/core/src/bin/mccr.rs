//! Command-line driver for solving, matches and experiments.
//!
//! Exit codes: 0 on success, 2 on configuration errors, 3 when a run aborts.

use std::collections::BTreeMap;
use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::json;

use mccr::agent::{AgentSpec, GameContext};
use mccr::domains::make_game;
use mccr::eval::exploitability;
use mccr::harness::{
    self, budget_label, cfv_averaging, cfv_stability, explore_sweep, expected_strategy_exploitability, median,
    run_tournament, ExperimentConfig, ExploitabilityRow,
};
use mccr::solver::{Budget, CfvMode, Cfr, OsConfig, OsSolver};
use mccr::tree::GameTree;
use mccr::{with_game, Error, Game, Player};

#[derive(Parser)]
#[command(name = "mccr", version, about = "Continual resolving with Monte Carlo CFR")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve a game from the root and report exploitability.
    Solve(SolveArgs),
    /// Play matches between every pair of agents, alternating seats.
    Tournament(Common),
    /// Exploitability of each agent's expected strategy.
    Exploitability(ExplArgs),
    /// Stability of opponent counterfactual values under MCCFR.
    CfvStability(CheckpointArgs),
    /// Arithmetic versus weighted averaging of sampled values.
    CfvAveraging(AveragingArgs),
    /// Exploitability of MCCFR for several exploration values.
    ExploreSweep(SweepArgs),
    /// Play against an agent on the terminal.
    Play(PlayArgs),
}

#[derive(Args, Clone)]
struct Common {
    /// Game spec: B-RPS, IIGS(N), LD(d1,d2,f), GP(t,c,r,b), PTTT.
    #[arg(long)]
    game: String,
    /// Agent spec such as `mccr:keep:eps=0.6`; repeat for several agents.
    #[arg(long = "agent")]
    agents: Vec<String>,
    #[arg(long, conflicts_with = "preplay_iters")]
    preplay_ms: Option<u64>,
    #[arg(long)]
    preplay_iters: Option<u64>,
    #[arg(long, conflicts_with = "move_iters")]
    move_ms: Option<u64>,
    #[arg(long)]
    move_iters: Option<u64>,
    /// Seeds: a count `N` (0..N), a range `a..b`, or a list `a,b,c`.
    #[arg(long, default_value = "10")]
    seeds: String,
    /// CSV output path; a JSON sidecar is written next to it.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Args)]
struct SolveArgs {
    #[arg(long)]
    game: String,
    /// `os` for outcome-sampling MCCFR, `cfr` for vanilla CFR.
    #[arg(long, default_value = "os")]
    algo: String,
    #[arg(long, default_value_t = 100_000)]
    iters: u64,
    #[arg(long, default_value_t = 0.6)]
    eps: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Writes the average strategy as text.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ExplArgs {
    #[command(flatten)]
    common: Common,
    /// Per-move iteration budgets to sweep, comma separated; overrides --move-iters.
    #[arg(long, value_delimiter = ',')]
    move_iters_list: Vec<u64>,
}

#[derive(Args)]
struct CheckpointArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, value_delimiter = ',', default_value = "1000,10000,100000,1000000")]
    checkpoints: Vec<u64>,
    #[arg(long, default_value_t = 0.6)]
    eps: f64,
    /// Also record the average strategy's exploitability at each checkpoint.
    #[arg(long)]
    with_expl: bool,
    /// Value estimator: weighted, arith or crp.
    #[arg(long, default_value = "weighted")]
    cfv: String,
}

#[derive(Args)]
struct AveragingArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, value_delimiter = ',', default_value = "1000,10000,100000,1000000")]
    checkpoints: Vec<u64>,
    #[arg(long, default_value_t = 0.6)]
    eps: f64,
    /// Vanilla CFR iterations for the reference equilibrium.
    #[arg(long, default_value_t = 100_000)]
    ref_iters: u64,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, value_delimiter = ',', default_value = "0.1,0.2,0.4,0.6,0.8,1.0")]
    eps: Vec<f64>,
    #[arg(long, default_value_t = 100_000)]
    iters: u64,
}

#[derive(Args)]
struct PlayArgs {
    #[command(flatten)]
    common: Common,
    /// Your seat, 1 or 2.
    #[arg(long, default_value_t = 1)]
    seat: u8,
}

fn parse_seeds(s: &str) -> Result<Vec<u64>, Error> {
    let bad = || Error::Config(format!("cannot parse seeds `{s}`"));
    if let Some((a, b)) = s.split_once("..") {
        let (a, b): (u64, u64) = (a.trim().parse().map_err(|_| bad())?, b.trim().parse().map_err(|_| bad())?);
        return if a < b { Ok((a..b).collect()) } else { Err(bad()) };
    }
    if s.contains(',') {
        return s.split(',').map(|t| t.trim().parse().map_err(|_| bad())).collect();
    }
    let n: u64 = s.trim().parse().map_err(|_| bad())?;
    if n == 0 {
        return Err(bad());
    }
    Ok((0..n).collect())
}

fn parse_cfv_mode(s: &str) -> Result<CfvMode, Error> {
    match s {
        "weighted" => Ok(CfvMode::Weighted),
        "arith" | "arithmetic" => Ok(CfvMode::Arithmetic),
        "crp" => Ok(CfvMode::CrpUnbiased),
        other => Err(Error::Config(format!("unknown cfv mode `{other}`"))),
    }
}

fn budget(ms: Option<u64>, iters: Option<u64>, default: Budget) -> Budget {
    match (ms, iters) {
        (Some(ms), _) => Budget::Millis(ms),
        (None, Some(n)) => Budget::Iterations(n),
        (None, None) => default,
    }
}

impl Common {
    fn config(&self, kind: &str, params: BTreeMap<String, serde_json::Value>) -> Result<ExperimentConfig, Error> {
        let cfg = ExperimentConfig {
            kind: kind.into(),
            game: make_game(&self.game)?.name(),
            agents: self.agents.clone(),
            preplay: budget(self.preplay_ms, self.preplay_iters, Budget::Millis(300)),
            move_budget: budget(self.move_ms, self.move_iters, Budget::Millis(100)),
            seeds: parse_seeds(&self.seeds)?,
            threads: self.threads.unwrap_or_else(harness::default_threads),
            out: self.out.clone(),
            params,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Writes rows to the configured CSV, or stdout when none is set.
fn emit<T: Serialize>(cfg: &ExperimentConfig, rows: &[T], summary: serde_json::Value) -> Result<(), Error> {
    match &cfg.out {
        Some(path) => {
            harness::write_csv(path, rows)?;
            harness::write_metadata(path, cfg, summary.clone())?;
            eprintln!("wrote {} rows to {}", rows.len(), path.display());
        }
        None => {
            let mut w = csv::Writer::from_writer(io::stdout());
            for r in rows {
                w.serialize(r)?;
            }
            w.flush()?;
        }
    }
    eprintln!("{}", serde_json::to_string_pretty(&summary)?);
    Ok(())
}

fn context<G: Game>(game: G) -> Result<Arc<GameContext<G>>, Error> {
    GameContext::new(game)
}

fn run(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Solve(a) => {
            let game = make_game(&a.game)?;
            with_game!(game, g => {
                let tree = GameTree::build_limited(&g, mccr::agent::MAX_CONTEXT_NODES)?;
                let profile = match a.algo.as_str() {
                    "cfr" => {
                        let mut cfr = Cfr::new(&tree);
                        cfr.iterate(a.iters);
                        cfr.average_profile()
                    }
                    "os" => {
                        if !(a.eps > 0.0 && a.eps <= 1.0) {
                            return Err(Error::Config(format!("exploration {} must lie in (0, 1]", a.eps)));
                        }
                        let cfg = OsConfig { epsilon: a.eps, ..OsConfig::default() };
                        let mut s = OsSolver::new(g, cfg, a.seed);
                        s.run(Budget::Iterations(a.iters));
                        s.tables().average_profile()
                    }
                    other => return Err(Error::Config(format!("unknown algorithm `{other}`"))),
                };
                println!("{}\t{}\t{}", g.name(), a.iters, exploitability(&tree, &profile));
                if let Some(path) = a.out {
                    let mut f = std::fs::File::create(path)?;
                    for p in Player::BOTH {
                        profile.get(p).write_text(&mut f)?;
                    }
                }
                Ok(())
            })
        }
        Command::Tournament(c) => {
            let cfg = c.config("tournament", BTreeMap::new())?;
            let specs = cfg.agent_specs()?;
            with_game!(make_game(&cfg.game)?, g => {
                let ctx = context(g)?;
                let (rows, summary) = run_tournament(&ctx, &specs, cfg.preplay, cfg.move_budget, &cfg.seeds, cfg.threads)?;
                emit(&cfg, &rows, json!(summary))
            })
        }
        Command::Exploitability(a) => {
            let budgets: Vec<Budget> = if a.move_iters_list.is_empty() {
                vec![budget(a.common.move_ms, a.common.move_iters, Budget::Millis(100))]
            } else {
                a.move_iters_list.iter().map(|&n| Budget::Iterations(n)).collect()
            };
            let mut params = BTreeMap::new();
            params.insert("move_budgets".into(), json!(budgets));
            let cfg = a.common.config("exploitability", params)?;
            let specs = cfg.agent_specs()?;
            if specs.is_empty() {
                return Err(Error::Config("at least one --agent is required".into()));
            }
            with_game!(make_game(&cfg.game)?, g => {
                let ctx = context(g)?;
                let mut rows = Vec::new();
                for spec in &specs {
                    for &b in &budgets {
                        let e = expected_strategy_exploitability(&ctx, spec, cfg.preplay, b, &cfg.seeds, cfg.threads)?;
                        rows.push(ExploitabilityRow {
                            agent: spec.to_string(),
                            move_budget: budget_label(b),
                            seeds: cfg.seeds.len(),
                            exploitability: e,
                        });
                    }
                }
                emit(&cfg, &rows, json!(rows))
            })
        }
        Command::CfvStability(a) => {
            let mut params = BTreeMap::new();
            params.insert("checkpoints".into(), json!(a.checkpoints));
            params.insert("eps".into(), json!(a.eps));
            params.insert("cfv".into(), json!(a.cfv));
            let mode = parse_cfv_mode(&a.cfv)?;
            let cfg = a.common.config("cfv-stability", params)?;
            with_game!(make_game(&cfg.game)?, g => {
                let ctx = context(g)?;
                let rows = cfv_stability(&ctx, &a.checkpoints, &cfg.seeds, a.eps, mode, a.with_expl, cfg.threads)?;
                emit(&cfg, &rows, json!(rows))
            })
        }
        Command::CfvAveraging(a) => {
            let mut params = BTreeMap::new();
            params.insert("checkpoints".into(), json!(a.checkpoints));
            params.insert("eps".into(), json!(a.eps));
            params.insert("ref_iters".into(), json!(a.ref_iters));
            let cfg = a.common.config("cfv-averaging", params)?;
            with_game!(make_game(&cfg.game)?, g => {
                let ctx = context(g)?;
                let mut cfr = Cfr::new(&ctx.tree);
                cfr.iterate(a.ref_iters);
                let reference = cfr.average_profile();
                let rows = cfv_averaging(&ctx, &reference, &a.checkpoints, &cfg.seeds, a.eps, cfg.threads)?;
                let summary: Vec<_> = a
                    .checkpoints
                    .iter()
                    .map(|&t| {
                        let mut ar: Vec<f64> = rows.iter().filter(|r| r.t == t).map(|r| r.arithmetic_error).collect();
                        let mut we: Vec<f64> = rows.iter().filter(|r| r.t == t).map(|r| r.weighted_error).collect();
                        json!({ "t": t, "median_arithmetic": median(&mut ar), "median_weighted": median(&mut we) })
                    })
                    .collect();
                emit(&cfg, &rows, json!(summary))
            })
        }
        Command::ExploreSweep(a) => {
            let mut params = BTreeMap::new();
            params.insert("eps".into(), json!(a.eps));
            params.insert("iters".into(), json!(a.iters));
            let cfg = a.common.config("explore-sweep", params)?;
            with_game!(make_game(&cfg.game)?, g => {
                let ctx = context(g)?;
                let rows = explore_sweep(&ctx, &a.eps, a.iters, &cfg.seeds, cfg.threads)?;
                emit(&cfg, &rows, json!({ "rows": rows.len() }))
            })
        }
        Command::Play(a) => {
            let human = match a.seat {
                1 => Player::One,
                2 => Player::Two,
                s => return Err(Error::Config(format!("seat must be 1 or 2, got {s}"))),
            };
            let cfg = a.common.config("play", BTreeMap::new())?;
            let spec: AgentSpec = cfg
                .agents
                .first()
                .ok_or_else(|| Error::Config("--agent is required".into()))?
                .parse()?;
            with_game!(make_game(&cfg.game)?, g => {
                let ctx = context(g)?;
                let stdin = io::stdin();
                let rec = harness::interactive_match(
                    &ctx, human, &spec, cfg.preplay, cfg.move_budget, cfg.seeds[0], stdin.lock(), io::stdout(),
                )?;
                if let Some(path) = &cfg.out {
                    std::fs::write(path, serde_json::to_string_pretty(&rec)?)?;
                }
                io::stdout().flush()?;
                Ok(())
            })
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Config(_) | Error::UnknownGame(_) | Error::ParameterOutOfRange(_) | Error::Parse(_) => ExitCode::from(2),
                _ => ExitCode::from(3),
            }
        }
    }
}

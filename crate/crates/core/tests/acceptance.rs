//! Acceptance criteria AC1 to AC12.
//!
//! Every test writes one `ACn PASS` or `ACn FAIL` line with its measurements
//! straight to stdout, so the lines survive output capture. A criterion that
//! fails also fails its test.
//!
//! AC10 runs the LD(1,1,6) half at per-move budgets 1e3 and 1e4 by default;
//! set `MCCR_SLOW=1` for the 1e5 budget, which takes about an hour on one core.

use std::collections::HashMap;
use std::io::Write;
use std::sync::Arc;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use mccr::agent::{AgentSpec, GameContext};
use mccr::domains::{Brps, ExplicitGame, GenericPoker, Iigs, LiarsDice};
use mccr::eval::{
    all_reaches, exact_cfv, exact_cfv_action, expected_utility, exploitability, player_exploitability, random_profile,
    reach_probabilities, DenseProfile,
};
use mccr::gadget::{combine_strategy, exact_frontier, in_subtree, GadgetGame, RootMode};
use mccr::harness::{
    cfv_averaging, cfv_stability, combined_strategy, default_threads, expected_strategy_exploitability, make_agent,
    median, mix_strategies, run_tournament,
};
use mccr::public::PublicTree;
use mccr::resolving::mccr_bound;
use mccr::solver::{
    enumerate_outcomes, pick_with, sampled_average_utility, Budget, Cfr, CfvMode, CrpTracker, OsConfig, OsSolver,
};
use mccr::strategy::{BehavioralStrategy, Profile};
use mccr::tree::{count_tree, GameTree};
use mccr::{Game, NodeKind, Player};

fn report(id: &str, pass: bool, detail: impl AsRef<str>) {
    let line = format!("\n{id} {} {}\n", if pass { "PASS" } else { "FAIL" }, detail.as_ref());
    let mut out = std::io::stdout().lock();
    out.write_all(line.as_bytes()).unwrap();
    out.flush().unwrap();
    assert!(pass, "{id} not met");
}

fn slow_suite() -> bool {
    std::env::var("MCCR_SLOW").is_ok_and(|v| v == "1")
}

/// Game value of B-RPS for player one.
const BRPS_VALUE: f64 = 11.0 / 34.0;
/// Utility range of B-RPS.
const BRPS_SPREAD: f64 = 101.0;

fn brps_equilibrium() -> Profile {
    let key = |p| Brps.infoset_key(&Brps.root(), p);
    let mut s1 = BehavioralStrategy::new();
    s1.insert(key(Player::One), vec![1.0 / 102.0, 67.0 / 102.0, 34.0 / 102.0]);
    let h = Brps.child(&Brps.root(), 0);
    let mut s2 = BehavioralStrategy::new();
    s2.insert(Brps.infoset_key(&h, Player::Two), vec![34.0 / 102.0, 67.0 / 102.0, 1.0 / 102.0]);
    Profile::new(s1, s2)
}

#[test]
fn ac01_tree_sizes() {
    let mut detail = Vec::new();
    let mut pass = true;
    let mut check = |name: &str, expect: u64, count: &dyn Fn() -> u64| {
        let start = Instant::now();
        let got = count();
        let secs = start.elapsed().as_secs_f64();
        pass &= got == expect && secs < 60.0;
        detail.push(format!("{name}={got} (want {expect}, {secs:.1}s)"));
    };
    check("IIGS(5)", 41331, &|| count_tree(&Iigs::new(5).unwrap()).decisions as u64);
    check("GP(3,3,2,2)", 23760, &|| count_tree(&GenericPoker::new(3, 3, 2, 2).unwrap()).decisions as u64);
    check("LD(1,1,6)", 147456, &|| count_tree(&LiarsDice::new(1, 1, 6).unwrap()).decisions as u64);
    report("AC1", pass, detail.join(" "));
}

/// The chain game's two iterates: always right, then right with 1/2, 1/3, 1/5, 1/7.
fn chain_iterates(tree: &GameTree) -> [Profile; 2] {
    let mut out = [Profile::default(), Profile::default()];
    for (t, right) in [[1.0; 4], [1.0 / 2.0, 1.0 / 3.0, 1.0 / 5.0, 1.0 / 7.0]].iter().enumerate() {
        let mut node = 0u32;
        for (d, r) in right.iter().enumerate() {
            let p = Player::from_index(d % 2);
            out[t].players[p.index()].insert(tree.key_at(node, p), vec![1.0 - r, *r]);
            node = tree.child(node, 1);
        }
    }
    out
}

#[test]
fn ac02_chain_average_and_fixed_weightings() {
    let g = ExplicitGame::right_chain();
    let tree = GameTree::build(&g);
    let iterates = chain_iterates(&tree);
    let mut avg = Profile::default();
    for p in Player::BOTH {
        let runs: Vec<BehavioralStrategy> = iterates.iter().map(|s| s.get(p).clone()).collect();
        avg.players[p.index()] = mix_strategies(&tree, p, &runs);
    }
    let mut err: f64 = 0.0;
    let mut node = 0u32;
    for (d, want) in [3.0 / 4.0, 2.0 / 3.0, 11.0 / 15.0, 11.0 / 14.0].iter().enumerate() {
        let p = Player::from_index(d % 2);
        err = err.max((avg.get(p).prob(tree.key_at(node, p), 1, 2) - want).abs());
        node = tree.child(node, 1);
    }
    let h2 = tree.child(tree.child(0, 1), 1);
    let u_avg = expected_utility(&tree, &avg, h2);
    let u: Vec<f64> = iterates.iter().map(|s| expected_utility(&tree, s, h2)).collect();
    let own: Vec<f64> = iterates.iter().map(|s| reach_probabilities(&tree, s, h2).0).collect();
    let arith = (u[0] + u[1]) / 2.0;
    let own_weighted = (own[0] * u[0] + own[1] * u[1]) / (own[0] + own[1]);
    err = err
        .max((u_avg - 121.0 / 210.0).abs())
        .max((arith - 108.0 / 210.0).abs())
        .max((own_weighted - 142.0 / 210.0).abs());
    report(
        "AC2",
        err < 1e-12,
        format!("u(h2)={u_avg:.15} arithmetic={arith:.15} own-reach={own_weighted:.15} max_err={err:.1e}"),
    );
}

#[test]
fn ac03_cumulative_reach_estimator_is_unbiased() {
    let g = ExplicitGame::right_chain();
    let tree = GameTree::build(&g);
    let iterates = chain_iterates(&tree);
    let dense: Vec<DenseProfile> = iterates.iter().map(|s| DenseProfile::new(&tree, s)).collect();
    let reach: Vec<Vec<[f64; 3]>> = dense.iter().map(|d| all_reaches(&tree, d)).collect();
    let mut tracker = CrpTracker::new(&tree);
    let mut crp = Vec::new();
    for d in &dense {
        tracker.push(&tree, d);
        crp.push((0..tree.len() as u32).map(|n| tracker.crp(n)).collect::<Vec<_>>());
    }
    let h2 = tree.child(tree.child(0, 1), 1);
    let denom = crp[1][h2 as usize][0] * crp[1][h2 as usize][1];
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let trials = 100_000;
    let mut sum = 0.0;
    for _ in 0..trials {
        let mut est = 0.0;
        for t in 0..2 {
            // uniform sampling below h2
            let (mut z, mut q) = (h2, 1.0);
            while tree.nodes[z as usize].kind != NodeKind::Terminal {
                let n = tree.nodes[z as usize].num_actions as usize;
                z = tree.child(z, pick_with(rng.gen(), &vec![1.0 / n as f64; n]));
                q /= n as f64;
            }
            let r = reach[t][z as usize];
            let chance_below = r[2] / reach[t][h2 as usize][2];
            est += sampled_average_utility([r[0], r[1]], crp[t][z as usize], chance_below, tree.nodes[z as usize].utility, q);
        }
        sum += est / denom;
    }
    let mean = sum / trials as f64;
    let want = 121.0 / 210.0;
    report("AC3", (mean - want).abs() <= 0.01, format!("mean={mean:.5} want={want:.5} trials={trials}"));
}

#[test]
fn ac04_gadget_preserves_opponent_values() {
    let g = LiarsDice::new(1, 1, 4).unwrap();
    let tree = GameTree::build(&g);
    let pt = PublicTree::build(&tree);
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let (mut worst, mut done, mut skipped): (f64, usize, usize) = (0.0, 0, 0);
    let mut trial = 0;
    while done < 100 {
        trial += 1;
        let resolver = Player::from_index(trial % 2);
        let opp = resolver.opponent();
        let sigma = random_profile(&tree, &mut rng);
        let candidates: Vec<u32> = (0..pt.len() as u32).filter(|&s| pt.states[s as usize].has_decision(&tree, resolver)).collect();
        let ps = candidates[rng.gen_range(0..candidates.len())];
        let hist = exact_frontier(&g, &tree, &pt, ps, &sigma, resolver);
        let values: HashMap<String, f64> = hist.iter().map(|h| (g.infoset_key(&h.state, opp), rng.gen_range(-1.0..1.0))).collect();
        let mode = if trial % 4 < 2 { RootMode::Plain } else { RootMode::Epsilon(1e-3) };
        let Ok(gad) = GadgetGame::new(g, resolver, pt.states[ps as usize].key.clone(), hist, &values, mode) else {
            skipped += 1;
            continue;
        };
        let gt = GameTree::build(&gad);
        let rho = random_profile(&gt, &mut rng);
        let combined = combine_strategy(&tree, &pt, ps, &sigma, &rho).unwrap();
        for (id, key) in tree.infosets[opp.index()].keys.iter().enumerate() {
            let first = tree.infosets[opp.index()].members[id][0];
            if !in_subtree(&pt, ps, tree.nodes[first as usize].public_state) || gt.infosets[opp.index()].id(key).is_none() {
                continue;
            }
            let base = exact_cfv(&tree, &combined, key, opp).unwrap();
            let gadget = exact_cfv(&gt, &rho, key, opp).unwrap();
            worst = worst.max((base - gadget).abs());
        }
        done += 1;
    }
    report("AC4", worst < 1e-9, format!("trials={done} skipped_unreachable={skipped} max_dev={worst:.2e}"));
}

#[test]
fn ac05_exact_resolving_is_unexploitable() {
    let start = Instant::now();
    let g = Iigs::new(4).unwrap();
    let tree = GameTree::build(&g);
    let pt = PublicTree::build(&tree);
    let mut cfr = Cfr::new(&tree);
    cfr.iterate(20_000);
    let ne = cfr.average_profile();
    let base = player_exploitability(&tree, &ne, Player::One, 0.0);
    let mut worst: f64 = 0.0;
    let mut resolved = 0;
    for ps in 0..pt.len() as u32 {
        if ps == pt.root() || !pt.states[ps as usize].has_decision(&tree, Player::One) {
            continue;
        }
        let hist = exact_frontier(&g, &tree, &pt, ps, &ne, Player::One);
        let values: HashMap<String, f64> = hist
            .iter()
            .map(|h| {
                let key = g.infoset_key(&h.state, Player::Two);
                let v = exact_cfv(&tree, &ne, &key, Player::Two).unwrap();
                (key, v)
            })
            .collect();
        let Ok(gad) = GadgetGame::new(g, Player::One, pt.states[ps as usize].key.clone(), hist, &values, RootMode::Plain)
        else {
            continue;
        };
        let gt = GameTree::build(&gad);
        let mut sub = Cfr::new(&gt);
        sub.iterate(20_000);
        let combined = combine_strategy(&tree, &pt, ps, &ne, &sub.average_profile()).unwrap();
        worst = worst.max(player_exploitability(&tree, &combined, Player::One, 0.0));
        resolved += 1;
    }
    let secs = start.elapsed().as_secs_f64();
    report(
        "AC5",
        resolved > 0 && worst < 1e-3 && secs < 600.0,
        format!("public_states={resolved} max_expl1={worst:.2e} (before resolving {base:.2e}) {secs:.0}s"),
    );
}

fn warmed<G: Game + Clone>(g: &G, iters: u64) -> OsSolver<G> {
    let cfg = OsConfig {
        prebuilt: true,
        ..OsConfig::default()
    };
    let mut s = OsSolver::new(g.clone(), cfg, 7);
    s.run(Budget::Iterations(iters));
    s
}

/// Largest gap between the expected one-pass regret increment and the exact
/// instantaneous regret, over both update players.
fn regret_bias<G: Game + Clone>(g: &G, solver: &OsSolver<G>) -> f64 {
    let tree = GameTree::build(g);
    let profile = solver.tables().current_profile();
    let mut worst: f64 = 0.0;
    for update in Player::BOTH {
        let outcomes = enumerate_outcomes(|sm| {
            let mut s = solver.clone();
            s.pass(update, sm);
            s.into_tables()
        });
        for key in solver.tables().keys(update) {
            let before = solver.tables().regrets(update, key).unwrap();
            let v = exact_cfv(&tree, &profile, key, update).unwrap();
            for (a, b) in before.iter().enumerate() {
                let exact = exact_cfv_action(&tree, &profile, key, a, update).unwrap() - v;
                let expect: f64 = outcomes.iter().map(|(p, t)| p * (t.regrets(update, key).unwrap()[a] - b)).sum();
                worst = worst.max((expect - exact).abs());
            }
        }
    }
    worst
}

#[test]
fn ac06_outcome_sampling_is_unbiased() {
    let brps = regret_bias(&Brps, &warmed(&Brps, 50));
    let random: f64 = (0..5)
        .map(|seed| {
            let g = ExplicitGame::random_depth3(seed);
            regret_bias(&g, &warmed(&g, 40))
        })
        .fold(0.0, f64::max);
    report(
        "AC6",
        brps < 1e-9 && random < 1e-9,
        format!("B-RPS max_bias={brps:.1e} random-depth-3 (5 games) max_bias={random:.1e}"),
    );
}

/// Per-player bound on average regret after `t` outcome-sampling iterations.
fn regret_bound(p: f64, infosets: usize, delta_u: f64, actions: usize, delta: f64, t: u64) -> f64 {
    ((2.0 / p).sqrt() + 1.0) * infosets as f64 * delta_u * (actions as f64).sqrt() / (delta * (t as f64).sqrt())
}

#[test]
fn ac07_mccfr_convergence_rate_and_bound() {
    let tree = GameTree::build(&Brps);
    let (mut early, mut late) = (Vec::new(), Vec::new());
    for seed in 0..20 {
        let mut s = OsSolver::new(Brps, OsConfig::default(), seed);
        s.run(Budget::Iterations(1_000));
        early.push(exploitability(&tree, &s.tables().average_profile()));
        s.run(Budget::Iterations(99_000));
        late.push(exploitability(&tree, &s.tables().average_profile()));
    }
    let (e, l) = (median(&mut early), median(&mut late));
    // own exploration over three actions; B-RPS has no chance
    let delta = OsConfig::default().epsilon / 3.0;
    let t = 10_000;
    // exploitability is the mean of both best-response gains, each below that player's average regret
    let bound = regret_bound(0.05, 1, BRPS_SPREAD, 3, delta, t);
    let within = (100..200)
        .filter(|&seed| {
            let mut s = OsSolver::new(Brps, OsConfig::default(), seed);
            s.run(Budget::Iterations(t));
            exploitability(&tree, &s.tables().average_profile()) <= bound
        })
        .count();
    report(
        "AC7",
        l < e / 5.0 && within >= 95,
        format!("median expl T=1e3 {e:.4} T=1e5 {l:.4} ratio={:.3}; bound {bound:.2} held in {within}/100", l / e),
    );
}

#[test]
fn ac08_weighted_beats_arithmetic_averaging() {
    let ctx = GameContext::new(Brps).unwrap();
    let seeds: Vec<u64> = (0..10).collect();
    let rows = cfv_averaging(&ctx, &brps_equilibrium(), &[1_000, 1_000_000], &seeds, 0.6, default_threads()).unwrap();
    let mut arith: Vec<f64> = rows.iter().filter(|r| r.t == 1_000_000).map(|r| r.arithmetic_error).collect();
    let mut weighted: Vec<f64> = rows.iter().filter(|r| r.t == 1_000_000).map(|r| r.weighted_error).collect();
    let (a, w) = (median(&mut arith), median(&mut weighted));
    report("AC8", w < a, format!("T=1e6 over {} seeds: median weighted={w:.4} arithmetic={a:.4}", seeds.len()));
}

#[test]
fn ac09_opponent_values_stabilize() {
    let mut pass = true;
    let mut detail = Vec::new();
    let seeds = [0u64, 1];
    let checkpoints = [1_000, 100_000, 1_000_000];
    let mut run = |name: &str, rows: Vec<mccr::harness::StabilityRow>| {
        let ratio = rows[1].delta / rows[0].delta;
        pass &= ratio < 0.2;
        let e: Vec<f64> = rows.iter().map(|r| r.exploitability.unwrap()).collect();
        detail.push(format!(
            "{name}: delta 1e3={:.4} 1e5={:.4} ratio={ratio:.3} (limit 0.2); expl 1e3={:.3} 1e5={:.3} 1e6={:.3}",
            rows[0].delta, rows[1].delta, e[0], e[1], e[2]
        ));
    };
    let ld = GameContext::new(LiarsDice::new(1, 1, 6).unwrap()).unwrap();
    run("LD(1,1,6)", cfv_stability(&ld, &checkpoints, &seeds, 0.6, CfvMode::Weighted, true, default_threads()).unwrap());
    let gp = GameContext::new(GenericPoker::new(3, 3, 2, 2).unwrap()).unwrap();
    run("GP(3,3,2,2)", cfv_stability(&gp, &checkpoints, &seeds, 0.6, CfvMode::Weighted, true, default_threads()).unwrap());
    report("AC9", pass, format!("T=1e6, {} seeds; {}", seeds.len(), detail.join("; ")));
}

fn expected_expl<G: Game + Clone + 'static>(ctx: &Arc<GameContext<G>>, spec: &str, iters: u64, seeds: &[u64]) -> f64 {
    let spec: AgentSpec = spec.parse().unwrap();
    let b = Budget::Iterations(iters);
    expected_strategy_exploitability(ctx, &spec, b, b, seeds, default_threads()).unwrap()
}

#[test]
fn ac10_mccr_expected_strategy_improves_with_budget() {
    let seeds = [0u64];
    let iigs = GameContext::new(Iigs::new(5).unwrap()).unwrap();
    let i_lo = expected_expl(&iigs, "mccr:reset", 1_000, &seeds);
    let i_hi = expected_expl(&iigs, "mccr:reset", 100_000, &seeds);
    let ld = GameContext::new(LiarsDice::new(1, 1, 6).unwrap()).unwrap();
    let ld_hi_budget = if slow_suite() { 100_000 } else { 10_000 };
    let l_lo = expected_expl(&ld, "mccr:reset", 1_000, &seeds);
    let l_hi = expected_expl(&ld, "mccr:reset", ld_hi_budget, &seeds);
    let l_mccfr = expected_expl(&ld, "mccfr", ld_hi_budget, &seeds);
    report(
        "AC10",
        i_hi < i_lo && l_hi < l_lo && l_hi < l_mccfr,
        format!(
            "IIGS(5) MCCR-reset 1e3={i_lo:.4} 1e5={i_hi:.4}; LD(1,1,6) MCCR-reset 1e3={l_lo:.4} {ld_hi_budget}={l_hi:.4} \
             MCCFR {ld_hi_budget}={l_mccfr:.4}{}",
            if slow_suite() { "" } else { " (LD at 1e4; MCCR_SLOW=1 for 1e5)" }
        ),
    );
}

/// Normalized payoff of `variant` against RND, seats alternating.
fn versus_random<G: Game + Clone + 'static>(game: G, variant: &str, matches: u64) -> mccr::harness::MeanCi {
    let ctx = GameContext::new(game).unwrap();
    let specs: Vec<AgentSpec> = [variant, "rnd"].iter().map(|s| s.parse().unwrap()).collect();
    let seeds: Vec<u64> = (0..matches).collect();
    let (_, summary) = run_tournament(
        &ctx,
        &specs,
        Budget::Iterations(3_000),
        Budget::Iterations(1_000),
        &seeds,
        default_threads(),
    )
    .unwrap();
    assert_eq!(summary[0].desyncs, 0);
    summary[0].payoff
}

#[test]
fn ac11_mccr_beats_random() {
    let mut pass = true;
    let mut detail = Vec::new();
    for variant in ["mccr:keep", "mccr:reset"] {
        let results = [
            ("IIGS(5)", versus_random(Iigs::new(5).unwrap(), variant, 40)),
            ("LD(1,1,6)", versus_random(LiarsDice::new(1, 1, 6).unwrap(), variant, 100)),
            ("GP(3,3,2,2)", versus_random(GenericPoker::new(3, 3, 2, 2).unwrap(), variant, 200)),
        ];
        for (game, ci) in results {
            // RND's interval mirrors ours around zero; disjoint when lo > -lo
            let ok = ci.mean >= 0.30 && ci.lo > 0.0;
            pass &= ok;
            detail.push(format!("{variant} {game} {:+.1}% [{:+.1}, {:+.1}] n={}", 100.0 * ci.mean, 100.0 * ci.lo, 100.0 * ci.hi, ci.n));
        }
    }
    report("AC11", pass, format!("margin >= +30% of max payoff: {}", detail.join("; ")));
}

#[test]
fn ac12_mccr_exploitability_within_bound() {
    let ctx = GameContext::new(Brps).unwrap();
    let spec: AgentSpec = "mccr:reset".parse().unwrap();
    let t = 10_000;
    let delta = OsConfig::default().epsilon / 3.0;
    // player one never resolves in B-RPS, so no resolving terms enter
    let resolves = 0;
    let bound = mccr_bound(0.05, 1, BRPS_SPREAD, 3, delta, t, t, resolves);
    let runs = 50;
    let mut worst: f64 = 0.0;
    let mut within = 0;
    for seed in 0..runs {
        let agent = make_agent(&spec, &ctx, Player::One, seed, Budget::Iterations(t)).unwrap();
        let s1 = combined_strategy(&ctx, agent, Budget::Iterations(t)).unwrap();
        let e = player_exploitability(&ctx.tree, &Profile::new(s1, BehavioralStrategy::new()), Player::One, BRPS_VALUE);
        worst = worst.max(e);
        within += usize::from(e <= bound);
    }
    let need = (0.95f64.powi(resolves as i32 + 1) * runs as f64).ceil() as usize;
    report(
        "AC12",
        within >= need,
        format!("bound={bound:.3} held in {within}/{runs} (need {need}); worst expl1={worst:.4}"),
    );
}

use std::collections::HashMap;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use mccr::agent::AgentSpec;
use mccr::domains::{ExplicitGame, Iigs, LiarsDice};
use mccr::eval::{all_values, exact_cfv, exploitability, random_profile, DenseProfile};
use mccr::gadget::{combine_strategy, exact_frontier, in_subtree, GadgetGame, RootMode};
use mccr::harness::{mean_2se, mix_strategies};
use mccr::public::PublicTree;
use mccr::resolving::mccr_bound;
use mccr::solver::{Budget, OsConfig, OsSolver};
use mccr::strategy::Profile;
use mccr::tree::GameTree;
use mccr::{Game, NodeKind, Player};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn random_games_validate(seed in any::<u64>()) {
        let g = ExplicitGame::random_depth3(seed);
        let tree = GameTree::build(&g);
        prop_assert!(tree.validate().is_ok());
        let pt = PublicTree::build(&tree);
        // every non-terminal history belongs to exactly one public state
        let members: usize = pt.states.iter().map(|s| s.members.len()).sum();
        let inner = tree.nodes.iter().filter(|n| n.kind != NodeKind::Terminal).count();
        prop_assert_eq!(members, inner);
    }

    #[test]
    fn exploitability_is_non_negative(seed in any::<u64>()) {
        let g = Iigs::new(3).unwrap();
        let tree = GameTree::build(&g);
        let prof = random_profile(&tree, &mut ChaCha8Rng::seed_from_u64(seed));
        prop_assert!(exploitability(&tree, &prof) >= -1e-12);
    }

    #[test]
    fn mixing_identical_runs_is_identity(seed in any::<u64>()) {
        let g = ExplicitGame::random_depth3(seed);
        let tree = GameTree::build(&g);
        let prof = random_profile(&tree, &mut ChaCha8Rng::seed_from_u64(seed ^ 1));
        for p in Player::BOTH {
            let mixed = mix_strategies(&tree, p, &[prof.get(p).clone(), prof.get(p).clone()]);
            for (key, probs) in prof.get(p).iter() {
                for (a, x) in probs.iter().enumerate() {
                    prop_assert!((mixed.prob(key, a, probs.len()) - x).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn average_profile_value_is_bounded(seed in any::<u64>(), iters in 1u64..400) {
        let g = ExplicitGame::random_depth3(seed);
        let tree = GameTree::build(&g);
        let mut s = OsSolver::new(g.clone(), OsConfig::default(), seed);
        s.run(Budget::Iterations(iters));
        let v = all_values(&tree, &DenseProfile::new(&tree, &s.tables().average_profile()))[0];
        prop_assert!(v.abs() <= g.max_utility() + 1e-12);
        for p in Player::BOTH {
            for key in s.tables().keys(p) {
                let avg = s.tables().average(p, key).unwrap();
                prop_assert!((avg.iter().sum::<f64>() - 1.0).abs() < 1e-9);
                prop_assert!(avg.iter().all(|&x| x >= 0.0));
            }
        }
    }

    #[test]
    fn bound_shrinks_with_iterations(t in 1u64..1_000_000, n in 0u32..4) {
        let a = mccr_bound(0.05, 3, 2.0, 2, 0.1, t, t, n);
        let b = mccr_bound(0.05, 3, 2.0, 2, 0.1, 4 * t, 4 * t, n);
        prop_assert!((a - 2.0 * b).abs() <= 1e-9 * a.abs());
    }

    #[test]
    fn mean_interval_contains_mean(xs in proptest::collection::vec(-100f64..100.0, 1..50)) {
        let ci = mean_2se(&xs);
        prop_assert!(ci.lo <= ci.mean && ci.mean <= ci.hi);
        prop_assert!(xs.iter().cloned().fold(f64::MAX, f64::min) <= ci.mean + 1e-9);
    }

    #[test]
    fn agent_specs_roundtrip(eps in 0.01f64..1.0, keep in any::<bool>()) {
        let text = format!("mccr:{}:eps={eps}", if keep { "keep" } else { "reset" });
        let spec: AgentSpec = text.parse().unwrap();
        let again: AgentSpec = spec.to_string().parse().unwrap();
        prop_assert_eq!(spec, again);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn gadget_keeps_opponent_values(seed in any::<u64>(), plain in any::<bool>()) {
        let g = LiarsDice::new(1, 1, 3).unwrap();
        let tree = GameTree::build(&g);
        let pt = PublicTree::build(&tree);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let resolver = if rng.gen() { Player::One } else { Player::Two };
        let opp = resolver.opponent();
        let sigma: Profile = random_profile(&tree, &mut rng);
        let candidates: Vec<u32> = (0..pt.len() as u32).filter(|&s| pt.states[s as usize].has_decision(&tree, resolver)).collect();
        let ps = candidates[rng.gen_range(0..candidates.len())];
        let hist = exact_frontier(&g, &tree, &pt, ps, &sigma, resolver);
        let values: HashMap<String, f64> = hist.iter().map(|h| (g.infoset_key(&h.state, opp), rng.gen_range(-1.0..1.0))).collect();
        let mode = if plain { RootMode::Plain } else { RootMode::Epsilon(1e-3) };
        let gad = GadgetGame::new(g, resolver, pt.states[ps as usize].key.clone(), hist, &values, mode).unwrap();
        let gt = GameTree::build(&gad);
        let rho = random_profile(&gt, &mut rng);
        let combined = combine_strategy(&tree, &pt, ps, &sigma, &rho).unwrap();
        for (id, key) in tree.infosets[opp.index()].keys.iter().enumerate() {
            let first = tree.infosets[opp.index()].members[id][0];
            if in_subtree(&pt, ps, tree.nodes[first as usize].public_state) && gt.infosets[opp.index()].id(key).is_some() {
                let base = exact_cfv(&tree, &combined, key, opp).unwrap();
                let gadget = exact_cfv(&gt, &rho, key, opp).unwrap();
                prop_assert!((base - gadget).abs() < 1e-9, "{key}: {base} vs {gadget}");
            }
        }
    }
}

//! Benchmark domains and the spec-string factory.

mod brps;
mod explicit;
mod iigs;
mod liars_dice;
mod poker;
mod pttt;

pub use brps::{Brps, PAYOFF as BRPS_PAYOFF};
pub use explicit::{ExplicitBuilder, ExplicitGame, Obs};
pub use iigs::{Iigs, IigsState};
pub use liars_dice::{LdState, LiarsDice};
pub use poker::{Bet, GenericPoker, GpState};
pub use pttt::{Pttt, PtttState};

use crate::error::{Error, Result};

/// Any domain constructible from a spec string.
#[derive(Debug, Clone)]
pub enum AnyGame {
    Brps(Brps),
    Iigs(Iigs),
    LiarsDice(LiarsDice),
    Poker(GenericPoker),
    Pttt(Pttt),
}

/// Runs `$body` with `$g` bound to the concrete game inside an [`AnyGame`].
#[macro_export]
macro_rules! with_game {
    ($any:expr, $g:ident => $body:expr) => {
        match $any {
            $crate::domains::AnyGame::Brps($g) => $body,
            $crate::domains::AnyGame::Iigs($g) => $body,
            $crate::domains::AnyGame::LiarsDice($g) => $body,
            $crate::domains::AnyGame::Poker($g) => $body,
            $crate::domains::AnyGame::Pttt($g) => $body,
        }
    };
}

impl AnyGame {
    pub fn name(&self) -> String {
        use crate::game::Game;
        with_game!(self, g => g.name())
    }
}

fn params(spec: &str, prefix: &str, n: usize) -> Option<Vec<usize>> {
    let inner = spec.strip_prefix(prefix)?.strip_prefix('(')?.strip_suffix(')')?;
    let vals: Vec<usize> = inner.split(',').map(|t| t.trim().parse().ok()).collect::<Option<_>>()?;
    (vals.len() == n).then_some(vals)
}

/// Parses `B-RPS | IIGS(N) | LD(d1,d2,f) | GP(t,c,r,b) | PTTT`.
pub fn make_game(spec: &str) -> Result<AnyGame> {
    let s: String = spec.chars().filter(|c| !c.is_whitespace()).collect();
    let s = s.to_ascii_uppercase();
    if s == "B-RPS" || s == "BRPS" {
        return Ok(AnyGame::Brps(Brps));
    }
    if s == "PTTT" {
        return Ok(AnyGame::Pttt(Pttt));
    }
    if let Some(v) = params(&s, "IIGS", 1) {
        return Ok(AnyGame::Iigs(Iigs::new(v[0])?));
    }
    if let Some(v) = params(&s, "LD", 3) {
        return Ok(AnyGame::LiarsDice(LiarsDice::new(v[0], v[1], v[2])?));
    }
    if let Some(v) = params(&s, "GP", 4) {
        return Ok(AnyGame::Poker(GenericPoker::new(v[0], v[1], v[2], v[3])?));
    }
    Err(Error::UnknownGame(spec.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::{Game, NodeKind, Player};
    use crate::public::PublicTree;
    use crate::tree::{count_tree, GameTree};
    use std::collections::BTreeSet;

    #[test]
    fn factory_parses_and_rejects() {
        assert_eq!(make_game("IIGS(5)").unwrap().name(), "IIGS(5)");
        assert_eq!(make_game("ld(1, 1, 6)").unwrap().name(), "LD(1,1,6)");
        assert_eq!(make_game("GP(3,3,2,2)").unwrap().name(), "GP(3,3,2,2)");
        assert_eq!(make_game("B-RPS").unwrap().name(), "B-RPS");
        assert_eq!(make_game("PTTT").unwrap().name(), "PTTT");
        assert!(matches!(make_game("chess"), Err(Error::UnknownGame(_))));
        assert!(matches!(make_game("IIGS(0)"), Err(Error::ParameterOutOfRange(_))));
        assert!(matches!(make_game("LD(5,5,6)"), Err(Error::ParameterOutOfRange(_))));
        assert!(matches!(make_game("GP(3,3)"), Err(Error::UnknownGame(_))));
    }

    #[test]
    fn small_instances_validate() {
        GameTree::build(&Brps).validate().unwrap();
        GameTree::build(&Iigs::new(3).unwrap()).validate().unwrap();
        GameTree::build(&LiarsDice::new(1, 1, 3).unwrap()).validate().unwrap();
        GameTree::build(&GenericPoker::new(3, 2, 1, 1).unwrap()).validate().unwrap();
        GameTree::build(&ExplicitGame::right_chain()).validate().unwrap();
        GameTree::build(&ExplicitGame::three_frontier()).validate().unwrap();
        for seed in 0..20 {
            GameTree::build(&ExplicitGame::random_depth3(seed)).validate().unwrap();
        }
    }

    #[test]
    fn pttt_prefix_validates_and_public_tree_is_chain() {
        let tree = GameTree::build_depth_limited(&Pttt, 5);
        tree.validate().unwrap();
        let pt = PublicTree::build(&tree);
        assert!(pt.is_chain());
    }

    #[test]
    fn pttt_failed_attempt_keeps_mover() {
        let g = Pttt;
        let s = g.replay(&[4, 4]); // P1 takes 4, P2 tries cell 4
        assert_eq!(g.node_kind(&s), NodeKind::Decision(Player::Two));
        assert_eq!(g.infoset_key(&s, Player::Two), "4x/?");
        assert_eq!(g.num_actions(&s), 8);
        assert_eq!(g.infoset_key(&s, Player::One), "4+");
    }

    #[test]
    fn iigs_has_no_chance_and_various_infoset_sizes() {
        let tree = GameTree::build(&Iigs::new(4).unwrap());
        assert!(tree.nodes.iter().all(|n| n.kind != NodeKind::Chance));
        let sizes: BTreeSet<usize> = tree.infosets[1].members.iter().map(Vec::len).collect();
        assert!(sizes.len() >= 2);
    }

    #[test]
    fn liars_dice_infosets_are_uniform_in_size() {
        let g = LiarsDice::new(1, 1, 4).unwrap();
        let tree = GameTree::build(&g);
        for p in Player::BOTH {
            let sizes: BTreeSet<usize> = tree
                .decision_infosets(p)
                .iter()
                .map(|&id| tree.infosets[p.index()].members[id as usize].len())
                .collect();
            assert_eq!(sizes.len(), 1, "{p}: {sizes:?}");
        }
        // only the opening rolls are chance nodes
        for (i, n) in tree.nodes.iter().enumerate() {
            if n.kind == NodeKind::Chance {
                assert!(n.depth < 2, "chance at node {i}");
            }
        }
    }

    #[test]
    fn leduc_like_action_sets() {
        // GP(3,2,2,2): opening has check/bet1/bet2; facing bet1: fold/call/raise1/raise2
        let g = GenericPoker::new(3, 2, 2, 2).unwrap();
        let s = g.replay(&[0, 1]);
        let labels: Vec<String> = g.actions(&s).into_iter().map(|a| a.label).collect();
        assert_eq!(labels, ["check", "bet1", "bet2"]);
        let s = g.child(&s, 1);
        let labels: Vec<String> = g.actions(&s).into_iter().map(|a| a.label).collect();
        assert_eq!(labels, ["fold", "call", "raise1", "raise2"]);
        // two raises exhaust the cap
        let s = g.child(&g.child(&s, 2), 2);
        let labels: Vec<String> = g.actions(&s).into_iter().map(|a| a.label).collect();
        assert_eq!(labels, ["fold", "call"]);
        // check-check moves to the board deal
        let t = g.child(&g.child(&g.replay(&[0, 1]), 0), 0);
        assert_eq!(g.node_kind(&t), NodeKind::Chance);
        assert!((g.chance_prob(&t, 0) - 0.25).abs() < 1e-15);
        assert!((g.chance_prob(&t, 2) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn poker_showdown_and_fold_utilities() {
        let g = GenericPoker::new(3, 2, 2, 2).unwrap();
        // P1 card 2, P2 card 1; bet2, call; board 0; check, check
        let s = g.replay(&[2, 1, 2, 1, 0, 0, 0]);
        assert!(g.is_terminal(&s));
        assert_eq!(g.utility(&s), 3.0);
        // board pairs P2
        let s = g.replay(&[2, 1, 0, 0, 1, 0, 0]);
        assert_eq!(g.utility(&s), -1.0);
        // P1 bets 1, P2 raises 2, P1 folds: P1 loses ante plus bet
        let s = g.replay(&[2, 1, 1, 2, 0]);
        assert!(g.is_terminal(&s));
        assert_eq!(g.utility(&s), -2.0);
    }

    #[test]
    fn liars_dice_wild_face_and_call() {
        let g = LiarsDice::new(1, 1, 6).unwrap();
        // P1 rolls 6 (wild), P2 rolls 3; P1 bids 2x3, P2 calls
        let s = g.replay(&[5, 2, 8]);
        assert_eq!(g.action_label(&s, 0), "2x4");
        let s = g.child(&g.replay(&[5, 2]), 8);
        let call = g.num_actions(&s) - 1;
        assert_eq!(g.action_label(&s, call), "call");
        let z = g.child(&s, call);
        assert_eq!(g.utility(&z), 1.0);
    }

    #[test]
    fn brps_counts() {
        let c = count_tree(&Brps);
        assert_eq!(c.histories, 13);
        assert_eq!(c.terminals, 9);
        assert_eq!(c.decisions, 4);
    }
}

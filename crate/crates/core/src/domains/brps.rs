use crate::game::{make_key, Game, NodeKind, Player};

/// Rock-paper-scissors with one payoff raised to 100, played as a hidden first move.
#[derive(Debug, Clone, Copy, Default)]
pub struct Brps;

/// Utility of player one; rows are player one's move, columns player two's.
pub const PAYOFF: [[f64; 3]; 3] = [[0.0, -1.0, 100.0], [1.0, 0.0, -1.0], [-1.0, 1.0, 0.0]];
const LABELS: [&str; 3] = ["R", "P", "S"];

impl Game for Brps {
    type State = Vec<u8>;

    fn name(&self) -> String {
        "B-RPS".into()
    }

    fn root(&self) -> Self::State {
        Vec::new()
    }

    fn node_kind(&self, s: &Self::State) -> NodeKind {
        match s.len() {
            0 => NodeKind::Decision(Player::One),
            1 => NodeKind::Decision(Player::Two),
            _ => NodeKind::Terminal,
        }
    }

    fn num_actions(&self, s: &Self::State) -> usize {
        if s.len() < 2 {
            3
        } else {
            0
        }
    }

    fn child(&self, s: &Self::State, a: usize) -> Self::State {
        let mut c = s.clone();
        c.push(a as u8);
        c
    }

    fn chance_prob(&self, _: &Self::State, _: usize) -> f64 {
        unreachable!("no chance nodes")
    }

    fn utility(&self, s: &Self::State) -> f64 {
        PAYOFF[s[0] as usize][s[1] as usize]
    }

    fn infoset_key(&self, s: &Self::State, p: Player) -> String {
        match (s.len(), p) {
            (0, Player::One) => make_key::<&str>(&[], true),
            (0, Player::Two) => String::new(),
            (_, Player::One) => make_key(&[LABELS[s[0] as usize]], false),
            (_, Player::Two) => make_key::<&str>(&[], true),
        }
    }

    fn public_key(&self, s: &Self::State) -> String {
        if s.is_empty() {
            String::new()
        } else {
            "moved".into()
        }
    }

    fn action_label(&self, _: &Self::State, a: usize) -> String {
        LABELS[a].into()
    }

    fn max_utility(&self) -> f64 {
        100.0
    }

    fn utility_spread(&self) -> f64 {
        101.0
    }
}

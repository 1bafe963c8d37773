use crate::error::{Error, Result};
use crate::game::{make_key, Game, NodeKind, Player};

/// Goofspiel with hidden bids and an increasing point stack `0, 1, ..., N-1`.
///
/// Player one bids first, then player two without seeing the bid. Both then
/// learn only who won the round. The winner of a round scores the point card,
/// a tie discards it, and the terminal utility is the sign of the score
/// difference.
#[derive(Debug, Clone, Copy)]
pub struct Iigs {
    n: u8,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct IigsState {
    /// Bid card values in play order, player one first in each round.
    pub bids: Vec<u8>,
}

impl Iigs {
    pub fn new(n: usize) -> Result<Self> {
        if !(1..=13).contains(&n) {
            return Err(Error::ParameterOutOfRange(format!("IIGS({n}) needs 1 <= N <= 13")));
        }
        Ok(Iigs { n: n as u8 })
    }

    pub fn cards(&self) -> usize {
        self.n as usize
    }

    fn hand(&self, s: &IigsState, p: Player) -> Vec<u8> {
        let used: Vec<u8> = s.bids.iter().skip(p.index()).step_by(2).copied().collect();
        (0..self.n).filter(|c| !used.contains(c)).collect()
    }

    fn result(b1: u8, b2: u8) -> &'static str {
        match b1.cmp(&b2) {
            std::cmp::Ordering::Greater => "W",
            std::cmp::Ordering::Less => "L",
            std::cmp::Ordering::Equal => "T",
        }
    }

    fn scores(&self, s: &IigsState) -> (u32, u32) {
        let mut sc = (0, 0);
        for (round, pair) in s.bids.chunks(2).enumerate() {
            if pair.len() == 2 {
                match pair[0].cmp(&pair[1]) {
                    std::cmp::Ordering::Greater => sc.0 += round as u32,
                    std::cmp::Ordering::Less => sc.1 += round as u32,
                    std::cmp::Ordering::Equal => {}
                }
            }
        }
        sc
    }
}

impl Game for Iigs {
    type State = IigsState;

    fn name(&self) -> String {
        format!("IIGS({})", self.n)
    }

    fn root(&self) -> IigsState {
        IigsState { bids: Vec::new() }
    }

    fn node_kind(&self, s: &IigsState) -> NodeKind {
        if s.bids.len() == 2 * self.n as usize {
            NodeKind::Terminal
        } else if s.bids.len().is_multiple_of(2) {
            NodeKind::Decision(Player::One)
        } else {
            NodeKind::Decision(Player::Two)
        }
    }

    fn num_actions(&self, s: &IigsState) -> usize {
        match self.node_kind(s) {
            NodeKind::Terminal => 0,
            _ => self.n as usize - s.bids.len() / 2,
        }
    }

    fn child(&self, s: &IigsState, a: usize) -> IigsState {
        let p = if s.bids.len().is_multiple_of(2) { Player::One } else { Player::Two };
        let card = self.hand(s, p)[a];
        let mut bids = s.bids.clone();
        bids.push(card);
        IigsState { bids }
    }

    fn chance_prob(&self, _: &IigsState, _: usize) -> f64 {
        unreachable!("no chance nodes")
    }

    fn utility(&self, s: &IigsState) -> f64 {
        let (a, b) = self.scores(s);
        match a.cmp(&b) {
            std::cmp::Ordering::Greater => 1.0,
            std::cmp::Ordering::Less => -1.0,
            std::cmp::Ordering::Equal => 0.0,
        }
    }

    fn infoset_key(&self, s: &IigsState, p: Player) -> String {
        let mut toks = Vec::new();
        for pair in s.bids.chunks(2) {
            if pair.len() == 2 {
                toks.push(format!("b{}", pair[p.index()]));
                toks.push(Self::result(pair[0], pair[1]).to_string());
            } else if p == Player::One {
                toks.push(format!("b{}", pair[0]));
            }
        }
        let deciding = self.node_kind(s) == NodeKind::Decision(p);
        make_key(&toks, deciding)
    }

    fn public_key(&self, s: &IigsState) -> String {
        let mut toks: Vec<String> = s
            .bids
            .chunks(2)
            .filter(|c| c.len() == 2)
            .map(|c| Self::result(c[0], c[1]).to_string())
            .collect();
        toks.push(if s.bids.len().is_multiple_of(2) { "p1".into() } else { "p2".into() });
        toks.join("/")
    }

    fn action_label(&self, s: &IigsState, a: usize) -> String {
        let p = if s.bids.len().is_multiple_of(2) { Player::One } else { Player::Two };
        format!("bid {}", self.hand(s, p)[a])
    }

    fn max_utility(&self) -> f64 {
        1.0
    }
}

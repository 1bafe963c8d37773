use crate::error::{Error, Result};
use crate::game::{make_key, Game, NodeKind, Player};

/// Liar's dice with `d1`/`d2` dice per player and `faces` faces, the highest face wild.
#[derive(Debug, Clone, Copy)]
pub struct LiarsDice {
    d1: u8,
    d2: u8,
    faces: u8,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct LdState {
    /// Rolled faces `1..=F`, player one's dice first.
    pub dice: Vec<u8>,
    /// Bid indices in increasing order; see [`LiarsDice::bid`].
    pub bids: Vec<u16>,
    pub called: bool,
}

impl LiarsDice {
    pub fn new(d1: usize, d2: usize, faces: usize) -> Result<Self> {
        if d1 == 0 || d2 == 0 || d1 + d2 > 8 || !(2..=9).contains(&faces) {
            return Err(Error::ParameterOutOfRange(format!(
                "LD({d1},{d2},{faces}) needs dice >= 1, d1 + d2 <= 8 and 2 <= faces <= 9"
            )));
        }
        Ok(LiarsDice {
            d1: d1 as u8,
            d2: d2 as u8,
            faces: faces as u8,
        })
    }

    fn total_dice(&self) -> usize {
        (self.d1 + self.d2) as usize
    }

    pub fn num_bids(&self) -> usize {
        self.total_dice() * self.faces as usize
    }

    /// `(quantity, face)` of a bid index; bids are ordered by quantity, then face.
    pub fn bid(&self, idx: u16) -> (u8, u8) {
        let f = self.faces as u16;
        ((idx / f + 1) as u8, (idx % f + 1) as u8)
    }

    fn bid_label(&self, idx: u16) -> String {
        let (q, f) = self.bid(idx);
        if f == self.faces {
            format!("{q}x*")
        } else {
            format!("{q}x{f}")
        }
    }

    fn first_bid(&self, s: &LdState) -> u16 {
        s.bids.last().map_or(0, |&b| b + 1)
    }

    fn own_dice(&self, s: &LdState, p: Player) -> Option<Vec<u8>> {
        let range = match p {
            Player::One => 0..self.d1 as usize,
            Player::Two => self.d1 as usize..self.total_dice(),
        };
        if s.dice.len() < range.end {
            return None;
        }
        let mut d = s.dice[range].to_vec();
        d.sort_unstable();
        Some(d)
    }
}

impl Game for LiarsDice {
    type State = LdState;

    fn name(&self) -> String {
        format!("LD({},{},{})", self.d1, self.d2, self.faces)
    }

    fn root(&self) -> LdState {
        LdState {
            dice: Vec::new(),
            bids: Vec::new(),
            called: false,
        }
    }

    fn node_kind(&self, s: &LdState) -> NodeKind {
        if s.dice.len() < self.total_dice() {
            NodeKind::Chance
        } else if s.called {
            NodeKind::Terminal
        } else if s.bids.len().is_multiple_of(2) {
            NodeKind::Decision(Player::One)
        } else {
            NodeKind::Decision(Player::Two)
        }
    }

    fn num_actions(&self, s: &LdState) -> usize {
        match self.node_kind(s) {
            NodeKind::Terminal => 0,
            NodeKind::Chance => self.faces as usize,
            NodeKind::Decision(_) => {
                let higher = self.num_bids() - self.first_bid(s) as usize;
                higher + usize::from(!s.bids.is_empty())
            }
        }
    }

    fn child(&self, s: &LdState, a: usize) -> LdState {
        let mut c = s.clone();
        if s.dice.len() < self.total_dice() {
            c.dice.push(a as u8 + 1);
        } else {
            let b = self.first_bid(s) as usize + a;
            if b < self.num_bids() {
                c.bids.push(b as u16);
            } else {
                c.called = true;
            }
        }
        c
    }

    fn chance_prob(&self, _: &LdState, _: usize) -> f64 {
        1.0 / self.faces as f64
    }

    fn utility(&self, s: &LdState) -> f64 {
        let (q, f) = self.bid(*s.bids.last().expect("a call follows a bid"));
        let count = s
            .dice
            .iter()
            .filter(|&&d| d == f || d == self.faces)
            .count();
        let holds = count >= q as usize;
        // the caller is the player to move after the last bid
        let caller = if s.bids.len().is_multiple_of(2) { Player::One } else { Player::Two };
        let caller_wins = !holds;
        if caller_wins == (caller == Player::One) {
            1.0
        } else {
            -1.0
        }
    }

    fn infoset_key(&self, s: &LdState, p: Player) -> String {
        let mut toks = Vec::new();
        if let Some(d) = self.own_dice(s, p) {
            let faces: Vec<String> = d.iter().map(|x| x.to_string()).collect();
            toks.push(format!("d{}", faces.join(",")));
        }
        for &b in &s.bids {
            toks.push(self.bid_label(b));
        }
        make_key(&toks, self.node_kind(s) == NodeKind::Decision(p))
    }

    fn public_key(&self, s: &LdState) -> String {
        if s.dice.len() < self.total_dice() {
            return "roll".into();
        }
        let mut toks = vec!["bids".to_string()];
        toks.extend(s.bids.iter().map(|&b| self.bid_label(b)));
        toks.join("/")
    }

    fn action_label(&self, s: &LdState, a: usize) -> String {
        if s.dice.len() < self.total_dice() {
            return format!("roll {}", a + 1);
        }
        let b = self.first_bid(s) as usize + a;
        if b < self.num_bids() {
            self.bid_label(b as u16)
        } else {
            "call".into()
        }
    }

    fn max_utility(&self) -> f64 {
        1.0
    }
}

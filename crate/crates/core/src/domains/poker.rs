use crate::error::{Error, Result};
use crate::game::{make_key, Game, NodeKind, Player};

/// Two-round poker with `types` card ranks, `copies` of each, at most
/// `max_raises` raises per round and bet sizes `1..=bet_sizes`.
///
/// Both players ante one chip. Each gets a private card, a betting round
/// follows, then a public card and a second betting round. Player one opens
/// both rounds.
#[derive(Debug, Clone, Copy)]
pub struct GenericPoker {
    types: u8,
    copies: u8,
    max_raises: u8,
    bet_sizes: u8,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Bet {
    Fold,
    Check,
    Call,
    Bet(u8),
    Raise(u8),
}

impl Bet {
    fn label(self) -> String {
        match self {
            Bet::Fold => "fold".into(),
            Bet::Check => "check".into(),
            Bet::Call => "call".into(),
            Bet::Bet(b) => format!("bet{b}"),
            Bet::Raise(b) => format!("raise{b}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct GpState {
    pub cards: [Option<u8>; 2],
    pub board: Option<u8>,
    pub rounds: [Vec<Bet>; 2],
}

#[derive(Debug, Clone, Copy)]
struct RoundState {
    to_call: u32,
    raises: u8,
    over: bool,
    folded: Option<Player>,
}

impl GenericPoker {
    pub fn new(types: usize, copies: usize, max_raises: usize, bet_sizes: usize) -> Result<Self> {
        if types < 1 || copies < 1 || types * copies < 3 || types > 13 || copies > 8 || max_raises > 8 || !(1..=8).contains(&bet_sizes) {
            return Err(Error::ParameterOutOfRange(format!(
                "GP({types},{copies},{max_raises},{bet_sizes}) out of supported range"
            )));
        }
        Ok(GenericPoker {
            types: types as u8,
            copies: copies as u8,
            max_raises: max_raises as u8,
            bet_sizes: bet_sizes as u8,
        })
    }

    fn round_state(actions: &[Bet]) -> RoundState {
        let mut r = RoundState {
            to_call: 0,
            raises: 0,
            over: false,
            folded: None,
        };
        for (i, &a) in actions.iter().enumerate() {
            let actor = if i % 2 == 0 { Player::One } else { Player::Two };
            match a {
                Bet::Fold => {
                    r.folded = Some(actor);
                    r.over = true;
                }
                Bet::Check => {
                    if i == 1 {
                        r.over = true;
                    }
                }
                Bet::Call => {
                    r.to_call = 0;
                    r.over = true;
                }
                Bet::Bet(b) => r.to_call = b as u32,
                Bet::Raise(b) => {
                    r.to_call = b as u32;
                    r.raises += 1;
                }
            }
        }
        r
    }

    fn legal(&self, actions: &[Bet]) -> Vec<Bet> {
        let r = Self::round_state(actions);
        let mut out = Vec::new();
        if r.to_call == 0 {
            out.push(Bet::Check);
            out.extend((1..=self.bet_sizes).map(Bet::Bet));
        } else {
            out.push(Bet::Fold);
            out.push(Bet::Call);
            if r.raises < self.max_raises {
                out.extend((1..=self.bet_sizes).map(Bet::Raise));
            }
        }
        out
    }

    fn current_round(&self, s: &GpState) -> usize {
        if s.board.is_some() {
            1
        } else {
            0
        }
    }

    fn contributions(&self, s: &GpState) -> [u32; 2] {
        let mut c = [1u32, 1];
        for round in &s.rounds {
            let mut to_call = 0u32;
            for (i, &a) in round.iter().enumerate() {
                let p = i % 2;
                match a {
                    Bet::Fold | Bet::Check => {}
                    Bet::Call => {
                        c[p] += to_call;
                        to_call = 0;
                    }
                    Bet::Bet(b) => {
                        c[p] += b as u32;
                        to_call = b as u32;
                    }
                    Bet::Raise(b) => {
                        c[p] += to_call + b as u32;
                        to_call = b as u32;
                    }
                }
            }
        }
        c
    }

    fn folded(&self, s: &GpState) -> Option<Player> {
        s.rounds.iter().find_map(|r| Self::round_state(r).folded)
    }

    fn dealt(&self, s: &GpState) -> Vec<u8> {
        s.cards.iter().flatten().chain(s.board.iter()).copied().collect()
    }

    fn deal_prob(&self, s: &GpState, t: u8) -> f64 {
        let dealt = self.dealt(s);
        let used = dealt.iter().filter(|&&c| c == t).count() as f64;
        let remaining = (self.types as usize * self.copies as usize - dealt.len()) as f64;
        (self.copies as f64 - used) / remaining
    }

    fn stage(&self, s: &GpState) -> NodeKind {
        if s.cards[0].is_none() || s.cards[1].is_none() {
            return NodeKind::Chance;
        }
        if self.folded(s).is_some() {
            return NodeKind::Terminal;
        }
        let r = self.current_round(s);
        let rs = Self::round_state(&s.rounds[r]);
        if rs.over {
            if r == 0 {
                NodeKind::Chance
            } else {
                NodeKind::Terminal
            }
        } else if s.rounds[r].len().is_multiple_of(2) {
            NodeKind::Decision(Player::One)
        } else {
            NodeKind::Decision(Player::Two)
        }
    }

    fn private_tokens(&self, s: &GpState, p: Player) -> Vec<String> {
        let mut toks = Vec::new();
        if let Some(c) = s.cards[p.index()] {
            toks.push(format!("c{c}"));
        }
        toks
    }

    fn public_tokens(&self, s: &GpState) -> Vec<String> {
        let mut toks = Vec::new();
        toks.extend(s.rounds[0].iter().map(|a| a.label()));
        if let Some(b) = s.board {
            toks.push(format!("t{b}"));
            toks.extend(s.rounds[1].iter().map(|a| a.label()));
        }
        toks
    }
}

impl Game for GenericPoker {
    type State = GpState;

    fn name(&self) -> String {
        format!("GP({},{},{},{})", self.types, self.copies, self.max_raises, self.bet_sizes)
    }

    fn root(&self) -> GpState {
        GpState {
            cards: [None, None],
            board: None,
            rounds: [Vec::new(), Vec::new()],
        }
    }

    fn node_kind(&self, s: &GpState) -> NodeKind {
        self.stage(s)
    }

    fn num_actions(&self, s: &GpState) -> usize {
        match self.stage(s) {
            NodeKind::Terminal => 0,
            NodeKind::Chance => self.types as usize,
            NodeKind::Decision(_) => self.legal(&s.rounds[self.current_round(s)]).len(),
        }
    }

    fn child(&self, s: &GpState, a: usize) -> GpState {
        let mut c = s.clone();
        if s.cards[0].is_none() {
            c.cards[0] = Some(a as u8);
        } else if s.cards[1].is_none() {
            c.cards[1] = Some(a as u8);
        } else if self.stage(s) == NodeKind::Chance {
            c.board = Some(a as u8);
        } else {
            let r = self.current_round(s);
            let act = self.legal(&s.rounds[r])[a];
            c.rounds[r].push(act);
        }
        c
    }

    fn chance_prob(&self, s: &GpState, a: usize) -> f64 {
        self.deal_prob(s, a as u8)
    }

    fn utility(&self, s: &GpState) -> f64 {
        let c = self.contributions(s);
        if let Some(f) = self.folded(s) {
            return match f {
                Player::One => -(c[0] as f64),
                Player::Two => c[1] as f64,
            };
        }
        let (a, b, t) = (s.cards[0].unwrap(), s.cards[1].unwrap(), s.board.unwrap());
        let p1_wins = (a == t && b != t) || (a != t && b != t && a > b);
        let p2_wins = (b == t && a != t) || (a != t && b != t && b > a);
        if p1_wins {
            c[1] as f64
        } else if p2_wins {
            -(c[0] as f64)
        } else {
            0.0
        }
    }

    fn infoset_key(&self, s: &GpState, p: Player) -> String {
        let mut toks = self.private_tokens(s, p);
        if s.cards[0].is_some() && s.cards[1].is_some() {
            toks.extend(self.public_tokens(s));
        }
        make_key(&toks, self.stage(s) == NodeKind::Decision(p))
    }

    fn public_key(&self, s: &GpState) -> String {
        if s.cards[0].is_none() || s.cards[1].is_none() {
            return "deal".into();
        }
        let mut toks = vec!["bet".to_string()];
        toks.extend(self.public_tokens(s));
        toks.join("/")
    }

    fn action_label(&self, s: &GpState, a: usize) -> String {
        match self.stage(s) {
            NodeKind::Chance => format!("deal {a}"),
            _ => self.legal(&s.rounds[self.current_round(s)])[a].label(),
        }
    }

    fn max_utility(&self) -> f64 {
        1.0 + 2.0 * self.bet_sizes as f64 * (self.max_raises as f64 + 1.0)
    }
}

use crate::game::{make_key, Game, NodeKind, Player};

/// Tic-tac-toe where each player sees only their own marks and the opponent
/// marks they bumped into. An attempt on an occupied cell reveals it and the
/// same player tries again.
#[derive(Debug, Clone, Copy, Default)]
pub struct Pttt;

const LINES: [[usize; 3]; 8] = [
    [0, 1, 2],
    [3, 4, 5],
    [6, 7, 8],
    [0, 3, 6],
    [1, 4, 7],
    [2, 5, 8],
    [0, 4, 8],
    [2, 4, 6],
];

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PtttState {
    /// 0 empty, 1 player one, 2 player two.
    pub board: [u8; 9],
    pub to_move: Player,
    /// Each player's attempts in order: (cell, succeeded).
    pub attempts: [Vec<(u8, bool)>; 2],
    pub winner: Option<Player>,
}

impl PtttState {
    fn marks(&self) -> usize {
        self.board.iter().filter(|&&c| c != 0).count()
    }

    /// Cells `player` knows to be occupied.
    fn known(&self, p: Player) -> [bool; 9] {
        let mut k = [false; 9];
        for &(c, _) in &self.attempts[p.index()] {
            k[c as usize] = true;
        }
        k
    }

    fn open_cells(&self, p: Player) -> Vec<u8> {
        let k = self.known(p);
        (0..9u8).filter(|&c| !k[c as usize]).collect()
    }
}

impl Game for Pttt {
    type State = PtttState;

    fn name(&self) -> String {
        "PTTT".into()
    }

    fn root(&self) -> PtttState {
        PtttState {
            board: [0; 9],
            to_move: Player::One,
            attempts: [Vec::new(), Vec::new()],
            winner: None,
        }
    }

    fn node_kind(&self, s: &PtttState) -> NodeKind {
        if s.winner.is_some() || s.marks() == 9 {
            NodeKind::Terminal
        } else {
            NodeKind::Decision(s.to_move)
        }
    }

    fn num_actions(&self, s: &PtttState) -> usize {
        match self.node_kind(s) {
            NodeKind::Terminal => 0,
            _ => s.open_cells(s.to_move).len(),
        }
    }

    fn child(&self, s: &PtttState, a: usize) -> PtttState {
        let p = s.to_move;
        let cell = s.open_cells(p)[a];
        let mut c = s.clone();
        if s.board[cell as usize] == 0 {
            let mark = p.index() as u8 + 1;
            c.board[cell as usize] = mark;
            c.attempts[p.index()].push((cell, true));
            if LINES.iter().any(|l| l.iter().all(|&i| c.board[i] == mark)) {
                c.winner = Some(p);
            }
            c.to_move = p.opponent();
        } else {
            c.attempts[p.index()].push((cell, false));
        }
        c
    }

    fn chance_prob(&self, _: &PtttState, _: usize) -> f64 {
        unreachable!("no chance nodes")
    }

    fn utility(&self, s: &PtttState) -> f64 {
        match s.winner {
            Some(Player::One) => 1.0,
            Some(Player::Two) => -1.0,
            None => 0.0,
        }
    }

    fn infoset_key(&self, s: &PtttState, p: Player) -> String {
        let toks: Vec<String> = s.attempts[p.index()]
            .iter()
            .map(|&(c, ok)| format!("{c}{}", if ok { '+' } else { 'x' }))
            .collect();
        make_key(&toks, self.node_kind(s) == NodeKind::Decision(p))
    }

    fn public_key(&self, s: &PtttState) -> String {
        format!("m{}", s.marks())
    }

    fn action_label(&self, s: &PtttState, a: usize) -> String {
        format!("cell {}", s.open_cells(s.to_move)[a])
    }

    fn max_utility(&self) -> f64 {
        1.0
    }
}

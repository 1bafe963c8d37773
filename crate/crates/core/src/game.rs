//! The abstract extensive-form game interface.
//!
//! A game is a tree of histories. Every domain exposes its histories as an
//! opaque `State` value and answers structural queries about it: who acts,
//! which actions exist, where they lead, and what each player observes.
//!
//! Observation keys are strings of `/`-separated tokens. A player's key is
//! defined at every non-terminal history (the augmented partition), and along
//! any path from the root the token sequence only ever grows, except that a
//! trailing [`DECISION_MARK`] is appended at histories where that player is
//! the one to act. Two histories share an infoset for a player exactly when
//! their keys are equal.

use std::fmt::Debug;

/// Appended to a player's key at histories where that player acts.
pub const DECISION_MARK: &str = "?";
/// Token separator inside observation and public keys.
pub const KEY_SEP: char = '/';

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, serde::Serialize, serde::Deserialize)]
pub enum Player {
    One,
    Two,
}

impl Player {
    pub const BOTH: [Player; 2] = [Player::One, Player::Two];

    #[inline]
    pub fn index(self) -> usize {
        match self {
            Player::One => 0,
            Player::Two => 1,
        }
    }

    #[inline]
    pub fn opponent(self) -> Player {
        match self {
            Player::One => Player::Two,
            Player::Two => Player::One,
        }
    }

    /// +1 for player one, -1 for player two. Converts `u1` into this player's utility.
    #[inline]
    pub fn sign(self) -> f64 {
        match self {
            Player::One => 1.0,
            Player::Two => -1.0,
        }
    }

    pub fn from_index(i: usize) -> Player {
        if i == 0 {
            Player::One
        } else {
            Player::Two
        }
    }
}

impl std::fmt::Display for Player {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Player::One => write!(f, "1"),
            Player::Two => write!(f, "2"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum NodeKind {
    Terminal,
    Chance,
    Decision(Player),
}

impl NodeKind {
    pub fn player(self) -> Option<Player> {
        match self {
            NodeKind::Decision(p) => Some(p),
            _ => None,
        }
    }
}

/// An action available at a decision point.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Action {
    pub id: usize,
    pub label: String,
}

pub trait Game: Send + Sync {
    type State: Clone + Debug + Send + Sync;

    /// Canonical spec string, e.g. `LD(1,1,6)`.
    fn name(&self) -> String;
    fn root(&self) -> Self::State;
    fn node_kind(&self, state: &Self::State) -> NodeKind;
    /// Number of actions at a non-terminal history. Action ids are `0..n`.
    fn num_actions(&self, state: &Self::State) -> usize;
    fn child(&self, state: &Self::State, action: usize) -> Self::State;
    /// Probability of `action` at a chance history.
    fn chance_prob(&self, state: &Self::State, action: usize) -> f64;
    /// Utility of player one at a terminal history.
    fn utility(&self, state: &Self::State) -> f64;
    /// Observation key of `player` at a non-terminal history.
    fn infoset_key(&self, state: &Self::State, player: Player) -> String;
    /// Public-state key of a non-terminal history.
    fn public_key(&self, state: &Self::State) -> String;
    fn action_label(&self, state: &Self::State, action: usize) -> String;
    /// Largest absolute utility of any terminal.
    fn max_utility(&self) -> f64;
    /// `max u1(z) - min u1(z)` over terminals.
    fn utility_spread(&self) -> f64 {
        2.0 * self.max_utility()
    }
    /// True at histories where a solver should expand every action instead of sampling one.
    fn expand_all(&self, _state: &Self::State) -> bool {
        false
    }

    fn actions(&self, state: &Self::State) -> Vec<Action> {
        (0..self.num_actions(state))
            .map(|id| Action {
                id,
                label: self.action_label(state, id),
            })
            .collect()
    }

    fn is_terminal(&self, state: &Self::State) -> bool {
        self.node_kind(state) == NodeKind::Terminal
    }

    fn current_player(&self, state: &Self::State) -> Option<Player> {
        self.node_kind(state).player()
    }

    /// Applies a sequence of action ids from the root.
    fn replay(&self, actions: &[usize]) -> Self::State {
        let mut s = self.root();
        for &a in actions {
            s = self.child(&s, a);
        }
        s
    }
}

/// Splits a key into its tokens with a trailing decision mark removed.
pub fn observation_tokens(key: &str) -> Vec<&str> {
    let mut toks: Vec<&str> = if key.is_empty() {
        Vec::new()
    } else {
        key.split(KEY_SEP).collect()
    };
    if toks.last() == Some(&DECISION_MARK) {
        toks.pop();
    }
    toks
}

/// True if the observation tokens of `prefix` are a prefix of those of `key`.
pub fn is_key_prefix(prefix: &str, key: &str) -> bool {
    let p = observation_tokens(prefix);
    let k = observation_tokens(key);
    p.len() <= k.len() && p.iter().zip(&k).all(|(a, b)| a == b)
}

/// Joins tokens into a key, optionally with a decision mark.
pub fn make_key<S: AsRef<str>>(tokens: &[S], deciding: bool) -> String {
    let mut out = String::new();
    for (i, t) in tokens.iter().enumerate() {
        if i > 0 {
            out.push(KEY_SEP);
        }
        out.push_str(t.as_ref());
    }
    if deciding {
        if !out.is_empty() {
            out.push(KEY_SEP);
        }
        out.push_str(DECISION_MARK);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn key_prefix_ignores_decision_mark() {
        assert!(is_key_prefix("a/b/?", "a/b/c"));
        assert!(is_key_prefix("", "a"));
        assert!(!is_key_prefix("a/c", "a/b/c"));
        assert_eq!(make_key(&["x", "y"], true), "x/y/?");
        assert_eq!(make_key::<&str>(&[], true), "?");
        assert_eq!(observation_tokens("?"), Vec::<&str>::new());
    }
}

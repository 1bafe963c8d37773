//! Fully expanded game trees for exact evaluation and validation.

use std::collections::{HashMap, HashSet};

use crate::error::{Error, Result};
use crate::game::{is_key_prefix, Game, NodeKind, Player, DECISION_MARK};

pub const NONE: u32 = u32::MAX;

#[derive(Debug, Clone)]
pub struct TreeNode {
    pub kind: NodeKind,
    pub parent: u32,
    /// Action taken at the parent to reach this node.
    pub action: u32,
    pub first_child: u32,
    pub num_actions: u32,
    pub depth: u32,
    /// Utility of player one; zero at non-terminals.
    pub utility: f64,
    /// Probability of the chance outcome leading here, 1 if the parent is not chance.
    pub chance_prob: f64,
    /// Augmented infoset id for each player, `NONE` at terminals.
    pub infoset: [u32; 2],
    pub public_state: u32,
}

/// Interned keys with their member histories.
#[derive(Debug, Clone, Default)]
pub struct KeyTable {
    pub keys: Vec<String>,
    pub index: HashMap<String, u32>,
    pub members: Vec<Vec<u32>>,
}

impl KeyTable {
    fn intern(&mut self, key: String, node: u32) -> u32 {
        if let Some(&id) = self.index.get(&key) {
            self.members[id as usize].push(node);
            id
        } else {
            let id = self.keys.len() as u32;
            self.index.insert(key.clone(), id);
            self.keys.push(key);
            self.members.push(vec![node]);
            id
        }
    }

    pub fn len(&self) -> usize {
        self.keys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.keys.is_empty()
    }

    pub fn id(&self, key: &str) -> Option<u32> {
        self.index.get(key).copied()
    }
}

/// Arena of every history of a game, children stored contiguously.
#[derive(Debug, Clone)]
pub struct GameTree {
    pub name: String,
    pub nodes: Vec<TreeNode>,
    pub infosets: [KeyTable; 2],
    pub public_states: KeyTable,
    pub labels: Vec<String>,
    pub max_utility: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub struct TreeCounts {
    pub histories: usize,
    pub terminals: usize,
    pub chance: usize,
    /// Histories where one of the players acts.
    pub decisions: usize,
    /// Decision infosets per player.
    pub infosets: [usize; 2],
    pub public_states: usize,
}

impl GameTree {
    pub fn build<G: Game>(game: &G) -> Self {
        Self::build_limited(game, usize::MAX).expect("unbounded build cannot fail")
    }

    /// Expands the whole game, failing once more than `max_nodes` histories exist.
    pub fn build_limited<G: Game>(game: &G, max_nodes: usize) -> Result<Self> {
        Self::build_inner(game, max_nodes, u32::MAX)
    }

    /// Expands histories up to `max_depth` actions from the root; deeper ones stay unexpanded.
    pub fn build_depth_limited<G: Game>(game: &G, max_depth: u32) -> Self {
        Self::build_inner(game, usize::MAX, max_depth).expect("unbounded build cannot fail")
    }

    fn build_inner<G: Game>(game: &G, max_nodes: usize, max_depth: u32) -> Result<Self> {
        let mut nodes: Vec<TreeNode> = Vec::new();
        let mut labels = Vec::new();
        let mut infosets = [KeyTable::default(), KeyTable::default()];
        let mut public_states = KeyTable::default();
        let mut level: Vec<(u32, G::State)> = Vec::new();

        let root = game.root();
        nodes.push(TreeNode {
            kind: game.node_kind(&root),
            parent: NONE,
            action: NONE,
            first_child: NONE,
            num_actions: 0,
            depth: 0,
            utility: 0.0,
            chance_prob: 1.0,
            infoset: [NONE; 2],
            public_state: NONE,
        });
        labels.push(String::new());
        level.push((0, root));

        while !level.is_empty() {
            let mut next = Vec::new();
            for (id, state) in level {
                let kind = nodes[id as usize].kind;
                if kind == NodeKind::Terminal {
                    nodes[id as usize].utility = game.utility(&state);
                    continue;
                }
                for p in Player::BOTH {
                    let key = game.infoset_key(&state, p);
                    nodes[id as usize].infoset[p.index()] = infosets[p.index()].intern(key, id);
                }
                nodes[id as usize].public_state = public_states.intern(game.public_key(&state), id);
                let n = game.num_actions(&state);
                nodes[id as usize].num_actions = n as u32;
                if nodes[id as usize].depth >= max_depth {
                    continue;
                }
                let first = nodes.len() as u32;
                nodes[id as usize].first_child = first;
                if nodes.len() + n > max_nodes {
                    return Err(Error::Validation(format!(
                        "{} exceeds the node budget of {max_nodes}",
                        game.name()
                    )));
                }
                let depth = nodes[id as usize].depth + 1;
                for a in 0..n {
                    let c = game.child(&state, a);
                    let cp = if kind == NodeKind::Chance {
                        game.chance_prob(&state, a)
                    } else {
                        1.0
                    };
                    labels.push(game.action_label(&state, a));
                    nodes.push(TreeNode {
                        kind: game.node_kind(&c),
                        parent: id,
                        action: a as u32,
                        first_child: NONE,
                        num_actions: 0,
                        depth,
                        utility: 0.0,
                        chance_prob: cp,
                        infoset: [NONE; 2],
                        public_state: NONE,
                    });
                    next.push((first + a as u32, c));
                }
            }
            level = next;
        }

        Ok(GameTree {
            name: game.name(),
            nodes,
            infosets,
            public_states,
            labels,
            max_utility: game.max_utility(),
        })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    #[inline]
    pub fn child(&self, node: u32, action: usize) -> u32 {
        self.nodes[node as usize].first_child + action as u32
    }

    #[inline]
    pub fn children(&self, node: u32) -> std::ops::Range<u32> {
        let n = &self.nodes[node as usize];
        if n.first_child == NONE {
            0..0
        } else {
            n.first_child..n.first_child + n.num_actions
        }
    }

    pub fn infoset_key(&self, player: Player, id: u32) -> &str {
        &self.infosets[player.index()].keys[id as usize]
    }

    /// Key of `player`'s infoset at `node`.
    pub fn key_at(&self, node: u32, player: Player) -> &str {
        self.infoset_key(player, self.nodes[node as usize].infoset[player.index()])
    }

    /// True if `node` is an acting history of `player`.
    pub fn acts(&self, node: u32, player: Player) -> bool {
        self.nodes[node as usize].kind == NodeKind::Decision(player)
    }

    /// Members of an augmented infoset with no strict prefix in the same infoset.
    pub fn upper_frontier(&self, player: Player, id: u32) -> Vec<u32> {
        self.infosets[player.index()].members[id as usize]
            .iter()
            .copied()
            .filter(|&h| self.is_frontier(h, player))
            .collect()
    }

    /// True if `node` has no ancestor in its own augmented infoset of `player`.
    pub fn is_frontier(&self, node: u32, player: Player) -> bool {
        let id = self.nodes[node as usize].infoset[player.index()];
        let mut g = self.nodes[node as usize].parent;
        while g != NONE {
            if self.nodes[g as usize].infoset[player.index()] == id {
                return false;
            }
            g = self.nodes[g as usize].parent;
        }
        true
    }

    /// Action ids from the root to `node`.
    pub fn path(&self, node: u32) -> Vec<usize> {
        let mut out = Vec::new();
        let mut n = node;
        while self.nodes[n as usize].parent != NONE {
            out.push(self.nodes[n as usize].action as usize);
            n = self.nodes[n as usize].parent;
        }
        out.reverse();
        out
    }

    /// Ids of decision infosets of `player`, i.e. those whose members are acting histories.
    pub fn decision_infosets(&self, player: Player) -> Vec<u32> {
        (0..self.infosets[player.index()].len() as u32)
            .filter(|&id| {
                let m = &self.infosets[player.index()].members[id as usize];
                self.acts(m[0], player)
            })
            .collect()
    }

    pub fn counts(&self) -> TreeCounts {
        let mut c = TreeCounts {
            histories: self.nodes.len(),
            terminals: 0,
            chance: 0,
            decisions: 0,
            infosets: [0, 0],
            public_states: self.public_states.len(),
        };
        for n in &self.nodes {
            match n.kind {
                NodeKind::Terminal => c.terminals += 1,
                NodeKind::Chance => c.chance += 1,
                NodeKind::Decision(_) => c.decisions += 1,
            }
        }
        for p in Player::BOTH {
            c.infosets[p.index()] = self.decision_infosets(p).len();
        }
        c
    }

    /// Checks the structural contract every domain must satisfy.
    ///
    /// Covers chance normalization, consistent action sets, the decision mark,
    /// monotone observation keys, perfect recall and closure of the public
    /// partition under both players' infosets.
    pub fn validate(&self) -> Result<()> {
        for (i, n) in self.nodes.iter().enumerate() {
            if n.kind == NodeKind::Chance && n.first_child != NONE {
                let s: f64 = self
                    .children(i as u32)
                    .map(|c| self.nodes[c as usize].chance_prob)
                    .sum();
                if (s - 1.0).abs() > 1e-9 {
                    return Err(Error::Validation(format!("chance node {i} sums to {s}")));
                }
            }
            if n.kind == NodeKind::Terminal {
                if !n.utility.is_finite() || n.utility.abs() > self.max_utility + 1e-9 {
                    return Err(Error::Validation(format!("terminal {i} has utility {}", n.utility)));
                }
                continue;
            }
            for p in Player::BOTH {
                let key = self.key_at(i as u32, p);
                let marked = key == DECISION_MARK || key.ends_with("/?");
                if marked != self.acts(i as u32, p) {
                    return Err(Error::Validation(format!(
                        "decision mark of player {p} inconsistent at {:?}",
                        self.path(i as u32)
                    )));
                }
                if n.parent != NONE {
                    let pk = self.key_at(n.parent, p);
                    if !is_key_prefix(pk, key) {
                        return Err(Error::Validation(format!(
                            "player {p} key `{key}` does not extend parent key `{pk}`"
                        )));
                    }
                }
            }
        }

        for p in Player::BOTH {
            let table = &self.infosets[p.index()];
            for (id, members) in table.members.iter().enumerate() {
                let first = members[0];
                let n0 = self.nodes[first as usize].num_actions;
                let ps = self.nodes[first as usize].public_state;
                let own0 = self.own_sequence(first, p);
                for &h in members {
                    let node = &self.nodes[h as usize];
                    if self.acts(first, p) {
                        if node.num_actions != n0 {
                            return Err(Error::Validation(format!(
                                "infoset `{}` of player {p} has differing action counts",
                                table.keys[id]
                            )));
                        }
                        if node.first_child == NONE || self.nodes[first as usize].first_child == NONE {
                            continue;
                        }
                        if node.num_actions != n0 {
                            return Err(Error::Validation(format!(
                                "infoset `{}` of player {p} has differing action counts",
                                table.keys[id]
                            )));
                        }
                        for a in 0..n0 as usize {
                            if self.labels[self.child(h, a) as usize]
                                != self.labels[self.child(first, a) as usize]
                            {
                                return Err(Error::Validation(format!(
                                    "infoset `{}` has differing action labels",
                                    table.keys[id]
                                )));
                            }
                        }
                    }
                    if node.public_state != ps {
                        return Err(Error::PublicPartition(format!(
                            "histories {:?} and {:?} share player {p} infoset `{}` but not a public state",
                            self.path(first),
                            self.path(h),
                            table.keys[id]
                        )));
                    }
                    if self.own_sequence(h, p) != own0 {
                        return Err(Error::Validation(format!(
                            "perfect recall violated for player {p} at `{}`: {:?} vs {:?}",
                            table.keys[id],
                            self.path(first),
                            self.path(h)
                        )));
                    }
                }
            }
        }

        // Public states must form a tree: once a history leaves a public
        // state, no descendant returns to it, and every entry into a state
        // comes from the same parent state.
        let mut entry_parent: HashMap<u32, u32> = HashMap::new();
        for (i, n) in self.nodes.iter().enumerate() {
            if n.kind == NodeKind::Terminal {
                continue;
            }
            let parent_ps = if n.parent == NONE {
                NONE
            } else {
                self.nodes[n.parent as usize].public_state
            };
            if parent_ps == n.public_state {
                continue;
            }
            match entry_parent.get(&n.public_state) {
                Some(&prev) if prev != parent_ps => {
                    return Err(Error::PublicPartition(format!(
                        "public state `{}` is entered from two different parents (history {:?})",
                        self.public_states.keys[n.public_state as usize],
                        self.path(i as u32)
                    )));
                }
                _ => {
                    entry_parent.insert(n.public_state, parent_ps);
                }
            }
            let mut g = n.parent;
            let mut seen = HashSet::new();
            while g != NONE {
                let gps = self.nodes[g as usize].public_state;
                seen.insert(gps);
                g = self.nodes[g as usize].parent;
            }
            if seen.contains(&n.public_state) {
                return Err(Error::PublicPartition(format!(
                    "public state `{}` re-entered along {:?}",
                    self.public_states.keys[n.public_state as usize],
                    self.path(i as u32)
                )));
            }
        }
        Ok(())
    }

    /// The sequence of (own infoset, own action) pairs leading to `node`.
    fn own_sequence(&self, node: u32, player: Player) -> Vec<(u32, u32)> {
        let mut seq = Vec::new();
        let mut child = node;
        let mut g = self.nodes[node as usize].parent;
        while g != NONE {
            if self.acts(g, player) {
                seq.push((self.nodes[g as usize].infoset[player.index()], self.nodes[child as usize].action));
            }
            child = g;
            g = self.nodes[g as usize].parent;
        }
        seq.reverse();
        seq
    }
}

/// Counts histories by a depth-first traversal without storing the tree.
pub fn count_tree<G: Game>(game: &G) -> TreeCounts {
    fn rec<G: Game>(
        game: &G,
        s: &G::State,
        c: &mut TreeCounts,
        sets: &mut [HashSet<String>; 2],
        public: &mut HashSet<String>,
    ) {
        c.histories += 1;
        match game.node_kind(s) {
            NodeKind::Terminal => {
                c.terminals += 1;
                return;
            }
            NodeKind::Chance => c.chance += 1,
            NodeKind::Decision(p) => {
                c.decisions += 1;
                let key = game.infoset_key(s, p);
                if !sets[p.index()].contains(&key) {
                    sets[p.index()].insert(key);
                }
            }
        }
        let pk = game.public_key(s);
        if !public.contains(&pk) {
            public.insert(pk);
        }
        for a in 0..game.num_actions(s) {
            rec(game, &game.child(s, a), c, sets, public);
        }
    }
    let mut c = TreeCounts {
        histories: 0,
        terminals: 0,
        chance: 0,
        decisions: 0,
        infosets: [0, 0],
        public_states: 0,
    };
    let mut sets = [HashSet::new(), HashSet::new()];
    let mut public = HashSet::new();
    rec(game, &game.root(), &mut c, &mut sets, &mut public);
    c.infosets = [sets[0].len(), sets[1].len()];
    c.public_states = public.len();
    c
}

//! Public states over a fully expanded tree.

use std::collections::BTreeSet;

use crate::game::Player;
use crate::tree::{GameTree, NONE};

#[derive(Debug, Clone)]
pub struct PublicState {
    pub key: String,
    pub members: Vec<u32>,
    /// Members whose parent lies outside this public state.
    pub frontier: Vec<u32>,
    /// For each player, infosets that contain a frontier history.
    pub frontier_infosets: [Vec<u32>; 2],
    pub parent: u32,
    pub children: Vec<u32>,
}

impl PublicState {
    /// True if `player` acts at some member.
    pub fn has_decision(&self, tree: &GameTree, player: Player) -> bool {
        self.members.iter().any(|&h| tree.acts(h, player))
    }
}

#[derive(Debug, Clone)]
pub struct PublicTree {
    pub states: Vec<PublicState>,
}

impl PublicTree {
    /// Groups histories by public key and links the states into a tree.
    ///
    /// Call [`GameTree::validate`] first to reject partitions that are not
    /// closed under the players' infosets.
    pub fn build(tree: &GameTree) -> Self {
        let n = tree.public_states.len();
        let mut states: Vec<PublicState> = (0..n)
            .map(|i| PublicState {
                key: tree.public_states.keys[i].clone(),
                members: tree.public_states.members[i].clone(),
                frontier: Vec::new(),
                frontier_infosets: [Vec::new(), Vec::new()],
                parent: NONE,
                children: Vec::new(),
            })
            .collect();
        for (i, st) in states.iter_mut().enumerate() {
            let mut sets: [BTreeSet<u32>; 2] = [BTreeSet::new(), BTreeSet::new()];
            for &h in &st.members {
                let parent = tree.nodes[h as usize].parent;
                let outside = parent == NONE || tree.nodes[parent as usize].public_state != i as u32;
                if outside {
                    st.frontier.push(h);
                    for p in Player::BOTH {
                        sets[p.index()].insert(tree.nodes[h as usize].infoset[p.index()]);
                    }
                    if parent != NONE {
                        st.parent = tree.nodes[parent as usize].public_state;
                    }
                }
            }
            st.frontier_infosets = [sets[0].iter().copied().collect(), sets[1].iter().copied().collect()];
        }
        for i in 0..n {
            let p = states[i].parent;
            if p != NONE {
                states[p as usize].children.push(i as u32);
            }
        }
        PublicTree { states }
    }

    pub fn root(&self) -> u32 {
        self.states
            .iter()
            .position(|s| s.parent == NONE)
            .expect("public tree has a root") as u32
    }

    pub fn find(&self, key: &str) -> Option<u32> {
        self.states.iter().position(|s| s.key == key).map(|i| i as u32)
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    /// Number of public states on the path from the root to `state`, excluding it.
    pub fn depth(&self, state: u32) -> usize {
        let mut d = 0;
        let mut s = self.states[state as usize].parent;
        while s != NONE {
            d += 1;
            s = self.states[s as usize].parent;
        }
        d
    }

    /// True if the public tree never branches.
    pub fn is_chain(&self) -> bool {
        self.states.iter().all(|s| s.children.len() <= 1)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domains::{Brps, Iigs};

    #[test]
    fn brps_has_two_public_states() {
        let tree = GameTree::build(&Brps);
        tree.validate().unwrap();
        let pt = PublicTree::build(&tree);
        assert_eq!(pt.len(), 2);
        let root = pt.root();
        assert_eq!(pt.states[root as usize].members, vec![0]);
        let child = pt.states[root as usize].children[0];
        assert_eq!(pt.states[child as usize].members.len(), 3);
        assert_eq!(pt.states[child as usize].frontier.len(), 3);
        assert_eq!(pt.states[child as usize].frontier_infosets[1].len(), 1);
        assert_eq!(pt.states[child as usize].frontier_infosets[0].len(), 3);
    }

    #[test]
    fn frontier_excludes_descendants_in_same_state() {
        let tree = GameTree::build(&Iigs::new(3).unwrap());
        let pt = PublicTree::build(&tree);
        for st in &pt.states {
            for &h in &st.frontier {
                let p = tree.nodes[h as usize].parent;
                assert!(p == NONE || tree.nodes[p as usize].public_state != tree.nodes[h as usize].public_state);
            }
            // every member has an ancestor on the frontier
            for &h in &st.members {
                let mut g = h;
                while !st.frontier.contains(&g) {
                    g = tree.nodes[g as usize].parent;
                }
            }
        }
    }
}

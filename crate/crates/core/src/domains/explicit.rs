//! Small games defined node by node, used as fixtures and in tests.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::game::{make_key, Game, NodeKind, Player};

/// What each player learns when an edge is taken.
#[derive(Debug, Clone)]
pub enum Obs {
    /// Both players see the token and it extends the public key.
    Public(String),
    /// Per-player private tokens; `None` means the player learns nothing.
    Private([Option<String>; 2]),
}

#[derive(Debug, Clone)]
struct Node {
    kind: NodeKind,
    children: Vec<u32>,
    probs: Vec<f64>,
    labels: Vec<String>,
    utility: f64,
    tokens: [Vec<String>; 2],
    public: Vec<String>,
}

/// A game stored as an explicit node table. States are node indices.
#[derive(Debug, Clone)]
pub struct ExplicitGame {
    name: String,
    nodes: Vec<Node>,
    max_utility: f64,
}

/// Incremental constructor for [`ExplicitGame`]. Node 0 is the root.
#[derive(Debug)]
pub struct ExplicitBuilder {
    game: ExplicitGame,
}

impl ExplicitBuilder {
    pub fn new(name: impl Into<String>, root: NodeKind) -> Self {
        let root = Node {
            kind: root,
            children: Vec::new(),
            probs: Vec::new(),
            labels: Vec::new(),
            utility: 0.0,
            tokens: [Vec::new(), Vec::new()],
            public: Vec::new(),
        };
        ExplicitBuilder {
            game: ExplicitGame {
                name: name.into(),
                nodes: vec![root],
                max_utility: 0.0,
            },
        }
    }

    /// Adds a child of `parent` reached by an edge labelled `label`.
    ///
    /// `prob` is used only under chance nodes. A deciding player must observe
    /// its own action, which keeps recall perfect.
    pub fn child(&mut self, parent: u32, label: &str, prob: f64, obs: Obs, kind: NodeKind, utility: f64) -> u32 {
        let id = self.game.nodes.len() as u32;
        let par = &self.game.nodes[parent as usize];
        let mut tokens = par.tokens.clone();
        let mut public = par.public.clone();
        match obs {
            Obs::Public(t) => {
                let t = format!("p:{t}");
                tokens[0].push(t.clone());
                tokens[1].push(t.clone());
                public.push(t);
            }
            Obs::Private(ts) => {
                if let NodeKind::Decision(p) = par.kind {
                    assert!(ts[p.index()].is_some(), "actor must observe its own action");
                }
                for (i, t) in ts.into_iter().enumerate() {
                    if let Some(t) = t {
                        tokens[i].push(t);
                    }
                }
            }
        }
        if kind == NodeKind::Terminal {
            self.game.max_utility = self.game.max_utility.max(utility.abs());
        }
        self.game.nodes.push(Node {
            kind,
            children: Vec::new(),
            probs: Vec::new(),
            labels: Vec::new(),
            utility,
            tokens,
            public,
        });
        let par = &mut self.game.nodes[parent as usize];
        par.children.push(id);
        par.probs.push(prob);
        par.labels.push(label.to_string());
        id
    }

    pub fn finish(self) -> ExplicitGame {
        self.game
    }
}

fn private(p1: Option<&str>, p2: Option<&str>) -> Obs {
    Obs::Private([p1.map(str::to_string), p2.map(str::to_string)])
}

impl ExplicitGame {
    /// Four alternating binary decisions, player one first. Action 0 ends the
    /// game with payoff 0, action 1 continues; four rights pay 1.
    pub fn right_chain() -> Self {
        let mut b = ExplicitBuilder::new("chain", NodeKind::Decision(Player::One));
        let mut node = 0;
        for d in 0..4 {
            let last = d == 3;
            b.child(node, "L", 0.0, Obs::Public(format!("L{d}")), NodeKind::Terminal, 0.0);
            let next_kind = if last {
                NodeKind::Terminal
            } else if d % 2 == 0 {
                NodeKind::Decision(Player::Two)
            } else {
                NodeKind::Decision(Player::One)
            };
            node = b.child(node, "R", 0.0, Obs::Public(format!("R{d}")), next_kind, if last { 1.0 } else { 0.0 });
        }
        b.finish()
    }

    /// Chance deals one of three histories. Player two cannot tell the first
    /// two apart; player one sees all three. The deal is a single public state
    /// in which player one acts, then player two acts and the game ends.
    pub fn three_frontier() -> Self {
        let mut b = ExplicitBuilder::new("three-frontier", NodeKind::Chance);
        let p2_obs = ["x", "x", "y"];
        let pays = [[1.0, -1.0, 0.5, -0.5], [-2.0, 2.0, 1.0, 0.0], [0.0, 1.5, -1.0, 1.0]];
        for c in 0..3 {
            let h = b.child(
                0,
                &format!("deal {c}"),
                [0.5, 0.3, 0.2][c],
                private(Some(&format!("c{c}")), Some(p2_obs[c])),
                NodeKind::Decision(Player::One),
                0.0,
            );
            for a in 0..2 {
                let g = b.child(h, &format!("a{a}"), 0.0, Obs::Public(format!("a{a}")), NodeKind::Decision(Player::Two), 0.0);
                for r in 0..2 {
                    b.child(g, &format!("b{r}"), 0.0, Obs::Public(format!("b{r}")), NodeKind::Terminal, pays[c][2 * a + r]);
                }
            }
        }
        b.finish()
    }

    /// A random imperfect-information game of depth three: a chance deal seen
    /// only by player one, a player-one move that player two may or may not
    /// see, and a player-two move. Utilities are uniform in `[-1, 1]`.
    pub fn random_depth3(seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut b = ExplicitBuilder::new(format!("random3-{seed}"), NodeKind::Chance);
        let deals = rng.gen_range(2..=3);
        let weights: Vec<f64> = (0..deals).map(|_| rng.gen_range(0.1..1.0)).collect();
        let total: f64 = weights.iter().sum();
        let p1_move_public = rng.gen_bool(0.5);
        let max_p1 = rng.gen_range(2..=3);
        // player two's action count depends only on what it observed
        let p2_counts: Vec<usize> = (0..max_p1).map(|_| rng.gen_range(2..=3)).collect();
        let p2_hidden = rng.gen_range(2..=3);
        for c in 0..deals {
            let tok = format!("c{c}");
            let h = b.child(0, &format!("deal {c}"), weights[c] / total, private(Some(&tok), None), NodeKind::Decision(Player::One), 0.0);
            let n1 = rng.gen_range(2..=max_p1);
            for a in 0..n1 {
                let obs = if p1_move_public {
                    Obs::Public(format!("a{a}"))
                } else {
                    private(Some(&format!("a{a}")), None)
                };
                let g = b.child(h, &format!("a{a}"), 0.0, obs, NodeKind::Decision(Player::Two), 0.0);
                let n2 = if p1_move_public { p2_counts[a] } else { p2_hidden };
                for r in 0..n2 {
                    let u = rng.gen_range(-1.0..=1.0);
                    b.child(g, &format!("b{r}"), 0.0, Obs::Public(format!("b{r}")), NodeKind::Terminal, u);
                }
            }
        }
        b.finish()
    }

    fn node(&self, s: &u32) -> &Node {
        &self.nodes[*s as usize]
    }
}

impl Game for ExplicitGame {
    type State = u32;

    fn name(&self) -> String {
        self.name.clone()
    }

    fn root(&self) -> u32 {
        0
    }

    fn node_kind(&self, s: &u32) -> NodeKind {
        self.node(s).kind
    }

    fn num_actions(&self, s: &u32) -> usize {
        self.node(s).children.len()
    }

    fn child(&self, s: &u32, a: usize) -> u32 {
        self.node(s).children[a]
    }

    fn chance_prob(&self, s: &u32, a: usize) -> f64 {
        self.node(s).probs[a]
    }

    fn utility(&self, s: &u32) -> f64 {
        self.node(s).utility
    }

    fn infoset_key(&self, s: &u32, p: Player) -> String {
        let n = self.node(s);
        make_key(&n.tokens[p.index()], n.kind == NodeKind::Decision(p))
    }

    fn public_key(&self, s: &u32) -> String {
        self.node(s).public.join("/")
    }

    fn action_label(&self, s: &u32, a: usize) -> String {
        self.node(s).labels[a].clone()
    }

    fn max_utility(&self) -> f64 {
        self.max_utility
    }
}

//! Kuhn poker: three cards, one card each, ante 1, single bet of 1.

use super::{GameTree, NodeSpec};
use crate::game::Player;

pub(super) struct Builder {
    pub(super) nodes: Vec<NodeSpec>,
}

impl Builder {
    pub(super) fn new() -> Self {
        Builder { nodes: Vec::new() }
    }

    /// Reserves an id so a parent can be numbered before its children.
    pub(super) fn reserve(&mut self) -> usize {
        self.nodes.push(NodeSpec::Terminal { payoff: 0.0 });
        self.nodes.len() - 1
    }

    pub(super) fn terminal(&mut self, payoff: f64) -> usize {
        self.nodes.push(NodeSpec::Terminal { payoff });
        self.nodes.len() - 1
    }

    pub(super) fn set(&mut self, id: usize, spec: NodeSpec) {
        self.nodes[id] = spec;
    }
}

const CARDS: [char; 3] = ['J', 'Q', 'K'];

/// Builds Kuhn poker. Each player holds one of J < Q < K, dealt uniformly
/// without replacement. X acts first; actions are `p` (check or fold) and
/// `b` (bet or call). Infoset labels are the owner's card followed by the
/// betting history, e.g. `Qpb` for X holding a queen after check and bet.
///
/// The game value to X is −1/18.
pub fn build_kuhn_poker() -> GameTree {
    let mut b = Builder::new();
    let root = b.reserve();
    let mut outcomes = Vec::new();
    for cx in 0..3 {
        for cy in 0..3 {
            if cx != cy {
                outcomes.push((deal(&mut b, cx, cy), 1.0 / 6.0));
            }
        }
    }
    b.set(root, NodeSpec::Chance { outcomes });
    GameTree::from_nodes(b.nodes).expect("Kuhn poker is a valid tree")
}

fn deal(b: &mut Builder, cx: usize, cy: usize) -> usize {
    let win = if cx > cy { 1.0 } else { -1.0 };
    let id = b.reserve();
    // After a check.
    let y_after_p = {
        let y = b.reserve();
        let showdown = b.terminal(win);
        let x_faces_bet = {
            let x = b.reserve();
            let fold = b.terminal(-1.0);
            let call = b.terminal(2.0 * win);
            b.set(x, decision(Player::X, cx, "pb", fold, call));
            x
        };
        b.set(y, decision(Player::Y, cy, "p", showdown, x_faces_bet));
        y
    };
    // After a bet.
    let y_after_b = {
        let y = b.reserve();
        let fold = b.terminal(1.0);
        let call = b.terminal(2.0 * win);
        b.set(y, decision(Player::Y, cy, "b", fold, call));
        y
    };
    b.set(id, decision(Player::X, cx, "", y_after_p, y_after_b));
    id
}

fn decision(player: Player, card: usize, history: &str, p: usize, bet: usize) -> NodeSpec {
    NodeSpec::Decision {
        player,
        infoset: format!("{}{history}", CARDS[card]),
        actions: vec![("p".into(), p), ("b".into(), bet)],
    }
}

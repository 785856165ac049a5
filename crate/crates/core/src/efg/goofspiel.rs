//! Goofspiel with three cards per hand and a fixed prize order.

use super::kuhn::Builder;
use super::{GameTree, NodeSpec};
use crate::game::Player;

/// Builds three-card Goofspiel. Each player holds bids 1, 2, 3; the prizes
/// 1, 2, 3 are revealed in that order. Each round X bids, then Y bids
/// without seeing X's card; the higher bid wins the prize and equal bids
/// discard it. Only the outcome of each round (`w`, `l` or `t` from the
/// owner's side) is revealed, never the opponent's card. The last round is
/// forced. The payoff to X is the prize total won by X minus that of Y.
///
/// Infoset labels list the owner's bids with each round's outcome, e.g.
/// `2w` for X after winning round one with a 2.
pub fn build_goofspiel3() -> GameTree {
    let mut b = Builder::new();
    let root = b.reserve();
    let spec = x_turn(&mut b, &State::default());
    b.set(root, spec);
    GameTree::from_nodes(b.nodes).expect("Goofspiel is a valid tree")
}

#[derive(Clone, Default)]
struct State {
    x_hist: String,
    y_hist: String,
    x_used: Vec<u8>,
    y_used: Vec<u8>,
    score: f64,
}

impl State {
    fn round(&self) -> usize {
        self.x_used.len()
    }
}

fn remaining(used: &[u8]) -> Vec<u8> {
    (1..=3).filter(|c| !used.contains(c)).collect()
}

fn outcome(mine: u8, theirs: u8) -> char {
    match mine.cmp(&theirs) {
        std::cmp::Ordering::Greater => 'w',
        std::cmp::Ordering::Less => 'l',
        std::cmp::Ordering::Equal => 't',
    }
}

fn settle(s: &State, bx: u8, by: u8) -> State {
    let prize = (s.round() + 1) as f64;
    let mut next = s.clone();
    next.x_used.push(bx);
    next.y_used.push(by);
    next.x_hist.push((b'0' + bx) as char);
    next.x_hist.push(outcome(bx, by));
    next.y_hist.push((b'0' + by) as char);
    next.y_hist.push(outcome(by, bx));
    next.score += match bx.cmp(&by) {
        std::cmp::Ordering::Greater => prize,
        std::cmp::Ordering::Less => -prize,
        std::cmp::Ordering::Equal => 0.0,
    };
    next
}

fn x_turn(b: &mut Builder, s: &State) -> NodeSpec {
    if s.round() == 2 {
        let last = settle(s, remaining(&s.x_used)[0], remaining(&s.y_used)[0]);
        return NodeSpec::Terminal { payoff: last.score };
    }
    let mut actions = Vec::new();
    for bx in remaining(&s.x_used) {
        let id = b.reserve();
        let spec = y_turn(b, s, bx);
        b.set(id, spec);
        actions.push((bx.to_string(), id));
    }
    NodeSpec::Decision {
        player: Player::X,
        infoset: label(&s.x_hist),
        actions,
    }
}

fn y_turn(b: &mut Builder, s: &State, bx: u8) -> NodeSpec {
    let mut actions = Vec::new();
    for by in remaining(&s.y_used) {
        let id = b.reserve();
        let spec = x_turn(b, &settle(s, bx, by));
        b.set(id, spec);
        actions.push((by.to_string(), id));
    }
    NodeSpec::Decision {
        player: Player::Y,
        infoset: label(&s.y_hist),
        actions,
    }
}

fn label(hist: &str) -> String {
    if hist.is_empty() {
        "-".into()
    } else {
        hist.into()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shape_and_symmetry() {
        let t = build_goofspiel3();
        // Round one: 1 infoset per player; round two: one per (own bid, outcome).
        let count = |p| t.player_infosets(p).len();
        assert_eq!(count(Player::X), 1 + 7);
        assert_eq!(count(Player::Y), 1 + 7);
        assert_eq!(t.dim(Player::X), 3 + 7 * 2);
        // The game is symmetric, so the uniform profile is worth zero.
        let u = t.uniform_profile();
        assert!(t.value(&u.x, &u.y).abs() < 1e-12);
        assert!(t.best_response_value(Player::X, &u.y) > 0.0);
    }
}

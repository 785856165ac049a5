//! Line-oriented text format for game trees.
//!
//! ```text
//! # comment
//! <id> decision <X|Y> <infoset> <action>:<child> ...
//! <id> chance <child>:<prob> ...
//! <id> terminal <payoff>
//! ```
//!
//! Every id in `0..N` appears exactly once, in any order; node 0 is the
//! root. Labels and actions may not contain whitespace or `:`. Payoffs are
//! to player X.

use std::fmt::Write as _;

use super::{GameTree, Node, NodeSpec};
use crate::error::{Error, Result};
use crate::game::Player;

fn malformed(line: usize, msg: impl std::fmt::Display) -> Error {
    Error::MalformedTree(format!("line {line}: {msg}"))
}

fn parse_num<T: std::str::FromStr>(s: &str, line: usize, what: &str) -> Result<T> {
    s.parse().map_err(|_| malformed(line, format!("invalid {what} `{s}`")))
}

fn split_pair<'a>(s: &'a str, line: usize) -> Result<(&'a str, &'a str)> {
    s.rsplit_once(':')
        .ok_or_else(|| malformed(line, format!("expected `a:b`, got `{s}`")))
}

/// Parses and validates a tree.
pub fn parse_tree(text: &str) -> Result<GameTree> {
    let mut specs: Vec<Option<NodeSpec>> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let mut tok = content.split_whitespace();
        let id: usize = parse_num(tok.next().unwrap_or(""), line, "node id")?;
        let kind = tok.next().ok_or_else(|| malformed(line, "missing node kind"))?;
        let spec = match kind {
            "terminal" => {
                let payoff: f64 = parse_num(
                    tok.next().ok_or_else(|| malformed(line, "missing payoff"))?,
                    line,
                    "payoff",
                )?;
                NodeSpec::Terminal { payoff }
            }
            "chance" => {
                let outcomes = tok
                    .by_ref()
                    .map(|t| {
                        let (c, p) = split_pair(t, line)?;
                        Ok((parse_num(c, line, "child id")?, parse_num(p, line, "probability")?))
                    })
                    .collect::<Result<Vec<_>>>()?;
                NodeSpec::Chance { outcomes }
            }
            "decision" => {
                let player = match tok.next() {
                    Some("X") => Player::X,
                    Some("Y") => Player::Y,
                    other => return Err(malformed(line, format!("invalid player {other:?}"))),
                };
                let infoset = tok
                    .next()
                    .ok_or_else(|| malformed(line, "missing information set"))?
                    .to_string();
                let actions = tok
                    .by_ref()
                    .map(|t| {
                        let (a, c) = split_pair(t, line)?;
                        if a.is_empty() {
                            return Err(malformed(line, "empty action label"));
                        }
                        Ok((a.to_string(), parse_num(c, line, "child id")?))
                    })
                    .collect::<Result<Vec<_>>>()?;
                NodeSpec::Decision {
                    player,
                    infoset,
                    actions,
                }
            }
            other => return Err(malformed(line, format!("unknown node kind `{other}`"))),
        };
        if tok.next().is_some() {
            return Err(malformed(line, "trailing tokens"));
        }
        if specs.len() <= id {
            specs.resize(id + 1, None);
        }
        if specs[id].is_some() {
            return Err(malformed(line, format!("duplicate node id {id}")));
        }
        specs[id] = Some(spec);
    }
    let specs = specs
        .into_iter()
        .enumerate()
        .map(|(id, s)| s.ok_or_else(|| Error::MalformedTree(format!("node {id} is missing"))))
        .collect::<Result<Vec<_>>>()?;
    GameTree::from_nodes(specs)
}

/// Serializes a tree; [`parse_tree`] reads it back to an equal tree.
pub fn write_tree(tree: &GameTree) -> String {
    let mut out = String::new();
    for (id, node) in tree.nodes().iter().enumerate() {
        match node {
            Node::Terminal { payoff } => {
                writeln!(out, "{id} terminal {payoff:.16e}").unwrap();
            }
            Node::Chance { children, probs } => {
                write!(out, "{id} chance").unwrap();
                for (c, p) in children.iter().zip(probs) {
                    write!(out, " {c}:{p:.16e}").unwrap();
                }
                out.push('\n');
            }
            Node::Decision { infoset, children } => {
                let iset = &tree.infosets()[*infoset];
                let who = match iset.player {
                    Player::X => "X",
                    Player::Y => "Y",
                };
                write!(out, "{id} decision {who} {}", iset.label).unwrap();
                for (a, c) in iset.actions.iter().zip(children) {
                    write!(out, " {a}:{c}").unwrap();
                }
                out.push('\n');
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    const SMALL: &str = "\
# X picks, then a coin flip
0 decision X root L:1 R:2
2 chance 3:0.5 4:0.5   # out of order is fine
1 terminal 1
3 terminal 2.5
4 terminal -1e0
";

    #[test]
    fn parses_and_round_trips() {
        let t = parse_tree(SMALL).unwrap();
        assert_eq!(t.nodes().len(), 5);
        assert_eq!(t.dim(Player::X), 2);
        assert_eq!(t.dim(Player::Y), 0);
        let again = parse_tree(&write_tree(&t)).unwrap();
        assert_eq!(again, t);
    }

    #[test]
    fn reports_line_numbers() {
        let err = parse_tree("0 decision Z a x:1\n").unwrap_err();
        assert!(err.to_string().contains("line 1"), "{err}");
        let err = parse_tree("0 terminal 0\n0 terminal 1\n").unwrap_err();
        assert!(err.to_string().contains("duplicate"), "{err}");
        let err = parse_tree("1 terminal 0\n").unwrap_err();
        assert!(err.to_string().contains("node 0 is missing"), "{err}");
        let err = parse_tree("0 chance 1:0.5\n1 terminal 0\n").unwrap_err();
        assert!(matches!(err, Error::MalformedTree(_)));
    }
}

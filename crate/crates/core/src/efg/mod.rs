//! Two-player zero-sum extensive-form games with perfect recall.
//!
//! A player's strategy is stored as one flat vector: the local action
//! distributions of its information sets, concatenated in the order the
//! sets are first reached by a depth-first walk from the root. The same
//! layout holds the player's realization plan (sequence form), where entry
//! `(I, a)` is the probability the player's own actions lead to `I` and
//! pick `a`.

mod cfr;
mod format;
mod goofspiel;
mod kuhn;

pub use cfr::{cfr_context, cfr_iteration, infoset_learners, CfrContext};
pub use format::{parse_tree, write_tree};
pub use goofspiel::build_goofspiel3;
pub use kuhn::build_kuhn_poker;

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::game::{Player, SimplexVector, SIMPLEX_NEG_TOL, SIMPLEX_SUM_TOL};

/// Tolerance on chance probabilities summing to one.
pub const CHANCE_SUM_TOL: f64 = 1e-9;

/// A node as written by a builder or the text format, with information
/// sets named by label.
#[derive(Debug, Clone, PartialEq)]
pub enum NodeSpec {
    Decision {
        player: Player,
        infoset: String,
        actions: Vec<(String, usize)>,
    },
    Chance {
        outcomes: Vec<(usize, f64)>,
    },
    Terminal {
        payoff: f64,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    Decision { infoset: usize, children: Vec<usize> },
    Chance { children: Vec<usize>, probs: Vec<f64> },
    /// Payoff to player X.
    Terminal { payoff: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Infoset {
    pub player: Player,
    pub label: String,
    pub actions: Vec<String>,
    /// Start of this set's block in the owner's flat vector.
    pub offset: usize,
    /// Flat index of the owner's last sequence before reaching this set.
    pub parent: Option<usize>,
    nodes: Vec<usize>,
}

impl Infoset {
    pub fn num_actions(&self) -> usize {
        self.actions.len()
    }

    pub fn nodes(&self) -> &[usize] {
        &self.nodes
    }
}

/// A validated game tree rooted at node 0.
#[derive(Debug, Clone, PartialEq)]
pub struct GameTree {
    nodes: Vec<Node>,
    infosets: Vec<Infoset>,
    by_player: [Vec<usize>; 2],
    dims: [usize; 2],
}

fn idx(p: Player) -> usize {
    match p {
        Player::X => 0,
        Player::Y => 1,
    }
}

/// A behavioral strategy for each player, in the tree's flat layout.
#[derive(Debug, Clone, PartialEq)]
pub struct BehavioralProfile {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

impl BehavioralProfile {
    pub fn strategy(&self, player: Player) -> &[f64] {
        match player {
            Player::X => &self.x,
            Player::Y => &self.y,
        }
    }
}

impl GameTree {
    /// Validates `specs` (node `i` is `specs[i]`, the root is node 0).
    ///
    /// Rejects dangling or shared children, unreachable nodes, chance
    /// probabilities that are negative or do not sum to one, information
    /// sets whose nodes disagree on their actions, and violations of
    /// perfect recall.
    pub fn from_nodes(specs: Vec<NodeSpec>) -> Result<GameTree> {
        let bad = |msg: String| Err(Error::MalformedTree(msg));
        let n = specs.len();
        if n == 0 {
            return bad("no nodes".into());
        }
        let mut parent_of: Vec<Option<usize>> = vec![None; n];
        for (id, spec) in specs.iter().enumerate() {
            let children: Vec<usize> = match spec {
                NodeSpec::Decision { actions, .. } => {
                    if actions.is_empty() {
                        return bad(format!("decision node {id} has no actions"));
                    }
                    actions.iter().map(|(_, c)| *c).collect()
                }
                NodeSpec::Chance { outcomes } => {
                    if outcomes.is_empty() {
                        return bad(format!("chance node {id} has no outcomes"));
                    }
                    if outcomes.iter().any(|(_, p)| !p.is_finite() || *p < 0.0) {
                        return bad(format!("chance node {id} has an invalid probability"));
                    }
                    let total: f64 = outcomes.iter().map(|(_, p)| p).sum();
                    if (total - 1.0).abs() > CHANCE_SUM_TOL {
                        return bad(format!("chance node {id} probabilities sum to {total}"));
                    }
                    outcomes.iter().map(|(c, _)| *c).collect()
                }
                NodeSpec::Terminal { payoff } => {
                    if !payoff.is_finite() {
                        return bad(format!("terminal node {id} has a non-finite payoff"));
                    }
                    Vec::new()
                }
            };
            for c in children {
                if c >= n {
                    return bad(format!("node {id} points to missing node {c}"));
                }
                if c == 0 || parent_of[c].is_some() {
                    return bad(format!("node {c} has more than one parent"));
                }
                parent_of[c] = Some(id);
            }
        }

        // Depth-first walk from the root, tracking each player's last
        // sequence as (infoset id, action).
        let mut keys: HashMap<(Player, String), usize> = HashMap::new();
        let mut infosets: Vec<Infoset> = Vec::new();
        let mut parents: Vec<Option<(usize, usize)>> = Vec::new();
        let mut nodes: Vec<Node> = Vec::with_capacity(n);
        let mut visited = vec![false; n];
        let mut stack: Vec<(usize, [Option<(usize, usize)>; 2])> = vec![(0, [None, None])];
        let mut slots: Vec<Option<Node>> = vec![None; n];
        while let Some((id, seqs)) = stack.pop() {
            visited[id] = true;
            match &specs[id] {
                NodeSpec::Terminal { payoff } => {
                    slots[id] = Some(Node::Terminal { payoff: *payoff });
                }
                NodeSpec::Chance { outcomes } => {
                    for (c, _) in outcomes.iter().rev() {
                        stack.push((*c, seqs));
                    }
                    slots[id] = Some(Node::Chance {
                        children: outcomes.iter().map(|(c, _)| *c).collect(),
                        probs: outcomes.iter().map(|(_, p)| *p).collect(),
                    });
                }
                NodeSpec::Decision {
                    player,
                    infoset,
                    actions,
                } => {
                    let p = idx(*player);
                    let key = (*player, infoset.clone());
                    let labels: Vec<String> = actions.iter().map(|(a, _)| a.clone()).collect();
                    let iset = match keys.get(&key) {
                        Some(&i) => {
                            if infosets[i].actions != labels {
                                return bad(format!(
                                    "information set {infoset} has inconsistent actions at node {id}"
                                ));
                            }
                            if parents[i] != seqs[p] {
                                return bad(format!(
                                    "information set {infoset} violates perfect recall at node {id}"
                                ));
                            }
                            i
                        }
                        None => {
                            let i = infosets.len();
                            keys.insert(key, i);
                            infosets.push(Infoset {
                                player: *player,
                                label: infoset.clone(),
                                actions: labels,
                                offset: 0,
                                parent: None,
                                nodes: Vec::new(),
                            });
                            parents.push(seqs[p]);
                            i
                        }
                    };
                    infosets[iset].nodes.push(id);
                    for (a, (_, c)) in actions.iter().enumerate().rev() {
                        let mut next = seqs;
                        next[p] = Some((iset, a));
                        stack.push((*c, next));
                    }
                    slots[id] = Some(Node::Decision {
                        infoset: iset,
                        children: actions.iter().map(|(_, c)| *c).collect(),
                    });
                }
            }
        }
        if let Some(orphan) = visited.iter().position(|v| !v) {
            return bad(format!("node {orphan} is unreachable from the root"));
        }
        nodes.extend(slots.into_iter().map(|s| s.expect("all nodes visited")));

        let mut dims = [0usize; 2];
        let mut by_player: [Vec<usize>; 2] = [Vec::new(), Vec::new()];
        for (i, iset) in infosets.iter_mut().enumerate() {
            let p = idx(iset.player);
            iset.offset = dims[p];
            dims[p] += iset.actions.len();
            by_player[p].push(i);
        }
        for i in 0..infosets.len() {
            infosets[i].parent = parents[i].map(|(j, a)| infosets[j].offset + a);
        }
        Ok(GameTree {
            nodes,
            infosets,
            by_player,
            dims,
        })
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn infosets(&self) -> &[Infoset] {
        &self.infosets
    }

    /// Infoset ids owned by `player`, in flat-layout order.
    pub fn player_infosets(&self, player: Player) -> &[usize] {
        &self.by_player[idx(player)]
    }

    /// Length of `player`'s flat strategy vector (its number of sequences,
    /// not counting the empty one).
    pub fn dim(&self, player: Player) -> usize {
        self.dims[idx(player)]
    }

    /// Action counts of `player`'s infosets, in layout order.
    pub fn layout(&self, player: Player) -> Vec<usize> {
        self.player_infosets(player)
            .iter()
            .map(|&i| self.infosets[i].num_actions())
            .collect()
    }

    pub fn uniform_strategy(&self, player: Player) -> Vec<f64> {
        let mut out = vec![0.0; self.dim(player)];
        for &i in self.player_infosets(player) {
            let iset = &self.infosets[i];
            let k = iset.num_actions() as f64;
            out[iset.offset..iset.offset + iset.num_actions()]
                .iter_mut()
                .for_each(|v| *v = 1.0 / k);
        }
        out
    }

    pub fn uniform_profile(&self) -> BehavioralProfile {
        BehavioralProfile {
            x: self.uniform_strategy(Player::X),
            y: self.uniform_strategy(Player::Y),
        }
    }

    /// Checks that every local block of `strategy` is on its simplex.
    pub fn validate_strategy(&self, player: Player, strategy: &[f64]) -> Result<()> {
        crate::game::check_dim(self.dim(player), strategy.len())?;
        for &i in self.player_infosets(player) {
            let iset = &self.infosets[i];
            let local = &strategy[iset.offset..iset.offset + iset.num_actions()];
            let sum: f64 = local.iter().sum();
            if local.iter().any(|v| !v.is_finite() || *v < -SIMPLEX_NEG_TOL)
                || (sum - 1.0).abs() > SIMPLEX_SUM_TOL
            {
                return Err(Error::NotSimplex(format!(
                    "information set {} has local strategy {local:?}",
                    iset.label
                )));
            }
        }
        Ok(())
    }

    /// The local strategy of `player` at infoset `id`.
    pub fn local<'a>(&self, strategy: &'a [f64], id: usize) -> &'a [f64] {
        let iset = &self.infosets[id];
        &strategy[iset.offset..iset.offset + iset.num_actions()]
    }

    /// Sequence-form realization plan of a behavioral strategy.
    pub fn realization(&self, player: Player, behavioral: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; behavioral.len()];
        for &i in self.player_infosets(player) {
            let iset = &self.infosets[i];
            let reach = iset.parent.map_or(1.0, |p| out[p]);
            for a in 0..iset.num_actions() {
                out[iset.offset + a] = reach * behavioral[iset.offset + a];
            }
        }
        out
    }

    /// Behavioral strategy of a (possibly unnormalized) realization plan.
    /// Infosets the plan never reaches get the uniform strategy.
    pub fn behavioral(&self, player: Player, realization: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; realization.len()];
        for &i in self.player_infosets(player) {
            let iset = &self.infosets[i];
            let range = iset.offset..iset.offset + iset.num_actions();
            let total: f64 = realization[range.clone()].iter().sum();
            for j in range {
                out[j] = if total > 0.0 {
                    realization[j] / total
                } else {
                    1.0 / iset.num_actions() as f64
                };
            }
        }
        out
    }

    /// Expected payoff to X.
    pub fn value(&self, x: &[f64], y: &[f64]) -> f64 {
        self.eval(0, x, y)
    }

    fn eval(&self, node: usize, x: &[f64], y: &[f64]) -> f64 {
        match &self.nodes[node] {
            Node::Terminal { payoff } => *payoff,
            Node::Chance { children, probs } => children
                .iter()
                .zip(probs)
                .map(|(&c, p)| p * self.eval(c, x, y))
                .sum(),
            Node::Decision { infoset, children } => {
                let iset = &self.infosets[*infoset];
                let s = if iset.player == Player::X { x } else { y };
                children
                    .iter()
                    .enumerate()
                    .map(|(a, &c)| {
                        let p = s[iset.offset + a];
                        if p == 0.0 {
                            0.0
                        } else {
                            p * self.eval(c, x, y)
                        }
                    })
                    .sum()
            }
        }
    }

    /// Counterfactual utilities of `player` at `(x, y)` in the flat layout,
    /// with the value of the profile to X.
    ///
    /// Entry `(I, a)` sums, over nodes `h ∈ I`, the probability that chance
    /// and the opponent reach `h` times the player's expected payoff after
    /// taking `a` at `h`.
    pub fn counterfactual_utility(&self, player: Player, x: &[f64], y: &[f64]) -> (Vec<f64>, f64) {
        let mut out = vec![0.0; self.dim(player)];
        let sign = if player == Player::X { 1.0 } else { -1.0 };
        let value = self.cf(0, player, sign, 1.0, x, y, &mut out);
        (out, value)
    }

    #[allow(clippy::too_many_arguments)]
    fn cf(
        &self,
        node: usize,
        player: Player,
        sign: f64,
        reach: f64,
        x: &[f64],
        y: &[f64],
        out: &mut [f64],
    ) -> f64 {
        match &self.nodes[node] {
            Node::Terminal { payoff } => *payoff,
            Node::Chance { children, probs } => children
                .iter()
                .zip(probs)
                .map(|(&c, p)| p * self.cf(c, player, sign, reach * p, x, y, out))
                .sum(),
            Node::Decision { infoset, children } => {
                let iset = &self.infosets[*infoset];
                let s = if iset.player == Player::X { x } else { y };
                if iset.player == player {
                    let mut v = 0.0;
                    for (a, &c) in children.iter().enumerate() {
                        let child = self.cf(c, player, sign, reach, x, y, out);
                        out[iset.offset + a] += sign * reach * child;
                        v += s[iset.offset + a] * child;
                    }
                    v
                } else {
                    let mut v = 0.0;
                    for (a, &c) in children.iter().enumerate() {
                        let p = s[iset.offset + a];
                        if p > 0.0 {
                            v += p * self.cf(c, player, sign, reach * p, x, y, out);
                        }
                    }
                    v
                }
            }
        }
    }

    /// Best-response value of `player` against the opponent's behavioral
    /// strategy, reported as a payoff to X (a maximum for X, a minimum for
    /// Y). Ties go to the lowest action index.
    pub fn best_response_value(&self, player: Player, opponent: &[f64]) -> f64 {
        self.best_response(player, opponent).0
    }

    /// [`best_response_value`](Self::best_response_value) together with a
    /// pure best response in the responder's flat layout.
    pub fn best_response(&self, player: Player, opponent: &[f64]) -> (f64, Vec<f64>) {
        // Weight of each node: chance times opponent probability along the path.
        let mut weight = vec![0.0; self.nodes.len()];
        let mut stack = vec![(0usize, 1.0f64)];
        while let Some((id, w)) = stack.pop() {
            weight[id] = w;
            match &self.nodes[id] {
                Node::Terminal { .. } => {}
                Node::Chance { children, probs } => {
                    for (&c, p) in children.iter().zip(probs) {
                        stack.push((c, w * p));
                    }
                }
                Node::Decision { infoset, children } => {
                    let iset = &self.infosets[*infoset];
                    for (a, &c) in children.iter().enumerate() {
                        let p = if iset.player == player {
                            1.0
                        } else {
                            opponent[iset.offset + a]
                        };
                        stack.push((c, w * p));
                    }
                }
            }
        }
        let mut ctx = BrContext {
            tree: self,
            player,
            sign: if player == Player::X { 1.0 } else { -1.0 },
            weight,
            memo: vec![None; self.nodes.len()],
            choice: vec![None; self.infosets.len()],
        };
        let value = ctx.node_value(0);
        let mut pure = vec![0.0; self.dim(player)];
        for &i in self.player_infosets(player) {
            let a = ctx.choose(i);
            pure[self.infosets[i].offset + a] = 1.0;
        }
        (value, pure)
    }

    /// Local strategies of one player as simplex vectors.
    pub fn local_strategies(&self, player: Player, strategy: &[f64]) -> Result<Vec<SimplexVector>> {
        self.player_infosets(player)
            .iter()
            .map(|&i| SimplexVector::new(self.local(strategy, i).to_vec()))
            .collect()
    }
}

struct BrContext<'a> {
    tree: &'a GameTree,
    player: Player,
    sign: f64,
    weight: Vec<f64>,
    memo: Vec<Option<f64>>,
    choice: Vec<Option<usize>>,
}

impl BrContext<'_> {
    /// Weighted value to X of the subtree at `node` under the best response.
    fn node_value(&mut self, node: usize) -> f64 {
        if let Some(v) = self.memo[node] {
            return v;
        }
        let tree = self.tree;
        let v = match &tree.nodes[node] {
            Node::Terminal { payoff } => self.weight[node] * payoff,
            Node::Chance { children, .. } => children.iter().map(|&c| self.node_value(c)).sum(),
            Node::Decision { infoset, children } => {
                if tree.infosets[*infoset].player == self.player {
                    let a = self.choose(*infoset);
                    self.node_value(children[a])
                } else {
                    children.iter().map(|&c| self.node_value(c)).sum()
                }
            }
        };
        self.memo[node] = Some(v);
        v
    }

    fn choose(&mut self, infoset: usize) -> usize {
        if let Some(a) = self.choice[infoset] {
            return a;
        }
        let tree = self.tree;
        let iset = &tree.infosets[infoset];
        let mut totals = vec![0.0; iset.num_actions()];
        for &h in &iset.nodes {
            if let Node::Decision { children, .. } = &tree.nodes[h] {
                for (t, &c) in totals.iter_mut().zip(children) {
                    *t += self.node_value(c);
                }
            }
        }
        let mut best = 0;
        for a in 1..totals.len() {
            if self.sign * totals[a] > self.sign * totals[best] {
                best = a;
            }
        }
        self.choice[infoset] = Some(best);
        best
    }
}

/// Sum of both players' best-response improvements at `profile`:
/// `BR_X(y) − BR_Y(x)`, both as payoffs to X.
pub fn efg_nash_gap(tree: &GameTree, profile: &BehavioralProfile) -> Result<f64> {
    tree.validate_strategy(Player::X, &profile.x)?;
    tree.validate_strategy(Player::Y, &profile.y)?;
    Ok(tree.best_response_value(Player::X, &profile.y)
        - tree.best_response_value(Player::Y, &profile.x))
}

/// Average of behavioral profiles that corresponds to the weighted average
/// of their realization plans: each infoset's local strategies are weighted
/// by the iteration weight times the owner's probability of reaching it.
/// Infosets reached with zero total weight get the uniform strategy.
pub fn average_profile(
    tree: &GameTree,
    weights: &[f64],
    profiles: &[BehavioralProfile],
) -> Result<BehavioralProfile> {
    if profiles.is_empty() {
        return Err(Error::EmptySequence);
    }
    crate::game::check_dim(profiles.len(), weights.len())?;
    if weights.iter().any(|w| !w.is_finite() || *w < 0.0) || weights.iter().all(|&w| w == 0.0) {
        return Err(Error::Config("averaging weights must be nonnegative and not all zero".into()));
    }
    let mut sums = [vec![0.0; tree.dim(Player::X)], vec![0.0; tree.dim(Player::Y)]];
    for (w, prof) in weights.iter().zip(profiles) {
        for (p, sum) in [Player::X, Player::Y].into_iter().zip(sums.iter_mut()) {
            let s = prof.strategy(p);
            tree.validate_strategy(p, s)?;
            for (acc, r) in sum.iter_mut().zip(tree.realization(p, s)) {
                *acc += w * r;
            }
        }
    }
    Ok(BehavioralProfile {
        x: tree.behavioral(Player::X, &sums[0]),
        y: tree.behavioral(Player::Y, &sums[1]),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    /// X picks L or R; R leads to a Y decision; payoffs to X.
    fn small_tree() -> GameTree {
        use NodeSpec::*;
        GameTree::from_nodes(vec![
            Decision {
                player: Player::X,
                infoset: "root".into(),
                actions: vec![("L".into(), 1), ("R".into(), 2)],
            },
            Terminal { payoff: 1.0 },
            Decision {
                player: Player::Y,
                infoset: "y".into(),
                actions: vec![("l".into(), 3), ("r".into(), 4)],
            },
            Terminal { payoff: 3.0 },
            Terminal { payoff: -1.0 },
        ])
        .unwrap()
    }

    #[test]
    fn layout_and_values() {
        let t = small_tree();
        assert_eq!(t.dim(Player::X), 2);
        assert_eq!(t.dim(Player::Y), 2);
        let x = [0.5, 0.5];
        let y = [0.25, 0.75];
        assert!((t.value(&x, &y) - (0.5 + 0.5 * (0.75 - 0.75))).abs() < 1e-15);
        assert_eq!(t.best_response_value(Player::X, &y), 1.0);
        assert_eq!(t.best_response_value(Player::Y, &x), 0.5 * 1.0 + 0.5 * -1.0);
        let (cf, v) = t.counterfactual_utility(Player::X, &x, &y);
        assert_eq!(cf, vec![1.0, 0.0]);
        assert_eq!(v, 0.5);
        let (cf, _) = t.counterfactual_utility(Player::Y, &x, &y);
        assert_eq!(cf, vec![-1.5, 0.5]);
    }

    #[test]
    fn single_infoset_average_is_mean() {
        let t = small_tree();
        let a = BehavioralProfile {
            x: vec![1.0, 0.0],
            y: vec![1.0, 0.0],
        };
        let b = BehavioralProfile {
            x: vec![0.0, 1.0],
            y: vec![0.0, 1.0],
        };
        let avg = average_profile(&t, &[1.0, 1.0], &[a.clone(), b]).unwrap();
        assert_eq!(avg.x, vec![0.5, 0.5]);
        // Y is only reached through X, whose own reach never scales Y's plan.
        assert_eq!(avg.y, vec![0.5, 0.5]);
        assert_eq!(average_profile(&t, &[2.0], &[a.clone()]).unwrap(), a);
        assert!(average_profile(&t, &[0.0], &[a]).is_err());
    }

    #[test]
    fn rejects_malformed_trees() {
        use NodeSpec::*;
        let orphan = GameTree::from_nodes(vec![Terminal { payoff: 0.0 }, Terminal { payoff: 1.0 }]);
        assert!(matches!(orphan, Err(Error::MalformedTree(_))));
        let bad_chance = GameTree::from_nodes(vec![
            Chance {
                outcomes: vec![(1, 0.5), (2, 0.4)],
            },
            Terminal { payoff: 0.0 },
            Terminal { payoff: 0.0 },
        ]);
        assert!(bad_chance.is_err());
        let dangling = GameTree::from_nodes(vec![Chance {
            outcomes: vec![(7, 1.0)],
        }]);
        assert!(dangling.is_err());
        // X forgets its own first action: both second-level nodes share an infoset.
        let forgetful = GameTree::from_nodes(vec![
            Decision {
                player: Player::X,
                infoset: "a".into(),
                actions: vec![("l".into(), 1), ("r".into(), 2)],
            },
            Decision {
                player: Player::X,
                infoset: "b".into(),
                actions: vec![("l".into(), 3), ("r".into(), 4)],
            },
            Decision {
                player: Player::X,
                infoset: "b".into(),
                actions: vec![("l".into(), 5), ("r".into(), 6)],
            },
            Terminal { payoff: 0.0 },
            Terminal { payoff: 0.0 },
            Terminal { payoff: 0.0 },
            Terminal { payoff: 0.0 },
        ]);
        assert!(matches!(forgetful, Err(Error::MalformedTree(m)) if m.contains("perfect recall")));
    }
}

//! Self-play between two learners: the simultaneous, alternating and
//! extragradient setups, per-checkpoint traces, runtime monitors and the
//! CSV trace format.
//!
//! The driver works with any [`Environment`]: a matrix game, where each
//! player has one decision point, or a game tree, where each player has one
//! local learner per information set fed with counterfactual utilities.

use std::io::Write;

use crate::efg::GameTree;
use crate::error::{Error, Result};
use crate::game::{last_half_start, NormalFormGame, Player};
use crate::learner::{DynLearner, Learner, LearnerSpec};
use crate::linalg::{dot, max};
use crate::matchers::Flavor;

/// A two-player zero-sum game as seen by the driver. Strategies are flat
/// vectors made of one simplex block per decision point.
pub trait Environment {
    fn dim(&self, player: Player) -> usize;

    /// Action counts of the player's decision points, in layout order.
    fn layout(&self, player: Player) -> Vec<usize>;

    /// The player's utility vector at `(x, y)` and the value of `(x, y)` to
    /// X. Each call counts as one gradient evaluation.
    fn utility(&self, player: Player, x: &[f64], y: &[f64]) -> (Vec<f64>, f64);

    /// Value of `(x, y)` to X.
    fn value(&self, x: &[f64], y: &[f64]) -> f64;

    /// Sequence-form realization of a strategy. Payoffs are linear in it.
    fn realization(&self, player: Player, strategy: &[f64]) -> Vec<f64>;

    /// Strategy of a nonnegative realization vector, scale ignored.
    fn behavioral(&self, player: Player, realization: &[f64]) -> Vec<f64>;

    /// Best-response value against the opponent's strategy, as a payoff to X.
    fn best_response_value(&self, player: Player, opponent: &[f64]) -> f64;

    /// Duality gap of the profile that produced `ux`, `uy`.
    fn round_gap(&self, x: &[f64], y: &[f64], _ux: &[f64], _uy: &[f64]) -> f64 {
        self.best_response_value(Player::X, y) - self.best_response_value(Player::Y, x)
    }

    /// Whether a player has several decision points.
    fn is_tree(&self) -> bool;
}

impl Environment for NormalFormGame {
    fn dim(&self, player: Player) -> usize {
        match player {
            Player::X => self.rows(),
            Player::Y => self.cols(),
        }
    }

    fn layout(&self, player: Player) -> Vec<usize> {
        vec![Environment::dim(self, player)]
    }

    fn utility(&self, player: Player, x: &[f64], y: &[f64]) -> (Vec<f64>, f64) {
        match player {
            Player::X => {
                let u = self.utility_x(y);
                let v = dot(x, &u);
                (u, v)
            }
            Player::Y => {
                let u = self.utility_y(x);
                let v = -dot(y, &u);
                (u, v)
            }
        }
    }

    fn value(&self, x: &[f64], y: &[f64]) -> f64 {
        NormalFormGame::value(self, x, y)
    }

    fn realization(&self, _player: Player, strategy: &[f64]) -> Vec<f64> {
        strategy.to_vec()
    }

    fn behavioral(&self, _player: Player, realization: &[f64]) -> Vec<f64> {
        let total: f64 = realization.iter().sum();
        if total > 0.0 {
            realization.iter().map(|r| r / total).collect()
        } else {
            vec![1.0 / realization.len() as f64; realization.len()]
        }
    }

    fn best_response_value(&self, player: Player, opponent: &[f64]) -> f64 {
        match player {
            Player::X => max(&self.utility_x(opponent)),
            Player::Y => -max(&self.utility_y(opponent)),
        }
    }

    fn round_gap(&self, _x: &[f64], _y: &[f64], ux: &[f64], uy: &[f64]) -> f64 {
        max(ux) + max(uy)
    }

    fn is_tree(&self) -> bool {
        false
    }
}

impl Environment for GameTree {
    fn dim(&self, player: Player) -> usize {
        GameTree::dim(self, player)
    }

    fn layout(&self, player: Player) -> Vec<usize> {
        GameTree::layout(self, player)
    }

    fn utility(&self, player: Player, x: &[f64], y: &[f64]) -> (Vec<f64>, f64) {
        self.counterfactual_utility(player, x, y)
    }

    fn value(&self, x: &[f64], y: &[f64]) -> f64 {
        GameTree::value(self, x, y)
    }

    fn realization(&self, player: Player, strategy: &[f64]) -> Vec<f64> {
        GameTree::realization(self, player, strategy)
    }

    fn behavioral(&self, player: Player, realization: &[f64]) -> Vec<f64> {
        GameTree::behavioral(self, player, realization)
    }

    fn best_response_value(&self, player: Player, opponent: &[f64]) -> f64 {
        GameTree::best_response_value(self, player, opponent)
    }

    fn is_tree(&self) -> bool {
        true
    }
}

/// The learning setups.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Setup {
    /// Both players predict their previous utility and move at once.
    Simultaneous,
    /// X moves, Y observes X's move and responds, then X observes.
    Alternating,
    /// Both players predict the utility at the prediction-free profile.
    Extragradient,
}

impl Setup {
    /// Gradient evaluations per iteration.
    pub fn grad_evals_per_iter(self) -> u64 {
        match self {
            Setup::Simultaneous | Setup::Alternating => 2,
            Setup::Extragradient => 4,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Averaging {
    Uniform,
    LastHalf,
    Both,
}

impl Averaging {
    fn uniform(self) -> bool {
        matches!(self, Averaging::Uniform | Averaging::Both)
    }

    fn last_half(self) -> bool {
        matches!(self, Averaging::LastHalf | Averaging::Both)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub x: LearnerSpec,
    pub y: LearnerSpec,
    pub setup: Setup,
    pub iters: usize,
    /// Recorded in trace headers; the learners themselves are deterministic.
    pub seed: u64,
    pub averaging: Averaging,
    pub monitors: bool,
}

impl RunConfig {
    /// Both players use `spec`, both averages are tracked, monitors are on.
    pub fn new(spec: LearnerSpec, setup: Setup, iters: usize) -> Self {
        RunConfig {
            x: spec,
            y: spec,
            setup,
            iters,
            seed: 0,
            averaging: Averaging::Both,
            monitors: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.iters == 0 {
            return Err(Error::Config("iteration count must be at least 1".into()));
        }
        if self.setup == Setup::Extragradient && (self.x.is_dcfr() || self.y.is_dcfr()) {
            return Err(Error::Config(
                "DCFR has no prediction step and cannot run in the extragradient setup".into(),
            ));
        }
        Ok(())
    }
}

/// One player's learners, one per decision point, behind a flat interface.
#[derive(Debug, Clone)]
pub struct LearnerBank {
    learners: Vec<DynLearner>,
    offsets: Vec<usize>,
    dim: usize,
}

impl LearnerBank {
    pub fn new(learners: Vec<DynLearner>) -> Self {
        let mut offsets = Vec::with_capacity(learners.len());
        let mut dim = 0;
        for l in &learners {
            offsets.push(dim);
            dim += l.dim();
        }
        LearnerBank {
            learners,
            offsets,
            dim,
        }
    }

    pub fn from_spec(spec: &LearnerSpec, layout: &[usize]) -> Result<Self> {
        Ok(Self::new(
            layout.iter().map(|&n| spec.build(n)).collect::<Result<_>>()?,
        ))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn learners(&self) -> &[DynLearner] {
        &self.learners
    }

    pub fn next(&mut self, prediction: &[f64]) -> Result<Vec<f64>> {
        crate::game::check_dim(self.dim, prediction.len())?;
        let mut out = Vec::with_capacity(self.dim);
        for (l, &o) in self.learners.iter_mut().zip(&self.offsets) {
            out.extend_from_slice(&l.next_strategy(&prediction[o..o + l.dim()])?);
        }
        Ok(out)
    }

    pub fn observe(&mut self, utility: &[f64]) -> Result<()> {
        crate::game::check_dim(self.dim, utility.len())?;
        for (l, &o) in self.learners.iter_mut().zip(&self.offsets) {
            let n = l.dim();
            l.observe_utility(&utility[o..o + n])?;
        }
        Ok(())
    }

    pub fn anchor(&self) -> Vec<f64> {
        self.learners
            .iter()
            .flat_map(|l| l.anchor().into_inner())
            .collect()
    }

    /// Root mean square of the learners' regret norms; the norm itself for
    /// a single learner.
    pub fn rnorm(&self) -> f64 {
        let k = self.learners.len() as f64;
        (self
            .learners
            .iter()
            .map(|l| l.regret_norm().powi(2))
            .sum::<f64>()
            / k)
            .sqrt()
    }

    pub fn pathlen(&self) -> f64 {
        self.learners.iter().map(|l| l.stats().pathlen()).sum()
    }

    /// Largest one-round decrease of any learner's regret norm.
    pub fn max_norm_drop(&self) -> f64 {
        self.learners
            .iter()
            .map(|l| l.stats().max_norm_drop())
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Smallest RVU-bound slack over the learners that report one.
    pub fn rvu_slack(&self) -> Option<f64> {
        self.learners
            .iter()
            .filter_map(|l| l.rvu_check().map(|c| c.slack()))
            .reduce(f64::min)
    }

    /// `Σ max(0, R_I)` over the learners' own regrets.
    pub fn positive_local_regret(&self) -> f64 {
        self.learners
            .iter()
            .map(|l| l.stats().regret().max(0.0))
            .sum()
    }
}

/// What happened in one iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct Round {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    /// X's observed utility, at `(x, y)`.
    pub ux: Vec<f64>,
    /// Y's observed utility; at `(x, y)` except in the alternating setup,
    /// where Y observes X's move against its previous strategy.
    pub uy: Vec<f64>,
    /// Value of `(x, y)` to X.
    pub value: f64,
}

/// A self-play session that advances one iteration at a time.
pub struct SelfPlay<'a, E: Environment + ?Sized> {
    env: &'a E,
    setup: Setup,
    banks: [LearnerBank; 2],
    prev: [Vec<f64>; 2],
    y_pending: Option<Vec<f64>>,
    iter: usize,
    grad_evals: u64,
}

impl<'a, E: Environment + ?Sized> SelfPlay<'a, E> {
    pub fn new(env: &'a E, setup: Setup, x: LearnerBank, y: LearnerBank) -> Result<Self> {
        crate::game::check_dim(env.dim(Player::X), x.dim())?;
        crate::game::check_dim(env.dim(Player::Y), y.dim())?;
        let prev = [vec![0.0; x.dim()], vec![0.0; y.dim()]];
        Ok(SelfPlay {
            env,
            setup,
            banks: [x, y],
            prev,
            y_pending: None,
            iter: 0,
            grad_evals: 0,
        })
    }

    pub fn from_config(env: &'a E, cfg: &RunConfig) -> Result<Self> {
        cfg.validate()?;
        let x = LearnerBank::from_spec(&cfg.x, &env.layout(Player::X))?;
        let y = LearnerBank::from_spec(&cfg.y, &env.layout(Player::Y))?;
        Self::new(env, cfg.setup, x, y)
    }

    pub fn bank(&self, player: Player) -> &LearnerBank {
        match player {
            Player::X => &self.banks[0],
            Player::Y => &self.banks[1],
        }
    }

    pub fn iter(&self) -> usize {
        self.iter
    }

    /// Gradient evaluations (utility computations) so far.
    pub fn grad_evals(&self) -> u64 {
        self.grad_evals
    }

    fn utility(&mut self, player: Player, x: &[f64], y: &[f64]) -> (Vec<f64>, f64) {
        self.grad_evals += 1;
        self.env.utility(player, x, y)
    }

    pub fn step(&mut self) -> Result<Round> {
        let round = match self.setup {
            Setup::Simultaneous => {
                let x = self.banks[0].next(&self.prev[0])?;
                let y = self.banks[1].next(&self.prev[1])?;
                let (ux, value) = self.utility(Player::X, &x, &y);
                let (uy, _) = self.utility(Player::Y, &x, &y);
                self.banks[0].observe(&ux)?;
                self.banks[1].observe(&uy)?;
                self.prev = [ux.clone(), uy.clone()];
                Round { x, y, ux, uy, value }
            }
            Setup::Alternating => {
                let y_prev = match self.y_pending.take() {
                    Some(y) => y,
                    None => self.banks[1].next(&vec![0.0; self.banks[1].dim()])?,
                };
                let x = self.banks[0].next(&self.prev[0])?;
                let (uy, _) = self.utility(Player::Y, &x, &y_prev);
                self.banks[1].observe(&uy)?;
                let y = self.banks[1].next(&uy)?;
                let (ux, value) = self.utility(Player::X, &x, &y);
                self.banks[0].observe(&ux)?;
                self.prev[0] = ux.clone();
                self.y_pending = Some(y.clone());
                Round { x, y, ux, uy, value }
            }
            Setup::Extragradient => {
                let ax = self.banks[0].anchor();
                let ay = self.banks[1].anchor();
                let (mx, _) = self.utility(Player::X, &ax, &ay);
                let (my, _) = self.utility(Player::Y, &ax, &ay);
                let x = self.banks[0].next(&mx)?;
                let y = self.banks[1].next(&my)?;
                let (ux, value) = self.utility(Player::X, &x, &y);
                let (uy, _) = self.utility(Player::Y, &x, &y);
                self.banks[0].observe(&ux)?;
                self.banks[1].observe(&uy)?;
                Round { x, y, ux, uy, value }
            }
        };
        self.iter += 1;
        Ok(round)
    }
}

/// One named inequality evaluated at a checkpoint; it holds when
/// `slack ≥ 0` (tolerances are already folded in).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub slack: f64,
}

impl Check {
    pub fn passed(&self) -> bool {
        self.slack >= 0.0
    }
}

/// Metrics at one checkpoint. Columns for an average that was not selected
/// hold NaN.
#[derive(Debug, Clone, PartialEq)]
pub struct IterationRecord {
    pub iter: usize,
    pub grad_evals: u64,
    pub gap_last: f64,
    pub gap_avg_uniform: f64,
    pub gap_avg_lasthalf: f64,
    pub reg_x: f64,
    pub reg_y: f64,
    pub rnorm_x: f64,
    pub rnorm_y: f64,
    pub pathlen_x: f64,
    pub pathlen_y: f64,
    /// `min_{s ≤ t}` of `gap_last`, over every round, not just checkpoints.
    pub gap_best: f64,
    pub value_avg_uniform: f64,
    pub value_avg_lasthalf: f64,
    /// Largest one-round drop of any regret norm so far, per player.
    pub norm_drop_x: f64,
    pub norm_drop_y: f64,
    /// Monitor results; empty when monitors are off.
    pub checks: Vec<Check>,
}

pub const CSV_HEADER: &str = "iter,grad_evals,gap_last,gap_avg_uniform,gap_avg_lasthalf,reg_x,reg_y,rnorm_x,rnorm_y,pathlen_x,pathlen_y";

impl IterationRecord {
    fn csv_row(&self) -> String {
        let reals = [
            self.gap_last,
            self.gap_avg_uniform,
            self.gap_avg_lasthalf,
            self.reg_x,
            self.reg_y,
            self.rnorm_x,
            self.rnorm_y,
            self.pathlen_x,
            self.pathlen_y,
        ];
        let mut row = format!("{},{}", self.iter, self.grad_evals);
        for v in reals {
            row.push_str(&format!(",{v:.16e}"));
        }
        row
    }
}

/// Strategies averaged over a run, in the environment's layout.
#[derive(Debug, Clone, PartialEq)]
pub struct AverageProfile {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    pub setup: Setup,
    pub records: Vec<IterationRecord>,
    /// Averages at the final iteration, when selected.
    pub final_uniform: Option<AverageProfile>,
    pub final_last_half: Option<AverageProfile>,
}

impl Trace {
    pub fn last(&self) -> &IterationRecord {
        self.records.last().expect("a trace has at least one record")
    }

    /// The record at exactly `iter`, if it is a checkpoint.
    pub fn at(&self, iter: usize) -> Option<&IterationRecord> {
        self.records
            .binary_search_by_key(&iter, |r| r.iter)
            .ok()
            .map(|i| &self.records[i])
    }

    /// Writes `#`-prefixed comment lines, the header and one row per record.
    pub fn write_csv<W: Write>(&self, out: &mut W, comments: &[String]) -> std::io::Result<()> {
        for c in comments {
            for line in c.lines() {
                writeln!(out, "# {line}")?;
            }
        }
        writeln!(out, "{CSV_HEADER}")?;
        for r in &self.records {
            writeln!(out, "{}", r.csv_row())?;
        }
        Ok(())
    }
}

/// Every `t ≤ 100`, then roughly 10% steps, always hitting each power of
/// ten and ending at `iters`.
pub fn checkpoints(iters: usize) -> Vec<usize> {
    let mut out = Vec::new();
    let mut t = 1;
    while t <= iters {
        out.push(t);
        t = if t < 100 {
            t + 1
        } else {
            let mut decade = 100;
            while decade <= t {
                decade *= 10;
            }
            (t + 1).max((11 * t).div_ceil(10)).min(decade)
        };
    }
    if out.last() != Some(&iters) {
        out.push(iters);
    }
    out
}

/// Averaging weight of iteration `t` for a learner spec: `t^γ` for DCFR,
/// 1 otherwise.
fn average_weight(spec: &LearnerSpec, t: usize) -> f64 {
    match spec {
        LearnerSpec::Matcher {
            flavor: Flavor::Dcfr(p),
            ..
        } => (t as f64).powf(p.avg_exponent),
        _ => 1.0,
    }
}

fn scaled(v: &[f64], c: f64) -> Vec<f64> {
    v.iter().map(|a| a * c).collect()
}

/// A running vector sum with Neumaier compensation, so that long runs
/// and differences of prefix sums keep their low-order bits.
#[derive(Debug, Clone)]
struct CompensatedSum {
    hi: Vec<f64>,
    lo: Vec<f64>,
}

impl CompensatedSum {
    fn new(n: usize) -> Self {
        CompensatedSum {
            hi: vec![0.0; n],
            lo: vec![0.0; n],
        }
    }

    fn add(&mut self, v: &[f64], w: f64) {
        for ((h, l), b) in self.hi.iter_mut().zip(self.lo.iter_mut()).zip(v) {
            let (s, e) = two_sum(*h, w * b);
            *h = s;
            *l += e;
        }
    }

    fn total(&self) -> Vec<f64> {
        self.hi.iter().zip(&self.lo).map(|(h, l)| h + l).collect()
    }

    /// `self − earlier`, with the high and low parts subtracted separately.
    fn since(&self, earlier: &CompensatedSum) -> Vec<f64> {
        (0..self.hi.len())
            .map(|i| (self.hi[i] - earlier.hi[i]) + (self.lo[i] - earlier.lo[i]))
            .collect()
    }
}

/// `a + b` as a rounded sum and its exact rounding error.
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let e = if a.abs() >= b.abs() {
        (a - s) + b
    } else {
        (b - s) + a
    };
    (s, e)
}

/// Runs `cfg` on `env` from fresh learners.
pub fn run<E: Environment + ?Sized>(env: &E, cfg: &RunConfig) -> Result<Trace> {
    let sp = SelfPlay::from_config(env, cfg)?;
    run_session(env, cfg, sp)
}

/// Runs `cfg.iters` iterations of an existing session, which may hold
/// arbitrary learners. The learner specs in `cfg` still select the
/// averaging weights and which monitors apply.
pub fn run_session<E: Environment + ?Sized>(
    env: &E,
    cfg: &RunConfig,
    mut sp: SelfPlay<'_, E>,
) -> Result<Trace> {
    cfg.validate()?;
    let specs = [cfg.x, cfg.y];
    let players = [Player::X, Player::Y];
    let dims = [env.dim(Player::X), env.dim(Player::Y)];
    let weighted = [cfg.x.is_dcfr(), cfg.y.is_dcfr()];
    let schedule = checkpoints(cfg.iters);

    // Prefix sums of weighted realizations are kept only where a last-half
    // window starts.
    let mut snap_points: Vec<usize> = if cfg.averaging.last_half() {
        schedule.iter().map(|&t| last_half_start(t)).collect()
    } else {
        Vec::new()
    };
    snap_points.sort_unstable();
    snap_points.dedup();
    let mut snap_iter = snap_points.into_iter().peekable();
    let mut snapshots: std::collections::HashMap<usize, ([CompensatedSum; 2], [f64; 2])> =
        std::collections::HashMap::new();

    let mut sum_u = [CompensatedSum::new(dims[0]), CompensatedSum::new(dims[1])];
    let mut sum_w = sum_u.clone();
    let mut total_w = [0.0f64; 2];
    let mut value_sum = CompensatedSum::new(1);
    let mut gap_best = f64::INFINITY;
    let mut records = Vec::with_capacity(schedule.len());
    let mut next_cp = schedule.iter().copied().peekable();
    let mut final_uniform = None;
    let mut final_last_half = None;

    for t in 1..=cfg.iters {
        while snap_iter.peek() == Some(&(t - 1)) {
            snapshots.insert(t - 1, (sum_w.clone(), total_w));
            snap_iter.next();
        }
        let round = sp.step()?;
        let played = [&round.x, &round.y];
        for p in 0..2 {
            let real = env.realization(players[p], played[p]);
            sum_u[p].add(&real, 1.0);
            let w = average_weight(&specs[p], t);
            sum_w[p].add(&real, w);
            total_w[p] += w;
        }
        value_sum.add(&[round.value], 1.0);
        let gap_last = env.round_gap(&round.x, &round.y, &round.ux, &round.uy);
        gap_best = gap_best.min(gap_last);

        if next_cp.peek() != Some(&t) {
            continue;
        }
        next_cp.next();

        let tf = t as f64;
        let unif = [
            env.behavioral(Player::X, &scaled(&sum_u[0].total(), 1.0 / tf)),
            env.behavioral(Player::Y, &scaled(&sum_u[1].total(), 1.0 / tf)),
        ];
        let value_sum = value_sum.total()[0];
        let br_x = env.best_response_value(Player::X, &unif[1]);
        let br_y = env.best_response_value(Player::Y, &unif[0]);
        let reg_x = tf * br_x - value_sum;
        let reg_y = value_sum - tf * br_y;
        let unweighted_gap = br_x - br_y;

        let avg_of = |s: &[Vec<f64>; 2], w: [f64; 2]| -> AverageProfile {
            AverageProfile {
                x: env.behavioral(Player::X, &scaled(&s[0], 1.0 / w[0])),
                y: env.behavioral(Player::Y, &scaled(&s[1], 1.0 / w[1])),
            }
        };
        let gap_of = |a: &AverageProfile| {
            env.best_response_value(Player::X, &a.y) - env.best_response_value(Player::Y, &a.x)
        };

        let (gap_avg_uniform, value_avg_uniform) = if cfg.averaging.uniform() {
            let avg = if weighted[0] || weighted[1] {
                avg_of(&[sum_w[0].total(), sum_w[1].total()], total_w)
            } else {
                AverageProfile {
                    x: unif[0].clone(),
                    y: unif[1].clone(),
                }
            };
            let g = if weighted[0] || weighted[1] {
                gap_of(&avg)
            } else {
                unweighted_gap
            };
            let v = env.value(&avg.x, &avg.y);
            if t == cfg.iters {
                final_uniform = Some(avg);
            }
            (g, v)
        } else {
            (f64::NAN, f64::NAN)
        };

        let (gap_avg_lasthalf, value_avg_lasthalf) = if cfg.averaging.last_half() {
            let (snap, snap_w) = &snapshots[&last_half_start(t)];
            let window = [sum_w[0].since(&snap[0]), sum_w[1].since(&snap[1])];
            let avg = avg_of(&window, [total_w[0] - snap_w[0], total_w[1] - snap_w[1]]);
            let g = gap_of(&avg);
            let v = env.value(&avg.x, &avg.y);
            if t == cfg.iters {
                final_last_half = Some(avg);
            }
            (g, v)
        } else {
            (f64::NAN, f64::NAN)
        };

        let bx = sp.bank(Player::X);
        let by = sp.bank(Player::Y);
        let mut checks = Vec::new();
        if cfg.monitors {
            if !(weighted[0] || weighted[1]) {
                checks.push(Check {
                    name: "prop1",
                    slack: 1e-8 - (unweighted_gap - (reg_x + reg_y) / tf).abs(),
                });
            }
            checks.push(Check {
                name: "fact2",
                slack: reg_x + reg_y + 1e-9,
            });
            for (name, bank) in [("rvu_x", bx), ("rvu_y", by)] {
                if let Some(s) = bank.rvu_slack() {
                    checks.push(Check {
                        name,
                        slack: s + 1e-6,
                    });
                }
            }
            for (name, spec, bank) in [("ir_norm_x", cfg.x, bx), ("ir_norm_y", cfg.y, by)] {
                if spec.is_ir() {
                    checks.push(Check {
                        name,
                        slack: 1e-9 - bank.max_norm_drop(),
                    });
                }
            }
            // Y's learners observe a different profile sequence when alternating.
            let mut dom = vec![("cf_domination_x", bx, reg_x)];
            if cfg.setup != Setup::Alternating {
                dom.push(("cf_domination_y", by, reg_y));
            }
            for (name, bank, reg) in dom {
                checks.push(Check {
                    name,
                    slack: bank.positive_local_regret() - reg + 1e-6 * reg.abs().max(1.0),
                });
            }
        }

        records.push(IterationRecord {
            iter: t,
            grad_evals: sp.grad_evals(),
            gap_last,
            gap_avg_uniform,
            gap_avg_lasthalf,
            reg_x,
            reg_y,
            rnorm_x: bx.rnorm(),
            rnorm_y: by.rnorm(),
            pathlen_x: bx.pathlen(),
            pathlen_y: by.pathlen(),
            gap_best,
            value_avg_uniform,
            value_avg_lasthalf,
            norm_drop_x: bx.max_norm_drop(),
            norm_drop_y: by.max_norm_drop(),
            checks,
        });
        snapshots.retain(|&k, _| k >= last_half_start(t));
    }
    Ok(Trace {
        setup: cfg.setup,
        records,
        final_uniform,
        final_last_half,
    })
}

/// One monitor outcome.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonitorEntry {
    pub iter: usize,
    pub check: Check,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct MonitorReport {
    pub entries: Vec<MonitorEntry>,
}

impl MonitorReport {
    pub fn passed(&self) -> bool {
        self.entries.iter().all(|e| e.check.passed())
    }

    pub fn failures(&self) -> impl Iterator<Item = &MonitorEntry> {
        self.entries.iter().filter(|e| !e.check.passed())
    }

    /// Smallest slack of the named monitor, if it ran.
    pub fn worst(&self, name: &str) -> Option<MonitorEntry> {
        self.entries
            .iter()
            .filter(|e| e.check.name == name)
            .copied()
            .min_by(|a, b| a.check.slack.total_cmp(&b.check.slack))
    }

    pub fn names(&self) -> Vec<&'static str> {
        let mut names: Vec<_> = self.entries.iter().map(|e| e.check.name).collect();
        names.sort_unstable();
        names.dedup();
        names
    }
}

/// Collects every monitor result of a trace.
pub fn monitor_suite(trace: &Trace) -> MonitorReport {
    MonitorReport {
        entries: trace
            .records
            .iter()
            .flat_map(|r| r.checks.iter().map(|&check| MonitorEntry { iter: r.iter, check }))
            .collect(),
    }
}

/// Running minimum of a series.
pub fn lower_frontier(values: &[f64]) -> Vec<f64> {
    let mut best = f64::INFINITY;
    values
        .iter()
        .map(|&v| {
            best = best.min(v);
            best
        })
        .collect()
}

/// Least-squares slope of `ln y` against `ln x` over the points with both
/// coordinates positive; `None` with fewer than two such points.
pub fn loglog_slope(points: &[(f64, f64)]) -> Option<f64> {
    let logs: Vec<(f64, f64)> = points
        .iter()
        .filter(|(x, y)| *x > 0.0 && *y > 0.0)
        .map(|(x, y)| (x.ln(), y.ln()))
        .collect();
    if logs.len() < 2 {
        return None;
    }
    let k = logs.len() as f64;
    let mx = logs.iter().map(|p| p.0).sum::<f64>() / k;
    let my = logs.iter().map(|p| p.1).sum::<f64>() / k;
    let sxy: f64 = logs.iter().map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = logs.iter().map(|(x, _)| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        None
    } else {
        Some(sxy / sxx)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::{counterexample_game, matching_pennies};

    #[test]
    fn checkpoint_schedule() {
        let c = checkpoints(1000);
        assert_eq!(&c[..100], &(1..=100).collect::<Vec<_>>()[..]);
        assert_eq!(c[100], 110);
        assert_eq!(*c.last().unwrap(), 1000);
        assert!(c.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(checkpoints(1), vec![1]);
        assert_eq!(checkpoints(10).len(), 10);
        let long = checkpoints(100_000);
        for decade in [1000, 10_000, 100_000] {
            assert!(long.contains(&decade));
        }
    }

    #[test]
    fn slope_and_frontier() {
        let pts: Vec<_> = (1..10).map(|i| (i as f64, 3.0 / (i as f64).powi(2))).collect();
        assert!((loglog_slope(&pts).unwrap() + 2.0).abs() < 1e-12);
        assert_eq!(loglog_slope(&[(1.0, 0.0), (2.0, 1.0)]), None);
        assert_eq!(lower_frontier(&[3.0, 1.0, 2.0, 0.5]), vec![3.0, 1.0, 1.0, 0.5]);
    }

    #[test]
    fn grad_eval_accounting() {
        let g = counterexample_game();
        for (setup, per) in [
            (Setup::Simultaneous, 2),
            (Setup::Alternating, 2),
            (Setup::Extragradient, 4),
        ] {
            let cfg = RunConfig::new(LearnerSpec::matcher(Flavor::IrPrmPlus), setup, 50);
            let trace = run(&g, &cfg).unwrap();
            for r in &trace.records {
                assert_eq!(r.grad_evals, per * r.iter as u64);
            }
        }
    }

    #[test]
    fn pennies_fixed_point() {
        let g = matching_pennies();
        for setup in [Setup::Simultaneous, Setup::Extragradient] {
            let cfg = RunConfig::new(LearnerSpec::matcher(Flavor::IrPrmPlus), setup, 10);
            let trace = run(&g, &cfg).unwrap();
            assert_eq!(trace.records.len(), 10);
            for r in &trace.records {
                assert!(r.gap_last.abs() < 1e-12);
            }
            assert!(monitor_suite(&trace).passed());
        }
    }

    #[test]
    fn dcfr_rejected_in_extragradient() {
        let cfg = RunConfig::new(
            LearnerSpec::matcher(Flavor::Dcfr(Default::default())),
            Setup::Extragradient,
            5,
        );
        assert!(matches!(run(&matching_pennies(), &cfg), Err(Error::Config(_))));
    }

    #[test]
    fn last_half_average_matches_direct_computation() {
        let g = counterexample_game();
        let cfg = RunConfig::new(LearnerSpec::matcher(Flavor::PrmPlus), Setup::Simultaneous, 37);
        let trace = run(&g, &cfg).unwrap();
        let mut sp = SelfPlay::from_config(&g, &cfg).unwrap();
        let rounds: Vec<Round> = (0..37).map(|_| sp.step().unwrap()).collect();
        let xs: Vec<_> = rounds.iter().map(|r| r.x.clone()).collect();
        let ys: Vec<_> = rounds.iter().map(|r| r.y.clone()).collect();
        let x = crate::game::last_half_average(&xs).unwrap();
        let y = crate::game::last_half_average(&ys).unwrap();
        let expected = crate::game::duality_gap(&g, &x, &y).unwrap();
        assert!((trace.last().gap_avg_lasthalf - expected).abs() < 1e-12);
        let fin = trace.final_last_half.as_ref().unwrap();
        assert!(fin.x.iter().zip(x.iter()).all(|(a, b)| (a - b).abs() < 1e-14));
    }
}

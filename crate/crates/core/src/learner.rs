//! The online-learner contract shared by the regret-matching family and
//! AdOGD, plus the bookkeeping every learner keeps for the monitors.

use crate::error::Result;
use crate::game::{RegretAccumulator, SimplexVector};
use crate::gradient::{AdOgd, AdOgdMode};
use crate::linalg::dist2_sq;
use crate::matchers::{Flavor, IrObserveRule, RegretMatcher};

/// An online learner over a simplex.
///
/// Each round is one [`next_strategy`](Learner::next_strategy) followed by
/// one [`observe_utility`](Learner::observe_utility). Calling `next_strategy`
/// again before observing replaces the pending strategy.
pub trait Learner {
    fn dim(&self) -> usize;

    /// Commits to a strategy given a prediction of the coming utility.
    fn next_strategy(&mut self, prediction: &[f64]) -> Result<SimplexVector>;

    /// Feeds back the utility of the strategy committed this round.
    fn observe_utility(&mut self, utility: &[f64]) -> Result<()>;

    /// The prediction-free iterate `x̃`, i.e. what `next_strategy(0)` returns.
    fn anchor(&self) -> SimplexVector;

    /// Size of the regret state: `‖[r̃]₊‖₂` for matchers, `√P/η` for AdOGD.
    fn regret_norm(&self) -> f64;

    fn stats(&self) -> &LearnerStats;

    /// The learner's RVU-type regret bound evaluated on its history, when
    /// one applies.
    fn rvu_check(&self) -> Option<RvuCheck>;
}

/// Per-learner history summaries, updated once per observed round.
#[derive(Debug, Clone)]
pub struct LearnerStats {
    rounds: usize,
    regret: RegretAccumulator,
    pathlen: f64,
    max_norm_drop: f64,
}

impl LearnerStats {
    pub(crate) fn new(n: usize) -> Self {
        LearnerStats {
            rounds: 0,
            regret: RegretAccumulator::new(n),
            pathlen: 0.0,
            max_norm_drop: f64::NEG_INFINITY,
        }
    }

    /// Logs a round where `x` was played against `utility` while the anchor
    /// moved from `anchor_before` to `anchor_after`.
    pub(crate) fn record(
        &mut self,
        x: &[f64],
        utility: &[f64],
        anchor_before: &[f64],
        anchor_after: &[f64],
        norm_before: f64,
        norm_after: f64,
    ) {
        self.rounds += 1;
        self.regret.push(x, utility);
        self.pathlen += dist2_sq(x, anchor_before) + dist2_sq(x, anchor_after);
        self.max_norm_drop = self.max_norm_drop.max(norm_before - norm_after);
    }

    pub fn rounds(&self) -> usize {
        self.rounds
    }

    /// External regret over every observed round.
    pub fn regret(&self) -> f64 {
        if self.rounds == 0 {
            0.0
        } else {
            self.regret.regret()
        }
    }

    /// `Σ‖x^t − x̃^t‖² + Σ‖x^t − x̃^{t+1}‖²`.
    pub fn pathlen(&self) -> f64 {
        self.pathlen
    }

    /// Largest one-round decrease of [`Learner::regret_norm`]; negative
    /// when the norm only ever grew, `-∞` before the first round.
    pub fn max_norm_drop(&self) -> f64 {
        self.max_norm_drop
    }
}

/// A regret bound evaluated against the realized regret.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RvuCheck {
    pub bound: f64,
    pub regret: f64,
}

impl RvuCheck {
    pub fn slack(&self) -> f64 {
        self.bound - self.regret
    }
}

/// Recipe for building learners of a given dimension.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LearnerSpec {
    Matcher { flavor: Flavor, ir_rule: IrObserveRule },
    AdOgd { eta: f64, mode: AdOgdMode },
}

impl LearnerSpec {
    pub fn matcher(flavor: Flavor) -> Self {
        LearnerSpec::Matcher {
            flavor,
            ir_rule: IrObserveRule::Plain,
        }
    }

    pub fn adogd() -> Self {
        LearnerSpec::AdOgd {
            eta: 1.0,
            mode: AdOgdMode::ScaleInvariant,
        }
    }

    pub fn build(&self, n: usize) -> Result<DynLearner> {
        match *self {
            LearnerSpec::Matcher { flavor, ir_rule } => Ok(DynLearner::Matcher(
                RegretMatcher::new(flavor, n)?.with_ir_rule(ir_rule),
            )),
            LearnerSpec::AdOgd { eta, mode } => {
                Ok(DynLearner::AdOgd(AdOgd::new(n, eta, mode)?))
            }
        }
    }

    /// Whether this learner ignores predictions.
    pub fn is_predictive(&self) -> bool {
        match self {
            LearnerSpec::Matcher { flavor, .. } => flavor.is_predictive(),
            LearnerSpec::AdOgd { .. } => true,
        }
    }

    pub fn is_dcfr(&self) -> bool {
        matches!(self, LearnerSpec::Matcher { flavor: Flavor::Dcfr(_), .. })
    }

    pub fn is_ir(&self) -> bool {
        matches!(
            self,
            LearnerSpec::Matcher {
                flavor: Flavor::IrPrm | Flavor::IrPrmPlus,
                ..
            }
        )
    }
}

/// A learner that ignores all feedback and always plays one strategy.
#[derive(Debug, Clone)]
pub struct FixedStrategy {
    x: SimplexVector,
    stats: LearnerStats,
}

impl FixedStrategy {
    pub fn new(x: SimplexVector) -> Self {
        let stats = LearnerStats::new(x.len());
        FixedStrategy { x, stats }
    }
}

impl Learner for FixedStrategy {
    fn dim(&self) -> usize {
        self.x.len()
    }

    fn next_strategy(&mut self, prediction: &[f64]) -> Result<SimplexVector> {
        crate::game::check_dim(self.dim(), prediction.len())?;
        Ok(self.x.clone())
    }

    fn observe_utility(&mut self, utility: &[f64]) -> Result<()> {
        crate::game::check_dim(self.dim(), utility.len())?;
        self.stats.record(&self.x, utility, &self.x, &self.x, 0.0, 0.0);
        Ok(())
    }

    fn anchor(&self) -> SimplexVector {
        self.x.clone()
    }

    fn regret_norm(&self) -> f64 {
        0.0
    }

    fn stats(&self) -> &LearnerStats {
        &self.stats
    }

    fn rvu_check(&self) -> Option<RvuCheck> {
        None
    }
}

/// Any learner, statically dispatched.
#[derive(Debug, Clone)]
pub enum DynLearner {
    Matcher(RegretMatcher),
    AdOgd(AdOgd),
    Fixed(FixedStrategy),
}

macro_rules! dispatch {
    ($self:ident, $l:ident => $e:expr) => {
        match $self {
            DynLearner::Matcher($l) => $e,
            DynLearner::AdOgd($l) => $e,
            DynLearner::Fixed($l) => $e,
        }
    };
}

impl Learner for DynLearner {
    fn dim(&self) -> usize {
        dispatch!(self, l => l.dim())
    }

    fn next_strategy(&mut self, prediction: &[f64]) -> Result<SimplexVector> {
        dispatch!(self, l => l.next_strategy(prediction))
    }

    fn observe_utility(&mut self, utility: &[f64]) -> Result<()> {
        dispatch!(self, l => l.observe_utility(utility))
    }

    fn anchor(&self) -> SimplexVector {
        dispatch!(self, l => l.anchor())
    }

    fn regret_norm(&self) -> f64 {
        dispatch!(self, l => l.regret_norm())
    }

    fn stats(&self) -> &LearnerStats {
        dispatch!(self, l => l.stats())
    }

    fn rvu_check(&self) -> Option<RvuCheck> {
        dispatch!(self, l => l.rvu_check())
    }
}

//! The regret-matching family: RM, RM⁺, predictive RM⁺, discounted RM,
//! and the norm-preserving IR-PRM / IR-PRM⁺.
//!
//! All flavors share one state machine. A round is
//! [`next_strategy`](RegretMatcher::next_strategy) with a prediction `m`,
//! then [`observe_utility`](RegretMatcher::observe_utility) with the realized
//! utility `u`, which forms the instantaneous regret
//! `g = u − m − ⟨u − m, x⟩1` and folds it into the cumulative regret `r̃`.
//!
//! The IR flavors shift the predicted regret `r̃ + m` down by `γ1` so that
//! `‖[r]₊‖₂ = ‖[r̃]₊‖₂`. The regret norm therefore never shrinks, which is
//! what makes the effective learning rate `1/‖[r̃]₊‖₂` nonincreasing.
//!
//! ```
//! use zerosum::matchers::{Flavor, RegretMatcher};
//!
//! let mut rm = RegretMatcher::new(Flavor::IrPrmPlus, 2).unwrap();
//! assert_eq!(rm.next_strategy(&[0.0, 0.0]).unwrap().as_slice(), &[0.5, 0.5]);
//! rm.observe_utility(&[1.0, -1.0]).unwrap();
//! assert_eq!(rm.r_tilde(), &[1.0, 0.0]);
//! ```

use crate::error::{Error, Result};
use crate::game::{check_dim, SimplexVector};
use crate::gamma::{gamma_select, GammaProblem};
use crate::learner::{Learner, LearnerStats, RvuCheck};
use crate::linalg::{dist2_sq, dot, norm2_sq, pos_norm2};

/// Entries of `r̃` smaller than this in magnitude are treated as zero.
const SNAP: f64 = 1e-15;

/// Discounting parameters of discounted regret matching.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DcfrParams {
    pub alpha: f64,
    pub beta: f64,
    pub avg_exponent: f64,
}

impl Default for DcfrParams {
    fn default() -> Self {
        DcfrParams {
            alpha: 1.5,
            beta: 0.0,
            avg_exponent: 2.0,
        }
    }
}

impl DcfrParams {
    /// `t^α / (t^α + 1)`
    pub fn pos_discount(&self, t: f64) -> f64 {
        let p = t.powf(self.alpha);
        p / (p + 1.0)
    }

    /// `t^β / (t^β + 1)`
    pub fn neg_discount(&self, t: f64) -> f64 {
        let p = t.powf(self.beta);
        p / (p + 1.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Flavor {
    Rm,
    RmPlus,
    PrmPlus,
    Dcfr(DcfrParams),
    IrPrm,
    IrPrmPlus,
}

impl Flavor {
    /// Flavors whose cumulative regret is clipped at zero.
    pub fn is_plus(&self) -> bool {
        matches!(self, Flavor::RmPlus | Flavor::PrmPlus | Flavor::IrPrmPlus)
    }

    pub fn is_ir(&self) -> bool {
        matches!(self, Flavor::IrPrm | Flavor::IrPrmPlus)
    }

    pub fn is_predictive(&self) -> bool {
        matches!(self, Flavor::PrmPlus | Flavor::IrPrm | Flavor::IrPrmPlus)
    }
}

/// How IR-PRM (without ⁺) folds `g` into `r̃`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum IrObserveRule {
    /// `r̃ ← r + g`
    #[default]
    Plain,
    /// `r̃ ← r + [g]₊`
    PositiveG,
}

/// Diagnostics specific to the matcher family.
#[derive(Debug, Clone, Default)]
pub struct MatcherDiagnostics {
    /// `‖r̃¹‖₂²`
    pub initial_norm_sq: f64,
    /// `Σ_t ‖g^t‖₂²`
    pub sum_g_sq: f64,
    /// `Σ_t ‖[r̃^t]₊‖₂ · ‖x^t − x̃^t‖₂²`
    pub movement_penalty: f64,
    /// Largest `|‖[r]₊‖₂ − ‖[r̃]₊‖₂|` left by a γ step.
    pub max_gamma_error: f64,
    /// Largest `|⟨g, [r]₊⟩| / (‖g‖₂‖[r]₊‖₂)` seen in a round with `[r]₊ ≠ 0`.
    pub max_orthogonality: f64,
}

/// State of one regret-matching learner.
#[derive(Debug, Clone)]
pub struct RegretMatcher {
    flavor: Flavor,
    ir_rule: IrObserveRule,
    r_tilde: Vec<f64>,
    r: Vec<f64>,
    m: Vec<f64>,
    x: SimplexVector,
    x_tilde: SimplexVector,
    gamma: Option<f64>,
    iter: usize,
    pending: bool,
    avg_sum: Vec<f64>,
    stats: LearnerStats,
    diag: MatcherDiagnostics,
}

impl RegretMatcher {
    /// A learner with zero initial regret, the scale-invariant setting.
    pub fn new(flavor: Flavor, n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::EmptyDimension { rows: n, cols: 1 });
        }
        RegretMatcher::with_initial_regret(flavor, vec![0.0; n])
    }

    pub fn with_initial_regret(flavor: Flavor, r1: Vec<f64>) -> Result<Self> {
        let n = r1.len();
        if n == 0 {
            return Err(Error::EmptySequence);
        }
        if r1.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("initial regret"));
        }
        if flavor.is_plus() {
            if let Some(i) = r1.iter().position(|&v| v < 0.0) {
                return Err(Error::NegativeInitialRegret(i));
            }
        }
        let x_tilde = SimplexVector::from_positive_part(&r1);
        Ok(RegretMatcher {
            flavor,
            ir_rule: IrObserveRule::Plain,
            diag: MatcherDiagnostics {
                initial_norm_sq: norm2_sq(&r1),
                ..Default::default()
            },
            r: r1.clone(),
            r_tilde: r1,
            m: vec![0.0; n],
            x: x_tilde.clone(),
            x_tilde,
            gamma: None,
            iter: 0,
            pending: false,
            avg_sum: vec![0.0; n],
            stats: LearnerStats::new(n),
        })
    }

    /// Selects how IR-PRM folds in `g`; other flavors ignore it.
    pub fn with_ir_rule(mut self, rule: IrObserveRule) -> Self {
        self.ir_rule = rule;
        self
    }

    pub fn flavor(&self) -> Flavor {
        self.flavor
    }

    pub fn dim(&self) -> usize {
        self.r_tilde.len()
    }

    pub fn r_tilde(&self) -> &[f64] {
        &self.r_tilde
    }

    pub fn r(&self) -> &[f64] {
        &self.r
    }

    /// The prediction in force for the current round.
    pub fn prediction(&self) -> &[f64] {
        &self.m
    }

    pub fn strategy(&self) -> &SimplexVector {
        &self.x
    }

    pub fn x_tilde(&self) -> &SimplexVector {
        &self.x_tilde
    }

    /// The γ of the most recent IR step, if one was taken.
    pub fn last_gamma(&self) -> Option<f64> {
        self.gamma
    }

    /// Completed rounds.
    pub fn iter(&self) -> usize {
        self.iter
    }

    pub fn diagnostics(&self) -> &MatcherDiagnostics {
        &self.diag
    }

    /// The discount-weighted average strategy of a DCFR learner.
    pub fn dcfr_average(&self) -> Option<SimplexVector> {
        match self.flavor {
            Flavor::Dcfr(_) if self.iter > 0 => {
                Some(SimplexVector::from_positive_part(&self.avg_sum))
            }
            _ => None,
        }
    }

    pub fn next_strategy(&mut self, prediction: &[f64]) -> Result<SimplexVector> {
        check_dim(self.dim(), prediction.len())?;
        if prediction.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("prediction"));
        }
        self.gamma = None;
        match self.flavor {
            Flavor::Rm | Flavor::RmPlus | Flavor::Dcfr(_) => {
                self.m.iter_mut().for_each(|v| *v = 0.0);
                self.r.copy_from_slice(&self.r_tilde);
                self.x = SimplexVector::from_positive_part(&self.r_tilde);
            }
            Flavor::PrmPlus => {
                let w = SimplexVector::from_positive_part(&self.r_tilde);
                let mw = dot(prediction, &w);
                let shifted: Vec<f64> = self
                    .r_tilde
                    .iter()
                    .zip(prediction)
                    .map(|(r, m)| r + m - mw)
                    .collect();
                self.x = SimplexVector::from_positive_part(&shifted);
                self.m.copy_from_slice(prediction);
                // Bookkeeping regret such that r + g = r̃ + u − ⟨u, x⟩1.
                let mx = dot(prediction, &self.x);
                for ((r, rt), m) in self.r.iter_mut().zip(&self.r_tilde).zip(prediction) {
                    *r = rt + m - mx;
                }
            }
            Flavor::IrPrm | Flavor::IrPrmPlus => self.ir_next(prediction)?,
        }
        self.pending = true;
        Ok(self.x.clone())
    }

    fn ir_next(&mut self, prediction: &[f64]) -> Result<()> {
        for v in self.r_tilde.iter_mut() {
            if v.abs() < SNAP {
                *v = 0.0;
            }
        }
        let target = pos_norm2(&self.r_tilde);
        if target == 0.0 {
            self.m.iter_mut().for_each(|v| *v = 0.0);
            self.r.copy_from_slice(&self.r_tilde);
            self.x = self.x_tilde.clone();
            return Ok(());
        }
        let shifted: Vec<f64> = self
            .r_tilde
            .iter()
            .zip(prediction)
            .map(|(r, m)| r + m)
            .collect();
        let gamma = gamma_select(&GammaProblem::new(shifted.clone(), target)?)?;
        // The shifted vector is kept unclipped for both flavors; only the
        // stored r̃ of the ⁺ flavor is clipped after observing.
        for (r, s) in self.r.iter_mut().zip(&shifted) {
            *r = s - gamma;
        }
        let err = (pos_norm2(&self.r) - target).abs();
        self.diag.max_gamma_error = self.diag.max_gamma_error.max(err);
        self.m.copy_from_slice(prediction);
        self.gamma = Some(gamma);
        self.x = SimplexVector::from_positive_part(&self.r);
        Ok(())
    }

    pub fn observe_utility(&mut self, utility: &[f64]) -> Result<()> {
        if let Flavor::Dcfr(p) = self.flavor {
            let t = self.iter as f64;
            return self.observe_with_discounts(utility, p.pos_discount(t), p.neg_discount(t));
        }
        self.observe_inner(utility, None)
    }

    /// DCFR's observation step with explicit discount factors. With both
    /// factors set to one it coincides with plain RM.
    pub fn observe_with_discounts(&mut self, utility: &[f64], pos: f64, neg: f64) -> Result<()> {
        if !matches!(self.flavor, Flavor::Dcfr(_)) {
            return Err(Error::Config("discounted observation needs a DCFR learner".into()));
        }
        self.observe_inner(utility, Some((pos, neg)))
    }

    fn observe_inner(&mut self, utility: &[f64], discounts: Option<(f64, f64)>) -> Result<()> {
        check_dim(self.dim(), utility.len())?;
        if utility.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("utility"));
        }
        if !self.pending {
            return Err(Error::Protocol("observe_utility without a preceding next_strategy"));
        }
        self.pending = false;

        let x = self.x.as_slice();
        let diff: Vec<f64> = utility.iter().zip(&self.m).map(|(u, m)| u - m).collect();
        let mean = dot(&diff, x);
        let g: Vec<f64> = diff.iter().map(|d| d - mean).collect();

        let norm_before = pos_norm2(&self.r_tilde);
        let r_pos_norm = pos_norm2(&self.r);
        if r_pos_norm > 0.0 {
            let gn = norm2_sq(&g).sqrt();
            if gn > 0.0 {
                let ip: f64 = g.iter().zip(&self.r).map(|(g, r)| g * r.max(0.0)).sum();
                let rel = ip.abs() / (gn * r_pos_norm);
                self.diag.max_orthogonality = self.diag.max_orthogonality.max(rel);
            }
        }
        self.diag.sum_g_sq += norm2_sq(&g);
        self.diag.movement_penalty += norm_before * dist2_sq(x, &self.x_tilde);

        match (self.flavor, discounts) {
            (Flavor::Dcfr(p), Some((pos, neg))) => {
                for (rt, gi) in self.r_tilde.iter_mut().zip(&g) {
                    let d = if *rt > 0.0 { pos } else { neg };
                    *rt = d * *rt + gi;
                }
                let t = (self.iter + 1) as f64;
                let w = ((t - 1.0) / t).powf(p.avg_exponent);
                for (s, xi) in self.avg_sum.iter_mut().zip(x) {
                    *s = *s * w + xi;
                }
            }
            (Flavor::IrPrm, _) if self.ir_rule == IrObserveRule::PositiveG => {
                for ((rt, r), gi) in self.r_tilde.iter_mut().zip(&self.r).zip(&g) {
                    *rt = r + gi.max(0.0);
                }
            }
            (flavor, _) => {
                let clip = flavor.is_plus();
                for ((rt, r), gi) in self.r_tilde.iter_mut().zip(&self.r).zip(&g) {
                    let v = r + gi;
                    *rt = if clip { v.max(0.0) } else { v };
                }
            }
        }

        let anchor_before = std::mem::replace(
            &mut self.x_tilde,
            SimplexVector::from_positive_part(&self.r_tilde),
        );
        let norm_after = pos_norm2(&self.r_tilde);
        self.stats.record(
            self.x.as_slice(),
            utility,
            &anchor_before,
            &self.x_tilde,
            norm_before,
            norm_after,
        );
        self.iter += 1;
        Ok(())
    }
}

impl Learner for RegretMatcher {
    fn dim(&self) -> usize {
        self.r_tilde.len()
    }

    fn next_strategy(&mut self, prediction: &[f64]) -> Result<SimplexVector> {
        RegretMatcher::next_strategy(self, prediction)
    }

    fn observe_utility(&mut self, utility: &[f64]) -> Result<()> {
        RegretMatcher::observe_utility(self, utility)
    }

    fn anchor(&self) -> SimplexVector {
        self.x_tilde.clone()
    }

    fn regret_norm(&self) -> f64 {
        pos_norm2(&self.r_tilde)
    }

    fn stats(&self) -> &LearnerStats {
        &self.stats
    }

    /// `√(‖r̃¹‖² + Σ‖g‖²) − (1/2n) Σ ‖[r̃^t]₊‖ ‖x^t − x̃^t‖²` for the IR flavors.
    fn rvu_check(&self) -> Option<RvuCheck> {
        if !self.flavor.is_ir() {
            return None;
        }
        let n = self.dim() as f64;
        let d = &self.diag;
        Some(RvuCheck {
            bound: (d.initial_norm_sq + d.sum_g_sq).sqrt() - d.movement_penalty / (2.0 * n),
            regret: self.stats.regret(),
        })
    }
}

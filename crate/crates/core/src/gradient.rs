//! Optimistic gradient descent on the simplex with the adaptive
//! misprediction-driven step size (AdOGD).
//!
//! The learner keeps a secondary iterate `x̃` and, given a prediction `m`,
//! plays `x = Π(x̃ + η m)`. After seeing `u` it moves `x̃ ← Π(x̃ + η u)`.
//! The step size is `η/√P`, where `P` sums the squared mispredictions
//! `‖u − m‖²` of all earlier rounds. While `P = 0` the step is infinite and
//! both updates become best responses, which is what makes the learner
//! scale invariant.

use crate::error::{Error, Result};
use crate::game::{check_dim, RegretAccumulator, SimplexVector, SIMPLEX_DIAMETER};
use crate::learner::{Learner, LearnerStats, RvuCheck};
use crate::linalg::{dist2_sq, norm2_sq};

/// Euclidean projection onto the probability simplex.
///
/// Sorts once and finds the threshold `θ` with `Σ max(yᵢ − θ, 0) = 1`.
///
/// ```
/// use zerosum::gradient::simplex_project;
///
/// let x = simplex_project(&[0.5, 0.5, 1.0]);
/// assert!((x[2] - 2.0 / 3.0).abs() < 1e-15);
/// ```
pub fn simplex_project(y: &[f64]) -> SimplexVector {
    assert!(!y.is_empty(), "projection of an empty vector");
    let mut sorted = y.to_vec();
    sorted.sort_unstable_by(|a, b| b.total_cmp(a));
    let mut cumsum = 0.0;
    let mut theta = 0.0;
    for (j, &v) in sorted.iter().enumerate() {
        cumsum += v;
        let candidate = (cumsum - 1.0) / (j + 1) as f64;
        if v - candidate > 0.0 {
            theta = candidate;
        }
    }
    let mut x: Vec<f64> = y.iter().map(|v| (v - theta).max(0.0)).collect();
    let total: f64 = x.iter().sum();
    x.iter_mut().for_each(|v| *v /= total);
    SimplexVector::new_unchecked(x)
}

/// Uniform distribution over the coordinates within `1e-12·max|u|` of `max u`.
pub fn uniform_best_response(u: &[f64]) -> SimplexVector {
    let max = u.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let scale = u.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let tol = 1e-12 * scale;
    let ties = u.iter().filter(|&&v| v >= max - tol).count() as f64;
    SimplexVector::new_unchecked(
        u.iter()
            .map(|&v| if v >= max - tol { 1.0 / ties } else { 0.0 })
            .collect(),
    )
}

/// How the step size behaves before the first misprediction is known.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum AdOgdMode {
    /// The first step with a positive misprediction `δ` uses `η/δ`, so the
    /// rate sequence starts with two equal entries.
    Theorem,
    /// The first step with a positive misprediction is still infinite.
    #[default]
    ScaleInvariant,
}

/// Sums over the rounds covered by the regret-bound monitors.
#[derive(Debug, Clone)]
struct Window {
    /// The round the window opened.
    start: usize,
    delta: f64,
    regret: RegretAccumulator,
    mis_sq: f64,
    max_mis: f64,
    rate_weighted_mis: f64,
    inv_rate_weighted_path: f64,
    path: f64,
    last_rate: f64,
}

#[derive(Debug, Clone)]
pub struct AdOgd {
    eta: f64,
    mode: AdOgdMode,
    x_tilde: Option<SimplexVector>,
    x: SimplexVector,
    m: Vec<f64>,
    p: f64,
    delta: Option<f64>,
    iter: usize,
    pending: bool,
    window: Option<Window>,
    stats: LearnerStats,
}

impl AdOgd {
    pub fn new(n: usize, eta: f64, mode: AdOgdMode) -> Result<Self> {
        if n == 0 {
            return Err(Error::EmptyDimension { rows: n, cols: 1 });
        }
        if !(eta.is_finite() && eta > 0.0) {
            return Err(Error::Config(format!("eta must be positive, got {eta}")));
        }
        Ok(AdOgd {
            eta,
            mode,
            x_tilde: None,
            x: SimplexVector::uniform(n),
            m: vec![0.0; n],
            p: 0.0,
            delta: None,
            iter: 0,
            pending: false,
            window: None,
            stats: LearnerStats::new(n),
        })
    }

    pub fn dim(&self) -> usize {
        self.m.len()
    }

    pub fn mode(&self) -> AdOgdMode {
        self.mode
    }

    /// Accumulated squared misprediction of all completed rounds.
    pub fn misprediction(&self) -> f64 {
        self.p
    }

    /// The first positive misprediction norm, once seen.
    pub fn delta(&self) -> Option<f64> {
        self.delta
    }

    /// Step size for the next proximal step, `+∞` while `P = 0`.
    pub fn rate(&self) -> f64 {
        if self.p > 0.0 {
            self.eta / self.p.sqrt()
        } else {
            f64::INFINITY
        }
    }

    pub fn strategy(&self) -> &SimplexVector {
        &self.x
    }

    pub fn iter(&self) -> usize {
        self.iter
    }

    fn step(&self, base: &SimplexVector, rate: f64, dir: &[f64]) -> SimplexVector {
        if rate.is_infinite() {
            uniform_best_response(dir)
        } else {
            let moved: Vec<f64> = base.iter().zip(dir).map(|(b, d)| b + rate * d).collect();
            simplex_project(&moved)
        }
    }

    pub fn next_strategy(&mut self, prediction: &[f64]) -> Result<SimplexVector> {
        check_dim(self.dim(), prediction.len())?;
        if prediction.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("prediction"));
        }
        self.m.copy_from_slice(prediction);
        self.x = match &self.x_tilde {
            None => {
                let x = uniform_best_response(prediction);
                self.x_tilde = Some(x.clone());
                x
            }
            Some(anchor) => self.step(anchor, self.rate(), prediction),
        };
        self.pending = true;
        Ok(self.x.clone())
    }

    pub fn observe_utility(&mut self, utility: &[f64]) -> Result<()> {
        check_dim(self.dim(), utility.len())?;
        if utility.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("utility"));
        }
        if !self.pending {
            return Err(Error::Protocol("observe_utility without a preceding next_strategy"));
        }
        self.pending = false;
        self.iter += 1;

        let mis_vec: Vec<f64> = utility.iter().zip(&self.m).map(|(u, m)| u - m).collect();
        let mis = norm2_sq(&mis_vec);
        let first_miss = self.delta.is_none() && mis > 0.0;
        if first_miss {
            self.delta = Some(mis.sqrt());
        }
        let rate = if first_miss && self.mode == AdOgdMode::Theorem {
            self.eta / mis.sqrt()
        } else {
            self.rate()
        };

        let anchor_before = self.x_tilde.clone().expect("set by next_strategy");
        let anchor_after = self.step(&anchor_before, rate, utility);

        let opens = match self.mode {
            AdOgdMode::Theorem => first_miss,
            AdOgdMode::ScaleInvariant => self.window.is_none() && self.delta.is_some() && !first_miss,
        };
        if opens {
            self.window = Some(Window {
                start: self.iter,
                delta: self.delta.expect("set above"),
                regret: RegretAccumulator::new(self.dim()),
                mis_sq: 0.0,
                max_mis: 0.0,
                rate_weighted_mis: 0.0,
                inv_rate_weighted_path: 0.0,
                path: 0.0,
                last_rate: rate,
            });
        }
        if let Some(w) = &mut self.window {
            let path = dist2_sq(&self.x, &anchor_before) + dist2_sq(&self.x, &anchor_after);
            w.regret.push(&self.x, utility);
            w.mis_sq += mis;
            w.max_mis = w.max_mis.max(mis.sqrt());
            w.rate_weighted_mis += rate * mis;
            w.inv_rate_weighted_path += path / (2.0 * rate);
            w.path += path;
            w.last_rate = rate;
        }

        let norm_before = self.regret_norm();
        self.p += mis;
        self.stats.record(
            &self.x,
            utility,
            &anchor_before,
            &anchor_after,
            norm_before,
            self.regret_norm(),
        );
        self.x_tilde = Some(anchor_after);
        Ok(())
    }

    /// Regret bound valid for any nonincreasing step sequence, evaluated on
    /// the monitored window:
    /// `D²/η^T + Σ η^t‖u−m‖² − Σ (1/2η^t)(‖x^t−x̃^t‖² + ‖x^t−x̃^{t+1}‖²)`.
    pub fn first_bound(&self) -> Option<RvuCheck> {
        let w = self.window.as_ref()?;
        let d2 = SIMPLEX_DIAMETER * SIMPLEX_DIAMETER;
        Some(RvuCheck {
            bound: d2 / w.last_rate + w.rate_weighted_mis - w.inv_rate_weighted_path,
            regret: w.regret.regret(),
        })
    }

    /// The misprediction-normalized form of the bound,
    /// `(3ηB/δ + D²/η)√Σ‖u−m‖² − (δ/2η) S`, with `B` the largest observed
    /// misprediction norm. Only available in [`AdOgdMode::Theorem`].
    pub fn modified_rvu_bound(&self) -> Option<RvuCheck> {
        if self.mode != AdOgdMode::Theorem {
            return None;
        }
        let w = self.window.as_ref()?;
        let d2 = SIMPLEX_DIAMETER * SIMPLEX_DIAMETER;
        let eta = self.eta;
        Some(RvuCheck {
            bound: (3.0 * eta * w.max_mis / w.delta + d2 / eta) * w.mis_sq.sqrt()
                - w.delta / (2.0 * eta) * w.path,
            regret: w.regret.regret(),
        })
    }

    /// First round covered by the monitors.
    pub fn monitor_start(&self) -> Option<usize> {
        self.window.as_ref().map(|w| w.start)
    }
}

impl Learner for AdOgd {
    fn dim(&self) -> usize {
        self.m.len()
    }

    fn next_strategy(&mut self, prediction: &[f64]) -> Result<SimplexVector> {
        AdOgd::next_strategy(self, prediction)
    }

    fn observe_utility(&mut self, utility: &[f64]) -> Result<()> {
        AdOgd::observe_utility(self, utility)
    }

    /// `x̃`, or uniform before the first round fixes it.
    fn anchor(&self) -> SimplexVector {
        self.x_tilde
            .clone()
            .unwrap_or_else(|| SimplexVector::uniform(self.dim()))
    }

    /// `√P/η`, the inverse of the current step size.
    fn regret_norm(&self) -> f64 {
        self.p.sqrt() / self.eta
    }

    fn stats(&self) -> &LearnerStats {
        &self.stats
    }

    fn rvu_check(&self) -> Option<RvuCheck> {
        match self.mode {
            AdOgdMode::Theorem => self.modified_rvu_bound(),
            AdOgdMode::ScaleInvariant => self.first_bound(),
        }
    }
}

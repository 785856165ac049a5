//! Randomized property suites, run by `zerosum verify`.
//!
//! Every property is phrased as a slack that must stay nonnegative. A suite
//! reports, per property, how many instances were checked, the worst slack
//! seen and a reproducer for the first violation. Instances are generated
//! from ChaCha8 streams seeded by the instance index, so a reproducer's seed
//! regenerates its instance exactly.
//!
//! ```
//! use zerosum::verify::{run_suite, Suite};
//!
//! let props = run_suite(Suite::LemmaC);
//! assert!(props.iter().all(|p| p.passed() && p.checked > 0));
//! ```

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::driver::{LearnerBank, SelfPlay, Setup};
use crate::error::{Error, Result};
use crate::game::{counterexample_game, NormalFormGame, SimplexVector};
use crate::gamma::{gamma_bisect, gamma_select, gamma_sorted, random_instance};
use crate::gradient::{simplex_project, AdOgd, AdOgdMode};
use crate::learner::{Learner, LearnerSpec};
use crate::linalg::{dot, max, pos_norm2};
use crate::matchers::{Flavor, RegretMatcher};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    Gamma,
    Matchers,
    Gradient,
    Rvu,
    LemmaC,
    Scale,
    All,
}

impl Suite {
    pub const EACH: [Suite; 6] = [
        Suite::Gamma,
        Suite::Matchers,
        Suite::Gradient,
        Suite::Rvu,
        Suite::LemmaC,
        Suite::Scale,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Suite::Gamma => "gamma",
            Suite::Matchers => "matchers",
            Suite::Gradient => "gradient",
            Suite::Rvu => "rvu",
            Suite::LemmaC => "lemmaC",
            Suite::Scale => "scale",
            Suite::All => "all",
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Suite::EACH
            .into_iter()
            .chain([Suite::All])
            .find(|x| x.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::Config(format!("unknown suite '{s}'")))
    }
}

/// Outcome of one property over all its instances.
#[derive(Debug, Clone, PartialEq)]
pub struct Property {
    pub suite: &'static str,
    pub name: &'static str,
    pub checked: u64,
    pub worst_slack: f64,
    /// Seed and instance of the first violation.
    pub reproducer: Option<String>,
}

impl Property {
    fn new(suite: Suite, name: &'static str) -> Self {
        Property {
            suite: suite.name(),
            name,
            checked: 0,
            worst_slack: f64::INFINITY,
            reproducer: None,
        }
    }

    fn record(&mut self, slack: f64, reproducer: impl FnOnce() -> String) {
        self.checked += 1;
        // NaN counts as a violation and sticks as the worst slack.
        if !self.worst_slack.is_nan() && !(slack >= self.worst_slack) {
            self.worst_slack = slack;
        }
        if !(slack >= 0.0) && self.reproducer.is_none() {
            self.reproducer = Some(reproducer());
        }
    }

    pub fn passed(&self) -> bool {
        self.reproducer.is_none()
    }
}

/// Runs one suite, or every suite for [`Suite::All`].
pub fn run_suite(suite: Suite) -> Vec<Property> {
    match suite {
        Suite::Gamma => gamma_suite(),
        Suite::Matchers => matchers_suite(),
        Suite::Gradient => gradient_suite(),
        Suite::Rvu => rvu_suite(),
        Suite::LemmaC => lemma_c_suite(),
        Suite::Scale => scale_suite(),
        Suite::All => Suite::EACH.into_iter().flat_map(run_suite).collect(),
    }
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn uniform_vec(rng: &mut ChaCha8Rng, n: usize, lo: f64, hi: f64) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(lo..hi)).collect()
}

/// Sorted, selection and bisection γ agree, and each hits the target norm.
fn gamma_suite() -> Vec<Property> {
    let mut agree = Property::new(Suite::Gamma, "agreement");
    let mut norm = Property::new(Suite::Gamma, "target_norm");
    for k in 0..10_000u64 {
        let n = rng(k).gen_range(1..=512);
        let p = random_instance(n, k);
        let repro = || format!("random_instance(n = {n}, seed = {k})");
        let (a, b) = match (gamma_sorted(&p), gamma_select(&p)) {
            (Ok(a), Ok(b)) => (a, b),
            _ => {
                agree.record(f64::NAN, repro);
                continue;
            }
        };
        let c = gamma_bisect(&p);
        let d = [(a - b).abs(), (a - c).abs(), (b - c).abs()];
        agree.record(1e-10 - max(&d) / p.scale(), repro);
        let err = [a, b, c]
            .iter()
            .map(|&g| (p.shifted_norm(g) - p.target()).abs())
            .fold(0.0, f64::max);
        norm.record(1e-9 - err, repro);
    }
    vec![agree, norm]
}

/// A stream of (utility, prediction) pairs with `n ≤ 20`.
fn random_stream(seed: u64, rounds: usize) -> (usize, Vec<(Vec<f64>, Vec<f64>)>) {
    let mut r = rng(seed);
    let n = r.gen_range(1..=20);
    let stream = (0..rounds)
        .map(|_| (uniform_vec(&mut r, n, -1.0, 1.0), uniform_vec(&mut r, n, -1.0, 1.0)))
        .collect();
    (n, stream)
}

/// Positive regret norms never shrink for RM, RM⁺ and the IR flavors, the
/// IR shift preserves the norm exactly, and every strategy is on the
/// simplex.
fn matchers_suite() -> Vec<Property> {
    let mut nondecreasing = Property::new(Suite::Matchers, "norm_nondecreasing");
    let mut preserved = Property::new(Suite::Matchers, "ir_shift_preserves_norm");
    let mut simplex = Property::new(Suite::Matchers, "strategy_on_simplex");
    let flavors = [Flavor::Rm, Flavor::RmPlus, Flavor::IrPrm, Flavor::IrPrmPlus];
    for k in 0..1000u64 {
        let (n, stream) = random_stream(k, 200);
        for flavor in flavors {
            let mut l = RegretMatcher::new(flavor, n).expect("n >= 1");
            for (t, (u, m)) in stream.iter().enumerate() {
                let repro = || format!("stream seed {k} (n = {n}), {flavor:?}, round {}", t + 1);
                let before = pos_norm2(l.r_tilde());
                let x = match l.next_strategy(m) {
                    Ok(x) => x,
                    Err(_) => {
                        simplex.record(f64::NAN, repro);
                        break;
                    }
                };
                let sum: f64 = x.iter().sum();
                let neg = x.iter().copied().fold(0.0, f64::min);
                simplex.record(1e-9 - (sum - 1.0).abs().max(-neg), repro);
                if flavor.is_ir() {
                    preserved.record(1e-9 - (pos_norm2(l.r()) - before).abs(), repro);
                }
                if l.observe_utility(u).is_err() {
                    nondecreasing.record(f64::NAN, repro);
                    break;
                }
                nondecreasing.record(1e-9 - (before - pos_norm2(l.r_tilde())), repro);
            }
        }
    }
    vec![nondecreasing, preserved, simplex]
}

/// Euclidean projection onto the simplex is feasible and optimal, and
/// scale-invariant AdOGD satisfies its learning-rate-sequence regret bound.
fn gradient_suite() -> Vec<Property> {
    let mut feasible = Property::new(Suite::Gradient, "projection_feasible");
    let mut optimal = Property::new(Suite::Gradient, "projection_optimal");
    for k in 0..10_000u64 {
        let mut r = rng(k);
        let n = r.gen_range(1..=20);
        let scale = 10f64.powf(r.gen_range(-3.0..3.0));
        let y = uniform_vec(&mut r, n, -scale, scale);
        let x = simplex_project(&y);
        let repro = || format!("projection seed {k}: y = {y:?}");
        let sum: f64 = x.iter().sum();
        let neg = x.iter().copied().fold(0.0, f64::min);
        feasible.record(1e-9 - (sum - 1.0).abs().max(-neg), repro);
        // x is the projection iff ⟨y − x, z − x⟩ ≤ 0 for every vertex z.
        let d: Vec<f64> = y.iter().zip(x.iter()).map(|(a, b)| a - b).collect();
        let base = dot(&d, x.as_slice());
        let worst = max(&d) - base;
        optimal.record(1e-9 * scale.max(1.0) - worst, repro);
    }
    let mut bound = Property::new(Suite::Gradient, "adogd_rate_sequence_bound");
    for k in 0..1000u64 {
        let (n, stream) = random_stream(10_000 + k, 200);
        let mut l = AdOgd::new(n, 1.0, AdOgdMode::ScaleInvariant).expect("n >= 1");
        for (t, (u, m)) in stream.iter().enumerate() {
            let step = l.next_strategy(m).and_then(|_| l.observe_utility(u));
            let repro = || format!("stream seed {} (n = {n}), round {}", 10_000 + k, t + 1);
            if step.is_err() {
                bound.record(f64::NAN, repro);
                break;
            }
            if let Some(c) = l.first_bound() {
                bound.record(c.slack() + 1e-6, repro);
            }
        }
    }
    vec![feasible, optimal, bound]
}

/// RVU-type bounds on adversarial streams: the IR-PRM(⁺) bound and the
/// modified RVU bound of AdOGD with the theorem's learning rate.
fn rvu_suite() -> Vec<Property> {
    let mut ir = Property::new(Suite::Rvu, "ir_prm_bound");
    for k in 0..1000u64 {
        let seed = 20_000 + k;
        let (n, stream) = random_stream(seed, 200);
        for flavor in [Flavor::IrPrm, Flavor::IrPrmPlus] {
            let mut l = RegretMatcher::new(flavor, n).expect("n >= 1");
            for (t, (u, m)) in stream.iter().enumerate() {
                let step = l.next_strategy(m).and_then(|_| l.observe_utility(u));
                let repro = || format!("stream seed {seed} (n = {n}), {flavor:?}, round {}", t + 1);
                if step.is_err() {
                    ir.record(f64::NAN, repro);
                    break;
                }
                if let Some(c) = l.rvu_check() {
                    ir.record(c.slack() + 1e-6, repro);
                }
            }
        }
    }
    let mut ad = Property::new(Suite::Rvu, "adogd_modified_rvu");
    for k in 0..1000u64 {
        let seed = 30_000 + k;
        let (n, stream) = random_stream(seed, 500);
        let mut l = AdOgd::new(n, 1.0, AdOgdMode::Theorem).expect("n >= 1");
        for (t, (u, m)) in stream.iter().enumerate() {
            let step = l.next_strategy(m).and_then(|_| l.observe_utility(u));
            let repro = || format!("stream seed {seed} (n = {n}), round {}", t + 1);
            if step.is_err() {
                ad.record(f64::NAN, repro);
                break;
            }
            if let Some(c) = l.modified_rvu_bound() {
                ad.record(c.slack() + 1e-6, repro);
            }
        }
    }
    vec![ir, ad]
}

/// One-step improvement of RM⁺: with `x = r/‖r‖₁` (any simplex point when
/// `r = 0`), `r' = [r + u − ⟨x, u⟩1]₊ ≠ 0` and `x' = r'/‖r'‖₁`,
/// `⟨x' − x, u⟩ ≥ (max u − ⟨x, u⟩)² / ‖r'‖₁`.
fn lemma_c_suite() -> Vec<Property> {
    let mut prop = Property::new(Suite::LemmaC, "one_step_improvement");
    for k in 0..100_000u64 {
        let mut rg = rng(k);
        let n = rg.gen_range(1..=20);
        let zero = rg.gen_bool(0.1);
        let r: Vec<f64> = (0..n)
            .map(|_| {
                if zero || rg.gen_bool(0.3) {
                    0.0
                } else {
                    rg.gen_range(0.0..5.0)
                }
            })
            .collect();
        let u = uniform_vec(&mut rg, n, -3.0, 3.0);
        let x = if r.iter().any(|&v| v > 0.0) {
            SimplexVector::from_positive_part(&r)
        } else {
            SimplexVector::from_positive_part(&uniform_vec(&mut rg, n, 0.0, 1.0))
        };
        let xu = dot(x.as_slice(), &u);
        let rp: Vec<f64> = r.iter().zip(&u).map(|(a, b)| (a + b - xu).max(0.0)).collect();
        let rp1: f64 = rp.iter().sum();
        if rp1 == 0.0 {
            continue;
        }
        let xp = SimplexVector::from_positive_part(&rp);
        let lhs = dot(xp.as_slice(), &u) - xu;
        let rhs = (max(&u) - xu).powi(2) / rp1;
        prop.record(lhs - rhs + 1e-12, || format!("instance seed {k}: r = {r:?}, u = {u:?}"));
    }
    vec![prop]
}

/// Strategies of one self-play run, both players concatenated per round.
fn strategy_sequence(game: &NormalFormGame, spec: LearnerSpec, setup: Setup, rounds: usize) -> Result<Vec<Vec<f64>>> {
    let x = LearnerBank::from_spec(&spec, &[game.rows()])?;
    let y = LearnerBank::from_spec(&spec, &[game.cols()])?;
    let mut sp = SelfPlay::new(game, setup, x, y)?;
    (0..rounds)
        .map(|_| sp.step().map(|r| r.x.into_iter().chain(r.y).collect()))
        .collect()
}

/// Scaling all utilities by `c` leaves the strategy sequence unchanged.
fn scale_suite() -> Vec<Property> {
    let g = counterexample_game();
    let cases = [
        ("ir-prm+", LearnerSpec::matcher(Flavor::IrPrmPlus), Setup::Simultaneous),
        ("ir-prm+", LearnerSpec::matcher(Flavor::IrPrmPlus), Setup::Extragradient),
        ("adogd", LearnerSpec::adogd(), Setup::Simultaneous),
        ("adogd", LearnerSpec::adogd(), Setup::Extragradient),
        ("prm+", LearnerSpec::matcher(Flavor::PrmPlus), Setup::Simultaneous),
    ];
    let mut prop = Property::new(Suite::Scale, "sequence_invariance");
    for (name, spec, setup) in cases {
        let base = strategy_sequence(&g, spec, setup, 1000);
        for c in [1e-3, 1e3] {
            let repro = || format!("{name} {setup:?} on the counterexample game scaled by {c:e}");
            let scaled = strategy_sequence(&g.scaled(c), spec, setup, 1000);
            let (Ok(a), Ok(b)) = (&base, scaled) else {
                prop.record(f64::NAN, repro);
                continue;
            };
            let dev = a
                .iter()
                .zip(&b)
                .flat_map(|(p, q)| p.iter().zip(q).map(|(s, t)| (s - t).abs()))
                .fold(0.0, f64::max);
            prop.record(1e-7 - dev, repro);
        }
    }
    vec![prop]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_suite_names() {
        for s in Suite::EACH {
            assert_eq!(s.name().parse::<Suite>().unwrap(), s);
        }
        assert_eq!("lemmac".parse::<Suite>().unwrap(), Suite::LemmaC);
        assert!("bogus".parse::<Suite>().is_err());
    }

    #[test]
    fn record_tracks_worst_and_first_violation() {
        let mut p = Property::new(Suite::Gamma, "x");
        p.record(0.5, || unreachable!());
        p.record(-1.0, || "first".into());
        p.record(-2.0, || "second".into());
        assert_eq!(p.checked, 3);
        assert_eq!(p.worst_slack, -2.0);
        assert_eq!(p.reproducer.as_deref(), Some("first"));
        assert!(!p.passed());
        let mut q = Property::new(Suite::Gamma, "nan");
        q.record(f64::NAN, || "nan".into());
        assert!(!q.passed() && q.worst_slack.is_nan());
    }

    #[test]
    fn fast_suites_pass() {
        for s in [Suite::Scale, Suite::Rvu] {
            for p in run_suite(s) {
                assert!(p.passed() && p.checked > 0, "{p:?}");
            }
        }
    }
}

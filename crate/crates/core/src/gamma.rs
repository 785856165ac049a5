//! The norm-preserving shift: find `γ` with `‖[v − γ1]₊‖₂ = t`.
//!
//! `f(γ) = ‖[v − γ1]₊‖₂` is strictly decreasing below `max v` and zero
//! above it, so every `t > 0` has exactly one solution. If `v⁺` holds the
//! `k` entries above `γ`, with `s = Σ v⁺` and `s₂ = Σ (v⁺)²`, then `γ` is
//! the smaller root of `kγ² − 2sγ + s₂ − t² = 0`. The solvers below differ
//! only in how they find `k`:
//!
//! * [`gamma_sorted`] sorts once and scans prefixes, `O(n log n)`.
//! * [`gamma_select`] halves the candidate range by selection, `O(n)`.
//! * [`gamma_bisect`] bisects on `f` directly and serves as the oracle.

use std::cell::Cell;
use std::cmp::Ordering;

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Relative slack under which a negative discriminant is treated as zero.
const DISCRIMINANT_DUST: f64 = 1e-12;

/// A validated instance of the shift problem.
#[derive(Debug, Clone, PartialEq)]
pub struct GammaProblem {
    v: Vec<f64>,
    t: f64,
}

impl GammaProblem {
    pub fn new(v: Vec<f64>, t: f64) -> Result<Self> {
        if v.is_empty() {
            return Err(Error::EmptySequence);
        }
        if !t.is_finite() || v.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("gamma problem"));
        }
        if t <= 0.0 {
            return Err(Error::NonPositiveTarget(t));
        }
        Ok(GammaProblem { v, t })
    }

    pub fn values(&self) -> &[f64] {
        &self.v
    }

    pub fn target(&self) -> f64 {
        self.t
    }

    /// `f(γ) = ‖[v − γ1]₊‖₂`.
    pub fn shifted_norm(&self, gamma: f64) -> f64 {
        self.v
            .iter()
            .map(|&x| (x - gamma).max(0.0).powi(2))
            .sum::<f64>()
            .sqrt()
    }

    /// Magnitude scale of the instance, used for relative tolerances.
    pub fn scale(&self) -> f64 {
        self.v.iter().fold(self.t, |m, x| m.max(x.abs()))
    }
}

/// Smaller root of `kγ² − 2sγ + s₂ − t² = 0`, or `None` when the
/// discriminant `s² − k(s₂ − t²)` is negative.
///
/// Discriminants within 1e-12 (relative to the magnitude of its terms)
/// below zero are clamped to zero.
pub fn solve_k_quadratic(s: f64, s2: f64, k: usize, t: f64) -> Option<f64> {
    assert!(k >= 1, "k must be positive");
    let kf = k as f64;
    let t2 = t * t;
    let mut disc = s * s - kf * (s2 - t2);
    if disc < 0.0 {
        let scale = s * s + kf * (s2.abs() + t2);
        if disc < -DISCRIMINANT_DUST * scale {
            return None;
        }
        disc = 0.0;
    }
    let root = disc.sqrt();
    if s > 0.0 {
        // (s − √D)/k rewritten to avoid cancelling s against √D.
        Some((s2 - t2) / (s + root))
    } else {
        Some((s - root) / kf)
    }
}

fn counted_cmp<'a>(counter: &'a Cell<u64>) -> impl FnMut(&f64, &f64) -> Ordering + 'a {
    move |a, b| {
        counter.set(counter.get() + 1);
        a.total_cmp(b)
    }
}

/// Sorting-based solver.
pub fn gamma_sorted(p: &GammaProblem) -> Result<f64> {
    gamma_sorted_counted(p).map(|(g, _)| g)
}

/// [`gamma_sorted`] that also reports the number of element comparisons.
pub fn gamma_sorted_counted(p: &GammaProblem) -> Result<(f64, u64)> {
    let counter = Cell::new(0u64);
    let mut v = p.v.clone();
    let mut cmp = counted_cmp(&counter);
    v.sort_unstable_by(|a, b| cmp(b, a));
    // Work relative to max v so clustered values do not cancel in the
    // discriminant.
    let c = v[0];
    v.iter_mut().for_each(|x| *x -= c);

    let n = v.len();
    let (mut s, mut s2) = (0.0, 0.0);
    for k in 1..=n {
        s += v[k - 1];
        s2 += v[k - 1] * v[k - 1];
        if let Some(gamma) = solve_k_quadratic(s, s2, k, p.t) {
            if k == n {
                return Ok((gamma + c, counter.get()));
            }
            counter.set(counter.get() + 1);
            if gamma >= v[k] {
                return Ok((gamma + c, counter.get()));
            }
        }
    }
    Err(Error::NoTermination(n))
}

/// Selection-based solver.
pub fn gamma_select(p: &GammaProblem) -> Result<f64> {
    gamma_select_counted(p).map(|(g, _)| g)
}

/// [`gamma_select`] that also reports the number of element comparisons.
///
/// Each round splits the live range at its lower median into `v⁻` (the
/// `⌊len/2⌋` smallest) and `v⁺`, and tests the root built from `v⁺` plus
/// everything already known to be active:
///
/// * no root, or root above `min v⁺`: too many entries active; keep `v⁺`.
/// * root at least `max v⁻`: done.
/// * otherwise `v⁺` is entirely active; fold it into the sums, keep `v⁻`.
pub fn gamma_select_counted(p: &GammaProblem) -> Result<(f64, u64)> {
    let counter = Cell::new(0u64);
    let mut v = p.v.clone();
    let n = v.len();
    // Same shift by max v as the sorted solver.
    let c = v.iter().skip(1).fold(v[0], |m, &x| {
        counter.set(counter.get() + 1);
        m.max(x)
    });
    v.iter_mut().for_each(|x| *x -= c);
    let budget = 2 * (usize::BITS - (n - 1).leading_zeros()) as usize + n;

    let (mut lo, mut hi) = (0usize, n);
    let (mut s_fixed, mut s2_fixed, mut k_fixed) = (0.0, 0.0, 0usize);

    for _ in 0..budget {
        let len = hi - lo;
        if len == 0 {
            // Everything left was inactive; the fixed prefix is the answer.
            return solve_k_quadratic(s_fixed, s2_fixed, k_fixed, p.t)
                .map(|g| (g + c, counter.get()))
                .ok_or(Error::NoTermination(n));
        }
        let slice = &mut v[lo..hi];
        let i = len / 2;
        if i > 0 {
            slice.select_nth_unstable_by(i, counted_cmp(&counter));
        }
        let (lower, upper) = slice.split_at(i);
        let s = s_fixed + upper.iter().sum::<f64>();
        let s2 = s2_fixed + upper.iter().map(|x| x * x).sum::<f64>();
        let k = k_fixed + upper.len();
        // After selection, position i holds the smallest entry of v⁺.
        let min_upper = upper[0];
        let gamma = solve_k_quadratic(s, s2, k, p.t);

        let too_many = match gamma {
            None => true,
            Some(g) => {
                counter.set(counter.get() + 1);
                g > min_upper
            }
        };
        if too_many {
            if i == 0 {
                hi = lo;
            } else {
                lo += i;
            }
            continue;
        }
        let g = gamma.expect("checked above");
        let max_lower = lower.iter().copied().fold(f64::NEG_INFINITY, |m, x| {
            counter.set(counter.get() + 1);
            m.max(x)
        });
        counter.set(counter.get() + 1);
        if g >= max_lower {
            return Ok((g + c, counter.get()));
        }
        s_fixed = s;
        s2_fixed = s2;
        k_fixed = k;
        hi = lo + i;
    }
    Err(Error::NoTermination(budget))
}

/// Bisection on `f(γ) − t` over `[min v − t, max v]`, stopped once the
/// bracket is narrower than `1e-13·(1 + |γ|)`.
pub fn gamma_bisect(p: &GammaProblem) -> f64 {
    let min = p.v.iter().copied().fold(f64::INFINITY, f64::min);
    let mut lo = min - p.t;
    let mut hi = p.v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut mid = 0.5 * (lo + hi);
    for _ in 0..2_000 {
        mid = 0.5 * (lo + hi);
        if hi - lo <= 1e-13 * (1.0 + mid.abs()) {
            break;
        }
        if p.shifted_norm(mid) > p.t {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    mid
}

/// Fuzz instance generator used by the verification suite and the bench.
///
/// Draws `n` values uniformly from `[-2, 2)`, then with probability 1/4
/// copies earlier entries over some later ones and with probability 1/8
/// makes every entry equal; `t` is uniform on `(0, 4)`. Deterministic in
/// `seed` (ChaCha8).
pub fn random_instance(n: usize, seed: u64) -> GammaProblem {
    assert!(n >= 1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut unit = move || (rng.next_u64() >> 11) as f64 / (1u64 << 53) as f64;
    let mut v: Vec<f64> = (0..n).map(|_| 4.0 * unit() - 2.0).collect();
    let mode = unit();
    if mode < 0.125 {
        let c = v[0];
        v.iter_mut().for_each(|x| *x = c);
    } else if mode < 0.375 && n > 1 {
        for j in 1..n {
            if unit() < 0.3 {
                let src = (unit() * j as f64) as usize;
                v[j] = v[src];
            }
        }
    }
    let t = 4.0 * unit() + 1e-6;
    GammaProblem::new(v, t).expect("generated instance is valid")
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn problem(v: &[f64], t: f64) -> GammaProblem {
        GammaProblem::new(v.to_vec(), t).unwrap()
    }

    fn all_three(p: &GammaProblem) -> [f64; 3] {
        [gamma_sorted(p).unwrap(), gamma_select(p).unwrap(), gamma_bisect(p)]
    }

    #[test]
    fn quadratic_examples() {
        assert_eq!(solve_k_quadratic(3.0, 9.0, 1, 1.0), Some(2.0));
        let g = solve_k_quadratic(4.0, 8.0, 2, 2f64.sqrt()).unwrap();
        assert!((g - 1.0).abs() < 1e-15);
        // s² − k(s₂ − t²) = 1 − 2(5 − 1) < 0.
        assert_eq!(solve_k_quadratic(1.0, 5.0, 2, 1.0), None);
    }

    #[test]
    fn discriminant_dust_is_clamped() {
        // v = (1, 1) shares one root with t = 0 at the boundary; nudge t so
        // the discriminant lands a hair below zero.
        let d = solve_k_quadratic(2.0, 2.0 + 1e-15, 2, 1e-9);
        assert!(d.is_some());
    }

    #[test]
    fn single_entry() {
        for g in all_three(&problem(&[1.0], 1.0)) {
            assert!(g.abs() < 1e-12, "{g}");
        }
    }

    #[test]
    fn symmetric_pair() {
        for g in all_three(&problem(&[2.0, 2.0], 2f64.sqrt())) {
            assert!((g - 1.0).abs() < 1e-12, "{g}");
        }
    }

    #[test]
    fn one_active_of_two() {
        let p = problem(&[3.0, 1.0], 1.0);
        for g in all_three(&p) {
            assert!((g - 2.0).abs() < 1e-12, "{g}");
            assert!((p.shifted_norm(g) - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn two_active_with_negative_tail() {
        let expected = 1.0 - 3.0 / 2f64.sqrt();
        for g in all_three(&problem(&[1.0, 1.0, -5.0], 3.0)) {
            assert!((g - expected).abs() < 1e-12, "{g} vs {expected}");
        }
    }

    #[test]
    fn invalid_problems_rejected() {
        assert_eq!(
            GammaProblem::new(vec![1.0], 0.0),
            Err(Error::NonPositiveTarget(0.0))
        );
        assert!(GammaProblem::new(vec![1.0], -1.0).is_err());
        assert!(GammaProblem::new(vec![f64::NAN], 1.0).is_err());
        assert!(GammaProblem::new(vec![], 1.0).is_err());
    }

    #[test]
    fn select_terminates_on_ties_and_small_inputs() {
        for n in 1..40 {
            for seed in 0..20 {
                let p = random_instance(n, seed * 97 + n as u64);
                gamma_select(&p).unwrap();
            }
        }
    }

    fn close(a: f64, b: f64, p: &GammaProblem) -> bool {
        (a - b).abs() <= 1e-10 * p.scale().max(a.abs()).max(b.abs())
    }

    proptest! {
        #[test]
        fn solvers_agree(
            v in prop::collection::vec(-5.0f64..5.0, 1..64),
            t in 1e-3f64..10.0,
            dup in 0usize..4,
        ) {
            let mut v = v;
            if dup > 0 && v.len() > 1 {
                let first = v[0];
                for x in v.iter_mut().step_by(dup + 1) {
                    *x = first;
                }
            }
            let p = GammaProblem::new(v, t).unwrap();
            let [a, b, c] = all_three(&p);
            prop_assert!(close(a, b, &p), "sorted {a} select {b}");
            prop_assert!(close(a, c, &p), "sorted {a} bisect {c}");
            prop_assert!((p.shifted_norm(a) - t).abs() <= 1e-9 * p.scale());
        }

        #[test]
        fn active_set_sandwich(v in prop::collection::vec(-3.0f64..3.0, 1..50), t in 1e-2f64..5.0) {
            let p = GammaProblem::new(v.clone(), t).unwrap();
            let g = gamma_select(&p).unwrap();
            // Rebuild the active set from γ and check min v⁺ ≥ γ ≥ max v⁻.
            let tol = 1e-9 * p.scale();
            let active: Vec<f64> = v.iter().copied().filter(|&x| x > g + tol).collect();
            let inactive: Vec<f64> = v.iter().copied().filter(|&x| x < g - tol).collect();
            prop_assert!(!active.is_empty() || v.iter().any(|&x| (x - g).abs() <= tol) || t < tol);
            for x in active { prop_assert!(x >= g - tol); }
            for x in inactive { prop_assert!(x <= g + tol); }
        }

        #[test]
        fn shifted_norm_strictly_decreasing(
            v in prop::collection::vec(-3.0f64..3.0, 1..20),
            a in 0.0f64..1.0,
            b in 0.0f64..1.0,
        ) {
            let p = GammaProblem::new(v.clone(), 1.0).unwrap();
            let max = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let (lo, hi) = if a < b { (a, b) } else { (b, a) };
            prop_assume!(hi - lo > 1e-6);
            let g1 = max - 1.0 - 3.0 * (1.0 - lo);
            let g2 = max - 1.0 - 3.0 * (1.0 - hi);
            prop_assert!(p.shifted_norm(g1) > p.shifted_norm(g2));
        }
    }
}

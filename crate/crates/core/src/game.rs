//! Normal-form zero-sum games, mixed strategies, and the regret and
//! duality-gap metrics shared by every learner and driver.
//!
//! Player X maximizes `xᵀ A y`, player Y minimizes it. X observes the
//! utility vector `A y`, Y observes `-Aᵀ x`.

use nalgebra::DMatrix;
use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::linalg::dot;

/// Coordinate slack tolerated below zero after arithmetic.
pub const SIMPLEX_NEG_TOL: f64 = 1e-12;
/// Tolerated deviation of the coordinate sum from one.
pub const SIMPLEX_SUM_TOL: f64 = 1e-9;
/// Largest distance from the max at which a payoff still counts as a tie.
pub const TIE_TOL: f64 = 1e-12;

/// The two players of a zero-sum game.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Player {
    X,
    Y,
}

impl Player {
    pub fn opponent(self) -> Player {
        match self {
            Player::X => Player::Y,
            Player::Y => Player::X,
        }
    }
}

/// A mixed strategy: nonnegative coordinates summing to one.
#[derive(Debug, Clone, PartialEq)]
pub struct SimplexVector(Vec<f64>);

impl SimplexVector {
    /// Validates `coords` against the simplex invariants.
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.is_empty() {
            return Err(Error::EmptySequence);
        }
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(Error::NonFinite("simplex vector"));
        }
        if let Some(i) = coords.iter().position(|&c| c < -SIMPLEX_NEG_TOL) {
            return Err(Error::NotSimplex(format!(
                "coordinate {i} is negative ({})",
                coords[i]
            )));
        }
        let sum: f64 = coords.iter().sum();
        if (sum - 1.0).abs() > SIMPLEX_SUM_TOL {
            return Err(Error::NotSimplex(format!("coordinates sum to {sum}")));
        }
        Ok(SimplexVector(coords))
    }

    /// Wraps coordinates the caller already knows to be on the simplex.
    pub(crate) fn new_unchecked(coords: Vec<f64>) -> Self {
        debug_assert!(SimplexVector::new(coords.clone()).is_ok(), "{coords:?}");
        SimplexVector(coords)
    }

    pub fn uniform(n: usize) -> Self {
        assert!(n > 0, "uniform strategy needs at least one action");
        SimplexVector(vec![1.0 / n as f64; n])
    }

    /// The pure strategy on action `i`.
    pub fn vertex(n: usize, i: usize) -> Self {
        assert!(i < n, "vertex {i} out of range for dimension {n}");
        let mut coords = vec![0.0; n];
        coords[i] = 1.0;
        SimplexVector(coords)
    }

    /// Normalizes the positive part of `weights` in ℓ₁; uniform when it is zero.
    pub fn from_positive_part(weights: &[f64]) -> Self {
        let total: f64 = weights.iter().map(|w| w.max(0.0)).sum();
        if total > 0.0 {
            SimplexVector(weights.iter().map(|w| w.max(0.0) / total).collect())
        } else {
            SimplexVector::uniform(weights.len())
        }
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl std::ops::Deref for SimplexVector {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

/// Utility (and prediction) vectors are plain payoff vectors.
pub type UtilityVector = Vec<f64>;

/// A two-player zero-sum game in normal form, stored row-major.
///
/// Entry `(i, j)` is the payoff to X when X plays row `i` and Y plays
/// column `j`.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalFormGame {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl NormalFormGame {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::EmptyDimension { rows, cols });
        }
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch {
                expected: rows * cols,
                actual: data.len(),
            });
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("payoff matrix"));
        }
        Ok(NormalFormGame { rows, cols, data })
    }

    pub fn from_rows(rows: &[&[f64]]) -> Result<Self> {
        let cols = rows.first().map_or(0, |r| r.len());
        if let Some(bad) = rows.iter().find(|r| r.len() != cols) {
            return Err(Error::DimensionMismatch {
                expected: cols,
                actual: bad.len(),
            });
        }
        let data = rows.iter().flat_map(|r| r.iter().copied()).collect();
        NormalFormGame::new(rows.len(), cols, data)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn entry(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    /// The matrix multiplied by a positive constant.
    pub fn scaled(&self, c: f64) -> NormalFormGame {
        NormalFormGame {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|v| v * c).collect(),
        }
    }

    /// `A y`: the utility vector of player X.
    pub fn utility_x(&self, y: &[f64]) -> Vec<f64> {
        assert_eq!(y.len(), self.cols);
        (0..self.rows).map(|i| dot(self.row(i), y)).collect()
    }

    /// `-Aᵀ x`: the utility vector of player Y.
    pub fn utility_y(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.rows);
        let mut out = vec![0.0; self.cols];
        for (i, &xi) in x.iter().enumerate() {
            if xi == 0.0 {
                continue;
            }
            for (o, a) in out.iter_mut().zip(self.row(i)) {
                *o -= xi * a;
            }
        }
        out
    }

    /// `xᵀ A y`.
    pub fn value(&self, x: &[f64], y: &[f64]) -> f64 {
        dot(x, &self.utility_x(y))
    }

    fn check_profile(&self, x: &[f64], y: &[f64]) -> Result<()> {
        check_dim(self.rows, x.len())?;
        check_dim(self.cols, y.len())
    }
}

pub(crate) fn check_dim(expected: usize, actual: usize) -> Result<()> {
    if expected == actual {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, actual })
    }
}

/// The 3×3 game on which predictive regret matching⁺ lets its regret
/// norm shrink.
pub fn counterexample_game() -> NormalFormGame {
    NormalFormGame::from_rows(&[&[3.0, 0.0, -3.0], &[0.0, 3.0, -4.0], &[0.0, 0.0, 1.0]])
        .expect("static matrix is valid")
}

pub fn matching_pennies() -> NormalFormGame {
    NormalFormGame::from_rows(&[&[1.0, -1.0], &[-1.0, 1.0]]).expect("static matrix is valid")
}

/// An `m × n` game with entries drawn i.i.d. uniform on `[-1, 1)`.
///
/// The generator is ChaCha8 seeded through `seed_from_u64(seed)`. Each entry
/// consumes one `u64`; its top 53 bits give `u ∈ [0, 1)` and the entry is
/// `2u - 1`. Entries are generated row by row.
pub fn random_matrix_game(m: usize, n: usize, seed: u64) -> Result<NormalFormGame> {
    if m == 0 || n == 0 {
        return Err(Error::EmptyDimension { rows: m, cols: n });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let data = (0..m * n)
        .map(|_| {
            let u = (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64);
            2.0 * u - 1.0
        })
        .collect();
    NormalFormGame::new(m, n, data)
}

/// Best pure response against the opponent's mixed strategy.
///
/// For X this is the maximum of `A y`; for Y the minimum of `Aᵀ x`. Both
/// are reported as payoffs to X. Ties go to the lowest index within
/// [`TIE_TOL`] of the optimum.
pub fn best_response(game: &NormalFormGame, player: Player, opp: &[f64]) -> Result<(f64, usize)> {
    match player {
        Player::X => {
            check_dim(game.cols, opp.len())?;
            Ok(argmax_lowest(&game.utility_x(opp)))
        }
        Player::Y => {
            check_dim(game.rows, opp.len())?;
            let neg = game.utility_y(opp);
            let (v, i) = argmax_lowest(&neg);
            Ok((-v, i))
        }
    }
}

fn argmax_lowest(values: &[f64]) -> (f64, usize) {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let idx = values
        .iter()
        .position(|&v| v >= max - TIE_TOL)
        .expect("nonempty");
    (max, idx)
}

/// `max_{x*} ⟨x*, A y⟩ − min_{y*} ⟨y*, Aᵀ x⟩`, evaluated at simplex vertices.
pub fn duality_gap(game: &NormalFormGame, x: &[f64], y: &[f64]) -> Result<f64> {
    game.check_profile(x, y)?;
    let (br_x, _) = best_response(game, Player::X, y)?;
    let (br_y, _) = best_response(game, Player::Y, x)?;
    Ok(br_x - br_y)
}

/// External regret `max_{x*} Σ_t ⟨x* − x^t, u^t⟩` of a strategy stream.
pub fn regret_of_sequence<S: AsRef<[f64]>, U: AsRef<[f64]>>(
    strategies: &[S],
    utilities: &[U],
) -> Result<f64> {
    if strategies.is_empty() {
        return Err(Error::EmptySequence);
    }
    check_dim(strategies.len(), utilities.len())?;
    let n = strategies[0].as_ref().len();
    let mut acc = RegretAccumulator::new(n);
    for (x, u) in strategies.iter().zip(utilities) {
        check_dim(n, x.as_ref().len())?;
        check_dim(n, u.as_ref().len())?;
        acc.push(x.as_ref(), u.as_ref());
    }
    Ok(acc.regret())
}

/// Running per-vertex utility totals; the regret is exact at every step.
#[derive(Debug, Clone)]
pub struct RegretAccumulator {
    vertex_totals: Vec<f64>,
    realized: f64,
    rounds: usize,
}

impl RegretAccumulator {
    pub fn new(n: usize) -> Self {
        RegretAccumulator {
            vertex_totals: vec![0.0; n],
            realized: 0.0,
            rounds: 0,
        }
    }

    pub fn push(&mut self, strategy: &[f64], utility: &[f64]) {
        for (t, u) in self.vertex_totals.iter_mut().zip(utility) {
            *t += u;
        }
        self.realized += dot(strategy, utility);
        self.rounds += 1;
    }

    pub fn regret(&self) -> f64 {
        let best = self
            .vertex_totals
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max);
        best - self.realized
    }

    pub fn rounds(&self) -> usize {
        self.rounds
    }
}

/// Spectral norm of the payoff matrix, the Lipschitz constant of both
/// utility maps.
///
/// Computed as the largest singular value from a dense SVD. Power iteration
/// is cheaper but cannot certify its estimate when the top two singular
/// values are close, and the bound must never fall short of the norm.
pub fn lipschitz_bound(game: &NormalFormGame) -> f64 {
    if game.data.iter().all(|&v| v == 0.0) {
        return 0.0;
    }
    DMatrix::from_row_slice(game.rows, game.cols, &game.data)
        .singular_values()
        .max()
}

/// The constant bounding both the ℓ₂ diameter of a simplex and the largest
/// ℓ₂ norm of a point in it.
pub const SIMPLEX_DIAMETER: f64 = std::f64::consts::SQRT_2;

/// Arithmetic mean of all iterates.
pub fn uniform_average<S: AsRef<[f64]>>(traj: &[S]) -> Result<SimplexVector> {
    mean_of(traj)
}

/// Mean of the most recent `⌊T/2⌋` iterates (entries `⌈T/2⌉+1..=T`,
/// 1-indexed); a single iterate averages to itself.
pub fn last_half_average<S: AsRef<[f64]>>(traj: &[S]) -> Result<SimplexVector> {
    if traj.len() == 1 {
        return mean_of(traj);
    }
    mean_of(&traj[last_half_start(traj.len())..])
}

/// 0-based index of the first iterate in the last-half window of `t` iterates.
pub fn last_half_start(t: usize) -> usize {
    if t <= 1 {
        0
    } else {
        t.div_ceil(2)
    }
}

fn mean_of<S: AsRef<[f64]>>(traj: &[S]) -> Result<SimplexVector> {
    let first = traj.first().ok_or(Error::EmptySequence)?.as_ref();
    let mut acc = vec![0.0; first.len()];
    for s in traj {
        check_dim(acc.len(), s.as_ref().len())?;
        for (a, v) in acc.iter_mut().zip(s.as_ref()) {
            *a += v;
        }
    }
    let k = traj.len() as f64;
    acc.iter_mut().for_each(|a| *a /= k);
    SimplexVector::new(acc)
}

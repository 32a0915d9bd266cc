//! Density-operator evolution of the mixed game, where A and the
//! capital-conditioned B coin are applied with probability 1/2 each before
//! the conditional shift.
//!
//! The state `rho = sum_{x,y} rho_xy ⊗ |x><y|` is stored as a dense grid of
//! 2x2 coin blocks.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::classical::Strategy;
use crate::coin_walk::CoinWalkState;
use crate::error::{Error, Result};
use crate::math::{CMatrix, CoinSet, Mat2, C64, ONE};
use crate::series::{moments, CapitalSeries, DistributionSnapshot, TrajectoryPath};

/// Default horizon for exact density runs; longer runs use trajectories.
pub const DEFAULT_DENSITY_BUDGET: usize = 200;

/// Longest horizon accepted by [`enumerated_density`].
pub const MAX_ENUMERATED_STEPS: usize = 16;

#[derive(Clone, Debug)]
pub struct DensityState {
    blocks: Vec<Mat2>,
    half_width: i64,
    step: usize,
    lo: usize,
    hi: usize,
}

impl DensityState {
    pub fn zeros(half_width: usize) -> Self {
        let dim = 2 * half_width + 1;
        DensityState {
            blocks: vec![Mat2::ZERO; dim * dim],
            half_width: half_width as i64,
            step: 0,
            lo: half_width,
            hi: half_width,
        }
    }

    #[inline]
    fn dim(&self) -> usize {
        (2 * self.half_width + 1) as usize
    }

    #[inline]
    fn idx(&self, xs: usize, ys: usize) -> usize {
        xs * self.dim() + ys
    }

    #[inline]
    fn x_of(&self, s: usize) -> i64 {
        s as i64 - self.half_width
    }

    fn site(&self, x: i64) -> Option<usize> {
        let s = x + self.half_width;
        (0..self.dim() as i64).contains(&s).then_some(s as usize)
    }

    pub fn half_width(&self) -> i64 {
        self.half_width
    }

    pub fn step_count(&self) -> usize {
        self.step
    }

    /// Capital window that may hold nonzero blocks.
    pub fn support(&self) -> (i64, i64) {
        (self.x_of(self.lo), self.x_of(self.hi))
    }

    pub fn block(&self, x: i64, y: i64) -> Mat2 {
        match (self.site(x), self.site(y)) {
            (Some(xs), Some(ys)) => self.blocks[self.idx(xs, ys)],
            _ => Mat2::ZERO,
        }
    }

    /// Adds `weight |psi><psi|` for a pure coin-and-capital state.
    pub fn add_pure(&mut self, psi: &CoinWalkState, weight: f64) -> Result<()> {
        let amps: Vec<(i64, [C64; 2])> = psi.iter().collect();
        for &(x, a) in &amps {
            let xs = self.site(x).ok_or(Error::LatticeExhausted {
                lo: -self.half_width,
                hi: self.half_width,
            })?;
            self.lo = self.lo.min(xs);
            self.hi = self.hi.max(xs);
            for &(y, b) in &amps {
                let ys = self.site(y).expect("same range as x");
                let i = self.idx(xs, ys);
                let outer = Mat2::new(
                    a[0] * b[0].conj(),
                    a[0] * b[1].conj(),
                    a[1] * b[0].conj(),
                    a[1] * b[1].conj(),
                );
                self.blocks[i] = self.blocks[i] + outer.scale(C64::new(weight, 0.0));
            }
        }
        Ok(())
    }

    pub fn trace(&self) -> f64 {
        (self.lo..=self.hi)
            .map(|s| self.blocks[self.idx(s, s)].trace().re)
            .sum()
    }

    /// Largest entrywise deviation of `rho_yx` from `rho_xy^dagger`.
    pub fn hermiticity_error(&self) -> f64 {
        let mut worst = 0.0f64;
        for xs in self.lo..=self.hi {
            for ys in xs..=self.hi {
                let a = self.blocks[self.idx(xs, ys)];
                let b = self.blocks[self.idx(ys, xs)];
                worst = worst.max(b.max_abs_diff(&a.adjoint()));
            }
        }
        worst
    }

    pub fn position_distribution(&self) -> Vec<(i64, f64)> {
        (self.lo..=self.hi)
            .map(|s| (self.x_of(s), self.blocks[self.idx(s, s)].trace().re))
            .collect()
    }

    pub fn expected_capital(&self) -> f64 {
        moments(&self.position_distribution()).0
    }

    pub fn second_moment(&self) -> f64 {
        moments(&self.position_distribution()).1
    }

    /// Largest entrywise difference over all blocks, matched by capital so
    /// the two lattices may differ in size.
    pub fn max_abs_diff(&self, other: &DensityState) -> f64 {
        let (a, b) = (self.support(), other.support());
        let (lo, hi) = (a.0.min(b.0), a.1.max(b.1));
        let mut worst = 0.0f64;
        for x in lo..=hi {
            for y in lo..=hi {
                worst = worst.max(self.block(x, y).max_abs_diff(&other.block(x, y)));
            }
        }
        worst
    }

    /// The state as a `2(2L+1)`-dimensional matrix, index `2 * site + c`.
    pub fn to_matrix(&self) -> CMatrix {
        let dim = self.dim();
        let mut m = CMatrix::zeros(2 * dim);
        for xs in 0..dim {
            for ys in 0..dim {
                let b = self.blocks[self.idx(xs, ys)];
                for r in 0..2 {
                    for c in 0..2 {
                        m.set(2 * xs + r, 2 * ys + c, b.get(r, c));
                    }
                }
            }
        }
        m
    }

    fn map_blocks<F: Fn(i64, i64, Mat2) -> Mat2>(&self, f: F) -> Self {
        let mut out = self.clone();
        for xs in self.lo..=self.hi {
            for ys in self.lo..=self.hi {
                let i = self.idx(xs, ys);
                out.blocks[i] = f(self.x_of(xs), self.x_of(ys), self.blocks[i]);
            }
        }
        out
    }

    /// Every block conjugated by the NOT gate: `(X ⊗ 1) rho (X ⊗ 1)^dagger`.
    pub fn swap_conjugate(&self) -> Self {
        let x = *crate::math::not_gate().matrix();
        self.map_blocks(|_, _, b| x * b * x)
    }

    /// `(X ⊗ Y) rho (X ⊗ Y)^dagger` with `Y|x> = |-x>`.
    pub fn mirror_conjugate(&self) -> Self {
        let x = *crate::math::not_gate().matrix();
        let mut out = DensityState {
            blocks: vec![Mat2::ZERO; self.blocks.len()],
            ..self.clone()
        };
        let last = self.dim() - 1;
        for xs in self.lo..=self.hi {
            for ys in self.lo..=self.hi {
                let b = self.blocks[self.idx(xs, ys)];
                let i = out.idx(last - xs, last - ys);
                out.blocks[i] = x * b * x;
            }
        }
        out.lo = last - self.hi;
        out.hi = last - self.lo;
        out
    }

    /// One application of the CP map: the equal mixture of `A` and the
    /// block-diagonal B coin, then `S rho S^dagger`.
    pub fn step(&mut self, coins: &CoinSet) -> Result<()> {
        let a = *coins.a.matrix();
        let a_dag = a.adjoint();
        let half = C64::new(0.5, 0.0);
        for xs in self.lo..=self.hi {
            let bx = *coins.b_for(self.x_of(xs)).matrix();
            for ys in self.lo..=self.hi {
                let by_dag = coins.b_for(self.x_of(ys)).matrix().adjoint();
                let i = self.idx(xs, ys);
                let r = self.blocks[i];
                self.blocks[i] = (a * r * a_dag + bx * r * by_dag).scale(half);
            }
        }
        self.shift()?;
        self.step += 1;
        Ok(())
    }

    /// Entry `(j, k)` of block `(x, y)` moves to `(x + s_j, y + s_k)`,
    /// `s_0 = -1`, `s_1 = +1`.
    fn shift(&mut self) -> Result<()> {
        let last = self.dim() - 1;
        if self.lo == 0 || self.hi == last {
            for xs in self.lo..=self.hi {
                for ys in self.lo..=self.hi {
                    let b = self.blocks[self.idx(xs, ys)];
                    for j in 0..2 {
                        for k in 0..2 {
                            let out_x = (xs == 0 && j == 0) || (xs == last && j == 1);
                            let out_y = (ys == 0 && k == 0) || (ys == last && k == 1);
                            if (out_x || out_y) && b.get(j, k) != C64::new(0.0, 0.0) {
                                return Err(Error::LatticeExhausted {
                                    lo: -self.half_width,
                                    hi: self.half_width,
                                });
                            }
                        }
                    }
                }
            }
        }
        let new_lo = self.lo.saturating_sub(1);
        let new_hi = (self.hi + 1).min(last);
        let mut next = vec![Mat2::ZERO; self.blocks.len()];
        let (lo, hi) = (self.lo as i64, self.hi as i64);
        let src = |s: usize, j: usize| s as i64 - (2 * j as i64 - 1);
        for xs in new_lo..=new_hi {
            for ys in new_lo..=new_hi {
                let mut b = Mat2::ZERO;
                for j in 0..2 {
                    let sx = src(xs, j);
                    if sx < lo || sx > hi {
                        continue;
                    }
                    for k in 0..2 {
                        let sy = src(ys, k);
                        if sy < lo || sy > hi {
                            continue;
                        }
                        b.0[j][k] = self.blocks[self.idx(sx as usize, sy as usize)].get(j, k);
                    }
                }
                next[self.idx(xs, ys)] = b;
            }
        }
        self.blocks = next;
        self.lo = new_lo;
        self.hi = new_hi;
        Ok(())
    }
}

/// `|c><c| ⊗ |x0><x0|` on a lattice sized for `steps_budget` steps.
pub fn init_density(c: usize, initial_capital: i64, steps_budget: usize) -> DensityState {
    assert!(c < 2, "coin value is a bit");
    let mut st = DensityState::zeros(initial_capital.unsigned_abs() as usize + steps_budget);
    let s = st.site(initial_capital).unwrap();
    let i = st.idx(s, s);
    st.blocks[i].0[c][c] = ONE;
    st.lo = s;
    st.hi = s;
    st
}

pub fn step_density(rho: &DensityState, coins: &CoinSet) -> Result<DensityState> {
    let mut next = rho.clone();
    next.step(coins)?;
    Ok(next)
}

pub fn expected_capital_density(rho: &DensityState) -> f64 {
    rho.expected_capital()
}

pub fn second_moment_density(rho: &DensityState) -> f64 {
    rho.second_moment()
}

pub fn swap_conjugate(rho: &DensityState) -> DensityState {
    rho.swap_conjugate()
}

/// Exact capital series of the mixed game from `|c><c| ⊗ |0><0|`.
pub fn run_density(coins: &CoinSet, c: usize, steps: usize) -> Result<CapitalSeries> {
    Ok(run_density_with_distributions(coins, c, steps, false)?.0)
}

pub fn run_density_with_distributions(
    coins: &CoinSet,
    c: usize,
    steps: usize,
    keep_distributions: bool,
) -> Result<(CapitalSeries, Vec<DistributionSnapshot>)> {
    let mut rho = init_density(c, 0, steps);
    let mut series = CapitalSeries::with_capacity(steps + 1);
    let mut snaps = Vec::new();
    for n in 0..=steps {
        if n > 0 {
            rho.step(coins)?;
        }
        let dist = rho.position_distribution();
        let (m1, m2) = moments(&dist);
        series.push(n, m1, m2);
        if keep_distributions {
            snaps.push(DistributionSnapshot { n, probs: dist });
        }
    }
    Ok((series, snaps))
}

/// Average of `|psi><psi|` over all `2^steps` equally likely strategy
/// sequences, each applied as a unitary trajectory.
pub fn enumerated_density(coins: &CoinSet, c: usize, steps: usize) -> Result<DensityState> {
    if steps > MAX_ENUMERATED_STEPS {
        return Err(Error::Domain(format!(
            "enumeration limited to {MAX_ENUMERATED_STEPS} steps, got {steps}"
        )));
    }
    fn walk(
        coins: &CoinSet,
        psi: CoinWalkState,
        remaining: usize,
        weight: f64,
        acc: &mut DensityState,
    ) -> Result<()> {
        if remaining == 0 {
            return acc.add_pure(&psi, weight);
        }
        for s in [Strategy::A, Strategy::B] {
            let mut next = psi.clone();
            next.step(coins, s)?;
            walk(coins, next, remaining - 1, weight / 2.0, acc)?;
        }
        Ok(())
    }
    let mut acc = DensityState::zeros(steps);
    walk(
        coins,
        CoinWalkState::basis(c, 0, steps),
        steps,
        1.0,
        &mut acc,
    )?;
    acc.step = steps;
    Ok(acc)
}

/// One random-unitary trajectory: each step applies A or the capital-
/// conditioned B with probability 1/2, then the coherent shift. Records the
/// conditional `<x>` and `<x^2>` at every step.
pub fn sample_unitary_trajectory(
    coins: &CoinSet,
    c: usize,
    steps: usize,
    rng_seed: u64,
) -> Result<TrajectoryPath> {
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let mut psi = CoinWalkState::basis(c, 0, steps);
    let mut path = TrajectoryPath {
        capital: vec![0.0],
        second_moment: vec![0.0],
    };
    for _ in 0..steps {
        let s = if rng.random_bool(0.5) {
            Strategy::A
        } else {
            Strategy::B
        };
        let (m1, m2) = psi.step_moments(coins, s)?;
        path.capital.push(m1);
        path.second_moment.push(m2);
    }
    Ok(path)
}

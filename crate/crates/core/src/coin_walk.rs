//! Pure states on `C ⊗ X`: the coin-and-capital part of the game once the
//! strategy register is gone or has been measured.
//!
//! The two coin components live in separate buffers addressed through
//! moving offsets, so the conditional shift is O(1).

use crate::classical::Strategy;
use crate::error::{Error, Result};
use crate::math::{CoinSet, Unitary2, C64, ZERO};

/// Site weight treated as exactly zero at the edges of the support.
pub const NEGLIGIBLE: f64 = 1e-200;

#[derive(Clone, Debug)]
pub struct CoinWalkState {
    c0: Vec<C64>,
    c1: Vec<C64>,
    /// Storage index of capital `x` is `x + base0` / `x + base1`.
    base0: i64,
    base1: i64,
    half_width: i64,
    /// Initial capital; amplitudes vanish off the parity of `origin + step`.
    origin: i64,
    step: usize,
    lo: i64,
    hi: i64,
}

impl PartialEq for CoinWalkState {
    fn eq(&self, other: &Self) -> bool {
        self.half_width == other.half_width
            && self.step == other.step
            && self.lo == other.lo
            && self.hi == other.hi
            && self.iter().eq(other.iter())
    }
}

impl CoinWalkState {
    /// `|c>|x0>` on a lattice sized for `steps_budget` steps.
    pub fn basis(c: usize, initial_capital: i64, steps_budget: usize) -> Self {
        assert!(c < 2, "coin value is a bit");
        let hw = (initial_capital.unsigned_abs() as usize + steps_budget) as i64;
        let len = (4 * hw + 1) as usize;
        let mut st = CoinWalkState {
            c0: vec![ZERO; len],
            c1: vec![ZERO; len],
            base0: hw,
            base1: 3 * hw,
            half_width: hw,
            origin: initial_capital,
            step: 0,
            lo: initial_capital,
            hi: initial_capital,
        };
        let one = C64::new(1.0, 0.0);
        if c == 0 {
            st.c0[(initial_capital + st.base0) as usize] = one;
        } else {
            st.c1[(initial_capital + st.base1) as usize] = one;
        }
        st
    }

    pub fn half_width(&self) -> i64 {
        self.half_width
    }

    pub fn step_count(&self) -> usize {
        self.step
    }

    fn window(
        &self,
    ) -> (
        std::ops::RangeInclusive<usize>,
        std::ops::RangeInclusive<usize>,
    ) {
        (
            (self.lo + self.base0) as usize..=(self.hi + self.base0) as usize,
            (self.lo + self.base1) as usize..=(self.hi + self.base1) as usize,
        )
    }

    pub fn amplitude(&self, c: usize, x: i64) -> C64 {
        if x < self.lo || x > self.hi {
            return ZERO;
        }
        match c {
            0 => self.c0[(x + self.base0) as usize],
            _ => self.c1[(x + self.base1) as usize],
        }
    }

    /// `(x, [amp_c0, amp_c1])` over the support window.
    pub fn iter(&self) -> impl Iterator<Item = (i64, [C64; 2])> + '_ {
        let (w0, w1) = self.window();
        (self.lo..=self.hi)
            .zip(self.c0[w0].iter().zip(&self.c1[w1]))
            .map(|(x, (a, b))| (x, [*a, *b]))
    }

    pub fn norm_sqr(&self) -> f64 {
        self.iter()
            .map(|(_, a)| a[0].norm_sqr() + a[1].norm_sqr())
            .sum()
    }

    pub fn position_distribution(&self) -> Vec<(i64, f64)> {
        self.iter()
            .map(|(x, a)| (x, a[0].norm_sqr() + a[1].norm_sqr()))
            .collect()
    }

    pub fn expected_capital(&self) -> f64 {
        self.iter()
            .map(|(x, a)| x as f64 * (a[0].norm_sqr() + a[1].norm_sqr()))
            .sum()
    }

    pub fn second_moment(&self) -> f64 {
        self.iter()
            .map(|(x, a)| (x * x) as f64 * (a[0].norm_sqr() + a[1].norm_sqr()))
            .sum()
    }

    /// Applies `A` everywhere, or the capital-conditioned `B0`/`B1`.
    pub fn apply_coin(&mut self, coins: &CoinSet, strategy: Strategy) {
        self.coin_pass(coins, strategy);
    }

    /// Coin pass that also returns the first two capital moments the state
    /// will have once shifted.
    fn coin_pass(&mut self, coins: &CoinSet, strategy: Strategy) -> (f64, f64) {
        let (w0, w1) = self.window();
        let gates: [&Unitary2; 3] = match strategy {
            Strategy::A => [&coins.a; 3],
            Strategy::B => [&coins.b0, &coins.b1, &coins.b1],
        };
        // Only every other site can be occupied.
        let skip = (self.lo - self.origin - self.step as i64).rem_euclid(2);
        let first = self.lo + skip;
        let mut residue = first.rem_euclid(3) as usize;
        let (mut m1, mut m2) = (0.0, 0.0);
        let mut x = first as f64;
        let sites = self.c0[w0]
            .iter_mut()
            .zip(&mut self.c1[w1])
            .skip(skip as usize)
            .step_by(2);
        for (a0, a1) in sites {
            let [n0, n1] = gates[residue].apply([*a0, *a1]);
            *a0 = n0;
            *a1 = n1;
            let (p0, p1) = (n0.norm_sqr(), n1.norm_sqr());
            let (l, r) = (x - 1.0, x + 1.0);
            m1 += l * p0 + r * p1;
            m2 += l * l * p0 + r * r * p1;
            x += 2.0;
            residue = (residue + 2) % 3;
        }
        (m1, m2)
    }

    /// Zeroes and drops edge sites whose weight is below [`NEGLIGIBLE`].
    /// Far tails otherwise decay into subnormal floats, which are slow.
    fn trim(&mut self) {
        let tiny = |st: &Self, x: i64| {
            st.amplitude(0, x).norm_sqr() + st.amplitude(1, x).norm_sqr() < NEGLIGIBLE
        };
        while self.lo < self.hi && tiny(self, self.lo) {
            self.c0[(self.lo + self.base0) as usize] = ZERO;
            self.c1[(self.lo + self.base1) as usize] = ZERO;
            self.lo += 1;
        }
        while self.hi > self.lo && tiny(self, self.hi) {
            self.c0[(self.hi + self.base0) as usize] = ZERO;
            self.c1[(self.hi + self.base1) as usize] = ZERO;
            self.hi -= 1;
        }
    }

    /// Coherent conditional shift `|0><0| ⊗ T0 + |1><1| ⊗ T1`.
    pub fn shift(&mut self) -> Result<()> {
        let hw = self.half_width;
        if (self.lo == -hw && self.amplitude(0, -hw) != ZERO)
            || (self.hi == hw && self.amplitude(1, hw) != ZERO)
        {
            return Err(Error::LatticeExhausted { lo: -hw, hi: hw });
        }
        let (lo, hi) = ((self.lo - 1).max(-hw), (self.hi + 1).min(hw));
        if hi + self.base0 + 1 >= self.c0.len() as i64 || lo + self.base1 - 1 < 0 {
            self.recenter();
        }
        // Entries that slide into the window were never written, so they
        // are already zero.
        self.base0 += 1;
        self.base1 -= 1;
        self.lo = lo;
        self.hi = hi;
        self.step += 1;
        Ok(())
    }

    fn recenter(&mut self) {
        let hw = self.half_width;
        let len = self.c0.len();
        let (w0, w1) = self.window();
        let (mut c0, mut c1) = (vec![ZERO; len], vec![ZERO; len]);
        let (s0, s1) = ((self.lo + hw) as usize, (self.lo + 3 * hw) as usize);
        let n = w0.clone().count();
        c0[s0..s0 + n].copy_from_slice(&self.c0[w0]);
        c1[s1..s1 + n].copy_from_slice(&self.c1[w1]);
        self.c0 = c0;
        self.c1 = c1;
        self.base0 = hw;
        self.base1 = 3 * hw;
    }

    /// Coin followed by shift.
    pub fn step(&mut self, coins: &CoinSet, strategy: Strategy) -> Result<()> {
        self.step_moments(coins, strategy).map(|_| ())
    }

    /// Coin followed by shift, returning `(<x>, <x^2>)` afterwards.
    pub fn step_moments(&mut self, coins: &CoinSet, strategy: Strategy) -> Result<(f64, f64)> {
        let m = self.coin_pass(coins, strategy);
        self.trim();
        self.shift()?;
        Ok(m)
    }
}

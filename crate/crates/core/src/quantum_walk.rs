//! State-vector simulation of the four-register quantum capital game.
//!
//! Registers: `D` (strategy selector), `C` (game coin / chirality), `X`
//! (capital lattice) and `O` (mod-3 flag). One step is
//! `E = MOD_inv · S · W · MOD`, applied right to left.

use crate::error::{Error, Result};
use crate::math::{CMatrix, CoinSet, Mat2, C64, ZERO};
use crate::series::{moments, CapitalSeries, DistributionSnapshot};

/// Amplitudes per lattice site: `d * 4 + c * 2 + o`.
pub const SITE_DIM: usize = 8;

#[inline]
pub fn site_index(d: usize, c: usize, o: usize) -> usize {
    d * 4 + c * 2 + o
}

/// The strategy-and-coin unitary `W` on `D ⊗ C ⊗ O`, assembled term by term:
///
/// `W = |0><1|U ⊗ [B0 ⊗ |1><0| + B1 ⊗ |0><1|] + |1><0|U ⊗ A ⊗ X`.
#[derive(Clone, Debug)]
pub struct StepOperators {
    coins: CoinSet,
    w: CMatrix,
}

impl StepOperators {
    pub fn new(coins: &CoinSet) -> Self {
        let m = |g: &Mat2| CMatrix::from_mat2(g);
        let u = *coins.u.matrix();
        let to_b = m(&(Mat2::ket_bra(0, 1) * u));
        let to_a = m(&(Mat2::ket_bra(1, 0) * u));
        let flag_set = m(&Mat2::ket_bra(1, 0));
        let flag_clear = m(&Mat2::ket_bra(0, 1));
        let flip = m(crate::math::not_gate().matrix());

        let w = to_b
            .kron(&m(coins.b0.matrix()).kron(&flag_set))
            .add(&to_b.kron(&m(coins.b1.matrix()).kron(&flag_clear)))
            .add(&to_a.kron(&m(coins.a.matrix()).kron(&flip)));
        StepOperators { coins: *coins, w }
    }

    pub fn coins(&self) -> &CoinSet {
        &self.coins
    }

    /// `W` as an 8x8 matrix in the `d * 4 + c * 2 + o` basis.
    pub fn w(&self) -> &CMatrix {
        &self.w
    }
}

/// Pure state of the four registers on the lattice `[-L, L]`.
#[derive(Clone, Debug, PartialEq)]
pub struct PureState {
    amps: Vec<C64>,
    half_width: i64,
    initial_capital: i64,
    step: usize,
    // Inclusive site-index bounds outside which every amplitude is zero.
    lo: usize,
    hi: usize,
}

impl PureState {
    /// All-zero state on `[-half_width, half_width]`.
    pub fn zeros(half_width: usize) -> Self {
        let sites = 2 * half_width + 1;
        PureState {
            amps: vec![ZERO; sites * SITE_DIM],
            half_width: half_width as i64,
            initial_capital: 0,
            step: 0,
            lo: half_width,
            hi: half_width,
        }
    }

    pub fn half_width(&self) -> i64 {
        self.half_width
    }

    pub fn step_count(&self) -> usize {
        self.step
    }

    pub fn initial_capital(&self) -> i64 {
        self.initial_capital
    }

    fn site(&self, x: i64) -> Option<usize> {
        let i = x + self.half_width;
        (0..=2 * self.half_width).contains(&i).then_some(i as usize)
    }

    #[inline]
    fn x_of(&self, site: usize) -> i64 {
        site as i64 - self.half_width
    }

    pub fn amplitude(&self, d: usize, c: usize, o: usize, x: i64) -> C64 {
        self.site(x)
            .map_or(ZERO, |s| self.amps[s * SITE_DIM + site_index(d, c, o)])
    }

    pub fn set_amplitude(
        &mut self,
        d: usize,
        c: usize,
        o: usize,
        x: i64,
        value: C64,
    ) -> Result<()> {
        let s = self.site(x).ok_or(Error::LatticeExhausted {
            lo: -self.half_width,
            hi: self.half_width,
        })?;
        self.amps[s * SITE_DIM + site_index(d, c, o)] = value;
        self.lo = self.lo.min(s);
        self.hi = self.hi.max(s);
        Ok(())
    }

    /// The eight amplitudes at site `x`.
    pub fn site_amplitudes(&self, x: i64) -> [C64; SITE_DIM] {
        let mut out = [ZERO; SITE_DIM];
        if let Some(s) = self.site(x) {
            out.copy_from_slice(&self.amps[s * SITE_DIM..(s + 1) * SITE_DIM]);
        }
        out
    }

    /// Capital range that may hold nonzero amplitude.
    pub fn support(&self) -> (i64, i64) {
        (self.x_of(self.lo), self.x_of(self.hi))
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    /// Total weight on `o = 1`.
    pub fn flag_weight(&self) -> f64 {
        self.amps
            .chunks_exact(SITE_DIM)
            .flat_map(|s| (0..4).map(move |dc| s[2 * dc + 1].norm_sqr()))
            .sum()
    }

    pub fn prob_at(&self, x: i64) -> f64 {
        self.site_amplitudes(x).iter().map(|a| a.norm_sqr()).sum()
    }

    /// Diagonal of the reduced capital density `<x|rho_X|x>` over the support.
    pub fn position_distribution(&self) -> Vec<(i64, f64)> {
        (self.lo..=self.hi)
            .map(|s| {
                let p = self.amps[s * SITE_DIM..(s + 1) * SITE_DIM]
                    .iter()
                    .map(|a| a.norm_sqr())
                    .sum();
                (self.x_of(s), p)
            })
            .collect()
    }

    /// Apply `MOD`: flip `o` unless 3 divides `x`.
    pub fn apply_mod(&mut self) {
        for s in self.lo..=self.hi {
            if self.x_of(s).rem_euclid(3) != 0 {
                let site = &mut self.amps[s * SITE_DIM..(s + 1) * SITE_DIM];
                for dc in 0..4 {
                    site.swap(2 * dc, 2 * dc + 1);
                }
            }
        }
    }

    pub fn apply_w(&mut self, ops: &StepOperators) {
        let mut buf = [ZERO; SITE_DIM];
        for s in self.lo..=self.hi {
            let site = &mut self.amps[s * SITE_DIM..(s + 1) * SITE_DIM];
            ops.w.apply_into(site, &mut buf);
            site.copy_from_slice(&buf);
        }
    }

    /// Conditional shift: `c = 0` moves to `x - 1`, `c = 1` to `x + 1`.
    pub fn apply_shift(&mut self) -> Result<()> {
        let last = self.amps.len() / SITE_DIM - 1;
        let exhausted = Error::LatticeExhausted {
            lo: -self.half_width,
            hi: self.half_width,
        };
        let moving = |site: usize, c: usize, amps: &[C64]| {
            (0..2)
                .flat_map(|d| (0..2).map(move |o| (d, o)))
                .any(|(d, o)| amps[site * SITE_DIM + site_index(d, c, o)] != ZERO)
        };
        if (self.lo == 0 && moving(0, 0, &self.amps))
            || (self.hi == last && moving(last, 1, &self.amps))
        {
            return Err(exhausted);
        }
        let new_lo = self.lo.saturating_sub(1);
        let new_hi = (self.hi + 1).min(last);
        // Left movers ascending, right movers descending, so every source is
        // read before it is overwritten.
        for s in new_lo..=self.hi {
            for k in [0, 1, 4, 5] {
                self.amps[s * SITE_DIM + k] = if s < self.hi {
                    self.amps[(s + 1) * SITE_DIM + k]
                } else {
                    ZERO
                };
            }
        }
        for s in (self.lo + 1..=new_hi).rev() {
            for k in [2, 3, 6, 7] {
                self.amps[s * SITE_DIM + k] = self.amps[(s - 1) * SITE_DIM + k];
            }
        }
        for k in [2, 3, 6, 7] {
            self.amps[self.lo * SITE_DIM + k] = ZERO;
        }
        self.lo = new_lo;
        self.hi = new_hi;
        Ok(())
    }

    /// Apply `MOD_inv`: flip `o` iff the pre-shift capital `x - (2c - 1)` is
    /// divisible by 3.
    pub fn apply_mod_inv(&mut self) {
        for s in self.lo..=self.hi {
            let x = self.x_of(s);
            let site = &mut self.amps[s * SITE_DIM..(s + 1) * SITE_DIM];
            for c in 0..2 {
                if (x - (2 * c as i64 - 1)).rem_euclid(3) == 0 {
                    for d in 0..2 {
                        site.swap(site_index(d, c, 0), site_index(d, c, 1));
                    }
                }
            }
        }
    }

    /// One full step `E`.
    pub fn step(&mut self, ops: &StepOperators) -> Result<()> {
        self.apply_mod();
        self.apply_w(ops);
        self.apply_shift()?;
        self.apply_mod_inv();
        self.step += 1;
        Ok(())
    }

    pub fn expected_capital(&self) -> f64 {
        moments(&self.position_distribution()).0
    }

    /// `sum_x x^2 <x|rho_X|x>` (a raw second moment, not a central variance).
    pub fn second_moment(&self) -> f64 {
        moments(&self.position_distribution()).1
    }
}

/// Basis state `|d>|c>|x0>|o=0>` on a lattice wide enough for `steps_budget`
/// steps.
pub fn init_state(d: usize, c: usize, initial_capital: i64, steps_budget: usize) -> PureState {
    assert!(d < 2 && c < 2, "register values are bits");
    let mut st = PureState::zeros(initial_capital.unsigned_abs() as usize + steps_budget);
    st.initial_capital = initial_capital;
    let s = st.site(initial_capital).unwrap();
    st.lo = s;
    st.hi = s;
    st.amps[s * SITE_DIM + site_index(d, c, 0)] = C64::new(1.0, 0.0);
    st
}

/// Runs `steps` steps from `|d>|c>|0>|0>`, calling `observe` after each step
/// (and once for the initial state).
pub fn run_observed<F: FnMut(&PureState)>(
    coins: &CoinSet,
    d: usize,
    c: usize,
    steps: usize,
    mut observe: F,
) -> Result<()> {
    let ops = StepOperators::new(coins);
    let mut st = init_state(d, c, 0, steps);
    observe(&st);
    for _ in 0..steps {
        st.step(&ops)?;
        observe(&st);
    }
    Ok(())
}

pub fn run(coins: &CoinSet, d: usize, c: usize, steps: usize) -> Result<CapitalSeries> {
    let mut series = CapitalSeries::with_capacity(steps + 1);
    run_observed(coins, d, c, steps, |st| {
        let (mean, m2) = moments(&st.position_distribution());
        series.push(st.step_count(), mean, m2);
    })?;
    Ok(series)
}

/// Capital series together with the position distribution at every step.
pub fn run_with_distributions(
    coins: &CoinSet,
    d: usize,
    c: usize,
    steps: usize,
) -> Result<(CapitalSeries, Vec<DistributionSnapshot>)> {
    let mut series = CapitalSeries::with_capacity(steps + 1);
    let mut snaps = Vec::with_capacity(steps + 1);
    run_observed(coins, d, c, steps, |st| {
        let probs = st.position_distribution();
        let (mean, m2) = moments(&probs);
        series.push(st.step_count(), mean, m2);
        snaps.push(DistributionSnapshot {
            n: st.step_count(),
            probs,
        });
    })?;
    Ok((series, snaps))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::{default_coins, EXACT_TOL, I, ONE};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn eps() -> f64 {
        0.01
    }

    fn random_state(rng: &mut ChaCha8Rng, half_width: usize) -> PureState {
        let mut st = PureState::zeros(half_width);
        let hw = half_width as i64;
        for x in -hw + 1..hw {
            for k in 0..SITE_DIM {
                let v = C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5);
                st.set_amplitude(k / 4, (k / 2) % 2, k % 2, x, v).unwrap();
            }
        }
        let n = st.norm_sqr().sqrt();
        st.amps.iter_mut().for_each(|a| *a /= n);
        st
    }

    #[test]
    fn init_state_layout() {
        let st = init_state(0, 0, 0, 10);
        assert!((st.norm_sqr() - 1.0).abs() < EXACT_TOL);
        assert_eq!(st.amplitude(0, 0, 0, 0), ONE);
        assert_eq!(init_state(1, 1, 0, 0).expected_capital(), 0.0);
        let st = init_state(0, 0, 5, 3);
        assert_eq!(st.half_width(), 8);
        assert_eq!(st.prob_at(5), 1.0);
        assert_eq!(st.expected_capital(), 5.0);
    }

    #[test]
    fn mod_gate_branches() {
        for (x, flips) in [(6, false), (7, true), (-3, false), (-1, true), (0, false)] {
            let mut st = PureState::zeros(10);
            st.set_amplitude(0, 0, 0, x, ONE).unwrap();
            st.apply_mod();
            assert_eq!(st.amplitude(0, 0, usize::from(flips), x), ONE, "x = {x}");
        }
    }

    #[test]
    fn w_single_branch_trace() {
        let coins = default_coins(eps()).unwrap();
        let ops = StepOperators::new(&coins);
        let mut st = PureState::zeros(2);
        st.set_amplitude(0, 0, 0, 0, ONE).unwrap();
        st.apply_w(&ops);
        let expected = I * eps().cos() / 2f64.sqrt();
        assert!((st.amplitude(1, 1, 1, 0) - expected).norm() < EXACT_TOL);
        assert!((st.amplitude(1, 0, 1, 0) - eps().sin() / 2f64.sqrt()).norm() < EXACT_TOL);
    }

    #[test]
    fn w_projector_structure_with_identity_mixer() {
        let mut coins = default_coins(eps()).unwrap();
        coins.u = crate::math::Unitary2::identity();
        let ops = StepOperators::new(&coins);
        // d = 1 reaches only the B branch, which sets the flag from o = 0.
        let mut st = PureState::zeros(1);
        st.set_amplitude(1, 0, 0, 0, ONE).unwrap();
        st.apply_w(&ops);
        let b0 = coins.b0.apply([ONE, ZERO]);
        for (c, want) in b0.into_iter().enumerate() {
            assert!((st.amplitude(0, c, 1, 0) - want).norm() < EXACT_TOL);
            assert_eq!(st.amplitude(0, c, 0, 0), ZERO);
            assert_eq!(st.amplitude(1, c, 0, 0), ZERO);
            assert_eq!(st.amplitude(1, c, 1, 0), ZERO);
        }
        // d = 0 reaches only the A branch.
        let mut st = PureState::zeros(1);
        st.set_amplitude(0, 0, 0, 0, ONE).unwrap();
        st.apply_w(&ops);
        assert!(st.flag_weight() > 0.99);
        assert!((0..2).all(|c| st.amplitude(0, c, 1, 0) == ZERO));
    }

    #[test]
    fn w_is_unitary() {
        let ops = StepOperators::new(&default_coins(eps()).unwrap());
        assert!(ops.w().unitarity_error() < EXACT_TOL);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..100 {
            let mut st = random_state(&mut rng, 4);
            st.apply_w(&ops);
            assert!((st.norm_sqr() - 1.0).abs() < EXACT_TOL);
        }
    }

    #[test]
    fn shift_moves_by_chirality() {
        let mut st = PureState::zeros(8);
        st.set_amplitude(0, 0, 0, 5, ONE).unwrap();
        st.set_amplitude(1, 1, 0, -1, ONE).unwrap();
        st.apply_shift().unwrap();
        assert_eq!(st.amplitude(0, 0, 0, 4), ONE);
        assert_eq!(st.amplitude(1, 1, 0, 0), ONE);
        assert_eq!(st.amplitude(0, 0, 0, 5), ZERO);
        assert_eq!(st.amplitude(1, 1, 0, -1), ZERO);
        assert!((st.norm_sqr() - 2.0).abs() < 1e-15);
    }

    #[test]
    fn shift_reports_exhaustion() {
        let mut st = PureState::zeros(2);
        st.set_amplitude(0, 1, 0, 2, ONE).unwrap();
        assert!(matches!(
            st.apply_shift(),
            Err(Error::LatticeExhausted { .. })
        ));
        let mut st = PureState::zeros(2);
        st.set_amplitude(0, 1, 0, -2, ONE).unwrap();
        st.apply_shift().unwrap();
        assert_eq!(st.amplitude(0, 1, 0, -1), ONE);
    }

    #[test]
    fn random_shift_preserves_norm() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut st = random_state(&mut rng, 6);
        st.apply_shift().unwrap();
        assert!((st.norm_sqr() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn mod_inv_cases() {
        let cases = [((1, 1, 1), 0), ((0, -1, 1), 0), ((1, 2, 0), 0)];
        for ((c, x, o), want) in cases {
            let mut st = PureState::zeros(4);
            st.set_amplitude(0, c, o, x, ONE).unwrap();
            st.apply_mod_inv();
            assert_eq!(st.amplitude(0, c, want, x), ONE, "c={c} x={x} o={o}");
        }
    }

    #[test]
    fn one_step_capital_matches_hand_trace() {
        let coins = default_coins(eps()).unwrap();
        let s = run(&coins, 0, 0, 1).unwrap();
        let expected =
            0.5 * ((2.0 * eps()).cos() - (std::f64::consts::PI / 5.0 - 2.0 * eps()).cos());
        assert!((s.capital_at(1).unwrap() - expected).abs() < EXACT_TOL);
        assert!((expected - 0.0896).abs() < 1e-4);
        assert!((s.rows()[1].second_moment - 1.0).abs() < EXACT_TOL);
        assert_eq!(s.capital_at(0), Some(0.0));
    }

    #[test]
    fn one_step_support_and_flag_reset() {
        let coins = default_coins(eps()).unwrap();
        let ops = StepOperators::new(&coins);
        for x0 in [-4, 0, 3, 5] {
            for k in 0..4 {
                let mut st = init_state(k / 2, k % 2, x0, 1);
                st.step(&ops).unwrap();
                assert!(st.flag_weight() < EXACT_TOL);
                for (x, p) in st.position_distribution() {
                    if p > 0.0 {
                        assert!(x == x0 - 1 || x == x0 + 1);
                    }
                }
            }
        }
    }

    #[test]
    fn light_cone_parity_and_mirror() {
        let coins = default_coins(eps()).unwrap();
        let ops = StepOperators::new(&coins);
        for d in 0..2 {
            let mut left = init_state(d, 0, 0, 60);
            let mut right = init_state(d, 1, 0, 60);
            for n in 1..=60i64 {
                left.step(&ops).unwrap();
                right.step(&ops).unwrap();
                for x in -60..=60i64 {
                    let p = left.prob_at(x);
                    if x.abs() > n || (x - n).rem_euclid(2) != 0 {
                        assert_eq!(p, 0.0);
                    }
                    assert!((p - right.prob_at(-x)).abs() < 1e-10);
                }
                assert!(left.second_moment() >= left.expected_capital().powi(2));
            }
        }
    }

    #[test]
    fn distribution_snapshots_align_with_series() {
        let coins = default_coins(eps()).unwrap();
        let (series, snaps) = run_with_distributions(&coins, 1, 0, 5).unwrap();
        assert_eq!(series.len(), 6);
        assert_eq!(snaps.len(), 6);
        for (row, snap) in series.rows().iter().zip(&snaps) {
            let total: f64 = snap.probs.iter().map(|p| p.1).sum();
            assert!((total - 1.0).abs() < EXACT_TOL);
            assert_eq!(row.n, snap.n);
        }
    }
}

//! Monte Carlo runs of the quantum game with projective measurements.
//!
//! * D measured right after `U` each step: the outcome picks the strategy and
//!   the coin-and-capital register evolves coherently, which reproduces the
//!   mixed (CP-map) game on average.
//! * D and C both measured: the capital becomes classical, and the collapsed
//!   coin state carries the last outcome into the next toss.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::classical::Strategy;
use crate::coin_walk::CoinWalkState;
use crate::error::{Error, Result};
use crate::math::{CoinSet, C64, EXACT_TOL, ONE, ZERO};
use crate::par::Exec;
use crate::series::{CapitalRow, CapitalSeries, TrajectoryPath};

/// Coin state and classical capital of a fully measured run.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrajectoryState {
    pub coin_state: [C64; 2],
    pub capital: i64,
    pub step: usize,
}

impl TrajectoryState {
    pub fn coin_norm(&self) -> f64 {
        (self.coin_state[0].norm_sqr() + self.coin_state[1].norm_sqr()).sqrt()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MeasuredRun {
    pub path: TrajectoryPath,
    /// Strategy selected at each step.
    pub strategies: Vec<Strategy>,
}

fn basis(bit: usize) -> [C64; 2] {
    if bit == 0 {
        [ONE, ZERO]
    } else {
        [ZERO, ONE]
    }
}

/// Measures a qubit in the computational basis, returning the outcome and
/// the collapsed state.
fn measure(rng: &mut ChaCha8Rng, state: [C64; 2]) -> (usize, [C64; 2]) {
    let p0 = state[0].norm_sqr() / (state[0].norm_sqr() + state[1].norm_sqr());
    let outcome = usize::from(rng.random::<f64>() >= p0);
    (outcome, basis(outcome))
}

/// Applies `U` to the strategy register and measures it. Outcome `1` routes
/// through the B branch and leaves the register in `|0>`; outcome `0`
/// routes through A and leaves `|1>`.
fn select_strategy(rng: &mut ChaCha8Rng, coins: &CoinSet, d_state: &mut [C64; 2]) -> Strategy {
    let (outcome, _) = measure(rng, coins.u.apply(*d_state));
    *d_state = basis(1 - outcome);
    if outcome == 1 {
        Strategy::B
    } else {
        Strategy::A
    }
}

/// D measured each step; the coin and capital stay coherent.
pub fn run_d_measured(
    coins: &CoinSet,
    d0: usize,
    c0: usize,
    steps: usize,
    rng_seed: u64,
) -> Result<MeasuredRun> {
    check_bits(d0, c0)?;
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let mut d_state = basis(d0);
    let mut psi = CoinWalkState::basis(c0, 0, steps);
    let mut run = MeasuredRun {
        path: TrajectoryPath {
            capital: vec![0.0],
            second_moment: vec![0.0],
        },
        strategies: Vec::with_capacity(steps),
    };
    for _ in 0..steps {
        let s = select_strategy(&mut rng, coins, &mut d_state);
        let (m1, m2) = psi.step_moments(coins, s)?;
        run.strategies.push(s);
        run.path.capital.push(m1);
        run.path.second_moment.push(m2);
    }
    Ok(run)
}

/// Applies the selected coin to the coin qubit and measures it: outcome 1
/// wins a unit, outcome 0 loses one. The collapsed coin seeds the next step.
pub fn toss_measured(
    rng: &mut ChaCha8Rng,
    coins: &CoinSet,
    state: &mut TrajectoryState,
    strategy: Strategy,
) {
    let g = match strategy {
        Strategy::A => &coins.a,
        Strategy::B => coins.b_for(state.capital),
    };
    let (outcome, collapsed) = measure(rng, g.apply(state.coin_state));
    state.coin_state = collapsed;
    state.capital += if outcome == 1 { 1 } else { -1 };
    state.step += 1;
    debug_assert!((state.coin_norm() - 1.0).abs() < EXACT_TOL);
}

/// D and C measured each step; the capital is classical.
pub fn run_dc_measured(
    coins: &CoinSet,
    d0: usize,
    c0: usize,
    steps: usize,
    rng_seed: u64,
) -> Result<MeasuredRun> {
    check_bits(d0, c0)?;
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let mut d_state = basis(d0);
    let mut state = TrajectoryState {
        coin_state: basis(c0),
        capital: 0,
        step: 0,
    };
    let mut caps = Vec::with_capacity(steps + 1);
    caps.push(0);
    let mut strategies = Vec::with_capacity(steps);
    for _ in 0..steps {
        let s = select_strategy(&mut rng, coins, &mut d_state);
        toss_measured(&mut rng, coins, &mut state, s);
        strategies.push(s);
        caps.push(state.capital);
    }
    Ok(MeasuredRun {
        path: TrajectoryPath::from_integer_capitals(&caps),
        strategies,
    })
}

fn check_bits(d: usize, c: usize) -> Result<()> {
    if d > 1 || c > 1 {
        return Err(Error::Domain(format!(
            "register values must be bits, got d = {d}, c = {c}"
        )));
    }
    Ok(())
}

/// Mean capital, mean second moment and the standard error of the mean
/// capital over `samples` runs seeded `base_seed + i`.
pub fn average_trajectories<F>(runner: F, samples: usize, base_seed: u64) -> Result<CapitalSeries>
where
    F: Fn(u64) -> Result<TrajectoryPath> + Sync + Send,
{
    average_trajectories_with(runner, samples, base_seed, Exec::default())
}

pub fn average_trajectories_with<F>(
    runner: F,
    samples: usize,
    base_seed: u64,
    exec: Exec,
) -> Result<CapitalSeries>
where
    F: Fn(u64) -> Result<TrajectoryPath> + Sync + Send,
{
    if samples == 0 {
        return Err(Error::Domain("need at least one sample".into()));
    }
    let paths = exec
        .map_indexed(samples, |i| runner(base_seed.wrapping_add(i as u64)))
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    let len = paths[0].len();
    if let Some(bad) = paths.iter().find(|p| p.len() != len) {
        return Err(Error::LengthMismatch {
            expected: len,
            got: bad.len(),
        });
    }
    // Summed in sample order so the result does not depend on scheduling.
    let s = samples as f64;
    let mut series = CapitalSeries::with_capacity(len);
    for n in 0..len {
        let mean = paths.iter().map(|p| p.capital[n]).sum::<f64>() / s;
        let m2 = paths.iter().map(|p| p.second_moment[n]).sum::<f64>() / s;
        let stderr = if samples > 1 {
            let var = paths
                .iter()
                .map(|p| (p.capital[n] - mean).powi(2))
                .sum::<f64>()
                / (s - 1.0);
            (var / s).sqrt()
        } else {
            0.0
        };
        series.push_row(CapitalRow {
            n,
            expected_capital: mean,
            second_moment: m2,
            stderr: Some(stderr),
        });
    }
    Ok(series)
}

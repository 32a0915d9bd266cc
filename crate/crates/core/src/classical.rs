//! The classical capital game: two biased coins, the second one conditioned
//! on the capital modulo 3.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::math::solve_linear;
use crate::series::CapitalSeries;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Strategy {
    A,
    B,
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Strategy::A => "A",
            Strategy::B => "B",
        })
    }
}

/// Coin biases: `p` for A, `p0`/`p1` for B at capital divisible / not
/// divisible by 3.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ClassicalGameParams {
    pub p: f64,
    pub p0: f64,
    pub p1: f64,
    pub epsilon: f64,
}

impl ClassicalGameParams {
    pub fn new(p: f64, p0: f64, p1: f64, epsilon: f64) -> Result<Self> {
        for (name, v) in [("p", p), ("p0", p0), ("p1", p1)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::Domain(format!("{name} = {v} is not a probability")));
            }
        }
        Ok(ClassicalGameParams { p, p0, p1, epsilon })
    }

    /// `p = 1/2 - eps`, `p0 = 1/10 - eps`, `p1 = 3/4 - eps`.
    pub fn with_epsilon(epsilon: f64) -> Result<Self> {
        Self::new(0.5 - epsilon, 0.1 - epsilon, 0.75 - epsilon, epsilon)
    }

    #[inline]
    pub fn win_prob(&self, strategy: Strategy, capital: i64) -> f64 {
        match strategy {
            Strategy::A => self.p,
            Strategy::B if capital.rem_euclid(3) == 0 => self.p0,
            Strategy::B => self.p1,
        }
    }
}

/// The order in which strategies are played.
#[derive(Clone, Debug, PartialEq)]
pub enum StrategySchedule {
    AlwaysA,
    AlwaysB,
    /// Step `n` plays `pattern[n % pattern.len()]`.
    Periodic(Vec<Strategy>),
    /// A with probability `prob_a`, B otherwise, independently each step.
    RandomMixture(f64),
}

impl StrategySchedule {
    pub fn periodic(pattern: Vec<Strategy>) -> Result<Self> {
        if pattern.is_empty() {
            return Err(Error::Domain("periodic pattern is empty".into()));
        }
        Ok(StrategySchedule::Periodic(pattern))
    }

    pub fn random_mixture(prob_a: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&prob_a) {
            return Err(Error::Domain(format!(
                "mixture probability {prob_a} not in [0, 1]"
            )));
        }
        Ok(StrategySchedule::RandomMixture(prob_a))
    }

    /// Strategy at step `n`, or `None` for a random mixture.
    pub fn strategy_at(&self, n: usize) -> Option<Strategy> {
        match self {
            StrategySchedule::AlwaysA => Some(Strategy::A),
            StrategySchedule::AlwaysB => Some(Strategy::B),
            StrategySchedule::Periodic(pat) => Some(pat[n % pat.len()]),
            StrategySchedule::RandomMixture(_) => None,
        }
    }

    /// Probability of winning at step `n` from capital `x`, averaged over the
    /// strategy choice for mixtures.
    pub fn win_prob(&self, params: &ClassicalGameParams, n: usize, x: i64) -> f64 {
        match self {
            StrategySchedule::RandomMixture(pa) => {
                pa * params.win_prob(Strategy::A, x) + (1.0 - pa) * params.win_prob(Strategy::B, x)
            }
            _ => params.win_prob(self.strategy_at(n).unwrap(), x),
        }
    }
}

impl FromStr for StrategySchedule {
    type Err = Error;

    /// Accepts `A`, `B`, a pattern such as `AABB`, `random` (probability 1/2)
    /// or `random:<prob_a>`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let lower = s.to_ascii_lowercase();
        if lower == "random" {
            return Self::random_mixture(0.5);
        }
        if let Some(p) = lower.strip_prefix("random:") {
            let p: f64 = p
                .parse()
                .map_err(|_| Error::Config(format!("bad mixture probability in `{s}`")))?;
            return Self::random_mixture(p);
        }
        let pattern = s
            .chars()
            .map(|ch| match ch.to_ascii_uppercase() {
                'A' => Ok(Strategy::A),
                'B' => Ok(Strategy::B),
                _ => Err(Error::Config(format!("bad schedule `{s}`"))),
            })
            .collect::<Result<Vec<_>>>()?;
        match pattern.as_slice() {
            [Strategy::A] => Ok(StrategySchedule::AlwaysA),
            [Strategy::B] => Ok(StrategySchedule::AlwaysB),
            _ => Self::periodic(pattern),
        }
    }
}

/// Value of `p0` below which playing B forever loses, given `p1`.
pub fn losing_threshold(p1: f64) -> f64 {
    (1.0 - 2.0 * p1 + p1 * p1) / (1.0 - 2.0 * p1 + 2.0 * p1 * p1)
}

/// Stationary law of the capital modulo 3 when only B is played.
pub fn stationary_mod3(params: &ClassicalGameParams) -> Result<[f64; 3]> {
    let probs = [params.p0, params.p1, params.p1];
    // Balance rows (T^t - I) pi = 0 with the last one replaced by sum(pi) = 1.
    let mut a = vec![vec![0.0; 3]; 3];
    for (i, &pi) in probs.iter().enumerate() {
        a[(i + 1) % 3][i] += pi;
        a[(i + 2) % 3][i] += 1.0 - pi;
        a[i][i] -= 1.0;
    }
    a[2] = vec![1.0; 3];
    let pi = solve_linear(a, vec![0.0, 0.0, 1.0]).ok_or(Error::DegenerateChain)?;
    Ok([pi[0], pi[1], pi[2]])
}

/// Mean capital change per step under B-only play in the stationary regime.
pub fn stationary_drift(params: &ClassicalGameParams) -> Result<f64> {
    let pi = stationary_mod3(params)?;
    let probs = [params.p0, params.p1, params.p1];
    Ok(pi.iter().zip(probs).map(|(w, p)| w * (2.0 * p - 1.0)).sum())
}

/// Exact capital distribution `P_x(n)` on a dense window around the initial
/// capital.
#[derive(Clone, Debug, PartialEq)]
pub struct CapitalDistribution {
    probs: Vec<f64>,
    /// Capital stored at index 0.
    origin: i64,
    step: usize,
}

impl CapitalDistribution {
    pub fn new(initial_capital: i64) -> Self {
        CapitalDistribution {
            probs: vec![1.0],
            origin: initial_capital,
            step: 0,
        }
    }

    pub fn step_count(&self) -> usize {
        self.step
    }

    /// `(x, P_x)` pairs over the current window.
    pub fn iter(&self) -> impl Iterator<Item = (i64, f64)> + '_ {
        self.probs
            .iter()
            .enumerate()
            .map(move |(i, &p)| (self.origin + i as i64, p))
    }

    pub fn prob(&self, x: i64) -> f64 {
        let i = x - self.origin;
        if i < 0 {
            return 0.0;
        }
        self.probs.get(i as usize).copied().unwrap_or(0.0)
    }

    pub fn total(&self) -> f64 {
        self.probs.iter().sum()
    }

    pub fn expected_capital(&self) -> f64 {
        self.iter().map(|(x, p)| x as f64 * p).sum()
    }

    pub fn second_moment(&self) -> f64 {
        self.iter().map(|(x, p)| (x * x) as f64 * p).sum()
    }

    /// One application of the master equation
    /// `P_x(n+1) = p_{x-1} P_{x-1}(n) + q_{x+1} P_{x+1}(n)`.
    pub fn advance<F: Fn(i64) -> f64>(&mut self, win_prob: F) {
        let mut next = vec![0.0; self.probs.len() + 2];
        for (i, &p) in self.probs.iter().enumerate() {
            if p == 0.0 {
                continue;
            }
            let w = win_prob(self.origin + i as i64);
            next[i + 2] += w * p;
            next[i] += (1.0 - w) * p;
        }
        self.probs = next;
        self.origin -= 1;
        self.step += 1;
    }
}

pub fn propagate_distribution(
    params: &ClassicalGameParams,
    schedule: &StrategySchedule,
    steps: usize,
    initial_capital: i64,
) -> CapitalSeries {
    let mut dist = CapitalDistribution::new(initial_capital);
    let mut series = CapitalSeries::with_capacity(steps + 1);
    series.push(0, dist.expected_capital(), dist.second_moment());
    for n in 0..steps {
        dist.advance(|x| schedule.win_prob(params, n, x));
        series.push(n + 1, dist.expected_capital(), dist.second_moment());
    }
    series
}

/// One sampled capital path of length `steps + 1`.
pub fn play_trajectory(
    params: &ClassicalGameParams,
    schedule: &StrategySchedule,
    steps: usize,
    initial_capital: i64,
    rng_seed: u64,
) -> Vec<i64> {
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let mut path = Vec::with_capacity(steps + 1);
    let mut x = initial_capital;
    path.push(x);
    for n in 0..steps {
        let strategy = match schedule {
            StrategySchedule::RandomMixture(pa) => {
                if rng.random_bool(*pa) {
                    Strategy::A
                } else {
                    Strategy::B
                }
            }
            _ => schedule.strategy_at(n).unwrap(),
        };
        x += if rng.random_bool(params.win_prob(strategy, x)) {
            1
        } else {
            -1
        };
        path.push(x);
    }
    path
}

/// Discrete ratchet potential `V_x` for `x in 0..=x_max`, anchored at
/// `V_0 = 0`, from per-site win probabilities.
pub fn ratchet_potential<F: Fn(i64) -> f64>(win_prob: F, x_max: usize) -> Result<Vec<f64>> {
    let check = |x: i64| {
        let p = win_prob(x);
        if p > 0.0 && p < 1.0 {
            Ok(p)
        } else {
            Err(Error::SingularPotential { x, prob: p })
        }
    };
    let mut v = Vec::with_capacity(x_max + 1);
    v.push(0.0);
    let mut prev = check(0)?;
    for y in 1..=x_max as i64 {
        let cur = check(y)?;
        let last = *v.last().unwrap();
        v.push(last - 0.5 * (prev / (1.0 - cur)).ln());
        prev = cur;
    }
    Ok(v)
}

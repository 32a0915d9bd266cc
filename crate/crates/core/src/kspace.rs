//! Momentum-space propagation of the quantum game, used as an independent
//! check on the lattice simulator.
//!
//! A state is expanded over the residue-class plane waves
//! `|phi_k^j> = sum_{x ≡ j (mod 3)} e^{ikx} |x>`. For each quasi-momentum `k`
//! the step operator acts on a 12-dimensional fiber spanned by
//! `|d, c> ⊗ |phi_k^j>`, `j = 0, 1, 2`, with the flag register fixed at 0.
//! Position amplitudes are recovered by a discrete inverse transform over a
//! grid of `K` momenta.

use std::f64::consts::PI;
use std::ops::RangeInclusive;

use crate::error::{Error, Result};
use crate::math::{CMatrix, CoinSet, Mat2, C64, ONE, ZERO};
use crate::par::Exec;
use crate::quantum_walk::{PureState, StepOperators};

/// Fiber dimension: 3 residue classes times `D ⊗ C`.
pub const FIBER_DIM: usize = 12;

/// Fiber coordinate of residue class `j` and register values `d`, `c`.
#[inline]
pub fn fiber_index(j: usize, d: usize, c: usize) -> usize {
    j * 4 + d * 2 + c
}

/// Momenta `k_m = -pi + 2 pi m / K`, `m = 0..K`.
#[derive(Clone, Debug, PartialEq)]
pub struct KGrid {
    points: Vec<f64>,
}

impl KGrid {
    pub fn new(size: usize) -> Result<Self> {
        if size < 3 {
            return Err(Error::Domain(format!(
                "k grid needs at least 3 points, got {size}"
            )));
        }
        let points = (0..size)
            .map(|m| -PI + 2.0 * PI * m as f64 / size as f64)
            .collect();
        Ok(KGrid { points })
    }

    /// Smallest odd grid with at least `2 * steps + 3` points.
    pub fn for_steps(steps: usize) -> Self {
        Self::new(2 * steps + 3).expect("size is at least 3")
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    /// Largest `|x|` that reconstructs without aliasing.
    pub fn max_position(&self) -> i64 {
        (self.len() as i64 - 3) / 2
    }

    /// Whether the grid resolves every position reachable in `steps` steps.
    pub fn supports(&self, steps: usize) -> bool {
        self.len() >= 2 * steps + 3
    }
}

/// One-step matrix on a momentum fiber.
#[derive(Clone, Debug, PartialEq)]
pub struct BlockMatrix12(CMatrix);

impl BlockMatrix12 {
    pub fn matrix(&self) -> &CMatrix {
        &self.0
    }

    pub fn unitarity_error(&self) -> f64 {
        self.0.unitarity_error()
    }

    /// The 4x4 block mapping residue class `src` into class `dst`.
    pub fn block(&self, dst: usize, src: usize) -> CMatrix {
        let mut b = CMatrix::zeros(4);
        for r in 0..4 {
            for c in 0..4 {
                b.set(r, c, self.0.get(dst * 4 + r, src * 4 + c));
            }
        }
        b
    }

    #[inline]
    fn apply(&self, v: &[C64; FIBER_DIM]) -> [C64; FIBER_DIM] {
        let mut out = [ZERO; FIBER_DIM];
        self.0.apply_into(v, &mut out);
        out
    }
}

/// Fiber matrix at momentum `k`, read off from the lattice step operator.
///
/// Each basis vector `|d, c> ⊗ |phi_k^j>` is represented by its
/// single-site amplitude `e^{ikj}` at `x = j`; one lattice step maps it onto
/// sites `j ± 1`, and the coefficient of `|phi_k^{j'}>` at site `x'` is the
/// amplitude times `e^{-ikx'}`. Translation invariance by three sites makes
/// this the full fiber action.
pub fn build_block_matrix(k: f64, coins: &CoinSet) -> BlockMatrix12 {
    build_with_ops(k, &StepOperators::new(coins))
}

fn build_with_ops(k: f64, ops: &StepOperators) -> BlockMatrix12 {
    let mut m = CMatrix::zeros(FIBER_DIM);
    for j in 0..3usize {
        for d in 0..2 {
            for c in 0..2 {
                let mut st = PureState::zeros(4);
                let x = j as i64;
                st.set_amplitude(d, c, 0, x, C64::from_polar(1.0, k * x as f64))
                    .expect("site inside lattice");
                st.step(ops).expect("one step fits the lattice");
                for xp in [x - 1, x + 1] {
                    let row_class = xp.rem_euclid(3) as usize;
                    let phase = C64::from_polar(1.0, -k * xp as f64);
                    for dp in 0..2 {
                        for cp in 0..2 {
                            let a = st.amplitude(dp, cp, 0, xp);
                            if a != ZERO {
                                m.add_at(
                                    fiber_index(row_class, dp, cp),
                                    fiber_index(j, d, c),
                                    a * phase,
                                );
                            }
                        }
                    }
                }
            }
        }
    }
    BlockMatrix12(m)
}

/// Fiber matrix assembled in closed form from the blocks
/// `M_{jd} = e^{i s_d k} (|0><1|U ⊗ |d><d| B_j + |1><0|U ⊗ |d><d| A)`,
/// `s_d = 1 - 2d`, arranged as
///
/// ```text
/// [ 0    M10  M11 ]
/// [ M01  0    M10 ]
/// [ M00  M11  0   ]
/// ```
pub fn analytic_block_matrix(k: f64, coins: &CoinSet) -> BlockMatrix12 {
    let u = *coins.u.matrix();
    let to_b = CMatrix::from_mat2(&(Mat2::ket_bra(0, 1) * u));
    let to_a = CMatrix::from_mat2(&(Mat2::ket_bra(1, 0) * u));
    let block = |j: usize, d: usize| {
        let proj = Mat2::ket_bra(d, d);
        let bj = if j == 0 { coins.b0 } else { coins.b1 };
        let sd = 1.0 - 2.0 * d as f64;
        to_b.kron(&CMatrix::from_mat2(&(proj * *bj.matrix())))
            .add(&to_a.kron(&CMatrix::from_mat2(&(proj * *coins.a.matrix()))))
            .scale(C64::from_polar(1.0, sd * k))
    };
    let layout: [[Option<(usize, usize)>; 3]; 3] = [
        [None, Some((1, 0)), Some((1, 1))],
        [Some((0, 1)), None, Some((1, 0))],
        [Some((0, 0)), Some((1, 1)), None],
    ];
    let mut m = CMatrix::zeros(FIBER_DIM);
    for (dst, row) in layout.iter().enumerate() {
        for (src, entry) in row.iter().enumerate() {
            if let Some((j, d)) = *entry {
                let b = block(j, d);
                for r in 0..4 {
                    for c in 0..4 {
                        m.set(dst * 4 + r, src * 4 + c, b.get(r, c));
                    }
                }
            }
        }
    }
    BlockMatrix12(m)
}

/// Fiber vectors `(nu_0, nu_1, nu_2)` for every grid momentum.
#[derive(Clone, Debug, PartialEq)]
pub struct KSpaceState {
    fibers: Vec<[C64; FIBER_DIM]>,
    step: usize,
}

impl KSpaceState {
    /// `nu_j = |d> ⊗ |c>` for every class and momentum (a delta at `x = 0`).
    pub fn initial(d: usize, c: usize, grid: &KGrid) -> Self {
        assert!(d < 2 && c < 2, "register values are bits");
        let mut v = [ZERO; FIBER_DIM];
        for j in 0..3 {
            v[fiber_index(j, d, c)] = ONE;
        }
        KSpaceState {
            fibers: vec![v; grid.len()],
            step: 0,
        }
    }

    pub fn step_count(&self) -> usize {
        self.step
    }

    pub fn fibers(&self) -> &[[C64; FIBER_DIM]] {
        &self.fibers
    }

    /// `sum_j |nu_j|^2 / 3` for each momentum.
    pub fn fiber_norms(&self) -> Vec<f64> {
        self.fibers
            .iter()
            .map(|v| v.iter().map(|z| z.norm_sqr()).sum::<f64>() / 3.0)
            .collect()
    }
}

/// Fiber matrices for a whole grid.
#[derive(Clone, Debug)]
pub struct KSpacePropagator {
    grid: KGrid,
    matrices: Vec<BlockMatrix12>,
}

impl KSpacePropagator {
    pub fn new(coins: &CoinSet, grid: KGrid, exec: Exec) -> Self {
        let ops = StepOperators::new(coins);
        let matrices = exec.map_indexed(grid.len(), |m| build_with_ops(grid.points[m], &ops));
        KSpacePropagator { grid, matrices }
    }

    pub fn grid(&self) -> &KGrid {
        &self.grid
    }

    pub fn matrices(&self) -> &[BlockMatrix12] {
        &self.matrices
    }

    pub fn advance(&self, state: &mut KSpaceState, steps: usize, exec: Exec) {
        exec.for_each_mut(&mut state.fibers, |m, v| {
            for _ in 0..steps {
                *v = self.matrices[m].apply(v);
            }
        });
        state.step += steps;
    }
}

pub fn propagate(
    coins: &CoinSet,
    d: usize,
    c: usize,
    steps: usize,
    grid: &KGrid,
) -> Result<KSpaceState> {
    propagate_with(coins, d, c, steps, grid, Exec::default())
}

pub fn propagate_with(
    coins: &CoinSet,
    d: usize,
    c: usize,
    steps: usize,
    grid: &KGrid,
    exec: Exec,
) -> Result<KSpaceState> {
    if !grid.supports(steps) {
        return Err(Error::Domain(format!(
            "k grid of {} points cannot resolve {steps} steps (needs {})",
            grid.len(),
            2 * steps + 3
        )));
    }
    let prop = KSpacePropagator::new(coins, grid.clone(), exec);
    let mut st = KSpaceState::initial(d, c, grid);
    prop.advance(&mut st, steps, exec);
    Ok(st)
}

/// Amplitudes `psi(x) = (1/K) sum_m e^{i k_m x} nu_{x mod 3}(k_m)` as `D ⊗ C`
/// 4-vectors.
pub fn reconstruct_positions(
    state: &KSpaceState,
    grid: &KGrid,
    x_range: RangeInclusive<i64>,
) -> Result<Vec<(i64, [C64; 4])>> {
    reconstruct_positions_with(state, grid, x_range, Exec::default())
}

pub fn reconstruct_positions_with(
    state: &KSpaceState,
    grid: &KGrid,
    x_range: RangeInclusive<i64>,
    exec: Exec,
) -> Result<Vec<(i64, [C64; 4])>> {
    let limit = grid.max_position();
    for x in [*x_range.start(), *x_range.end()] {
        if x.abs() > limit {
            return Err(Error::Range {
                x,
                lo: -limit,
                hi: limit,
            });
        }
    }
    let xs: Vec<i64> = x_range.collect();
    let inv_k = 1.0 / grid.len() as f64;
    Ok(exec.map_indexed(xs.len(), |i| {
        let x = xs[i];
        let j = x.rem_euclid(3) as usize;
        let mut acc = [ZERO; 4];
        for (k, v) in grid.points.iter().zip(&state.fibers) {
            let phase = C64::from_polar(inv_k, k * x as f64);
            for (a, z) in acc.iter_mut().zip(&v[j * 4..j * 4 + 4]) {
                *a += phase * z;
            }
        }
        (x, acc)
    }))
}

/// Inverse of [`reconstruct_positions`]: `nu_j(k) = sum_{y ≡ j} e^{-iky} psi(y)`.
pub fn forward_transform(positions: &[(i64, [C64; 4])], grid: &KGrid) -> KSpaceState {
    let fibers = grid
        .points
        .iter()
        .map(|&k| {
            let mut v = [ZERO; FIBER_DIM];
            for &(y, amps) in positions {
                let j = y.rem_euclid(3) as usize;
                let phase = C64::from_polar(1.0, -k * y as f64);
                for (slot, a) in v[j * 4..j * 4 + 4].iter_mut().zip(amps) {
                    *slot += phase * a;
                }
            }
            v
        })
        .collect();
    KSpaceState { fibers, step: 0 }
}

/// Position probabilities after `steps` steps from `|d>|c>|0>`.
pub fn kspace_distribution(
    coins: &CoinSet,
    d: usize,
    c: usize,
    steps: usize,
    grid: &KGrid,
) -> Result<Vec<(i64, f64)>> {
    let st = propagate(coins, d, c, steps, grid)?;
    let n = steps as i64;
    Ok(reconstruct_positions(&st, grid, -n..=n)?
        .into_iter()
        .map(|(x, a)| (x, a.iter().map(|z| z.norm_sqr()).sum()))
        .collect())
}

pub fn capital_via_kspace(
    coins: &CoinSet,
    d: usize,
    c: usize,
    steps: usize,
    grid: &KGrid,
) -> Result<f64> {
    Ok(kspace_distribution(coins, d, c, steps, grid)?
        .iter()
        .map(|&(x, p)| x as f64 * p)
        .sum())
}

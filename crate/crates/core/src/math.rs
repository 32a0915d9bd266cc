//! Small dense complex linear algebra and the SU(2) coin parametrization.
//!
//! Everything here is fixed-size or tiny (2x2, 8x8, 12x12), so the routines
//! are plain loops over `Complex64` without an external linear-algebra crate.

use std::f64::consts::{FRAC_PI_2, PI};
use std::ops::{Add, Mul, Sub};

use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;

/// Tolerance for exact algebraic identities (unitarity, trace, symmetry).
pub const EXACT_TOL: f64 = 1e-12;
/// Tolerance for agreement between two independent numerical routes.
pub const CROSS_TOL: f64 = 1e-8;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

/// A general 2x2 complex matrix, row-major.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Mat2(pub [[C64; 2]; 2]);

impl Mat2 {
    pub const ZERO: Mat2 = Mat2([[ZERO, ZERO], [ZERO, ZERO]]);
    pub const IDENTITY: Mat2 = Mat2([[ONE, ZERO], [ZERO, ONE]]);

    pub fn new(a: C64, b: C64, c: C64, d: C64) -> Self {
        Mat2([[a, b], [c, d]])
    }

    /// Outer product `|row><col|` on a qubit.
    pub fn ket_bra(row: usize, col: usize) -> Self {
        let mut m = Mat2::ZERO;
        m.0[row][col] = ONE;
        m
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> C64 {
        self.0[r][c]
    }

    pub fn adjoint(&self) -> Self {
        let m = &self.0;
        Mat2([
            [m[0][0].conj(), m[1][0].conj()],
            [m[0][1].conj(), m[1][1].conj()],
        ])
    }

    pub fn det(&self) -> C64 {
        self.0[0][0] * self.0[1][1] - self.0[0][1] * self.0[1][0]
    }

    pub fn trace(&self) -> C64 {
        self.0[0][0] + self.0[1][1]
    }

    #[inline]
    pub fn apply(&self, v: [C64; 2]) -> [C64; 2] {
        [
            self.0[0][0] * v[0] + self.0[0][1] * v[1],
            self.0[1][0] * v[0] + self.0[1][1] * v[1],
        ]
    }

    pub fn scale(&self, s: C64) -> Self {
        let m = &self.0;
        Mat2([[m[0][0] * s, m[0][1] * s], [m[1][0] * s, m[1][1] * s]])
    }

    /// Largest entrywise modulus of `self - other`.
    pub fn max_abs_diff(&self, other: &Mat2) -> f64 {
        let mut worst = 0.0f64;
        for r in 0..2 {
            for c in 0..2 {
                worst = worst.max((self.0[r][c] - other.0[r][c]).norm());
            }
        }
        worst
    }

    pub fn is_finite(&self) -> bool {
        self.0
            .iter()
            .flatten()
            .all(|z| z.re.is_finite() && z.im.is_finite())
    }
}

impl Mul for Mat2 {
    type Output = Mat2;
    #[inline]
    fn mul(self, rhs: Mat2) -> Mat2 {
        let a = &self.0;
        let b = &rhs.0;
        Mat2([
            [
                a[0][0] * b[0][0] + a[0][1] * b[1][0],
                a[0][0] * b[0][1] + a[0][1] * b[1][1],
            ],
            [
                a[1][0] * b[0][0] + a[1][1] * b[1][0],
                a[1][0] * b[0][1] + a[1][1] * b[1][1],
            ],
        ])
    }
}

impl Add for Mat2 {
    type Output = Mat2;
    #[inline]
    fn add(self, rhs: Mat2) -> Mat2 {
        let mut out = self;
        for r in 0..2 {
            for c in 0..2 {
                out.0[r][c] += rhs.0[r][c];
            }
        }
        out
    }
}

impl Sub for Mat2 {
    type Output = Mat2;
    fn sub(self, rhs: Mat2) -> Mat2 {
        let mut out = self;
        for r in 0..2 {
            for c in 0..2 {
                out.0[r][c] -= rhs.0[r][c];
            }
        }
        out
    }
}

/// Angles of `G(theta, alpha, beta)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Su2Params {
    theta: f64,
    alpha: f64,
    beta: f64,
}

impl Su2Params {
    pub fn new(theta: f64, alpha: f64, beta: f64) -> Result<Self> {
        if !(0.0..=PI).contains(&theta) {
            return Err(Error::Domain(format!("theta = {theta} not in [0, pi]")));
        }
        for (name, v) in [("alpha", alpha), ("beta", beta)] {
            if !(-PI..=PI).contains(&v) {
                return Err(Error::Domain(format!("{name} = {v} not in [-pi, pi]")));
            }
        }
        Ok(Su2Params { theta, alpha, beta })
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }
}

/// A 2x2 unitary.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Unitary2(Mat2);

impl Unitary2 {
    /// Wraps `m`, rejecting it unless `m^dagger m = I` within `EXACT_TOL`.
    pub fn new(m: Mat2) -> Result<Self> {
        let err = (m.adjoint() * m).max_abs_diff(&Mat2::IDENTITY);
        if err > EXACT_TOL || !m.is_finite() {
            return Err(Error::Domain(format!(
                "matrix is not unitary (deviation {err:e})"
            )));
        }
        Ok(Unitary2(m))
    }

    pub fn identity() -> Self {
        Unitary2(Mat2::IDENTITY)
    }

    pub fn matrix(&self) -> &Mat2 {
        &self.0
    }

    pub fn adjoint(&self) -> Self {
        Unitary2(self.0.adjoint())
    }

    #[inline]
    pub fn apply(&self, v: [C64; 2]) -> [C64; 2] {
        self.0.apply(v)
    }

    /// Entrywise deviation of `G^dagger G` from the identity.
    pub fn unitarity_error(&self) -> f64 {
        (self.0.adjoint() * self.0).max_abs_diff(&Mat2::IDENTITY)
    }
}

impl Mul for Unitary2 {
    type Output = Unitary2;
    fn mul(self, rhs: Unitary2) -> Unitary2 {
        Unitary2(self.0 * rhs.0)
    }
}

pub fn su2(params: Su2Params) -> Unitary2 {
    let half = params.theta / 2.0;
    let (s, c) = half.sin_cos();
    let ea = C64::from_polar(1.0, params.alpha);
    let eb = C64::from_polar(1.0, params.beta);
    Unitary2(Mat2::new(
        ea * c,
        I * eb * s,
        I * eb.conj() * s,
        ea.conj() * c,
    ))
}

pub fn not_gate() -> Unitary2 {
    Unitary2(Mat2::new(ZERO, ONE, ONE, ZERO))
}

/// The strategy coins `A`, `B0`, `B1` and the strategy-mixing unitary `U`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CoinSet {
    pub a: Unitary2,
    pub b0: Unitary2,
    pub b1: Unitary2,
    pub u: Unitary2,
}

impl CoinSet {
    /// The capital-dependent B coin: `B0` when 3 divides `x`, else `B1`.
    #[inline]
    pub fn b_for(&self, x: i64) -> &Unitary2 {
        if x.rem_euclid(3) == 0 {
            &self.b0
        } else {
            &self.b1
        }
    }
}

/// Coins mimicking the classical biases with offset `epsilon`.
///
/// The `B1` angle is `2(3/4 - epsilon)` radians, with no factor of pi.
pub fn default_coins(epsilon: f64) -> Result<CoinSet> {
    let a = Su2Params::new(2.0 * (FRAC_PI_2 - epsilon), 0.0, 0.0)?;
    let b0 = Su2Params::new(2.0 * (PI / 10.0 - epsilon), 0.0, 0.0)?;
    let b1 = Su2Params::new(2.0 * (0.75 - epsilon), 0.0, 0.0)?;
    Ok(CoinSet {
        a: su2(a),
        b0: su2(b0),
        b1: su2(b1),
        u: su2(Su2Params::new(FRAC_PI_2, 0.0, 0.0)?),
    })
}

/// Dense square complex matrix, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct CMatrix {
    dim: usize,
    data: Vec<C64>,
}

impl CMatrix {
    pub fn zeros(dim: usize) -> Self {
        CMatrix {
            dim,
            data: vec![ZERO; dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m.data[i * dim + i] = ONE;
        }
        m
    }

    pub fn from_mat2(m: &Mat2) -> Self {
        CMatrix {
            dim: 2,
            data: vec![m.0[0][0], m.0[0][1], m.0[1][0], m.0[1][1]],
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> C64 {
        self.data[r * self.dim + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: C64) {
        self.data[r * self.dim + c] = v;
    }

    pub fn add_at(&mut self, r: usize, c: usize, v: C64) {
        self.data[r * self.dim + c] += v;
    }

    /// Kronecker product `self ⊗ other`.
    pub fn kron(&self, other: &CMatrix) -> CMatrix {
        let n = self.dim * other.dim;
        let mut out = CMatrix::zeros(n);
        for i in 0..self.dim {
            for j in 0..self.dim {
                let a = self.get(i, j);
                if a == ZERO {
                    continue;
                }
                for k in 0..other.dim {
                    for l in 0..other.dim {
                        out.set(i * other.dim + k, j * other.dim + l, a * other.get(k, l));
                    }
                }
            }
        }
        out
    }

    pub fn matmul(&self, rhs: &CMatrix) -> CMatrix {
        assert_eq!(self.dim, rhs.dim, "dimension mismatch");
        let n = self.dim;
        let mut out = CMatrix::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self.get(i, k);
                if a == ZERO {
                    continue;
                }
                for j in 0..n {
                    out.data[i * n + j] += a * rhs.data[k * n + j];
                }
            }
        }
        out
    }

    pub fn adjoint(&self) -> CMatrix {
        let n = self.dim;
        let mut out = CMatrix::zeros(n);
        for i in 0..n {
            for j in 0..n {
                out.set(j, i, self.get(i, j).conj());
            }
        }
        out
    }

    pub fn scale(&self, s: C64) -> CMatrix {
        CMatrix {
            dim: self.dim,
            data: self.data.iter().map(|z| z * s).collect(),
        }
    }

    pub fn add(&self, rhs: &CMatrix) -> CMatrix {
        assert_eq!(self.dim, rhs.dim, "dimension mismatch");
        CMatrix {
            dim: self.dim,
            data: self
                .data
                .iter()
                .zip(&rhs.data)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }

    /// `out = self * v`; `v` and `out` must have length `dim`.
    #[inline]
    pub fn apply_into(&self, v: &[C64], out: &mut [C64]) {
        let n = self.dim;
        for (i, o) in out.iter_mut().enumerate().take(n) {
            let row = &self.data[i * n..(i + 1) * n];
            *o = row.iter().zip(v).map(|(a, b)| a * b).sum();
        }
    }

    pub fn apply(&self, v: &[C64]) -> Vec<C64> {
        let mut out = vec![ZERO; self.dim];
        self.apply_into(v, &mut out);
        out
    }

    pub fn max_abs_diff(&self, other: &CMatrix) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// Entrywise deviation of `M^dagger M` from the identity.
    pub fn unitarity_error(&self) -> f64 {
        self.adjoint()
            .matmul(self)
            .max_abs_diff(&CMatrix::identity(self.dim))
    }
}

/// Solves `a x = b` by Gaussian elimination with partial pivoting.
///
/// Returns `None` when a pivot falls below `1e-14` in magnitude.
pub fn solve_linear(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let pivot = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[pivot][col].abs() < 1e-14 {
            return None;
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
            if f == 0.0 {
                continue;
            }
            let (upper, lower) = a.split_at_mut(row);
            for (t, s) in lower[0][col..].iter_mut().zip(&upper[col][col..]) {
                *t -= f * s;
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let tail: f64 = (row + 1..n).map(|k| a[row][k] * x[k]).sum();
        x[row] = (b[row] - tail) / a[row][row];
    }
    Some(x)
}

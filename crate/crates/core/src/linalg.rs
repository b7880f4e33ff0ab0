//! Dense complex helpers on top of `faer`: pivoted LU with a 1-norm
//! condition estimate, gathers, and error metrics.

use std::ops::Range;

use faer::linalg::solvers::{DenseSolveCore, PartialPivLu, Solve};
use faer::{Mat, MatRef};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type CMat = Mat<Complex64>;

/// Reciprocal condition estimate below which a factorization is refused.
pub const RCOND_MIN: f64 = 1e-13;
/// Reciprocal condition estimate below which the oracle warns.
pub const RCOND_WARN: f64 = 1e-10;

pub(crate) const ZERO: Complex64 = Complex64::new(0.0, 0.0);
pub(crate) const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Row-pivoted LU of a square matrix together with its 1-norm.
pub struct Lu {
    lu: PartialPivLu<Complex64>,
    norm1: f64,
    dim: usize,
}

impl Lu {
    pub fn new(a: MatRef<'_, Complex64>) -> Self {
        assert_eq!(a.nrows(), a.ncols(), "LU of a non-square matrix");
        Self {
            lu: a.partial_piv_lu(),
            norm1: norm1(a),
            dim: a.nrows(),
        }
    }

    /// Factorizes and refuses matrices whose reciprocal condition
    /// estimate is at or below `min_rcond`.
    pub fn checked(a: MatRef<'_, Complex64>, what: &'static str, min_rcond: f64) -> Result<(Self, f64)> {
        let lu = Self::new(a);
        let rcond = lu.rcond();
        if rcond.is_nan() || rcond <= min_rcond {
            return Err(Error::Conditioning { what, rcond });
        }
        Ok((lu, rcond))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn solve(&self, rhs: MatRef<'_, Complex64>) -> CMat {
        self.lu.solve(rhs)
    }

    pub fn solve_transpose(&self, rhs: MatRef<'_, Complex64>) -> CMat {
        self.lu.solve_transpose(rhs)
    }

    pub fn inverse(&self) -> CMat {
        self.lu.inverse()
    }

    /// Reciprocal 1-norm condition number estimate, `1 / (|A|_1 |A^-1|_1)`.
    ///
    /// `|A^-1|_1` comes from Hager's estimator with Higham's refinements
    /// (the scheme behind LAPACK's `zlacn2`), costing a handful of solves.
    pub fn rcond(&self) -> f64 {
        let n = self.dim;
        if n == 0 {
            return 1.0;
        }
        let u = self.lu.U();
        if (0..n).any(|i| {
            let d = u[(i, i)];
            d == ZERO || !d.re.is_finite() || !d.im.is_finite()
        }) {
            return 0.0;
        }
        if self.norm1 == 0.0 {
            return 0.0;
        }
        let inv_norm = self.inverse_norm1_estimate();
        if !inv_norm.is_finite() {
            return 0.0;
        }
        1.0 / (self.norm1 * inv_norm)
    }

    fn inverse_norm1_estimate(&self) -> f64 {
        let n = self.dim;
        let mut x = Mat::<Complex64>::from_fn(n, 1, |_, _| Complex64::new(1.0 / n as f64, 0.0));
        let mut est = 0.0;
        let mut last_j = usize::MAX;
        for iter in 0..5 {
            let y = self.lu.solve(x.as_ref());
            let new_est: f64 = (0..n).map(|i| y[(i, 0)].norm()).sum();
            if iter > 0 && new_est <= est {
                break;
            }
            est = new_est;
            let xi = Mat::<Complex64>::from_fn(n, 1, |i, _| {
                let v = y[(i, 0)];
                let a = v.norm();
                if a == 0.0 {
                    ONE
                } else {
                    v / a
                }
            });
            let z = self.lu.solve_adjoint(xi.as_ref());
            let (j, zmax) = (0..n)
                .map(|i| (i, z[(i, 0)].norm()))
                .fold((0, -1.0), |acc, v| if v.1 > acc.1 { v } else { acc });
            if iter > 0 && (j == last_j || zmax <= dot_re(z.as_ref(), x.as_ref())) {
                break;
            }
            last_j = j;
            x.fill(ZERO);
            x[(j, 0)] = ONE;
        }
        // Alternating test vector guards against the estimator's blind spots.
        let alt = Mat::<Complex64>::from_fn(n, 1, |i, _| {
            let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
            let denom = if n > 1 { (n - 1) as f64 } else { 1.0 };
            Complex64::new(sign * (1.0 + i as f64 / denom), 0.0)
        });
        let y = self.lu.solve(alt.as_ref());
        let alt_est = 2.0 * (0..n).map(|i| y[(i, 0)].norm()).sum::<f64>() / (3.0 * n as f64);
        est.max(alt_est)
    }
}

fn dot_re(a: MatRef<'_, Complex64>, b: MatRef<'_, Complex64>) -> f64 {
    (0..a.nrows()).map(|i| (a[(i, 0)].conj() * b[(i, 0)]).re).sum()
}

/// Operator 1-norm (largest absolute column sum).
pub fn norm1(a: MatRef<'_, Complex64>) -> f64 {
    (0..a.ncols())
        .map(|j| (0..a.nrows()).map(|i| a[(i, j)].norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

pub fn frobenius(a: MatRef<'_, Complex64>) -> f64 {
    a.norm_l2()
}

/// `|a - b|_F / |a|_F`; zero when both vanish.
pub fn rel_frobenius(a: MatRef<'_, Complex64>, b: MatRef<'_, Complex64>) -> f64 {
    assert_eq!((a.nrows(), a.ncols()), (b.nrows(), b.ncols()), "shape mismatch");
    let diff = (a - b).norm_l2();
    let base = a.norm_l2();
    if diff == 0.0 {
        0.0
    } else {
        diff / base
    }
}

pub fn max_abs_diff(a: MatRef<'_, Complex64>, b: MatRef<'_, Complex64>) -> f64 {
    assert_eq!((a.nrows(), a.ncols()), (b.nrows(), b.ncols()), "shape mismatch");
    let mut m = 0.0f64;
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            m = m.max((a[(i, j)] - b[(i, j)]).norm());
        }
    }
    m
}

/// Owned copy of a contiguous block.
pub fn block(a: MatRef<'_, Complex64>, rows: Range<usize>, cols: Range<usize>) -> CMat {
    a.submatrix(rows.start, cols.start, rows.len(), cols.len()).to_owned()
}

/// Owned copy of the rows/columns selected by index lists.
pub fn gather(a: MatRef<'_, Complex64>, rows: &[usize], cols: &[usize]) -> CMat {
    Mat::from_fn(rows.len(), cols.len(), |i, j| a[(rows[i], cols[j])])
}

pub fn gather_rows(a: MatRef<'_, Complex64>, rows: &[usize], cols: Range<usize>) -> CMat {
    Mat::from_fn(rows.len(), cols.len(), |i, j| a[(rows[i], cols.start + j)])
}

pub fn gather_cols(a: MatRef<'_, Complex64>, rows: Range<usize>, cols: &[usize]) -> CMat {
    Mat::from_fn(rows.len(), cols.len(), |i, j| a[(rows.start + i, cols[j])])
}

/// Inverse with a conditioning guard.
pub fn checked_inverse(a: MatRef<'_, Complex64>, what: &'static str) -> Result<CMat> {
    let (lu, _) = Lu::checked(a, what, RCOND_MIN)?;
    Ok(lu.inverse())
}

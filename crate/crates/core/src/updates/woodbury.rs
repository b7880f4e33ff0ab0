//! Woodbury updates for changes of `m` RIS diagonal entries.
//!
//! With `ΔW = U C V`, `C = diag(Δα^-1)` and `U = V^T` made of unit
//! vectors, every product with `U` or `V` is a row or column gather.

use faer::MatRef;
use num_complex::Complex64;

use super::RisDelta;
use crate::error::{Error, Result};
use crate::linalg::{self, CMat, Lu, RCOND_MIN};
use crate::oracle::ChannelMatrix;
use crate::reduction::ReducedSystem;
use crate::scenario::{Group, IndexMap, RisConfiguration};

/// Factorizes a Woodbury inner matrix `inner = C^-1 + K`. The condition
/// estimate is taken relative to `scale = |C^-1|_1 + |K|_1`, so that
/// cancellation between the two terms is caught even for `m = 1`.
pub(crate) fn checked_inner(inner: &CMat, scale: f64) -> Result<Lu> {
    let lu = Lu::new(inner.as_ref());
    let rcond = lu.rcond() * linalg::norm1(inner.as_ref()) / scale;
    if rcond.is_nan() || rcond <= RCOND_MIN {
        return Err(Error::UpdateSingular { rcond });
    }
    Ok(lu)
}

/// Factorized `C^-1 + V A^-1 U` for the selected indices.
fn inner_lu(a_inv: MatRef<'_, Complex64>, idx: &[usize], deltas: &[Complex64]) -> Result<Lu> {
    let mut inner = linalg::gather(a_inv, idx, idx);
    let scale = linalg::norm1(inner.as_ref()) + deltas.iter().map(|d| d.inv().norm()).fold(0.0, f64::max);
    for (k, d) in deltas.iter().enumerate() {
        inner[(k, k)] += d.inv();
    }
    checked_inner(&inner, scale)
}

/// `(A + U C V)^-1` from `A^-1`, for a square inverse of any size whose
/// index space contains the delta's indices.
pub fn woodbury_full(a_inv: &CMat, delta: &RisDelta) -> Result<CMat> {
    let (idx, deltas) = delta.effective();
    if idx.is_empty() {
        return Ok(a_inv.clone());
    }
    let n = a_inv.nrows();
    if let Some(&bad) = idx.iter().find(|&&i| i >= n) {
        return Err(Error::IndexOutOfRange { what: "RIS element", index: bad, len: n });
    }
    let lu = inner_lu(a_inv.as_ref(), &idx, &deltas)?;
    let cols = linalg::gather_cols(a_inv.as_ref(), 0..n, &idx);
    let rows = linalg::gather_rows(a_inv.as_ref(), &idx, 0..n);
    let x = lu.solve(rows.as_ref());
    Ok(a_inv - cols * x)
}

/// `[(R + U C V)^-1]_RT` from `R^-1`, touching only the `N_R x m` and
/// `m x N_T` gathers plus one `m x m` solve.
pub fn woodbury_rt_block(r_inv: &CMat, map: &IndexMap, delta: &RisDelta) -> Result<CMat> {
    let rx = map.range(Group::Rx);
    let tx = map.range(Group::Tx);
    let base = linalg::block(r_inv.as_ref(), rx.clone(), tx.clone());
    let (idx, deltas) = delta.effective();
    if idx.is_empty() {
        return Ok(base);
    }
    let lu = inner_lu(r_inv.as_ref(), &idx, &deltas)?;
    let left = linalg::gather_cols(r_inv.as_ref(), rx, &idx);
    let right = linalg::gather_rows(r_inv.as_ref(), &idx, tx);
    let x = lu.solve(right.as_ref());
    Ok(base - left * x)
}

/// Channel after applying `delta` to the RIS diagonal of a reduced system.
/// Uses the cached `R^-1` when present.
pub fn woodbury_reduced_channel(rs: &ReducedSystem, delta: &RisDelta) -> Result<ChannelMatrix> {
    let owned;
    let r_inv = match rs.r_inv() {
        Some(inv) => inv,
        None => {
            owned = linalg::checked_inverse(rs.r().as_ref(), "reduced matrix R")?;
            &owned
        }
    };
    let h = woodbury_rt_block(r_inv, rs.map(), delta)?;
    let cfg = if delta.effective().0.is_empty() {
        rs.cfg().clone()
    } else {
        RisConfiguration::Analog(Vec::new())
    };
    Ok(ChannelMatrix { h, f: rs.freq(), cfg })
}

use num_complex::Complex64;

use super::displacement::{displace_multi_reduced, Move};
use super::woodbury::woodbury_rt_block;
use super::RisDelta;
use crate::error::Result;
use crate::oracle::ChannelMatrix;
use crate::reduction::EigenPrecompute;
use crate::scenario::RisConfiguration;

/// Shift by `lambda` and apply `moves` through the eigen-shift form, then
/// apply `ris_delta` to the RT block. This order is the only one supported.
pub fn combined_update(
    pre: &EigenPrecompute,
    lambda: Complex64,
    moves: &[Move<'_>],
    ris_delta: &RisDelta,
) -> Result<ChannelMatrix> {
    let r_inv = displace_multi_reduced(pre, moves, lambda).map_err(|e| e.in_stage("shift and displacement"))?;
    let h = woodbury_rt_block(&r_inv, pre.map(), ris_delta).map_err(|e| e.in_stage("RIS update"))?;
    let cfg = if ris_delta.effective().0.is_empty() {
        pre.cfg().clone()
    } else {
        RisConfiguration::Analog(Vec::new())
    };
    Ok(ChannelMatrix { h, f: pre.freq(), cfg })
}

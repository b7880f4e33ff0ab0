//! Fast realization updates.
//!
//! - RIS reconfiguration: Woodbury update of `W^-1` or directly of the RT
//!   block of `R^-1`, with selector matrices realized as gathers.
//! - 1-bit RIS: plan against the nearer of two complementary baselines.
//! - Displacement: rank-2 Woodbury in the canonical basis, or substitution
//!   of cached Σ-rows/Ψ-columns in the reduced eigen-shift representation.
//! - Combinations of the above.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::physics::{green_function, Position};
use crate::scenario::{Group, IndexMap};

mod chained;
mod combined;
mod displacement;
mod one_bit;
mod woodbury;

pub use chained::{ChainedWoodbury, DEFAULT_REBASELINE_EVERY};
pub use combined::combined_update;
pub use displacement::{displace_full, displace_multi_reduced, displace_reduced, displace_reduced_uncached, Move};
pub use one_bit::{one_bit_plan, Baseline, OneBitEngine, OneBitPlan};
pub use woodbury::{woodbury_full, woodbury_reduced_channel, woodbury_rt_block};

/// Changes of the inverse polarizabilities of `m` RIS elements.
#[derive(Clone, Debug, PartialEq)]
pub struct RisDelta {
    indices: Vec<usize>,
    delta_alpha_inv: Vec<Complex64>,
}

impl RisDelta {
    /// `indices` are canonical dipole indices inside the RIS range,
    /// strictly increasing.
    pub fn new(map: &IndexMap, indices: Vec<usize>, delta_alpha_inv: Vec<Complex64>) -> Result<Self> {
        if indices.len() != delta_alpha_inv.len() {
            return Err(Error::LengthMismatch {
                what: "RIS delta values",
                expected: indices.len(),
                got: delta_alpha_inv.len(),
            });
        }
        let ris = map.range(Group::Ris);
        for (k, &i) in indices.iter().enumerate() {
            if !ris.contains(&i) {
                return Err(Error::IndexOutOfRange { what: "RIS element", index: i, len: ris.end });
            }
            if k > 0 && indices[k - 1] >= i {
                return Err(Error::Domain("RIS delta indices must be strictly increasing".into()));
            }
        }
        if let Some(k) = delta_alpha_inv.iter().position(|d| !d.re.is_finite() || !d.im.is_finite()) {
            return Err(Error::Domain(format!("RIS delta entry {k} is not finite")));
        }
        Ok(Self { indices, delta_alpha_inv })
    }

    pub fn empty() -> Self {
        Self { indices: Vec::new(), delta_alpha_inv: Vec::new() }
    }

    /// Delta taking RIS diagonal `from` to `to`; unchanged entries are left out.
    pub fn between(map: &IndexMap, from: &[Complex64], to: &[Complex64]) -> Result<Self> {
        let n_ris = map.n_ris();
        for (what, v) in [("RIS diagonal (from)", from), ("RIS diagonal (to)", to)] {
            if v.len() != n_ris {
                return Err(Error::LengthMismatch { what, expected: n_ris, got: v.len() });
            }
        }
        let base = map.range(Group::Ris).start;
        let (indices, deltas) = from
            .iter()
            .zip(to)
            .enumerate()
            .filter(|(_, (a, b))| a != b)
            .map(|(k, (a, b))| (base + k, b - a))
            .unzip();
        Self::new(map, indices, deltas)
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn values(&self) -> &[Complex64] {
        &self.delta_alpha_inv
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    /// Entries with a nonzero change; `C` must be invertible.
    pub(crate) fn effective(&self) -> (Vec<usize>, Vec<Complex64>) {
        self.indices
            .iter()
            .zip(&self.delta_alpha_inv)
            .filter(|(_, d)| **d != Complex64::new(0.0, 0.0))
            .map(|(&i, &d)| (i, d))
            .unzip()
    }
}

/// Change of the Green's functions between dipole `j` and every other
/// dipole when `j` moves to `new_position`.
#[derive(Clone, Debug, PartialEq)]
pub struct DisplacementDelta {
    dipole_index: usize,
    new_position: Position,
    /// `G(new, r_i) - G(old, r_i)`, zero at `i = j`.
    delta_g: Vec<Complex64>,
}

impl DisplacementDelta {
    /// Computes the deltas from canonical-order dipole positions at
    /// wavenumber `k`.
    pub fn compute(
        positions: &[Position],
        k: crate::physics::Wavenumber,
        dipole_index: usize,
        new_position: Position,
    ) -> Result<Self> {
        let n = positions.len();
        if dipole_index >= n {
            return Err(Error::IndexOutOfRange { what: "dipole", index: dipole_index, len: n });
        }
        let old = positions[dipole_index];
        let mut delta_g = vec![Complex64::new(0.0, 0.0); n];
        if new_position == old {
            return Ok(Self { dipole_index, new_position, delta_g });
        }
        for (i, p) in positions.iter().enumerate() {
            if i == dipole_index {
                continue;
            }
            if *p == new_position {
                return Err(Error::Collision { position: 0, x: new_position.x, y: new_position.y, other: i });
            }
            delta_g[i] = green_function(&new_position, p, k)? - green_function(&old, p, k)?;
        }
        Ok(Self { dipole_index, new_position, delta_g })
    }

    pub fn dipole_index(&self) -> usize {
        self.dipole_index
    }

    pub fn new_position(&self) -> Position {
        self.new_position
    }

    pub fn delta_g(&self) -> &[Complex64] {
        &self.delta_g
    }
}

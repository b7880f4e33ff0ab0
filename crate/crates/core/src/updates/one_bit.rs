//! 1-bit RIS sweeps against two complementary cached baselines.

use num_complex::Complex64;

use super::woodbury::woodbury_rt_block;
use super::RisDelta;
use crate::error::{Error, Result};
use crate::interaction::InteractionMatrix;
use crate::oracle::ChannelMatrix;
use crate::physics::inverse_polarizability;
use crate::reduction::ReducedSystem;
use crate::scenario::{Group, IndexMap, RisConfiguration, Scenario};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Baseline {
    Given,
    Complement,
}

#[derive(Clone, Debug, PartialEq)]
pub struct OneBitPlan {
    pub baseline: Baseline,
    pub delta: RisDelta,
}

/// Per-element inverse polarizabilities `(state 0, state 1)` at `f`.
fn state_table(sc: &Scenario, f: f64) -> Result<Vec<(Complex64, Complex64)>> {
    sc.ris
        .iter()
        .map(|el| Ok((inverse_polarizability(f, &el.state(false))?, inverse_polarizability(f, &el.state(true))?)))
        .collect()
}

fn plan_with_table(map: &IndexMap, table: &[(Complex64, Complex64)], baseline: &[bool], target: &[bool]) -> Result<OneBitPlan> {
    let n = table.len();
    for (what, v) in [("baseline bits", baseline), ("target bits", target)] {
        if v.len() != n {
            return Err(Error::LengthMismatch { what, expected: n, got: v.len() });
        }
    }
    let differing = baseline.iter().zip(target).filter(|(a, b)| a != b).count();
    // Ties stay on the given baseline.
    let (choice, flip) = if 2 * differing > n {
        (Baseline::Complement, true)
    } else {
        (Baseline::Given, false)
    };
    let base = map.range(Group::Ris).start;
    let mut indices = Vec::new();
    let mut deltas = Vec::new();
    for (k, (&b, &t)) in baseline.iter().zip(target).enumerate() {
        let from = b ^ flip;
        if from != t {
            let (a0, a1) = table[k];
            let (old, new) = if from { (a1, a0) } else { (a0, a1) };
            indices.push(base + k);
            deltas.push(new - old);
        }
    }
    Ok(OneBitPlan { baseline: choice, delta: RisDelta::new(map, indices, deltas)? })
}

/// Chooses whichever of `baseline` and its complement is closer to
/// `target` in Hamming distance; the flip count is at most `N_S / 2`.
pub fn one_bit_plan(sc: &Scenario, map: &IndexMap, f: f64, baseline: &[bool], target: &[bool]) -> Result<OneBitPlan> {
    plan_with_table(map, &state_table(sc, f)?, baseline, target)
}

/// Cached `R^-1` for a 1-bit baseline and its complement at one frequency.
#[derive(Clone, Debug)]
pub struct OneBitEngine {
    baseline: Vec<bool>,
    given: ReducedSystem,
    complement: ReducedSystem,
    table: Vec<(Complex64, Complex64)>,
}

impl OneBitEngine {
    /// Reduces and inverts both baselines; both are built from scratch so
    /// neither inherits update error from the other.
    pub fn new(sc: &Scenario, map: &IndexMap, f: f64, baseline: &[bool]) -> Result<Self> {
        let cfg = RisConfiguration::Bits(baseline.to_vec());
        let comp = RisConfiguration::Bits(baseline.iter().map(|b| !b).collect());
        let wm = InteractionMatrix::assemble(sc, map, f, &cfg)?;
        let given = ReducedSystem::reduce(&wm)?.with_inverse()?;
        let wc = InteractionMatrix::assemble(sc, map, f, &comp)?;
        let complement = ReducedSystem::reduce(&wc)?.with_inverse()?;
        Ok(Self { baseline: baseline.to_vec(), given, complement, table: state_table(sc, f)? })
    }

    pub fn baseline(&self) -> &[bool] {
        &self.baseline
    }

    pub fn freq(&self) -> f64 {
        self.given.freq()
    }

    pub fn plan(&self, target: &[bool]) -> Result<OneBitPlan> {
        plan_with_table(self.given.map(), &self.table, &self.baseline, target)
    }

    /// Channel for `target` via one reduced Woodbury update.
    pub fn channel(&self, target: &[bool]) -> Result<ChannelMatrix> {
        let plan = self.plan(target)?;
        let rs = match plan.baseline {
            Baseline::Given => &self.given,
            Baseline::Complement => &self.complement,
        };
        let r_inv = rs.r_inv().expect("baselines are built with inverses");
        Ok(ChannelMatrix {
            h: woodbury_rt_block(r_inv, rs.map(), &plan.delta)?,
            f: rs.freq(),
            cfg: RisConfiguration::Bits(target.to_vec()),
        })
    }
}

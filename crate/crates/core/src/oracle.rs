//! Brute-force reference: the channel as the RT block of `W^-1`, solved in
//! the canonical basis.

use faer::Mat;

use crate::error::{Error, Result};
use crate::interaction::InteractionMatrix;
use crate::linalg::{self, CMat, Lu, ONE, RCOND_MIN, RCOND_WARN};
use crate::scenario::{Group, IndexMap, RisConfiguration};

/// End-to-end channel `H = [W^-1]_RT` (unit proportionality constant).
#[derive(Clone, Debug, PartialEq)]
pub struct ChannelMatrix {
    /// `N_R x N_T`.
    pub h: CMat,
    /// Frequency, GHz.
    pub f: f64,
    pub cfg: RisConfiguration,
}

impl ChannelMatrix {
    pub fn n_rx(&self) -> usize {
        self.h.nrows()
    }

    pub fn n_tx(&self) -> usize {
        self.h.ncols()
    }

    pub fn with_cfg(mut self, cfg: RisConfiguration) -> Self {
        self.cfg = cfg;
        self
    }

    /// Slices the RT block out of an already-inverted reduced or full matrix.
    pub fn from_inverse(inv: &CMat, map: &IndexMap, f: f64, cfg: RisConfiguration) -> Self {
        Self {
            h: linalg::block(inv.as_ref(), map.range(Group::Rx), map.range(Group::Tx)),
            f,
            cfg,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ChannelDiff {
    pub rel_frobenius: f64,
    pub max_abs: f64,
}

/// `|a - b|_F / |a|_F` (zero if both vanish) and the largest entrywise gap.
pub fn compare_channels(a: &ChannelMatrix, b: &ChannelMatrix) -> Result<ChannelDiff> {
    if a.h.shape() != b.h.shape() {
        return Err(Error::ShapeMismatch(format!(
            "channels are {:?} and {:?}",
            a.h.shape(),
            b.h.shape()
        )));
    }
    Ok(ChannelDiff {
        rel_frobenius: linalg::rel_frobenius(a.h.as_ref(), b.h.as_ref()),
        max_abs: linalg::max_abs_diff(a.h.as_ref(), b.h.as_ref()),
    })
}

/// Selector columns `E_T`: the identity columns of the T group.
pub(crate) fn tx_selector(map: &IndexMap, rows: usize) -> CMat {
    let tx = map.range(Group::Tx);
    let mut e = Mat::zeros(rows, tx.len());
    for (c, i) in tx.enumerate() {
        e[(i, c)] = ONE;
    }
    e
}

/// Solve `A X = E_T` and keep the R rows.
pub(crate) fn rt_block_by_solve(lu: &Lu, map: &IndexMap) -> CMat {
    let x = lu.solve(tx_selector(map, lu.dim()).as_ref());
    let rx = map.range(Group::Rx);
    linalg::block(x.as_ref(), rx, 0..x.ncols())
}

/// Channel plus the reciprocal condition estimate of `W`.
pub fn channel_full_checked(wm: &InteractionMatrix) -> Result<(ChannelMatrix, f64)> {
    let (lu, rcond) = Lu::checked(wm.matrix().as_ref(), "interaction matrix W", RCOND_MIN)?;
    let h = rt_block_by_solve(&lu, wm.map());
    Ok((
        ChannelMatrix {
            h,
            f: wm.freq(),
            cfg: wm.cfg().clone(),
        },
        rcond,
    ))
}

pub fn channel_full(wm: &InteractionMatrix) -> Result<ChannelMatrix> {
    channel_full_checked(wm).map(|(h, _)| h)
}

/// True if an rcond reported by [`channel_full_checked`] deserves a warning.
pub fn is_poorly_conditioned(rcond: f64) -> bool {
    rcond < RCOND_WARN
}

/// Full `N x N` inverse of `W`.
pub fn inverse_full(wm: &InteractionMatrix) -> Result<CMat> {
    linalg::checked_inverse(wm.matrix().as_ref(), "interaction matrix W")
}

#[cfg(test)]
mod tests {
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    use num_complex::Complex64;

    use super::*;
    use crate::physics::{green_function, inverse_polarizability, DipoleParams, Wavenumber};
    use crate::scenario::{random_scenario, FreqGrid, RandomScenarioSpec, Scenario};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn pair() -> Scenario {
        Scenario {
            freq_grid: FreqGrid::single(2.4),
            tx: vec![DipoleParams::new(0.0, 0.0, 2.4, 0.5, 0.5)],
            rx: vec![DipoleParams::new(0.4, 0.2, 2.3, 0.9, 0.3)],
            ris: vec![],
            env: vec![],
            dynamic_env: vec![],
        }
    }

    #[test]
    fn closed_form_two_by_two() {
        let sc = pair();
        let map = sc.build_index_map().unwrap();
        let wm = InteractionMatrix::assemble(&sc, &map, 2.4, &RisConfiguration::zeros(0)).unwrap();
        let h = channel_full(&wm).unwrap();
        let a1 = inverse_polarizability(2.4, &sc.tx[0]).unwrap();
        let a2 = inverse_polarizability(2.4, &sc.rx[0]).unwrap();
        let g = green_function(&sc.tx[0].pos, &sc.rx[0].pos, Wavenumber::from_ghz(2.4).unwrap()).unwrap();
        let expect = g / (a1 * a2 - g * g);
        assert!((h.h[(0, 0)] - expect).norm() <= 1e-14 * expect.norm());
    }

    #[test]
    fn uncoupled_gives_zero_channel() {
        let spec = RandomScenarioSpec { n_tx: 2, n_rx: 2, n_env: 5, ..Default::default() };
        let sc = random_scenario(&spec, 3);
        let map = sc.build_index_map().unwrap();
        let wm = InteractionMatrix::assemble(&sc, &map, 2.4, &RisConfiguration::zeros(4)).unwrap();
        let n = map.n();
        let diag = Mat::from_fn(n, n, |i, j| if i == j { wm.matrix()[(i, i)] } else { c(0.0, 0.0) });
        let wd = InteractionMatrix::from_parts(diag, map, 2.4, wm.cfg().clone(), wm.positions().to_vec()).unwrap();
        let h = channel_full(&wd).unwrap();
        assert!(h.h.norm_l2() == 0.0);
    }

    #[test]
    fn compare_examples() {
        let mut rng = StdRng::seed_from_u64(1);
        let a = ChannelMatrix {
            h: Mat::from_fn(3, 2, |_, _| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))),
            f: 2.4,
            cfg: RisConfiguration::zeros(0),
        };
        let d = compare_channels(&a, &a).unwrap();
        assert_eq!((d.rel_frobenius, d.max_abs), (0.0, 0.0));

        let b = ChannelMatrix { h: &a.h * faer::Scale(c(2.0, 0.0)), ..a.clone() };
        assert!((compare_channels(&a, &b).unwrap().rel_frobenius - 1.0).abs() < 1e-15);

        let pert = Mat::from_fn(3, 2, |i, j| c(i as f64 - 1.0, 0.5 * j as f64));
        let eps = 1e-6;
        let b = ChannelMatrix { h: &a.h + &pert * faer::Scale(c(eps, 0.0)), ..a.clone() };
        let expect = eps * pert.norm_l2() / a.h.norm_l2();
        let got = compare_channels(&a, &b).unwrap().rel_frobenius;
        assert!((got - expect).abs() < 1e-9 * expect);

        let wrong = ChannelMatrix { h: Mat::zeros(2, 2), ..a.clone() };
        assert!(compare_channels(&a, &wrong).is_err());
    }

    #[test]
    fn reciprocity_swapping_roles_transposes() {
        let spec = RandomScenarioSpec { n_tx: 2, n_rx: 3, n_ris: 3, n_env: 30, ..Default::default() };
        let sc = random_scenario(&spec, 21);
        let swapped = Scenario { tx: sc.rx.clone(), rx: sc.tx.clone(), ..sc.clone() };
        let cfg = RisConfiguration::parse_bits("101").unwrap();
        let h = channel_full(&InteractionMatrix::assemble(&sc, &sc.build_index_map().unwrap(), 2.4, &cfg).unwrap()).unwrap();
        let hs = channel_full(&InteractionMatrix::assemble(&swapped, &swapped.build_index_map().unwrap(), 2.4, &cfg).unwrap()).unwrap();
        let ht = hs.h.transpose().to_owned();
        assert!(linalg::rel_frobenius(h.h.as_ref(), ht.as_ref()) < 1e-10);
    }

    #[test]
    fn deterministic_and_singular() {
        let sc = random_scenario(&RandomScenarioSpec::default(), 5);
        let map = sc.build_index_map().unwrap();
        let wm = InteractionMatrix::assemble(&sc, &map, 2.4, &RisConfiguration::zeros(4)).unwrap();
        assert_eq!(channel_full(&wm).unwrap(), channel_full(&wm).unwrap());
        let n = map.n();
        let zero = InteractionMatrix::from_parts(Mat::zeros(n, n), map, 2.4, wm.cfg().clone(), wm.positions().to_vec()).unwrap();
        assert!(matches!(channel_full(&zero), Err(Error::Conditioning { .. })));
    }
}

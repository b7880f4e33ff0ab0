//! channel, sweep-config, sweep-lambda and trajectory.
//!
//! Frequencies (and realizations within a frequency) are computed on the
//! rayon pool; results are collected in order before writing.

use num_complex::Complex64;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use rayon::prelude::*;
use risfad::reduction::EigenBasis;
use risfad::updates::displace_reduced;
use risfad::{
    channel_full, ChannelMatrix, Group, IndexMap, InteractionMatrix, OneBitEngine, Position, ReducedSystem,
    RisConfiguration, Scenario,
};

use crate::error::{CliError, CliResult};
use crate::io::Realization;

/// Largest RIS for which `--exhaustive` is accepted.
pub const MAX_EXHAUSTIVE_RIS: usize = 20;

/// Global switches that affect how channels are computed.
#[derive(Clone, Copy, Debug, Default)]
pub struct Mode {
    pub scratch: bool,
    pub oracle: bool,
    pub seed: u64,
}

pub type Sweep = Vec<Vec<Realization>>;

fn realization(index: usize, h: ChannelMatrix) -> Realization {
    Realization { index, position: None, h }
}

/// Full re-assembly and canonical-basis solve.
fn scratch_channel(sc: &Scenario, map: &IndexMap, f: f64, cfg: &RisConfiguration) -> CliResult<ChannelMatrix> {
    Ok(channel_full(&InteractionMatrix::assemble(sc, map, f, cfg)?)?)
}

pub fn channel(sc: &Scenario, freqs: &[f64], bits: &[bool], mode: Mode) -> CliResult<Sweep> {
    let map = sc.build_index_map()?;
    let cfg = RisConfiguration::Bits(bits.to_vec());
    freqs
        .par_iter()
        .map(|&f| {
            let h = if mode.oracle || mode.scratch {
                scratch_channel(sc, &map, f, &cfg)?
            } else {
                let wm = InteractionMatrix::assemble(sc, &map, f, &cfg)?;
                ReducedSystem::reduce(&wm)?.with_inverse()?.channel()?
            };
            Ok(vec![realization(0, h)])
        })
        .collect()
}

/// The configurations requested by sweep-config, in output order.
pub fn sweep_configs(
    n_ris: usize,
    file: Option<Vec<Vec<bool>>>,
    random: Option<usize>,
    exhaustive: bool,
    seed: u64,
) -> CliResult<Vec<Vec<bool>>> {
    match (file, random, exhaustive) {
        (Some(list), None, false) => Ok(list),
        (None, Some(n), false) => {
            let mut rng = StdRng::seed_from_u64(seed);
            Ok((0..n).map(|_| (0..n_ris).map(|_| rng.random_bool(0.5)).collect()).collect())
        }
        (None, None, true) => {
            if n_ris > MAX_EXHAUSTIVE_RIS {
                return Err(CliError::Input(format!(
                    "--exhaustive supports at most {MAX_EXHAUSTIVE_RIS} RIS elements, scenario has {n_ris}"
                )));
            }
            Ok((0..1u64 << n_ris).map(|t| (0..n_ris).map(|i| t >> i & 1 == 1).collect()).collect())
        }
        _ => Err(CliError::Input("give exactly one of --configs, --random or --exhaustive".into())),
    }
}

pub fn sweep_config(sc: &Scenario, freqs: &[f64], baseline: &[bool], configs: &[Vec<bool>], mode: Mode) -> CliResult<Sweep> {
    if sc.ris.is_empty() {
        return Err(CliError::Input("sweep-config needs at least one RIS element".into()));
    }
    let map = sc.build_index_map()?;
    freqs
        .par_iter()
        .map(|&f| {
            if mode.scratch || mode.oracle {
                return configs
                    .par_iter()
                    .enumerate()
                    .map(|(i, c)| Ok(realization(i, scratch_channel(sc, &map, f, &RisConfiguration::Bits(c.clone()))?)))
                    .collect();
            }
            let engine = OneBitEngine::new(sc, &map, f, baseline)?;
            configs
                .par_iter()
                .enumerate()
                .map(|(i, c)| Ok(realization(i, engine.channel(c)?)))
                .collect()
        })
        .collect()
}

/// `W` with `lambda` subtracted from every secondary diagonal entry.
pub fn shifted_interaction(wm: &InteractionMatrix, lambda: Complex64) -> CliResult<InteractionMatrix> {
    let map = wm.map();
    let mut w = wm.matrix().clone();
    for i in map.range(Group::Secondary) {
        w[(i, i)] -= lambda;
    }
    Ok(InteractionMatrix::from_parts(w, map.clone(), wm.freq(), wm.cfg().clone(), wm.positions().to_vec())?)
}

pub fn sweep_lambda(sc: &Scenario, freqs: &[f64], bits: &[bool], lambdas: &[Complex64], mode: Mode) -> CliResult<Sweep> {
    if lambdas.is_empty() {
        return Err(CliError::Input("no shifts given (use --lambda or --lambda-file)".into()));
    }
    let map = sc.build_index_map()?;
    if map.s() == 0 {
        return Err(CliError::Input("sweep-lambda needs at least one static environment dipole".into()));
    }
    let cfg = RisConfiguration::Bits(bits.to_vec());
    freqs
        .par_iter()
        .map(|&f| {
            let wm = InteractionMatrix::assemble(sc, &map, f, &cfg)?;
            if mode.scratch || mode.oracle {
                return lambdas
                    .par_iter()
                    .enumerate()
                    .map(|(i, &l)| Ok(realization(i, channel_full(&shifted_interaction(&wm, l)?)?)))
                    .collect();
            }
            let pre = EigenBasis::new(&wm)?.finish();
            lambdas
                .par_iter()
                .enumerate()
                .map(|(i, &l)| {
                    let r_inv = pre.shifted_reduce(l)?;
                    Ok(realization(i, ChannelMatrix::from_inverse(&r_inv, &map, f, cfg.clone())))
                })
                .collect()
        })
        .collect()
}

/// Canonical index of a `group:index` selector.
pub fn resolve_dipole(sc: &Scenario, map: &IndexMap, selector: &str) -> CliResult<usize> {
    let bad = || CliError::Input(format!("invalid dipole selector {selector:?} (expected tx:I, rx:I, ris:I or env:I)"));
    let (group, idx) = selector.split_once(':').ok_or_else(bad)?;
    let i: usize = idx.trim().parse().map_err(|_| bad())?;
    let (g, len) = match group.trim() {
        "tx" => (Group::Tx, sc.tx.len()),
        "rx" => (Group::Rx, sc.rx.len()),
        "ris" => (Group::Ris, sc.ris.len()),
        "env" => {
            let global = map
                .env_global(i)
                .ok_or_else(|| CliError::Input(format!("env index {i} out of range ({} env dipoles)", sc.env.len())))?;
            if !map.is_primary(global) {
                return Err(CliError::Input(format!("env[{i}] is static; list it in dynamic_env to move it")));
            }
            return Ok(global);
        }
        _ => return Err(bad()),
    };
    if i >= len {
        return Err(CliError::Input(format!("{group} index {i} out of range ({len} dipoles)")));
    }
    Ok(map.range(g).start + i)
}

pub fn trajectory(
    sc: &Scenario,
    freqs: &[f64],
    bits: &[bool],
    selector: &str,
    positions: &[Position],
    mode: Mode,
) -> CliResult<Sweep> {
    let map = sc.build_index_map()?;
    let dipole = resolve_dipole(sc, &map, selector)?;
    let cfg = RisConfiguration::Bits(bits.to_vec());
    let tag = |k: usize, h: ChannelMatrix| Realization { index: k, position: Some(positions[k]), h };
    freqs
        .par_iter()
        .map(|&f| {
            let wm = InteractionMatrix::assemble(sc, &map, f, &cfg)?;
            if mode.scratch || mode.oracle || map.s() == 0 {
                return positions
                    .par_iter()
                    .enumerate()
                    .map(|(k, &p)| {
                        let moved = sc.with_position(&map, dipole, p)?;
                        check_collision(&wm, dipole, k, p)?;
                        Ok(tag(k, channel_full(&InteractionMatrix::assemble(&moved, &map, f, &cfg)?)?))
                    })
                    .collect();
            }
            let basis = EigenBasis::new(&wm)?;
            let cache = basis.trajectory_cache(dipole, positions, &[])?;
            let pre = basis.finish();
            let zero = Complex64::new(0.0, 0.0);
            (0..positions.len())
                .into_par_iter()
                .map(|k| {
                    let r_inv = displace_reduced(&pre, &cache, k, zero)?;
                    Ok(tag(k, ChannelMatrix::from_inverse(&r_inv, &map, f, cfg.clone())))
                })
                .collect()
        })
        .collect()
}

fn check_collision(wm: &InteractionMatrix, dipole: usize, k: usize, p: Position) -> CliResult<()> {
    match wm.positions().iter().enumerate().find(|(i, q)| *i != dipole && **q == p) {
        Some((other, _)) => Err(risfad::Error::Collision { position: k, x: p.x, y: p.y, other }.into()),
        None => Ok(()),
    }
}

#[cfg(test)]
mod tests {
    use risfad::linalg;
    use risfad::scenario::{random_scenario, RandomScenarioSpec};

    use super::*;

    fn small() -> Scenario {
        let mut spec = RandomScenarioSpec { n_tx: 2, n_rx: 2, n_ris: 4, n_env: 30, ..Default::default() };
        spec.freq_grid = risfad::FreqGrid { start_ghz: 2.3, stop_ghz: 2.5, n_points: 3 };
        random_scenario(&spec, 3)
    }

    fn max_rel(a: &Sweep, b: &Sweep) -> f64 {
        a.iter()
            .flatten()
            .zip(b.iter().flatten())
            .map(|(x, y)| linalg::rel_frobenius(y.h.h.as_ref(), x.h.h.as_ref()))
            .fold(0.0, f64::max)
    }

    #[test]
    fn config_sweep_matches_scratch_and_channel() {
        let sc = small();
        let freqs = sc.freq_grid.points();
        let configs = sweep_configs(4, None, None, true, 0).unwrap();
        assert_eq!(configs.len(), 16);
        let base = vec![false; 4];
        let fast = sweep_config(&sc, &freqs, &base, &configs, Mode::default()).unwrap();
        let slow = sweep_config(&sc, &freqs, &base, &configs, Mode { scratch: true, ..Default::default() }).unwrap();
        assert!(max_rel(&fast, &slow) <= 1e-9);
        let ch = channel(&sc, &freqs, &base, Mode::default()).unwrap();
        for (a, b) in ch.iter().zip(&fast) {
            assert_eq!(a[0].h.h, b[0].h.h);
        }
    }

    #[test]
    fn lambda_sweep_matches_scratch() {
        let sc = small();
        let freqs = sc.freq_grid.points();
        let lambdas: Vec<Complex64> = (0..5).map(|i| Complex64::new(0.05 * i as f64 - 0.1, 0.02 * i as f64)).collect();
        let bits = vec![true, false, true, false];
        let fast = sweep_lambda(&sc, &freqs, &bits, &lambdas, Mode::default()).unwrap();
        let slow = sweep_lambda(&sc, &freqs, &bits, &lambdas, Mode { scratch: true, ..Default::default() }).unwrap();
        assert!(max_rel(&fast, &slow) <= 1e-8);
    }

    #[test]
    fn trajectory_matches_scratch_and_names_collisions() {
        let sc = small();
        let freqs = vec![2.4];
        let bits = vec![false; 4];
        let map = sc.build_index_map().unwrap();
        let start = sc.rx[1].pos;
        let path: Vec<Position> = (0..6).map(|k| Position { x: start.x + 0.03 * k as f64, y: start.y - 0.01 * k as f64 }).collect();
        let fast = trajectory(&sc, &freqs, &bits, "rx:1", &path, Mode::default()).unwrap();
        let slow = trajectory(&sc, &freqs, &bits, "rx:1", &path, Mode { scratch: true, ..Default::default() }).unwrap();
        assert!(max_rel(&fast, &slow) <= 1e-8);
        assert_eq!(resolve_dipole(&sc, &map, "rx:1").unwrap(), 3);

        let mut bad = path.clone();
        bad[3] = sc.env[0].pos;
        match trajectory(&sc, &freqs, &bits, "rx:1", &bad, Mode::default()) {
            Err(CliError::Core(risfad::Error::Collision { position: 3, .. })) => {}
            other => panic!("expected collision at index 3, got {:?}", other.err()),
        }
        assert!(resolve_dipole(&sc, &map, "env:0").is_err());
        assert!(resolve_dipole(&sc, &map, "rx:9").is_err());
        assert!(resolve_dipole(&sc, &map, "foo").is_err());
    }
}

//! End-to-end equivalence checks: every fast path against full re-assembly
//! and a canonical-basis solve, on seeded random realizations of one
//! scenario.

use std::fmt::Write as _;

use num_complex::Complex64;
use rand::rngs::StdRng;
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use risfad::linalg::{self, CMat};
use risfad::oracle::inverse_full;
use risfad::reduction::EigenBasis;
use risfad::updates::{combined_update, displace_full, displace_multi_reduced, displace_reduced, DisplacementDelta, Move, RisDelta};
use risfad::{
    channel_full, channel_from_reduced, woodbury_reduced_channel, ChannelMatrix, IndexMap, InteractionMatrix,
    OneBitEngine, Position, ReducedSystem, RisConfiguration, Scenario,
};

use crate::commands::shifted_interaction;
use crate::error::CliResult;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Path {
    Reduced,
    Woodbury,
    OneBit,
    Shift,
    DisplaceFull,
    DisplaceReduced,
    DisplaceMulti,
    Combined,
}

const PATHS: [(Path, &str, f64); 8] = [
    (Path::Reduced, "reduced", 1e-10),
    (Path::Woodbury, "woodbury", 1e-9),
    (Path::OneBit, "one-bit", 1e-9),
    (Path::Shift, "shift", 1e-8),
    (Path::DisplaceFull, "displace-full", 1e-9),
    (Path::DisplaceReduced, "displace-reduced", 1e-8),
    (Path::DisplaceMulti, "displace-multi", 1e-8),
    (Path::Combined, "combined", 1e-8),
];

#[derive(Clone, Debug, PartialEq)]
pub struct PathSummary {
    pub name: &'static str,
    pub tolerance: f64,
    pub instances: usize,
    pub worst: f64,
    pub worst_seed: Option<u64>,
    /// Instance seeds whose error exceeded the tolerance.
    pub failures: Vec<u64>,
    pub skipped: Option<String>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ValidateReport {
    pub paths: Vec<PathSummary>,
}

impl ValidateReport {
    pub fn passed(&self) -> bool {
        self.paths.iter().all(|p| p.failures.is_empty())
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        for p in &self.paths {
            match &p.skipped {
                Some(reason) => writeln!(out, "{:<17} skipped: {reason}", p.name),
                None => writeln!(
                    out,
                    "{:<17} {} worst {:.3e} (tol {:.0e}) over {} instances{}",
                    p.name,
                    if p.failures.is_empty() { "PASS" } else { "FAIL" },
                    p.worst,
                    p.tolerance,
                    p.instances,
                    if p.failures.is_empty() {
                        String::new()
                    } else {
                        format!("; failing seeds {:?}", p.failures)
                    }
                ),
            }
            .expect("writing to a String");
        }
        out
    }
}

#[derive(Clone, Debug)]
pub struct ValidateOptions {
    pub instances: usize,
    pub seed: u64,
    pub tolerance: Option<f64>,
    pub inject_fault: Option<f64>,
}

struct Instance<'a> {
    sc: &'a Scenario,
    map: &'a IndexMap,
    rng: StdRng,
    f: f64,
}

impl Instance<'_> {
    fn bits(&mut self) -> Vec<bool> {
        (0..self.sc.ris.len()).map(|_| self.rng.random_bool(0.5)).collect()
    }

    fn wm(&self, sc: &Scenario, cfg: &RisConfiguration) -> CliResult<InteractionMatrix> {
        Ok(InteractionMatrix::assemble(sc, self.map, self.f, cfg)?)
    }

    fn lambda(&mut self) -> Complex64 {
        Complex64::new(self.rng.random_range(-0.2..0.2), self.rng.random_range(-0.1..0.2))
    }

    /// A free position within 20 cm of dipole `j`.
    fn nearby(&mut self, wm: &InteractionMatrix, j: usize, taken: &[Position]) -> Position {
        let o = wm.positions()[j];
        loop {
            let p = Position { x: o.x + self.rng.random_range(-0.2..0.2), y: o.y + self.rng.random_range(-0.2..0.2) };
            if wm.positions().iter().chain(taken).all(|q| q.distance(&p) > 1e-3) {
                return p;
            }
        }
    }

    fn primary(&mut self) -> usize {
        self.rng.random_range(0..self.map.p())
    }
}

fn rel(fast: &ChannelMatrix, oracle: &ChannelMatrix) -> f64 {
    linalg::rel_frobenius(oracle.h.as_ref(), fast.h.as_ref())
}

/// Returns `(fast, oracle)` for one instance of `path`.
fn check(path: Path, it: &mut Instance<'_>) -> CliResult<(ChannelMatrix, ChannelMatrix)> {
    let (sc, map, f) = (it.sc, it.map, it.f);
    let base_bits = it.bits();
    let base = RisConfiguration::Bits(base_bits.clone());
    let wm = it.wm(sc, &base)?;
    Ok(match path {
        Path::Reduced => (channel_from_reduced(&ReducedSystem::reduce(&wm)?)?, channel_full(&wm)?),
        Path::Woodbury => {
            let target = RisConfiguration::Bits(it.bits());
            let target_wm = wm.with_configuration(sc, &target)?;
            let delta = RisDelta::between(map, &wm.ris_diagonal(), &target_wm.ris_diagonal())?;
            let rs = ReducedSystem::reduce(&wm)?.with_inverse()?;
            (woodbury_reduced_channel(&rs, &delta)?, channel_full(&target_wm)?)
        }
        Path::OneBit => {
            let target = it.bits();
            let engine = OneBitEngine::new(sc, map, f, &base_bits)?;
            (engine.channel(&target)?, channel_full(&it.wm(sc, &RisConfiguration::Bits(target))?)?)
        }
        Path::Shift => {
            let lambda = it.lambda();
            let pre = EigenBasis::new(&wm)?.finish();
            let fast = ChannelMatrix::from_inverse(&pre.shifted_reduce(lambda)?, map, f, base.clone());
            (fast, channel_full(&shifted_interaction(&wm, lambda)?)?)
        }
        Path::DisplaceFull => {
            let j = it.rng.random_range(0..map.n());
            let pos = it.nearby(&wm, j, &[]);
            let delta = DisplacementDelta::compute(wm.positions(), wm.wavenumber(), j, pos)?;
            let inv = displace_full(&inverse_full(&wm)?, &delta)?;
            let moved = sc.with_position(map, j, pos)?;
            (ChannelMatrix::from_inverse(&inv, map, f, base.clone()), channel_full(&it.wm(&moved, &base)?)?)
        }
        Path::DisplaceReduced => {
            let j = it.primary();
            let pos = it.nearby(&wm, j, &[]);
            let basis = EigenBasis::new(&wm)?;
            let cache = basis.trajectory_cache(j, &[pos], &[])?;
            let inv = displace_reduced(basis.precompute(), &cache, 0, Complex64::new(0.0, 0.0))?;
            let moved = sc.with_position(map, j, pos)?;
            (ChannelMatrix::from_inverse(&inv, map, f, base.clone()), channel_full(&it.wm(&moved, &base)?)?)
        }
        Path::DisplaceMulti => {
            let a = it.primary();
            let b = (a + 1 + it.rng.random_range(0..map.p() - 1)) % map.p();
            let pa = it.nearby(&wm, a, &[]);
            let pb = it.nearby(&wm, b, &[pa]);
            let basis = EigenBasis::new(&wm)?;
            let ca = basis.trajectory_cache(a, &[pa], &[b])?;
            let cb = basis.trajectory_cache(b, &[pb], &[a])?;
            let moves = [Move { cache: &ca, position_index: 0 }, Move { cache: &cb, position_index: 0 }];
            let inv = displace_multi_reduced(basis.precompute(), &moves, Complex64::new(0.0, 0.0))?;
            let moved = sc.with_position(map, a, pa)?.with_position(map, b, pb)?;
            (ChannelMatrix::from_inverse(&inv, map, f, base.clone()), channel_full(&it.wm(&moved, &base)?)?)
        }
        Path::Combined => {
            let lambda = it.lambda();
            let j = it.primary();
            let pos = it.nearby(&wm, j, &[]);
            let n_ris = sc.ris.len();
            let mut target_bits = base_bits.clone();
            if n_ris > 0 {
                let m = it.rng.random_range(1..=n_ris.min(4));
                for k in sample(&mut it.rng, n_ris, m) {
                    target_bits[k] = !target_bits[k];
                }
            }
            let target = RisConfiguration::Bits(target_bits);
            let basis = EigenBasis::new(&wm)?;
            let cache = basis.trajectory_cache(j, &[pos], &[])?;
            let target_diag = sc.configuration_to_inverse_polarizabilities(&target, f)?;
            let delta = RisDelta::between(map, &wm.ris_diagonal(), &target_diag)?;
            let fast = combined_update(basis.precompute(), lambda, &[Move { cache: &cache, position_index: 0 }], &delta)?;
            let moved = sc.with_position(map, j, pos)?;
            let oracle = channel_full(&shifted_interaction(&it.wm(&moved, &target)?, lambda)?)?;
            (fast, oracle)
        }
    })
}

fn skip_reason(path: Path, map: &IndexMap, n_ris: usize) -> Option<String> {
    let needs_secondary = matches!(path, Path::Shift | Path::DisplaceReduced | Path::DisplaceMulti | Path::Combined);
    if needs_secondary && map.s() == 0 {
        return Some("no static environment dipoles".into());
    }
    if matches!(path, Path::Woodbury | Path::OneBit) && n_ris == 0 {
        return Some("no RIS elements".into());
    }
    if path == Path::DisplaceMulti && map.p() < 2 {
        return Some("fewer than two primary dipoles".into());
    }
    None
}

pub fn run(sc: &Scenario, opts: &ValidateOptions) -> CliResult<ValidateReport> {
    let map = sc.build_index_map()?;
    let freqs = sc.freq_grid.points();
    let mut paths = Vec::new();
    for (k, &(path, name, default_tol)) in PATHS.iter().enumerate() {
        let tolerance = opts.tolerance.unwrap_or(default_tol);
        let mut summary = PathSummary {
            name,
            tolerance,
            instances: 0,
            worst: 0.0,
            worst_seed: None,
            failures: Vec::new(),
            skipped: skip_reason(path, &map, sc.ris.len()),
        };
        if summary.skipped.is_none() {
            for i in 0..opts.instances {
                let seed = opts.seed.wrapping_add((k as u64) << 32).wrapping_add(i as u64);
                let mut rng = StdRng::seed_from_u64(seed);
                let f = freqs[rng.random_range(0..freqs.len())];
                let mut it = Instance { sc, map: &map, rng, f };
                let (mut fast, oracle) = check(path, &mut it)?;
                if let Some(eps) = opts.inject_fault {
                    let h = &fast.h;
                    fast.h = CMat::from_fn(h.nrows(), h.ncols(), |i, j| h[(i, j)] * (1.0 + eps));
                }
                let err = rel(&fast, &oracle);
                summary.instances += 1;
                if summary.worst_seed.is_none() || err > summary.worst || err.is_nan() {
                    summary.worst = err;
                    summary.worst_seed = Some(seed);
                }
                if err.is_nan() || err > tolerance {
                    summary.failures.push(seed);
                }
            }
        }
        paths.push(summary);
    }
    Ok(ValidateReport { paths })
}

#[cfg(test)]
mod tests {
    use risfad::scenario::{random_scenario, RandomScenarioSpec};

    use super::*;

    fn small() -> Scenario {
        random_scenario(&RandomScenarioSpec { n_tx: 2, n_rx: 2, n_ris: 4, n_env: 30, n_dynamic: 1, ..Default::default() }, 9)
    }

    #[test]
    fn passes_and_is_deterministic() {
        let sc = small();
        let opts = ValidateOptions { instances: 3, seed: 5, tolerance: None, inject_fault: None };
        let a = run(&sc, &opts).unwrap();
        assert!(a.passed(), "{}", a.render());
        assert_eq!(a, run(&sc, &opts).unwrap());
        assert!(a.paths.iter().all(|p| p.skipped.is_none()));
    }

    #[test]
    fn injected_fault_fails() {
        let sc = small();
        let opts = ValidateOptions { instances: 2, seed: 5, tolerance: None, inject_fault: Some(1e-3) };
        let r = run(&sc, &opts).unwrap();
        assert!(!r.passed());
        assert!(r.paths.iter().all(|p| p.failures.len() == 2));
        assert!(r.render().contains("failing seeds"));
    }
}

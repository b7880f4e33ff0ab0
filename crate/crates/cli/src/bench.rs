//! Per-realization timing of the update paths against full re-assembly
//! plus an `N x N` solve.
//!
//! Each method is warmed up once, then timed over all realizations with a
//! monotonic clock. The baseline is the median of several repeats. A few
//! realizations of every method are checked against the oracle.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use num_complex::Complex64;
use rand::rngs::StdRng;
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use risfad::linalg;
use risfad::physics::inverse_polarizability;
use risfad::reduction::EigenBasis;
use risfad::scenario::{random_scenario, RandomScenarioSpec};
use risfad::updates::{displace_reduced, woodbury_rt_block, RisDelta};
use risfad::{
    channel_full, ChannelMatrix, FreqGrid, Group, IndexMap, InteractionMatrix, OneBitEngine, Position, ReducedSystem,
    RisConfiguration, Scenario,
};
use serde::{Deserialize, Serialize};

use crate::commands::shifted_interaction;
use crate::error::{CliError, CliResult};

pub const BASELINE_REPEATS: usize = 3;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Method {
    Woodbury,
    OneBit,
    Shift,
    Displacement,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::Woodbury, Method::OneBit, Method::Shift, Method::Displacement];
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Woodbury => "woodbury",
            Method::OneBit => "one-bit",
            Method::Shift => "shift",
            Method::Displacement => "displacement",
        })
    }
}

impl FromStr for Method {
    type Err = CliError;

    fn from_str(s: &str) -> CliResult<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.to_string() == s.trim())
            .ok_or_else(|| CliError::Input(format!("unknown bench method {s:?} (woodbury, one-bit, shift, displacement)")))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub method: String,
    pub n: usize,
    pub p: usize,
    pub s: usize,
    /// Largest update rank used (RIS elements changed, or moved dipoles).
    pub m: usize,
    pub realizations: usize,
    pub total_seconds: f64,
    pub seconds_per_realization: f64,
    /// Baseline seconds per realization over method seconds per realization.
    pub speedup: f64,
    pub max_rel_error: f64,
    pub oracle_checked: usize,
    /// One-off cost (reduction, eigendecomposition, caches), not amortized
    /// into the per-realization figure.
    pub precompute_seconds: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Skipped {
    pub method: String,
    pub reason: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Baseline {
    pub realizations: usize,
    pub repeat_seconds: Vec<f64>,
    /// Median repeat divided by the realizations per repeat.
    pub seconds_per_realization: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub scenario: String,
    pub freq_ghz: f64,
    pub n: usize,
    pub p: usize,
    pub s: usize,
    pub seed: u64,
    pub tolerance: f64,
    pub baseline: Baseline,
    pub rows: Vec<BenchRow>,
    pub skipped: Vec<Skipped>,
}

impl BenchReport {
    pub fn row(&self, method: Method) -> Option<&BenchRow> {
        let name = method.to_string();
        self.rows.iter().find(|r| r.method == name)
    }

    pub fn table(&self) -> String {
        let mut out = format!(
            "scenario {} at {} GHz: N = {}, p = {}, s = {}\nbaseline (re-assembly + full solve): {:.3e} s/realization, median of {} x {}\n",
            self.scenario,
            self.freq_ghz,
            self.n,
            self.p,
            self.s,
            self.baseline.seconds_per_realization,
            self.baseline.repeat_seconds.len(),
            self.baseline.realizations
        );
        out.push_str(&format!(
            "{:<13} {:>4} {:>6} {:>12} {:>12} {:>10} {:>10} {:>11}\n",
            "method", "m", "R", "s/real", "precompute", "speedup", "max err", "checked"
        ));
        for r in &self.rows {
            out.push_str(&format!(
                "{:<13} {:>4} {:>6} {:>12.3e} {:>12.3e} {:>10.1} {:>10.2e} {:>11}\n",
                r.method, r.m, r.realizations, r.seconds_per_realization, r.precompute_seconds, r.speedup, r.max_rel_error, r.oracle_checked
            ));
        }
        for s in &self.skipped {
            out.push_str(&format!("{:<13} skipped: {}\n", s.method, s.reason));
        }
        out
    }
}

#[derive(Clone, Debug)]
pub struct BenchOptions {
    pub realizations: usize,
    pub max_flips: usize,
    pub baseline_realizations: usize,
    pub oracle_samples: usize,
    pub methods: Vec<Method>,
    pub tolerance: f64,
    pub seed: u64,
}

impl Default for BenchOptions {
    fn default() -> Self {
        Self {
            realizations: 200,
            max_flips: 8,
            baseline_realizations: 5,
            oracle_samples: 5,
            methods: Method::ALL.to_vec(),
            tolerance: 1e-8,
            seed: 0,
        }
    }
}

/// Seeded random scenario with `n` dipoles: 4 tx, 4 rx, a 16-element RIS
/// and `n - 24` static scatterers, so `p = 24`.
pub fn synthetic_scenario(n: usize, seed: u64) -> CliResult<Scenario> {
    if n < 25 {
        return Err(CliError::Input(format!("--synthetic needs at least 25 dipoles, got {n}")));
    }
    let spec = RandomScenarioSpec {
        n_tx: 4,
        n_rx: 4,
        n_ris: 16,
        n_env: n - 24,
        n_dynamic: 0,
        extent: (0.13 * (n as f64).sqrt()).max(2.0),
        min_separation: 0.04,
        freq_grid: FreqGrid::single(2.4),
    };
    Ok(random_scenario(&spec, seed))
}

fn seconds(f: impl FnOnce()) -> f64 {
    let t = Instant::now();
    f();
    t.elapsed().as_secs_f64()
}

/// Times `run` over `0..count` after one untimed warm-up call.
fn time_realizations<T>(count: usize, mut run: impl FnMut(usize) -> CliResult<T>) -> CliResult<f64> {
    run(0)?;
    let t = Instant::now();
    for i in 0..count {
        std::hint::black_box(run(i)?);
    }
    Ok(t.elapsed().as_secs_f64())
}

struct Context<'a> {
    sc: &'a Scenario,
    map: IndexMap,
    f: f64,
    opts: &'a BenchOptions,
    baseline_spr: f64,
}

impl Context<'_> {
    fn rel_err(&self, fast: &ChannelMatrix, oracle: &ChannelMatrix) -> f64 {
        linalg::rel_frobenius(oracle.h.as_ref(), fast.h.as_ref())
    }

    fn row(&self, method: Method, m: usize, total: f64, precompute: f64, errors: &[f64]) -> BenchRow {
        let r = self.opts.realizations;
        let spr = total / r as f64;
        BenchRow {
            method: method.to_string(),
            n: self.map.n(),
            p: self.map.p(),
            s: self.map.s(),
            m,
            realizations: r,
            total_seconds: total,
            seconds_per_realization: spr,
            speedup: self.baseline_spr / spr,
            max_rel_error: errors.iter().copied().fold(0.0, f64::max),
            oracle_checked: errors.len(),
            precompute_seconds: precompute,
        }
    }

    fn samples(&self) -> usize {
        self.opts.oracle_samples.min(self.opts.realizations)
    }
}

fn random_bits(rng: &mut StdRng, n: usize) -> Vec<bool> {
    (0..n).map(|_| rng.random_bool(0.5)).collect()
}

fn bench_baseline(sc: &Scenario, map: &IndexMap, f: f64, opts: &BenchOptions) -> CliResult<Baseline> {
    let mut rng = StdRng::seed_from_u64(opts.seed ^ 0xba5e);
    let count = opts.baseline_realizations.max(1);
    let cfgs: Vec<RisConfiguration> = (0..count).map(|_| RisConfiguration::Bits(random_bits(&mut rng, sc.ris.len()))).collect();
    let run = |i: usize| scratch(sc, map, f, &cfgs[i]);
    run(0)?;
    let mut repeat_seconds = Vec::with_capacity(BASELINE_REPEATS);
    for _ in 0..BASELINE_REPEATS {
        let t = Instant::now();
        for i in 0..count {
            std::hint::black_box(run(i)?);
        }
        repeat_seconds.push(t.elapsed().as_secs_f64());
    }
    let mut sorted = repeat_seconds.clone();
    sorted.sort_by(f64::total_cmp);
    Ok(Baseline {
        realizations: count,
        seconds_per_realization: sorted[BASELINE_REPEATS / 2] / count as f64,
        repeat_seconds,
    })
}

fn scratch(sc: &Scenario, map: &IndexMap, f: f64, cfg: &RisConfiguration) -> CliResult<ChannelMatrix> {
    Ok(channel_full(&InteractionMatrix::assemble(sc, map, f, cfg)?)?)
}

fn bench_woodbury(cx: &Context<'_>) -> CliResult<BenchRow> {
    let (sc, map, f) = (cx.sc, &cx.map, cx.f);
    let n_ris = sc.ris.len();
    let max_m = cx.opts.max_flips.clamp(1, n_ris);
    let mut rng = StdRng::seed_from_u64(cx.opts.seed ^ 0x3001);
    let alpha: Vec<(Complex64, Complex64)> = sc
        .ris
        .iter()
        .map(|el| Ok((inverse_polarizability(f, &el.state(false))?, inverse_polarizability(f, &el.state(true))?)))
        .collect::<risfad::Result<_>>()?;
    let base = RisConfiguration::zeros(n_ris);
    let s0 = map.range(Group::Ris).start;
    let mut targets = Vec::new();
    let mut deltas = Vec::new();
    for _ in 0..cx.opts.realizations.max(1) {
        let m = rng.random_range(1..=max_m);
        let mut flip: Vec<usize> = sample(&mut rng, n_ris, m).into_vec();
        flip.sort_unstable();
        let mut bits = vec![false; n_ris];
        for &k in &flip {
            bits[k] = true;
        }
        let values = flip.iter().map(|&k| alpha[k].1 - alpha[k].0).collect();
        deltas.push(RisDelta::new(map, flip.iter().map(|k| s0 + k).collect(), values)?);
        targets.push(RisConfiguration::Bits(bits));
    }
    let mut rs = None;
    let precompute = seconds(|| {
        rs = Some(
            InteractionMatrix::assemble(sc, map, f, &base)
                .and_then(|wm| ReducedSystem::reduce(&wm))
                .and_then(ReducedSystem::with_inverse),
        )
    });
    let rs = rs.expect("set above")?;
    let r_inv = rs.r_inv().expect("inverse requested");
    let fast = |i: usize| -> CliResult<ChannelMatrix> {
        Ok(ChannelMatrix { h: woodbury_rt_block(r_inv, map, &deltas[i])?, f, cfg: targets[i].clone() })
    };
    let total = time_realizations(cx.opts.realizations, fast)?;
    let errors = (0..cx.samples())
        .map(|i| Ok(cx.rel_err(&fast(i)?, &scratch(sc, map, f, &targets[i])?)))
        .collect::<CliResult<Vec<_>>>()?;
    Ok(cx.row(Method::Woodbury, max_m, total, precompute, &errors))
}

fn bench_one_bit(cx: &Context<'_>) -> CliResult<BenchRow> {
    let (sc, map, f) = (cx.sc, &cx.map, cx.f);
    let n_ris = sc.ris.len();
    let mut rng = StdRng::seed_from_u64(cx.opts.seed ^ 0x0b17);
    let baseline = random_bits(&mut rng, n_ris);
    let targets: Vec<Vec<bool>> = (0..cx.opts.realizations.max(1)).map(|_| random_bits(&mut rng, n_ris)).collect();
    let mut engine = None;
    let precompute = seconds(|| engine = Some(OneBitEngine::new(sc, map, f, &baseline)));
    let engine = engine.expect("set above")?;
    let total = time_realizations(cx.opts.realizations, |i| Ok(engine.channel(&targets[i])?))?;
    let errors = (0..cx.samples())
        .map(|i| Ok(cx.rel_err(&engine.channel(&targets[i])?, &scratch(sc, map, f, &RisConfiguration::Bits(targets[i].clone()))?)))
        .collect::<CliResult<Vec<_>>>()?;
    Ok(cx.row(Method::OneBit, n_ris / 2, total, precompute, &errors))
}

fn bench_eigen(cx: &Context<'_>, methods: &[Method], rows: &mut Vec<BenchRow>) -> CliResult<()> {
    let (sc, map, f) = (cx.sc, &cx.map, cx.f);
    let cfg = RisConfiguration::zeros(sc.ris.len());
    let r = cx.opts.realizations.max(1);
    let mut rng = StdRng::seed_from_u64(cx.opts.seed ^ 0xe16e);
    let wm = InteractionMatrix::assemble(sc, map, f, &cfg)?;
    let mut basis = None;
    let eig_seconds = seconds(|| basis = Some(EigenBasis::new(&wm)));
    let basis = basis.expect("set above")?;

    if methods.contains(&Method::Shift) {
        let lambdas: Vec<Complex64> =
            (0..r).map(|_| Complex64::new(rng.random_range(-0.2..0.2), rng.random_range(0.0..0.2))).collect();
        let pre = basis.precompute();
        let fast = |i: usize| -> CliResult<ChannelMatrix> {
            Ok(ChannelMatrix::from_inverse(&pre.shifted_reduce(lambdas[i])?, map, f, cfg.clone()))
        };
        let total = time_realizations(cx.opts.realizations, fast)?;
        let errors = (0..cx.samples())
            .map(|i| Ok(cx.rel_err(&fast(i)?, &channel_full(&shifted_interaction(&wm, lambdas[i])?)?)))
            .collect::<CliResult<Vec<_>>>()?;
        rows.push(cx.row(Method::Shift, 0, total, eig_seconds, &errors));
    }

    if methods.contains(&Method::Displacement) {
        let mover = map.range(Group::Rx).start;
        let origin = wm.positions()[mover];
        let mut positions = Vec::with_capacity(r);
        while positions.len() < r {
            let p = Position { x: origin.x + rng.random_range(-0.2..0.2), y: origin.y + rng.random_range(-0.2..0.2) };
            if wm.positions().iter().all(|q| q.distance(&p) > 1e-3) {
                positions.push(p);
            }
        }
        let mut cache = None;
        let cache_seconds = seconds(|| cache = Some(basis.trajectory_cache(mover, &positions, &[])));
        let cache = cache.expect("set above")?;
        let pre = basis.precompute();
        let fast = |i: usize| -> CliResult<ChannelMatrix> {
            let zero = Complex64::new(0.0, 0.0);
            Ok(ChannelMatrix::from_inverse(&displace_reduced(pre, &cache, i, zero)?, map, f, cfg.clone()))
        };
        let total = time_realizations(cx.opts.realizations, fast)?;
        let errors = (0..cx.samples())
            .map(|i| {
                let moved = sc.with_position(map, mover, positions[i])?;
                Ok(cx.rel_err(&fast(i)?, &scratch(&moved, map, f, &cfg)?))
            })
            .collect::<CliResult<Vec<_>>>()?;
        rows.push(cx.row(Method::Displacement, 1, total, eig_seconds + cache_seconds, &errors));
    }
    Ok(())
}

pub fn run(sc: &Scenario, label: &str, opts: &BenchOptions) -> CliResult<BenchReport> {
    if opts.realizations == 0 {
        return Err(CliError::Input("--realizations must be at least 1".into()));
    }
    let map = sc.build_index_map()?;
    let f = sc.freq_grid.points()[0];
    let baseline = bench_baseline(sc, &map, f, opts)?;
    let cx = Context { sc, map: map.clone(), f, opts, baseline_spr: baseline.seconds_per_realization };
    let mut rows = Vec::new();
    let mut skipped = Vec::new();
    let skip = |m: Method, reason: String, skipped: &mut Vec<Skipped>| skipped.push(Skipped { method: m.to_string(), reason });

    for m in [Method::Woodbury, Method::OneBit] {
        if !opts.methods.contains(&m) {
            continue;
        }
        if sc.ris.is_empty() {
            skip(m, "scenario has no RIS elements".into(), &mut skipped);
            continue;
        }
        let result = match m {
            Method::Woodbury => bench_woodbury(&cx),
            _ => bench_one_bit(&cx),
        };
        match result {
            Ok(row) => rows.push(row),
            Err(e) => skip(m, e.to_string(), &mut skipped),
        }
    }
    let eigen: Vec<Method> = [Method::Shift, Method::Displacement].into_iter().filter(|m| opts.methods.contains(m)).collect();
    if !eigen.is_empty() {
        if map.s() == 0 {
            for m in eigen {
                skip(m, "scenario has no static environment dipoles".into(), &mut skipped);
            }
        } else if let Err(e) = bench_eigen(&cx, &eigen, &mut rows) {
            for m in eigen.into_iter().filter(|m| cx_missing(&rows, *m)) {
                skip(m, e.to_string(), &mut skipped);
            }
        }
    }
    Ok(BenchReport {
        scenario: label.to_string(),
        freq_ghz: f,
        n: map.n(),
        p: map.p(),
        s: map.s(),
        seed: opts.seed,
        tolerance: opts.tolerance,
        baseline,
        rows,
        skipped,
    })
}

fn cx_missing(rows: &[BenchRow], m: Method) -> bool {
    let name = m.to_string();
    rows.iter().all(|r| r.method != name)
}

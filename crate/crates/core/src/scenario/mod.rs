//! Grouped description of a wireless system and its canonical index map.
//!
//! Dipoles are laid out in the fixed order T, R, S, dynamic E, static E.
//! The first four groups form the primary set P; static environment
//! dipoles form the secondary set P̄ that the reduced basis eliminates.

use std::collections::HashMap;
use std::fmt;
use std::ops::Range;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::physics::{inverse_polarizability, DipoleParams, Position};

mod generate;
mod io;

pub use generate::{demo_scenario, random_scenario, RandomScenarioSpec};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FreqGrid {
    pub start_ghz: f64,
    pub stop_ghz: f64,
    pub n_points: usize,
}

impl FreqGrid {
    pub fn single(f_ghz: f64) -> Self {
        Self {
            start_ghz: f_ghz,
            stop_ghz: f_ghz,
            n_points: 1,
        }
    }

    /// Linearly spaced points, endpoints included.
    pub fn points(&self) -> Vec<f64> {
        if self.n_points <= 1 {
            return vec![self.start_ghz; self.n_points];
        }
        let step = (self.stop_ghz - self.start_ghz) / (self.n_points - 1) as f64;
        (0..self.n_points)
            .map(|i| {
                if i + 1 == self.n_points {
                    self.stop_ghz
                } else {
                    self.start_ghz + step * i as f64
                }
            })
            .collect()
    }
}

/// A 1-bit RIS element. `base.f_res` is the state-0 resonance.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RisElement {
    pub base: DipoleParams,
    pub f_res_state0: f64,
    pub f_res_state1: f64,
}

impl RisElement {
    pub fn new(x: f64, y: f64, chi: f64, gamma: f64, f_res_state0: f64, f_res_state1: f64) -> Self {
        Self {
            base: DipoleParams::new(x, y, f_res_state0, chi, gamma),
            f_res_state0,
            f_res_state1,
        }
    }

    pub fn state(&self, bit: bool) -> DipoleParams {
        let f_res = if bit { self.f_res_state1 } else { self.f_res_state0 };
        self.base.with_resonance(f_res)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum RisConfiguration {
    Bits(Vec<bool>),
    /// Inverse polarizabilities written straight onto the S diagonal.
    Analog(Vec<Complex64>),
}

impl RisConfiguration {
    pub fn zeros(n: usize) -> Self {
        RisConfiguration::Bits(vec![false; n])
    }

    pub fn len(&self) -> usize {
        match self {
            RisConfiguration::Bits(b) => b.len(),
            RisConfiguration::Analog(a) => a.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Parses a string of `0`/`1` characters.
    pub fn parse_bits(s: &str) -> Result<Self> {
        s.trim()
            .chars()
            .enumerate()
            .map(|(i, c)| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                other => Err(Error::Parse(format!(
                    "bit string has invalid character {other:?} at position {i}"
                ))),
            })
            .collect::<Result<Vec<_>>>()
            .map(RisConfiguration::Bits)
    }

    pub fn bits(&self) -> Option<&[bool]> {
        match self {
            RisConfiguration::Bits(b) => Some(b),
            RisConfiguration::Analog(_) => None,
        }
    }
}

impl fmt::Display for RisConfiguration {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RisConfiguration::Bits(b) => {
                for &bit in b {
                    f.write_str(if bit { "1" } else { "0" })?;
                }
                Ok(())
            }
            RisConfiguration::Analog(a) => write!(f, "analog[{}]", a.len()),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Scenario {
    pub freq_grid: FreqGrid,
    pub tx: Vec<DipoleParams>,
    pub rx: Vec<DipoleParams>,
    pub ris: Vec<RisElement>,
    pub env: Vec<DipoleParams>,
    /// Indices into `env` of dipoles that may move between realizations.
    pub dynamic_env: Vec<usize>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum DiagnosticKind {
    CoincidentPositions,
    IndexOutOfRange,
    DuplicateIndex,
    InvalidParameter,
    InvalidFreqGrid,
    EmptyGroup,
}

/// One violated scenario invariant, with a path to the offending field.
#[derive(Clone, Debug, PartialEq)]
pub struct Diagnostic {
    pub kind: DiagnosticKind,
    pub path: String,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.path, self.message)
    }
}

impl Scenario {
    /// Every invariant violation; empty iff the scenario is well formed.
    pub fn validate(&self) -> Vec<Diagnostic> {
        let mut diags = Vec::new();
        let mut push = |kind, path: String, message: String| {
            diags.push(Diagnostic { kind, path, message })
        };

        let g = &self.freq_grid;
        if !g.start_ghz.is_finite() || !g.stop_ghz.is_finite() || g.start_ghz <= 0.0 {
            push(
                DiagnosticKind::InvalidFreqGrid,
                "freq_grid".into(),
                format!("frequencies must be finite and > 0 (start {}, stop {})", g.start_ghz, g.stop_ghz),
            );
        } else if g.start_ghz > g.stop_ghz {
            push(
                DiagnosticKind::InvalidFreqGrid,
                "freq_grid".into(),
                format!("start {} exceeds stop {}", g.start_ghz, g.stop_ghz),
            );
        }
        if g.n_points == 0 {
            push(
                DiagnosticKind::InvalidFreqGrid,
                "freq_grid.n_points".into(),
                "must be >= 1".into(),
            );
        }
        if self.tx.is_empty() {
            push(DiagnosticKind::EmptyGroup, "tx".into(), "at least one transmitter required".into());
        }
        if self.rx.is_empty() {
            push(DiagnosticKind::EmptyGroup, "rx".into(), "at least one receiver required".into());
        }

        for (group, params) in [("tx", &self.tx), ("rx", &self.rx), ("env", &self.env)] {
            for (i, d) in params.iter().enumerate() {
                for (field, msg) in d.check() {
                    push(DiagnosticKind::InvalidParameter, format!("{group}[{i}].{field}"), msg);
                }
            }
        }
        for (i, el) in self.ris.iter().enumerate() {
            for (field, msg) in el.base.check() {
                if field != "f_res" {
                    push(DiagnosticKind::InvalidParameter, format!("ris[{i}].{field}"), msg);
                }
            }
            for (field, v) in [("f_res_state0", el.f_res_state0), ("f_res_state1", el.f_res_state1)] {
                if !v.is_finite() || v <= 0.0 {
                    push(
                        DiagnosticKind::InvalidParameter,
                        format!("ris[{i}].{field}"),
                        format!("must be finite and > 0, got {v}"),
                    );
                }
            }
            if el.base.f_res != el.f_res_state0 {
                push(
                    DiagnosticKind::InvalidParameter,
                    format!("ris[{i}].base.f_res"),
                    "base resonance must equal the state-0 resonance".into(),
                );
            }
        }

        let mut seen: HashMap<(u64, u64), String> = HashMap::new();
        for (path, pos) in self.labelled_positions() {
            let key = (canonical_bits(pos.x), canonical_bits(pos.y));
            if let Some(first) = seen.get(&key) {
                push(
                    DiagnosticKind::CoincidentPositions,
                    path,
                    format!("coincident positions with {first} at ({}, {})", pos.x, pos.y),
                );
            } else {
                seen.insert(key, path);
            }
        }

        let mut used = vec![false; self.env.len()];
        for (i, &e) in self.dynamic_env.iter().enumerate() {
            if e >= self.env.len() {
                push(
                    DiagnosticKind::IndexOutOfRange,
                    format!("dynamic_env[{i}]"),
                    format!("index out of range: {e} >= {}", self.env.len()),
                );
            } else if used[e] {
                push(
                    DiagnosticKind::DuplicateIndex,
                    format!("dynamic_env[{i}]"),
                    format!("duplicate index {e}"),
                );
            } else {
                used[e] = true;
            }
        }
        diags
    }

    fn labelled_positions(&self) -> impl Iterator<Item = (String, Position)> + '_ {
        let tx = self.tx.iter().enumerate().map(|(i, d)| (format!("tx[{i}]"), d.pos));
        let rx = self.rx.iter().enumerate().map(|(i, d)| (format!("rx[{i}]"), d.pos));
        let ris = self.ris.iter().enumerate().map(|(i, d)| (format!("ris[{i}]"), d.base.pos));
        let env = self.env.iter().enumerate().map(|(i, d)| (format!("env[{i}]"), d.pos));
        tx.chain(rx).chain(ris).chain(env)
    }

    pub fn ensure_valid(&self) -> Result<()> {
        let diags = self.validate();
        if diags.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidScenario(diags))
        }
    }

    pub fn n_total(&self) -> usize {
        self.tx.len() + self.rx.len() + self.ris.len() + self.env.len()
    }

    /// Canonical ordering of the dipoles. RIS elements appear in state 0.
    pub fn build_index_map(&self) -> Result<IndexMap> {
        self.ensure_valid()?;
        let mut dynamic = self.dynamic_env.clone();
        dynamic.sort_unstable();
        let mut is_dynamic = vec![false; self.env.len()];
        for &e in &dynamic {
            is_dynamic[e] = true;
        }
        let mut env_order = dynamic.clone();
        env_order.extend((0..self.env.len()).filter(|&e| !is_dynamic[e]));
        Ok(IndexMap {
            n_tx: self.tx.len(),
            n_rx: self.rx.len(),
            n_ris: self.ris.len(),
            n_dynamic: dynamic.len(),
            env_order,
        })
    }

    /// Dipole parameters in canonical order.
    pub fn canonical_dipoles(&self, map: &IndexMap) -> Vec<DipoleParams> {
        let mut out = Vec::with_capacity(map.n());
        out.extend_from_slice(&self.tx);
        out.extend_from_slice(&self.rx);
        out.extend(self.ris.iter().map(|r| r.base));
        out.extend(map.env_order.iter().map(|&e| self.env[e]));
        out
    }

    /// Copy with the dipole at canonical index `global` moved to `pos`.
    /// Does not validate the result.
    pub fn with_position(&self, map: &IndexMap, global: usize, pos: Position) -> Result<Self> {
        let mut out = self.clone();
        let slot = |g: Group| global.checked_sub(map.range(g).start);
        if map.range(Group::Tx).contains(&global) {
            out.tx[global].pos = pos;
        } else if map.range(Group::Rx).contains(&global) {
            out.rx[slot(Group::Rx).unwrap()].pos = pos;
        } else if map.range(Group::Ris).contains(&global) {
            out.ris[slot(Group::Ris).unwrap()].base.pos = pos;
        } else if map.range(Group::Env).contains(&global) {
            out.env[map.env_order[slot(Group::Env).unwrap()]].pos = pos;
        } else {
            return Err(Error::IndexOutOfRange { what: "dipole", index: global, len: map.n() });
        }
        Ok(out)
    }

    pub fn configuration_to_inverse_polarizabilities(
        &self,
        cfg: &RisConfiguration,
        f: f64,
    ) -> Result<Vec<Complex64>> {
        if cfg.len() != self.ris.len() {
            return Err(Error::LengthMismatch {
                what: "RIS configuration",
                expected: self.ris.len(),
                got: cfg.len(),
            });
        }
        match cfg {
            RisConfiguration::Bits(bits) => self
                .ris
                .iter()
                .zip(bits)
                .map(|(el, &b)| inverse_polarizability(f, &el.state(b)))
                .collect(),
            RisConfiguration::Analog(v) => {
                if let Some(i) = v.iter().position(|c| !c.re.is_finite() || !c.im.is_finite()) {
                    return Err(Error::Domain(format!("analog configuration entry {i} is not finite")));
                }
                Ok(v.clone())
            }
        }
    }
}

fn canonical_bits(v: f64) -> u64 {
    // +0.0 and -0.0 are the same position
    if v == 0.0 {
        0
    } else {
        v.to_bits()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Group {
    Tx,
    Rx,
    Ris,
    /// All environment dipoles, dynamic first.
    Env,
    DynamicEnv,
    StaticEnv,
    Primary,
    Secondary,
}

/// Contiguous index ranges of each group in the canonical ordering.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IndexMap {
    n_tx: usize,
    n_rx: usize,
    n_ris: usize,
    n_dynamic: usize,
    /// `env_order[k]` is the `env` index placed at canonical E slot `k`.
    env_order: Vec<usize>,
}

impl IndexMap {
    pub fn n(&self) -> usize {
        self.n_tx + self.n_rx + self.n_ris + self.env_order.len()
    }

    pub fn p(&self) -> usize {
        self.n_tx + self.n_rx + self.n_ris + self.n_dynamic
    }

    pub fn s(&self) -> usize {
        self.n() - self.p()
    }

    pub fn n_tx(&self) -> usize {
        self.n_tx
    }

    pub fn n_rx(&self) -> usize {
        self.n_rx
    }

    pub fn n_ris(&self) -> usize {
        self.n_ris
    }

    pub fn n_env(&self) -> usize {
        self.env_order.len()
    }

    pub fn range(&self, g: Group) -> Range<usize> {
        let t = self.n_tx;
        let r = t + self.n_rx;
        let s = r + self.n_ris;
        let d = s + self.n_dynamic;
        let n = self.n();
        match g {
            Group::Tx => 0..t,
            Group::Rx => t..r,
            Group::Ris => r..s,
            Group::Env => s..n,
            Group::DynamicEnv => s..d,
            Group::StaticEnv => d..n,
            Group::Primary => 0..d,
            Group::Secondary => d..n,
        }
    }

    pub fn is_primary(&self, global: usize) -> bool {
        global < self.p()
    }

    /// Canonical index of `env[e]`.
    pub fn env_global(&self, e: usize) -> Option<usize> {
        let base = self.n_tx + self.n_rx + self.n_ris;
        self.env_order.iter().position(|&x| x == e).map(|k| base + k)
    }

    pub fn env_order(&self) -> &[usize] {
        &self.env_order
    }
}

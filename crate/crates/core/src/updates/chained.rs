use num_complex::Complex64;

use super::woodbury::woodbury_full;
use super::RisDelta;
use crate::error::{Error, Result};
use crate::interaction::InteractionMatrix;
use crate::oracle::ChannelMatrix;
use crate::reduction::ReducedSystem;
use crate::scenario::{IndexMap, RisConfiguration, Scenario};

pub const DEFAULT_REBASELINE_EVERY: usize = 1000;

/// Sequence of RIS updates applied one after another to the same cached
/// `R^-1`. Rebuilds from scratch every `rebaseline_every` updates to bound
/// error accumulation, and whenever an update is singular.
///
/// Stateful: confine one instance to one worker.
#[derive(Clone, Debug)]
pub struct ChainedWoodbury {
    sc: Scenario,
    map: IndexMap,
    f: f64,
    diag: Vec<Complex64>,
    cfg: RisConfiguration,
    r_inv: crate::linalg::CMat,
    since_baseline: usize,
    rebaseline_every: usize,
    rebaselines: usize,
}

impl ChainedWoodbury {
    pub fn new(sc: &Scenario, map: &IndexMap, f: f64, cfg: &RisConfiguration) -> Result<Self> {
        let mut engine = Self {
            sc: sc.clone(),
            map: map.clone(),
            f,
            diag: Vec::new(),
            cfg: cfg.clone(),
            r_inv: crate::linalg::CMat::zeros(0, 0),
            since_baseline: 0,
            rebaseline_every: DEFAULT_REBASELINE_EVERY,
            rebaselines: 0,
        };
        engine.rebuild(cfg)?;
        engine.rebaselines = 0;
        Ok(engine)
    }

    pub fn with_rebaseline_every(mut self, n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::Domain("rebaseline interval must be at least 1".into()));
        }
        self.rebaseline_every = n;
        Ok(self)
    }

    fn rebuild(&mut self, cfg: &RisConfiguration) -> Result<()> {
        let wm = InteractionMatrix::assemble(&self.sc, &self.map, self.f, cfg)?;
        let rs = ReducedSystem::reduce(&wm)?.with_inverse()?;
        self.r_inv = rs.r_inv().expect("inverse requested").clone();
        self.diag = wm.ris_diagonal();
        self.cfg = cfg.clone();
        self.since_baseline = 0;
        self.rebaselines += 1;
        Ok(())
    }

    /// Moves to `cfg` and returns its channel.
    pub fn apply(&mut self, cfg: &RisConfiguration) -> Result<ChannelMatrix> {
        let target = self.sc.configuration_to_inverse_polarizabilities(cfg, self.f)?;
        let delta = RisDelta::between(&self.map, &self.diag, &target)?;
        if self.since_baseline + 1 >= self.rebaseline_every {
            self.rebuild(cfg)?;
        } else {
            match woodbury_full(&self.r_inv, &delta) {
                Ok(inv) => {
                    self.r_inv = inv;
                    self.diag = target;
                    self.cfg = cfg.clone();
                    self.since_baseline += 1;
                }
                Err(Error::UpdateSingular { .. }) => self.rebuild(cfg)?,
                Err(e) => return Err(e),
            }
        }
        Ok(self.channel())
    }

    pub fn channel(&self) -> ChannelMatrix {
        ChannelMatrix::from_inverse(&self.r_inv, &self.map, self.f, self.cfg.clone())
    }

    pub fn updates_since_baseline(&self) -> usize {
        self.since_baseline
    }

    /// Rebuilds performed after construction.
    pub fn rebaselines(&self) -> usize {
        self.rebaselines
    }
}

//! Reduced-basis representation over the primary dipoles.
//!
//! `R = W_PP - W_PP̄ W_P̄P̄^-1 W_P̄P` carries the whole channel: `[R^-1]_RT`
//! equals `[W^-1]_RT`. Diagonalizing `W_P̄P̄ = Q D Q^-1` once lets a uniform
//! shift `W_P̄P̄ - λI` be applied in `O(s p^2)` through
//! `R_λ = W_PP - Σ (D - λ)^-1 Ψ` with `Σ = W_PP̄ Q` and `Ψ = Q^-1 W_P̄P`.

use faer::Mat;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::interaction::InteractionMatrix;
use crate::linalg::{self, CMat, Lu, RCOND_MIN};
use crate::oracle::{rt_block_by_solve, ChannelMatrix};
use crate::physics::{green_function, Position, Wavenumber};
use crate::scenario::{Group, IndexMap, RisConfiguration};

/// Eigenvector matrices with a worse reciprocal condition are rejected.
pub const EIGVEC_RCOND_MIN: f64 = 1e-12;
/// A shift must stay at least this far (relative to the spectral radius)
/// from every eigenvalue of `W_P̄P̄`.
pub const RESONANCE_GUARD: f64 = 1e-12;

#[derive(Clone, Debug)]
pub struct ReducedSystem {
    r: CMat,
    r_inv: Option<CMat>,
    map: IndexMap,
    f: f64,
    cfg: RisConfiguration,
}

impl ReducedSystem {
    /// Schur complement of `W_P̄P̄`, via a pivoted factorization of `W_P̄P̄`
    /// and a multi-RHS solve against `W_P̄P`.
    pub fn reduce(wm: &InteractionMatrix) -> Result<Self> {
        let map = wm.map();
        let w_pp = wm.block(Group::Primary, Group::Primary);
        let r = if map.s() == 0 {
            w_pp
        } else {
            let (lu, _) = Lu::checked(
                wm.block(Group::Secondary, Group::Secondary).as_ref(),
                "secondary block W_P̄P̄",
                RCOND_MIN,
            )?;
            let x = lu.solve(wm.block(Group::Secondary, Group::Primary).as_ref());
            w_pp - wm.block(Group::Primary, Group::Secondary) * x
        };
        Ok(Self {
            r,
            r_inv: None,
            map: map.clone(),
            f: wm.freq(),
            cfg: wm.cfg().clone(),
        })
    }

    /// Same system with `R^-1` cached (needed by the Woodbury paths).
    pub fn with_inverse(mut self) -> Result<Self> {
        if self.r_inv.is_none() {
            self.r_inv = Some(linalg::checked_inverse(self.r.as_ref(), "reduced matrix R")?);
        }
        Ok(self)
    }

    pub fn r(&self) -> &CMat {
        &self.r
    }

    pub fn r_inv(&self) -> Option<&CMat> {
        self.r_inv.as_ref()
    }

    pub fn map(&self) -> &IndexMap {
        &self.map
    }

    pub fn freq(&self) -> f64 {
        self.f
    }

    pub fn cfg(&self) -> &RisConfiguration {
        &self.cfg
    }

    pub fn channel(&self) -> Result<ChannelMatrix> {
        channel_from_reduced(self)
    }
}

/// `H = [R^-1]_RT`, by solving `R X = E_T` (or slicing a cached inverse).
pub fn channel_from_reduced(rs: &ReducedSystem) -> Result<ChannelMatrix> {
    if let Some(inv) = &rs.r_inv {
        return Ok(ChannelMatrix::from_inverse(inv, &rs.map, rs.f, rs.cfg.clone()));
    }
    let (lu, _) = Lu::checked(rs.r.as_ref(), "reduced matrix R", RCOND_MIN)?;
    Ok(ChannelMatrix {
        h: rt_block_by_solve(&lu, &rs.map),
        f: rs.f,
        cfg: rs.cfg.clone(),
    })
}

/// Cached pieces of the eigen-shift representation. Only `p x s`, `s x p`,
/// `p x p` and length-`s` data is retained.
#[derive(Clone, Debug)]
pub struct EigenPrecompute {
    sigma: CMat,
    psi: CMat,
    d: Vec<Complex64>,
    w_pp: CMat,
    map: IndexMap,
    f: f64,
    cfg: RisConfiguration,
    positions: Vec<Position>,
}

/// Transient owner of the eigenvector matrix of `W_P̄P̄`.
///
/// Everything that needs `Q` (the precompute itself and trajectory
/// caches) is derived here; [`EigenBasis::finish`] drops `Q`.
pub struct EigenBasis {
    q: CMat,
    q_lu: Lu,
    pre: EigenPrecompute,
}

/// Σ-row, Ψ-column and `W_PP` row of one primary dipole at one position.
#[derive(Clone, Debug, PartialEq)]
pub struct DisplacedEntries {
    pub position: Position,
    /// Row of `Σ` (length `s`).
    pub sigma_row: Vec<Complex64>,
    /// Column of `Ψ` (length `s`).
    pub psi_col: Vec<Complex64>,
    /// Row of `W_PP` (length `p`); the diagonal entry is left untouched and
    /// entries against excluded co-movers are placeholders.
    pub w_pp_row: Vec<Complex64>,
}

impl EigenBasis {
    pub fn new(wm: &InteractionMatrix) -> Result<Self> {
        let map = wm.map();
        if map.s() == 0 {
            return Err(Error::Diagonalization("no secondary dipoles to diagonalize".into()));
        }
        let w_ss = wm.block(Group::Secondary, Group::Secondary);
        let evd = w_ss
            .eigen()
            .map_err(|e| Error::Diagonalization(format!("{e:?}")))?;
        let q = evd.U().to_owned();
        let d: Vec<Complex64> = (0..map.s()).map(|i| evd.S()[i]).collect();
        if d.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(Error::Diagonalization("non-finite eigenvalue".into()));
        }
        let q_lu = Lu::new(q.as_ref());
        let rcond = q_lu.rcond();
        if rcond.is_nan() || rcond <= EIGVEC_RCOND_MIN {
            return Err(Error::Diagonalization(format!(
                "eigenvector matrix too ill-conditioned (reciprocal condition estimate {rcond:.3e})"
            )));
        }
        let sigma = wm.block(Group::Primary, Group::Secondary) * &q;
        let psi = q_lu.solve(wm.block(Group::Secondary, Group::Primary).as_ref());
        let pre = EigenPrecompute {
            sigma,
            psi,
            d,
            w_pp: wm.block(Group::Primary, Group::Primary),
            map: map.clone(),
            f: wm.freq(),
            cfg: wm.cfg().clone(),
            positions: wm.positions().to_vec(),
        };
        Ok(Self { q, q_lu, pre })
    }

    pub fn precompute(&self) -> &EigenPrecompute {
        &self.pre
    }

    /// Drops `Q` and returns the cached reduced-basis pieces.
    pub fn finish(self) -> EigenPrecompute {
        self.pre
    }

    /// Σ-row, Ψ-column and `W_PP` row for primary dipole `dipole` placed at
    /// `pos`, computed in `O(s^2)` from the eigenbasis.
    ///
    /// `co_movers` are primary dipoles that move together with `dipole`:
    /// they are skipped in the collision check and their `W_PP` entries
    /// are left as placeholders to be refreshed per realization.
    pub fn displaced_entries(&self, dipole: usize, pos: Position, co_movers: &[usize]) -> Result<DisplacedEntries> {
        self.displaced_entries_at(dipole, pos, co_movers, 0)
    }

    fn displaced_entries_at(
        &self,
        dipole: usize,
        pos: Position,
        co_movers: &[usize],
        position_index: usize,
    ) -> Result<DisplacedEntries> {
        let pre = &self.pre;
        let map = &pre.map;
        pre.check_primary(dipole)?;
        let k = pre.wavenumber();
        for (other, q) in pre.positions.iter().enumerate() {
            if other != dipole && !co_movers.contains(&other) && *q == pos {
                return Err(Error::Collision { position: position_index, x: pos.x, y: pos.y, other });
            }
        }
        let sec = map.range(Group::Secondary);
        let mut w_row = CMat::zeros(1, sec.len());
        for (e, q) in pre.positions[sec.clone()].iter().enumerate() {
            w_row[(0, e)] = -green_function(&pos, q, k)?;
        }
        let sigma_row = &w_row * &self.q;
        let psi_col = self.q_lu.solve(w_row.transpose());
        let mut w_pp_row = Vec::with_capacity(map.p());
        for i in 0..map.p() {
            w_pp_row.push(if i == dipole {
                pre.w_pp[(i, i)]
            } else if co_movers.contains(&i) {
                Complex64::new(0.0, 0.0)
            } else {
                -green_function(&pos, &pre.positions[i], k)?
            });
        }
        Ok(DisplacedEntries {
            position: pos,
            sigma_row: (0..sec.len()).map(|e| sigma_row[(0, e)]).collect(),
            psi_col: (0..sec.len()).map(|e| psi_col[(e, 0)]).collect(),
            w_pp_row,
        })
    }

    /// Precomputes the displaced entries of `dipole` along a known list of
    /// candidate positions.
    pub fn trajectory_cache(&self, dipole: usize, positions: &[Position], co_movers: &[usize]) -> Result<TrajectoryCache> {
        let entries = positions
            .iter()
            .enumerate()
            .map(|(k, &pos)| self.displaced_entries_at(dipole, pos, co_movers, k))
            .collect::<Result<Vec<_>>>()?;
        Ok(TrajectoryCache {
            dipole,
            co_movers: co_movers.to_vec(),
            entries,
        })
    }

    /// Exposes the eigenvector matrix; for tests only.
    #[doc(hidden)]
    pub fn q(&self) -> &CMat {
        &self.q
    }
}

/// Precomputed Σ-rows, Ψ-columns and `W_PP` rows of one mobile primary
/// dipole over `K` candidate positions.
#[derive(Clone, Debug)]
pub struct TrajectoryCache {
    dipole: usize,
    co_movers: Vec<usize>,
    entries: Vec<DisplacedEntries>,
}

impl TrajectoryCache {
    pub fn dipole(&self) -> usize {
        self.dipole
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn co_movers(&self) -> &[usize] {
        &self.co_movers
    }

    pub fn entry(&self, k: usize) -> Result<&DisplacedEntries> {
        self.entries.get(k).ok_or(Error::IndexOutOfRange {
            what: "trajectory position",
            index: k,
            len: self.entries.len(),
        })
    }
}

impl EigenPrecompute {
    pub fn build(wm: &InteractionMatrix) -> Result<Self> {
        EigenBasis::new(wm).map(EigenBasis::finish)
    }

    pub fn sigma(&self) -> &CMat {
        &self.sigma
    }

    pub fn psi(&self) -> &CMat {
        &self.psi
    }

    pub fn eigenvalues(&self) -> &[Complex64] {
        &self.d
    }

    pub fn w_pp(&self) -> &CMat {
        &self.w_pp
    }

    pub fn map(&self) -> &IndexMap {
        &self.map
    }

    pub fn freq(&self) -> f64 {
        self.f
    }

    pub fn cfg(&self) -> &RisConfiguration {
        &self.cfg
    }

    pub fn positions(&self) -> &[Position] {
        &self.positions
    }

    pub(crate) fn wavenumber(&self) -> Wavenumber {
        Wavenumber::from_ghz(self.f).expect("frequency validated at assembly")
    }

    pub(crate) fn check_primary(&self, dipole: usize) -> Result<()> {
        if dipole >= self.map.n() {
            return Err(Error::IndexOutOfRange { what: "dipole", index: dipole, len: self.map.n() });
        }
        if !self.map.is_primary(dipole) {
            return Err(Error::NotPrimary { index: dipole });
        }
        Ok(())
    }

    /// Shapes of every retained matrix, for memory accounting.
    pub fn retained_shapes(&self) -> Vec<(&'static str, usize, usize)> {
        vec![
            ("sigma", self.sigma.nrows(), self.sigma.ncols()),
            ("psi", self.psi.nrows(), self.psi.ncols()),
            ("eigenvalues", self.d.len(), 1),
            ("w_pp", self.w_pp.nrows(), self.w_pp.ncols()),
            ("positions", self.positions.len(), 1),
        ]
    }

    /// Complex entries held in memory.
    pub fn retained_elements(&self) -> usize {
        self.retained_shapes()
            .iter()
            .filter(|(name, _, _)| *name != "positions")
            .map(|(_, r, c)| r * c)
            .sum()
    }

    /// Rejects shifts inside the resonance guard of the spectrum.
    pub fn check_shift(&self, lambda: Complex64) -> Result<()> {
        check_shift(&self.d, lambda)
    }

    /// `R_λ^-1` for a uniform shift of the secondary diagonal.
    pub fn shifted_reduce(&self, lambda: Complex64) -> Result<CMat> {
        resolvent_inverse(&self.w_pp, &self.sigma, &self.psi, &self.d, lambda)
    }

    /// `R_λ` itself (not inverted).
    pub fn shifted_matrix(&self, lambda: Complex64) -> Result<CMat> {
        self.check_shift(lambda)?;
        Ok(shifted_matrix_unchecked(&self.w_pp, &self.sigma, &self.psi, &self.d, lambda))
    }

    /// Channel of the shifted system, solving rather than inverting.
    pub fn shifted_channel(&self, lambda: Complex64) -> Result<ChannelMatrix> {
        let r = self.shifted_matrix(lambda)?;
        let (lu, _) = Lu::checked(r.as_ref(), "shifted reduced matrix R_λ", RCOND_MIN)?;
        Ok(ChannelMatrix {
            h: rt_block_by_solve(&lu, &self.map),
            f: self.f,
            cfg: self.cfg.clone(),
        })
    }
}

pub(crate) fn check_shift(d: &[Complex64], lambda: Complex64) -> Result<()> {
    if !lambda.re.is_finite() || !lambda.im.is_finite() {
        return Err(Error::Domain(format!("shift {lambda} is not finite")));
    }
    let radius = d.iter().map(|v| v.norm()).fold(0.0, f64::max);
    let guard = RESONANCE_GUARD * radius;
    let closest = d
        .iter()
        .enumerate()
        .map(|(k, v)| (k, (v - lambda).norm()))
        .min_by(|a, b| a.1.total_cmp(&b.1));
    match closest {
        Some((index, dist)) if dist <= guard => Err(Error::Resonance { lambda, index, eigenvalue: d[index] }),
        _ => Ok(()),
    }
}

/// `W_PP - Σ diag(1/(d - λ)) Ψ`: one row-scaling pass over `Ψ` and one
/// `p x s` by `s x p` product.
pub(crate) fn shifted_matrix_unchecked(
    w_pp: &CMat,
    sigma: &CMat,
    psi: &CMat,
    d: &[Complex64],
    lambda: Complex64,
) -> CMat {
    let scale: Vec<Complex64> = d.iter().map(|v| (v - lambda).inv()).collect();
    let scaled = Mat::from_fn(psi.nrows(), psi.ncols(), |k, j| scale[k] * psi[(k, j)]);
    w_pp - sigma * scaled
}

/// `(W_PP - Σ (D - λ)^-1 Ψ)^-1`.
pub(crate) fn resolvent_inverse(
    w_pp: &CMat,
    sigma: &CMat,
    psi: &CMat,
    d: &[Complex64],
    lambda: Complex64,
) -> Result<CMat> {
    check_shift(d, lambda)?;
    let r = shifted_matrix_unchecked(w_pp, sigma, psi, d, lambda);
    linalg::checked_inverse(r.as_ref(), "shifted reduced matrix R_λ")
}

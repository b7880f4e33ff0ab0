//! Dipole displacement updates.
//!
//! Moving dipole `j` changes row and column `j` of `W` by `u = -ΔG_j`
//! (off-diagonal entries are `-G`). With `U = [u, e_j]`, `V = [e_j^T; u^T]`
//! and `C = I_2` this is a rank-2 Woodbury update of `W^-1`. In the reduced
//! basis, a primary mover only changes one row of `Σ`, one column of `Ψ`
//! and one row/column of `W_PP`.

use faer::Mat;
use num_complex::Complex64;

use super::woodbury::checked_inner;
use super::DisplacementDelta;
use crate::error::{Error, Result};
use crate::linalg::{self, CMat, ONE, ZERO};
use crate::physics::{green_function, Position};
use crate::reduction::{resolvent_inverse, DisplacedEntries, EigenBasis, EigenPrecompute, TrajectoryCache};

/// Rank-2 update of `W^-1` for the move described by `delta`. Works for
/// any dipole, primary or secondary.
pub fn displace_full(w_inv: &CMat, delta: &DisplacementDelta) -> Result<CMat> {
    let n = w_inv.nrows();
    let j = delta.dipole_index();
    let dg = delta.delta_g();
    if dg.len() != n {
        return Err(Error::LengthMismatch { what: "Green's function deltas", expected: n, got: dg.len() });
    }
    if dg.iter().all(|g| *g == ZERO) {
        return Ok(w_inv.clone());
    }
    let mut u = Mat::<Complex64>::zeros(n, 2);
    let mut v = Mat::<Complex64>::zeros(2, n);
    for (i, g) in dg.iter().enumerate() {
        u[(i, 0)] = -g;
        v[(1, i)] = -g;
    }
    u[(j, 1)] = ONE;
    v[(0, j)] = ONE;
    let a = w_inv * &u;
    let b = &v * w_inv;
    let mut inner = &v * &a;
    let scale = 1.0 + linalg::norm1(inner.as_ref());
    inner[(0, 0)] += ONE;
    inner[(1, 1)] += ONE;
    let lu = checked_inner(&inner, scale)?;
    Ok(w_inv - a * lu.solve(b.as_ref()))
}

/// One primary dipole placed at a cached trajectory position.
#[derive(Clone, Copy, Debug)]
pub struct Move<'a> {
    pub cache: &'a TrajectoryCache,
    pub position_index: usize,
}

struct Substitution<'a> {
    dipole: usize,
    /// Index reported in collision errors.
    tag: usize,
    entries: &'a DisplacedEntries,
    co_movers: &'a [usize],
}

/// `Σ`, `Ψ` and `W_PP` with the movers' rows and columns replaced.
fn substituted(pre: &EigenPrecompute, subs: &[Substitution<'_>]) -> Result<(CMat, CMat, CMat)> {
    let mut positions = pre.positions().to_vec();
    for (a, sub) in subs.iter().enumerate() {
        pre.check_primary(sub.dipole)?;
        if subs[..a].iter().any(|b| b.dipole == sub.dipole) {
            return Err(Error::Domain(format!("dipole {} is moved twice", sub.dipole)));
        }
        let s = pre.eigenvalues().len();
        let p = pre.map().p();
        let e = sub.entries;
        if e.sigma_row.len() != s || e.psi_col.len() != s || e.w_pp_row.len() != p {
            return Err(Error::ShapeMismatch(format!("cached entries of dipole {} do not match the precompute", sub.dipole)));
        }
        positions[sub.dipole] = e.position;
    }
    let k = pre.wavenumber();
    for sub in subs {
        let pos = positions[sub.dipole];
        if let Some(other) = (0..positions.len()).find(|&o| o != sub.dipole && positions[o] == pos) {
            return Err(Error::Collision { position: sub.tag, x: pos.x, y: pos.y, other });
        }
    }

    let mut sigma = pre.sigma().clone();
    let mut psi = pre.psi().clone();
    let mut w_pp = pre.w_pp().clone();
    for sub in subs {
        let j = sub.dipole;
        let e = sub.entries;
        for (c, v) in e.sigma_row.iter().enumerate() {
            sigma[(j, c)] = *v;
        }
        for (r, v) in e.psi_col.iter().enumerate() {
            psi[(r, j)] = *v;
        }
        for (i, v) in e.w_pp_row.iter().enumerate() {
            if i != j {
                w_pp[(j, i)] = *v;
                w_pp[(i, j)] = *v;
            }
        }
    }
    // Pairs whose both ends may move are evaluated at the final positions.
    for sub in subs {
        let j = sub.dipole;
        let others = subs.iter().map(|b| b.dipole).chain(sub.co_movers.iter().copied());
        for i in others.filter(|&i| i != j) {
            let g = -green_function(&positions[j], &positions[i], k)?;
            w_pp[(j, i)] = g;
            w_pp[(i, j)] = g;
        }
    }
    Ok((sigma, psi, w_pp))
}

fn evaluate(pre: &EigenPrecompute, subs: &[Substitution<'_>], lambda: Complex64) -> Result<CMat> {
    pre.check_shift(lambda)?;
    let (sigma, psi, w_pp) = substituted(pre, subs)?;
    resolvent_inverse(&w_pp, &sigma, &psi, pre.eigenvalues(), lambda)
}

fn move_substitution<'a>(m: &Move<'a>) -> Result<Substitution<'a>> {
    Ok(Substitution {
        dipole: m.cache.dipole(),
        tag: m.position_index,
        entries: m.cache.entry(m.position_index)?,
        co_movers: m.cache.co_movers(),
    })
}

/// `R_λ^-1` with the cache's dipole at trajectory position `k`.
pub fn displace_reduced(pre: &EigenPrecompute, cache: &TrajectoryCache, k: usize, lambda: Complex64) -> Result<CMat> {
    displace_multi_reduced(pre, &[Move { cache, position_index: k }], lambda)
}

/// Same as [`displace_reduced`] but derives the entries on the fly from
/// the eigenbasis instead of a cache.
pub fn displace_reduced_uncached(basis: &EigenBasis, dipole: usize, pos: Position, lambda: Complex64) -> Result<CMat> {
    let entries = basis.displaced_entries(dipole, pos, &[])?;
    let sub = Substitution { dipole, tag: 0, entries: &entries, co_movers: &[] };
    evaluate(basis.precompute(), &[sub], lambda)
}

/// `R_λ^-1` after moving several primary dipoles at once. Mover-mover
/// couplings are recomputed at the final positions.
pub fn displace_multi_reduced(pre: &EigenPrecompute, moves: &[Move<'_>], lambda: Complex64) -> Result<CMat> {
    let subs = moves.iter().map(move_substitution).collect::<Result<Vec<_>>>()?;
    evaluate(pre, &subs, lambda)
}

#[cfg(test)]
mod tests {
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    use super::*;
    use crate::interaction::InteractionMatrix;
    use crate::oracle::inverse_full;
    use crate::reduction::ReducedSystem;
    use crate::scenario::{random_scenario, Group, RandomScenarioSpec, RisConfiguration, Scenario};

    fn system(spec: &RandomScenarioSpec, seed: u64) -> (Scenario, InteractionMatrix) {
        let sc = random_scenario(spec, seed);
        let map = sc.build_index_map().unwrap();
        let cfg = RisConfiguration::Bits((0..spec.n_ris).map(|i| i % 2 == 0).collect());
        let wm = InteractionMatrix::assemble(&sc, &map, 2.4, &cfg).unwrap();
        (sc, wm)
    }

    fn moved(sc: &Scenario, wm: &InteractionMatrix, moves: &[(usize, Position)]) -> InteractionMatrix {
        let mut out = sc.clone();
        for &(j, pos) in moves {
            out = out.with_position(wm.map(), j, pos).unwrap();
        }
        InteractionMatrix::assemble(&out, wm.map(), wm.freq(), wm.cfg()).unwrap()
    }

    fn nearby(rng: &mut StdRng, p: Position) -> Position {
        Position { x: p.x + rng.random_range(-0.3..0.3), y: p.y + rng.random_range(-0.3..0.3) }
    }

    fn rel(a: &CMat, b: &CMat) -> f64 {
        linalg::rel_frobenius(a.as_ref(), b.as_ref())
    }

    #[test]
    fn full_null_move() {
        let (_, wm) = system(&RandomScenarioSpec::default(), 1);
        let inv = inverse_full(&wm).unwrap();
        let d = DisplacementDelta::compute(wm.positions(), wm.wavenumber(), 1, wm.positions()[1]).unwrap();
        assert_eq!(displace_full(&inv, &d).unwrap(), inv);
    }

    #[test]
    fn full_matches_reassembly_and_reverses() {
        let spec = RandomScenarioSpec { n_env: 44, ..Default::default() };
        let (sc, wm) = system(&spec, 2);
        assert_eq!(wm.map().n(), 50);
        let inv = inverse_full(&wm).unwrap();
        let mut rng = StdRng::seed_from_u64(2);
        let rx = wm.map().range(Group::Rx).start;
        let old = wm.positions()[rx];
        let pos = nearby(&mut rng, old);
        let d = DisplacementDelta::compute(wm.positions(), wm.wavenumber(), rx, pos).unwrap();
        let fast = displace_full(&inv, &d).unwrap();
        let wm2 = moved(&sc, &wm, &[(rx, pos)]);
        assert!(rel(&inverse_full(&wm2).unwrap(), &fast) <= 1e-9);

        let back = DisplacementDelta::compute(wm2.positions(), wm2.wavenumber(), rx, old).unwrap();
        assert!(rel(&inv, &displace_full(&fast, &back).unwrap()) <= 1e-9);
    }

    #[test]
    fn full_moves_secondary_dipole() {
        let (sc, wm) = system(&RandomScenarioSpec { n_env: 30, ..Default::default() }, 3);
        let inv = inverse_full(&wm).unwrap();
        let j = wm.map().range(Group::Secondary).start + 7;
        let pos = Position { x: wm.positions()[j].x + 0.05, y: wm.positions()[j].y - 0.02 };
        let d = DisplacementDelta::compute(wm.positions(), wm.wavenumber(), j, pos).unwrap();
        let oracle = inverse_full(&moved(&sc, &wm, &[(j, pos)])).unwrap();
        assert!(rel(&oracle, &displace_full(&inv, &d).unwrap()) <= 1e-9);
    }

    #[test]
    fn full_rejects_collision() {
        let (_, wm) = system(&RandomScenarioSpec::default(), 4);
        let target = wm.positions()[5];
        assert!(matches!(
            DisplacementDelta::compute(wm.positions(), wm.wavenumber(), 0, target),
            Err(Error::Collision { other: 5, .. })
        ));
    }

    #[test]
    fn reduced_cached_matches_reassembly() {
        let spec = RandomScenarioSpec { n_tx: 2, n_rx: 2, n_ris: 4, n_env: 60, n_dynamic: 1, ..Default::default() };
        let (sc, wm) = system(&spec, 5);
        let basis = EigenBasis::new(&wm).unwrap();
        let mut rng = StdRng::seed_from_u64(5);
        let zero = Complex64::new(0.0, 0.0);
        for j in [1, 2, 8] {
            let orig = wm.positions()[j];
            let traj: Vec<Position> = std::iter::once(orig).chain((0..4).map(|_| nearby(&mut rng, orig))).collect();
            let cache = basis.trajectory_cache(j, &traj, &[]).unwrap();
            let pre = basis.precompute();

            let rs = ReducedSystem::reduce(&wm).unwrap().with_inverse().unwrap();
            assert!(rel(rs.r_inv().unwrap(), &displace_reduced(pre, &cache, 0, zero).unwrap()) <= 1e-8);

            for (k, &pos) in traj.iter().enumerate().skip(1) {
                let fast = displace_reduced(pre, &cache, k, zero).unwrap();
                let oracle = ReducedSystem::reduce(&moved(&sc, &wm, &[(j, pos)])).unwrap().with_inverse().unwrap();
                assert!(rel(oracle.r_inv().unwrap(), &fast) <= 1e-8, "dipole {j}, k = {k}");
                assert_eq!(fast, displace_reduced_uncached(&basis, j, pos, zero).unwrap());
            }
        }
    }

    #[test]
    fn reduced_errors() {
        let (_, wm) = system(&RandomScenarioSpec { n_env: 20, ..Default::default() }, 6);
        let basis = EigenBasis::new(&wm).unwrap();
        let p = wm.map().p();
        let pos = Position { x: 9.0, y: 9.0 };
        assert!(matches!(basis.trajectory_cache(p, &[pos], &[]), Err(Error::NotPrimary { .. })));
        let cache = basis.trajectory_cache(0, &[pos], &[]).unwrap();
        let zero = Complex64::new(0.0, 0.0);
        assert!(matches!(
            displace_reduced(basis.precompute(), &cache, 1, zero),
            Err(Error::IndexOutOfRange { .. })
        ));
        let clash = wm.positions()[p + 2];
        assert!(matches!(
            basis.trajectory_cache(0, &[pos, clash], &[]),
            Err(Error::Collision { position: 1, .. })
        ));
    }

    #[test]
    fn two_movers_match_reassembly() {
        let spec = RandomScenarioSpec { n_tx: 2, n_rx: 2, n_ris: 4, n_env: 60, ..Default::default() };
        let (sc, wm) = system(&spec, 7);
        assert_eq!((wm.map().p(), wm.map().s()), (8, 60));
        let basis = EigenBasis::new(&wm).unwrap();
        let mut rng = StdRng::seed_from_u64(7);
        let (a, b) = (1, 5);
        let ta: Vec<Position> = (0..3).map(|_| nearby(&mut rng, wm.positions()[a])).collect();
        let tb: Vec<Position> = (0..3).map(|_| nearby(&mut rng, wm.positions()[b])).collect();
        let ca = basis.trajectory_cache(a, &ta, &[b]).unwrap();
        let cb = basis.trajectory_cache(b, &tb, &[a]).unwrap();
        let pre = basis.finish();
        let lambda = Complex64::new(0.0, 0.0);
        for k in 0..3 {
            let moves = [Move { cache: &ca, position_index: k }, Move { cache: &cb, position_index: 2 - k }];
            let fast = displace_multi_reduced(&pre, &moves, lambda).unwrap();
            let oracle = ReducedSystem::reduce(&moved(&sc, &wm, &[(a, ta[k]), (b, tb[2 - k])])).unwrap().with_inverse().unwrap();
            assert!(rel(oracle.r_inv().unwrap(), &fast) <= 1e-8);
        }
        let single = displace_multi_reduced(&pre, &[Move { cache: &ca, position_index: 1 }], lambda).unwrap();
        let oracle = ReducedSystem::reduce(&moved(&sc, &wm, &[(a, ta[1])])).unwrap().with_inverse().unwrap();
        assert!(rel(oracle.r_inv().unwrap(), &single) <= 1e-8);
        assert!(displace_multi_reduced(&pre, &[Move { cache: &ca, position_index: 0 }, Move { cache: &ca, position_index: 1 }], lambda).is_err());
    }

    #[test]
    fn swap_twice_restores() {
        let spec = RandomScenarioSpec { n_tx: 2, n_rx: 2, n_ris: 4, n_env: 40, ..Default::default() };
        let (_, wm) = system(&spec, 8);
        let basis = EigenBasis::new(&wm).unwrap();
        let (a, b) = (0, 3);
        let (pa, pb) = (wm.positions()[a], wm.positions()[b]);
        let ca = basis.trajectory_cache(a, &[pa, pb], &[b]).unwrap();
        let cb = basis.trajectory_cache(b, &[pb, pa], &[a]).unwrap();
        let pre = basis.precompute();
        let zero = Complex64::new(0.0, 0.0);
        let swapped = displace_multi_reduced(pre, &[Move { cache: &ca, position_index: 1 }, Move { cache: &cb, position_index: 1 }], zero).unwrap();
        let restored = displace_multi_reduced(pre, &[Move { cache: &ca, position_index: 0 }, Move { cache: &cb, position_index: 0 }], zero).unwrap();
        let base = pre.shifted_reduce(zero).unwrap();
        assert!(rel(&base, &restored) <= 1e-8);
        assert!(rel(&base, &swapped) > 1e-6);
        // Moving only one onto the other's spot collides.
        assert!(matches!(displace_reduced(pre, &ca, 1, zero), Err(Error::Collision { .. })));
    }
}

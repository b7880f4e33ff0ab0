//! Seeded scenario generators: uniform random placement and the demo room.

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use super::{FreqGrid, RisElement, Scenario};
use crate::physics::{DipoleParams, Position};

#[derive(Clone, Debug)]
pub struct RandomScenarioSpec {
    pub n_tx: usize,
    pub n_rx: usize,
    pub n_ris: usize,
    pub n_env: usize,
    /// The first `n_dynamic` environment dipoles are marked dynamic.
    pub n_dynamic: usize,
    /// Side length of the square placement region, meters.
    pub extent: f64,
    /// Minimum distance between any two dipoles, meters.
    pub min_separation: f64,
    pub freq_grid: FreqGrid,
}

impl Default for RandomScenarioSpec {
    fn default() -> Self {
        Self {
            n_tx: 1,
            n_rx: 1,
            n_ris: 4,
            n_env: 20,
            n_dynamic: 0,
            extent: 2.0,
            min_separation: 0.04,
            freq_grid: FreqGrid::single(2.4),
        }
    }
}

pub const ANTENNA_F_RES: f64 = 2.4;
pub const ANTENNA_CHI: f64 = 0.5;
pub const ANTENNA_GAMMA: f64 = 0.5;
pub const RIS_CHI: f64 = 0.5;
pub const RIS_GAMMA: f64 = 0.1;
pub const RIS_STATE0: f64 = 2.2;
pub const RIS_STATE1: f64 = 2.6;

fn antenna(p: Position) -> DipoleParams {
    DipoleParams::new(p.x, p.y, ANTENNA_F_RES, ANTENNA_CHI, ANTENNA_GAMMA)
}

fn ris_element(p: Position) -> RisElement {
    RisElement::new(p.x, p.y, RIS_CHI, RIS_GAMMA, RIS_STATE0, RIS_STATE1)
}

fn scatterer(rng: &mut StdRng, p: Position) -> DipoleParams {
    DipoleParams::new(
        p.x,
        p.y,
        rng.random_range(1.8..3.0),
        rng.random_range(0.5..1.5),
        rng.random_range(0.05..0.3),
    )
}

/// Rejection sampling of a point at least `min_sep` from all `taken`.
fn place(rng: &mut StdRng, taken: &mut Vec<Position>, extent: f64, min_sep: f64) -> Position {
    let half = extent / 2.0;
    loop {
        let p = Position::new(rng.random_range(-half..half), rng.random_range(-half..half));
        if taken.iter().all(|q| q.distance(&p) >= min_sep) {
            taken.push(p);
            return p;
        }
    }
}

/// Uniformly placed dipoles with generic (seeded) scatterer parameters.
///
/// Panics if the requested density cannot be placed at `min_separation`.
pub fn random_scenario(spec: &RandomScenarioSpec, seed: u64) -> Scenario {
    let n = spec.n_tx + spec.n_rx + spec.n_ris + spec.n_env;
    let area_per_dipole = spec.extent * spec.extent / n.max(1) as f64;
    assert!(
        area_per_dipole > 2.0 * spec.min_separation * spec.min_separation,
        "placement region too crowded for {n} dipoles"
    );
    let mut rng = StdRng::seed_from_u64(seed);
    let mut taken = Vec::with_capacity(n);
    let (extent, sep) = (spec.extent, spec.min_separation);
    let tx = (0..spec.n_tx)
        .map(|_| antenna(place(&mut rng, &mut taken, extent, sep)))
        .collect();
    let rx = (0..spec.n_rx)
        .map(|_| antenna(place(&mut rng, &mut taken, extent, sep)))
        .collect();
    let ris = (0..spec.n_ris)
        .map(|_| ris_element(place(&mut rng, &mut taken, extent, sep)))
        .collect();
    let env = (0..spec.n_env)
        .map(|_| {
            let p = place(&mut rng, &mut taken, extent, sep);
            scatterer(&mut rng, p)
        })
        .collect();
    Scenario {
        freq_grid: spec.freq_grid,
        tx,
        rx,
        ris,
        env,
        dynamic_env: (0..spec.n_dynamic.min(spec.n_env)).collect(),
    }
}

/// 2 tx, 2 rx, a 16-element 1-bit RIS and 120 wall scatterers forming a
/// 3 m x 2 m enclosure with an opening in its right-hand wall.
pub fn demo_scenario() -> Scenario {
    const WIDTH: f64 = 3.0;
    const HEIGHT: f64 = 2.0;
    const OPENING: f64 = 0.5;
    const N_WALL: usize = 120;
    let mut rng = StdRng::seed_from_u64(2024);

    // Walk the perimeter counter-clockwise from the bottom-left corner,
    // skipping the opening centered on the right wall.
    let perimeter = 2.0 * (WIDTH + HEIGHT) - OPENING;
    let step = perimeter / N_WALL as f64;
    let (x0, y0) = (-WIDTH / 2.0, -HEIGHT / 2.0);
    let gap_start = WIDTH + (HEIGHT - OPENING) / 2.0;
    let env = (0..N_WALL)
        .map(|i| {
            let mut t = (i as f64 + 0.5) * step;
            if t >= gap_start {
                t += OPENING;
            }
            let (x, y) = if t < WIDTH {
                (x0 + t, y0)
            } else if t < WIDTH + HEIGHT {
                (x0 + WIDTH, y0 + (t - WIDTH))
            } else if t < 2.0 * WIDTH + HEIGHT {
                (x0 + WIDTH - (t - WIDTH - HEIGHT), y0 + HEIGHT)
            } else {
                (x0, y0 + HEIGHT - (t - 2.0 * WIDTH - HEIGHT))
            };
            let jitter = Position::new(rng.random_range(-0.01..0.01), rng.random_range(-0.01..0.01));
            scatterer(&mut rng, Position::new(x + jitter.x, y + jitter.y))
        })
        .collect();

    // Half-wavelength pitch at 2.4 GHz, just inside the left wall.
    let pitch = 0.0625;
    let ris = (0..16)
        .map(|i| ris_element(Position::new(-1.3, (i as f64 - 7.5) * pitch)))
        .collect();

    Scenario {
        freq_grid: FreqGrid {
            start_ghz: 2.3,
            stop_ghz: 2.5,
            n_points: 5,
        },
        tx: vec![antenna(Position::new(-0.6, 0.55)), antenna(Position::new(-0.6, 0.45))],
        rx: vec![antenna(Position::new(0.8, -0.45)), antenna(Position::new(0.8, -0.55))],
        ris,
        env,
        dynamic_env: Vec::new(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::Group;

    #[test]
    fn deterministic() {
        let spec = RandomScenarioSpec::default();
        assert_eq!(random_scenario(&spec, 3), random_scenario(&spec, 3));
        assert_ne!(random_scenario(&spec, 3), random_scenario(&spec, 4));
        assert_eq!(demo_scenario(), demo_scenario());
    }

    #[test]
    fn demo_shape() {
        let sc = demo_scenario();
        assert!(sc.validate().is_empty());
        let m = sc.build_index_map().unwrap();
        assert_eq!((m.n_tx(), m.n_rx(), m.n_ris(), m.n_env()), (2, 2, 16, 120));
        assert_eq!(m.range(Group::Primary).len(), 20);
        assert_eq!(m.s(), 120);
    }

    #[test]
    fn respects_separation() {
        let spec = RandomScenarioSpec { n_env: 80, n_ris: 12, ..Default::default() };
        let sc = random_scenario(&spec, 99);
        let m = sc.build_index_map().unwrap();
        let d = sc.canonical_dipoles(&m);
        for i in 0..d.len() {
            for j in 0..i {
                assert!(d[i].pos.distance(&d[j].pos) >= spec.min_separation);
            }
        }
    }
}

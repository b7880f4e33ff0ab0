//! Interaction matrix: inverse polarizabilities on the diagonal, negated
//! Green's functions off the diagonal.

use std::io::{Read, Write};

use faer::Mat;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{self, CMat};
use crate::physics::{green_function, inverse_polarizability, Position, Wavenumber};
use crate::scenario::{Group, IndexMap, RisConfiguration, Scenario};

const DUMP_MAGIC: &[u8; 4] = b"RISW";

#[derive(Clone, Debug)]
pub struct InteractionMatrix {
    w: CMat,
    map: IndexMap,
    f: f64,
    cfg: RisConfiguration,
    positions: Vec<Position>,
}

impl InteractionMatrix {
    /// Assembles `W` at frequency `f` (GHz) with `cfg` on the RIS diagonal.
    pub fn assemble(sc: &Scenario, map: &IndexMap, f: f64, cfg: &RisConfiguration) -> Result<Self> {
        let k = Wavenumber::from_ghz(f)?;
        let dipoles = sc.canonical_dipoles(map);
        let n = dipoles.len();
        let ris_diag = sc.configuration_to_inverse_polarizabilities(cfg, f)?;
        let positions: Vec<Position> = dipoles.iter().map(|d| d.pos).collect();

        let mut w = CMat::zeros(n, n);
        for (i, d) in dipoles.iter().enumerate() {
            w[(i, i)] = inverse_polarizability(f, d)?;
        }
        for (slot, c) in map.range(Group::Ris).zip(&ris_diag) {
            w[(slot, slot)] = *c;
        }
        for j in 0..n {
            for i in 0..j {
                let g = -green_function(&positions[i], &positions[j], k)?;
                w[(i, j)] = g;
                w[(j, i)] = g;
            }
        }
        Ok(Self {
            w,
            map: map.clone(),
            f,
            cfg: cfg.clone(),
            positions,
        })
    }

    /// Wraps an arbitrary matrix. Used by tests and by callers that
    /// modify couplings outside the dipole model.
    pub fn from_parts(
        w: CMat,
        map: IndexMap,
        f: f64,
        cfg: RisConfiguration,
        positions: Vec<Position>,
    ) -> Result<Self> {
        let n = map.n();
        if w.nrows() != n || w.ncols() != n {
            return Err(Error::ShapeMismatch(format!(
                "interaction matrix is {}x{}, index map has {n} dipoles",
                w.nrows(),
                w.ncols()
            )));
        }
        if positions.len() != n {
            return Err(Error::LengthMismatch { what: "positions", expected: n, got: positions.len() });
        }
        Ok(Self { w, map, f, cfg, positions })
    }

    pub fn matrix(&self) -> &CMat {
        &self.w
    }

    pub fn map(&self) -> &IndexMap {
        &self.map
    }

    /// Assembly frequency in GHz.
    pub fn freq(&self) -> f64 {
        self.f
    }

    pub fn wavenumber(&self) -> Wavenumber {
        Wavenumber::from_ghz(self.f).expect("frequency validated at assembly")
    }

    pub fn cfg(&self) -> &RisConfiguration {
        &self.cfg
    }

    /// Dipole positions in canonical order.
    pub fn positions(&self) -> &[Position] {
        &self.positions
    }

    pub fn block(&self, rows: Group, cols: Group) -> CMat {
        linalg::block(self.w.as_ref(), self.map.range(rows), self.map.range(cols))
    }

    pub fn ris_diagonal(&self) -> Vec<Complex64> {
        self.map.range(Group::Ris).map(|i| self.w[(i, i)]).collect()
    }

    /// Copy with the RIS diagonal replaced by `c`.
    pub fn set_ris_diagonal(&self, c: &[Complex64]) -> Result<Self> {
        let range = self.map.range(Group::Ris);
        if c.len() != range.len() {
            return Err(Error::LengthMismatch { what: "RIS diagonal", expected: range.len(), got: c.len() });
        }
        let mut out = self.clone();
        for (slot, v) in range.zip(c) {
            out.w[(slot, slot)] = *v;
        }
        out.cfg = RisConfiguration::Analog(c.to_vec());
        Ok(out)
    }

    /// Copy carrying configuration `cfg` (evaluated at this frequency).
    pub fn with_configuration(&self, sc: &Scenario, cfg: &RisConfiguration) -> Result<Self> {
        let c = sc.configuration_to_inverse_polarizabilities(cfg, self.f)?;
        let mut out = self.set_ris_diagonal(&c)?;
        out.cfg = cfg.clone();
        Ok(out)
    }

    /// Debug dump: a 16-byte header (`RISW`, u32 N, u32 reserved, u32
    /// padding) then N*N row-major (re, im) f64 pairs, all little-endian.
    pub fn write_binary<W: Write>(&self, mut out: W) -> Result<()> {
        let n = self.w.nrows();
        let n32 = u32::try_from(n).map_err(|_| Error::Domain(format!("matrix too large to dump: {n}")))?;
        out.write_all(DUMP_MAGIC)?;
        out.write_all(&n32.to_le_bytes())?;
        out.write_all(&0u32.to_le_bytes())?;
        out.write_all(&0u32.to_le_bytes())?;
        let mut buf = Vec::with_capacity(16 * n);
        for i in 0..n {
            buf.clear();
            for j in 0..n {
                let v = self.w[(i, j)];
                buf.extend_from_slice(&v.re.to_le_bytes());
                buf.extend_from_slice(&v.im.to_le_bytes());
            }
            out.write_all(&buf)?;
        }
        Ok(())
    }
}

/// Reads a matrix written by [`InteractionMatrix::write_binary`].
pub fn read_binary<R: Read>(mut input: R) -> Result<CMat> {
    let mut header = [0u8; 16];
    input.read_exact(&mut header)?;
    if &header[0..4] != DUMP_MAGIC {
        return Err(Error::Parse("bad magic in interaction matrix dump".into()));
    }
    let n = u32::from_le_bytes(header[4..8].try_into().unwrap()) as usize;
    let mut data = vec![0u8; 16 * n * n];
    input.read_exact(&mut data)?;
    let f = |off: usize| f64::from_le_bytes(data[off..off + 8].try_into().unwrap());
    Ok(Mat::from_fn(n, n, |i, j| {
        let off = 16 * (i * n + j);
        Complex64::new(f(off), f(off + 8))
    }))
}

//! Dipole model: Lorentzian inverse polarizability and the 2D free-space
//! Green's function, under the `exp(-j w t)` time convention.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::specfun::hankel0_first_kind;

/// Speed of light in vacuum, m/s.
pub const C0: f64 = 299_792_458.0;

/// A point in the plane, meters.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Position {
    pub x: f64,
    pub y: f64,
}

impl Position {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn distance(&self, other: &Position) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

/// Position and Lorentzian resonance parameters of one polarizable element.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DipoleParams {
    pub pos: Position,
    /// Resonance frequency, GHz.
    pub f_res: f64,
    /// Oscillator strength, dimensionless.
    pub chi: f64,
    /// Damping, GHz.
    pub gamma: f64,
}

impl DipoleParams {
    pub fn new(x: f64, y: f64, f_res: f64, chi: f64, gamma: f64) -> Self {
        Self {
            pos: Position::new(x, y),
            f_res,
            chi,
            gamma,
        }
    }

    /// Violated parameter invariants, as `(field, message)` pairs.
    pub fn check(&self) -> Vec<(&'static str, String)> {
        let mut out = Vec::new();
        let fields = [
            ("x", self.pos.x),
            ("y", self.pos.y),
            ("f_res", self.f_res),
            ("chi", self.chi),
            ("gamma", self.gamma),
        ];
        for (name, v) in fields {
            if !v.is_finite() {
                out.push((name, format!("non-finite value {v}")));
            }
        }
        if self.f_res.is_finite() && self.f_res <= 0.0 {
            out.push(("f_res", format!("must be > 0, got {}", self.f_res)));
        }
        if self.chi.is_finite() && self.chi <= 0.0 {
            out.push(("chi", format!("must be > 0, got {}", self.chi)));
        }
        if self.gamma.is_finite() && self.gamma < 0.0 {
            out.push(("gamma", format!("must be >= 0, got {}", self.gamma)));
        }
        out
    }

    pub fn with_resonance(self, f_res: f64) -> Self {
        Self { f_res, ..self }
    }
}

/// Free-space wavenumber in rad/m.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Wavenumber(f64);

impl Wavenumber {
    pub fn from_ghz(f_ghz: f64) -> Result<Self> {
        if !f_ghz.is_finite() || f_ghz <= 0.0 {
            return Err(Error::Domain(format!("frequency must be > 0 GHz, got {f_ghz}")));
        }
        Ok(Self(2.0 * PI * f_ghz * 1e9 / C0))
    }

    pub fn from_rad_per_m(k: f64) -> Result<Self> {
        if !k.is_finite() || k <= 0.0 {
            return Err(Error::Domain(format!("wavenumber must be > 0, got {k}")));
        }
        Ok(Self(k))
    }

    pub fn get(self) -> f64 {
        self.0
    }
}

/// Lorentzian inverse polarizability
/// `(f_res^2 - f^2) / (chi f^2) + j gamma / (chi f)` at frequency `f` (GHz).
pub fn inverse_polarizability(f: f64, d: &DipoleParams) -> Result<Complex64> {
    if !f.is_finite() || f <= 0.0 {
        return Err(Error::Domain(format!("frequency must be > 0 GHz, got {f}")));
    }
    let re = (d.f_res * d.f_res - f * f) / (d.chi * f * f);
    let im = d.gamma / (d.chi * f);
    Ok(Complex64::new(re, im))
}

/// `(j/4) H0^(1)(k |r_i - r_j|)`.
pub fn green_function(ri: &Position, rj: &Position, k: Wavenumber) -> Result<Complex64> {
    let d = ri.distance(rj);
    if d == 0.0 {
        return Err(Error::CoincidentPositions { x: ri.x, y: ri.y });
    }
    let h = hankel0_first_kind(k.get() * d)?;
    Ok(Complex64::new(0.0, 0.25) * h)
}

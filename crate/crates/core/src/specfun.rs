//! Cylindrical Bessel functions of order zero for real arguments.
//!
//! `J0` and `Y0` use rational approximations on `[0, 5]` and the
//! Hankel amplitude/phase asymptotic form beyond, with the classic
//! Cephes coefficient sets (peak absolute error around 1e-15).

use std::f64::consts::{FRAC_2_PI, FRAC_PI_4};

use num_complex::Complex64;

use crate::error::{Error, Result};

/// sqrt(2/pi)
const SQRT_FRAC_2_PI: f64 = 0.797_884_560_802_865_4;

// Squares of the first two zeros of J0.
const J0_ZERO1_SQ: f64 = 5.783_185_962_946_784;
const J0_ZERO2_SQ: f64 = 30.471_262_343_662_087;

const SMALL_RANGE: f64 = 5.0;

/// Bessel function of the first kind, order zero.
pub fn bessel_j0(x: f64) -> Result<f64> {
    if !x.is_finite() || x < 0.0 {
        return Err(Error::Domain(format!("bessel_j0 requires finite x >= 0, got {x}")));
    }
    Ok(j0_unchecked(x))
}

/// Bessel function of the second kind, order zero.
pub fn bessel_y0(x: f64) -> Result<f64> {
    if !x.is_finite() || x <= 0.0 {
        return Err(Error::Domain(format!("bessel_y0 requires finite x > 0, got {x}")));
    }
    if x <= SMALL_RANGE {
        let z = x * x;
        // Y0(x) - (2/pi) ln(x) J0(x) is smooth in x^2.
        let w = polevl(z, &YP) / p1evl(z, &YQ);
        return Ok(w + FRAC_2_PI * x.ln() * j0_unchecked(x));
    }
    let (p, q) = asymptotic_pq(x);
    let xn = x - FRAC_PI_4;
    let (s, c) = xn.sin_cos();
    Ok((p * s + 5.0 / x * q * c) * SQRT_FRAC_2_PI / x.sqrt())
}

/// Hankel function of the first kind, order zero: `J0(x) + j Y0(x)`.
pub fn hankel0_first_kind(x: f64) -> Result<Complex64> {
    let y = bessel_y0(x)?;
    let j = bessel_j0(x)?;
    Ok(Complex64::new(j, y))
}

fn j0_unchecked(x: f64) -> f64 {
    if x <= SMALL_RANGE {
        let z = x * x;
        if x < 1e-5 {
            return 1.0 - z / 4.0;
        }
        return (z - J0_ZERO1_SQ) * (z - J0_ZERO2_SQ) * polevl(z, &RP) / p1evl(z, &RQ);
    }
    let (p, q) = asymptotic_pq(x);
    let xn = x - FRAC_PI_4;
    let (s, c) = xn.sin_cos();
    (p * c - 5.0 / x * q * s) * SQRT_FRAC_2_PI / x.sqrt()
}

/// Amplitude/phase rational factors shared by J0 and Y0 for x > 5.
fn asymptotic_pq(x: f64) -> (f64, f64) {
    let z = 25.0 / (x * x);
    let p = polevl(z, &PP) / polevl(z, &PQ);
    let q = polevl(z, &QP) / p1evl(z, &QQ);
    (p, q)
}

/// Horner evaluation, coefficients from highest degree down.
fn polevl(x: f64, coef: &[f64]) -> f64 {
    coef.iter().fold(0.0, |acc, &c| acc * x + c)
}

/// Like [`polevl`] with an implicit leading coefficient of one.
fn p1evl(x: f64, coef: &[f64]) -> f64 {
    coef.iter().fold(1.0, |acc, &c| acc * x + c)
}

const RP: [f64; 4] = [
    -4.794_432_209_782_018e9,
    1.956_174_919_465_565_8e12,
    -2.492_483_443_609_677_2e14,
    9.708_622_510_473_064e15,
];

const RQ: [f64; 8] = [
    4.995_631_471_526_51e2,
    1.737_854_016_763_747e5,
    4.844_096_583_399_621e7,
    1.118_555_370_453_568_3e10,
    2.112_775_201_154_892e12,
    3.105_182_298_574_225_6e14,
    3.181_219_559_432_049_6e16,
    1.710_862_940_810_431_5e18,
];

const PP: [f64; 7] = [
    7.969_367_292_973_471e-4,
    8.283_523_921_074_408e-2,
    1.239_533_716_464_143,
    5.447_250_030_587_687,
    8.747_165_001_998_17,
    5.303_240_382_353_949,
    1.0,
];

const PQ: [f64; 7] = [
    9.244_088_105_588_637e-4,
    8.562_884_743_544_745e-2,
    1.253_527_439_010_589_5,
    5.470_977_403_304_171,
    8.761_908_832_370_695,
    5.306_052_882_353_947,
    1.0,
];

const QP: [f64; 8] = [
    -1.136_638_388_984_691_6e-2,
    -1.282_527_186_705_093_1,
    -1.955_395_442_577_359_7e1,
    -9.320_601_521_237_683e1,
    -1.776_811_679_804_880_6e2,
    -1.470_775_051_549_511_8e2,
    -5.141_053_267_665_993e1,
    -6.050_143_506_007_285,
];

const QQ: [f64; 7] = [
    6.431_782_561_181_78e1,
    8.564_300_259_769_806e2,
    3.882_401_836_054_016_3e3,
    7.240_467_741_956_525e3,
    5.930_727_011_873_169e3,
    2.062_093_316_603_278_3e3,
    2.420_057_402_402_914e2,
];

const YP: [f64; 8] = [
    1.559_243_678_552_357_4e4,
    -1.466_392_959_039_716e7,
    5.435_264_770_518_765e9,
    -9.821_360_657_179_115e11,
    8.759_063_943_953_67e13,
    -3.466_283_033_847_297e15,
    4.427_332_685_725_698_4e16,
    -1.849_508_004_369_866_8e16,
];

const YQ: [f64; 7] = [
    1.041_283_536_642_598_4e3,
    6.261_073_301_371_35e5,
    2.689_196_333_938_141_5e8,
    8.640_024_871_039_35e10,
    2.029_796_127_501_055_5e13,
    3.171_577_528_429_750_5e15,
    2.505_962_561_726_530_6e17,
];

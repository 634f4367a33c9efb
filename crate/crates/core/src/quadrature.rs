//! Globally adaptive Gauss–Kronrod (7/15 point) quadrature.
//!
//! The interval with the largest local error estimate is bisected until the
//! summed estimate meets the requested tolerance. Semi-infinite ranges are
//! mapped onto `[0, 1)` with `x = a + t / (1 - t)`.

#![allow(clippy::excessive_precision)]

use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.000_000_000_000_000_000_000_000_000_000_000,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];

// Gauss weights for the nodes XGK[1], XGK[3], XGK[5], XGK[7].
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

/// Requested accuracy for [`integrate`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerance {
    pub absolute: f64,
    pub relative: f64,
    pub max_intervals: usize,
}

impl Tolerance {
    pub const fn new(absolute: f64, relative: f64) -> Self {
        Self {
            absolute,
            relative,
            max_intervals: 2000,
        }
    }
}

impl Default for Tolerance {
    fn default() -> Self {
        Self::new(1e-13, 1e-13)
    }
}

/// Value of an integral and the estimated absolute error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Integral {
    pub value: f64,
    pub error: f64,
}

#[derive(Debug, Clone, Copy)]
struct Segment {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
    magnitude: f64,
}

fn kronrod<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> Segment {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    let mut magnitude = libm::fabs(fc) * WGK[7];
    for j in 0..7 {
        let dx = half * XGK[j];
        let f1 = f(center - dx);
        let f2 = f(center + dx);
        kronrod += WGK[j] * (f1 + f2);
        magnitude += WGK[j] * (libm::fabs(f1) + libm::fabs(f2));
        if j % 2 == 1 {
            gauss += WG[j / 2] * (f1 + f2);
        }
    }
    Segment {
        a,
        b,
        value: kronrod * half,
        error: libm::fabs((kronrod - gauss) * half),
        magnitude: magnitude * libm::fabs(half),
    }
}

/// Integrates `f` over the finite interval `[a, b]`.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: Tolerance) -> Result<Integral> {
    if !(a.is_finite() && b.is_finite()) {
        return Err(Error::InvalidInput("integration bounds must be finite"));
    }
    if a == b {
        return Ok(Integral {
            value: 0.0,
            error: 0.0,
        });
    }
    let mut segments: Vec<Segment> = Vec::with_capacity(64);
    segments.push(kronrod(&f, a, b));
    loop {
        let value: f64 = segments.iter().map(|s| s.value).sum();
        let error: f64 = segments.iter().map(|s| s.error).sum();
        let magnitude: f64 = segments.iter().map(|s| s.magnitude).sum();
        if !value.is_finite() {
            return Err(Error::Numerical(format!(
                "integrand is not finite on [{a}, {b}]"
            )));
        }
        // Below this level the estimate is dominated by rounding.
        let floor = 50.0 * f64::EPSILON * magnitude;
        let target = tol
            .absolute
            .max(tol.relative * libm::fabs(value))
            .max(floor);
        if error <= target {
            return Ok(Integral { value, error });
        }
        if segments.len() >= tol.max_intervals {
            return Err(Error::Numerical(format!(
                "quadrature on [{a}, {b}] did not reach tolerance {target:e} (estimate {error:e}) within {} intervals",
                tol.max_intervals
            )));
        }
        let (worst, _) = segments
            .iter()
            .enumerate()
            .max_by(|x, y| x.1.error.total_cmp(&y.1.error))
            .expect("at least one segment");
        let seg = segments.swap_remove(worst);
        let mid = 0.5 * (seg.a + seg.b);
        if mid <= seg.a || mid >= seg.b {
            // Interval can no longer be split in floating point.
            return Ok(Integral { value, error });
        }
        segments.push(kronrod(&f, seg.a, mid));
        segments.push(kronrod(&f, mid, seg.b));
    }
}

/// Integrates `f` over `[a, ∞)`.
pub fn integrate_to_infinity<F: Fn(f64) -> f64>(f: F, a: f64, tol: Tolerance) -> Result<Integral> {
    if !a.is_finite() {
        return Err(Error::InvalidInput("lower bound must be finite"));
    }
    integrate(
        |t| {
            let s = 1.0 - t;
            let v = f(a + t / s) / (s * s);
            if v.is_finite() {
                v
            } else {
                0.0
            }
        },
        0.0,
        1.0,
        tol,
    )
}

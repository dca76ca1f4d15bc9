//! Arithmetic on the circle group ℝ/ℤ, the exponential `e(x) = exp(2πix)`,
//! and reduction of complex numbers modulo the Gaussian integers.
//!
//! Every value of ℝ/ℤ is stored by its canonical representative in `[0, 1)`.
//! The symmetric distance to the nearest integer only appears in
//! [`CircleValue::norm`].

use std::f64::consts::PI;
use std::fmt;
use std::ops::{Add, Neg, Sub};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Complex numbers used for `e(x)` and the coloring functional.
pub type ComplexValue = Complex64;

/// Default slack added to every strict inequality so that rounding cannot
/// flip an open condition.
pub const DEFAULT_SLACK: f64 = 1e-9;

/// A class of ℝ/ℤ, stored as its representative in `[0, 1)`.
#[derive(Clone, Copy, Default, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct CircleValue(f64);

impl CircleValue {
    pub const ZERO: CircleValue = CircleValue(0.0);

    pub fn new(x: f64) -> Result<Self> {
        frac(x)
    }

    /// Reduces a value already known to be finite.
    pub(crate) fn wrap(x: f64) -> Self {
        debug_assert!(x.is_finite(), "wrap of non-finite {x}");
        let r = x - x.floor();
        // x slightly below an integer can round up to exactly 1.0
        CircleValue(if r >= 1.0 { 0.0 } else { r })
    }

    #[inline]
    pub fn value(self) -> f64 {
        self.0
    }

    #[inline]
    pub fn is_zero(self) -> bool {
        self.0 == 0.0
    }

    /// `||x||_{ℝ/ℤ} = min({x}, 1 - {x})`.
    #[inline]
    pub fn norm(self) -> f64 {
        self.0.min(1.0 - self.0)
    }

    /// The representative in `[-1/2, 1/2)`.
    #[inline]
    pub fn signed(self) -> f64 {
        if self.0 >= 0.5 {
            self.0 - 1.0
        } else {
            self.0
        }
    }

    /// Multiplication by an integer, reduced mod 1.
    pub fn times(self, k: i64) -> Self {
        let kf = k as f64;
        let p = self.0 * kf;
        let err = self.0.mul_add(kf, -p);
        CircleValue::wrap(CircleValue::wrap(p).0 + err)
    }
}

impl fmt::Debug for CircleValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl fmt::Display for CircleValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(&self.0, f)
    }
}

impl TryFrom<f64> for CircleValue {
    type Error = Error;

    fn try_from(x: f64) -> Result<Self> {
        frac(x)
    }
}

impl From<CircleValue> for f64 {
    fn from(c: CircleValue) -> f64 {
        c.0
    }
}

impl Add for CircleValue {
    type Output = CircleValue;

    fn add(self, rhs: CircleValue) -> CircleValue {
        let s = self.0 + rhs.0;
        CircleValue(if s >= 1.0 { s - 1.0 } else { s })
    }
}

impl Neg for CircleValue {
    type Output = CircleValue;

    fn neg(self) -> CircleValue {
        if self.0 == 0.0 {
            self
        } else {
            CircleValue(1.0 - self.0)
        }
    }
}

impl Sub for CircleValue {
    type Output = CircleValue;

    fn sub(self, rhs: CircleValue) -> CircleValue {
        self + (-rhs)
    }
}

/// Fractional part `{x} = x - ⌊x⌋`.
pub fn frac(x: f64) -> Result<CircleValue> {
    if !x.is_finite() {
        return Err(Error::Domain(format!("frac of non-finite value {x}")));
    }
    Ok(CircleValue::wrap(x))
}

/// `||x||_{ℝ/ℤ}`.
#[inline]
pub fn rz_norm(x: CircleValue) -> f64 {
    x.norm()
}

/// The nearest-integer function `[x] = ⌊x + 1/2⌋`; half-integers round up.
pub fn nearest_int(x: f64) -> Result<i64> {
    if !x.is_finite() {
        return Err(Error::Domain(format!("nearest_int of non-finite value {x}")));
    }
    let fl = x.floor();
    // x - fl is exact, so this is exactly ⌊x + 1/2⌋ without rounding x + 0.5
    let r = if x - fl >= 0.5 { fl + 1.0 } else { fl };
    // i64::MAX is not representable; 2^63 is the first value out of range
    const TWO_63: f64 = 9_223_372_036_854_775_808.0;
    if !(-TWO_63..TWO_63).contains(&r) {
        return Err(Error::Overflow(format!("[{x}] exceeds the 64-bit integer range")));
    }
    Ok(r as i64)
}

/// `e(x) = exp(2πix)`.
pub fn circle_exp(x: CircleValue) -> ComplexValue {
    let (s, c) = (2.0 * PI * x.0).sin_cos();
    Complex64::new(c, s)
}

/// `e(x) - 1`, computed as `(-2 sin²(πx), sin(2πx))` to avoid cancellation
/// near `x = 0`.
pub fn circle_exp_minus_one(x: CircleValue) -> ComplexValue {
    let (s, c) = (PI * x.0).sin_cos();
    Complex64::new(-2.0 * s * s, 2.0 * s * c)
}

/// A class of ℂ/ℤ[i], represented in the unit square `[0, 1)²`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GaussianResidue {
    pub x: f64,
    pub y: f64,
}

/// Coordinatewise fractional part. `z` must be finite.
pub fn gaussian_reduce(z: ComplexValue) -> GaussianResidue {
    GaussianResidue { x: CircleValue::wrap(z.re).0, y: CircleValue::wrap(z.im).0 }
}

/// Euclidean distance from `z` to the nearest Gaussian integer.
pub fn gaussian_dist(z: ComplexValue) -> f64 {
    let r = gaussian_reduce(z);
    let dx = r.x.min(1.0 - r.x);
    let dy = r.y.min(1.0 - r.y);
    dx.hypot(dy)
}

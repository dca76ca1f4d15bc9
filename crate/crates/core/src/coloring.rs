//! The progression-blocking coloring: `f(x) = Σ (e(a_i) - 1)` reduced modulo
//! `ℤ[i]` and bucketed into squares of side `δ₂/√2` (diameter `δ₂`).

use std::f64::consts::SQRT_2;

use serde::{Deserialize, Serialize};

use crate::circle::{circle_exp_minus_one, gaussian_dist, gaussian_reduce, ComplexValue, GaussianResidue};
use crate::construction::{is_member, Params};
use crate::error::{Error, Result};
use crate::l1::SparsePoint;

/// Row-major index of a grid cell of the fundamental square.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ColorId(pub u64);

/// Half-open square grid on `[0, 1)²`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ColorGrid {
    pub side: f64,
    pub per_side: u64,
    pub tol: f64,
}

impl ColorGrid {
    pub fn new(p: &Params) -> Self {
        ColorGrid { side: p.delta2 / SQRT_2, per_side: (SQRT_2 / p.delta2).ceil() as u64, tol: p.tol }
    }

    pub fn cell_count(&self) -> u64 {
        self.per_side * self.per_side
    }

    fn axis(&self, v: f64) -> (u64, bool) {
        let q = v / self.side;
        let k = (q.floor() as u64).min(self.per_side - 1);
        let lo = k as f64 * self.side;
        let hi = ((k + 1) as f64 * self.side).min(1.0);
        let fragile = v - lo < self.tol || hi - v < self.tol;
        (k, fragile)
    }

    /// The cell containing `r`, and whether `r` lies within `τ` of its edge.
    pub fn locate(&self, r: GaussianResidue) -> (ColorId, bool) {
        let (row, f1) = self.axis(r.x);
        let (col, f2) = self.axis(r.y);
        (ColorId(row * self.per_side + col), f1 || f2)
    }

    /// `(row, col)` of a cell.
    pub fn coords(&self, c: ColorId) -> (u64, u64) {
        (c.0 / self.per_side, c.0 % self.per_side)
    }
}

/// `f(x) = Σ_i (e(a_i) - 1)` over the support.
pub fn functional_f(x: &SparsePoint) -> ComplexValue {
    x.iter().map(|(_, v)| circle_exp_minus_one(v)).sum()
}

pub fn color_of(x: &SparsePoint, p: &Params) -> ColorId {
    color_with_flag(x, &ColorGrid::new(p)).0
}

/// Color and boundary-fragility flag on a prebuilt grid.
pub fn color_with_flag(x: &SparsePoint, grid: &ColorGrid) -> (ColorId, bool) {
    grid.locate(gaussian_reduce(functional_f(x)))
}

/// `f(x) - 2 f(x+s) + f(x+2s)`.
pub fn second_difference(x: &SparsePoint, s: &SparsePoint) -> Result<ComplexValue> {
    let x1 = x.add(s)?;
    let x2 = x1.add(s)?;
    Ok(functional_f(x) - functional_f(&x1) * 2.0 + functional_f(&x2))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ObstructionRecord {
    pub second_diff: ComplexValue,
    pub modulus: f64,
    pub lower_bound: f64,
    pub upper_bound: f64,
    pub colors: [ColorId; 3],
}

/// Checks that `x, x+s, x+2s` are not monochromatic for a member `s`.
pub fn assert_blocked(x: &SparsePoint, s: &SparsePoint, p: &Params) -> Result<ObstructionRecord> {
    let cert = is_member(s, p)?;
    if !cert.is_member {
        return Err(Error::Precondition(format!("difference is not in S_m (clause {:?} fails)", cert.failed_clause)));
    }
    let grid = ColorGrid::new(p);
    let x1 = x.add(s)?;
    let x2 = x1.add(s)?;
    let (f0, f1, f2) = (functional_f(x), functional_f(&x1), functional_f(&x2));
    let second_diff = f0 - f1 * 2.0 + f2;
    let modulus = second_diff.norm();
    let lower_bound = 2.0 * p.delta2;
    let upper_bound = 1.0 - 2.0 * p.delta2;
    let colors = [f0, f1, f2].map(|f| grid.locate(gaussian_reduce(f)).0);
    if colors[0] == colors[1] && colors[1] == colors[2] {
        return Err(Error::ConstructionViolation(format!("monochromatic progression, color {}", colors[0].0)));
    }
    if !(lower_bound + p.tol < modulus && modulus < upper_bound - p.tol) {
        return Err(Error::ConstructionViolation(format!(
            "second difference modulus {modulus} outside ({lower_bound}, {upper_bound})"
        )));
    }
    debug_assert!(gaussian_dist(second_diff) > lower_bound);
    Ok(ObstructionRecord { second_diff, modulus, lower_bound, upper_bound, colors })
}

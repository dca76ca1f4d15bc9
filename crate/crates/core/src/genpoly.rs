//! Special generalized polynomials `L(n^{j₁}a₁, …, n^{j_ℓ}a_ℓ)` with
//! `L(x) = x`, `L(x₁, …, x_ℓ) = x₁·[L(x₂, …, x_ℓ)]`, and the nil-Bohr
//! neighborhoods they cut out.
//!
//! Coefficients are taken to be exactly the binary64 values supplied.
//! Evaluation carries a double-double accumulator so the fractional part of
//! `n^j·a` stays accurate far beyond the point where `n^j·a` itself has no
//! fractional bits left in a plain double.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::circle::{nearest_int, CircleValue};
use crate::error::{Error, Result};

/// Largest integer magnitude with an exact binary64 representation.
pub const EXACT_INT: u64 = 1 << 53;

/// Unevaluated sum `hi + lo` with `|lo| ≤ ulp(hi)/2`.
#[derive(Clone, Copy, Debug)]
struct Dd {
    hi: f64,
    lo: f64,
}

impl Dd {
    fn two_sum(a: f64, b: f64) -> Dd {
        let s = a + b;
        let bb = s - a;
        let e = (a - (s - bb)) + (b - bb);
        Dd { hi: s, lo: e }
    }

    /// Exact product of two doubles.
    fn prod(a: f64, b: f64) -> Dd {
        let p = a * b;
        Dd { hi: p, lo: a.mul_add(b, -p) }
    }

    /// `self·k` for `|k| ≤ 2^53`.
    fn mul_int(self, k: i64) -> Dd {
        let kf = k as f64;
        let p = Dd::prod(self.hi, kf);
        Dd::two_sum(p.hi, p.lo + self.lo * kf)
    }

    /// `⌊hi + lo + 1/2⌋`.
    fn nearest(self) -> Result<i64> {
        let fl = self.hi.floor();
        let r = (self.hi - fl) + self.lo;
        nearest_int(r).and_then(|d| nearest_int(fl).map(|f| f + d))
    }

    fn frac(self) -> CircleValue {
        let fl = self.hi.floor();
        CircleValue::wrap((self.hi - fl) + self.lo)
    }
}

/// `L(values)` evaluated by right fold in plain double precision.
pub fn eval_l(values: &[f64]) -> Result<f64> {
    let (last, rest) = values.split_last().ok_or_else(|| Error::Domain("L of an empty list".into()))?;
    rest.iter().rev().try_fold(*last, |acc, &x| {
        let k = nearest_int(acc)?;
        Ok(x * k as f64)
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<(u32, f64)>", into = "Vec<(u32, f64)>")]
pub struct SpecialGenPoly {
    terms: Vec<(u32, f64)>,
}

impl TryFrom<Vec<(u32, f64)>> for SpecialGenPoly {
    type Error = Error;

    fn try_from(terms: Vec<(u32, f64)>) -> Result<Self> {
        SpecialGenPoly::new(terms)
    }
}

impl From<SpecialGenPoly> for Vec<(u32, f64)> {
    fn from(p: SpecialGenPoly) -> Self {
        p.terms
    }
}

impl SpecialGenPoly {
    /// `terms` lists `(j_i, a_i)` from the outermost factor inwards.
    pub fn new(terms: Vec<(u32, f64)>) -> Result<Self> {
        if terms.is_empty() {
            return Err(Error::Domain("a special generalized polynomial needs at least one term".into()));
        }
        if let Some((j, a)) = terms.iter().find(|t| !t.1.is_finite()) {
            return Err(Error::Domain(format!("coefficient {a} of n^{j} is not finite")));
        }
        Ok(SpecialGenPoly { terms })
    }

    /// A single term `n^j·a`.
    pub fn monomial(j: u32, a: f64) -> Result<Self> {
        SpecialGenPoly::new(vec![(j, a)])
    }

    pub fn terms(&self) -> &[(u32, f64)] {
        &self.terms
    }

    /// `Σ j_i`.
    pub fn degree(&self) -> u32 {
        self.terms.iter().map(|t| t.0).sum()
    }

    /// `{L(n^{j₁}a₁, …, n^{j_ℓ}a_ℓ)}`.
    pub fn eval(&self, n: u64) -> Result<CircleValue> {
        let leaf = |t: usize| -> Result<Dd> {
            let (j, a) = self.terms[t];
            let nj = checked_pow(n, j)
                .ok_or_else(|| Error::Overflow(format!("term {} (n^{j}·{a}) at n = {n}: n^{j} exceeds 2^53", t + 1)))?;
            Ok(Dd::prod(nj as f64, a))
        };
        let last = self.terms.len() - 1;
        let mut v = leaf(last)?;
        for t in (0..last).rev() {
            let k = v.nearest()?;
            if k.unsigned_abs() > EXACT_INT {
                return Err(Error::Overflow(format!(
                    "term {}: inner bracket [{}] at n = {n} exceeds 2^53",
                    t + 1,
                    v.hi
                )));
            }
            v = leaf(t)?.mul_int(k);
        }
        if !v.hi.is_finite() {
            return Err(Error::Overflow(format!("value at n = {n} is not finite")));
        }
        Ok(v.frac())
    }
}

fn checked_pow(n: u64, j: u32) -> Option<u64> {
    n.checked_pow(j).filter(|&v| v <= EXACT_INT)
}

impl fmt::Display for SpecialGenPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("L(")?;
        for (k, (j, a)) in self.terms.iter().enumerate() {
            if k > 0 {
                f.write_str(", ")?;
            }
            match j {
                0 => write!(f, "{a}")?,
                1 => write!(f, "n·{a}")?,
                _ => write!(f, "n^{j}·{a}")?,
            }
        }
        f.write_str(")")
    }
}

#[derive(Deserialize)]
struct NilBohrRepr {
    polys: Vec<SpecialGenPoly>,
    epsilon: f64,
    degree_bound: u32,
}

/// `{n : ||P_i(n)|| < ε for every i}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "NilBohrRepr")]
pub struct NilBohrNbhd {
    polys: Vec<SpecialGenPoly>,
    epsilon: f64,
    degree_bound: u32,
}

impl TryFrom<NilBohrRepr> for NilBohrNbhd {
    type Error = Error;

    fn try_from(r: NilBohrRepr) -> Result<Self> {
        NilBohrNbhd::new(r.polys, r.epsilon, r.degree_bound)
    }
}

impl NilBohrNbhd {
    pub fn new(polys: Vec<SpecialGenPoly>, epsilon: f64, degree_bound: u32) -> Result<Self> {
        if epsilon.is_nan() || epsilon <= 0.0 {
            return Err(Error::Config(format!("nil-Bohr width {epsilon} must be positive")));
        }
        if let Some(p) = polys.iter().find(|p| p.degree() > degree_bound) {
            return Err(Error::Config(format!("{p} has degree {} above the bound {degree_bound}", p.degree())));
        }
        Ok(NilBohrNbhd { polys, epsilon, degree_bound })
    }

    pub fn polys(&self) -> &[SpecialGenPoly] {
        &self.polys
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn degree_bound(&self) -> u32 {
        self.degree_bound
    }

    /// `||P_i(n)||` for every polynomial.
    pub fn norms(&self, n: u64) -> Result<Vec<f64>> {
        self.polys.iter().map(|p| p.eval(n).map(CircleValue::norm)).collect()
    }

    pub fn describe(&self) -> String {
        let polys: Vec<String> = self.polys.iter().map(|p| p.to_string()).collect();
        format!("[{}] with ε = {}, degree ≤ {}", polys.join("; "), self.epsilon, self.degree_bound)
    }
}

/// True iff `||P_i(n)|| < ε - τ` for every `i`; vacuous for an empty family.
pub fn nilbohr_contains(nb: &NilBohrNbhd, n: u64, tol: f64) -> Result<bool> {
    for p in &nb.polys {
        if p.eval(n)?.norm() >= nb.epsilon - tol {
            return Ok(false);
        }
    }
    Ok(true)
}

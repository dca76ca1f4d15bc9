//! The sets `S_m` and `S_∞`: parameter validation, membership with
//! certificates, and seeded sampling of members.
//!
//! A point `a` lies in `S_m` when some index `i` satisfies, with window
//! `w = (2 - η_m)·δ₂`:
//!
//! 1. `||a_i + δ₁|| < w`,
//! 2. `||a_j|| < w` for every `j ≠ i`,
//! 3. `|Σ_{j≠i} ||a_j|| - δ₁| < w`.
//!
//! Every strict inequality is tested with an extra slack `τ`.

use std::f64::consts::PI;

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::circle::{CircleValue, DEFAULT_SLACK};
use crate::error::{Error, Result};
use crate::l1::{Ambient, Index, SparsePoint};

/// Rule producing the slack `η_m`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EtaPolicy {
    /// `η_m = 2^{-100 m}`, and `η_∞ = 0`.
    #[default]
    Dyadic,
    /// `η = 0` at every level, i.e. the sets `S_∞`.
    Zero,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EtaValue {
    pub value: f64,
    /// Set when the policy asks for a positive value below the double range.
    pub underflow: bool,
}

/// `η_m` under `policy`. The dyadic value is `2^{-100m}` evaluated as a power
/// of two, so it is exact until it leaves the subnormal range at `m = 11`.
pub fn eta(m: Ambient, policy: EtaPolicy) -> EtaValue {
    match (m, policy) {
        (_, EtaPolicy::Zero) | (Ambient::Unbounded, _) => EtaValue { value: 0.0, underflow: false },
        (Ambient::Bounded(m), EtaPolicy::Dyadic) => {
            let value = (-100.0 * f64::from(m)).exp2();
            EtaValue { value, underflow: value == 0.0 }
        }
    }
}

fn default_tol() -> f64 {
    DEFAULT_SLACK
}

/// Construction constants.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Params {
    pub delta1: f64,
    pub delta2: f64,
    pub m: Ambient,
    #[serde(default)]
    pub eta_policy: EtaPolicy,
    #[serde(default = "default_tol")]
    pub tol: f64,
}

impl Default for Params {
    fn default() -> Self {
        Params::new(0.1, 1e-4, Ambient::Bounded(2000))
    }
}

impl Params {
    pub fn new(delta1: f64, delta2: f64, m: Ambient) -> Self {
        Params { delta1, delta2, m, eta_policy: EtaPolicy::Dyadic, tol: DEFAULT_SLACK }
    }

    pub fn with_m(self, m: Ambient) -> Self {
        Params { m, ..self }
    }

    pub fn eta(&self) -> EtaValue {
        eta(self.m, self.eta_policy)
    }

    /// `w = (2 - η_m)·δ₂`, the half-width of every membership interval.
    pub fn window(&self) -> f64 {
        (2.0 - self.eta().value) * self.delta2
    }

    /// `δ₁/δ₂`, the number of small coordinates of the canonical witness.
    /// Meaningful only for validated parameters.
    pub fn ratio(&self) -> u64 {
        (self.delta1 / self.delta2).round() as u64
    }

    pub fn validate(&self) -> Result<ValidationReport> {
        if !(self.tol.is_finite() && self.tol >= 0.0) {
            return Err(Error::InvalidParams {
                clause: "pre",
                detail: format!("tolerance {} is not a nonnegative number", self.tol),
            });
        }
        validate_params_with(self.delta1, self.delta2, self.tol)
    }

    /// The point with `a_1 = -δ₁` and `a_2 = … = a_{1+δ₁/δ₂} = δ₂`.
    pub fn canonical_witness(&self) -> Result<SparsePoint> {
        let k = self.ratio();
        let need = k + 1;
        if let Ambient::Bounded(m) = self.m {
            if u64::from(m) < need {
                return Err(Error::Capacity { m: u64::from(m), min_m: need });
            }
        }
        let mut pairs = Vec::with_capacity(need as usize);
        pairs.push((1, -self.delta1));
        pairs.extend((2..=need as Index).map(|j| (j, self.delta2)));
        SparsePoint::from_pairs(pairs, self.m)
    }
}

/// Margins of the parameter windows; both are positive for valid parameters.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub delta1: f64,
    pub delta2: f64,
    pub ratio: u64,
    /// `4 sin²(π(δ₁-2δ₂)) - 4π²(2δ₂)(δ₁+2δ₂) - 2δ₂ - τ`.
    pub lower_margin: f64,
    /// `1 - 2δ₂ - τ - 4 sin²(π(δ₁+2δ₂)) - 4π²(2δ₂)(δ₁+2δ₂)`.
    pub upper_margin: f64,
}

/// Checks the admissibility clauses with the default slack.
pub fn validate_params(delta1: f64, delta2: f64) -> Result<ValidationReport> {
    validate_params_with(delta1, delta2, DEFAULT_SLACK)
}

/// Checks, in order: the preconditions, (a) `δ₁/δ₂ ∈ ℕ`, (b) `δ₂ < δ₁³`,
/// (c) the lower second-difference window and (d) the upper one.
pub fn validate_params_with(delta1: f64, delta2: f64, tol: f64) -> Result<ValidationReport> {
    let reject = |clause, detail: String| Err(Error::InvalidParams { clause, detail });
    if !(delta1.is_finite() && delta2.is_finite() && 0.0 < delta2 && delta2 < delta1 && delta1 < 1.0) {
        return reject("pre", format!("need 0 < delta2 < delta1 < 1, got ({delta1}, {delta2})"));
    }
    if delta1 + 2.0 * delta2 >= 0.5 {
        return reject("pre", format!("delta1 + 2 delta2 = {} must stay below 1/2", delta1 + 2.0 * delta2));
    }
    let r = delta1 / delta2;
    let k = r.round();
    // relative check; δ₁/δ₂ can be 1e8 and carries rounding of that size
    if k < 1.0 || (r - k).abs() > tol.max(f64::EPSILON) * k.max(1.0) {
        return reject("a", format!("delta1/delta2 = {r} is not an integer"));
    }
    if delta2 >= delta1.powi(3) {
        return reject("b", format!("delta2 = {delta2} is not below delta1^3 = {}", delta1.powi(3)));
    }
    let (lower_margin, upper_margin) = window_margins(delta1, delta2, tol);
    if lower_margin <= 0.0 {
        return reject("c", format!("lower window margin {lower_margin:e} is not positive"));
    }
    if upper_margin <= 0.0 {
        return reject("d", format!("upper window margin {upper_margin:e} is not positive"));
    }
    Ok(ValidationReport { delta1, delta2, ratio: k as u64, lower_margin, upper_margin })
}

fn window_margins(d1: f64, d2: f64, tol: f64) -> (f64, f64) {
    let spread = 4.0 * PI * PI * (2.0 * d2) * (d1 + 2.0 * d2);
    let lo = 4.0 * (PI * (d1 - 2.0 * d2)).sin().powi(2) - spread;
    let hi = 4.0 * (PI * (d1 + 2.0 * d2)).sin().powi(2) + spread;
    (lo - 2.0 * d2 - tol, 1.0 - 2.0 * d2 - tol - hi)
}

/// Signed distances of the three clause quantities from their boundaries.
/// A clause holds when its margin exceeds `τ`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClauseMargins {
    /// `w - ||a_i + δ₁||`.
    pub special: f64,
    /// `w - max_{j≠i} ||a_j||` (equal to `w` when `i` is the whole support).
    pub others: f64,
    /// `w - |Σ_{j≠i} ||a_j|| - δ₁|`.
    pub sum: f64,
}

impl ClauseMargins {
    pub fn min(&self) -> f64 {
        self.special.min(self.others).min(self.sum)
    }

    fn first_failure(&self, tol: f64) -> Option<u8> {
        [self.special, self.others, self.sum].iter().position(|&v| v <= tol).map(|k| k as u8 + 1)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MembershipCertificate {
    pub is_member: bool,
    /// The distinguished index when a member, otherwise the best candidate.
    pub special_index: Option<Index>,
    /// `Σ_{j≠i} ||a_j||` for the reported index.
    pub tail_sum: f64,
    pub margins: ClauseMargins,
    /// First failing clause (1, 2 or 3) for the reported index.
    pub failed_clause: Option<u8>,
    pub window: f64,
}

impl MembershipCertificate {
    /// Re-derives the certificate's claims directly from the definition,
    /// without the bookkeeping `is_member` uses. Returns false for any
    /// certificate that does not describe `x` correctly.
    pub fn confirms(&self, x: &SparsePoint, p: &Params) -> bool {
        let w = p.window();
        let Some(i) = self.special_index else {
            return !self.is_member;
        };
        let special = w - (x.get(i) + CircleValue::wrap(p.delta1)).norm();
        let mut others = w;
        let mut tail = 0.0;
        for (_, v) in x.iter().filter(|e| e.0 != i) {
            others = others.min(w - v.norm());
            tail += v.norm();
        }
        let sum = w - (tail - p.delta1).abs();
        let same = |a: f64, b: f64| (a - b).abs() <= 1e-12;
        let holds = special > p.tol && others > p.tol && sum > p.tol;
        same(special, self.margins.special)
            && same(others, self.margins.others)
            && same(sum, self.margins.sum)
            && same(tail, self.tail_sum)
            && holds == self.is_member
            && (w - self.window).abs() <= 1e-15
    }
}

/// Tests `x ∈ S_m` over every candidate index and returns the first index that
/// satisfies all three clauses.
pub fn is_member(x: &SparsePoint, p: &Params) -> Result<MembershipCertificate> {
    if !x.ambient().fits_in(p.m) {
        return Err(Error::Dimension(format!("point lives in ambient {} but parameters use m = {}", x.ambient(), p.m)));
    }
    let w = p.window();
    let minus_d1 = CircleValue::wrap(p.delta1);

    let mut total = 0.0;
    // two largest norms, with the index of the largest
    let (mut top, mut top_idx, mut second) = (0.0f64, 0 as Index, 0.0f64);
    for (j, v) in x.iter() {
        let n = v.norm();
        total += n;
        if n > top {
            second = top;
            top = n;
            top_idx = j;
        } else if n > second {
            second = n;
        }
    }

    let assess = |i: Index, v: CircleValue| {
        let n = v.norm();
        let tail = total - n;
        let others_max = if i == top_idx { second } else { top };
        let margins = ClauseMargins {
            special: w - (v + minus_d1).norm(),
            others: w - others_max,
            sum: w - (tail - p.delta1).abs(),
        };
        (tail, margins)
    };

    let mut best: Option<(Index, f64, ClauseMargins)> = None;
    for (i, v) in x.iter() {
        let (tail, margins) = assess(i, v);
        if margins.first_failure(p.tol).is_none() {
            // the tail sum is recomputed from scratch for the reported index
            let tail: f64 = x.iter().filter(|e| e.0 != i).map(|e| e.1.norm()).sum();
            let margins = ClauseMargins { sum: w - (tail - p.delta1).abs(), ..margins };
            if margins.first_failure(p.tol).is_none() {
                return Ok(MembershipCertificate {
                    is_member: true,
                    special_index: Some(i),
                    tail_sum: tail,
                    margins,
                    failed_clause: None,
                    window: w,
                });
            }
        }
        if best.as_ref().is_none_or(|b| margins.min() > b.2.min()) {
            best = Some((i, tail, margins));
        }
    }

    Ok(match best {
        Some((i, tail_sum, margins)) => MembershipCertificate {
            is_member: false,
            special_index: Some(i),
            tail_sum,
            margins,
            failed_clause: margins.first_failure(p.tol),
            window: w,
        },
        None => {
            let margins = ClauseMargins { special: w - p.delta1, others: w, sum: w - p.delta1 };
            MembershipCertificate {
                is_member: false,
                special_index: None,
                tail_sum: 0.0,
                margins,
                failed_clause: Some(1),
                window: w,
            }
        }
    })
}

/// Draws a member of `S_m` from a seeded ChaCha stream.
///
/// The special coordinate is uniform in the clause (1) interval shrunk by
/// `4τ`. The others get magnitudes with mean `T/k` and bounded centered noise,
/// so they sum to a target `T` drawn inside the clause (3) interval.
pub fn sample(p: &Params, seed: u64) -> Result<SparsePoint> {
    p.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let w = p.window();
    let guard = 4.0 * p.tol;
    let cap = w - guard;
    let fill = 0.95 * cap;

    let span = match p.m {
        Ambient::Bounded(m) => u64::from(m),
        Ambient::Unbounded => 4 * (1 + p.ratio()),
    };
    let t_lo = p.delta1 - w + 2.0 * guard;
    let t_hi = (p.delta1 + w - 2.0 * guard).min((span.saturating_sub(1)) as f64 * fill);
    let min_m = 1 + (t_lo / fill).ceil() as u64;
    if t_hi <= t_lo {
        return Err(Error::Capacity { m: span, min_m });
    }

    let target = rng.gen_range(t_lo..t_hi);
    let k_lo = ((target / fill).ceil() as u64).max(1);
    let k_hi = (4 * k_lo).min(span - 1);
    let k = rng.gen_range(k_lo..=k_hi) as usize;

    let mean = target / k as f64;
    let spread = mean.min(cap - mean);
    let noise: Vec<f64> = (0..k).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let centre = noise.iter().sum::<f64>() / k as f64;
    // centred noise lies in (-2, 2); halve it so magnitudes stay in (0, cap)
    let mags = noise.iter().map(|u| mean + 0.5 * spread * (u - centre));

    let picks = index::sample(&mut rng, span as usize, k + 1);
    let mut ids = picks.iter().map(|v| v as Index + 1);
    let special = ids.next().expect("k + 1 >= 2 picks");
    let a_i = -p.delta1 + rng.gen_range(-(w - guard)..(w - guard));

    let mut pairs = Vec::with_capacity(k + 1);
    pairs.push((special, a_i));
    for (j, mag) in ids.zip(mags) {
        let sign = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
        pairs.push((j, sign * mag));
    }
    let point = SparsePoint::from_pairs(pairs, p.m)?;
    let cert = is_member(&point, p)?;
    if !cert.is_member {
        return Err(Error::ConstructionViolation(format!(
            "sampled point failed clause {:?} with margins {:?}",
            cert.failed_clause, cert.margins
        )));
    }
    Ok(point)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn defaults() -> Params {
        Params::default()
    }

    /// Independent evaluation of the two windows, straight from the formulas.
    fn oracle_margins(d1: f64, d2: f64) -> (f64, f64) {
        let s = |x: f64| (PI * x).sin().powi(2) * 4.0;
        let c = 4.0 * PI.powi(2) * 2.0 * d2 * (d1 + 2.0 * d2);
        (s(d1 - 2.0 * d2) - c - 2.0 * d2 - 1e-9, 1.0 - 2.0 * d2 - 1e-9 - s(d1 + 2.0 * d2) - c)
    }

    #[test]
    fn validation_examples() {
        let r = validate_params(0.1, 1e-4).unwrap();
        assert_eq!(r.ratio, 1000);
        assert!((r.lower_margin - 0.3794).abs() < 1e-4, "{}", r.lower_margin);
        assert!((r.upper_margin - 0.6156).abs() < 1e-4, "{}", r.upper_margin);
        let (lo, hi) = oracle_margins(0.1, 1e-4);
        assert!(((r.lower_margin - lo) / lo).abs() < 1e-9);
        assert!(((r.upper_margin - hi) / hi).abs() < 1e-9);

        let r = validate_params(0.01, 1e-10).unwrap();
        assert_eq!(r.ratio, 100_000_000);
        assert!(r.lower_margin > 0.0 && r.upper_margin > 0.0);

        let clause = |d1, d2| match validate_params(d1, d2) {
            Err(Error::InvalidParams { clause, .. }) => clause,
            other => panic!("expected rejection, got {other:?}"),
        };
        assert_eq!(clause(0.1, 0.05), "b");
        assert_eq!(clause(0.1, 3e-4), "a");
        assert_eq!(clause(0.1, 0.3), "pre");
        assert_eq!(clause(0.49, 0.01), "pre");
        // clause (b) keeps 2δ₂ far below 4sin²(πδ₁); only the slack τ can
        // close the lower window, once 4π²δ₁² < τ
        assert_eq!(clause(2e-6, 1e-18), "c");
        // near 1/2 the chord approaches 2 and the upper window closes
        assert_eq!(clause(0.2, 0.002), "d");
    }

    #[test]
    fn eta_examples() {
        let e = eta(Ambient::Bounded(1), EtaPolicy::Dyadic);
        assert_eq!(e.value, 2f64.powi(-100));
        assert!(!e.underflow);
        assert_eq!(eta(Ambient::Bounded(10), EtaPolicy::Dyadic).value, 2f64.powi(-1000));
        let e = eta(Ambient::Bounded(11), EtaPolicy::Dyadic);
        assert_eq!((e.value, e.underflow), (0.0, true));
        let e = eta(Ambient::Unbounded, EtaPolicy::Dyadic);
        assert_eq!((e.value, e.underflow), (0.0, false));
        assert_eq!(eta(Ambient::Bounded(3), EtaPolicy::Zero).value, 0.0);
    }

    #[test]
    fn canonical_witness_is_member() {
        let p = defaults();
        let c = is_member(&p.canonical_witness().unwrap(), &p).unwrap();
        assert!(c.is_member);
        assert_eq!(c.special_index, Some(1));
        assert!((c.tail_sum - 0.1).abs() < 1e-12);
        assert!(c.margins.min() > p.tol);
    }

    #[test]
    fn shifted_special_coordinate_is_rejected() {
        let p = defaults();
        let mut pairs = vec![(1, -0.1 + 3e-4)];
        pairs.extend((2..=1001).map(|j| (j, 1e-4)));
        let x = SparsePoint::from_pairs(pairs, p.m).unwrap();
        let c = is_member(&x, &p).unwrap();
        assert!(!c.is_member);
        assert_eq!(c.special_index, Some(1));
        assert_eq!(c.failed_clause, Some(1));
        // oracle: every other choice of i leaves coordinate 1 as a large j
        for i in 2..=1001 {
            let bad = x.iter().filter(|e| e.0 != i).any(|e| e.1.norm() >= p.window() - p.tol);
            assert!(bad);
        }
    }

    #[test]
    fn zero_point_is_not_member() {
        let p = defaults();
        let c = is_member(&SparsePoint::zero(p.m), &p).unwrap();
        assert!(!c.is_member);
        assert_eq!(c.special_index, None);
        assert!(c.confirms(&SparsePoint::zero(p.m), &p));
    }

    #[test]
    fn ambient_must_fit() {
        let p = defaults();
        let x = SparsePoint::zero(Ambient::Bounded(5000));
        assert!(matches!(is_member(&x, &p), Err(Error::Dimension(_))));
        assert!(is_member(&SparsePoint::zero(Ambient::Bounded(10)), &p).is_ok());
    }

    #[test]
    fn boundary_flips_each_clause() {
        let p = defaults();
        let w = p.window();
        let base = |a1: f64, small: f64, count: Index| {
            let mut pairs = vec![(1, a1)];
            pairs.extend((2..=count + 1).map(|j| (j, small)));
            SparsePoint::from_pairs(pairs, p.m).unwrap()
        };
        assert!(is_member(&base(-0.1, 1e-4, 1000), &p).unwrap().is_member);
        // clause 1 exactly at the boundary, and just inside
        assert!(!is_member(&base(-0.1 + w, 1e-4, 1000), &p).unwrap().is_member);
        assert!(is_member(&base(-0.1 + w - 1e-8, 1e-4, 1000), &p).unwrap().is_member);
        // clause 2: one small coordinate pushed to w
        let mut x = base(-0.1, 1e-4, 999).entries().to_vec();
        x.push((1001, CircleValue::wrap(w)));
        let x = SparsePoint::from_sorted(x, p.m);
        let c = is_member(&x, &p).unwrap();
        assert!(!c.is_member);
        assert_eq!(c.failed_clause, Some(2));
        // clause 3: the tail sum drifts to δ₁ + w
        let c = is_member(&base(-0.1, (0.1 + w) / 1000.0, 1000), &p).unwrap();
        assert!(!c.is_member);
        assert_eq!(c.failed_clause, Some(3));
    }

    #[test]
    fn forged_certificates_are_caught() {
        let p = defaults();
        let x = p.canonical_witness().unwrap();
        let good = is_member(&x, &p).unwrap();
        assert!(good.confirms(&x, &p));
        let mut flipped = good.clone();
        flipped.is_member = false;
        assert!(!flipped.confirms(&x, &p));
        let mut moved = good.clone();
        moved.special_index = Some(2);
        assert!(!moved.confirms(&x, &p));
        let mut inflated = good;
        inflated.margins.sum += 1e-6;
        assert!(!inflated.confirms(&x, &p));
    }

    #[test]
    fn sample_examples() {
        let p = defaults();
        let x = sample(&p, 1).unwrap();
        assert!(is_member(&x, &p).unwrap().is_member);
        assert_eq!(x, sample(&p, 1).unwrap());
        assert_ne!(x, sample(&p, 2).unwrap());
        match sample(&p.with_m(Ambient::Bounded(10)), 1) {
            Err(Error::Capacity { m, min_m }) => {
                assert_eq!(m, 10);
                // oracle: ⌈(δ₁ - 2δ₂)/(2δ₂)⌉ + 1 = 501 is a lower bound
                assert!(min_m >= 501, "{min_m}");
            }
            other => panic!("expected capacity error, got {other:?}"),
        }
        let u = sample(&p.with_m(Ambient::Unbounded), 7).unwrap();
        assert!(is_member(&u, &p.with_m(Ambient::Unbounded)).unwrap().is_member);
    }

    #[test]
    fn sample_rejects_invalid_params() {
        let p = Params::new(0.1, 0.05, Ambient::Bounded(100));
        assert!(matches!(sample(&p, 0), Err(Error::InvalidParams { clause: "b", .. })));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn sampled_members_lie_in_s_infinity(seed in any::<u64>()) {
            let p = Params::default();
            let x = sample(&p, seed).unwrap();
            let c = is_member(&x, &p).unwrap();
            prop_assert!(c.is_member && c.margins.min() > p.tol);
            prop_assert!(c.confirms(&x, &p));
            let inf = Params { eta_policy: EtaPolicy::Zero, ..p };
            prop_assert!(is_member(&x, &inf).unwrap().is_member);
        }

        #[test]
        fn validation_margins_match_oracle(k in 50u32..400, d2 in prop::sample::select(vec![1e-4, 5e-5, 2e-5])) {
            let d1 = f64::from(k) * d2;
            if let Ok(r) = validate_params(d1, d2) {
                let (lo, hi) = oracle_margins(d1, d2);
                prop_assert!(((r.lower_margin - lo) / lo).abs() < 1e-9);
                prop_assert!(((r.upper_margin - hi) / hi).abs() < 1e-9);
            }
        }
    }
}

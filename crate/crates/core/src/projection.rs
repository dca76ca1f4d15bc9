//! Frequency schedules `α₁ > α₂ > …`, the projection
//! `P(n) = ({α₁n}, {α₂n}, …)`, and the integer set `S_ℕ = P⁻¹(S_∞)`.
//!
//! Two generators are provided.
//!
//! * `Resonant` places `α₁n` near `-δ₁` and a block of `δ₁/δ₂` coordinates
//!   near `δ₂` simultaneously, for `n` close to a chosen centre. It then
//!   decays geometrically. The offsets come from `{√p}` for the primes `p`.
//! * `Decimal` is `α_i = √p_i·10^{-c_i}` with `c_i` rising by a fixed number
//!   of decades per index.
//!
//! Terms smaller than the double range are stored as zero. They are covered by
//! the tail bound and never projected.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::circle::CircleValue;
use crate::coloring::{color_of, ColorId};
use crate::construction::{is_member, EtaPolicy, Params};
use crate::error::{Error, Result};
use crate::genpoly::EXACT_INT;
use crate::l1::{Ambient, Index, SparsePoint};

/// Smallest term kept; anything below is treated as zero.
const FLOOR: f64 = 1e-300;
/// Terms generated beyond the truncation, for ratio certification.
const LOOKAHEAD: usize = 32;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Generator {
    Resonant {
        /// Scale near which the first cluster of `S_ℕ` sits.
        center: f64,
        /// Relative spread of the block weights.
        #[serde(default = "default_spread")]
        spread: f64,
        /// `α_{H+1}/α_H` upper factor at the end of the block.
        #[serde(default = "default_gap")]
        gap: f64,
        /// Geometric ratio bound of the tail.
        #[serde(default = "default_ratio")]
        ratio: f64,
    },
    Decimal {
        offset: u32,
        decades: u32,
    },
}

fn default_spread() -> f64 {
    0.5
}

fn default_gap() -> f64 {
    1e-3
}

fn default_ratio() -> f64 {
    0.1
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduleSpec {
    pub generator: Generator,
    /// Truncation; defaults to the block end for `Resonant`, and 4 otherwise.
    #[serde(default)]
    pub m: Option<Index>,
    /// Required ratio between `1/α_{m+1}` and the scan bound.
    #[serde(default = "default_scan_factor")]
    pub scan_factor: f64,
}

fn default_scan_factor() -> f64 {
    1e3
}

impl ScheduleSpec {
    pub fn resonant(center: f64) -> Self {
        ScheduleSpec {
            generator: Generator::Resonant {
                center,
                spread: default_spread(),
                gap: default_gap(),
                ratio: default_ratio(),
            },
            m: None,
            scan_factor: default_scan_factor(),
        }
    }

    pub fn decimal(offset: u32, decades: u32, m: Index) -> Self {
        ScheduleSpec {
            generator: Generator::Decimal { offset, decades },
            m: Some(m),
            scan_factor: default_scan_factor(),
        }
    }
}

/// The first `count` primes.
pub fn primes(count: usize) -> Vec<u64> {
    if count == 0 {
        return Vec::new();
    }
    let n = count as f64;
    // p_n < n(ln n + ln ln n) for n ≥ 6
    let limit = if count < 6 { 15 } else { (n * (n.ln() + n.ln().ln())).ceil() as usize + 1 };
    let mut composite = vec![false; limit + 1];
    let mut out = Vec::with_capacity(count);
    for i in 2..=limit {
        if composite[i] {
            continue;
        }
        out.push(i as u64);
        if out.len() == count {
            break;
        }
        let mut j = i * i;
        while j <= limit {
            composite[j] = true;
            j += i;
        }
    }
    out
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AlphaSchedule {
    spec: ScheduleSpec,
    m: Index,
    /// `α_1 … α_{m+LOOKAHEAD}`; zero marks a term below the double range.
    alphas: Vec<f64>,
    /// `α_{i+1} ≤ ratio·α_i` for every `i ≥ geometric_from`.
    geometric_from: usize,
    ratio: f64,
}

impl AlphaSchedule {
    pub fn build(spec: &ScheduleSpec, p: &Params) -> Result<Self> {
        let (block_end, ratio) = match spec.generator {
            Generator::Resonant { ratio, .. } => (1 + p.ratio() as usize, ratio),
            Generator::Decimal { decades, .. } => {
                if decades < 2 {
                    return Err(Error::Config("decimal schedules need at least 2 decades per step".into()));
                }
                (1, 10f64.powi(1 - decades as i32))
            }
        };
        if !(ratio > 0.0 && ratio <= 0.1) {
            return Err(Error::Config(format!("tail ratio {ratio} outside (0, 1/10]")));
        }
        let m = match (spec.m, &spec.generator) {
            (Some(m), _) => m,
            (None, Generator::Resonant { .. }) => block_end as Index,
            (None, Generator::Decimal { .. }) => 4,
        };
        if m == 0 {
            return Err(Error::Config("schedule truncation m must be positive".into()));
        }
        let len = (m as usize).max(block_end) + LOOKAHEAD;
        let alphas = match spec.generator {
            Generator::Resonant { center, spread, gap, ratio } => resonant(p, center, spread, gap, ratio, len)?,
            Generator::Decimal { offset, decades } => decimal(offset, decades, len),
        };
        Ok(AlphaSchedule { spec: spec.clone(), m, alphas, geometric_from: block_end, ratio })
    }

    /// The same generator truncated at `m`.
    pub fn with_m(&self, m: Index, p: &Params) -> Result<Self> {
        AlphaSchedule::build(&ScheduleSpec { m: Some(m), ..self.spec.clone() }, p)
    }

    pub fn m(&self) -> Index {
        self.m
    }

    pub fn spec(&self) -> &ScheduleSpec {
        &self.spec
    }

    pub fn ratio(&self) -> f64 {
        self.ratio
    }

    /// `α_i`, 1-based, for `i ≤ m + 32`.
    pub fn alpha(&self, i: Index) -> f64 {
        self.alphas[i as usize - 1]
    }

    /// `α_1 … α_m`.
    pub fn head(&self) -> &[f64] {
        &self.alphas[..self.m as usize]
    }

    /// Upper bound on `Σ_{i>m} α_i`.
    pub fn tail_bound(&self) -> f64 {
        let g = (self.m as usize).max(self.geometric_from);
        let block: f64 = self.alphas[self.m as usize..g].iter().sum();
        // a zero term stands for something below FLOOR
        let next = if self.alphas[g] > 0.0 { self.alphas[g] } else { FLOOR };
        block + next / (1.0 - self.ratio)
    }

    /// SHA-256 over the spec, the truncation and the bits of every term.
    pub fn fingerprint(&self) -> String {
        let mut h = Sha256::new();
        h.update(serde_json::to_vec(&self.spec).expect("spec serializes"));
        h.update(self.m.to_le_bytes());
        for a in &self.alphas {
            h.update(a.to_bits().to_le_bytes());
        }
        hex::encode(h.finalize())
    }

    /// Checks the schedule invariants and the decay needed for a scan to `n_max`.
    pub fn certify(&self, n_max: u64) -> ScheduleCertificate {
        let mut problems = Vec::new();
        let live: Vec<f64> = self.alphas.iter().copied().take_while(|&a| a > 0.0).collect();
        if let Some(k) = live.windows(2).position(|w| w[1] >= w[0]) {
            problems.push(format!("α_{} = {:e} does not decrease to α_{} = {:e}", k + 1, live[k], k + 2, live[k + 1]));
        }
        if let Some(k) = live.iter().position(|&a| !(a > 0.0 && a < 0.5)) {
            problems.push(format!("α_{} = {:e} outside (0, 1/2)", k + 1, live[k]));
        }
        if live.len() < self.m as usize {
            problems.push(format!("α_{} underflows inside the truncation", live.len() + 1));
        }
        let start = (self.m as usize).max(self.geometric_from);
        let observed = live.windows(2).skip(start - 1).map(|w| w[1] / w[0]).fold(0.0, f64::max);
        if observed > self.ratio {
            problems.push(format!("observed tail ratio {observed:e} exceeds the bound {:e}", self.ratio));
        }
        let next = self.alphas[self.m as usize];
        let inv_next = if next > 0.0 { 1.0 / next } else { f64::INFINITY };
        let required = self.spec.scan_factor * n_max as f64;
        if inv_next < required {
            problems.push(format!(
                "1/α_{} = {inv_next:e} is below {} × N = {required:e}",
                self.m + 1,
                self.spec.scan_factor
            ));
        }
        ScheduleCertificate {
            m: self.m,
            tail_bound: self.tail_bound(),
            ratio_bound: self.ratio,
            observed_ratio: observed,
            inv_alpha_next: inv_next,
            required_inv_alpha: required,
            problems,
        }
    }
}

fn resonant(p: &Params, center: f64, spread: f64, gap: f64, ratio: f64, len: usize) -> Result<Vec<f64>> {
    p.validate()?;
    if !(center.is_finite() && center > 2.0) {
        return Err(Error::Config(format!("resonant centre {center} must exceed 2")));
    }
    if !(0.0..1.0).contains(&spread) || !(gap > 0.0 && gap <= ratio) {
        return Err(Error::Config(format!("need 0 ≤ spread < 1 and 0 < gap ≤ ratio, got {spread}, {gap}")));
    }
    let k = p.ratio() as usize;
    let u: Vec<f64> = primes(len).iter().map(|&q| (q as f64).sqrt().fract()).collect();
    let c = center + u[0];
    let mut out = Vec::with_capacity(len);
    out.push((1.0 - p.delta1) / c);
    // weights decrease strictly because consecutive offsets differ by less than 1
    let weights: Vec<f64> = (1..=k).map(|j| 1.0 + spread * ((k - j) as f64 + u[j]) / k as f64).collect();
    let total: f64 = weights.iter().sum();
    let block_sum = p.delta1 / c;
    out.extend(weights.iter().map(|w| w / total * block_sum));
    let mut prev = *out.last().expect("k ≥ 1");
    let mut factor = gap;
    while out.len() < len {
        let next = prev * factor * (0.5 + 0.5 * u[out.len()]);
        let next = if next < FLOOR { 0.0 } else { next };
        out.push(next);
        prev = next;
        factor = ratio;
    }
    Ok(out)
}

fn decimal(offset: u32, decades: u32, len: usize) -> Vec<f64> {
    primes(len)
        .iter()
        .enumerate()
        .map(|(i, &q)| {
            let root = (q as f64).sqrt();
            let c = offset as i64 + decades as i64 * i as i64 + root.log10().ceil() as i64;
            if c > 300 {
                0.0
            } else {
                let a = root / 10f64.powi(c as i32);
                a - a.floor()
            }
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScheduleCertificate {
    pub m: Index,
    pub tail_bound: f64,
    pub ratio_bound: f64,
    pub observed_ratio: f64,
    pub inv_alpha_next: f64,
    pub required_inv_alpha: f64,
    pub problems: Vec<String>,
}

impl ScheduleCertificate {
    pub fn passed(&self) -> bool {
        self.problems.is_empty()
    }
}

fn check_precision(n: u64) -> Result<()> {
    if n >= EXACT_INT {
        return Err(Error::Overflow(format!("n = {n} is beyond the precision cap 2^53")));
    }
    Ok(())
}

#[inline]
fn coordinate(alpha: f64, n: u64) -> CircleValue {
    CircleValue::wrap(alpha).times(n as i64)
}

/// `P(n)` truncated at `m`.
pub fn project(n: u64, sched: &AlphaSchedule) -> Result<SparsePoint> {
    check_precision(n)?;
    let entries = sched
        .head()
        .iter()
        .enumerate()
        .filter(|(_, &a)| a > 0.0)
        .map(|(i, &a)| (i as Index + 1, coordinate(a, n)))
        .collect();
    Ok(SparsePoint::from_sorted(entries, Ambient::Bounded(sched.m())))
}

pub fn color_integer(n: u64, p: &Params, sched: &AlphaSchedule) -> Result<ColorId> {
    Ok(color_of(&project(n, sched)?, p))
}

/// Parameters of `S_∞` with the same constants.
pub fn s_infinity(p: &Params) -> Params {
    Params { m: Ambient::Unbounded, eta_policy: EtaPolicy::Zero, ..*p }
}

/// Streaming guarded test with early exit: the first coordinate that is too
/// large for clause (2) must be the special one.
fn guarded_fast(n: u64, head: &[f64], p: &Params, w: f64, guard: f64) -> bool {
    let minus_d1 = CircleValue::wrap(p.delta1);
    let mut special = false;
    let mut sum = 0.0;
    let mut max_other = 0.0f64;
    for &a in head {
        if a == 0.0 {
            continue;
        }
        let v = coordinate(a, n);
        let nv = v.norm();
        if nv >= w - guard {
            if special || w - (v + minus_d1).norm() <= guard {
                return false;
            }
            special = true;
        } else {
            sum += nv;
            max_other = max_other.max(nv);
            if sum >= p.delta1 + w - guard {
                return false;
            }
        }
    }
    special && w - max_other > guard && w - (sum - p.delta1).abs() > guard
}

/// Guarded membership of `n`: the truncated point is in `S_∞` with every
/// clause margin above `τ + n·tail_bound`. Returns the smallest margin.
pub fn guarded_member(n: u64, p: &Params, sched: &AlphaSchedule) -> Result<Option<f64>> {
    let p_inf = s_infinity(p);
    let guard = p.tol + n as f64 * sched.tail_bound();
    let cert = is_member(&project(n, sched)?, &p_inf)?;
    Ok((cert.is_member && cert.margins.min() > guard).then_some(cert.margins.min()))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IntegerSetReport {
    pub elements: Vec<u64>,
    /// Smallest clause margin of each element.
    pub margins: Vec<f64>,
    /// `τ + n·tail_bound` for each element.
    pub guards: Vec<f64>,
    pub scan_bound: u64,
    pub fingerprint: String,
    pub m: Index,
    pub tail_bound: f64,
}

/// Largest `N` admitted by the guard `N·tail_bound < δ₂·guard_fraction`.
pub fn max_scan_bound(p: &Params, sched: &AlphaSchedule, guard_fraction: f64) -> f64 {
    p.delta2 * guard_fraction / sched.tail_bound()
}

/// All `n ∈ [1, N]` passing the guarded membership, scanned in parallel
/// chunks and merged in order.
pub fn enumerate(n_max: u64, p: &Params, sched: &AlphaSchedule, guard_fraction: f64) -> Result<IntegerSetReport> {
    p.validate()?;
    if n_max >= EXACT_INT {
        return Err(Error::Precondition(format!("N = {n_max} exceeds the precision cap 2^53 = {EXACT_INT}")));
    }
    let tail = sched.tail_bound();
    if n_max as f64 * tail >= p.delta2 * guard_fraction {
        return Err(Error::Precondition(format!(
            "N·tail_bound = {:e} is not below δ₂·{guard_fraction} = {:e}; use N ≤ {:.0} or a larger m than {}",
            n_max as f64 * tail,
            p.delta2 * guard_fraction,
            max_scan_bound(p, sched, guard_fraction).floor(),
            sched.m()
        )));
    }
    let p_inf = s_infinity(p);
    let w = p_inf.window();
    let head = sched.head();
    const CHUNK: u64 = 1 << 14;
    let chunks = n_max.div_ceil(CHUNK);
    let found: Vec<Vec<u64>> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let lo = c * CHUNK + 1;
            let hi = ((c + 1) * CHUNK).min(n_max);
            (lo..=hi).filter(|&n| guarded_fast(n, head, p, w, p.tol + n as f64 * tail)).collect()
        })
        .collect();

    let mut report = IntegerSetReport {
        elements: Vec::new(),
        margins: Vec::new(),
        guards: Vec::new(),
        scan_bound: n_max,
        fingerprint: sched.fingerprint(),
        m: sched.m(),
        tail_bound: tail,
    };
    for n in found.into_iter().flatten() {
        // the certificate path must agree with the streaming filter
        let margin = guarded_member(n, p, sched)?.ok_or_else(|| {
            Error::ConstructionViolation(format!("n = {n} passed the streaming test but not the certificate"))
        })?;
        report.elements.push(n);
        report.margins.push(margin);
        report.guards.push(p.tol + n as f64 * tail);
    }
    Ok(report)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DensityReport {
    pub dims: usize,
    pub cells: u64,
    pub scan_bound: u64,
    pub occupied: u64,
    pub fraction: f64,
}

/// Occupancy of the `cells^dims` grid on the first `dims` coordinates by
/// `P(1), …, P(N)`.
pub fn density(sched: &AlphaSchedule, n_max: u64, dims: usize, cells: u64) -> Result<DensityReport> {
    check_precision(n_max)?;
    if dims == 0 || dims > sched.m() as usize {
        return Err(Error::Dimension(format!("density needs 1 ≤ dims ≤ m = {}", sched.m())));
    }
    let total = (cells as u128).pow(dims as u32);
    if cells < 2 || total > 1 << 26 {
        return Err(Error::Domain(format!("{cells}^{dims} cells is outside the supported grid sizes")));
    }
    let mut hit = vec![false; total as usize];
    let alphas = &sched.head()[..dims];
    for n in 1..=n_max {
        let idx = alphas.iter().fold(0u64, |acc, &a| {
            let c = ((coordinate(a, n).value() * cells as f64) as u64).min(cells - 1);
            acc * cells + c
        });
        hit[idx as usize] = true;
    }
    let occupied = hit.iter().filter(|&&h| h).count() as u64;
    Ok(DensityReport { dims, cells, scan_bound: n_max, occupied, fraction: occupied as f64 / total as f64 })
}

//! Audits over integer windows: monochromatic 3-term progressions, nil-Bohr
//! hit searches, discrepancy of polynomial phases, and color counts.

use std::collections::{BTreeMap, HashMap};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::coloring::{color_with_flag, ColorGrid, ColorId};
use crate::construction::Params;
use crate::error::{Error, Result};
use crate::genpoly::{nilbohr_contains, NilBohrNbhd};
use crate::projection::{guarded_member, project, AlphaSchedule, IntegerSetReport};

/// At most this many violating triples are kept in a report.
pub const VIOLATION_LIMIT: usize = 1000;

/// A coloring of the positive integers, with a fragility flag per color.
pub trait Colorer: Sync {
    fn color(&self, n: u64) -> Result<(ColorId, bool)>;
}

impl<C: Colorer + ?Sized> Colorer for &C {
    fn color(&self, n: u64) -> Result<(ColorId, bool)> {
        (**self).color(n)
    }
}

/// `n ↦ color_of(P(n))`.
pub struct IntegerColorer<'a> {
    grid: ColorGrid,
    sched: &'a AlphaSchedule,
}

impl<'a> IntegerColorer<'a> {
    pub fn new(p: &Params, sched: &'a AlphaSchedule) -> Self {
        IntegerColorer { grid: ColorGrid::new(p), sched }
    }
}

impl Colorer for IntegerColorer<'_> {
    fn color(&self, n: u64) -> Result<(ColorId, bool)> {
        Ok(color_with_flag(&project(n, self.sched)?, &self.grid))
    }
}

/// Wraps a plain function; never fragile.
pub struct FnColorer<F>(pub F);

impl<F: Fn(u64) -> ColorId + Sync> Colorer for FnColorer<F> {
    fn color(&self, n: u64) -> Result<(ColorId, bool)> {
        Ok(((self.0)(n), false))
    }
}

/// Another colorer with some values replaced, for mutation tests.
pub struct OverrideColorer<C> {
    pub inner: C,
    pub overrides: HashMap<u64, ColorId>,
}

impl<C: Colorer> Colorer for OverrideColorer<C> {
    fn color(&self, n: u64) -> Result<(ColorId, bool)> {
        match self.overrides.get(&n) {
            Some(&c) => Ok((c, false)),
            None => self.inner.color(n),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AuditReport {
    pub range: u64,
    pub diff_size: usize,
    pub triples_checked: u64,
    pub violation_count: u64,
    /// `(x, s)` with `x, x+s, x+2s` monochromatic, smallest first, capped.
    pub violations: Vec<(u64, u64)>,
    pub boundary_flags: u64,
    #[serde(skip)]
    pub elapsed_secs: f64,
}

impl AuditReport {
    pub fn is_clean(&self) -> bool {
        self.violation_count == 0
    }
}

fn colors_upto(n_max: u64, colorer: &dyn Colorer) -> Result<(Vec<ColorId>, u64)> {
    let pairs: Vec<(ColorId, bool)> = (1..=n_max).into_par_iter().map(|n| colorer.color(n)).collect::<Result<_>>()?;
    let flags = pairs.iter().filter(|p| p.1).count() as u64;
    // index 0 is unused so that colors[n] is the color of n
    let colors = std::iter::once(ColorId(0)).chain(pairs.into_iter().map(|p| p.0)).collect();
    Ok((colors, flags))
}

/// Checks every `x ∈ [1, N-2s]` and `s ∈ S` for a monochromatic
/// `x, x+s, x+2s`.
pub fn audit_3ap(n_max: u64, s_list: &[u64], colorer: &dyn Colorer) -> Result<AuditReport> {
    check_differences(n_max, s_list)?;
    let start = Instant::now();
    let (colors, boundary_flags) = colors_upto(n_max, colorer)?;
    Ok(audit_table(n_max, s_list, &colors, boundary_flags, start))
}

fn check_differences(n_max: u64, s_list: &[u64]) -> Result<()> {
    match s_list.iter().find(|&&s| s == 0 || s > n_max) {
        Some(s) => Err(Error::Domain(format!("difference {s} outside [1, {n_max}]"))),
        None => Ok(()),
    }
}

fn audit_table(n_max: u64, s_list: &[u64], colors: &[ColorId], boundary_flags: u64, start: Instant) -> AuditReport {
    // (triples, violations, kept violations) per difference
    type PerDifference = (u64, u64, Vec<(u64, u64)>);
    let per_s: Vec<PerDifference> = s_list
        .par_iter()
        .map(|&s| {
            let top = n_max.saturating_sub(2 * s);
            let mut count = 0;
            let mut kept = Vec::new();
            for x in 1..=top {
                let c = colors[x as usize];
                if colors[(x + s) as usize] == c && colors[(x + 2 * s) as usize] == c {
                    count += 1;
                    if kept.len() < VIOLATION_LIMIT {
                        kept.push((x, s));
                    }
                }
            }
            (top, count, kept)
        })
        .collect();
    let triples_checked = per_s.iter().map(|t| t.0).sum();
    let violation_count = per_s.iter().map(|t| t.1).sum();
    let mut violations: Vec<(u64, u64)> = per_s.into_iter().flat_map(|t| t.2).collect();
    violations.sort_unstable();
    violations.truncate(VIOLATION_LIMIT);
    AuditReport {
        range: n_max,
        diff_size: s_list.len(),
        triples_checked,
        violation_count,
        violations,
        boundary_flags,
        elapsed_secs: start.elapsed().as_secs_f64(),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HitReport {
    pub neighborhood: String,
    pub witness: Option<u64>,
    pub search_bound: u64,
    /// Size of `S_ℕ ∩ [1, N]`.
    pub candidates: usize,
    /// `||P_i(witness)||` for every polynomial.
    pub norms: Vec<f64>,
}

impl HitReport {
    /// Re-checks a witness against the guarded membership and the
    /// neighborhood, independently of the search that found it.
    pub fn revalidate(&self, nb: &NilBohrNbhd, p: &Params, sched: &AlphaSchedule) -> Result<bool> {
        let Some(n) = self.witness else { return Ok(true) };
        Ok(guarded_member(n, p, sched)?.is_some() && nilbohr_contains(nb, n, p.tol)?)
    }
}

/// First element of an enumerated `S_ℕ` lying in the neighborhood.
pub fn nilbohr_hit_in(nb: &NilBohrNbhd, set: &IntegerSetReport, tol: f64) -> Result<HitReport> {
    let mut witness = None;
    for &n in &set.elements {
        if nilbohr_contains(nb, n, tol)? {
            witness = Some(n);
            break;
        }
    }
    let norms = match witness {
        Some(n) => nb.norms(n)?,
        None => Vec::new(),
    };
    Ok(HitReport {
        neighborhood: nb.describe(),
        witness,
        search_bound: set.scan_bound,
        candidates: set.elements.len(),
        norms,
    })
}

/// Enumerates `S_ℕ ∩ [1, N]` and returns its first element in the neighborhood.
pub fn nilbohr_hit(
    nb: &NilBohrNbhd,
    n_max: u64,
    p: &Params,
    sched: &AlphaSchedule,
    guard_fraction: f64,
) -> Result<HitReport> {
    let set = crate::projection::enumerate(n_max, p, sched, guard_fraction)?;
    nilbohr_hit_in(nb, &set, p.tol)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PolyDiscrepancy {
    pub poly: String,
    /// Largest gap between the binned empirical CDF and the uniform CDF.
    pub binned: f64,
    /// Kolmogorov-Smirnov distance to the uniform law.
    pub ks: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct JointCells {
    pub cells_per_axis: u64,
    pub total: u64,
    pub occupied: u64,
    /// Largest cell count divided by the count under uniformity.
    pub max_load: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiscrepancyReport {
    pub sample_size: usize,
    pub bins: usize,
    pub per_poly: Vec<PolyDiscrepancy>,
    pub joint: JointCells,
}

impl DiscrepancyReport {
    pub fn max_binned(&self) -> f64 {
        self.per_poly.iter().map(|d| d.binned).fold(0.0, f64::max)
    }
}

/// Sup deviation of the binned CDF of `values ⊂ [0, 1)` from uniform.
pub fn binned_discrepancy(values: &[f64], bins: usize) -> f64 {
    let mut hist = vec![0u64; bins];
    for &v in values {
        hist[((v * bins as f64) as usize).min(bins - 1)] += 1;
    }
    let n = values.len() as f64;
    let mut cum = 0u64;
    hist.iter()
        .enumerate()
        .map(|(k, &h)| {
            cum += h;
            (cum as f64 / n - (k + 1) as f64 / bins as f64).abs()
        })
        .fold(0.0, f64::max)
}

/// Exact Kolmogorov-Smirnov distance to the uniform law on `[0, 1)`.
pub fn ks_uniform(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len() as f64;
    v.iter().enumerate().map(|(i, &x)| (x - i as f64 / n).max((i + 1) as f64 / n - x)).fold(0.0, f64::max)
}

/// Distribution of the phases `{P_i(n)}` over `sample`.
pub fn discrepancy(nb: &NilBohrNbhd, sample: &[u64], bins: usize) -> Result<DiscrepancyReport> {
    if sample.is_empty() {
        return Err(Error::Domain("discrepancy of an empty sample".into()));
    }
    if bins < 2 {
        return Err(Error::Domain(format!("need at least 2 bins, got {bins}")));
    }
    let values: Vec<Vec<f64>> = nb
        .polys()
        .iter()
        .map(|p| sample.par_iter().map(|&n| p.eval(n).map(|c| c.value())).collect::<Result<Vec<_>>>())
        .collect::<Result<_>>()?;
    let per_poly = nb
        .polys()
        .iter()
        .zip(&values)
        .map(|(p, v)| PolyDiscrepancy { poly: p.to_string(), binned: binned_discrepancy(v, bins), ks: ks_uniform(v) })
        .collect();

    // coarse joint grid, at most about 4096 cells
    let k = values.len().max(1) as u32;
    let cells_per_axis = (4096f64.powf(1.0 / f64::from(k)).floor() as u64).clamp(2, 16);
    let mut load: BTreeMap<Vec<u64>, u64> = BTreeMap::new();
    for t in 0..sample.len() {
        let key = values.iter().map(|v| ((v[t] * cells_per_axis as f64) as u64).min(cells_per_axis - 1)).collect();
        *load.entry(key).or_default() += 1;
    }
    let total = cells_per_axis.pow(values.len() as u32);
    let expected = sample.len() as f64 / total as f64;
    let joint = JointCells {
        cells_per_axis,
        total,
        occupied: load.len() as u64,
        max_load: load.values().copied().max().unwrap_or(0) as f64 / expected,
    };
    Ok(DiscrepancyReport { sample_size: sample.len(), bins, per_poly, joint })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CayleyReport {
    pub range: u64,
    pub colors_used: usize,
    pub audit: AuditReport,
    /// Class size → number of colors with that many members.
    pub occupancy: BTreeMap<u64, u64>,
}

/// Counts colors on `[1, N]` and checks the 3-AP hypergraph coloring is proper.
pub fn cayley_audit(n_max: u64, s_list: &[u64], colorer: &dyn Colorer) -> Result<CayleyReport> {
    check_differences(n_max, s_list)?;
    let start = Instant::now();
    let (colors, flags) = colors_upto(n_max, colorer)?;
    let audit = audit_table(n_max, s_list, &colors, flags, start);
    let mut sizes: HashMap<ColorId, u64> = HashMap::new();
    for c in &colors[1..] {
        *sizes.entry(*c).or_default() += 1;
    }
    let mut occupancy = BTreeMap::new();
    for &size in sizes.values() {
        *occupancy.entry(size).or_default() += 1;
    }
    Ok(CayleyReport { range: n_max, colors_used: sizes.len(), audit, occupancy })
}

impl CayleyReport {
    /// No color class contains a 3-AP with difference in the set.
    pub fn proper(&self) -> bool {
        self.audit.is_clean()
    }
}

//! Bohr neighborhoods on the truncated ℓ¹ torus, and the constructive witness
//! that `S_m` meets each of them.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::circle::CircleValue;
use crate::construction::{is_member, Params};
use crate::error::{Error, Result};
use crate::l1::{Ambient, Index, SparsePoint};

/// One dual functional, either listed or as a repeated pattern.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum DualRow {
    Explicit(Vec<i64>),
    Repeat { repeat: Vec<i64>, len: usize },
}

impl DualRow {
    fn expand(self) -> Result<Vec<i64>> {
        match self {
            DualRow::Explicit(v) => Ok(v),
            DualRow::Repeat { repeat, len } => {
                if repeat.is_empty() {
                    return Err(Error::Config("empty repeat pattern in dual row".into()));
                }
                Ok(repeat.iter().copied().cycle().take(len).collect())
            }
        }
    }
}

#[derive(Deserialize)]
struct TorusBohrSetRepr {
    dual: Vec<DualRow>,
    epsilon: f64,
}

/// `{x : max_r ||Σ_i b_{r,i} a_i|| < ε}` for a `k × m` integer matrix `b`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "TorusBohrSetRepr")]
pub struct TorusBohrSet {
    dual: Vec<Vec<i64>>,
    epsilon: f64,
}

impl TryFrom<TorusBohrSetRepr> for TorusBohrSet {
    type Error = Error;

    fn try_from(r: TorusBohrSetRepr) -> Result<Self> {
        let rows = r.dual.into_iter().map(DualRow::expand).collect::<Result<Vec<_>>>()?;
        TorusBohrSet::new(rows, r.epsilon)
    }
}

impl TorusBohrSet {
    pub fn new(dual: Vec<Vec<i64>>, epsilon: f64) -> Result<Self> {
        if dual.is_empty() {
            return Err(Error::Config("a Bohr set needs at least one dual row".into()));
        }
        let m = dual[0].len();
        if m == 0 || m > Index::MAX as usize {
            return Err(Error::Config(format!("dual rows must have length in 1..={}", Index::MAX)));
        }
        if dual.iter().any(|r| r.len() != m) {
            return Err(Error::Dimension("dual rows have different lengths".into()));
        }
        // ε = 1/2 is admitted; the witness examples use it
        if !(epsilon > 0.0 && epsilon <= 0.5) {
            return Err(Error::Config(format!("Bohr width {epsilon} outside (0, 1/2]")));
        }
        Ok(TorusBohrSet { dual, epsilon })
    }

    pub fn k(&self) -> usize {
        self.dual.len()
    }

    /// Number of coordinates the duals are defined on.
    pub fn m(&self) -> Index {
        self.dual[0].len() as Index
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    /// `C = max |b_{r,i}|`.
    pub fn bound(&self) -> i64 {
        self.dual.iter().flatten().map(|b| b.abs()).max().unwrap_or(0)
    }

    pub fn rows(&self) -> &[Vec<i64>] {
        &self.dual
    }

    fn coefficient(&self, r: usize, i: Index) -> i64 {
        self.dual[r][i as usize - 1]
    }
}

/// `(Σ_i b_{r,i} a_i mod 1)_r`.
pub fn dual_apply(b: &TorusBohrSet, x: &SparsePoint) -> Result<Vec<CircleValue>> {
    let fits = match x.ambient() {
        Ambient::Bounded(a) => a <= b.m(),
        Ambient::Unbounded => x.max_index().is_none_or(|i| i <= b.m()),
    };
    if !fits {
        return Err(Error::Dimension(format!(
            "point in ambient {} exceeds the {} coordinates of the dual",
            x.ambient(),
            b.m()
        )));
    }
    Ok((0..b.k()).map(|r| compensated_sum(x.iter().map(|(i, v)| v.times(b.coefficient(r, i)).value()))).collect())
}

/// Neumaier summation reduced mod 1, so that exactly cancelling clusters
/// land within an ulp of zero.
fn compensated_sum(terms: impl Iterator<Item = f64>) -> CircleValue {
    let (mut sum, mut carry) = (0.0f64, 0.0f64);
    for t in terms {
        let next = sum + t;
        carry += if sum.abs() >= t.abs() { (sum - next) + t } else { (t - next) + sum };
        sum = next;
    }
    CircleValue::wrap((sum - sum.floor()) + carry)
}

/// `max_r ||dual_apply(B, x)_r|| < ε - τ`.
pub fn bohr_contains(b: &TorusBohrSet, x: &SparsePoint, tol: f64) -> Result<bool> {
    Ok(sup_norm(&dual_apply(b, x)?) < b.epsilon - tol)
}

fn sup_norm(v: &[CircleValue]) -> f64 {
    v.iter().map(|c| c.norm()).fold(0.0, f64::max)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Cluster {
    pub anchor: Index,
    /// Increasing; contains the anchor as its first element.
    pub members: Vec<Index>,
    pub scanned: usize,
}

fn pigeonhole_bound(target: usize, cells_per_axis: f64, k: usize) -> f64 {
    (target as f64 - 1.0) * cells_per_axis.powi(k as i32) + 1.0
}

/// `f_j = (b_{r,j}·δ₂ mod 1)_r`, the image of `δ₂·e_j`.
fn image_of_unit(b: &TorusBohrSet, j: Index, d2: CircleValue) -> Vec<CircleValue> {
    (0..b.k()).map(|r| d2.times(b.coefficient(r, j))).collect()
}

/// Scans `j = 1, 2, …` and buckets `f_j` into half-open cubes of side
/// `δ₂ε`; the first cube holding `1 + δ₁/δ₂` indices is returned.
pub fn find_cluster(b: &TorusBohrSet, p: &Params) -> Result<Cluster> {
    p.validate()?;
    let target = p.ratio() as usize + 1;
    let side = p.delta2 * b.epsilon;
    let cells = (1.0 / side).ceil();
    let limit = match p.m {
        Ambient::Bounded(m) => m.min(b.m()),
        Ambient::Unbounded => b.m(),
    };
    let d2 = CircleValue::wrap(p.delta2);
    let mut buckets: HashMap<Vec<u64>, Vec<Index>> = HashMap::new();
    for j in 1..=limit {
        let key =
            image_of_unit(b, j, d2).iter().map(|c| ((c.value() / side).floor() as u64).min(cells as u64 - 1)).collect();
        let slot = buckets.entry(key).or_default();
        slot.push(j);
        if slot.len() == target {
            let members = std::mem::take(slot);
            return Ok(Cluster { anchor: members[0], members, scanned: j as usize });
        }
    }
    Err(Error::NeedLargerM { target, scanned: limit as usize, bound: pigeonhole_bound(target, cells, b.k()) })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WitnessReport {
    pub witness: SparsePoint,
    pub cluster: Vec<Index>,
    pub anchor: Index,
    /// `max_r ||f(v)_r||`.
    pub sup_norm: f64,
    /// `Σ_{j ∈ T, j ≠ i} |f_j - f_i|`, the middle term of the norm chain.
    pub chain_bound: f64,
    /// `δ₁·ε`.
    pub bound: f64,
    pub scanned: usize,
    pub k: usize,
    pub inv_epsilon: f64,
}

/// Builds `v` with `v_i = -δ₁` at the anchor and `v_j = δ₂` on the rest of
/// the cluster, then checks `v ∈ S_m` and the chain
/// `|f(v)| ≤ Σ |f_j - f_i| ≤ δ₁ε`.
pub fn build_witness(b: &TorusBohrSet, p: &Params) -> Result<WitnessReport> {
    let cluster = find_cluster(b, p)?;
    let i = cluster.anchor;
    let mut pairs = Vec::with_capacity(cluster.members.len());
    pairs.push((i, -p.delta1));
    pairs.extend(cluster.members[1..].iter().map(|&j| (j, p.delta2)));
    let ambient = Ambient::Bounded(p.m.bound().map_or(b.m(), |m| m.min(b.m())));
    let witness = SparsePoint::from_pairs(pairs, ambient)?;

    let cert = is_member(&witness, p)?;
    if !cert.is_member {
        return Err(Error::ConstructionViolation(format!("witness fails clause {:?}", cert.failed_clause)));
    }

    let d2 = CircleValue::wrap(p.delta2);
    let fi = image_of_unit(b, i, d2);
    let chain_bound: f64 = cluster.members[1..]
        .iter()
        .map(|&j| {
            let fj = image_of_unit(b, j, d2);
            fj.iter().zip(&fi).map(|(a, c)| (*a - *c).norm()).fold(0.0, f64::max)
        })
        .sum();
    let sup = sup_norm(&dual_apply(b, &witness)?);
    let bound = p.delta1 * b.epsilon;
    if sup > chain_bound + p.tol || chain_bound > bound + p.tol {
        return Err(Error::ConstructionViolation(format!(
            "norm chain broken: |f(v)| = {sup}, Σ|f_j - f_i| = {chain_bound}, δ₁ε = {bound}"
        )));
    }
    if !bohr_contains(b, &witness, p.tol)? {
        return Err(Error::ConstructionViolation(format!(
            "witness outside the Bohr set: |f(v)| = {sup}, ε = {}",
            b.epsilon
        )));
    }
    Ok(WitnessReport {
        witness,
        cluster: cluster.members,
        anchor: i,
        sup_norm: sup,
        chain_bound,
        bound,
        scanned: cluster.scanned,
        k: b.k(),
        inv_epsilon: 1.0 / b.epsilon,
    })
}

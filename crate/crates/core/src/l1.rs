//! Finitely supported points of the truncated ℓ¹ torus `ℓ¹(ℕ_{≤m}; ℝ/ℤ)`.
//!
//! Only nonzero coordinates are stored, in increasing index order. Indices
//! start at 1.

use std::cmp::Ordering;
use std::fmt;

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::circle::CircleValue;
use crate::error::{Error, Result};

/// Coordinate index of the ℓ¹ torus (1-based).
pub type Index = u32;

/// Truncation bound of the ambient torus.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Ambient {
    Bounded(Index),
    Unbounded,
}

impl Ambient {
    pub fn contains(self, i: Index) -> bool {
        match self {
            Ambient::Bounded(m) => i >= 1 && i <= m,
            Ambient::Unbounded => i >= 1,
        }
    }

    /// Containment order: a bounded torus embeds into any larger one.
    pub fn fits_in(self, other: Ambient) -> bool {
        match (self, other) {
            (_, Ambient::Unbounded) => true,
            (Ambient::Bounded(a), Ambient::Bounded(b)) => a <= b,
            (Ambient::Unbounded, Ambient::Bounded(_)) => false,
        }
    }

    pub fn bound(self) -> Option<Index> {
        match self {
            Ambient::Bounded(m) => Some(m),
            Ambient::Unbounded => None,
        }
    }
}

impl fmt::Display for Ambient {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Ambient::Bounded(m) => write!(f, "{m}"),
            Ambient::Unbounded => f.write_str("unbounded"),
        }
    }
}

impl Serialize for Ambient {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Ambient::Bounded(m) => s.serialize_u32(*m),
            Ambient::Unbounded => s.serialize_str("unbounded"),
        }
    }
}

impl<'de> Deserialize<'de> for Ambient {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(u32),
            Word(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(0) => Err(D::Error::custom("ambient bound must be positive")),
            Raw::Num(m) => Ok(Ambient::Bounded(m)),
            Raw::Word(w) if w == "unbounded" => Ok(Ambient::Unbounded),
            Raw::Word(w) => Err(D::Error::custom(format!("unknown ambient `{w}`"))),
        }
    }
}

/// A point `(a_1, a_2, ...)` with finitely many nonzero coordinates.
#[derive(Clone, PartialEq)]
pub struct SparsePoint {
    entries: Vec<(Index, CircleValue)>,
    ambient: Ambient,
}

impl SparsePoint {
    pub fn zero(ambient: Ambient) -> Self {
        SparsePoint { entries: Vec::new(), ambient }
    }

    /// Builds a point from `(index, value)` pairs in any order. Values are
    /// reduced mod 1 and zeros are dropped. Repeated indices are rejected.
    pub fn from_pairs<I>(pairs: I, ambient: Ambient) -> Result<Self>
    where
        I: IntoIterator<Item = (Index, f64)>,
    {
        let mut entries = Vec::new();
        for (i, v) in pairs {
            if !ambient.contains(i) {
                return Err(Error::Dimension(format!("index {i} outside ambient 1..={ambient}")));
            }
            entries.push((i, CircleValue::new(v)?));
        }
        entries.sort_unstable_by_key(|e| e.0);
        if let Some(w) = entries.windows(2).find(|w| w[0].0 == w[1].0) {
            return Err(Error::Dimension(format!("index {} given twice", w[0].0)));
        }
        entries.retain(|e| !e.1.is_zero());
        Ok(SparsePoint { entries, ambient })
    }

    /// Builds a point from entries already strictly increasing in index and
    /// inside the ambient.
    pub(crate) fn from_sorted(entries: Vec<(Index, CircleValue)>, ambient: Ambient) -> Self {
        debug_assert!(entries.windows(2).all(|w| w[0].0 < w[1].0));
        debug_assert!(entries.iter().all(|e| ambient.contains(e.0)));
        let mut p = SparsePoint { entries, ambient };
        p.entries.retain(|e| !e.1.is_zero());
        p
    }

    pub fn ambient(&self) -> Ambient {
        self.ambient
    }

    /// The same coordinates viewed in a larger torus.
    pub fn with_ambient(&self, ambient: Ambient) -> Result<Self> {
        if let Some(&(last, _)) = self.entries.last() {
            if !ambient.contains(last) {
                return Err(Error::Dimension(format!("index {last} outside ambient {ambient}")));
            }
        }
        Ok(SparsePoint { entries: self.entries.clone(), ambient })
    }

    pub fn entries(&self) -> &[(Index, CircleValue)] {
        &self.entries
    }

    pub fn iter(&self) -> impl Iterator<Item = (Index, CircleValue)> + '_ {
        self.entries.iter().copied()
    }

    pub fn support_len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_zero(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn max_index(&self) -> Option<Index> {
        self.entries.last().map(|e| e.0)
    }

    pub fn get(&self, i: Index) -> CircleValue {
        match self.entries.binary_search_by_key(&i, |e| e.0) {
            Ok(k) => self.entries[k].1,
            Err(_) => CircleValue::ZERO,
        }
    }

    fn check_compatible(&self, other: &SparsePoint) -> Result<()> {
        if self.ambient != other.ambient {
            return Err(Error::Dimension(format!("ambients differ: {} vs {}", self.ambient, other.ambient)));
        }
        Ok(())
    }

    /// Coordinatewise sum in ℝ/ℤ.
    pub fn add(&self, other: &SparsePoint) -> Result<SparsePoint> {
        self.check_compatible(other)?;
        let (a, b) = (&self.entries, &other.entries);
        let mut out = Vec::with_capacity(a.len() + b.len());
        let (mut i, mut j) = (0, 0);
        while i < a.len() && j < b.len() {
            match a[i].0.cmp(&b[j].0) {
                Ordering::Less => {
                    out.push(a[i]);
                    i += 1;
                }
                Ordering::Greater => {
                    out.push(b[j]);
                    j += 1;
                }
                Ordering::Equal => {
                    let s = a[i].1 + b[j].1;
                    if !s.is_zero() {
                        out.push((a[i].0, s));
                    }
                    i += 1;
                    j += 1;
                }
            }
        }
        out.extend_from_slice(&a[i..]);
        out.extend_from_slice(&b[j..]);
        Ok(SparsePoint { entries: out, ambient: self.ambient })
    }

    pub fn neg(&self) -> SparsePoint {
        SparsePoint { entries: self.entries.iter().map(|&(i, v)| (i, -v)).collect(), ambient: self.ambient }
    }

    pub fn sub(&self, other: &SparsePoint) -> Result<SparsePoint> {
        self.add(&other.neg())
    }

    /// `k·x`, coordinatewise mod 1.
    pub fn times(&self, k: i64) -> SparsePoint {
        let entries = self.entries.iter().map(|&(i, v)| (i, v.times(k))).filter(|e| !e.1.is_zero()).collect();
        SparsePoint { entries, ambient: self.ambient }
    }

    /// `Σ ||a_i||_{ℝ/ℤ}`.
    pub fn l1_norm(&self) -> f64 {
        self.entries.iter().map(|e| e.1.norm()).sum()
    }

    /// `Σ ||a_i||²_{ℝ/ℤ}`.
    pub fn l2_norm_sq(&self) -> f64 {
        self.entries.iter().map(|e| e.1.norm().powi(2)).sum()
    }

    /// `max ||a_i||_{ℝ/ℤ}`, or 0 for the zero point.
    pub fn max_norm(&self) -> f64 {
        self.entries.iter().map(|e| e.1.norm()).fold(0.0, f64::max)
    }
}

impl fmt::Debug for SparsePoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "SparsePoint[{}]{{", self.ambient)?;
        for (k, (i, v)) in self.entries.iter().enumerate() {
            if k == 8 {
                write!(f, ", … {} more", self.entries.len() - 8)?;
                break;
            }
            if k > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{i}: {v}")?;
        }
        f.write_str("}")
    }
}

#[derive(Serialize, Deserialize)]
struct SparsePointRepr {
    ambient: Ambient,
    entries: Vec<(Index, f64)>,
}

impl Serialize for SparsePoint {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        SparsePointRepr { ambient: self.ambient, entries: self.entries.iter().map(|&(i, v)| (i, v.value())).collect() }
            .serialize(s)
    }
}

impl<'de> Deserialize<'de> for SparsePoint {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let repr = SparsePointRepr::deserialize(d)?;
        SparsePoint::from_pairs(repr.entries, repr.ambient).map_err(D::Error::custom)
    }
}

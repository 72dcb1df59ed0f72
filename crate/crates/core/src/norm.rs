//! `(s0, p)`-norms: the `ℓ_p` norm of the `s0` largest absolute entries.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Exponents at or above this accumulate scaled by the largest entry.
pub const SCALED_POWER_THRESHOLD: f64 = 16.0;

/// Norm order `p ∈ [1, ∞]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NormOrder {
    Finite(f64),
    Infinity,
}

impl NormOrder {
    pub fn finite(p: f64) -> Result<Self> {
        if p.is_finite() && p >= 1.0 {
            Ok(NormOrder::Finite(p))
        } else if p == f64::INFINITY {
            Ok(NormOrder::Infinity)
        } else {
            Err(Error::invalid(format!("norm order must be >= 1, got {p}")))
        }
    }

    pub fn is_infinite(self) -> bool {
        matches!(self, NormOrder::Infinity)
    }
}

impl fmt::Display for NormOrder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NormOrder::Finite(p) => write!(f, "{p}"),
            NormOrder::Infinity => f.write_str("inf"),
        }
    }
}

impl FromStr for NormOrder {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.eq_ignore_ascii_case("inf") {
            return Ok(NormOrder::Infinity);
        }
        let p: f64 = s.parse().map_err(|_| Error::invalid(format!("bad norm order '{s}'")))?;
        NormOrder::finite(p)
    }
}

impl Serialize for NormOrder {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            NormOrder::Finite(p) => serializer.serialize_f64(*p),
            NormOrder::Infinity => serializer.serialize_str("inf"),
        }
    }
}

impl<'de> Deserialize<'de> for NormOrder {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Text(String),
        }
        let parsed = match Raw::deserialize(deserializer)? {
            Raw::Num(p) => NormOrder::finite(p),
            Raw::Text(s) => s.parse(),
        };
        parsed.map_err(serde::de::Error::custom)
    }
}

/// Accumulates `Σ|x|^p` over a descending run of magnitudes.
struct PowerSum {
    p: f64,
    scale: f64,
    sum: f64,
}

impl PowerSum {
    /// `largest` is the first (biggest) magnitude that will be pushed.
    fn new(p: f64, largest: f64) -> Self {
        let scale = if p >= SCALED_POWER_THRESHOLD && largest > 0.0 { largest } else { 1.0 };
        Self { p, scale, sum: 0.0 }
    }

    #[inline]
    fn push(&mut self, x: f64) {
        let x = x / self.scale;
        self.sum += if self.p == 1.0 {
            x
        } else if self.p == 2.0 {
            x * x
        } else {
            x.powf(self.p)
        };
    }

    fn value(&self) -> f64 {
        let root = if self.p == 1.0 { self.sum } else { self.sum.powf(1.0 / self.p) };
        self.scale * root
    }
}

fn clamp_s0(s0: usize, len: usize) -> Result<usize> {
    if s0 == 0 {
        return Err(Error::invalid("s0 must be at least 1"));
    }
    if len == 0 {
        return Err(Error::invalid("norm of an empty vector"));
    }
    Ok(s0.min(len))
}

/// Absolute values sorted in decreasing order.
pub fn descending_magnitudes(v: &[f64]) -> Vec<f64> {
    let mut mags: Vec<f64> = v.iter().map(|x| x.abs()).collect();
    mags.sort_unstable_by(|a, b| b.total_cmp(a));
    mags
}

/// `‖v‖_(s0,p)`; `s0` larger than `v.len()` is clamped.
pub fn s0p_norm(v: &[f64], s0: usize, p: NormOrder) -> Result<f64> {
    let s0 = clamp_s0(s0, v.len())?;
    let mut mags: Vec<f64> = v.iter().map(|x| x.abs()).collect();
    if let NormOrder::Infinity = p {
        return Ok(mags.iter().copied().fold(0.0, f64::max));
    }
    if s0 < mags.len() {
        mags.select_nth_unstable_by(s0 - 1, |a, b| b.total_cmp(a));
        mags.truncate(s0);
    }
    mags.sort_unstable_by(|a, b| b.total_cmp(a));
    Ok(norm_of_sorted(&mags, s0, p))
}

fn norm_of_sorted(desc: &[f64], s0: usize, p: NormOrder) -> f64 {
    match p {
        NormOrder::Infinity => desc.first().copied().unwrap_or(0.0),
        NormOrder::Finite(p) => {
            let mut acc = PowerSum::new(p, desc[0]);
            desc[..s0].iter().for_each(|&x| acc.push(x));
            acc.value()
        }
    }
}

/// Evaluates a whole grid of `(s0, p)` norms of one vector with a single sort.
///
/// Results agree bit for bit with [`s0p_norm`] on each entry.
#[derive(Debug, Clone)]
pub struct NormFamily {
    entries: Vec<(usize, NormOrder)>,
}

impl NormFamily {
    pub fn new(entries: Vec<(usize, NormOrder)>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::invalid("norm grid is empty"));
        }
        if entries.iter().any(|&(s0, _)| s0 == 0) {
            return Err(Error::invalid("s0 must be at least 1"));
        }
        Ok(Self { entries })
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Norms of `v` for every grid entry, in grid order.
    pub fn evaluate(&self, v: &[f64]) -> Vec<f64> {
        let desc = descending_magnitudes(v);
        self.evaluate_sorted(&desc)
    }

    /// Same as [`evaluate`](Self::evaluate) for pre-sorted magnitudes.
    pub fn evaluate_sorted(&self, desc: &[f64]) -> Vec<f64> {
        self.entries
            .iter()
            .map(|&(s0, p)| norm_of_sorted(desc, s0.min(desc.len()), p))
            .collect()
    }
}

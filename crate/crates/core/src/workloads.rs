//! Input sequences: seeded random, structured and adversarial.
//!
//! Random draws come from ChaCha8 seeded with `seed_from_u64`, and a unit
//! value is the top 53 bits of one `u64` scaled by `2^-53`, so sequences are
//! identical on every platform.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::fmt;
use std::str::FromStr;

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sorters::log2_ceil;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum WorkloadKind {
    /// i.i.d. uniform on `[0, 1)`.
    Uniform,
    /// `t / n` ascending.
    Sorted,
    /// `t / n` descending.
    Reversed,
    /// Bit-reversed `t` over `ceil(log2 n)` bits: repeated midpoint splits.
    BitReversal,
    /// Midpoint of the currently largest gap, leftmost on ties.
    GapSplitter,
    /// Uniform inside one randomly placed band of the given width.
    Clustered { width: f64 },
    /// Blocks whose first value doubles the range seen so far,
    /// alternating right and left. Values leave `[0, 1]`.
    RangeDoubler,
}

impl WorkloadKind {
    /// Bounds every generated value falls in (inclusive).
    pub fn declared_range(self, n: usize) -> (f64, f64) {
        match self {
            WorkloadKind::RangeDoubler => {
                let (lo, hi) = doubler_bounds(n).last().copied().unwrap_or((0.0, 1.0));
                (lo, hi)
            }
            _ => (0.0, 1.0),
        }
    }
}

impl fmt::Display for WorkloadKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            WorkloadKind::Uniform => f.write_str("uniform"),
            WorkloadKind::Sorted => f.write_str("sorted"),
            WorkloadKind::Reversed => f.write_str("reversed"),
            WorkloadKind::BitReversal => f.write_str("bit_reversal"),
            WorkloadKind::GapSplitter => f.write_str("gap_splitter"),
            WorkloadKind::Clustered { width } => write!(f, "clustered:{width}"),
            WorkloadKind::RangeDoubler => f.write_str("range_doubler"),
        }
    }
}

impl FromStr for WorkloadKind {
    type Err = Error;

    /// Accepts the names printed by `Display`; the band width may also be
    /// written `clustered(0.125)`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let kind = match s {
            "uniform" => WorkloadKind::Uniform,
            "sorted" => WorkloadKind::Sorted,
            "reversed" => WorkloadKind::Reversed,
            "bit_reversal" => WorkloadKind::BitReversal,
            "gap_splitter" => WorkloadKind::GapSplitter,
            "range_doubler" => WorkloadKind::RangeDoubler,
            _ => {
                let width = s
                    .strip_prefix("clustered:")
                    .or_else(|| s.strip_prefix("clustered(").and_then(|r| r.strip_suffix(')')))
                    .ok_or_else(|| Error::UnknownWorkload(s.to_string()))?;
                let width: f64 = width.parse().map_err(|_| Error::UnknownWorkload(s.to_string()))?;
                if !(width > 0.0 && width <= 1.0) {
                    return Err(Error::invalid("clustered width", width, "must lie in (0, 1]"));
                }
                WorkloadKind::Clustered { width }
            }
        };
        Ok(kind)
    }
}

struct UnitRng(ChaCha8Rng);

impl UnitRng {
    fn new(seed: u64) -> Self {
        UnitRng(ChaCha8Rng::seed_from_u64(seed))
    }

    /// Uniform on `[0, 1)` with 53 random bits.
    fn next_unit(&mut self) -> f64 {
        (self.0.next_u64() >> 11) as f64 * f64::powi(2.0, -53)
    }
}

/// Generates `n` values of the given kind. Deterministic in `(kind, n, seed)`.
pub fn generate(kind: WorkloadKind, n: usize, seed: u64) -> Result<Vec<f64>> {
    if n == 0 {
        return Err(Error::invalid("n", n, "must be at least 1"));
    }
    let mut rng = UnitRng::new(seed);
    let out = match kind {
        WorkloadKind::Uniform => (0..n).map(|_| rng.next_unit()).collect(),
        WorkloadKind::Sorted => (0..n).map(|t| t as f64 / n as f64).collect(),
        WorkloadKind::Reversed => (0..n).map(|t| (n - 1 - t) as f64 / n as f64).collect(),
        WorkloadKind::BitReversal => {
            let bits = log2_ceil(n);
            let scale = f64::powi(2.0, -(bits as i32));
            (0..n as u64).map(|t| reverse_bits(t, bits) as f64 * scale).collect()
        }
        WorkloadKind::GapSplitter => gap_splitter(n),
        WorkloadKind::Clustered { width } => {
            let start = rng.next_unit() * (1.0 - width);
            (0..n).map(|_| start + width * rng.next_unit()).collect()
        }
        WorkloadKind::RangeDoubler => range_doubler(n, &mut rng),
    };
    Ok(out)
}

fn reverse_bits(t: u64, bits: u32) -> u64 {
    if bits == 0 {
        0
    } else {
        t.reverse_bits() >> (64 - bits)
    }
}

#[derive(PartialEq)]
struct Gap {
    lo: f64,
    hi: f64,
}

impl Eq for Gap {}

impl Ord for Gap {
    fn cmp(&self, other: &Self) -> Ordering {
        (self.hi - self.lo)
            .total_cmp(&(other.hi - other.lo))
            .then_with(|| other.lo.total_cmp(&self.lo))
    }
}

impl PartialOrd for Gap {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

fn gap_splitter(n: usize) -> Vec<f64> {
    let mut gaps = BinaryHeap::with_capacity(n + 1);
    gaps.push(Gap { lo: 0.0, hi: 1.0 });
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let Gap { lo, hi } = gaps.pop().expect("splitting never empties the heap");
        let mid = lo + (hi - lo) / 2.0;
        out.push(mid);
        gaps.push(Gap { lo, hi: mid });
        gaps.push(Gap { lo: mid, hi });
    }
    out
}

/// Number of blocks and the range after each block.
fn doubler_bounds(n: usize) -> Vec<(f64, f64)> {
    let blocks = log2_ceil(n).max(1) as usize;
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    let mut out = Vec::with_capacity(blocks);
    for b in 0..blocks {
        if b > 0 {
            let width = hi - lo;
            if b % 2 == 1 {
                hi = lo + 2.0 * width;
            } else {
                lo = hi - 2.0 * width;
            }
        }
        out.push((lo, hi));
    }
    out
}

fn range_doubler(n: usize, rng: &mut UnitRng) -> Vec<f64> {
    let bounds = doubler_bounds(n);
    let block = n.div_ceil(bounds.len());
    let mut out = Vec::with_capacity(n);
    for (b, &(lo, hi)) in bounds.iter().enumerate() {
        for i in 0..block {
            if out.len() == n {
                return out;
            }
            let v = match (b, i) {
                (0, _) => rng.next_unit(),
                (_, 0) if b % 2 == 1 => hi,
                (_, 0) => lo,
                _ => lo + (hi - lo) * rng.next_unit(),
            };
            out.push(v);
        }
    }
    out
}

/// Parses one decimal value per line; blank lines and `#` comments are skipped.
pub fn parse_values(text: &str) -> Result<Vec<f64>> {
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(|l| {
            l.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| Error::invalid("input", l, "not a finite decimal number"))
        })
        .collect()
}

/// One value per line, shortest decimal that round-trips.
pub fn format_values(values: &[f64]) -> String {
    let mut s = String::with_capacity(values.len() * 20);
    for v in values {
        s.push_str(&v.to_string());
        s.push('\n');
    }
    s
}

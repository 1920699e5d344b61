//! Dyadic half-open intervals `[j/2^k, (j+1)/2^k)` inside `[0, 1)`.
//!
//! Every label used by the trees is one of these. An interval is stored as
//! its `(depth, index)` pair so membership tests reduce to integer
//! comparisons and boundaries are never ambiguous.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Deepest label the structures will create. `2^60` still fits a `u64`
/// index and keeps every bound exactly representable as an `f64`.
pub const MAX_DEPTH: u32 = 60;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct DyadicInterval {
    depth: u32,
    index: u64,
}

impl DyadicInterval {
    /// `[0, 1)`.
    pub const UNIT: DyadicInterval = DyadicInterval { depth: 0, index: 0 };

    pub fn new(depth: u32, index: u64) -> Result<Self> {
        if depth > MAX_DEPTH {
            return Err(Error::DepthOverflow {
                depth,
                max: MAX_DEPTH,
            });
        }
        if index >= 1u64 << depth {
            return Err(Error::invalid(
                "index",
                index,
                format!("must be below 2^{depth}"),
            ));
        }
        Ok(DyadicInterval { depth, index })
    }

    #[inline]
    pub fn depth(self) -> u32 {
        self.depth
    }

    #[inline]
    pub fn index(self) -> u64 {
        self.index
    }

    pub fn lower(self) -> f64 {
        self.index as f64 * scale_down(self.depth)
    }

    pub fn upper(self) -> f64 {
        (self.index + 1) as f64 * scale_down(self.depth)
    }

    pub fn length(self) -> f64 {
        scale_down(self.depth)
    }

    pub fn left_half(self) -> Result<Self> {
        self.child(0)
    }

    pub fn right_half(self) -> Result<Self> {
        self.child(1)
    }

    fn child(self, bit: u64) -> Result<Self> {
        let depth = self.depth + 1;
        if depth > MAX_DEPTH {
            return Err(Error::DepthOverflow {
                depth,
                max: MAX_DEPTH,
            });
        }
        Ok(DyadicInterval {
            depth,
            index: 2 * self.index + bit,
        })
    }

    /// Half-open membership, decided on the integer grid of this depth.
    #[inline]
    pub fn contains(self, x: f64) -> bool {
        match grid_cell(x, self.depth) {
            Some(cell) => cell == self.index,
            None => false,
        }
    }

    /// The one of the two halves that contains `x`.
    pub fn half_containing(self, x: f64) -> Result<Self> {
        self.descendant_containing(x, 1)
    }

    /// The interval `levels` halvings below `self` that contains `x`.
    pub fn descendant_containing(self, x: f64, levels: u32) -> Result<Self> {
        if !self.contains(x) {
            return Err(Error::NotContained { value: x, label: self });
        }
        let depth = self.depth + levels;
        if depth > MAX_DEPTH {
            return Err(Error::DepthOverflow {
                depth,
                max: MAX_DEPTH,
            });
        }
        // contains() succeeded, so x is in [0, 1) and the grid cell exists.
        let index = grid_cell(x, depth).expect("x checked to lie in [0, 1)");
        Ok(DyadicInterval { depth, index })
    }

    /// Whether `other` is `self` or one of its refinements.
    pub fn encloses(self, other: DyadicInterval) -> bool {
        other.depth >= self.depth && other.index >> (other.depth - self.depth) == self.index
    }

    pub fn is_disjoint(self, other: DyadicInterval) -> bool {
        !self.encloses(other) && !other.encloses(self)
    }
}

impl fmt::Display for DyadicInterval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let denom = 1u64 << self.depth;
        write!(f, "[{}/{}, {}/{})", self.index, denom, self.index + 1, denom)
    }
}

/// `2^-depth`, exact for every supported depth.
#[inline]
fn scale_down(depth: u32) -> f64 {
    f64::powi(2.0, -(depth as i32))
}

/// `floor(x * 2^depth)` for `x` in `[0, 1)`, `None` otherwise.
///
/// Scaling by a power of two is exact, so the floor is exact too.
#[inline]
fn grid_cell(x: f64, depth: u32) -> Option<u64> {
    if !(0.0..1.0).contains(&x) {
        return None;
    }
    Some((x * f64::powi(2.0, depth as i32)).floor() as u64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn iv(depth: u32, index: u64) -> DyadicInterval {
        DyadicInterval::new(depth, index).unwrap()
    }

    #[test]
    fn halving() {
        assert_eq!(DyadicInterval::UNIT.left_half().unwrap(), iv(1, 0));
        assert_eq!(iv(2, 3).left_half().unwrap(), iv(3, 6));
        assert_eq!(iv(2, 3).right_half().unwrap(), iv(3, 7));

        let mut cur = DyadicInterval::UNIT;
        for k in 1..=10 {
            cur = cur.left_half().unwrap();
            assert_eq!(cur.lower(), 0.0);
            assert_eq!(cur.upper(), f64::powi(2.0, -k));
        }
    }

    #[test]
    fn halving_past_max_depth_is_an_error() {
        let deepest = iv(MAX_DEPTH, 5);
        assert!(matches!(
            deepest.left_half(),
            Err(Error::DepthOverflow { depth: 61, .. })
        ));
        assert!(DyadicInterval::new(61, 0).is_err());
        assert!(DyadicInterval::new(2, 4).is_err());
    }

    #[test]
    fn containment_is_half_open() {
        assert!(iv(1, 1).contains(0.5));
        assert!(!iv(1, 0).contains(0.5));
        assert!(iv(2, 1).contains(0.3));
        assert!(!DyadicInterval::UNIT.contains(1.0));
        assert!(!DyadicInterval::UNIT.contains(-0.0 - 1e-300));
        assert!(!DyadicInterval::UNIT.contains(f64::NAN));
    }

    #[test]
    fn half_containing_picks_the_right_side() {
        let unit = DyadicInterval::UNIT;
        assert_eq!(unit.half_containing(0.7).unwrap(), iv(1, 1));
        assert_eq!(unit.half_containing(0.49).unwrap(), iv(1, 0));
        assert_eq!(iv(1, 1).half_containing(0.75).unwrap(), iv(2, 3));
        assert!(matches!(
            iv(1, 0).half_containing(0.75),
            Err(Error::NotContained { .. })
        ));
    }

    #[test]
    fn display() {
        assert_eq!(iv(3, 6).to_string(), "[6/8, 7/8)");
    }

    #[test]
    fn halves_partition_exhaustively() {
        // Every interval down to depth 6, probed on the 2^-8 grid.
        for depth in 0..=6u32 {
            for index in 0..(1u64 << depth) {
                let parent = iv(depth, index);
                let (l, r) = (parent.left_half().unwrap(), parent.right_half().unwrap());
                assert!(l.is_disjoint(r));
                for k in 0..256u32 {
                    let x = k as f64 / 256.0;
                    assert_eq!(parent.contains(x), l.contains(x) || r.contains(x));
                    assert!(!(l.contains(x) && r.contains(x)));
                }
            }
        }
    }

    fn arb_interval() -> impl Strategy<Value = DyadicInterval> {
        (0u32..=24).prop_flat_map(|d| (Just(d), 0u64..(1u64 << d))).prop_map(|(d, j)| iv(d, j))
    }

    proptest! {
        #[test]
        fn contains_matches_rational_comparison(iv in arb_interval(), x in 0.0f64..1.0) {
            // j/2^k <= x < (j+1)/2^k compared as exact rationals on integers:
            // x = m / 2^52 after truncation to the 52-bit grid.
            let m = (x * f64::powi(2.0, 52)).floor() as u128;
            let x = m as f64 / f64::powi(2.0, 52);
            let lo = (iv.index() as u128) << (52 - iv.depth());
            let hi = ((iv.index() + 1) as u128) << (52 - iv.depth());
            prop_assert_eq!(iv.contains(x), lo <= m && m < hi);
        }

        #[test]
        fn labels_are_laminar(a in arb_interval(), b in arb_interval()) {
            let nested = a.encloses(b) || b.encloses(a);
            prop_assert!(nested != a.is_disjoint(b));
            if a.depth() == b.depth() {
                prop_assert!(a == b || a.is_disjoint(b));
            }
            // Disjointness agrees with the real endpoints.
            let overlap = a.lower() < b.upper() && b.lower() < a.upper();
            prop_assert_eq!(overlap, nested);
        }
    }
}

//! Ground-truth cost and space measurement.
//!
//! The objective is the sum of `|x_i - x_{i+1}|` over consecutive occupied
//! cells. In known-range mode the fixed values 0 and 1 flank the array;
//! they are part of the objective but not of the cell budget.

use serde::{Deserialize, Serialize};

use crate::composite::CostBreakdown;
use crate::error::{Error, Result};
use crate::sorters::OnlineSorter;

/// Maps a raw value in `[0, 1]` into `[0, 1)`: `1` becomes `1 - 1/n`.
pub fn preprocess(x: f64, n: usize) -> Result<f64> {
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::ValueOutOfRange { value: x, range: "[0, 1]" });
    }
    if n == 0 {
        return Err(Error::invalid("n", n, "must be positive"));
    }
    Ok(if x < 1.0 { x } else { 1.0 - 1.0 / n as f64 })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostReport {
    pub total_cost: f64,
    /// Number of consecutive pairs summed, sentinels included.
    pub pair_count: u64,
    pub space_allocated: u64,
    pub space_occupied: u64,
    pub space_unused: u64,
    pub sentinels: bool,
    /// `total_cost / (max - min)`; with sentinels the optimum is 1.
    /// `None` when all values coincide.
    pub competitive_ratio: Option<f64>,
    /// Cost inside each top-level tree, in array order.
    pub per_tree: Vec<f64>,
    pub type1: Option<f64>,
    pub type2: Option<f64>,
    pub type3: Option<f64>,
}

impl CostReport {
    pub fn with_breakdown(mut self, b: CostBreakdown) -> Self {
        self.type1 = Some(b.type1);
        self.type2 = Some(b.type2);
        self.type3 = Some(b.type3);
        self
    }

    pub fn with_per_tree(mut self, per_tree: Vec<f64>) -> Self {
        self.per_tree = per_tree;
        self
    }

    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("report fields are plain data")
    }
}

/// Evaluates an array given cell by cell.
pub fn total_cost<I>(cells: I, sentinels: bool) -> CostReport
where
    I: IntoIterator<Item = Option<f64>>,
{
    let mut allocated = 0u64;
    let mut occupied = 0u64;
    let mut cost = 0.0f64;
    let mut pairs = 0u64;
    let mut prev = sentinels.then_some(0.0f64);
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);

    for cell in cells {
        allocated += 1;
        let Some(v) = cell else { continue };
        occupied += 1;
        lo = lo.min(v);
        hi = hi.max(v);
        if let Some(p) = prev {
            cost += (v - p).abs();
            pairs += 1;
        }
        prev = Some(v);
    }
    if sentinels {
        cost += (1.0 - prev.expect("left sentinel is always present")).abs();
        pairs += 1;
    }

    let competitive_ratio = if sentinels {
        Some(cost)
    } else if occupied > 0 && hi > lo {
        Some(cost / (hi - lo))
    } else {
        None
    };

    CostReport {
        total_cost: cost,
        pair_count: pairs,
        space_allocated: allocated,
        space_occupied: occupied,
        space_unused: allocated - occupied,
        sentinels,
        competitive_ratio,
        per_tree: Vec::new(),
        type1: None,
        type2: None,
        type3: None,
    }
}

/// Expands a sparse, cell-ordered occupancy list into `allocated` cells.
pub fn dense_cells(allocated: u64, occupied: &[(u64, f64)]) -> impl Iterator<Item = Option<f64>> + '_ {
    let mut next = occupied.iter().peekable();
    (0..allocated).map(move |c| match next.peek() {
        Some(&&(cell, v)) if cell == c => {
            next.next();
            Some(v)
        }
        _ => None,
    })
}

/// Full report for a known-range sorter.
pub fn report<S: OnlineSorter + ?Sized>(sorter: &S, sentinels: bool) -> CostReport {
    let occupied = sorter.occupied();
    total_cost(dense_cells(sorter.allocated(), &occupied), sentinels)
        .with_breakdown(sorter.cost_breakdown())
        .with_per_tree(sorter.per_tree_cost())
}

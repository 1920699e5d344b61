//! Elementary trees.
//!
//! An elementary tree of height `h` is an array of `2^h` cells with a
//! virtual complete binary tree on top of it. The root carries a static
//! label; every other node receives a dyadic label the first time an
//! insertion passes through it while unmarked, namely the half of its
//! parent's label that contains the element being inserted. Insertion is an
//! in-order search for the first unmarked node reachable through marked
//! nodes that admit the element.
//!
//! Nodes are heap-indexed: node `i` has children `2i + 1` and `2i + 2`, and
//! leaf `k` (left to right) is node `2^h - 1 + k`.

use serde::{Deserialize, Serialize};

use crate::dyadic::{DyadicInterval, MAX_DEPTH};
use crate::error::{Error, Result};

const UNMARKED: u64 = u64::MAX;

/// Result of trying to place one element.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum InsertOutcome {
    /// Written to this (previously empty) global cell.
    Placed { cell: u64 },
    /// No admissible free leaf; the structure is unchanged.
    Rejected,
}

impl InsertOutcome {
    pub fn cell(self) -> Option<u64> {
        match self {
            InsertOutcome::Placed { cell } => Some(cell),
            InsertOutcome::Rejected => None,
        }
    }

    pub fn is_placed(self) -> bool {
        matches!(self, InsertOutcome::Placed { .. })
    }
}

/// Occupancy class of a node.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum NodeStatus {
    /// Leaf: occupied. Internal: neither child is empty.
    Full,
    /// Exactly one child is empty.
    Partial,
    /// Unmarked, or a root whose tree holds no element.
    Empty,
}

#[derive(Debug, Clone)]
pub struct ElementaryTree {
    height: u32,
    root_label: DyadicInterval,
    base_offset: u64,
    /// Label index per node; the depth is implied by the node's level.
    labels: Vec<u64>,
    /// Set when every leaf below the node is occupied.
    packed: Vec<bool>,
    /// `NaN` marks an empty cell; elements are never `NaN`.
    cells: Vec<f64>,
    len: usize,
}

// Cells compare bitwise so that two empty (NaN) cells are equal.
impl PartialEq for ElementaryTree {
    fn eq(&self, other: &Self) -> bool {
        self.height == other.height
            && self.root_label == other.root_label
            && self.base_offset == other.base_offset
            && self.labels == other.labels
            && self.packed == other.packed
            && self.len == other.len
            && self.cells.iter().map(|c| c.to_bits()).eq(other.cells.iter().map(|c| c.to_bits()))
    }
}

impl ElementaryTree {
    pub fn new(height: u32, root_label: DyadicInterval, base_offset: u64) -> Result<Self> {
        let deepest = root_label.depth() + height;
        if deepest > MAX_DEPTH {
            return Err(Error::DepthOverflow {
                depth: deepest,
                max: MAX_DEPTH,
            });
        }
        // Node arrays are indexed by usize; cap far below the address space.
        if height > 40 {
            return Err(Error::invalid("height", height, "elementary trees are limited to height 40"));
        }
        let nodes = (1usize << (height + 1)) - 1;
        let mut labels = vec![UNMARKED; nodes];
        labels[0] = root_label.index();
        Ok(ElementaryTree {
            height,
            root_label,
            base_offset,
            labels,
            packed: vec![false; nodes],
            cells: vec![f64::NAN; 1usize << height],
            len: 0,
        })
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn root_label(&self) -> DyadicInterval {
        self.root_label
    }

    /// Global index of this tree's first cell.
    pub fn base_offset(&self) -> u64 {
        self.base_offset
    }

    /// Number of cells, `2^h`.
    pub fn capacity(&self) -> usize {
        self.cells.len()
    }

    pub fn node_count(&self) -> usize {
        self.labels.len()
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn is_full(&self) -> bool {
        self.len == self.cells.len()
    }

    fn first_leaf(&self) -> usize {
        (1usize << self.height) - 1
    }

    pub fn is_leaf(&self, node: usize) -> bool {
        node >= self.first_leaf()
    }

    /// Distance from the root, 0 for the root itself.
    pub fn node_level(node: usize) -> u32 {
        usize::BITS - 1 - (node + 1).leading_zeros()
    }

    /// Height of the node within this tree; leaves are at height 0.
    pub fn node_height(&self, node: usize) -> u32 {
        self.height - Self::node_level(node)
    }

    /// Current label of a node; the root is always labeled.
    pub fn label(&self, node: usize) -> Option<DyadicInterval> {
        let index = self.labels[node];
        if index == UNMARKED {
            return None;
        }
        let depth = self.root_label.depth() + Self::node_level(node);
        Some(DyadicInterval::new(depth, index).expect("stored labels are valid"))
    }

    /// Contents of local cell `k`.
    pub fn cell(&self, k: usize) -> Option<f64> {
        let v = self.cells[k];
        (!v.is_nan()).then_some(v)
    }

    pub fn cells(&self) -> impl Iterator<Item = Option<f64>> + '_ {
        self.cells.iter().map(|&v| (!v.is_nan()).then_some(v))
    }

    /// `(global cell, value)` for every occupied cell, left to right.
    pub fn occupied(&self) -> impl Iterator<Item = (u64, f64)> + '_ {
        let base = self.base_offset;
        self.cells
            .iter()
            .enumerate()
            .filter(|(_, v)| !v.is_nan())
            .map(move |(k, &v)| (base + k as u64, v))
    }

    /// Tries to place `x`, following the four-case recursive insertion
    /// (unmarked leaf, inadmissible marked node, admissible marked node,
    /// unmarked internal node) with an explicit stack.
    ///
    /// A rejected insertion never modifies the tree: labels are only created
    /// on the final descent, which cannot fail.
    pub fn insert(&mut self, x: f64) -> Result<InsertOutcome> {
        if !self.root_label.contains(x) {
            return Err(Error::NotContained {
                value: x,
                label: self.root_label,
            });
        }
        if self.packed[0] {
            return Ok(InsertOutcome::Rejected);
        }
        if self.height == 0 {
            return Ok(self.write_leaf(0, x));
        }

        // Right siblings still to try, innermost last. At most one entry per level.
        let mut pending = [(0usize, 0u32); MAX_DEPTH as usize + 1];
        let mut top = 0;
        let mut next = Some((1usize, 1u32));
        pending[top] = (2, 1);
        top += 1;

        loop {
            let (node, level) = match next.take() {
                Some(v) => v,
                None if top > 0 => {
                    top -= 1;
                    pending[top]
                }
                None => return Ok(InsertOutcome::Rejected),
            };
            if self.packed[node] {
                continue;
            }
            if level == self.height || self.labels[node] == UNMARKED {
                // A free leaf, or an unmarked subtree: both succeed from here.
                return self.descend_and_place(node, level, x);
            }
            let depth = self.root_label.depth() + level;
            let label = DyadicInterval::new(depth, self.labels[node]).expect("stored labels are valid");
            if !label.contains(x) {
                continue;
            }
            pending[top] = (2 * node + 2, level + 1);
            top += 1;
            next = Some((2 * node + 1, level + 1));
        }
    }

    /// Labels `node` and its leftmost descendants with the dyadic intervals
    /// containing `x`, then writes `x` to the leftmost leaf.
    fn descend_and_place(&mut self, mut node: usize, mut level: u32, x: f64) -> Result<InsertOutcome> {
        loop {
            let label = self.root_label.descendant_containing(x, level)?;
            self.labels[node] = label.index();
            if level == self.height {
                break;
            }
            node = 2 * node + 1;
            level += 1;
        }
        match self.write_leaf(node, x) {
            placed @ InsertOutcome::Placed { .. } => Ok(placed),
            InsertOutcome::Rejected => Err(Error::InvariantViolation(
                "leftmost descent through an unmarked subtree hit an occupied leaf".into(),
            )),
        }
    }

    fn write_leaf(&mut self, node: usize, x: f64) -> InsertOutcome {
        let k = node - self.first_leaf();
        if !self.cells[k].is_nan() {
            return InsertOutcome::Rejected;
        }
        self.cells[k] = x;
        self.len += 1;
        self.packed[node] = true;
        let mut cur = node;
        while cur != 0 {
            let sibling = if cur % 2 == 1 { cur + 1 } else { cur - 1 };
            if !self.packed[sibling] {
                break;
            }
            cur = (cur - 1) / 2;
            self.packed[cur] = true;
        }
        InsertOutcome::Placed {
            cell: self.base_offset + k as u64,
        }
    }

    /// Empty means unmarked; the root is empty while the tree holds nothing.
    pub fn is_empty_node(&self, node: usize) -> bool {
        if node == 0 {
            self.len == 0
        } else if self.is_leaf(node) {
            self.cells[node - self.first_leaf()].is_nan()
        } else {
            self.labels[node] == UNMARKED
        }
    }

    pub fn classify(&self, node: usize) -> NodeStatus {
        if self.is_empty_node(node) {
            return NodeStatus::Empty;
        }
        if self.is_leaf(node) {
            return NodeStatus::Full;
        }
        match (self.is_empty_node(2 * node + 1), self.is_empty_node(2 * node + 2)) {
            (false, false) => NodeStatus::Full,
            (true, true) => NodeStatus::Empty,
            _ => NodeStatus::Partial,
        }
    }

    /// Sum of `|x_i - x_{i+1}|` over consecutive occupied cells of this tree.
    pub fn cost(&self) -> f64 {
        let mut total = 0.0;
        let mut prev: Option<f64> = None;
        for v in self.cells.iter().copied().filter(|v| !v.is_nan()) {
            if let Some(p) = prev {
                total += (v - p).abs();
            }
            prev = Some(v);
        }
        total
    }

    /// Overwrites a label without any checks. Only for building corrupted
    /// fixtures that the oracles must reject.
    #[doc(hidden)]
    pub fn corrupt_label(&mut self, node: usize, label: Option<DyadicInterval>) {
        self.labels[node] = label.map_or(UNMARKED, |l| l.index());
    }

    /// Overwrites a cell without any checks. Fixture use only.
    #[doc(hidden)]
    pub fn corrupt_cell(&mut self, k: usize, value: Option<f64>) {
        let was = !self.cells[k].is_nan();
        self.cells[k] = value.unwrap_or(f64::NAN);
        match (was, value.is_some()) {
            (false, true) => self.len += 1,
            (true, false) => self.len -= 1,
            _ => {}
        }
    }
}

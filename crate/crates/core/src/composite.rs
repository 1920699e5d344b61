//! Composite trees and tree ensembles.
//!
//! A composite tree of height `h` is a complete binary tree whose node at
//! height `g` (leaves at 1, root at `h`) is an elementary tree of height
//! `g`. Node labels are static: children split the parent's label in half.
//! The array is laid out in order: left subtree, the node's own `2^g`
//! cells, right subtree. Composite nodes are heap-indexed like elementary
//! tree nodes.
//!
//! Elementary trees are materialised the first time an insertion reaches
//! them. An empty elementary tree always accepts, so a tree that was never
//! materialised is exactly an empty one.

use serde::{Deserialize, Serialize};

use crate::dyadic::{DyadicInterval, MAX_DEPTH};
use crate::elementary::{ElementaryTree, InsertOutcome};
use crate::error::{Error, Result};

/// Cells of a composite tree of height `h`: `h * 2^h`.
pub fn ct_size(h: u32) -> u64 {
    h as u64 * (1u64 << h)
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompositeTree {
    height: u32,
    root_label: DyadicInterval,
    base_offset: u64,
    /// Offset of each node's own cells relative to `base_offset`.
    offsets: Vec<u64>,
    nodes: Vec<Option<ElementaryTree>>,
    len: usize,
}

impl CompositeTree {
    pub fn new(height: u32, root_label: DyadicInterval, base_offset: u64) -> Result<Self> {
        if height == 0 {
            return Err(Error::invalid("height", height, "composite trees have height at least 1"));
        }
        if height > 30 {
            return Err(Error::invalid("height", height, "composite trees are limited to height 30"));
        }
        // Elementary leaves of a leaf node sit `height` levels below the root label.
        let deepest = root_label.depth() + height;
        if deepest > MAX_DEPTH {
            return Err(Error::DepthOverflow {
                depth: deepest,
                max: MAX_DEPTH,
            });
        }
        let count = (1usize << height) - 1;
        let mut offsets = vec![0u64; count];
        // Start of each node's subtree; the node itself follows its left subtree.
        let mut starts = vec![0u64; count];
        for node in 0..count {
            let g = height - ElementaryTree::node_level(node);
            let own = starts[node] + ct_size(g - 1);
            offsets[node] = own;
            if 2 * node + 2 < count {
                starts[2 * node + 1] = starts[node];
                starts[2 * node + 2] = own + (1u64 << g);
            }
        }
        Ok(CompositeTree {
            height,
            root_label,
            base_offset,
            offsets,
            nodes: vec![None; count],
            len: 0,
        })
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn root_label(&self) -> DyadicInterval {
        self.root_label
    }

    pub fn base_offset(&self) -> u64 {
        self.base_offset
    }

    pub fn size(&self) -> u64 {
        ct_size(self.height)
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    /// Height of composite node `node`; leaves are at height 1.
    pub fn node_height(&self, node: usize) -> u32 {
        self.height - ElementaryTree::node_level(node)
    }

    /// Static label of composite node `node`.
    pub fn node_label(&self, node: usize) -> DyadicInterval {
        let level = ElementaryTree::node_level(node);
        let rank = (node + 1 - (1usize << level)) as u64;
        DyadicInterval::new(self.root_label.depth() + level, (self.root_label.index() << level) + rank)
            .expect("depth validated at construction")
    }

    /// Global index of the first cell of node `node`'s elementary tree.
    pub fn node_offset(&self, node: usize) -> u64 {
        self.base_offset + self.offsets[node]
    }

    /// The elementary tree at `node`, if anything was ever inserted there.
    pub fn node_tree(&self, node: usize) -> Option<&ElementaryTree> {
        self.nodes[node].as_ref()
    }

    #[doc(hidden)]
    pub fn node_tree_mut(&mut self, node: usize) -> Option<&mut ElementaryTree> {
        self.nodes[node].as_mut()
    }

    /// The leaf node whose label contains `x`, computed from the grid
    /// position of `x` one level above the elementary leaves.
    pub fn admissible_leaf(&self, x: f64) -> Result<usize> {
        let leaf = self.root_label.descendant_containing(x, self.height - 1)?;
        let rank = leaf.index() - (self.root_label.index() << (self.height - 1));
        Ok((1usize << (self.height - 1)) - 1 + rank as usize)
    }

    /// Tries the elementary trees on the path from the admissible leaf to the
    /// root, bottom-up, and stops at the first that accepts `x`.
    pub fn insert(&mut self, x: f64) -> Result<InsertOutcome> {
        let mut node = self.admissible_leaf(x)?;
        loop {
            let outcome = self.tree_at(node)?.insert(x)?;
            if outcome.is_placed() {
                self.len += 1;
                return Ok(outcome);
            }
            if node == 0 {
                return Ok(InsertOutcome::Rejected);
            }
            node = (node - 1) / 2;
        }
    }

    fn tree_at(&mut self, node: usize) -> Result<&mut ElementaryTree> {
        if self.nodes[node].is_none() {
            let tree = ElementaryTree::new(self.node_height(node), self.node_label(node), self.node_offset(node))?;
            self.nodes[node] = Some(tree);
        }
        Ok(self.nodes[node].as_mut().expect("just materialised"))
    }

    /// Nodes in array order (in-order traversal).
    pub fn in_order(&self) -> Vec<usize> {
        let mut order = Vec::with_capacity(self.nodes.len());
        let mut stack = Vec::new();
        let mut cur = Some(0usize);
        while cur.is_some() || !stack.is_empty() {
            while let Some(n) = cur {
                stack.push(n);
                let left = 2 * n + 1;
                cur = (left < self.nodes.len()).then_some(left);
            }
            let n = stack.pop().expect("non-empty");
            order.push(n);
            let right = 2 * n + 2;
            cur = (right < self.nodes.len()).then_some(right);
        }
        order
    }

    /// `(global cell, value, node)` for every occupied cell, left to right.
    pub fn occupied(&self) -> Vec<(u64, f64, usize)> {
        let mut out = Vec::with_capacity(self.len);
        for node in self.in_order() {
            if let Some(t) = &self.nodes[node] {
                out.extend(t.occupied().map(|(c, v)| (c, v, node)));
            }
        }
        out
    }

    /// Composite node owning global cell `cell`, if it falls in this tree.
    pub fn locate(&self, cell: u64) -> Option<usize> {
        if cell < self.base_offset || cell >= self.base_offset + self.size() {
            return None;
        }
        let rel = cell - self.base_offset;
        let (mut node, mut start) = (0usize, 0u64);
        let mut g = self.height;
        loop {
            let half = ct_size(g - 1);
            let own = start + half;
            if rel < own {
                node = 2 * node + 1;
            } else if rel < own + (1u64 << g) {
                return Some(node);
            } else {
                start = own + (1u64 << g);
                node = 2 * node + 2;
            }
            g -= 1;
        }
    }
}

/// Which tree of an ensemble a cell belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TreeRole {
    /// Elementary tree at this composite node of the prefix.
    Prefix(usize),
    /// The `i`-th suffix tree, 0-based.
    Suffix(usize),
}

/// Cost classes of a pair of consecutive occupied cells.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CostType {
    /// Both in the same elementary tree.
    Type1,
    /// In elementary trees of two different prefix nodes.
    Type2,
    /// Prefix to first suffix tree, or between consecutive suffix trees.
    Type3,
}

pub fn classify_roles(a: TreeRole, b: TreeRole) -> CostType {
    match (a, b) {
        _ if a == b => CostType::Type1,
        (TreeRole::Prefix(_), TreeRole::Prefix(_)) => CostType::Type2,
        _ => CostType::Type3,
    }
}

/// A composite prefix followed by `alpha` elementary trees of the same
/// height and root label. Overflow from the prefix cascades into the
/// suffix trees in order.
#[derive(Debug, Clone, PartialEq)]
pub struct TreeEnsemble {
    prefix: CompositeTree,
    suffix: Vec<Option<ElementaryTree>>,
    len: usize,
}

impl TreeEnsemble {
    pub fn new(height: u32, label: DyadicInterval, order: usize, base_offset: u64) -> Result<Self> {
        let prefix = CompositeTree::new(height, label, base_offset)?;
        Ok(TreeEnsemble {
            prefix,
            suffix: vec![None; order],
            len: 0,
        })
    }

    pub fn prefix(&self) -> &CompositeTree {
        &self.prefix
    }

    #[doc(hidden)]
    pub fn prefix_mut(&mut self) -> &mut CompositeTree {
        &mut self.prefix
    }

    pub fn order(&self) -> usize {
        self.suffix.len()
    }

    pub fn height(&self) -> u32 {
        self.prefix.height
    }

    pub fn label(&self) -> DyadicInterval {
        self.prefix.root_label
    }

    pub fn base_offset(&self) -> u64 {
        self.prefix.base_offset
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Total cells: `h * 2^h + alpha * 2^h`.
    pub fn size(&self) -> u64 {
        self.prefix.size() + self.suffix.len() as u64 * (1u64 << self.height())
    }

    pub fn suffix_offset(&self, i: usize) -> u64 {
        self.prefix.base_offset + self.prefix.size() + i as u64 * (1u64 << self.height())
    }

    pub fn suffix_tree(&self, i: usize) -> Option<&ElementaryTree> {
        self.suffix[i].as_ref()
    }

    #[doc(hidden)]
    pub fn suffix_tree_mut(&mut self, i: usize) -> Option<&mut ElementaryTree> {
        self.suffix[i].as_mut()
    }

    pub fn insert(&mut self, x: f64) -> Result<InsertOutcome> {
        let outcome = self.prefix.insert(x)?;
        if outcome.is_placed() {
            self.len += 1;
            return Ok(outcome);
        }
        for i in 0..self.suffix.len() {
            if self.suffix[i].is_none() {
                let tree = ElementaryTree::new(self.height(), self.label(), self.suffix_offset(i))?;
                self.suffix[i] = Some(tree);
            }
            let outcome = self.suffix[i].as_mut().expect("materialised").insert(x)?;
            if outcome.is_placed() {
                self.len += 1;
                return Ok(outcome);
            }
        }
        Ok(InsertOutcome::Rejected)
    }

    pub fn locate(&self, cell: u64) -> Option<TreeRole> {
        if let Some(node) = self.prefix.locate(cell) {
            return Some(TreeRole::Prefix(node));
        }
        let start = self.suffix_offset(0);
        if cell < start || cell >= self.base_offset() + self.size() {
            return None;
        }
        Some(TreeRole::Suffix(((cell - start) >> self.height()) as usize))
    }

    /// Cost class of two consecutive occupied cells.
    pub fn classify_adjacent_cost(&self, cell_i: u64, cell_j: u64) -> Result<CostType> {
        let role = |c: u64| {
            self.locate(c)
                .ok_or_else(|| Error::invalid("cell", c, "outside the ensemble"))
        };
        Ok(classify_roles(role(cell_i)?, role(cell_j)?))
    }

    /// `(global cell, value, tree)` for every occupied cell, left to right.
    pub fn occupied(&self) -> Vec<(u64, f64, TreeRole)> {
        let mut out: Vec<_> = self
            .prefix
            .occupied()
            .into_iter()
            .map(|(c, v, n)| (c, v, TreeRole::Prefix(n)))
            .collect();
        for (i, t) in self.suffix.iter().enumerate() {
            if let Some(t) = t {
                out.extend(t.occupied().map(|(c, v)| (c, v, TreeRole::Suffix(i))));
            }
        }
        out
    }

    /// Every materialised elementary tree with its role.
    pub fn trees(&self) -> impl Iterator<Item = (TreeRole, &ElementaryTree)> + '_ {
        let prefix = self
            .prefix
            .nodes
            .iter()
            .enumerate()
            .filter_map(|(n, t)| t.as_ref().map(|t| (TreeRole::Prefix(n), t)));
        let suffix = self
            .suffix
            .iter()
            .enumerate()
            .filter_map(|(i, t)| t.as_ref().map(|t| (TreeRole::Suffix(i), t)));
        prefix.chain(suffix)
    }
}

/// Sum of `|x_i - x_{i+1}|` per cost class over consecutive occupied cells.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct CostBreakdown {
    pub type1: f64,
    pub type2: f64,
    pub type3: f64,
}

impl CostBreakdown {
    pub fn total(&self) -> f64 {
        self.type1 + self.type2 + self.type3
    }

    pub fn add(&mut self, kind: CostType, amount: f64) {
        match kind {
            CostType::Type1 => self.type1 += amount,
            CostType::Type2 => self.type2 += amount,
            CostType::Type3 => self.type3 += amount,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn iv(depth: u32, index: u64) -> DyadicInterval {
        DyadicInterval::new(depth, index).unwrap()
    }

    #[test]
    fn sizes() {
        assert_eq!(ct_size(1), 2);
        assert_eq!(ct_size(2), 8);
        assert_eq!(ct_size(10), 10240);
    }

    #[test]
    fn height_two_layout() {
        let ct = CompositeTree::new(2, DyadicInterval::UNIT, 0).unwrap();
        assert_eq!(ct.node_offset(1), 0);
        assert_eq!(ct.node_offset(0), 2);
        assert_eq!(ct.node_offset(2), 6);
        assert_eq!(ct.node_label(1), iv(1, 0));
        assert_eq!(ct.node_label(2), iv(1, 1));
        assert_eq!(ct.in_order(), vec![1, 0, 2]);
    }

    #[test]
    fn height_two_hand_trace() {
        let mut ct = CompositeTree::new(2, DyadicInterval::UNIT, 0).unwrap();
        assert_eq!(ct.insert(0.1).unwrap().cell(), Some(0));
        assert_eq!(ct.insert(0.4).unwrap().cell(), Some(1));
        // Leaf [0,1/2) is full: escalate to the root tree, cells 2..5.
        assert_eq!(ct.insert(0.2).unwrap().cell(), Some(2));

        let mut fresh = CompositeTree::new(2, DyadicInterval::UNIT, 0).unwrap();
        assert_eq!(fresh.insert(0.6).unwrap().cell(), Some(6));
    }

    #[test]
    fn admissible_leaf_agrees_with_descent() {
        let ct = CompositeTree::new(5, iv(3, 5), 0).unwrap();
        for k in 0..1000 {
            let x = ct.root_label().lower() + ct.root_label().length() * (k as f64 / 1000.0);
            let mut node = 0usize;
            let mut label = ct.root_label();
            for _ in 1..ct.height() {
                let half = label.half_containing(x).unwrap();
                node = if half == label.left_half().unwrap() { 2 * node + 1 } else { 2 * node + 2 };
                label = half;
            }
            assert_eq!(ct.admissible_leaf(x).unwrap(), node);
            assert_eq!(ct.node_label(node), label);
        }
    }

    #[test]
    fn locate_inverts_offsets() {
        let ct = CompositeTree::new(4, DyadicInterval::UNIT, 100).unwrap();
        for node in 0..ct.node_count() {
            let start = ct.node_offset(node);
            let width = 1u64 << ct.node_height(node);
            for c in start..start + width {
                assert_eq!(ct.locate(c), Some(node));
            }
        }
        assert_eq!(ct.locate(99), None);
        assert_eq!(ct.locate(100 + ct_size(4)), None);
    }

    #[test]
    fn ensemble_overflow_reaches_suffix() {
        // Height 1: prefix is a single 2-cell tree, suffix trees are 2 cells.
        let mut ens = TreeEnsemble::new(1, DyadicInterval::UNIT, 2, 0).unwrap();
        assert_eq!(ens.size(), 6);
        let cells: Vec<_> = (0..6).map(|_| ens.insert(0.3).unwrap().cell()).collect();
        assert_eq!(cells, vec![Some(0), Some(1), Some(2), Some(3), Some(4), Some(5)]);
        assert_eq!(ens.insert(0.3).unwrap(), InsertOutcome::Rejected);
        assert_eq!(ens.classify_adjacent_cost(0, 1).unwrap(), CostType::Type1);
        assert_eq!(ens.classify_adjacent_cost(1, 2).unwrap(), CostType::Type3);
        assert_eq!(ens.classify_adjacent_cost(3, 4).unwrap(), CostType::Type3);
    }

    #[test]
    fn ensemble_cost_types() {
        let mut ens = TreeEnsemble::new(2, DyadicInterval::UNIT, 1, 0).unwrap();
        for x in [0.1, 0.4, 0.2] {
            ens.insert(x).unwrap();
        }
        // Cells 0,1 in the left leaf tree, 2 in the root tree.
        assert_eq!(ens.classify_adjacent_cost(1, 2).unwrap(), CostType::Type2);
        assert_eq!(ens.classify_adjacent_cost(0, 1).unwrap(), CostType::Type1);
        assert_eq!(ens.classify_adjacent_cost(7, 8).unwrap(), CostType::Type3);
        assert!(ens.classify_adjacent_cost(0, 12).is_err());
    }

    #[test]
    fn order_zero_matches_bare_composite() {
        let xs: Vec<f64> = (0..64).map(|k| ((k * 37) % 64) as f64 / 64.0).collect();
        let mut ens = TreeEnsemble::new(3, DyadicInterval::UNIT, 0, 0).unwrap();
        let mut ct = CompositeTree::new(3, DyadicInterval::UNIT, 0).unwrap();
        for x in xs {
            assert_eq!(ens.insert(x).unwrap(), ct.insert(x).unwrap());
        }
    }
}

//! Brute-force verifiers for the structural and cost guarantees.
//!
//! The checks read finished structures through their public accessors plus
//! the log of inserted values. Containment, node heights, in-order offsets
//! and node classes are recomputed here from first principles rather than
//! through the helpers the structures themselves use.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::composite::{CompositeTree, CostBreakdown, TreeEnsemble};
use crate::dyadic::DyadicInterval;
use crate::elementary::ElementaryTree;
use crate::sorters::SmallSpaceSorter;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub check: String,
    pub detail: String,
}

impl Violation {
    fn new(check: &str, detail: String) -> Self {
        Violation {
            check: check.to_string(),
            detail,
        }
    }
}

/// Outcome of one verification suite, serialised like a cost report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub suite: String,
    pub cases: u64,
    pub violations: Vec<Violation>,
    pub passed: bool,
}

impl VerifyReport {
    pub fn new(suite: impl Into<String>, cases: u64, violations: Vec<Violation>) -> Self {
        VerifyReport {
            suite: suite.into(),
            cases,
            passed: violations.is_empty(),
            violations,
        }
    }

    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("plain data")
    }
}

/// `lower <= x < upper` on the interval's real endpoints.
fn inside(label: DyadicInterval, x: f64) -> bool {
    let scale = (1u64 << label.depth()) as f64;
    let lo = label.index() as f64 / scale;
    let hi = (label.index() + 1) as f64 / scale;
    lo <= x && x < hi
}

/// Depth of heap node `i` (root 0), by repeated halving.
fn level_of(mut i: usize) -> u32 {
    let mut level = 0;
    while i > 0 {
        i = (i - 1) / 2;
        level += 1;
    }
    level
}

/// Independent second implementation of the objective: collect the values,
/// add the sentinels, sum the gaps.
pub fn naive_cost<I>(cells: I, sentinels: bool) -> f64
where
    I: IntoIterator<Item = Option<f64>>,
{
    let mut values = Vec::new();
    if sentinels {
        values.push(0.0);
    }
    values.extend(cells.into_iter().flatten());
    if sentinels {
        values.push(1.0);
    }
    let mut sum = 0.0;
    for w in values.windows(2) {
        sum += (w[0] - w[1]).abs();
    }
    sum
}

/// Every occupied leaf's value lies in the label of each of its ancestors.
pub fn check_ancestor_admissibility(t: &ElementaryTree) -> Vec<Violation> {
    let mut out = Vec::new();
    let first_leaf = (1usize << t.height()) - 1;
    for k in 0..t.capacity() {
        let Some(v) = t.cell(k) else { continue };
        let mut node = first_leaf + k;
        loop {
            match t.label(node) {
                Some(label) if inside(label, v) => {}
                Some(label) => out.push(Violation::new(
                    "ancestor-admissibility",
                    format!("cell {k} holds {v} outside node {node} label {label}"),
                )),
                None => out.push(Violation::new(
                    "ancestor-admissibility",
                    format!("cell {k} holds {v} below unmarked node {node}"),
                )),
            }
            if node == 0 {
                break;
            }
            node = (node - 1) / 2;
        }
    }
    out
}

fn node_is_empty(t: &ElementaryTree, node: usize) -> bool {
    let first_leaf = (1usize << t.height()) - 1;
    if node == 0 {
        t.cells().all(|c| c.is_none())
    } else if node >= first_leaf {
        t.cell(node - first_leaf).is_none()
    } else {
        t.label(node).is_none()
    }
}

/// Partial nodes (exactly one empty child) of a tree, as `(height, label)`.
fn partial_nodes(t: &ElementaryTree, out: &mut Vec<(u32, DyadicInterval, usize)>, tree_id: usize) {
    let first_leaf = (1usize << t.height()) - 1;
    for node in 0..first_leaf {
        if node_is_empty(t, node) {
            continue;
        }
        let l = node_is_empty(t, 2 * node + 1);
        let r = node_is_empty(t, 2 * node + 2);
        if l != r {
            let label = t.label(node).expect("non-empty nodes are labeled");
            out.push((t.height() - level_of(node), label, tree_id));
        }
    }
}

/// At every height, partial nodes across all trees carry disjoint labels.
pub fn check_partial_disjoint(s: &SmallSpaceSorter) -> Vec<Violation> {
    check_partial_disjoint_trees(s.trees())
}

pub fn check_partial_disjoint_trees(trees: &[ElementaryTree]) -> Vec<Violation> {
    let mut partial = Vec::new();
    for (id, t) in trees.iter().enumerate() {
        partial_nodes(t, &mut partial, id);
    }
    partial.sort_unstable_by_key(|&(h, l, id)| (h, l, id));
    partial
        .windows(2)
        .filter(|w| w[0].0 == w[1].0 && !w[0].1.is_disjoint(w[1].1))
        .map(|w| {
            Violation::new(
                "partial-disjoint",
                format!(
                    "height {}: label {} partial in trees {} and {}",
                    w[0].0, w[0].1, w[0].2, w[1].2
                ),
            )
        })
        .collect()
}

/// Offsets of every composite node's cells relative to the tree start,
/// from an explicit in-order walk with a running cursor.
pub fn in_order_offsets(height: u32) -> Vec<u64> {
    fn walk(node: usize, g: u32, cursor: &mut u64, out: &mut [u64]) {
        if g == 0 {
            return;
        }
        walk(2 * node + 1, g - 1, cursor, out);
        out[node] = *cursor;
        *cursor += 1u64 << g;
        walk(2 * node + 2, g - 1, cursor, out);
    }
    let mut out = vec![0; (1usize << height) - 1];
    let mut cursor = 0;
    walk(0, height, &mut cursor, &mut out);
    out
}

/// Static label of composite node `node` by walking down from the root.
fn composite_label(root: DyadicInterval, node: usize) -> DyadicInterval {
    let mut path = Vec::new();
    let mut cur = node;
    while cur > 0 {
        path.push(cur % 2 == 0);
        cur = (cur - 1) / 2;
    }
    let mut label = root;
    for right in path.into_iter().rev() {
        label = if right { label.right_half() } else { label.left_half() }.expect("depth within limits");
    }
    label
}

/// Collects `(height, label)` of every elementary-tree node at height >= 1
/// that counts as labeled: non-root nodes when marked, roots when their tree
/// holds an element.
fn labeled_internal_nodes(t: &ElementaryTree, out: &mut Vec<(u32, DyadicInterval)>) {
    if t.height() == 0 || t.is_empty() {
        return;
    }
    out.push((t.height(), t.root_label()));
    let first_leaf = (1usize << t.height()) - 1;
    for node in 1..first_leaf {
        if let Some(label) = t.label(node) {
            out.push((t.height() - level_of(node), label));
        }
    }
}

/// If `r + 1` elementary-tree nodes at height `h >= 1` share a label `I`,
/// at least `r 2^h + 1` inserted elements lie in `I`.
///
/// Roots, including the statically labeled ones, count only once their tree
/// is non-empty. `history` is the list of successfully inserted values.
pub fn check_space_lemma(ens: &TreeEnsemble, history: &[f64]) -> Vec<Violation> {
    let mut nodes = Vec::new();
    let prefix = ens.prefix();
    for node in 0..prefix.node_count() {
        if let Some(t) = prefix.node_tree(node) {
            labeled_internal_nodes(t, &mut nodes);
        }
    }
    for i in 0..ens.order() {
        if let Some(t) = ens.suffix_tree(i) {
            labeled_internal_nodes(t, &mut nodes);
        }
    }
    nodes.sort_unstable();

    let mut out = Vec::new();
    let mut i = 0;
    while i < nodes.len() {
        let mut j = i;
        while j < nodes.len() && nodes[j] == nodes[i] {
            j += 1;
        }
        let (height, label) = nodes[i];
        let r = (j - i - 1) as u64;
        let need = r * (1u64 << height) + 1;
        let have = history.iter().filter(|&&x| inside(label, x)).count() as u64;
        if have < need {
            out.push(Violation::new(
                "space-lemma",
                format!(
                    "{} nodes at height {height} labeled {label} but only {have} of the required {need} elements",
                    r + 1
                ),
            ));
        }
        i = j;
    }
    out
}

/// A non-empty node tree at composite height `g >= 2` with label `I`
/// implies at least `2^(g-1) + 1` inserted elements in `I`; at height 1 one
/// element suffices.
pub fn check_composite_corollary(ct: &CompositeTree, history: &[f64]) -> Vec<Violation> {
    let mut out = Vec::new();
    for node in 0..ct.node_count() {
        let Some(t) = ct.node_tree(node) else { continue };
        if t.is_empty() {
            continue;
        }
        let g = ct.height() - level_of(node);
        let label = composite_label(ct.root_label(), node);
        let need = if g >= 2 { (1u64 << (g - 1)) + 1 } else { 1 };
        let have = history.iter().filter(|&&x| inside(label, x)).count() as u64;
        if have < need {
            out.push(Violation::new(
                "composite-corollary",
                format!("node {node} at height {g} labeled {label} is non-empty with {have} < {need} elements"),
            ));
        }
    }
    out
}

/// Checks the in-order layout and static labels of a composite tree.
pub fn check_composite_layout(ct: &CompositeTree) -> Vec<Violation> {
    let offsets = in_order_offsets(ct.height());
    let mut out = Vec::new();
    for (node, &off) in offsets.iter().enumerate() {
        if ct.node_offset(node) != ct.base_offset() + off {
            out.push(Violation::new(
                "composite-layout",
                format!("node {node}: offset {} expected {}", ct.node_offset(node), ct.base_offset() + off),
            ));
        }
        let label = composite_label(ct.root_label(), node);
        if ct.node_label(node) != label {
            out.push(Violation::new(
                "composite-layout",
                format!("node {node}: label {} expected {label}", ct.node_label(node)),
            ));
        }
        if let Some(t) = ct.node_tree(node) {
            if t.root_label() != label || t.base_offset() != ct.base_offset() + off {
                out.push(Violation::new("composite-layout", format!("node {node}: tree misplaced")));
            }
        }
    }
    out
}

/// Measured per-class costs against their bounds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostLemmaReport {
    pub elements: usize,
    pub costs: CostBreakdown,
    pub bound_type1: f64,
    pub bound_type2: f64,
    pub bound_type3: f64,
    pub holds: bool,
}

/// Type 1 `<= n H l / 2^H`, Type 2 `<= 9 n H l / 2^H + l`, Type 3 `<= alpha l`.
pub fn check_cost_lemma(ens: &TreeEnsemble, n_inserted: usize) -> CostLemmaReport {
    let cells = ens.occupied();
    let mut costs = CostBreakdown::default();
    for w in cells.windows(2) {
        let kind = ens
            .classify_adjacent_cost(w[0].0, w[1].0)
            .expect("occupied cells belong to the ensemble");
        costs.add(kind, (w[1].1 - w[0].1).abs());
    }
    let ell = ens.label().length();
    let h = ens.height() as f64;
    let per = n_inserted as f64 * h * ell / f64::powi(2.0, ens.height() as i32);
    let bound_type1 = per;
    let bound_type2 = 9.0 * per + ell;
    let bound_type3 = ens.order() as f64 * ell;
    CostLemmaReport {
        elements: n_inserted,
        holds: costs.type1 <= bound_type1 && costs.type2 <= bound_type2 && costs.type3 <= bound_type3,
        costs,
        bound_type1,
        bound_type2,
        bound_type3,
    }
}

/// The same bounds for a bare composite tree (no suffix). Pairs are split
/// into same-node and cross-node using offsets from [`in_order_offsets`].
pub fn check_composite_cost_lemma(ct: &CompositeTree) -> CostLemmaReport {
    let h = ct.height();
    let offsets = in_order_offsets(h);
    let mut spans: Vec<(u64, u64, usize)> = offsets
        .iter()
        .enumerate()
        .map(|(node, &off)| {
            let g = h - level_of(node);
            (ct.base_offset() + off, ct.base_offset() + off + (1u64 << g), node)
        })
        .collect();
    spans.sort_unstable();
    let owner = |cell: u64| {
        let i = spans.partition_point(|s| s.0 <= cell);
        let s = spans[i - 1];
        assert!(cell < s.1, "cell {cell} outside every node");
        s.2
    };

    let mut values = Vec::new();
    for node in 0..ct.node_count() {
        if let Some(t) = ct.node_tree(node) {
            values.extend(t.occupied());
        }
    }
    values.sort_unstable_by_key(|&(c, _)| c);

    let mut costs = CostBreakdown::default();
    for w in values.windows(2) {
        let d = (w[1].1 - w[0].1).abs();
        if owner(w[0].0) == owner(w[1].0) {
            costs.type1 += d;
        } else {
            costs.type2 += d;
        }
    }
    let n = values.len();
    let ell = ct.root_label().length();
    let per = n as f64 * h as f64 * ell / f64::powi(2.0, h as i32);
    CostLemmaReport {
        elements: n,
        holds: costs.type1 <= per && costs.type2 <= 9.0 * per + ell,
        costs,
        bound_type1: per,
        bound_type2: 9.0 * per + ell,
        bound_type3: 0.0,
    }
}

/// Cost inside one elementary tree is at most `l h`.
pub fn check_elementary_cost(t: &ElementaryTree) -> Vec<Violation> {
    let values: Vec<f64> = t.cells().flatten().collect();
    let cost: f64 = values.windows(2).map(|w| (w[0] - w[1]).abs()).sum();
    let bound = t.root_label().length() * t.height() as f64;
    if cost > bound {
        vec![Violation::new(
            "elementary-cost",
            format!("cost {cost} exceeds {bound} in a tree of height {}", t.height()),
        )]
    } else {
        Vec::new()
    }
}

/// For a row of elementary trees: each tree within its own bound, and each
/// pair straddling two trees at most the root label length.
pub fn check_row_cost(trees: &[ElementaryTree]) -> Vec<Violation> {
    let mut out: Vec<Violation> = trees.iter().flat_map(check_elementary_cost).collect();
    let mut last: Option<(usize, f64)> = None;
    for (id, t) in trees.iter().enumerate() {
        let mut values = t.cells().flatten();
        if let (Some((pid, pv)), Some(first)) = (last, values.next()) {
            let ell = t.root_label().length();
            if (first - pv).abs() > ell {
                out.push(Violation::new(
                    "row-cost",
                    format!("trees {pid}->{id}: boundary pair costs {}", (first - pv).abs()),
                ));
            }
        }
        if let Some(v) = t.cells().flatten().last() {
            last = Some((id, v));
        }
    }
    out
}

/// Checks the structural guarantees of an ensemble replay in one pass.
pub fn audit_ensemble(ens: &TreeEnsemble, history: &[f64]) -> Vec<Violation> {
    let mut out = check_space_lemma(ens, history);
    out.extend(check_composite_corollary(ens.prefix(), history));
    for (_, t) in ens.trees() {
        out.extend(check_ancestor_admissibility(t));
    }
    out
}

/// Depth-first enumeration of every sequence of length `<= max_len` over
/// `alphabet`, replayed incrementally from cloned states. `step` inserts one
/// value; `check` sees every state including the empty one and returns the
/// number of violations it found. Returns `(states visited, violations)`.
pub fn enumerate_sequences<S, F, C>(initial: S, alphabet: &[f64], max_len: usize, mut step: F, mut check: C) -> (u64, u64)
where
    S: Clone,
    F: FnMut(&mut S, f64),
    C: FnMut(&S, &[f64]) -> u64,
{
    let mut visited = 0u64;
    let mut violations = 0u64;
    let mut seq = Vec::with_capacity(max_len);
    let mut stack: Vec<(S, usize)> = vec![(initial, 0)];
    violations += check(&stack[0].0, &seq);
    visited += 1;
    while let Some((state, next)) = stack.last_mut() {
        if seq.len() == max_len || *next == alphabet.len() {
            stack.pop();
            seq.pop();
            continue;
        }
        let x = alphabet[*next];
        *next += 1;
        let mut child = state.clone();
        step(&mut child, x);
        seq.push(x);
        violations += check(&child, &seq);
        visited += 1;
        stack.push((child, 0));
    }
    (visited, violations)
}

/// Counts of labels per `(height, label)`; exposed for diagnostics.
pub fn label_histogram(ens: &TreeEnsemble) -> HashMap<(u32, DyadicInterval), usize> {
    let mut nodes = Vec::new();
    for (_, t) in ens.trees() {
        labeled_internal_nodes(t, &mut nodes);
    }
    let mut out = HashMap::new();
    for key in nodes {
        *out.entry(key).or_insert(0) += 1;
    }
    out
}

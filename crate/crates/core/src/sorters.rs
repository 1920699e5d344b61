//! Known-range sorters for elements in `[0, 1)`.
//!
//! * [`SmallSpaceSorter`]: a growing row of identical elementary trees,
//!   `(1 + eps) n` cells.
//! * [`EnsembleSorter`]: one tree ensemble of order `alpha`,
//!   `(n / alpha) log(n / alpha) + n` cells.
//! * [`SegmentedSorter`]: `beta` composite trees over the `beta` equal
//!   slices of `[0, 1)`, `beta n log n` cells.
//!
//! All logarithms are base 2.

use serde::{Deserialize, Serialize};

use crate::composite::{classify_roles, CompositeTree, CostBreakdown, CostType, TreeEnsemble, TreeRole};
use crate::dyadic::DyadicInterval;
use crate::elementary::{ElementaryTree, InsertOutcome};
use crate::error::{Error, Result};

/// Common surface of every online sorter: irrevocable insertion into a
/// single global array.
pub trait OnlineSorter {
    /// Places `x` and returns its global cell.
    fn insert(&mut self, x: f64) -> Result<u64>;

    /// Elements inserted so far.
    fn len(&self) -> usize;

    fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Elements the sorter was sized for.
    fn capacity(&self) -> usize;

    /// Cells of the global array reserved so far.
    fn allocated(&self) -> u64;

    /// `(global cell, value)` for every occupied cell, in cell order.
    fn occupied(&self) -> Vec<(u64, f64)>;

    /// Cost split into within-tree, between-node and between-tree pairs.
    fn cost_breakdown(&self) -> CostBreakdown;

    /// Cost inside each top-level tree, in array order.
    fn per_tree_cost(&self) -> Vec<f64>;
}

/// `ceil(log2 n)`, i.e. the exponent of `n` rounded up to a power of two.
pub fn log2_ceil(n: usize) -> u32 {
    n.next_power_of_two().trailing_zeros()
}

fn floor_pow2(x: usize) -> usize {
    if x == 0 {
        0
    } else {
        1usize << (usize::BITS - 1 - x.leading_zeros())
    }
}

fn check_unit_value(x: f64) -> Result<()> {
    if (0.0..1.0).contains(&x) {
        Ok(())
    } else {
        Err(Error::ValueOutOfRange { value: x, range: "[0, 1)" })
    }
}

fn check_capacity(len: usize, capacity: usize) -> Result<()> {
    if len >= capacity {
        Err(Error::CapacityExceeded { capacity })
    } else {
        Ok(())
    }
}

fn breakdown_by_role<R: Copy + PartialEq>(
    cells: impl IntoIterator<Item = (f64, R)>,
    classify: impl Fn(R, R) -> CostType,
) -> CostBreakdown {
    let mut out = CostBreakdown::default();
    let mut prev: Option<(f64, R)> = None;
    for (v, r) in cells {
        if let Some((pv, pr)) = prev {
            out.add(classify(pr, r), (v - pv).abs());
        }
        prev = Some((v, r));
    }
    out
}

/// Rows of identical elementary trees with root label `[0, 1)`; trees are
/// appended whenever every existing tree rejects an element.
#[derive(Debug, Clone)]
pub struct SmallSpaceSorter {
    epsilon: f64,
    capacity: usize,
    tree_height: u32,
    trees: Vec<ElementaryTree>,
    len: usize,
}

impl SmallSpaceSorter {
    /// Smallest admissible slack for `n` elements: `3 log2(n) / n`.
    pub fn min_epsilon(n: usize) -> f64 {
        3.0 * (n as f64).log2() / n as f64
    }

    /// Tree height `floor(log(eps n) - log log n)`: the largest `H` with
    /// `2^H <= eps n / log n`.
    pub fn tree_height_for(n: usize, epsilon: f64) -> u32 {
        let ratio = epsilon * n as f64 / (n as f64).log2();
        let mut h = 0u32;
        while f64::powi(2.0, h as i32 + 1) <= ratio {
            h += 1;
        }
        h
    }

    pub fn new(capacity: usize, epsilon: f64) -> Result<Self> {
        if capacity < 2 {
            return Err(Error::invalid("n", capacity, "must be at least 2"));
        }
        if !epsilon.is_finite() || epsilon > 1.0 {
            return Err(Error::invalid("eps", epsilon, "must be at most 1"));
        }
        let min = Self::min_epsilon(capacity);
        if epsilon < min {
            return Err(Error::invalid(
                "eps",
                epsilon,
                format!("below 3*log2(n)/n = {min} for n = {capacity}"),
            ));
        }
        Ok(SmallSpaceSorter {
            epsilon,
            capacity,
            tree_height: Self::tree_height_for(capacity, epsilon),
            trees: Vec::new(),
            len: 0,
        })
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn tree_height(&self) -> u32 {
        self.tree_height
    }

    pub fn tree_size(&self) -> u64 {
        1u64 << self.tree_height
    }

    pub fn trees(&self) -> &[ElementaryTree] {
        &self.trees
    }

    #[doc(hidden)]
    pub fn trees_mut(&mut self) -> &mut [ElementaryTree] {
        &mut self.trees
    }

    /// Upper bound on the number of trees: `2 (1 + 1/eps) log n`.
    pub fn tree_count_bound(&self) -> f64 {
        2.0 * (1.0 + 1.0 / self.epsilon) * (self.capacity as f64).log2()
    }

    fn locate(&self, cell: u64) -> usize {
        (cell >> self.tree_height) as usize
    }
}

impl OnlineSorter for SmallSpaceSorter {
    fn insert(&mut self, x: f64) -> Result<u64> {
        check_capacity(self.len, self.capacity)?;
        check_unit_value(x)?;
        for tree in &mut self.trees {
            if let InsertOutcome::Placed { cell } = tree.insert(x)? {
                self.len += 1;
                return Ok(cell);
            }
        }
        let base = self.trees.len() as u64 * self.tree_size();
        let mut tree = ElementaryTree::new(self.tree_height, DyadicInterval::UNIT, base)?;
        let cell = tree
            .insert(x)?
            .cell()
            .ok_or_else(|| Error::InvariantViolation("a fresh elementary tree rejected an element".into()))?;
        self.trees.push(tree);
        self.len += 1;
        Ok(cell)
    }

    fn len(&self) -> usize {
        self.len
    }

    fn capacity(&self) -> usize {
        self.capacity
    }

    fn allocated(&self) -> u64 {
        self.trees.len() as u64 * self.tree_size()
    }

    fn occupied(&self) -> Vec<(u64, f64)> {
        self.trees.iter().flat_map(|t| t.occupied()).collect()
    }

    fn cost_breakdown(&self) -> CostBreakdown {
        let cells = self.occupied();
        breakdown_by_role(cells.iter().map(|&(c, v)| (v, self.locate(c))), |a, b| {
            if a == b {
                CostType::Type1
            } else {
                CostType::Type3
            }
        })
    }

    fn per_tree_cost(&self) -> Vec<f64> {
        self.trees.iter().map(ElementaryTree::cost).collect()
    }
}

/// A single tree ensemble of order `alpha` and height `log(n / alpha)`
/// with root label `[0, 1)`.
#[derive(Debug, Clone)]
pub struct EnsembleSorter {
    capacity: usize,
    rounded: usize,
    alpha: usize,
    ensemble: TreeEnsemble,
}

impl EnsembleSorter {
    /// `alpha` is rounded down to a power of two and must not exceed
    /// `log n` (with `n` rounded up to a power of two).
    pub fn new(capacity: usize, alpha: usize) -> Result<Self> {
        if capacity < 2 {
            return Err(Error::invalid("n", capacity, "must be at least 2"));
        }
        let log_n = log2_ceil(capacity);
        let alpha = floor_pow2(alpha);
        if alpha == 0 || alpha > log_n as usize {
            return Err(Error::invalid("alpha", alpha, format!("must lie in [1, log2 n] = [1, {log_n}]")));
        }
        let height = log_n - alpha.trailing_zeros();
        Ok(EnsembleSorter {
            capacity,
            rounded: 1usize << log_n,
            alpha,
            ensemble: TreeEnsemble::new(height, DyadicInterval::UNIT, alpha, 0)?,
        })
    }

    pub fn alpha(&self) -> usize {
        self.alpha
    }

    /// `n` rounded up to a power of two.
    pub fn rounded_capacity(&self) -> usize {
        self.rounded
    }

    pub fn tree_height(&self) -> u32 {
        self.ensemble.height()
    }

    pub fn ensemble(&self) -> &TreeEnsemble {
        &self.ensemble
    }

    #[doc(hidden)]
    pub fn ensemble_mut(&mut self) -> &mut TreeEnsemble {
        &mut self.ensemble
    }
}

impl OnlineSorter for EnsembleSorter {
    fn insert(&mut self, x: f64) -> Result<u64> {
        check_capacity(self.ensemble.len(), self.capacity)?;
        check_unit_value(x)?;
        self.ensemble.insert(x)?.cell().ok_or_else(|| {
            Error::InvariantViolation(format!(
                "ensemble of order {} rejected element {} after {} insertions",
                self.alpha,
                x,
                self.ensemble.len()
            ))
        })
    }

    fn len(&self) -> usize {
        self.ensemble.len()
    }

    fn capacity(&self) -> usize {
        self.capacity
    }

    fn allocated(&self) -> u64 {
        self.ensemble.size()
    }

    fn occupied(&self) -> Vec<(u64, f64)> {
        self.ensemble.occupied().into_iter().map(|(c, v, _)| (c, v)).collect()
    }

    fn cost_breakdown(&self) -> CostBreakdown {
        let cells = self.ensemble.occupied();
        breakdown_by_role(cells.into_iter().map(|(_, v, r)| (v, r)), classify_roles)
    }

    fn per_tree_cost(&self) -> Vec<f64> {
        let prefix = self.ensemble.prefix();
        let mut out: Vec<f64> = prefix
            .in_order()
            .into_iter()
            .filter_map(|n| prefix.node_tree(n).map(ElementaryTree::cost))
            .collect();
        out.extend((0..self.alpha).filter_map(|i| self.ensemble.suffix_tree(i).map(ElementaryTree::cost)));
        out
    }
}

/// `beta` composite trees of height `log n`, the `k`-th labeled
/// `[k/beta, (k+1)/beta)`.
#[derive(Debug, Clone)]
pub struct SegmentedSorter {
    capacity: usize,
    rounded: usize,
    beta: usize,
    trees: Vec<CompositeTree>,
    len: usize,
}

impl SegmentedSorter {
    /// `beta` is rounded down to a power of two and must not exceed `log n`.
    pub fn new(capacity: usize, beta: usize) -> Result<Self> {
        if capacity < 2 {
            return Err(Error::invalid("n", capacity, "must be at least 2"));
        }
        let log_n = log2_ceil(capacity);
        let beta = floor_pow2(beta);
        if beta == 0 || beta > log_n as usize {
            return Err(Error::invalid("beta", beta, format!("must lie in [1, log2 n] = [1, {log_n}]")));
        }
        let depth = beta.trailing_zeros();
        let mut trees = Vec::with_capacity(beta);
        for k in 0..beta {
            let label = DyadicInterval::new(depth, k as u64)?;
            trees.push(CompositeTree::new(log_n, label, k as u64 * crate::composite::ct_size(log_n))?);
        }
        Ok(SegmentedSorter {
            capacity,
            rounded: 1usize << log_n,
            beta,
            trees,
            len: 0,
        })
    }

    pub fn beta(&self) -> usize {
        self.beta
    }

    pub fn rounded_capacity(&self) -> usize {
        self.rounded
    }

    pub fn tree_height(&self) -> u32 {
        self.trees[0].height()
    }

    pub fn trees(&self) -> &[CompositeTree] {
        &self.trees
    }

    /// Index of the composite tree whose label contains `x`.
    pub fn route(&self, x: f64) -> Result<usize> {
        let depth = self.beta.trailing_zeros();
        Ok(DyadicInterval::UNIT.descendant_containing(x, depth)?.index() as usize)
    }
}

impl OnlineSorter for SegmentedSorter {
    fn insert(&mut self, x: f64) -> Result<u64> {
        check_capacity(self.len, self.capacity)?;
        check_unit_value(x)?;
        let k = self.route(x)?;
        let cell = self.trees[k].insert(x)?.cell().ok_or_else(|| {
            Error::InvariantViolation(format!(
                "composite tree {k} rejected element {x} after {} insertions",
                self.len
            ))
        })?;
        self.len += 1;
        Ok(cell)
    }

    fn len(&self) -> usize {
        self.len
    }

    fn capacity(&self) -> usize {
        self.capacity
    }

    fn allocated(&self) -> u64 {
        self.trees.iter().map(CompositeTree::size).sum()
    }

    fn occupied(&self) -> Vec<(u64, f64)> {
        self.trees
            .iter()
            .flat_map(|t| t.occupied().into_iter().map(|(c, v, _)| (c, v)))
            .collect()
    }

    fn cost_breakdown(&self) -> CostBreakdown {
        let cells = self
            .trees
            .iter()
            .enumerate()
            .flat_map(|(k, t)| t.occupied().into_iter().map(move |(_, v, n)| (v, (k, n))));
        breakdown_by_role(cells, |(ka, na), (kb, nb)| {
            if ka != kb {
                CostType::Type3
            } else {
                classify_roles(TreeRole::Prefix(na), TreeRole::Prefix(nb))
            }
        })
    }

    fn per_tree_cost(&self) -> Vec<f64> {
        self.trees
            .iter()
            .map(|t| {
                let cells = t.occupied();
                cells.windows(2).map(|w| (w[1].1 - w[0].1).abs()).sum()
            })
            .collect()
    }
}

/// Which structure to build and with which parameter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "structure", rename_all = "kebab-case")]
pub enum SorterConfig {
    SmallSpace { eps: f64 },
    Ensemble { alpha: usize },
    Segmented { beta: usize },
}

impl SorterConfig {
    pub fn build(self, capacity: usize) -> Result<AnySorter> {
        Ok(match self {
            SorterConfig::SmallSpace { eps } => AnySorter::SmallSpace(SmallSpaceSorter::new(capacity, eps)?),
            SorterConfig::Ensemble { alpha } => AnySorter::Ensemble(EnsembleSorter::new(capacity, alpha)?),
            SorterConfig::Segmented { beta } => AnySorter::Segmented(SegmentedSorter::new(capacity, beta)?),
        })
    }
}

/// Picks the structure for a space blow-up `gamma = m / n`.
///
/// Below `gamma = log n` an ensemble with `alpha ~ log n / gamma` is used,
/// from there on `beta ~ gamma / log n` segmented composite trees. `alpha`
/// is rounded up to a power of two (capped at `log n`) and `beta` down, so
/// the prefix or the composite trees never take more than `gamma n` cells.
pub fn select_structure(gamma: f64, n: usize) -> Result<SorterConfig> {
    if n < 2 {
        return Err(Error::invalid("n", n, "must be at least 2"));
    }
    let log_n = log2_ceil(n);
    let log_f = log_n as f64;
    if !(1.0..=log_f * log_f).contains(&gamma) {
        return Err(Error::invalid(
            "gamma",
            gamma,
            format!("must lie in [1, log2(n)^2] = [1, {}]", log_f * log_f),
        ));
    }
    let cap = floor_pow2(log_n as usize);
    if gamma < log_f {
        let target = log_f / gamma;
        let mut alpha = 1usize;
        while (alpha as f64) < target {
            alpha *= 2;
        }
        Ok(SorterConfig::Ensemble { alpha: alpha.min(cap) })
    } else {
        let beta = floor_pow2((gamma / log_f).floor() as usize).clamp(1, cap);
        Ok(SorterConfig::Segmented { beta })
    }
}

/// Any of the three known-range sorters behind one type.
#[derive(Debug, Clone)]
pub enum AnySorter {
    SmallSpace(SmallSpaceSorter),
    Ensemble(EnsembleSorter),
    Segmented(SegmentedSorter),
}

impl AnySorter {
    fn inner(&self) -> &dyn OnlineSorter {
        match self {
            AnySorter::SmallSpace(s) => s,
            AnySorter::Ensemble(s) => s,
            AnySorter::Segmented(s) => s,
        }
    }

    /// Height of the trees the structure is built from.
    pub fn tree_height(&self) -> u32 {
        match self {
            AnySorter::SmallSpace(s) => s.tree_height(),
            AnySorter::Ensemble(s) => s.tree_height(),
            AnySorter::Segmented(s) => s.tree_height(),
        }
    }
}

impl OnlineSorter for AnySorter {
    fn insert(&mut self, x: f64) -> Result<u64> {
        match self {
            AnySorter::SmallSpace(s) => s.insert(x),
            AnySorter::Ensemble(s) => s.insert(x),
            AnySorter::Segmented(s) => s.insert(x),
        }
    }

    fn len(&self) -> usize {
        self.inner().len()
    }

    fn capacity(&self) -> usize {
        self.inner().capacity()
    }

    fn allocated(&self) -> u64 {
        self.inner().allocated()
    }

    fn occupied(&self) -> Vec<(u64, f64)> {
        self.inner().occupied()
    }

    fn cost_breakdown(&self) -> CostBreakdown {
        self.inner().cost_breakdown()
    }

    fn per_tree_cost(&self) -> Vec<f64> {
        self.inner().per_tree_cost()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_space_height_formula() {
        // floor(log2(512) - log2(10)) = floor(9 - 3.32) = 5
        assert_eq!(SmallSpaceSorter::tree_height_for(1024, 0.5), 5);
        let s = SmallSpaceSorter::new(1024, 0.5).unwrap();
        assert_eq!(s.tree_size(), 32);
        // At the lower end of eps the ratio is exactly 3.
        assert_eq!(SmallSpaceSorter::tree_height_for(1024, SmallSpaceSorter::min_epsilon(1024)), 1);
    }

    #[test]
    fn small_space_parameter_errors() {
        assert!(SmallSpaceSorter::new(1024, 0.01).is_err());
        assert!(SmallSpaceSorter::new(1024, 1.5).is_err());
        assert!(SmallSpaceSorter::new(1024, f64::NAN).is_err());
        assert!(SmallSpaceSorter::new(8, 1.0).is_err());
        let err = SmallSpaceSorter::new(4096, 0.001).unwrap_err().to_string();
        assert!(err.contains("3*log2(n)/n"), "{err}");
    }

    #[test]
    fn small_space_first_insert_and_spill() {
        let mut s = SmallSpaceSorter::new(1024, 0.5).unwrap();
        assert_eq!(s.insert(0.9).unwrap(), 0);
        for _ in 1..32 {
            s.insert(0.9).unwrap();
        }
        assert_eq!(s.allocated(), 32);
        // Tree 0 is packed, so the next element opens tree 1.
        assert_eq!(s.insert(0.9).unwrap(), 32);
        assert_eq!(s.trees().len(), 2);
    }

    #[test]
    fn small_space_capacity_and_range() {
        let mut s = SmallSpaceSorter::new(16, 1.0).unwrap();
        assert!(matches!(s.insert(1.0), Err(Error::ValueOutOfRange { .. })));
        for k in 0..16 {
            s.insert(k as f64 / 16.0).unwrap();
        }
        assert!(matches!(s.insert(0.5), Err(Error::CapacityExceeded { capacity: 16 })));
    }

    #[test]
    fn ensemble_layout() {
        let s = EnsembleSorter::new(1024, 4).unwrap();
        assert_eq!(s.tree_height(), 8);
        assert_eq!(s.ensemble().prefix().size(), 2048);
        assert_eq!(s.allocated(), 3072);
        // Non-powers of two round down.
        assert_eq!(EnsembleSorter::new(1024, 6).unwrap().alpha(), 4);
        assert!(EnsembleSorter::new(1024, 16).is_err());
        assert!(EnsembleSorter::new(1024, 0).is_err());
        // n is rounded up for the layout only.
        let s = EnsembleSorter::new(1000, 2).unwrap();
        assert_eq!(s.rounded_capacity(), 1024);
        assert_eq!(s.capacity(), 1000);
    }

    #[test]
    fn ensemble_takes_n_equal_values() {
        let mut s = EnsembleSorter::new(256, 8).unwrap();
        for _ in 0..256 {
            s.insert(0.0).unwrap();
        }
        assert!(matches!(s.insert(0.0), Err(Error::CapacityExceeded { .. })));
    }

    #[test]
    fn segmented_routing_and_size() {
        let s = SegmentedSorter::new(256, 4).unwrap();
        assert_eq!(s.route(0.6).unwrap(), 2);
        assert_eq!(s.trees()[2].root_label().lower(), 0.5);
        assert_eq!(SegmentedSorter::new(256, 2).unwrap().allocated(), 4096);
        assert_eq!(SegmentedSorter::new(1024, 1).unwrap().allocated(), 10240);
    }

    #[test]
    fn segmented_takes_n_equal_values() {
        let mut s = SegmentedSorter::new(128, 4).unwrap();
        for _ in 0..128 {
            s.insert(0.3).unwrap();
        }
        assert_eq!(s.trees()[1].len(), 128);
    }

    #[test]
    fn selector() {
        assert_eq!(select_structure(1.0, 1024).unwrap(), SorterConfig::Ensemble { alpha: 8 });
        assert_eq!(select_structure(3.0, 1024).unwrap(), SorterConfig::Ensemble { alpha: 4 });
        assert_eq!(select_structure(10.0, 1024).unwrap(), SorterConfig::Segmented { beta: 1 });
        assert_eq!(select_structure(100.0, 1024).unwrap(), SorterConfig::Segmented { beta: 8 });
        assert!(select_structure(0.5, 1024).is_err());
        assert!(select_structure(101.0, 1024).is_err());

        // Larger gamma never asks for a larger alpha.
        let mut last = usize::MAX;
        for g in 1..=100 {
            if let SorterConfig::Ensemble { alpha } = select_structure(g as f64, 1024).unwrap() {
                assert!(alpha <= last);
                last = alpha;
            }
        }
    }

    #[test]
    fn breakdowns_add_up() {
        let xs: Vec<f64> = (0..200).map(|k| ((k * 7919) % 200) as f64 / 200.0).collect();
        for config in [
            SorterConfig::SmallSpace { eps: 0.5 },
            SorterConfig::Ensemble { alpha: 2 },
            SorterConfig::Segmented { beta: 4 },
        ] {
            let mut s = config.build(200).unwrap();
            for &x in &xs {
                s.insert(x).unwrap();
            }
            let cells = s.occupied();
            assert!(cells.windows(2).all(|w| w[0].0 < w[1].0));
            let direct: f64 = cells.windows(2).map(|w| (w[1].1 - w[0].1).abs()).sum();
            let b = s.cost_breakdown();
            assert!((b.total() - direct).abs() < 1e-9, "{config:?}");
            assert!(s.per_tree_cost().iter().sum::<f64>() <= direct + 1e-9);
        }
    }
}

//! Online sorting into a fixed array: place each arriving real in a cell,
//! never move it, and keep the sum of gaps between neighbours small.

pub mod composite;
pub mod doubling;
pub mod dyadic;
pub mod elementary;
pub mod error;
pub mod evaluator;
pub mod oracle;
pub mod sorters;
pub mod workloads;

pub use composite::{CompositeTree, CostBreakdown, CostType, TreeEnsemble, TreeRole};
pub use doubling::{DoublingReport, DoublingSorter, DoublingVariant};
pub use dyadic::DyadicInterval;
pub use elementary::{ElementaryTree, InsertOutcome};
pub use error::{Error, Result};
pub use evaluator::{preprocess, total_cost, CostReport};
pub use sorters::{select_structure, AnySorter, EnsembleSorter, OnlineSorter, SegmentedSorter, SmallSpaceSorter, SorterConfig};
pub use workloads::{generate, WorkloadKind};

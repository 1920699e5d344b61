//! Randomized replays of the composite, ensemble and segmented structures
//! against the oracle checks.

use onlinesort::composite::{CompositeTree, TreeEnsemble};
use onlinesort::oracle;
use onlinesort::sorters::{EnsembleSorter, OnlineSorter, SegmentedSorter};
use onlinesort::workloads::{generate, WorkloadKind};
use onlinesort::DyadicInterval;
use proptest::prelude::*;

fn kinds() -> [WorkloadKind; 6] {
    [
        WorkloadKind::Uniform,
        WorkloadKind::Sorted,
        WorkloadKind::Reversed,
        WorkloadKind::BitReversal,
        WorkloadKind::GapSplitter,
        WorkloadKind::Clustered { width: 0.01 },
    ]
}

#[test]
fn composite_layout_matches_in_order_walk() {
    for h in 1..=12 {
        for base in [0, 17] {
            let ct = CompositeTree::new(h, DyadicInterval::UNIT, base).unwrap();
            assert!(oracle::check_composite_layout(&ct).is_empty(), "h={h}");
        }
    }
}

#[test]
fn ensemble_sorter_accepts_every_element() {
    for n in [2usize, 4, 16, 64, 256] {
        let lg = n.trailing_zeros() as usize;
        for alpha in (0..).map(|k| 1usize << k).take_while(|&a| a <= lg.max(1)) {
            for kind in kinds() {
                for seed in 0..8 {
                    let xs = generate(kind, n, seed).unwrap();
                    let mut s = EnsembleSorter::new(n, alpha).unwrap();
                    for &x in &xs {
                        s.insert(x).unwrap_or_else(|e| panic!("n={n} alpha={alpha} {kind} seed={seed}: {e}"));
                    }
                    let v = oracle::audit_ensemble(s.ensemble(), &xs);
                    assert!(v.is_empty(), "n={n} alpha={alpha} {kind}: {v:?}");
                    assert!(oracle::check_cost_lemma(s.ensemble(), n).holds);
                }
            }
        }
    }
}

#[test]
fn segmented_sorter_accepts_every_element() {
    for n in [2usize, 4, 16, 64, 256] {
        let lg = n.trailing_zeros() as usize;
        for beta in (0..).map(|k| 1usize << k).take_while(|&b| b <= lg.max(1)) {
            for kind in kinds() {
                for seed in 0..8 {
                    let xs = generate(kind, n, seed).unwrap();
                    let mut s = SegmentedSorter::new(n, beta).unwrap();
                    for &x in &xs {
                        s.insert(x).unwrap_or_else(|e| panic!("n={n} beta={beta} {kind} seed={seed}: {e}"));
                    }
                    assert_eq!(s.len(), n);
                    for ct in s.trees() {
                        let mine: Vec<f64> = xs.iter().copied().filter(|&x| ct.root_label().contains(x)).collect();
                        assert!(oracle::check_composite_corollary(ct, &mine).is_empty());
                        assert!(oracle::check_composite_cost_lemma(ct).holds);
                    }
                }
            }
        }
    }
}

proptest! {
    #[test]
    fn ensemble_replay_keeps_invariants(
        h in 1u32..5,
        alpha in 0usize..3,
        xs in prop::collection::vec(0.0f64..1.0, 0..80),
    ) {
        let mut ens = TreeEnsemble::new(h, DyadicInterval::UNIT, alpha, 0).unwrap();
        let mut history = Vec::new();
        for &x in &xs {
            if ens.insert(x).unwrap().is_placed() {
                history.push(x);
            }
            let v = oracle::audit_ensemble(&ens, &history);
            prop_assert!(v.is_empty(), "{:?}", v);
        }
        prop_assert_eq!(ens.len(), history.len());
        prop_assert!(oracle::check_cost_lemma(&ens, history.len()).holds);
    }

    #[test]
    fn ensemble_accepts_its_rated_load(h in 1u32..6, a in 1usize..6, xs in prop::collection::vec(0.0f64..1.0, 64)) {
        // An order-a ensemble of height h takes a 2^h elements.
        let mut ens = TreeEnsemble::new(h, DyadicInterval::UNIT, a, 0).unwrap();
        let load = a << h;
        for &x in xs.iter().cycle().take(load) {
            prop_assert!(ens.insert(x).unwrap().is_placed());
        }
    }
}

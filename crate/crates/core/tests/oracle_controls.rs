//! Every oracle check must be able to fire. Each test breaks one structure
//! on purpose and expects a violation.

use onlinesort::composite::{CompositeTree, TreeEnsemble};
use onlinesort::oracle;
use onlinesort::{DyadicInterval, ElementaryTree};

fn iv(depth: u32, index: u64) -> DyadicInterval {
    DyadicInterval::new(depth, index).unwrap()
}

#[test]
fn space_lemma_flags_a_label_without_elements() {
    let mut ens = TreeEnsemble::new(2, DyadicInterval::UNIT, 1, 0).unwrap();
    ens.insert(0.6).unwrap();
    assert!(oracle::check_space_lemma(&ens, &[0.6]).is_empty());
    // The height-1 tree labeled [1/2, 1) needs one element inside.
    assert!(!oracle::check_space_lemma(&ens, &[0.1]).is_empty());
}

#[test]
fn space_lemma_flags_a_corrupted_label() {
    let mut ens = TreeEnsemble::new(3, DyadicInterval::UNIT, 0, 0).unwrap();
    for x in [0.05, 0.1, 0.15, 0.2, 0.3, 0.35] {
        ens.insert(x).unwrap();
    }
    let history = [0.05, 0.1, 0.15, 0.2, 0.3, 0.35];
    assert!(oracle::check_space_lemma(&ens, &history).is_empty());

    let node = (0..ens.prefix().node_count())
        .find(|&p| ens.prefix().node_tree(p).is_some_and(|t| t.height() >= 2 && !t.is_empty()))
        .expect("some tree of height 2 was used");
    let tree = ens.prefix_mut().node_tree_mut(node).unwrap();
    // Rightmost interval one level below the root: no inserted value is in it.
    let depth = tree.root_label().depth() + 1;
    let far = iv(depth, (1 << depth) - 1);
    tree.corrupt_label(1, Some(far));
    let v = oracle::check_space_lemma(&ens, &history);
    assert!(!v.is_empty());
    assert!(v[0].detail.contains(&far.to_string()), "{v:?}");
}

#[test]
fn partial_disjointness_flags_duplicate_partial_labels() {
    let mut a = ElementaryTree::new(2, DyadicInterval::UNIT, 0).unwrap();
    let mut b = ElementaryTree::new(2, DyadicInterval::UNIT, 4).unwrap();
    a.insert(0.1).unwrap();
    assert!(oracle::check_partial_disjoint_trees(std::slice::from_ref(&a)).is_empty());
    b.insert(0.1).unwrap();
    // Both roots have an empty right child and the same label.
    let v = oracle::check_partial_disjoint_trees(&[a, b]);
    assert!(!v.is_empty());
}

#[test]
fn ancestor_admissibility_flags_a_corrupted_label() {
    let mut t = ElementaryTree::new(2, DyadicInterval::UNIT, 0).unwrap();
    t.insert(0.7).unwrap();
    assert!(oracle::check_ancestor_admissibility(&t).is_empty());
    t.corrupt_label(1, Some(iv(1, 0)));
    assert!(!oracle::check_ancestor_admissibility(&t).is_empty());

    let mut t = ElementaryTree::new(2, DyadicInterval::UNIT, 0).unwrap();
    t.insert(0.7).unwrap();
    t.corrupt_cell(0, Some(0.2));
    assert!(!oracle::check_ancestor_admissibility(&t).is_empty());
}

#[test]
fn composite_corollary_flags_a_short_history() {
    let mut ct = CompositeTree::new(3, DyadicInterval::UNIT, 0).unwrap();
    ct.insert(0.3).unwrap();
    assert!(oracle::check_composite_corollary(&ct, &[0.3]).is_empty());
    assert!(!oracle::check_composite_corollary(&ct, &[]).is_empty());
    assert!(!oracle::check_composite_corollary(&ct, &[0.9]).is_empty());
}

#[test]
fn elementary_cost_flags_scrambled_cells() {
    let mut t = ElementaryTree::new(2, iv(2, 0), 0).unwrap();
    assert!(oracle::check_elementary_cost(&t).is_empty());
    for (k, v) in [0.0, 0.24, 0.0, 0.24].into_iter().enumerate() {
        t.corrupt_cell(k, Some(v));
    }
    // 3 * 0.24 > 2 * 0.25.
    assert!(!oracle::check_elementary_cost(&t).is_empty());
}

#[test]
fn violations_serialize_as_json_lines() {
    let mut t = ElementaryTree::new(1, DyadicInterval::UNIT, 0).unwrap();
    t.insert(0.7).unwrap();
    t.corrupt_cell(0, Some(0.2));
    let report = oracle::VerifyReport::new("ancestor-admissibility", 1, oracle::check_ancestor_admissibility(&t));
    assert!(!report.passed);
    let line = report.to_json_line();
    assert!(!line.contains('\n'));
    let back: oracle::VerifyReport = serde_json::from_str(&line).unwrap();
    assert_eq!(back, report);
}

use std::io::Write;

use clap::{Args, ValueEnum};

use onlinesort::evaluator::{dense_cells, total_cost};
use onlinesort::oracle::{self, Violation, VerifyReport};
use onlinesort::sorters::{EnsembleSorter, OnlineSorter, SegmentedSorter, SmallSpaceSorter};
use onlinesort::workloads::{generate, WorkloadKind};
use onlinesort::{CompositeTree, DyadicInterval, ElementaryTree, TreeEnsemble};

use crate::{open_out, InvariantFailure, OutArg};

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Level {
    Quick,
    Exhaustive,
}

#[derive(Args, Debug)]
pub struct VerifyArgs {
    #[arg(long, value_enum, default_value = "quick")]
    pub level: Level,
    /// Run the checks on deliberately corrupted fixtures instead; a correct
    /// build fails this.
    #[arg(long)]
    pub self_test: bool,
    #[command(flatten)]
    pub out: OutArg,
}

const KINDS: [WorkloadKind; 6] = [
    WorkloadKind::Uniform,
    WorkloadKind::Sorted,
    WorkloadKind::Reversed,
    WorkloadKind::BitReversal,
    WorkloadKind::GapSplitter,
    WorkloadKind::Clustered { width: 0.02 },
];

const GRID8: [f64; 8] = [0.0, 0.125, 0.25, 0.375, 0.5, 0.625, 0.75, 0.875];

#[derive(Default)]
struct Suite {
    cases: u64,
    violations: Vec<Violation>,
}

impl Suite {
    fn add(&mut self, v: Vec<Violation>) {
        self.cases += 1;
        // Keep reports small; the count is what decides.
        if self.violations.len() < 20 {
            self.violations.extend(v);
        }
    }

    fn objective(&mut self, allocated: u64, occupied: &[(u64, f64)]) {
        let mut v = Vec::new();
        for s in [true, false] {
            let fast = total_cost(dense_cells(allocated, occupied), s).total_cost;
            let slow = oracle::naive_cost(dense_cells(allocated, occupied), s);
            if fast.to_bits() != slow.to_bits() {
                v.push(Violation {
                    check: "objective".into(),
                    detail: format!("evaluator {fast} vs naive {slow}"),
                });
            }
        }
        self.add(v);
    }

    fn finish(self, name: &str) -> VerifyReport {
        VerifyReport::new(name, self.cases, self.violations)
    }
}

fn elementary_suite() -> VerifyReport {
    let mut s = Suite::default();
    for h in 1..=8u32 {
        for seed in 0..50 {
            let xs = generate(WorkloadKind::Uniform, (1 << h) + 10, seed).expect("valid workload");
            let mut t = ElementaryTree::new(h, DyadicInterval::UNIT, 0).expect("valid height");
            for x in xs {
                t.insert(x).expect("value in the root label");
            }
            let mut v = oracle::check_ancestor_admissibility(&t);
            v.extend(oracle::check_elementary_cost(&t));
            s.add(v);
            let occ: Vec<(u64, f64)> = t.occupied().collect();
            s.objective(t.capacity() as u64, &occ);
        }
    }
    s.finish("elementary")
}

fn ensemble_suite() -> VerifyReport {
    let mut s = Suite::default();
    for n in [16usize, 64, 256] {
        let lg = n.trailing_zeros() as usize;
        for alpha in (0..).map(|k| 1usize << k).take_while(|&a| a <= lg) {
            for kind in KINDS {
                for seed in 0..3 {
                    let xs = generate(kind, n, seed).expect("valid workload");
                    let mut e = EnsembleSorter::new(n, alpha).expect("valid alpha");
                    let mut v = Vec::new();
                    for &x in &xs {
                        if let Err(err) = e.insert(x) {
                            v.push(Violation {
                                check: "insertion".into(),
                                detail: format!("n={n} alpha={alpha} {kind}: {err}"),
                            });
                            break;
                        }
                    }
                    v.extend(oracle::audit_ensemble(e.ensemble(), &xs[..e.len()]));
                    let bound = oracle::check_cost_lemma(e.ensemble(), e.len());
                    if !bound.holds {
                        v.push(Violation {
                            check: "cost-lemma".into(),
                            detail: format!("n={n} alpha={alpha} {kind}: {:?}", bound.costs),
                        });
                    }
                    s.add(v);
                    s.objective(e.allocated(), &e.occupied());
                }
            }
        }
    }
    s.finish("ensemble")
}

fn segmented_suite() -> VerifyReport {
    let mut s = Suite::default();
    for h in 1..=10 {
        let ct = CompositeTree::new(h, DyadicInterval::UNIT, 3).expect("valid height");
        s.add(oracle::check_composite_layout(&ct));
    }
    for n in [16usize, 64, 256] {
        let lg = n.trailing_zeros() as usize;
        for beta in (0..).map(|k| 1usize << k).take_while(|&b| b <= lg) {
            for kind in KINDS {
                let xs = generate(kind, n, 1).expect("valid workload");
                let mut g = SegmentedSorter::new(n, beta).expect("valid beta");
                let mut v = Vec::new();
                for &x in &xs {
                    if let Err(err) = g.insert(x) {
                        v.push(Violation {
                            check: "insertion".into(),
                            detail: format!("n={n} beta={beta} {kind}: {err}"),
                        });
                        break;
                    }
                }
                for ct in g.trees() {
                    let mine: Vec<f64> = xs.iter().copied().filter(|&x| ct.root_label().contains(x)).collect();
                    v.extend(oracle::check_composite_corollary(ct, &mine));
                    if !oracle::check_composite_cost_lemma(ct).holds {
                        v.push(Violation {
                            check: "cost-lemma".into(),
                            detail: format!("n={n} beta={beta} {kind}: tree {}", ct.root_label()),
                        });
                    }
                }
                s.add(v);
                s.objective(g.allocated(), &g.occupied());
            }
        }
    }
    s.finish("segmented")
}

fn small_space_suite() -> VerifyReport {
    let mut s = Suite::default();
    for seed in 0..200 {
        let kind = KINDS[seed as usize % KINDS.len()];
        let xs = generate(kind, 256, seed).expect("valid workload");
        let mut sorter = SmallSpaceSorter::new(256, 0.5).expect("valid eps");
        let mut v = Vec::new();
        for (t, &x) in xs.iter().enumerate() {
            sorter.insert(x).expect("within capacity");
            if t % 32 == 31 {
                v.extend(oracle::check_partial_disjoint(&sorter));
            }
            if sorter.allocated() as f64 > 1.5 * 256.0 {
                v.push(Violation {
                    check: "space".into(),
                    detail: format!("{kind} seed {seed}: {} cells", sorter.allocated()),
                });
            }
        }
        for t in sorter.trees() {
            v.extend(oracle::check_ancestor_admissibility(t));
        }
        v.extend(oracle::check_row_cost(sorter.trees()));
        s.add(v);
        s.objective(sorter.allocated(), &sorter.occupied());
    }
    s.finish("small-space")
}

fn exhaustive_space_lemma() -> VerifyReport {
    let mut s = Suite::default();
    for alpha in [0usize, 1] {
        let ens = TreeEnsemble::new(2, DyadicInterval::UNIT, alpha, 0).expect("valid ensemble");
        let mut first: Option<Violation> = None;
        let (visited, bad) = oracle::enumerate_sequences(
            (ens, 0u16, 0u8),
            &GRID8,
            8,
            |(e, mask, len), x| {
                if e.insert(x).expect("grid values lie in [0, 1)").is_placed() {
                    *mask |= 1 << *len;
                }
                *len += 1;
            },
            |(e, mask, _), seq| {
                let mut hist = [0.0; 8];
                let mut k = 0;
                for (i, &x) in seq.iter().enumerate() {
                    if mask & (1 << i) != 0 {
                        hist[k] = x;
                        k += 1;
                    }
                }
                let v = oracle::check_space_lemma(e, &hist[..k]);
                if first.is_none() {
                    first = v.into_iter().next();
                    first.is_some() as u64
                } else {
                    v.len() as u64
                }
            },
        );
        s.cases += visited;
        if bad > 0 {
            s.violations.push(first.unwrap_or(Violation {
                check: "space-lemma".into(),
                detail: format!("alpha={alpha}: {bad} violations"),
            }));
        }
    }
    s.finish("space-lemma-exhaustive")
}

fn exhaustive_partial_disjoint() -> VerifyReport {
    let mut s = Suite::default();
    let sorter = SmallSpaceSorter::new(16, 1.0).expect("valid eps");
    let (visited, bad) = oracle::enumerate_sequences(
        sorter,
        &GRID8,
        8,
        |t, x| {
            t.insert(x).expect("within capacity");
        },
        |t, _| {
            let mut bad = oracle::check_partial_disjoint(t).len();
            for tree in t.trees() {
                bad += oracle::check_ancestor_admissibility(tree).len();
            }
            bad as u64
        },
    );
    s.cases = visited;
    if bad > 0 {
        s.violations.push(Violation {
            check: "partial-disjoint".into(),
            detail: format!("{bad} violations over {visited} prefixes"),
        });
    }
    s.finish("partial-disjoint-exhaustive")
}

/// The same checks on broken fixtures; every report should carry violations.
fn self_test() -> Vec<VerifyReport> {
    let mut t = ElementaryTree::new(2, DyadicInterval::UNIT, 0).expect("valid height");
    t.insert(0.7).expect("in range");
    t.corrupt_label(1, DyadicInterval::new(1, 0).ok());
    let admissibility = VerifyReport::new("self-test-admissibility", 1, oracle::check_ancestor_admissibility(&t));

    let mut ens = TreeEnsemble::new(2, DyadicInterval::UNIT, 1, 0).expect("valid ensemble");
    ens.insert(0.6).expect("in range");
    let space = VerifyReport::new("self-test-space-lemma", 1, oracle::check_space_lemma(&ens, &[0.1]));

    let mut a = ElementaryTree::new(2, DyadicInterval::UNIT, 0).expect("valid height");
    let mut b = ElementaryTree::new(2, DyadicInterval::UNIT, 4).expect("valid height");
    a.insert(0.1).expect("in range");
    b.insert(0.1).expect("in range");
    let partial = VerifyReport::new("self-test-partial-disjoint", 1, oracle::check_partial_disjoint_trees(&[a, b]));

    vec![admissibility, space, partial]
}

pub fn main(args: &VerifyArgs) -> anyhow::Result<()> {
    let reports = if args.self_test {
        self_test()
    } else {
        let mut r = vec![elementary_suite(), ensemble_suite(), segmented_suite(), small_space_suite()];
        if args.level == Level::Exhaustive {
            r.push(exhaustive_space_lemma());
            r.push(exhaustive_partial_disjoint());
        }
        r
    };

    let mut out = open_out(args.out.out.as_deref())?;
    for r in &reports {
        writeln!(out, "{}", r.to_json_line())?;
    }
    out.flush()?;

    let failed: Vec<&str> = reports.iter().filter(|r| !r.passed).map(|r| r.suite.as_str()).collect();
    if failed.is_empty() {
        eprintln!("verify: {} suites passed", reports.len());
        Ok(())
    } else {
        Err(InvariantFailure(format!("violations in {}", failed.join(", "))).into())
    }
}

use anyhow::Context;
use clap::Args;
use rayon::prelude::*;
use serde::Serialize;

use onlinesort::evaluator::{self, preprocess};
use onlinesort::sorters::{select_structure, AnySorter, OnlineSorter, SmallSpaceSorter};
use onlinesort::workloads::{self, WorkloadKind};

use crate::{open_out, OutArg};

#[derive(Args, Debug)]
pub struct SweepArgs {
    /// Capacities, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub n: Vec<usize>,
    /// Space blow-ups; `pow2` expands to 1, 2, 4, ... and ends at log2(n)^2.
    #[arg(long, value_delimiter = ',')]
    pub gamma: Vec<String>,
    /// Small-space slacks.
    #[arg(long, value_delimiter = ',')]
    pub eps: Vec<f64>,
    #[arg(long, value_delimiter = ',')]
    pub workload: Vec<String>,
    #[arg(long, value_delimiter = ',', default_value = "0")]
    pub seed: Vec<u64>,
    #[command(flatten)]
    pub out: OutArg,
}

const HEADER: [&str; 12] = [
    "n",
    "workload",
    "seed",
    "knob",
    "value",
    "structure",
    "tree_height",
    "space_allocated",
    "gamma",
    "cost",
    "gamma_cost",
    "log2_n_sq",
];

#[derive(Debug, Clone, Copy)]
enum Knob {
    Gamma(f64),
    Eps(f64),
}

#[derive(Debug, Serialize)]
struct Row {
    n: usize,
    workload: String,
    seed: u64,
    knob: &'static str,
    value: f64,
    structure: &'static str,
    tree_height: u32,
    space_allocated: u64,
    /// Nominal blow-up: gamma itself, or `1 + eps`.
    gamma: f64,
    cost: f64,
    gamma_cost: f64,
    log2_n_sq: f64,
}

fn gammas(items: &[String], n: usize) -> anyhow::Result<Vec<f64>> {
    let log_n = (n as f64).log2();
    let mut out = Vec::new();
    for s in items {
        if s == "pow2" {
            let top = log_n * log_n;
            out.extend((0..).map(|k| f64::powi(2.0, k)).take_while(|&g| g <= top));
            if out.last() != Some(&top) {
                out.push(top);
            }
        } else {
            out.push(s.parse().with_context(|| format!("gamma value {s:?}"))?);
        }
    }
    Ok(out)
}

fn run_point(n: usize, knob: Knob, kind: WorkloadKind, seed: u64) -> anyhow::Result<Row> {
    let (mut sorter, value, gamma, name) = match knob {
        Knob::Gamma(g) => (select_structure(g, n)?.build(n)?, g, g, "gamma"),
        Knob::Eps(e) => (AnySorter::SmallSpace(SmallSpaceSorter::new(n, e)?), e, 1.0 + e, "eps"),
    };
    for x in workloads::generate(kind, n, seed)? {
        sorter.insert(preprocess(x, n)?)?;
    }
    let cost = evaluator::report(&sorter, true).total_cost;
    let structure = match sorter {
        AnySorter::SmallSpace(_) => "small-space",
        AnySorter::Ensemble(_) => "ensemble",
        AnySorter::Segmented(_) => "segmented",
    };
    let log_n = (n as f64).log2();
    Ok(Row {
        n,
        workload: kind.to_string(),
        seed,
        knob: name,
        value,
        structure,
        tree_height: sorter.tree_height(),
        space_allocated: sorter.allocated(),
        gamma,
        cost,
        gamma_cost: gamma * cost,
        log2_n_sq: log_n * log_n,
    })
}

pub fn main(args: &SweepArgs) -> anyhow::Result<()> {
    let kinds: Vec<WorkloadKind> = args.workload.iter().map(|w| w.parse()).collect::<Result<_, _>>()?;
    let mut points = Vec::new();
    for &n in &args.n {
        let mut knobs: Vec<Knob> = gammas(&args.gamma, n)?.into_iter().map(Knob::Gamma).collect();
        knobs.extend(args.eps.iter().map(|&e| Knob::Eps(e)));
        for &knob in &knobs {
            for &kind in &kinds {
                for &seed in &args.seed {
                    points.push((n, knob, kind, seed));
                }
            }
        }
    }

    let rows: Vec<Row> = points
        .par_iter()
        .map(|&(n, knob, kind, seed)| run_point(n, knob, kind, seed).with_context(|| format!("n = {n}, {knob:?}, {kind}")))
        .collect::<anyhow::Result<_>>()?;

    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(open_out(args.out.out.as_deref())?);
    w.write_record(HEADER)?;
    for row in &rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

use std::io::Write;
use std::path::PathBuf;
use std::time::Instant;

use anyhow::Context;
use clap::{Args, ValueEnum};
use serde::Serialize;

use onlinesort::doubling::{DoublingSorter, DoublingVariant, EpochTrace};
use onlinesort::evaluator::{self, preprocess, CostReport};
use onlinesort::sorters::{AnySorter, OnlineSorter, SorterConfig};
use onlinesort::workloads::{self, WorkloadKind};
use onlinesort::Error;

use crate::{open_out, OnOff, OutArg};

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Structure {
    SmallSpace,
    Ensemble,
    Segmented,
    DoublingEps,
    DoublingGamma,
}

#[derive(Args, Clone, Debug, Default)]
pub struct Knobs {
    /// Space slack for small-space and doubling-eps.
    #[arg(long)]
    pub eps: Option<f64>,
    /// Ensemble order, rounded down to a power of two.
    #[arg(long)]
    pub alpha: Option<usize>,
    /// Number of segments, rounded down to a power of two.
    #[arg(long)]
    pub beta: Option<usize>,
    /// Space blow-up for doubling-gamma.
    #[arg(long)]
    pub gamma: Option<f64>,
}

#[derive(Args, Debug)]
pub struct RunArgs {
    #[arg(long, value_enum)]
    pub structure: Structure,
    /// Capacity; defaults to the number of input values.
    #[arg(long)]
    pub n: Option<usize>,
    #[command(flatten)]
    pub knobs: Knobs,
    /// Generated workload, e.g. `uniform`, `gap_splitter`, `clustered:0.05`.
    #[arg(long, default_value = "uniform")]
    pub workload: String,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// One decimal value per line; replaces the generated workload.
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Flank the array with 0 and 1. Defaults to on for known-range
    /// structures and off for the doubling ones.
    #[arg(long, value_enum)]
    pub sentinels: Option<OnOff>,
    #[command(flatten)]
    pub out: OutArg,
}

fn missing(flag: &'static str, structure: Structure) -> Error {
    Error::InvalidParameter {
        name: flag,
        value: "none".into(),
        reason: format!("required by {}", structure.to_possible_value().expect("no skipped variants").get_name()),
    }
}

pub enum Built {
    Known(AnySorter),
    Doubling(DoublingSorter),
}

pub fn build(structure: Structure, n: usize, k: &Knobs) -> Result<Built, Error> {
    let config = match structure {
        Structure::SmallSpace => SorterConfig::SmallSpace {
            eps: k.eps.ok_or_else(|| missing("eps", structure))?,
        },
        Structure::Ensemble => SorterConfig::Ensemble {
            alpha: k.alpha.ok_or_else(|| missing("alpha", structure))?,
        },
        Structure::Segmented => SorterConfig::Segmented {
            beta: k.beta.ok_or_else(|| missing("beta", structure))?,
        },
        Structure::DoublingEps => {
            let eps = k.eps.ok_or_else(|| missing("eps", structure))?;
            return DoublingSorter::new(n, DoublingVariant::SmallSpace { eps }).map(Built::Doubling);
        }
        Structure::DoublingGamma => {
            let gamma = k.gamma.ok_or_else(|| missing("gamma", structure))?;
            return DoublingSorter::new(n, DoublingVariant::Gamma { gamma }).map(Built::Doubling);
        }
    };
    config.build(n).map(Built::Known)
}

/// Parameters as actually used, after rounding.
#[derive(Debug, Clone, Serialize)]
pub struct Params {
    pub n: usize,
    pub eps: Option<f64>,
    pub alpha: Option<usize>,
    pub beta: Option<usize>,
    pub gamma: Option<f64>,
    pub tree_height: Option<u32>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Outcome {
    pub params: Params,
    pub cost: CostReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bootstrap: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub epochs: Option<Vec<EpochTrace>>,
}

/// Inserts every value and measures the result.
pub fn execute(structure: Structure, n: usize, knobs: &Knobs, values: &[f64], sentinels: Option<OnOff>) -> anyhow::Result<Outcome> {
    if values.len() > n {
        return Err(Error::CapacityExceeded { capacity: n }).context(format!("{} values for n = {n}", values.len()));
    }
    let mut params = Params {
        n,
        eps: knobs.eps,
        alpha: None,
        beta: None,
        gamma: None,
        tree_height: None,
    };
    match build(structure, n, knobs)? {
        Built::Known(mut sorter) => {
            for (t, &x) in values.iter().enumerate() {
                let y = preprocess(x, n).with_context(|| format!("value {t}"))?;
                sorter.insert(y).with_context(|| format!("inserting value {t} = {x}"))?;
            }
            params.tree_height = Some(sorter.tree_height());
            match &sorter {
                AnySorter::SmallSpace(_) => {}
                AnySorter::Ensemble(s) => params.alpha = Some(s.alpha()),
                AnySorter::Segmented(s) => params.beta = Some(s.beta()),
            }
            let cost = evaluator::report(&sorter, sentinels != Some(OnOff::Off));
            Ok(Outcome {
                params,
                cost,
                bootstrap: None,
                epochs: None,
            })
        }
        Built::Doubling(mut d) => {
            if sentinels == Some(OnOff::On) {
                return Err(Error::InvalidParameter {
                    name: "sentinels",
                    value: "on".into(),
                    reason: "the doubling structures have no known range to flank".into(),
                }
                .into());
            }
            params.gamma = knobs.gamma;
            for (t, &x) in values.iter().enumerate() {
                d.insert(x).with_context(|| format!("inserting value {t} = {x}"))?;
            }
            let m = d.metrics();
            Ok(Outcome {
                params,
                cost: m.cost,
                bootstrap: Some(m.bootstrap),
                epochs: Some(m.epochs),
            })
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct WorkloadId {
    pub kind: Option<String>,
    pub seed: Option<u64>,
    pub input: Option<String>,
    pub values: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub structure: Structure,
    pub workload: WorkloadId,
    pub elapsed_ms: f64,
    #[serde(flatten)]
    pub outcome: Outcome,
}

pub fn main(args: &RunArgs) -> anyhow::Result<()> {
    let (values, workload) = match &args.input {
        Some(path) => {
            let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            let values = workloads::parse_values(&text).with_context(|| format!("parsing {}", path.display()))?;
            let id = WorkloadId {
                kind: None,
                seed: None,
                input: Some(path.display().to_string()),
                values: values.len(),
            };
            (values, id)
        }
        None => {
            let kind: WorkloadKind = args.workload.parse()?;
            let n = args.n.ok_or(Error::InvalidParameter {
                name: "n",
                value: "none".into(),
                reason: "required unless --input is given".into(),
            })?;
            let values = workloads::generate(kind, n, args.seed)?;
            let id = WorkloadId {
                kind: Some(kind.to_string()),
                seed: Some(args.seed),
                input: None,
                values: values.len(),
            };
            (values, id)
        }
    };
    let n = args.n.unwrap_or(values.len());

    let start = Instant::now();
    let outcome = execute(args.structure, n, &args.knobs, &values, args.sentinels)?;
    let report = RunReport {
        structure: args.structure,
        workload,
        elapsed_ms: start.elapsed().as_secs_f64() * 1e3,
        outcome,
    };
    let mut out = open_out(args.out.out.as_deref())?;
    writeln!(out, "{}", serde_json::to_string(&report)?)?;
    out.flush()?;
    Ok(())
}

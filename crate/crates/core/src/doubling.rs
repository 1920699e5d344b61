//! Unknown-range wrapper: guess-and-double on the range (epochs) and on the
//! element count (phases).
//!
//! The first elements are written to the leading cells until two distinct
//! values have been seen; their span is the first range guess `[a, b]`. An
//! element outside the guess closes the epoch and opens a new one whose
//! range at least doubles and contains the element. Inside an epoch, phase
//! `j` runs a fresh known-range sorter sized for `2^j` elements on values
//! rescaled to `[0, 1)`. Small-space epochs first write a warm-up run of
//! consecutive cells and start at the least `j` where the sorter is defined. Every epoch and phase gets a region of the global
//! array starting right after the previous one; regions are never reused.

use serde::{Deserialize, Serialize};

use crate::evaluator::{preprocess, total_cost, CostReport};
use crate::error::{Error, Result};
use crate::sorters::{log2_ceil, select_structure, AnySorter, OnlineSorter, SmallSpaceSorter};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "kebab-case")]
pub enum DoublingVariant {
    /// `(1 + eps) n` cells; phases run the small-space sorter with `eps / 3`.
    SmallSpace { eps: f64 },
    /// `O(gamma n)` cells; phases run the structure picked for `gamma`.
    Gamma { gamma: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseTrace {
    /// 1-based phase number `j`.
    pub index: u32,
    /// Element bound `n_j = 2^j`.
    pub bound: usize,
    pub inserted: usize,
    pub region_start: u64,
    pub allocated: u64,
    /// `small-space`, `ensemble` or `segmented`.
    pub structure: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochTrace {
    /// 1-based epoch number.
    pub index: usize,
    pub lo: f64,
    pub hi: f64,
    /// Range guess `hi - lo`.
    pub opt: f64,
    pub region_start: u64,
    /// Elements written consecutively before the first phase.
    pub warmup: usize,
    pub phases: Vec<PhaseTrace>,
}

impl EpochTrace {
    pub fn inserted(&self) -> usize {
        self.warmup + self.phases.iter().map(|p| p.inserted).sum::<usize>()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DoublingReport {
    pub variant: DoublingVariant,
    pub capacity: usize,
    pub inserted: usize,
    /// Cells written before the first range guess existed.
    pub bootstrap: usize,
    pub allocated: u64,
    pub cost: CostReport,
    pub epochs: Vec<EpochTrace>,
}

fn structure_name(s: &AnySorter) -> &'static str {
    match s {
        AnySorter::SmallSpace(_) => "small-space",
        AnySorter::Ensemble(_) => "ensemble",
        AnySorter::Segmented(_) => "segmented",
    }
}

#[derive(Debug, Clone)]
struct ActivePhase {
    bound: usize,
    start: u64,
    inserted: usize,
    sorter: AnySorter,
}

#[derive(Debug, Clone)]
pub struct DoublingSorter {
    variant: DoublingVariant,
    capacity: usize,
    /// End of every closed region (bootstrap, warm-ups, finished phases).
    cursor: u64,
    bootstrap: usize,
    epochs: Vec<EpochTrace>,
    warmup_left: usize,
    phase: Option<ActivePhase>,
    /// `(global cell, raw value)` in insertion order.
    placements: Vec<(u64, f64)>,
}

impl DoublingSorter {
    pub fn new(capacity: usize, variant: DoublingVariant) -> Result<Self> {
        if capacity < 2 {
            return Err(Error::invalid("n", capacity, "must be at least 2"));
        }
        match variant {
            DoublingVariant::SmallSpace { eps } => {
                let min = SmallSpaceSorter::min_epsilon(capacity);
                if !(eps.is_finite() && eps <= 1.0 && eps >= min) {
                    return Err(Error::invalid(
                        "eps",
                        eps,
                        format!("must lie in [3*log2(n)/n, 1] = [{min}, 1] for n = {capacity}"),
                    ));
                }
            }
            DoublingVariant::Gamma { gamma } => {
                // Same bounds as the known-range selector.
                select_structure(gamma, capacity)?;
            }
        }
        Ok(DoublingSorter {
            variant,
            capacity,
            cursor: 0,
            bootstrap: 0,
            epochs: Vec::new(),
            warmup_left: 0,
            phase: None,
            placements: Vec::with_capacity(capacity),
        })
    }

    /// Elements each small-space epoch writes consecutively before its first
    /// phase: `ceil(log2(1/e)^2 / e)` with `e = eps / 3`.
    pub fn warmup_len(eps: f64) -> usize {
        let e = eps / 3.0;
        let l = (1.0 / e).log2();
        (l * l / e).ceil() as usize
    }

    pub fn variant(&self) -> DoublingVariant {
        self.variant
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.placements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.placements.is_empty()
    }

    pub fn epochs(&self) -> &[EpochTrace] {
        &self.epochs
    }

    /// Current range guess, once two distinct values have arrived.
    pub fn range(&self) -> Option<(f64, f64)> {
        self.epochs.last().map(|e| (e.lo, e.hi))
    }

    pub fn allocated(&self) -> u64 {
        self.cursor + self.phase.as_ref().map_or(0, |p| p.sorter.allocated())
    }

    /// `(global cell, raw value)` in cell order.
    pub fn occupied(&self) -> Vec<(u64, f64)> {
        let mut cells = self.placements.clone();
        cells.sort_unstable_by_key(|&(c, _)| c);
        cells
    }

    pub fn insert(&mut self, x: f64) -> Result<u64> {
        if self.len() >= self.capacity {
            return Err(Error::CapacityExceeded { capacity: self.capacity });
        }
        if !x.is_finite() {
            return Err(Error::ValueOutOfRange { value: x, range: "finite reals" });
        }

        let Some((lo, hi)) = self.range() else {
            let cell = self.take_cell(x);
            self.bootstrap += 1;
            let (min, max) = self.placements.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &(_, v)| {
                (a.min(v), b.max(v))
            });
            if max > min {
                self.open_epoch(min, max);
            }
            return Ok(cell);
        };

        if x < lo || x > hi {
            let (lo, hi) = if x > hi {
                (lo, x.max(2.0 * hi - lo))
            } else {
                (x.min(2.0 * lo - hi), hi)
            };
            self.close_phase();
            self.open_epoch(lo, hi);
        }

        if self.warmup_left > 0 {
            self.warmup_left -= 1;
            self.epochs.last_mut().expect("epoch open").warmup += 1;
            return Ok(self.take_cell(x));
        }

        let full = self.phase.as_ref().is_none_or(|p| p.inserted == p.bound);
        if full {
            self.open_phase()?;
        }
        let (lo, hi) = self.range().expect("epoch open");
        let phase = self.phase.as_mut().expect("phase open");
        let y = preprocess((x - lo) / (hi - lo), phase.bound)?;
        let inner = phase.sorter.insert(y)?;
        phase.inserted += 1;
        let cell = phase.start + inner;
        let allocated = phase.sorter.allocated();
        let trace = self
            .epochs
            .last_mut()
            .and_then(|e| e.phases.last_mut())
            .expect("phase traced");
        trace.inserted += 1;
        trace.allocated = allocated;
        self.placements.push((cell, x));
        Ok(cell)
    }

    fn take_cell(&mut self, x: f64) -> u64 {
        let cell = self.cursor;
        self.cursor += 1;
        self.placements.push((cell, x));
        cell
    }

    fn open_epoch(&mut self, lo: f64, hi: f64) {
        self.warmup_left = match self.variant {
            DoublingVariant::SmallSpace { eps } => Self::warmup_len(eps),
            DoublingVariant::Gamma { .. } => 0,
        };
        self.epochs.push(EpochTrace {
            index: self.epochs.len() + 1,
            lo,
            hi,
            opt: hi - lo,
            region_start: self.cursor,
            warmup: 0,
            phases: Vec::new(),
        });
    }

    fn close_phase(&mut self) {
        if let Some(p) = self.phase.take() {
            self.cursor = p.start + p.sorter.allocated();
        }
    }

    /// Exponent of the first phase: 1 for the gamma variant; for the
    /// small-space variant the least `j` whose sorter accepts `eps / 3`.
    fn first_phase(&self) -> u32 {
        match self.variant {
            DoublingVariant::SmallSpace { eps } => {
                let e = eps / 3.0;
                (1..usize::BITS - 1)
                    .find(|&j| SmallSpaceSorter::min_epsilon(1usize << j) <= e)
                    .expect("some power of two admits any positive eps")
            }
            DoublingVariant::Gamma { .. } => 1,
        }
    }

    fn open_phase(&mut self) -> Result<()> {
        self.close_phase();
        let first = self.first_phase();
        let epoch = self.epochs.last_mut().expect("epoch open");
        let index = first + epoch.phases.len() as u32;
        let bound = 1usize << index;
        let sorter = match self.variant {
            DoublingVariant::SmallSpace { eps } => AnySorter::SmallSpace(SmallSpaceSorter::new(bound, eps / 3.0)?),
            DoublingVariant::Gamma { gamma } => {
                let log_n = log2_ceil(bound) as f64;
                let g = gamma.clamp(1.0, log_n * log_n);
                select_structure(g, bound)?.build(bound)?
            }
        };
        epoch.phases.push(PhaseTrace {
            index,
            bound,
            inserted: 0,
            region_start: self.cursor,
            allocated: sorter.allocated(),
            structure: structure_name(&sorter).to_string(),
        });
        self.phase = Some(ActivePhase {
            bound,
            start: self.cursor,
            inserted: 0,
            sorter,
        });
        Ok(())
    }

    /// Cost over the raw values (no sentinels), ratio against the observed
    /// range, space and the epoch/phase trace.
    pub fn metrics(&self) -> DoublingReport {
        let occupied = self.occupied();
        let cells = crate::evaluator::dense_cells(self.allocated(), &occupied);
        DoublingReport {
            variant: self.variant,
            capacity: self.capacity,
            inserted: self.len(),
            bootstrap: self.bootstrap,
            allocated: self.allocated(),
            cost: total_cost(cells, false),
            epochs: self.epochs.clone(),
        }
    }
}

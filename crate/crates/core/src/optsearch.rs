//! Exhaustive search over (Ta, Ts, ds) looking for a configuration whose exact
//! worst-case latency beats SingleInt at the same duty-cycle.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::sim::periodic_sweep;
use crate::singleint::{self, SingleIntMode};
use crate::timebase::{DutyCycle, HardwareProfile, PiParams, TimeNs};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct GridRange {
    pub min: TimeNs,
    pub max: TimeNs,
    pub step: TimeNs,
}

impl GridRange {
    pub fn new(min: TimeNs, max: TimeNs, step: TimeNs) -> Self {
        GridRange { min, max, step }
    }

    pub fn values(&self) -> impl Iterator<Item = TimeNs> + '_ {
        let n = if self.max < self.min { 0 } else { (self.max - self.min).0 / self.step.0 + 1 };
        (0..n).map(move |i| self.min + self.step * i)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SearchGrid {
    pub ta: GridRange,
    pub ts: GridRange,
    /// ds runs over multiples of this step up to Ts.
    pub ds_step: TimeNs,
    pub da: TimeNs,
    /// Admissible duty-cycle range (exclusive).
    pub eta_band: (f64, f64),
    /// Rows with a gap below this threshold (s) are reported.
    pub report_below: f64,
}

impl SearchGrid {
    /// Ta, Ts in [50 ms, 1 s] in 50 ms steps, ds in 50 ms steps, 240 us beacons.
    /// Every in-band cell has ds = 50 ms, shorter (by da) than the 50 ms offset
    /// lattice, so all of them are unbounded.
    pub fn coarse() -> Self {
        let r = GridRange::new(TimeNs::from_ms(50), TimeNs::from_ms(1000), TimeNs::from_ms(50));
        SearchGrid {
            ta: r,
            ts: r,
            ds_step: TimeNs::from_ms(50),
            da: TimeNs::from_us(240),
            eta_band: (0.001, 0.10),
            report_below: 0.5,
        }
    }

    /// Ta, Ts in [10 ms, 1 s] with 10 ms steps.
    pub fn desk() -> Self {
        let r = GridRange::new(TimeNs::from_ms(10), TimeNs::from_ms(1000), TimeNs::from_ms(10));
        SearchGrid { ta: r, ts: r, ds_step: TimeNs::from_ms(10), ..Self::coarse() }
    }

    /// Ta, Ts in [10 ms, 5 s] with 10 ms steps. Far beyond the default budget.
    pub fn full() -> Self {
        let r = GridRange::new(TimeNs::from_ms(10), TimeNs::from_ms(5000), TimeNs::from_ms(10));
        SearchGrid { ta: r, ts: r, ds_step: TimeNs::from_ms(10), ..Self::coarse() }
    }

    fn validate(&self) -> Result<()> {
        let ok = |r: &GridRange| r.step.0 > 0 && r.min >= r.step;
        if !ok(&self.ta) || !ok(&self.ts) || self.ds_step.0 <= 0 || self.da.0 <= 0 {
            return Err(Error::InvalidParams("grid steps must be positive and min >= step".into()));
        }
        Ok(())
    }

    fn eta(&self, ta: TimeNs, ts: TimeNs, ds: TimeNs, alpha: f64) -> f64 {
        ds.0 as f64 / ts.0 as f64 + alpha * self.da.0 as f64 / ta.0 as f64
    }

    /// Cells with ds <= Ts, ds > da and duty-cycle inside the band.
    fn cells(&self, alpha: f64) -> Vec<(TimeNs, TimeNs, TimeNs)> {
        let mut out = Vec::new();
        for ta in self.ta.values() {
            for ts in self.ts.values() {
                let mut ds = self.ds_step;
                while ds <= ts {
                    let e = self.eta(ta, ts, ds, alpha);
                    if ds > self.da && e > self.eta_band.0 && e < self.eta_band.1 {
                        out.push((ta, ts, ds));
                    }
                    ds += self.ds_step;
                }
            }
        }
        out
    }
}

pub const DEFAULT_BUDGET: usize = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SearchRow {
    pub ta: f64,
    pub ts: f64,
    pub ds: f64,
    pub eta: f64,
    pub candidate_dm: f64,
    pub singleint_dm: f64,
    pub gap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SearchResult {
    pub candidates: usize,
    pub evaluated: usize,
    /// Candidates with no discovery within 4x the SingleInt latency (including never).
    pub unbounded: usize,
    /// Candidates whose duty-cycle SingleInt cannot realize.
    pub no_reference: usize,
    pub min_gap: Option<f64>,
    pub witness: Option<PiParams>,
    pub violations: Vec<SearchRow>,
    pub reported: Vec<SearchRow>,
}

enum Cell {
    Row(SearchRow),
    Unbounded,
    NoReference,
}

fn evaluate(grid: &SearchGrid, hw: &HardwareProfile, (ta, ts, ds): (TimeNs, TimeNs, TimeNs)) -> Cell {
    let eta = grid.eta(ta, ts, ds, hw.alpha);
    let Ok(e) = DutyCycle::new(eta) else { return Cell::NoReference };
    let Ok(reference) = singleint::solve(e, hw, SingleIntMode::RoundedOpt) else { return Cell::NoReference };
    let limit = TimeNs::from_secs_f64(4.0 * reference.dm);
    match periodic_sweep(ts, ds, ta, grid.da, limit) {
        Ok(r) => {
            let candidate_dm = r.worst.as_secs_f64();
            Cell::Row(SearchRow {
                ta: ta.as_secs_f64(),
                ts: ts.as_secs_f64(),
                ds: ds.as_secs_f64(),
                eta,
                candidate_dm,
                singleint_dm: reference.dm,
                gap: candidate_dm - reference.dm,
            })
        }
        Err(_) => Cell::Unbounded,
    }
}

/// Search with [`DEFAULT_BUDGET`].
pub fn grid_search(grid: &SearchGrid, hw: &HardwareProfile) -> Result<SearchResult> {
    grid_search_with_budget(grid, hw, DEFAULT_BUDGET)
}

pub fn grid_search_with_budget(grid: &SearchGrid, hw: &HardwareProfile, budget: usize) -> Result<SearchResult> {
    grid.validate()?;
    let hw = hw.with_da(grid.da.as_secs_f64());
    hw.validate()?;
    let cells = grid.cells(hw.alpha);
    if cells.len() > budget {
        return Err(Error::BudgetExceeded { count: cells.len() as u64, budget: budget as u64 });
    }
    let results: Vec<Cell> = cells.par_iter().map(|&c| evaluate(grid, &hw, c)).collect();

    let mut out = SearchResult {
        candidates: cells.len(),
        evaluated: 0,
        unbounded: 0,
        no_reference: 0,
        min_gap: None,
        witness: None,
        violations: Vec::new(),
        reported: Vec::new(),
    };
    for cell in results {
        match cell {
            Cell::Unbounded => out.unbounded += 1,
            Cell::NoReference => out.no_reference += 1,
            Cell::Row(r) => {
                out.evaluated += 1;
                if out.min_gap.is_none_or(|g| r.gap < g) {
                    out.min_gap = Some(r.gap);
                    out.witness = Some(PiParams::raw(r.ta, r.ts, r.ds, grid.da.as_secs_f64()));
                }
                // exact latency vs float reference: ignore sub-nanosecond noise
                if r.gap < -1e-9 {
                    out.violations.push(r);
                }
                if r.gap < grid.report_below {
                    out.reported.push(r);
                }
            }
        }
    }
    out.reported.sort_by(|a, b| a.gap.total_cmp(&b.gap));
    Ok(out)
}

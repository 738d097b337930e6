use serde::Serialize;

use crate::timebase::{tick_time, TimeNs};

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub enum ClockModel {
    #[default]
    Ideal,
    /// Intervals realized on a sleep-clock tick grid.
    Quantized { f_clk: f64, q_correction: bool, ds_extension_ticks: u32 },
}

impl ClockModel {
    pub fn quantized(f_clk: f64, q_correction: bool) -> Self {
        ClockModel::Quantized { f_clk, q_correction, ds_extension_ticks: if q_correction { 5 } else { 0 } }
    }
}

/// Produces cumulative tick counts for a train of nominal intervals.
///
/// Without correction every interval is the nominal rounded to whole ticks.
/// With correction the running error `Q` between realized and exact time is
/// tracked and the next interval is lengthened or shortened by one tick
/// whenever `|Q|` exceeds half a tick.
#[derive(Debug, Clone)]
pub struct TickSequencer {
    f_clk: f64,
    nominal_ns: f64,
    base: i64,
    correct: bool,
    adj: i64,
    ticks: i64,
    n: i64,
}

impl TickSequencer {
    pub fn new(nominal: TimeNs, f_clk: f64, correct: bool) -> Self {
        let nominal_ns = nominal.0 as f64;
        let base = (nominal_ns * f_clk / 1e9 + 0.5).floor() as i64;
        TickSequencer { f_clk, nominal_ns, base, correct, adj: 0, ticks: 0, n: 0 }
    }

    /// Accumulated error in ns after the intervals emitted so far.
    pub fn q_ns(&self) -> f64 {
        self.ticks as f64 * 1e9 / self.f_clk - self.n as f64 * self.nominal_ns
    }

    /// Advance by one interval; returns the cumulative offset from the origin.
    pub fn next_offset(&mut self) -> TimeNs {
        self.ticks += self.base + self.adj;
        self.n += 1;
        self.adj = 0;
        if self.correct {
            let half = 0.5e9 / self.f_clk;
            let q = self.q_ns();
            if q > half {
                self.adj = -1;
            } else if q < -half {
                self.adj = 1;
            }
        }
        tick_time(self.ticks, self.f_clk)
    }

    pub fn base_ticks(&self) -> i64 {
        self.base
    }
}

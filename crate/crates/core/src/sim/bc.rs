//! Blocking compensation: no transmissions around own scan windows, with one
//! extra beacon placed just before and just after every window.

use super::clock::ClockModel;
use super::schedule::{gen_schedule, turnarounds, DeviceSchedule, NsParams, Phases};
use crate::timebase::{HardwareProfile, PiParams, TimeNs};

/// Counts from one application of the suppression rule.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct BcStats {
    pub suppressed: usize,
    /// Start times of the compensation beacons that were added.
    pub inserted: Vec<TimeNs>,
}

pub fn apply_bc(schedule: &DeviceSchedule, hw: &HardwareProfile) -> DeviceSchedule {
    apply_bc_counted(schedule, hw).0
}

pub fn apply_bc_counted(schedule: &DeviceSchedule, hw: &HardwareProfile) -> (DeviceSchedule, BcStats) {
    let (drt, dtr) = turnarounds(hw);
    let da = schedule.da;
    let windows = &schedule.windows;
    let mut kept = Vec::with_capacity(schedule.beacons.len());
    let mut stats = BcStats::default();

    // windows are sorted and disjoint, so a sweeping index suffices
    let mut wi = 0usize;
    for &t in &schedule.beacons {
        while wi < windows.len() && windows[wi].end() + drt <= t {
            wi += 1;
        }
        let hit = windows[wi.min(windows.len().saturating_sub(1))..]
            .iter()
            .take(2)
            .any(|w| t + da > w.start - dtr && t < w.end() + drt);
        if hit {
            stats.suppressed += 1;
        } else {
            kept.push(t);
        }
    }

    let overlaps_kept = |c: TimeNs, kept: &[TimeNs]| {
        let i = kept.partition_point(|&b| b + da <= c);
        i < kept.len() && kept[i] < c + da
    };
    let mut extra = Vec::with_capacity(2 * windows.len());
    for w in windows {
        for c in [w.start - dtr - da, w.end() + drt] {
            if !overlaps_kept(c, &kept) {
                extra.push(c);
            }
        }
    }
    extra.sort_unstable();
    extra.dedup();
    kept.extend(extra.iter().copied());
    stats.inserted = extra;
    kept.sort_unstable();
    kept.dedup();
    (DeviceSchedule { beacons: kept, ..schedule.clone() }, stats)
}

const ACCOUNTING_WINDOWS: i64 = 1000;

/// Average (regular, compensation) beacons per scan interval of a BC
/// schedule, measured over many scan intervals of an ideal-clock schedule.
pub fn beacons_per_scan_interval(p: &PiParams, hw: &HardwareProfile) -> (f64, f64) {
    let n = NsParams::from_pi(p);
    let span = n.ts * ACCOUNTING_WINDOWS;
    let sched = gen_schedule(&n, ClockModel::Ideal, Phases::default(), span + n.ts);
    let (out, stats) = apply_bc_counted(&sched, hw);
    // only windows [0, span) and beacons in [0, span) are averaged
    let lo = TimeNs::ZERO;
    let in_range = |t: TimeNs| t >= lo && t < span;
    let total = out.beacons.iter().filter(|&&t| in_range(t)).count() as f64;
    let comp = stats.inserted.iter().filter(|&&t| in_range(t)).count() as f64;
    let w = ACCOUNTING_WINDOWS as f64;
    ((total - comp) / w, comp / w)
}

/// Duty-cycle of a BC configuration from the measured beacon rate.
pub fn bc_duty_cycle_exact(p: &PiParams, hw: &HardwareProfile) -> f64 {
    let (regular, comp) = beacons_per_scan_interval(p, hw);
    p.ds / p.ts + hw.alpha * p.da * (regular + comp) / p.ts
}

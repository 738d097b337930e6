use serde::Serialize;

use super::clock::{ClockModel, TickSequencer};
use crate::timebase::{tick_time, HardwareProfile, PiParams, Scheme, TimeNs};

/// PI parameters in nanoseconds with the scheme's structural identities
/// re-imposed after rounding.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct NsParams {
    pub ta: TimeNs,
    pub ts: TimeNs,
    pub ds: TimeNs,
    pub da: TimeNs,
    pub scheme: Scheme,
    pub m: u32,
    pub k_c: u32,
}

impl NsParams {
    pub fn from_pi(p: &PiParams) -> Self {
        let ds = TimeNs::from_secs_f64(p.ds);
        let da = TimeNs::from_secs_f64(p.da);
        let (ta, ts) = match (p.scheme, p.m, p.k_c) {
            (Scheme::SingleInt, m, _) if m > 0 => {
                let ta = ds - da;
                (ta, ta * (m as i64 + 1))
            }
            (Scheme::MultiInt, m, k) if m > 0 && k > 0 => {
                let g = ds - da;
                let m1 = m as i64 + 1;
                (g * m1, g * (k as i64 * m1 - 1))
            }
            _ => (TimeNs::from_secs_f64(p.ta), TimeNs::from_secs_f64(p.ts)),
        };
        NsParams { ta, ts, ds, da, scheme: p.scheme, m: p.m, k_c: p.k_c }
    }

    /// Closed-form worst-case latency evaluated on the integer parameters,
    /// `None` for parameters without scheme metadata.
    pub fn analytic_dm(&self) -> Option<TimeNs> {
        let m = self.m as i64;
        match self.scheme {
            Scheme::SingleInt if m > 0 => Some(self.ta * (m + 1) + self.da),
            Scheme::MultiInt if m > 0 && self.k_c == 1 => Some((self.ds - self.da) * (m * (m + 1)) + self.da),
            Scheme::MultiInt if m > 0 && self.k_c > 1 => Some(self.ts * (m + 1) + self.da),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Window {
    pub start: TimeNs,
    pub len: TimeNs,
}

impl Window {
    pub fn end(&self) -> TimeNs {
        self.start + self.len
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct Phases {
    /// Start of the first scan window at or after the origin, in [0, Ts).
    pub scan: TimeNs,
    /// First beacon, in [0, Ta).
    pub adv: TimeNs,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DeviceSchedule {
    pub beacons: Vec<TimeNs>,
    pub windows: Vec<Window>,
    pub phases: Phases,
    pub clock: ClockModel,
    pub da: TimeNs,
}

impl DeviceSchedule {
    pub fn advertiser(beacons: Vec<TimeNs>, da: TimeNs) -> Self {
        DeviceSchedule { beacons, windows: Vec::new(), phases: Phases::default(), clock: ClockModel::Ideal, da }
    }

    pub fn scanner(windows: Vec<Window>, da: TimeNs) -> Self {
        DeviceSchedule { beacons: Vec::new(), windows, phases: Phases::default(), clock: ClockModel::Ideal, da }
    }

    /// Drop beacons sent before `t0`.
    pub fn beacons_from(mut self, t0: TimeNs) -> Self {
        self.beacons.retain(|&b| b >= t0);
        self
    }
}

/// Schedule without advertising jitter. Windows start one scan interval
/// before `phases.scan` so a window may already be open at the origin.
pub fn gen_schedule(p: &NsParams, clock: ClockModel, phases: Phases, horizon: TimeNs) -> DeviceSchedule {
    gen_schedule_with(p, clock, phases, horizon, &mut || TimeNs::ZERO)
}

/// As [`gen_schedule`], adding `jitter()` to every advertising interval (ideal clock only).
pub fn gen_schedule_with(
    p: &NsParams,
    clock: ClockModel,
    phases: Phases,
    horizon: TimeNs,
    jitter: &mut dyn FnMut() -> TimeNs,
) -> DeviceSchedule {
    let mut beacons = Vec::new();
    let mut windows = Vec::new();
    match clock {
        ClockModel::Ideal => {
            let mut t = phases.adv;
            while t <= horizon {
                beacons.push(t);
                t = t + p.ta + jitter();
            }
            let mut w = phases.scan - p.ts;
            while w <= horizon {
                windows.push(Window { start: w, len: p.ds });
                w += p.ts;
            }
        }
        ClockModel::Quantized { f_clk, q_correction, ds_extension_ticks } => {
            let mut seq = TickSequencer::new(p.ta, f_clk, q_correction);
            let mut t = phases.adv;
            while t <= horizon {
                beacons.push(t);
                t = phases.adv + seq.next_offset();
            }
            let ds_ticks = (p.ds.0 as f64 * f_clk / 1e9 + 0.5).floor() as i64 + ds_extension_ticks as i64;
            let len = tick_time(ds_ticks, f_clk);
            let mut seq = TickSequencer::new(p.ts, f_clk, q_correction);
            let origin = phases.scan - tick_time(seq.base_ticks(), f_clk);
            let mut w = origin;
            while w <= horizon {
                windows.push(Window { start: w, len });
                w = origin + seq.next_offset();
            }
        }
    }
    DeviceSchedule { beacons, windows, phases, clock, da: p.da }
}

/// Turnaround times in ns.
pub(crate) fn turnarounds(hw: &HardwareProfile) -> (TimeNs, TimeNs) {
    (TimeNs::from_secs_f64(hw.drt), TimeNs::from_secs_f64(hw.dtr))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::multiint;
    use crate::singleint::{self, SingleIntMode};
    use crate::timebase::DutyCycle;
    use crate::HardwareProfile;

    #[test]
    fn ideal_beacons() {
        let p = NsParams {
            ta: TimeNs::from_ms(32),
            ts: TimeNs::from_ms(1000),
            ds: TimeNs::from_ms(10),
            da: TimeNs::from_us(32),
            scheme: Scheme::SingleInt,
            m: 0,
            k_c: 0,
        };
        let s = gen_schedule(&p, ClockModel::Ideal, Phases::default(), TimeNs::from_ms(100));
        assert_eq!(s.beacons, vec![TimeNs(0), TimeNs::from_ms(32), TimeNs::from_ms(64), TimeNs::from_ms(96)]);
        assert_eq!(s.windows[0].start, TimeNs::from_ms(-1000));
        assert_eq!(s.windows[1].start, TimeNs(0));
    }

    #[test]
    fn structural_identities_survive_rounding() {
        let hw = HardwareProfile::default();
        let s = singleint::solve(DutyCycle::new(0.0055).unwrap(), &hw, SingleIntMode::RoundedOpt).unwrap();
        let n = NsParams::from_pi(&s.params);
        assert_eq!(n.ta, n.ds - n.da);
        assert_eq!(n.ts, n.ta * (s.m as i64 + 1));
        assert!((n.analytic_dm().unwrap().as_secs_f64() - s.dm).abs() < 1e-6);
        let s = multiint::solve(DutyCycle::new(0.0055).unwrap(), 2, &hw).unwrap();
        let n = NsParams::from_pi(&s.params);
        assert_eq!(n.ta * s.k_c as i64 - n.ts, n.ds - n.da);
        assert!((n.analytic_dm().unwrap().as_secs_f64() - s.dm).abs() < 1e-6);
    }

    #[test]
    fn quantized_window_length_includes_extension() {
        let p = NsParams {
            ta: TimeNs::from_ms(32),
            ts: TimeNs::from_ms(1000),
            ds: TimeNs::from_ms(10),
            da: TimeNs::from_us(32),
            scheme: Scheme::SingleInt,
            m: 0,
            k_c: 0,
        };
        let c = ClockModel::quantized(32768.0, true);
        let s = gen_schedule(&p, c, Phases::default(), TimeNs::from_ms(3000));
        let ticks = (10e6f64 * 32768.0 / 1e9 + 0.5).floor() as i64 + 5;
        assert_eq!(s.windows[0].len, tick_time(ticks, 32768.0));
        for w in s.windows.windows(2) {
            assert!((w[1].start - w[0].start - TimeNs::from_ms(1000)).0.abs() < 30_518 * 2);
        }
    }
}

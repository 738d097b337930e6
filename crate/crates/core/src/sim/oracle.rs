//! Exact worst case over all initial offsets by breakpoint enumeration.
//!
//! The packet-to-packet latency as a function of the offset between the
//! first in-range beacon and the preceding scan window is piecewise
//! constant. It can only change where a beacon edge meets an effective
//! window edge, so evaluating at every such point and its integer
//! neighbours yields the exact maximum (and, by integrating the runs in
//! between, the exact mean).

use serde::Serialize;

use super::clock::ClockModel;
use super::schedule::{gen_schedule, NsParams, Phases, Window};
use crate::error::{Error, Result};
use crate::timebase::{PiParams, TimeNs};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OracleResult {
    /// Worst latency from coming into range (worst packet-to-packet latency plus the largest beacon gap).
    pub worst: TimeNs,
    pub worst_dm_star: TimeNs,
    pub argmax_offset: TimeNs,
    /// Mean packet-to-packet latency over offsets uniform in [0, period).
    pub mean_dm_star: f64,
    /// Mean latency from coming into range, with a uniform wait for the first beacon.
    pub mean: f64,
    pub breakpoints: usize,
}

/// Worst case for one-way discovery of an ideal-clock advertiser `tx` by an
/// ideal-clock scanner `rx`. `limit` defaults to 4x the analytic latency of
/// `tx`; it is required for parameters without scheme metadata.
pub fn offset_sweep_oracle(rx: &PiParams, tx: &PiParams, limit: Option<TimeNs>) -> Result<OracleResult> {
    let r = NsParams::from_pi(rx);
    let t = NsParams::from_pi(tx);
    let limit = match limit {
        Some(l) => l,
        None => {
            t.analytic_dm()
                .ok_or_else(|| Error::InvalidParams("no analytic latency; pass an explicit limit".into()))?
                * 4
        }
    };
    periodic_sweep(r.ts, r.ds, t.ta, t.da, limit)
}

/// Worst case over initial offsets when both devices run on `clock`.
/// Scanner windows and advertiser beacons both start at phase 0; the advertiser
/// is then shifted by every offset in `[0, Ts)`.
pub fn clocked_sweep(rx: &PiParams, tx: &PiParams, clock: ClockModel, limit: Option<TimeNs>) -> Result<OracleResult> {
    let r = NsParams::from_pi(rx);
    let t = NsParams::from_pi(tx);
    let limit = match limit {
        Some(l) => l,
        None => t.analytic_dm().ok_or_else(|| Error::InvalidParams("no analytic latency; pass an explicit limit".into()))? * 4,
    };
    let horizon = limit + r.ts * 3;
    let mut windows = gen_schedule(&r, clock, Phases::default(), horizon).windows;
    windows.retain(|w| w.start >= TimeNs::ZERO);
    let beacons = gen_schedule(&t, clock, Phases::default(), horizon).beacons;
    sweep_schedules(&windows, &beacons, t.da, r.ts, limit)
}

/// Periodic windows `[j*ts, j*ts + ds)` against beacons at `phi + n*ta`.
pub fn periodic_sweep(ts: TimeNs, ds: TimeNs, ta: TimeNs, da: TimeNs, limit: TimeNs) -> Result<OracleResult> {
    if ta.0 <= 0 || ts.0 <= 0 || ds < da {
        return Err(Error::InvalidParams("need Ta, Ts > 0 and ds >= da".into()));
    }
    let eff = (ds - da).0;
    let (ts_, ta_) = (ts.0, ta.0);
    let n_max = limit.0 / ta_ + 1;
    let mut bps = Vec::with_capacity(2 * n_max as usize + 2);
    bps.push(0);
    bps.push(ts_ - 1);
    for n in 0..=n_max {
        let off = (n as i128 * ta_ as i128 % ts_ as i128) as i64;
        bps.push((ts_ - off) % ts_);
        bps.push((eff - off).rem_euclid(ts_));
    }
    let eval = |phi: i64| -> Option<i64> {
        let mut pos = phi % ts_;
        let mut lat = 0i64;
        loop {
            if pos <= eff {
                return Some(lat);
            }
            lat += ta_;
            if lat > limit.0 {
                return None;
            }
            pos += ta_;
            if pos >= ts_ {
                pos %= ts_;
            }
        }
    };
    sweep_core(bps, ts_, da, ta, &eval, limit)
}

/// Generic sweep over explicit schedules: `windows` of the scanner (time
/// origin at a window start) and advertiser offsets `beacons` relative to its
/// first beacon (`beacons[0] == 0`). Offsets range over `[0, period)`.
pub fn sweep_schedules(
    windows: &[Window],
    beacons: &[TimeNs],
    da: TimeNs,
    period: TimeNs,
    limit: TimeNs,
) -> Result<OracleResult> {
    if beacons.first() != Some(&TimeNs::ZERO) {
        return Err(Error::InvalidParams("beacon offsets must start at 0".into()));
    }
    let p = period.0;
    let mut bps = vec![0, p - 1];
    for w in windows {
        let a = w.start.0;
        let b = (w.end() - da).0;
        // beacons whose alignment with this window falls in [0, p)
        let lo = beacons.partition_point(|x| x.0 <= a - p);
        let hi = beacons.partition_point(|x| x.0 <= b);
        for x in &beacons[lo..hi] {
            for v in [a - x.0, b - x.0] {
                if (0..p).contains(&v) {
                    bps.push(v);
                }
            }
        }
    }
    let max_gap = beacons.windows(2).map(|w| (w[1] - w[0]).0).max().unwrap_or(0);
    let eval = |phi: i64| -> Option<i64> {
        for x in beacons {
            if x.0 > limit.0 {
                return None;
            }
            let t = phi + x.0;
            let i = windows.partition_point(|w| w.start.0 <= t);
            if i > 0 {
                let w = &windows[i - 1];
                if t <= (w.end() - da).0 {
                    return Some(x.0);
                }
            }
        }
        None
    };
    sweep_core(bps, p, da, TimeNs(max_gap), &eval, limit)
}

fn sweep_core(
    mut bps: Vec<i64>,
    period: i64,
    da: TimeNs,
    gap: TimeNs,
    eval: &dyn Fn(i64) -> Option<i64>,
    limit: TimeNs,
) -> Result<OracleResult> {
    bps.retain(|&v| (0..period).contains(&v));
    bps.sort_unstable();
    bps.dedup();
    let f = |phi: i64| -> Result<i64> {
        eval(phi).ok_or(Error::Unbounded { offset: TimeNs(phi), limit })
    };
    let mut worst = -1i64;
    let mut arg = 0i64;
    let mut acc = 0f64;
    for (i, &p) in bps.iter().enumerate() {
        let next = bps.get(i + 1).copied().unwrap_or(period);
        let mut probe = |phi: i64| -> Result<i64> {
            let v = f(phi)?;
            if v > worst {
                worst = v;
                arg = phi;
            }
            Ok(v)
        };
        let at = probe(p)?;
        acc += at as f64;
        if p > 0 {
            probe(p - 1)?;
        }
        if p + 1 < next {
            let run = probe(p + 1)?;
            acc += run as f64 * (next - p - 1) as f64;
        }
    }
    let mean_dm_star = acc / period as f64 + da.0 as f64;
    let worst_dm_star = TimeNs(worst) + da;
    Ok(OracleResult {
        worst: worst_dm_star + gap,
        worst_dm_star,
        argmax_offset: TimeNs(arg),
        mean_dm_star: mean_dm_star * 1e-9,
        mean: (mean_dm_star + gap.0 as f64 / 2.0) * 1e-9,
        breakpoints: bps.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::singleint::{self, SingleIntMode};
    use crate::timebase::{DutyCycle, HardwareProfile};
    use crate::{multiint, Scheme};

    fn ms(x: i64) -> TimeNs {
        TimeNs::from_ms(x)
    }

    /// Direct evaluation on every integer offset for tiny integer parameters.
    fn brute(ts: i64, ds: i64, ta: i64, da: i64) -> (i64, f64) {
        let mut worst = 0;
        let mut sum = 0f64;
        for phi in 0..ts {
            let mut n = 0;
            loop {
                let pos = (phi + n * ta) % ts;
                if pos <= ds - da {
                    break;
                }
                n += 1;
                assert!(n < 100_000);
            }
            worst = worst.max(n * ta + da);
            sum += (n * ta + da) as f64;
        }
        (worst, sum / ts as f64)
    }

    #[test]
    fn matches_brute_force_on_small_grids() {
        for &(ts, ds, ta, da) in &[(100, 12, 11, 2), (97, 10, 33, 3), (60, 7, 13, 1), (50, 50, 7, 2), (120, 9, 41, 4)] {
            let r = periodic_sweep(TimeNs(ts), TimeNs(ds), TimeNs(ta), TimeNs(da), TimeNs(100_000)).unwrap();
            let (w, m) = brute(ts, ds, ta, da);
            assert_eq!(r.worst_dm_star.0, w, "{ts} {ds} {ta} {da}");
            assert!((r.mean_dm_star * 1e9 - m).abs() < 1e-6);
            assert_eq!(r.worst.0, w + ta);
        }
    }

    #[test]
    fn continuous_scan() {
        let p = PiParams::raw(0.01, 0.05, 0.05, 32e-6);
        let r = offset_sweep_oracle(&p, &p, Some(ms(1000))).unwrap();
        // back-to-back windows are still distinct: a beacon straddling the seam is lost
        assert_eq!(r.worst_dm_star, ms(10) + TimeNs::from_us(32));
        assert_eq!(r.worst, ms(20) + TimeNs::from_us(32));
    }

    #[test]
    fn gamma_zero_is_unbounded() {
        let p = PiParams::raw(0.2, 0.1, 0.01, 32e-6);
        assert!(matches!(offset_sweep_oracle(&p, &p, Some(ms(10_000))), Err(Error::Unbounded { .. })));
    }

    #[test]
    fn singleint_table_row() {
        let hw = HardwareProfile::default();
        let s = singleint::solve(DutyCycle::new(0.002).unwrap(), &hw, SingleIntMode::RoundedOpt).unwrap();
        let r = offset_sweep_oracle(&s.params, &s.params, None).unwrap();
        let dm = NsParams::from_pi(&s.params).analytic_dm().unwrap();
        assert!(r.worst <= dm);
        assert!(r.worst.0 as f64 >= 0.99 * dm.0 as f64);
    }

    #[test]
    fn multiint_row() {
        let hw = HardwareProfile::default();
        let s = multiint::solve(DutyCycle::new(0.0155).unwrap(), 2, &hw).unwrap();
        assert_eq!(s.params.scheme, Scheme::MultiInt);
        let r = offset_sweep_oracle(&s.params, &s.params, None).unwrap();
        let dm = NsParams::from_pi(&s.params).analytic_dm().unwrap();
        assert!(r.worst <= dm, "{} > {}", r.worst, dm);
        assert!(r.worst.0 as f64 >= 0.99 * dm.0 as f64);
    }

    #[test]
    fn ideal_clocked_sweep_matches_periodic() {
        let hw = HardwareProfile::default();
        let s = singleint::solve(DutyCycle::new(0.0155).unwrap(), &hw, SingleIntMode::RoundedOpt).unwrap();
        let a = clocked_sweep(&s.params, &s.params, ClockModel::Ideal, None).unwrap();
        let b = offset_sweep_oracle(&s.params, &s.params, None).unwrap();
        assert_eq!(a.worst, b.worst);
    }

    #[test]
    fn generic_matches_periodic() {
        let (ts, ds, ta, da) = (TimeNs(1000), TimeNs(80), TimeNs(73), TimeNs(5));
        let windows: Vec<Window> = (0..40).map(|j| Window { start: ts * j, len: ds }).collect();
        let beacons: Vec<TimeNs> = (0..500).map(|n| ta * n).collect();
        let a = sweep_schedules(&windows, &beacons, da, ts, TimeNs(30_000)).unwrap();
        let b = periodic_sweep(ts, ds, ta, da, TimeNs(30_000)).unwrap();
        assert_eq!(a.worst, b.worst);
        assert!((a.mean_dm_star - b.mean_dm_star).abs() < 1e-15);
    }
}

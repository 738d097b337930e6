use super::schedule::{turnarounds, DeviceSchedule};
use crate::timebase::{HardwareProfile, TimeNs};

/// Receiver-side radio constraints applied during detection.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RadioTiming {
    pub drt: TimeNs,
    pub dtr: TimeNs,
    /// Whether own transmissions (plus turnarounds) blank reception.
    pub blackout: bool,
    /// Whether overlapping foreign beacons destroy each other.
    pub collisions: bool,
}

impl RadioTiming {
    pub fn from_hw(hw: &HardwareProfile) -> Self {
        let (drt, dtr) = turnarounds(hw);
        RadioTiming { drt, dtr, blackout: true, collisions: true }
    }

    pub fn ideal() -> Self {
        RadioTiming { drt: TimeNs::ZERO, dtr: TimeNs::ZERO, blackout: false, collisions: false }
    }
}

/// Does any beacon in `sorted` (each lasting `da`) overlap `[from, to)`?
fn any_tx_in(sorted: &[TimeNs], da: TimeNs, from: TimeNs, to: TimeNs) -> bool {
    let i = sorted.partition_point(|&b| b + da <= from);
    i < sorted.len() && sorted[i] < to
}

/// Start time of the first beacon of `tx` received by `rx`.
///
/// A beacon `[t, t+da)` is received iff it lies entirely inside a scan
/// window of `rx`, does not overlap the blackout `[b-drt, b+da+dtr)` around
/// any own transmission `b` of `rx`, and no beacon of any device in
/// `others` overlaps it.
pub fn first_discovery(
    rx: &DeviceSchedule,
    tx: &DeviceSchedule,
    others: &[&DeviceSchedule],
    radio: RadioTiming,
) -> Option<TimeNs> {
    let da = tx.da;
    for w in &rx.windows {
        let last_start = w.end() - da;
        let mut i = tx.beacons.partition_point(|&b| b < w.start);
        while i < tx.beacons.len() && tx.beacons[i] <= last_start {
            let t = tx.beacons[i];
            i += 1;
            if radio.blackout && any_tx_in(&rx.beacons, rx.da, t - radio.dtr, t + da + radio.drt) {
                continue;
            }
            if radio.collisions && others.iter().any(|o| any_tx_in(&o.beacons, o.da, t, t + da)) {
                continue;
            }
            return Some(t);
        }
    }
    None
}

/// First reception time for every ordered pair `(rx, tx)`, `rx != tx`.
/// Entry `[rx][tx]` is `None` on the diagonal or when nothing is received.
pub fn detect_discovery(devices: &[DeviceSchedule], radio: RadioTiming) -> Vec<Vec<Option<TimeNs>>> {
    let n = devices.len();
    let mut out = vec![vec![None; n]; n];
    for rx in 0..n {
        for tx in 0..n {
            if rx == tx {
                continue;
            }
            let others: Vec<&DeviceSchedule> =
                (0..n).filter(|&j| j != rx && j != tx).map(|j| &devices[j]).collect();
            out[rx][tx] = first_discovery(&devices[rx], &devices[tx], &others, radio);
        }
    }
    out
}

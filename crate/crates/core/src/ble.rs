//! SingleInt adapted to BLE advertising: random advertising delay, three-channel
//! bursts and response windows are folded into the duty-cycle before solving.

use serde::Serialize;

use crate::error::{Constraint, Error, Result};
use crate::singleint::{self, m_opt, SingleIntMode};
use crate::timebase::{DutyCycle, HardwareProfile, PiParams, Scheme};

/// Advertising air time of a 30-byte packet at 1 Mbit/s (s).
pub const BLE_DA: f64 = 240e-6;
/// BLE timing granularity for intervals and windows (s).
pub const BLE_STEP: f64 = 625e-6;
const INTER_CHANNEL_GAP: f64 = 150e-6;
const PHY_FRAMING: f64 = 80e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BleOverheads {
    pub random_delay_max: f64,
    /// Span of the three-channel burst beyond the first beacon.
    pub d_e: f64,
    pub o_a: f64,
    pub o_a2: f64,
    /// Scan-window extension, `random_delay_max + d_e`.
    pub o_s: f64,
    pub payload_bytes: u32,
    pub bitrate: f64,
    /// Charge the mean random delay to Ta in the duty-cycle.
    pub mean_delay_in_ta: bool,
}

impl Default for BleOverheads {
    fn default() -> Self {
        BleOverheads {
            random_delay_max: 10e-3,
            d_e: 1e-3,
            o_a: 619e-6,
            o_a2: 143e-6,
            o_s: 11e-3,
            payload_bytes: 30,
            bitrate: 1e6,
            mean_delay_in_ta: false,
        }
    }
}

impl BleOverheads {
    pub fn zero() -> Self {
        BleOverheads { random_delay_max: 0.0, d_e: 0.0, o_a: 0.0, o_a2: 0.0, o_s: 0.0, ..Default::default() }
    }

    /// Defaults with `d_e` (and hence `o_s`) derived from the packet size.
    pub fn from_packet(payload_bytes: u32, bitrate: f64) -> Self {
        let air = payload_bytes as f64 * 8.0 / bitrate + PHY_FRAMING;
        let d_e = 3.0 * air + 2.0 * INTER_CHANNEL_GAP;
        let base = Self::default();
        BleOverheads { d_e, o_s: base.random_delay_max + d_e, payload_bytes, bitrate, ..base }
    }

    pub fn validate(&self) -> Result<()> {
        let fields = [self.random_delay_max, self.d_e, self.o_a, self.o_a2, self.o_s];
        if fields.iter().any(|v| v.is_nan() || *v < 0.0) || self.bitrate.is_nan() || self.bitrate <= 0.0 {
            return Err(Error::InvalidParams("BLE overheads must be non-negative".into()));
        }
        if (self.o_s - (self.random_delay_max + self.d_e)).abs() > 1e-12 {
            return Err(Error::InvalidParams("o_s must equal random_delay_max + d_e".into()));
        }
        Ok(())
    }

    fn per_beacon(&self, mode: BleMode) -> f64 {
        match mode {
            BleMode::NonConnectableUnidir => self.o_a,
            BleMode::ConnectableBidir => self.o_a + self.o_a2,
        }
    }

    fn ta_charge(&self) -> f64 {
        if self.mean_delay_in_ta { self.random_delay_max / 2.0 } else { 0.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum BleMode {
    NonConnectableUnidir,
    ConnectableBidir,
}

/// Joint duty-cycle of an advertiser/scanner pair; `params.ds` is the core window without `o_s`.
pub fn ble_duty_cycle(params: &PiParams, ov: &BleOverheads, mode: BleMode, alpha: f64) -> f64 {
    (params.ds + ov.o_s) / params.ts + alpha * (params.da + ov.per_beacon(mode)) / (params.ta + ov.ta_charge())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BleSolution {
    /// Ta, Ts and the configured (extended) scan window.
    pub params: PiParams,
    pub ds_core: f64,
    pub m: u32,
    pub mode: BleMode,
    pub dm: f64,
    pub eta_joint: f64,
    pub eta_advertiser: f64,
    pub eta_scanner: f64,
}

const ROOT_ITER: u32 = 200;

/// Ta solving `ble_duty_cycle = eta` for order M with `ds = Ta + da`, `Ts = (M+1) Ta`.
fn ta_for_m(eta: f64, m: u32, ov: &BleOverheads, mode: BleMode, hw: &HardwareProfile) -> Option<f64> {
    let m1 = m as f64 + 1.0;
    let duty = |ta: f64| ble_duty_cycle(&PiParams::raw(ta, m1 * ta, ta + hw.da, hw.da), ov, mode, hw.alpha);
    // duty decreases in Ta towards 1/(M+1)
    if eta * m1 <= 1.0 {
        return None;
    }
    let (mut lo, mut hi) = (1e-9, 1.0);
    while duty(hi) > eta {
        hi *= 2.0;
        if hi > 1e6 {
            return None;
        }
    }
    for _ in 0..ROOT_ITER {
        let mid = 0.5 * (lo + hi);
        if duty(mid) > eta { lo = mid } else { hi = mid }
        if hi - lo <= 1e-15 * hi {
            break;
        }
    }
    Some(0.5 * (lo + hi))
}

/// Closed form of [`ta_for_m`] without the mean-delay charge.
pub fn ta_closed_form(eta: f64, m: u32, ov: &BleOverheads, mode: BleMode, hw: &HardwareProfile) -> f64 {
    let m1 = m as f64 + 1.0;
    let c = hw.alpha * (hw.da + ov.per_beacon(mode));
    (hw.da + ov.o_s + m1 * c) / (eta * m1 - 1.0)
}

pub fn ble_solve(eta_joint: DutyCycle, ov: &BleOverheads, mode: BleMode, hw: &HardwareProfile) -> Result<BleSolution> {
    hw.validate()?;
    ov.validate()?;
    let eta = eta_joint.get();
    let lo = (1.0 / eta - 1.0).floor() as u32 + 1;
    let hi = (4.0 * (m_opt(eta) + 1.0)).ceil() as u32 + 16;
    let mut best: Option<BleSolution> = None;
    for m in lo.max(1)..=hi {
        let Some(ta) = ta_for_m(eta, m, ov, mode, hw) else { continue };
        let ds_core = ta + hw.da;
        if ds_core < hw.ds_min {
            continue;
        }
        let m1 = m as f64 + 1.0;
        let ts = m1 * ta;
        let dm = m1 * ta + hw.da + ov.random_delay_max;
        if best.as_ref().is_none_or(|b| dm < b.dm) {
            let eta_advertiser = hw.alpha * (hw.da + ov.per_beacon(mode)) / (ta + ov.ta_charge());
            let params = PiParams {
                ta,
                ts,
                ds: ds_core + ov.o_s,
                da: hw.da,
                scheme: Scheme::SingleInt,
                m,
                k_c: 0,
                bc_enabled: false,
            };
            best = Some(BleSolution {
                params,
                ds_core,
                m,
                mode,
                dm,
                eta_joint: eta,
                eta_advertiser,
                eta_scanner: eta - eta_advertiser,
            });
        }
    }
    best.ok_or_else(|| {
        Error::infeasible(
            Constraint::BleScanWindow,
            format!("eta_joint={eta}: no M in {lo}..={hi} gives a scan window of at least {} s", hw.ds_min),
        )
    })
}

/// Hardware profile for BLE: 240 us advertising packets.
pub fn ble_hardware(base: &HardwareProfile) -> HardwareProfile {
    base.with_da(BLE_DA)
}

/// Worst-case latency of the overhead-free reference: SingleInt at `eta_joint`
/// for one-way advertising, and at `eta_joint / 2` per device for the symmetric pair.
pub fn ideal_reference_dm(eta_joint: f64, mode: BleMode, hw: &HardwareProfile) -> Result<f64> {
    let e = match mode {
        BleMode::NonConnectableUnidir => eta_joint,
        BleMode::ConnectableBidir => eta_joint / 2.0,
    };
    Ok(singleint::solve(DutyCycle::new(e)?, hw, SingleIntMode::RoundedOpt)?.dm)
}

/// Default evaluation range of joint duty-cycles.
pub const DEFAULT_RANGE: (f64, f64) = (0.0215, 0.10);

pub fn default_grid(n: usize) -> Vec<f64> {
    let (lo, hi) = DEFAULT_RANGE;
    if n <= 1 {
        return vec![lo];
    }
    (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
}

/// Mean over the grid of BLE worst-case latency divided by the ideal reference.
pub fn ble_vs_ideal_ratio(eta_grid: &[f64], ov: &BleOverheads, mode: BleMode, hw: &HardwareProfile) -> Result<f64> {
    if eta_grid.is_empty() {
        return Err(Error::InvalidParams("empty duty-cycle grid".into()));
    }
    let mut sum = 0.0;
    for &e in eta_grid {
        let s = ble_solve(DutyCycle::new(e)?, ov, mode, hw)?;
        sum += s.dm / ideal_reference_dm(e, mode, hw)?;
    }
    Ok(sum / eta_grid.len() as f64)
}

/// Configuration as handed to a BLE stack.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[allow(non_snake_case)]
pub struct BleConfig {
    pub advInterval_ms: f64,
    pub scanInterval_ms: f64,
    pub scanWindow_ms: f64,
    pub mode: BleMode,
    pub predicted_dm_ms: f64,
    pub eta_joint: f64,
    pub rounded: bool,
}

/// Stack configuration; with `round`, Ta and Ts go down and ds goes up to the 0.625 ms grid.
pub fn ble_config(s: &BleSolution, round: bool) -> BleConfig {
    let step = |x: f64, up: bool| {
        let n = x / BLE_STEP;
        let n = if up { (n - 1e-9).ceil() } else { (n + 1e-9).floor() };
        n * BLE_STEP
    };
    let (ta, ts, ds) = if round {
        (step(s.params.ta, false), step(s.params.ts, false), step(s.params.ds, true))
    } else {
        (s.params.ta, s.params.ts, s.params.ds)
    };
    BleConfig {
        advInterval_ms: ta * 1e3,
        scanInterval_ms: ts * 1e3,
        scanWindow_ms: ds * 1e3,
        mode: s.mode,
        predicted_dm_ms: s.dm * 1e3,
        eta_joint: s.eta_joint,
        rounded: round,
    }
}

/// Range checks against common stack limits. Returns one message per violation.
pub fn compliance_lint(c: &BleConfig) -> Vec<String> {
    let mut out = Vec::new();
    let mut check = |name: &str, v: f64, lo: f64, hi: f64| {
        if !(lo - 1e-9..=hi + 1e-9).contains(&v) {
            out.push(format!("{name} = {v:.3} ms outside [{lo}, {hi}] ms"));
        }
    };
    check("advInterval", c.advInterval_ms, 20.0, 10_240.0);
    check("scanInterval", c.scanInterval_ms, 2.5, 10_240.0);
    check("scanWindow", c.scanWindow_ms, 2.5, 10_240.0);
    out
}

/// Parameters a MultiInt variant would need; not a solver.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MultiIntBleReport {
    pub n: u32,
    pub random_delay_cap: f64,
    pub ds_extension: f64,
    pub warning: &'static str,
}

pub fn multiint_ble_report(n: u32, ov: &BleOverheads) -> Result<MultiIntBleReport> {
    if n == 0 {
        return Err(Error::InvalidParams("n must be >= 1".into()));
    }
    let cap = ov.random_delay_max / n as f64;
    Ok(MultiIntBleReport {
        n,
        random_delay_cap: cap,
        ds_extension: cap + ov.d_e,
        warning: "random advertising delay below the standard's range: not standard compliant",
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn hw() -> HardwareProfile {
        ble_hardware(&HardwareProfile::default())
    }

    #[test]
    fn duty_examples() {
        let p = PiParams::raw(0.050, 2.0, 0.060, 240e-6);
        let ov = BleOverheads::default();
        assert!((ble_duty_cycle(&p, &ov, BleMode::NonConnectableUnidir, 1.0) - 0.05268).abs() < 1e-5);
        assert!((ble_duty_cycle(&p, &ov, BleMode::ConnectableBidir, 1.0) - 0.05554).abs() < 1e-5);
        assert_relative_eq!(ble_duty_cycle(&p, &BleOverheads::zero(), BleMode::ConnectableBidir, 1.0), p.plain_duty(1.0));
    }

    #[test]
    fn packet_derived_burst() {
        let ov = BleOverheads::from_packet(30, 1e6);
        assert_relative_eq!(ov.d_e, 3.0 * 320e-6 + 300e-6, max_relative = 1e-12);
        ov.validate().unwrap();
    }

    #[test]
    fn root_finder_matches_closed_form() {
        let ov = BleOverheads::default();
        for mode in [BleMode::NonConnectableUnidir, BleMode::ConnectableBidir] {
            for &(e, m) in &[(0.05, 40), (0.0215, 100), (0.1, 24)] {
                let a = ta_for_m(e, m, &ov, mode, &hw()).unwrap();
                assert_relative_eq!(a, ta_closed_form(e, m, &ov, mode, &hw()), max_relative = 1e-10);
            }
        }
    }

    #[test]
    fn solution_hits_duty_and_stays_close_to_ideal_pi() {
        let ov = BleOverheads::default();
        for &e in &default_grid(12) {
            for mode in [BleMode::NonConnectableUnidir, BleMode::ConnectableBidir] {
                let s = ble_solve(DutyCycle::new(e).unwrap(), &ov, mode, &hw()).unwrap();
                let core = PiParams { ds: s.ds_core, ..s.params };
                assert!((ble_duty_cycle(&core, &ov, mode, 1.0) - e).abs() < 1e-6);
                let ideal = (s.m as f64 + 1.0) * s.params.ta + s.params.da;
                assert!(s.dm - ideal <= ov.random_delay_max + 1e-12);
                assert_relative_eq!(s.eta_advertiser + s.eta_scanner, e, max_relative = 1e-12);
            }
        }
    }

    #[test]
    fn zero_overheads_reduce_to_singleint() {
        let h = hw().with_ds_min(3e-4);
        for &e in &[0.03, 0.08] {
            let s = ble_solve(DutyCycle::new(e).unwrap(), &BleOverheads::zero(), BleMode::NonConnectableUnidir, &h).unwrap();
            let r = singleint::solve(DutyCycle::new(e).unwrap(), &h, SingleIntMode::RoundedOpt).unwrap();
            // integer argmin over M; rounding the real optimum may land one order off
            assert!(s.m.abs_diff(r.m) <= 1);
            assert!(s.dm <= r.dm * (1.0 + 1e-12) && s.dm >= r.dm * (1.0 - 1e-3));
            let same = singleint::solution_for_m(e, s.m, &h);
            assert_relative_eq!(s.params.ta, same.params.ta, max_relative = 1e-9);
        }
        let g = default_grid(10);
        let ratio = ble_vs_ideal_ratio(&g, &BleOverheads::zero(), BleMode::NonConnectableUnidir, &h).unwrap();
        assert!(ratio <= 1.0 + 1e-12 && ratio > 1.0 - 1e-3, "{ratio}");
    }

    #[test]
    fn dm_decreases_with_eta() {
        let ov = BleOverheads::default();
        let dms: Vec<f64> = default_grid(50)
            .iter()
            .map(|&e| ble_solve(DutyCycle::new(e).unwrap(), &ov, BleMode::ConnectableBidir, &hw()).unwrap().dm)
            .collect();
        assert!(dms.windows(2).all(|w| w[1] < w[0]));
    }

    #[test]
    fn rounding_directions_and_lint() {
        let s = ble_solve(DutyCycle::new(0.05).unwrap(), &BleOverheads::default(), BleMode::NonConnectableUnidir, &hw()).unwrap();
        let c = ble_config(&s, true);
        assert!(c.advInterval_ms <= s.params.ta * 1e3 && c.scanInterval_ms <= s.params.ts * 1e3);
        assert!(c.scanWindow_ms >= s.params.ds * 1e3);
        for v in [c.advInterval_ms, c.scanInterval_ms, c.scanWindow_ms] {
            let n = v / 0.625;
            assert!((n - n.round()).abs() < 1e-6);
        }
        assert!(compliance_lint(&c).is_empty());
        let bad = BleConfig { advInterval_ms: 10.0, ..c };
        assert_eq!(compliance_lint(&bad).len(), 1);
    }

    #[test]
    fn infeasible_when_window_too_small() {
        let h = hw().with_ds_min(5.0);
        let r = ble_solve(DutyCycle::new(0.05).unwrap(), &BleOverheads::default(), BleMode::NonConnectableUnidir, &h);
        assert!(matches!(r, Err(Error::Infeasible { constraint: Constraint::BleScanWindow, .. })));
    }

    #[test]
    fn multiint_report_warns() {
        let r = multiint_ble_report(4, &BleOverheads::default()).unwrap();
        assert_relative_eq!(r.random_delay_cap, 2.5e-3);
        assert_relative_eq!(r.ds_extension, 3.5e-3);
        assert!(r.warning.contains("not standard compliant"));
    }
}

//! Time representation, hardware constants and duty-cycle accounting.

use std::fmt;
use std::ops::{Add, AddAssign, Div, Mul, Neg, Sub, SubAssign};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Signed nanosecond count. All simulator arithmetic is closed over this type.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TimeNs(pub i64);

impl TimeNs {
    pub const ZERO: TimeNs = TimeNs(0);
    pub const MAX: TimeNs = TimeNs(i64::MAX);

    pub const fn from_ns(ns: i64) -> Self {
        TimeNs(ns)
    }
    pub const fn from_us(us: i64) -> Self {
        TimeNs(us * 1_000)
    }
    pub const fn from_ms(ms: i64) -> Self {
        TimeNs(ms * 1_000_000)
    }
    /// Nearest nanosecond to `s` seconds.
    pub fn from_secs_f64(s: f64) -> Self {
        TimeNs((s * 1e9).round() as i64)
    }
    pub fn as_secs_f64(self) -> f64 {
        self.0 as f64 * 1e-9
    }
    pub const fn ns(self) -> i64 {
        self.0
    }
}

impl Add for TimeNs {
    type Output = TimeNs;
    fn add(self, o: TimeNs) -> TimeNs {
        TimeNs(self.0 + o.0)
    }
}
impl Sub for TimeNs {
    type Output = TimeNs;
    fn sub(self, o: TimeNs) -> TimeNs {
        TimeNs(self.0 - o.0)
    }
}
impl AddAssign for TimeNs {
    fn add_assign(&mut self, o: TimeNs) {
        self.0 += o.0;
    }
}
impl SubAssign for TimeNs {
    fn sub_assign(&mut self, o: TimeNs) {
        self.0 -= o.0;
    }
}
impl Mul<i64> for TimeNs {
    type Output = TimeNs;
    fn mul(self, k: i64) -> TimeNs {
        TimeNs(self.0 * k)
    }
}
impl Div<i64> for TimeNs {
    type Output = TimeNs;
    fn div(self, k: i64) -> TimeNs {
        TimeNs(self.0 / k)
    }
}
impl Neg for TimeNs {
    type Output = TimeNs;
    fn neg(self) -> TimeNs {
        TimeNs(-self.0)
    }
}

impl fmt::Display for TimeNs {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:.9} s", self.as_secs_f64())
    }
}

/// Fraction of time the radio is active, strictly inside (0, 1).
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct DutyCycle(f64);

impl DutyCycle {
    pub fn new(eta: f64) -> Result<Self> {
        if eta.is_finite() && eta > 0.0 && eta < 1.0 {
            Ok(DutyCycle(eta))
        } else {
            Err(Error::InvalidParams(format!("duty-cycle {eta} not in (0, 1)")))
        }
    }
    pub fn get(self) -> f64 {
        self.0
    }
}

impl TryFrom<f64> for DutyCycle {
    type Error = Error;
    fn try_from(v: f64) -> Result<Self> {
        DutyCycle::new(v)
    }
}
impl From<DutyCycle> for f64 {
    fn from(d: DutyCycle) -> f64 {
        d.0
    }
}

/// Radio constants. Times are seconds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "HardwareProfileJson", into = "HardwareProfileJson")]
pub struct HardwareProfile {
    pub da: f64,
    pub ds_min: f64,
    pub drt: f64,
    pub dtr: f64,
    pub f_clk: f64,
    pub alpha: f64,
}

impl Default for HardwareProfile {
    fn default() -> Self {
        HardwareProfile { da: 32e-6, ds_min: 1e-3, drt: 140e-6, dtr: 140e-6, f_clk: 32768.0, alpha: 1.0 }
    }
}

impl HardwareProfile {
    pub fn validate(&self) -> Result<()> {
        let ok = self.da > 0.0
            && self.ds_min > self.da
            && self.drt >= 0.0
            && self.dtr >= 0.0
            && self.f_clk > 0.0
            && self.alpha > 0.0;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParams(format!("hardware profile violates invariants: {self:?}")))
        }
    }

    /// Sleep-clock tick period in seconds.
    pub fn t_clk(&self) -> f64 {
        1.0 / self.f_clk
    }

    pub fn with_da(self, da: f64) -> Self {
        HardwareProfile { da, ..self }
    }

    pub fn with_ds_min(self, ds_min: f64) -> Self {
        HardwareProfile { ds_min, ..self }
    }

    /// Zero turnaround times.
    pub fn ideal_radio(self) -> Self {
        HardwareProfile { drt: 0.0, dtr: 0.0, ..self }
    }

    pub fn from_json(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| Error::InvalidParams(e.to_string()))
    }
}

#[derive(Serialize, Deserialize)]
struct HardwareProfileJson {
    #[serde(default = "d_da")]
    da_us: f64,
    #[serde(default = "d_dsm")]
    ds_min_us: f64,
    #[serde(default = "d_turn")]
    drt_us: f64,
    #[serde(default = "d_turn")]
    dtr_us: f64,
    #[serde(default = "d_fclk")]
    fclk_hz: f64,
    #[serde(default = "d_alpha")]
    alpha: f64,
}

fn d_da() -> f64 {
    32.0
}
fn d_dsm() -> f64 {
    1000.0
}
fn d_turn() -> f64 {
    140.0
}
fn d_fclk() -> f64 {
    32768.0
}
fn d_alpha() -> f64 {
    1.0
}

impl TryFrom<HardwareProfileJson> for HardwareProfile {
    type Error = Error;
    fn try_from(j: HardwareProfileJson) -> Result<Self> {
        let hw = HardwareProfile {
            da: j.da_us * 1e-6,
            ds_min: j.ds_min_us * 1e-6,
            drt: j.drt_us * 1e-6,
            dtr: j.dtr_us * 1e-6,
            f_clk: j.fclk_hz,
            alpha: j.alpha,
        };
        hw.validate()?;
        Ok(hw)
    }
}

impl From<HardwareProfile> for HardwareProfileJson {
    fn from(h: HardwareProfile) -> Self {
        HardwareProfileJson {
            da_us: h.da * 1e6,
            ds_min_us: h.ds_min * 1e6,
            drt_us: h.drt * 1e6,
            dtr_us: h.dtr * 1e6,
            fclk_hz: h.f_clk,
            alpha: h.alpha,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Scheme {
    SingleInt,
    MultiInt,
}

/// One PI configuration. Times are seconds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PiParams {
    pub ta: f64,
    pub ts: f64,
    pub ds: f64,
    pub da: f64,
    pub scheme: Scheme,
    pub m: u32,
    pub k_c: u32,
    pub bc_enabled: bool,
}

impl PiParams {
    /// Plain parameters with no scheme metadata (tagged SingleInt, M = 0).
    pub fn raw(ta: f64, ts: f64, ds: f64, da: f64) -> Self {
        PiParams { ta, ts, ds, da, scheme: Scheme::SingleInt, m: 0, k_c: 0, bc_enabled: false }
    }

    pub fn validate(&self) -> Result<()> {
        if self.ta > self.da && self.ts >= self.ds && self.ds >= self.da && self.da > 0.0 {
            Ok(())
        } else {
            Err(Error::InvalidParams(format!(
                "need Ta > da, Ts >= ds, ds >= da > 0 (Ta={}, Ts={}, ds={}, da={})",
                self.ta, self.ts, self.ds, self.da
            )))
        }
    }

    /// Duty-cycle without blocking compensation: ds/Ts + alpha*da/Ta.
    pub fn plain_duty(&self, alpha: f64) -> f64 {
        self.ds / self.ts + alpha * self.da / self.ta
    }
}

/// Duty-cycle of `params`. With `bc_enabled` the beacon rate is taken from the
/// exact suppression/compensation schedule averaged over many scan intervals.
pub fn duty_cycle(params: &PiParams, hw: &HardwareProfile) -> f64 {
    if params.bc_enabled {
        crate::sim::bc::bc_duty_cycle_exact(params, hw)
    } else {
        params.plain_duty(hw.alpha)
    }
}

/// Tick index nearest to `t` (half-up).
pub fn tick_index(t: TimeNs, f_clk: f64) -> i64 {
    (t.0 as f64 * f_clk / 1e9 + 0.5).floor() as i64
}

/// Time of tick `k` rounded to the nearest nanosecond.
pub fn tick_time(k: i64, f_clk: f64) -> TimeNs {
    TimeNs((k as f64 * 1e9 / f_clk).round() as i64)
}

/// Nearest point of the sleep-clock grid (half-up tie break).
pub fn tick_quantize(t: TimeNs, f_clk: f64) -> TimeNs {
    tick_time(tick_index(t, f_clk), f_clk)
}

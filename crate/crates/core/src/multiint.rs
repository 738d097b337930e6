//! MultiInt parametrization (k_c * Ta = Ts + ds - da) and its
//! blocking-compensated variant.

use serde::Serialize;

use crate::error::{Constraint, Error, Result};
use crate::timebase::{DutyCycle, HardwareProfile, PiParams, Scheme};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MultiIntSolution {
    pub params: PiParams,
    pub m: u32,
    pub k_c: u32,
    pub gamma: f64,
    pub dm: f64,
    pub p_blk: f64,
    pub clamped: bool,
    pub bc: Option<BcInfo>,
}

/// Bookkeeping attached by [`bc_adjust`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BcInfo {
    /// Duty-cycle handed to the plain solver.
    pub eta_design: f64,
    /// Duty-cycle including compensation beacons and window extension.
    pub duty_achieved: f64,
    pub dm_uncompensated: f64,
    pub dm_increase_rel: f64,
    pub ds_extension: f64,
    pub accounting: BcAccounting,
}

/// How compensation beacons enter the duty-cycle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub enum BcAccounting {
    /// Two extra beacons per scan interval, no credit for suppressed ones.
    #[default]
    Surcharge,
    /// Beacon rate measured on the generated schedule (suppressed removed, compensation added).
    Schedule,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct BcOptions {
    pub accounting: BcAccounting,
    /// Scan-window extension in sleep-clock ticks, charged to the duty-cycle.
    pub ds_extension_ticks: u32,
    /// Air time of a compensation beacon; `None` uses the regular beacon duration.
    pub compensation_da: Option<f64>,
}

pub fn k_opt(eta: f64, m: u32) -> f64 {
    let m = m as f64;
    1.0 / (m + 1.0) + ((eta + m * eta + 1.0).sqrt() + 1.0) / (eta * (m + 1.0))
}

/// Conservative duty-cycle ceiling for order M.
pub fn eta_limit(m: u32, hw: &HardwareProfile) -> f64 {
    let (da, dsm) = (hw.da, hw.ds_min);
    (3.0 * da + (da * (da + 8.0 * dsm)).sqrt()) / (4.0 * (m as f64 + 1.0) * (dsm - da))
}

/// `(k_min, k_max)` with `k_c > k_min` strictly; `k_max = None` means no upper limit.
pub fn k_bounds(eta: DutyCycle, m: u32, hw: &HardwareProfile) -> Result<(f64, Option<f64>)> {
    if m == 0 {
        return Err(Error::InvalidParams("MultiInt requires M >= 1".into()));
    }
    let e = eta.get();
    let lim = eta_limit(m, hw);
    if e > lim {
        return Err(Error::infeasible(
            Constraint::MultiIntDutyLimit,
            format!("eta={e} exceeds {lim:.6} for M={m}"),
        ));
    }
    let m1 = m as f64 + 1.0;
    let (da, dsm) = (hw.da, hw.ds_min);
    let k_min = (1.0 / e + 1.0) / m1;
    // ds(k) >= ds_min; the coefficient changes sign at eta = da / ((M+1)(ds_min - da))
    let a = dsm * m1 * e - da * (1.0 + e * m1);
    let k_max = if a > 0.0 { Some(dsm / a + 1.0 / m1) } else { None };
    let lo = k_min.floor() as i64 + 1;
    if let Some(kx) = k_max {
        if lo as f64 > kx.floor() {
            return Err(Error::infeasible(
                Constraint::MultiIntMultipleRange,
                format!("eta={e}, M={m}: smallest admissible k_c {lo} exceeds k_max={kx:.4}"),
            ));
        }
    }
    Ok((k_min, k_max))
}

pub fn solve(eta: DutyCycle, m: u32, hw: &HardwareProfile) -> Result<MultiIntSolution> {
    hw.validate()?;
    let (k_min, k_max) = k_bounds(eta, m, hw)?;
    let raw = (k_opt(eta.get(), m) + 0.5).floor() as i64;
    let mut k = raw.max(k_min.floor() as i64 + 1);
    if let Some(kx) = k_max {
        k = k.min(kx.floor() as i64);
    }
    let mut sol = solution_for_k(eta.get(), m, k as u32, hw);
    sol.clamped = k != raw;
    Ok(sol)
}

/// Parameters for fixed (M, k_c) without feasibility checks.
pub fn solution_for_k(eta: f64, m: u32, k: u32, hw: &HardwareProfile) -> MultiIntSolution {
    let da = hw.da;
    let m1 = m as f64 + 1.0;
    let kk = k as f64 * m1 - 1.0;
    let ds = da * kk * (eta * m1 + hw.alpha) / (m1 * (eta * kk - 1.0));
    let gamma = ds - da;
    let ts = kk * gamma;
    let ta = (ts + gamma) / k as f64;
    let params = PiParams { ta, ts, ds, da, scheme: Scheme::MultiInt, m, k_c: k, bc_enabled: false };
    MultiIntSolution { params, m, k_c: k, gamma, dm: dm_generic(m, k, ds, da), p_blk: 0.0, clamped: false, bc: None }
}

/// Worst-case latency of the `+` branch parametrization in terms of (M, k_c, ds).
pub fn dm_generic(m: u32, k: u32, ds: f64, da: f64) -> f64 {
    let m_f = m as f64;
    let g = ds - da;
    if k == 1 {
        m_f * (m_f + 1.0) * g + da
    } else {
        (m_f + 1.0) * g * (k as f64 * (m_f + 1.0) - 1.0) + da
    }
}

const REL: f64 = 1e-9;

/// Shrinking case: k_f = floor(Ts/Ta), 0 < Ts - k_f*Ta < Ta/2.
pub fn dm_caseb(p: &PiParams) -> Result<f64> {
    let kf = (p.ts / p.ta).floor();
    let gamma = p.ts - kf * p.ta;
    check_gamma(gamma, p)?;
    if gamma >= p.ta / 2.0 {
        return Err(Error::InvalidParams(format!("gamma={gamma} not below Ta/2; not the shrinking case")));
    }
    let a = kf * p.ta;
    let steps = ((p.ta - (p.ds - p.da)) / gamma - REL).ceil().max(0.0);
    Ok(a + steps * kf * p.ta + p.ta + p.da)
}

/// Growing case: k_c = ceil(Ts/Ta), 0 < k_c*Ta - Ts < Ta/2.
pub fn dm_casec(p: &PiParams) -> Result<f64> {
    let kc = (p.ts / p.ta - REL).ceil();
    let gamma = kc * p.ta - p.ts;
    check_gamma(gamma, p)?;
    if gamma >= p.ta / 2.0 {
        return Err(Error::InvalidParams(format!("gamma={gamma} not below Ta/2; not the growing case")));
    }
    let steps = ((p.ta - (p.ds - p.da)) / gamma - REL).ceil().max(0.0);
    Ok(kc * p.ta + steps * kc * p.ta + p.da)
}

fn check_gamma(gamma: f64, p: &PiParams) -> Result<()> {
    let eff = p.ds - p.da;
    if gamma <= p.ta * REL {
        return Err(Error::InvalidParams("gamma = 0: offsets never change, latency unbounded".into()));
    }
    if gamma > eff * (1.0 + REL) {
        return Err(Error::InvalidParams(format!("gamma={gamma} exceeds ds-da={eff}; windows can be skipped")));
    }
    Ok(())
}

/// Residual two-device failure probability with blocking compensation.
pub fn bc_failure_prob(p: &PiParams, hw: &HardwareProfile) -> f64 {
    let da = p.da;
    let area = p.ta * p.ts;
    0.5 * ((hw.dtr + da).powi(2) / area + (hw.drt + da).powi(2) / area) + (hw.drt + hw.dtr + 2.0 * da) / p.ts
}

/// Duty-cycle of a BC configuration under the chosen accounting.
pub fn bc_duty(p: &PiParams, hw: &HardwareProfile, opts: &BcOptions) -> f64 {
    let ext = opts.ds_extension_ticks as f64 * hw.t_clk();
    let comp_da = opts.compensation_da.unwrap_or(p.da);
    let tx_per_ts = match opts.accounting {
        BcAccounting::Surcharge => p.ts / p.ta * p.da + 2.0 * comp_da,
        BcAccounting::Schedule => {
            let (regular, comp) = crate::sim::bc::beacons_per_scan_interval(p, hw);
            regular * p.da + comp * comp_da
        }
    };
    (p.ds + ext) / p.ts + hw.alpha * tx_per_ts / p.ts
}

/// M = 2 MultiInt with blocking compensation, re-solved so that the
/// compensated duty-cycle equals `eta_target`.
pub fn bc_adjust(eta_target: DutyCycle, hw: &HardwareProfile, opts: &BcOptions) -> Result<MultiIntSolution> {
    const M: u32 = 2;
    let target = eta_target.get();
    let base = solve(eta_target, M, hw)?;

    // coarse free iteration to locate k_c
    let mut e = target;
    for _ in 0..8 {
        let s = solve(DutyCycle::new(e)?, M, hw)?;
        e *= target / bc_duty(&bc_params(&s), hw, opts);
    }
    let k0 = solve(DutyCycle::new(e)?, M, hw)?.k_c;

    let mut best: Option<(bool, MultiIntSolution)> = None;
    for k in k0.saturating_sub(1).max(1)..=k0 + 1 {
        let Ok((e_k, sol)) = adjust_fixed_k(target, k, hw, opts) else { continue };
        let Ok(natural) = solve(DutyCycle::new(e_k)?, M, hw) else { continue };
        let consistent = natural.k_c == k;
        let (k_lo, k_hi) = k_bounds(DutyCycle::new(e_k)?, M, hw)?;
        if (k as f64) <= k_lo || k_hi.is_some_and(|h| k as f64 > h) {
            continue;
        }
        let better = match &best {
            None => true,
            Some((c, b)) => (consistent && !c) || (consistent == *c && sol.dm < b.dm),
        };
        if better {
            best = Some((consistent, sol));
        }
    }
    let (_, mut sol) = best.ok_or(Error::NoConvergence { iterations: 32 })?;
    sol.params.bc_enabled = true;
    sol.p_blk = bc_failure_prob(&sol.params, hw);
    if let Some(info) = sol.bc.as_mut() {
        info.dm_uncompensated = base.dm;
        info.dm_increase_rel = sol.dm / base.dm - 1.0;
    }
    Ok(sol)
}

fn bc_params(s: &MultiIntSolution) -> PiParams {
    PiParams { bc_enabled: true, ..s.params }
}

fn adjust_fixed_k(target: f64, k: u32, hw: &HardwareProfile, opts: &BcOptions) -> Result<(f64, MultiIntSolution)> {
    const ITER: u32 = 32;
    let mut e = target;
    for _ in 0..ITER {
        let s = solution_for_k(e, 2, k, hw);
        if s.params.ds <= s.params.da || !s.params.ds.is_finite() {
            return Err(Error::NoConvergence { iterations: ITER });
        }
        let d = bc_duty(&bc_params(&s), hw, opts);
        if (d - target).abs() < 1e-12 {
            let mut out = s;
            out.bc = Some(BcInfo {
                eta_design: e,
                duty_achieved: d,
                dm_uncompensated: f64::NAN,
                dm_increase_rel: f64::NAN,
                ds_extension: opts.ds_extension_ticks as f64 * hw.t_clk(),
                accounting: opts.accounting,
            });
            return Ok((e, out));
        }
        e *= target / d;
    }
    Err(Error::NoConvergence { iterations: ITER })
}

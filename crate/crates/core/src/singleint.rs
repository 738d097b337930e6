//! SingleInt parametrization: one beacon lands in every scan window, so
//! discovery completes within a single scan interval.

use serde::Serialize;

use crate::error::{Constraint, Error, Result};
use crate::timebase::{DutyCycle, HardwareProfile, PiParams, Scheme};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub enum SingleIntMode {
    /// M = round(M_opt), clamped into the feasible range.
    #[default]
    RoundedOpt,
    /// M + 1 taken from the neighbours of 2/eta, as in the optimality bound.
    BoundOptimal,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SingleIntOptions {
    pub mode: SingleIntMode,
    /// Skip the conservative duty-cycle ceiling and rely on the exact integer range check.
    pub force: bool,
    /// Emit Ts shortened by one sleep-clock tick. Latency is still computed from the nominal Ts.
    pub safety_margin: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SingleIntSolution {
    pub params: PiParams,
    pub m: u32,
    pub dm: f64,
    pub dm_star: f64,
    /// Latency with the beacon duration excluded from the latency (but not from the duty-cycle).
    pub dm_relaxed: f64,
    pub clamped: bool,
}

/// Unconstrained latency-optimal order (real valued).
pub fn m_opt(eta: f64) -> f64 {
    ((1.0 + eta).sqrt() + 1.0) / eta - 1.0
}

/// `(M_min, M_max)`; `M_max` is `None` when the scan-window minimum imposes no limit.
/// M must satisfy `M > M_min` strictly.
pub fn m_bounds(eta: DutyCycle, hw: &HardwareProfile) -> Result<(f64, Option<f64>)> {
    let eta = eta.get();
    let (da, dsm) = (hw.da, hw.ds_min);
    let m_min = 1.0 / eta - 1.0;
    let m_max = if eta > da / (dsm - da) {
        Some((dsm * (eta - 1.0) - da * (eta + 1.0)) / (da * (eta + 1.0) - eta * dsm))
    } else {
        None
    };
    let lo = strict_floor_plus_one(m_min);
    if let Some(mx) = m_max {
        if (lo as f64) > mx.floor() {
            return Err(Error::infeasible(
                Constraint::SingleIntOrderRange,
                format!("eta={eta}: smallest admissible M {lo} exceeds M_max={mx:.4}"),
            ));
        }
    }
    Ok((m_min, m_max))
}

/// Conservative duty-cycle ceiling for the given hardware.
pub fn eta_max(hw: &HardwareProfile) -> f64 {
    let (da, dsm) = (hw.da, hw.ds_min);
    (3.0 * da + (da * (da + 8.0 * dsm)).sqrt()) / (4.0 * (dsm - da))
}

pub fn solve(eta: DutyCycle, hw: &HardwareProfile, mode: SingleIntMode) -> Result<SingleIntSolution> {
    solve_with(eta, hw, &SingleIntOptions { mode, ..Default::default() })
}

pub fn solve_with(eta: DutyCycle, hw: &HardwareProfile, opts: &SingleIntOptions) -> Result<SingleIntSolution> {
    hw.validate()?;
    let e = eta.get();
    let limit = eta_max(hw);
    if !opts.force && e > limit {
        return Err(Error::infeasible(
            Constraint::SingleIntDutyLimit,
            format!("eta={e} exceeds {limit:.6} for da={} s, ds_min={} s", hw.da, hw.ds_min),
        ));
    }
    let (m_min, m_max) = m_bounds(eta, hw)?;
    let lo = strict_floor_plus_one(m_min);
    let hi = m_max.map(|m| m.floor() as i64);
    let clamp = |m: i64| -> i64 {
        let m = m.max(lo);
        match hi {
            Some(h) => m.min(h),
            None => m,
        }
    };
    let (m, clamped) = match opts.mode {
        SingleIntMode::RoundedOpt => {
            let raw = round_half_up(m_opt(e));
            let m = clamp(raw);
            (m, m != raw)
        }
        SingleIntMode::BoundOptimal => {
            let two = 2.0 / e;
            let cands = [two.floor() as i64 - 1, two.ceil() as i64 - 1];
            let best = cands
                .into_iter()
                .filter(|&m| m >= lo && hi.is_none_or(|h| m <= h))
                .min_by(|&a, &b| relaxed_dm(e, a, hw.da).total_cmp(&relaxed_dm(e, b, hw.da)));
            match best {
                Some(m) => (m, false),
                None => {
                    return Err(Error::infeasible(
                        Constraint::SingleIntOrderRange,
                        format!("eta={e}: neither neighbour of 2/eta - 1 is admissible"),
                    ))
                }
            }
        }
    };
    let mut sol = solution_for_m(e, m as u32, hw);
    sol.clamped = clamped;
    if opts.safety_margin {
        sol.params.ts -= hw.t_clk();
    }
    Ok(sol)
}

/// Parameters for a fixed order M (no feasibility checks).
pub fn solution_for_m(eta: f64, m: u32, hw: &HardwareProfile) -> SingleIntSolution {
    let da = hw.da;
    let m1 = m as f64 + 1.0;
    let ds = m1 * (eta + hw.alpha) * da / (eta * m1 - 1.0);
    let ta = ds - da;
    let ts = m1 * ta;
    let params = PiParams { ta, ts, ds, da, scheme: Scheme::SingleInt, m, k_c: 0, bc_enabled: false };
    let dm = m1 * ta + da;
    SingleIntSolution { params, m, dm, dm_star: dm - ta, dm_relaxed: relaxed_dm(eta, m as i64, da), clamped: false }
}

/// Worst-case latency at order M under the relaxed convention.
pub fn relaxed_dm(eta: f64, m: i64, da: f64) -> f64 {
    let m1 = m as f64 + 1.0;
    da * m1 * m1 / (eta * m1 - 1.0)
}

/// Packet-to-packet worst-case latency for parameters with Ta <= ds - da.
pub fn dm_star(params: &PiParams) -> Result<f64> {
    let eff = params.ds - params.da;
    if params.ta > eff * (1.0 + 1e-12) {
        return Err(Error::InvalidParams(format!(
            "Ta={} exceeds effective window ds-da={}; not a SingleInt configuration",
            params.ta, eff
        )));
    }
    let n = ((params.ts - eff) / params.ta - 1e-9).ceil().max(0.0);
    Ok(n * params.ta + params.da)
}

/// Mean blocking probability when two SingleInt devices discover each other.
pub fn blocking(params: &PiParams, hw: &HardwareProfile) -> f64 {
    (hw.drt + params.da + hw.dtr) / (params.ds - params.da)
}

fn round_half_up(x: f64) -> i64 {
    (x + 0.5).floor() as i64
}

/// Smallest integer strictly greater than `x`.
fn strict_floor_plus_one(x: f64) -> i64 {
    x.floor() as i64 + 1
}

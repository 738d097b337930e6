//! Worst-case latencies of slotted discovery protocols, slot-length
//! calibration to a blocking target, and gain tables against MultiInt-BC.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::multiint::{bc_adjust, BcOptions};
use crate::timebase::{DutyCycle, HardwareProfile};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Protocol {
    Disco,
    UConnect,
    SearchlightStriped,
    OptimalDiffcodes,
    GNihao,
}

impl Protocol {
    pub const ALL: [Protocol; 5] =
        [Protocol::Disco, Protocol::SearchlightStriped, Protocol::OptimalDiffcodes, Protocol::GNihao, Protocol::UConnect];

    pub fn name(self) -> &'static str {
        match self {
            Protocol::Disco => "disco",
            Protocol::UConnect => "u-connect",
            Protocol::SearchlightStriped => "searchlight-s",
            Protocol::OptimalDiffcodes => "diffcodes",
            Protocol::GNihao => "g-nihao",
        }
    }

    /// Slot structure that determines the blocking probability; `None` for
    /// U-Connect, whose slot length stays fixed.
    pub fn design(self) -> Option<SlotDesign> {
        match self {
            Protocol::Disco => Some(SlotDesign::PaddedTwoBeacon),
            Protocol::SearchlightStriped | Protocol::OptimalDiffcodes => Some(SlotDesign::Overflowing),
            Protocol::GNihao => Some(SlotDesign::NihaoListenBlock),
            Protocol::UConnect => None,
        }
    }
}

/// Fixed U-Connect slot length (s).
pub const UCONNECT_SLOT: f64 = 250e-6;
pub const DEFAULT_NIHAO_M: u32 = 33;
pub const DEFAULT_NIHAO_GAMMA: u32 = 2;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SlottedSpec {
    pub protocol: Protocol,
    /// Slot length (s).
    pub d_sl: f64,
    pub nihao_gamma: u32,
    pub nihao_m: u32,
}

impl SlottedSpec {
    pub fn new(protocol: Protocol, d_sl: f64) -> Self {
        SlottedSpec { protocol, d_sl, nihao_gamma: DEFAULT_NIHAO_GAMMA, nihao_m: DEFAULT_NIHAO_M }
    }

    pub fn validate(&self) -> Result<()> {
        if self.d_sl.is_nan() || self.d_sl <= 0.0 || self.nihao_gamma == 0 || self.nihao_m == 0 {
            return Err(Error::InvalidParams("need d_sl > 0, nihao_gamma >= 1, nihao_m >= 1".into()));
        }
        Ok(())
    }
}

/// Which Searchlight expression to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub enum SearchlightForm {
    /// `ceil(floor(1/eta)/2) * d_sl`, as tabulated.
    #[default]
    Verbatim,
    /// `2 ceil(floor(1/eta)/2) floor(1/eta) * d_sl`, consistent with the published gains.
    GainConsistent,
}

/// Worst-case latency (s) with the Searchlight row taken verbatim.
pub fn slotted_dm(spec: &SlottedSpec, eta: DutyCycle, da: f64) -> f64 {
    slotted_dm_with(spec, eta, da, SearchlightForm::Verbatim)
}

pub fn slotted_dm_with(spec: &SlottedSpec, eta: DutyCycle, da: f64, form: SearchlightForm) -> f64 {
    let e = eta.get();
    let d = spec.d_sl;
    match spec.protocol {
        Protocol::Disco => 4.0 / (e * e) * d,
        Protocol::UConnect => {
            let r = (1.0 / (2.0 * e) + 9.0 / (16.0 * e * e)).sqrt() + 3.0 / (4.0 * e);
            r * r * d
        }
        Protocol::SearchlightStriped => {
            let t = (1.0 / e).floor();
            let half = (t / 2.0).ceil();
            match form {
                SearchlightForm::Verbatim => half * d,
                SearchlightForm::GainConsistent => 2.0 * half * t * d,
            }
        }
        Protocol::OptimalDiffcodes => d / (2.0 * e * e),
        Protocol::GNihao => {
            // the tabulated row counts slots; scaled by d_sl to obtain time
            let g = spec.nihao_gamma as f64;
            let x = (d + da * g) / (2.0 * g * e * d);
            let r = x + (x - da / d).sqrt();
            r * r * g * d
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum SlotDesign {
    /// Beacons at both slot edges, slot padded by turnaround times.
    PaddedTwoBeacon,
    /// Beacons overflowing the slot boundary.
    Overflowing,
    /// m consecutive listen-only slots per beacon period.
    NihaoListenBlock,
}

/// Two-device blocking probability for slot length `d_sl`.
pub fn slot_failure_prob(design: SlotDesign, d_sl: f64, hw: &HardwareProfile, nihao_m: u32) -> f64 {
    numerator(design, hw) / (denominator_scale(design, nihao_m) * d_sl)
}

/// Slot length at which [`slot_failure_prob`] equals `target_p`.
pub fn calibrate_slot(design: SlotDesign, target_p: f64, hw: &HardwareProfile, nihao_m: u32) -> Result<f64> {
    if !(target_p > 0.0 && target_p < 1.0) {
        return Err(Error::InvalidParams(format!("target probability {target_p} not in (0, 1)")));
    }
    Ok(numerator(design, hw) / (denominator_scale(design, nihao_m) * target_p))
}

fn numerator(design: SlotDesign, hw: &HardwareProfile) -> f64 {
    let (da, drt, dtr) = (hw.da, hw.drt, hw.dtr);
    match design {
        SlotDesign::PaddedTwoBeacon => 2.0 * (3.0 * da + drt + dtr),
        SlotDesign::Overflowing => 2.0 * da + dtr,
        SlotDesign::NihaoListenBlock => drt + dtr + 2.0 * da,
    }
}

fn denominator_scale(design: SlotDesign, nihao_m: u32) -> f64 {
    match design {
        SlotDesign::PaddedTwoBeacon => 2.0,
        SlotDesign::Overflowing => 1.0,
        SlotDesign::NihaoListenBlock => nihao_m as f64,
    }
}

/// `n` evenly spaced duty-cycles from 0.2 % to 1.55 % (28 gives 0.05 % steps).
pub fn default_eta_grid(n: usize) -> Vec<f64> {
    let (lo, hi) = (0.002, 0.0155);
    if n <= 1 {
        return vec![lo];
    }
    (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
}

/// Scan-window extension (ticks) charged to the reference MultiInt-BC configuration.
pub const REFERENCE_EXTENSION_TICKS: u32 = 5;

/// BC-adjusted MultiInt worst-case latencies used as gain denominators.
pub fn reference_dms(eta_grid: &[f64], hw: &HardwareProfile) -> Result<Vec<f64>> {
    let opts = BcOptions { ds_extension_ticks: REFERENCE_EXTENSION_TICKS, ..Default::default() };
    eta_grid.iter().map(|&e| Ok(bc_adjust(DutyCycle::new(e)?, hw, &opts)?.dm)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GainOptions {
    pub target_p: f64,
    pub nihao_m: u32,
    pub nihao_gamma: u32,
    pub searchlight: SearchlightForm,
}

impl Default for GainOptions {
    fn default() -> Self {
        GainOptions {
            target_p: 0.0019,
            nihao_m: DEFAULT_NIHAO_M,
            nihao_gamma: DEFAULT_NIHAO_GAMMA,
            searchlight: SearchlightForm::GainConsistent,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GainRow {
    pub eta: f64,
    pub protocol: Protocol,
    pub d_sl: f64,
    pub dm_protocol: f64,
    pub dm_reference: f64,
    pub gain: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GainSummary {
    pub protocol: Protocol,
    pub d_sl: f64,
    pub g_max: f64,
    pub g_mean: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GainTable {
    pub options: GainOptions,
    pub rows: Vec<GainRow>,
    pub summary: Vec<GainSummary>,
}

impl GainTable {
    pub fn summary_for(&self, p: Protocol) -> Option<&GainSummary> {
        self.summary.iter().find(|s| s.protocol == p)
    }
}

/// Slot length used for `protocol` at blocking target `opts.target_p`.
pub fn slot_length(protocol: Protocol, hw: &HardwareProfile, opts: &GainOptions) -> Result<f64> {
    match protocol.design() {
        Some(d) => calibrate_slot(d, opts.target_p, hw, opts.nihao_m),
        None => Ok(UCONNECT_SLOT),
    }
}

/// Gains `dm_protocol / dm_reference` per duty-cycle, with max and arithmetic mean over the grid.
pub fn gain_table(eta_grid: &[f64], hw: &HardwareProfile, references: &[f64], opts: &GainOptions) -> Result<GainTable> {
    if eta_grid.len() != references.len() || eta_grid.is_empty() {
        return Err(Error::InvalidParams("need one reference latency per grid point".into()));
    }
    let mut rows = Vec::with_capacity(eta_grid.len() * Protocol::ALL.len());
    let mut summary = Vec::with_capacity(Protocol::ALL.len());
    for p in Protocol::ALL {
        let d_sl = slot_length(p, hw, opts)?;
        let spec = SlottedSpec { protocol: p, d_sl, nihao_gamma: opts.nihao_gamma, nihao_m: opts.nihao_m };
        spec.validate()?;
        let mut g_max = f64::NEG_INFINITY;
        let mut g_sum = 0.0;
        for (&e, &r) in eta_grid.iter().zip(references) {
            let dm = slotted_dm_with(&spec, DutyCycle::new(e)?, hw.da, opts.searchlight);
            let gain = dm / r;
            g_max = g_max.max(gain);
            g_sum += gain;
            rows.push(GainRow { eta: e, protocol: p, d_sl, dm_protocol: dm, dm_reference: r, gain });
        }
        summary.push(GainSummary { protocol: p, d_sl, g_max, g_mean: g_sum / eta_grid.len() as f64 });
    }
    Ok(GainTable { options: *opts, rows, summary })
}

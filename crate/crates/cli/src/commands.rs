use std::fmt;
use std::path::Path;

use anyhow::{Context, Result};
use serde::Serialize;

use pind_core::ble::{self, BleMode, BleOverheads};
use pind_core::bounds;
use pind_core::multiint::{self, BcAccounting, BcInfo, BcOptions};
use pind_core::optsearch::{self, SearchGrid};
use pind_core::sim::{self, ClockModel, LinkMode, RandomDelay, ScenarioConfig};
use pind_core::singleint::{self, SingleIntMode, SingleIntOptions};
use pind_core::slotted::{self, GainOptions, Protocol, SearchlightForm};
use pind_core::{duty_cycle, DutyCycle, Error, HardwareProfile, PiParams, TimeNs};

use crate::output::{self, RunManifest, WithManifest};
use crate::parse::SchemeArg;
use crate::svg::{self, Plot, Series, Style};
use crate::{
    Accounting, BleArgs, BleModeArg, BoundArgs, ClockArg, CompareArgs, GridArg, HwArgs, ModeArg, ParamArgs,
    SearchArgs, SearchlightArg, SimulateArgs, SweepArgs,
};

/// A `--assert*` check did not hold.
#[derive(Debug)]
pub struct AssertFailed(pub String);

impl fmt::Display for AssertFailed {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "assertion failed: {}", self.0)
    }
}

impl std::error::Error for AssertFailed {}

pub fn exit_code(e: &anyhow::Error) -> u8 {
    if e.downcast_ref::<AssertFailed>().is_some() {
        return 4;
    }
    match e.downcast_ref::<Error>() {
        Some(Error::Infeasible { .. }) => 3,
        Some(Error::InvalidParams(_)) | Some(Error::BudgetExceeded { .. }) => 2,
        _ => 1,
    }
}

impl HwArgs {
    fn profile(&self, default: HardwareProfile) -> Result<HardwareProfile> {
        let mut hw = match &self.profile {
            Some(p) => {
                let s = std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
                HardwareProfile::from_json(&s)?
            }
            None => default,
        };
        if let Some(v) = self.da {
            hw.da = v.0;
        }
        if let Some(v) = self.ds_min {
            hw.ds_min = v.0;
        }
        if let Some(v) = self.drt {
            hw.drt = v.0;
        }
        if let Some(v) = self.dtr {
            hw.dtr = v.0;
        }
        if let Some(v) = self.fclk {
            hw.f_clk = v;
        }
        hw.validate()?;
        Ok(hw)
    }
}

/// Scheme parameters plus the figures every subcommand reports.
#[derive(Debug, Clone, Serialize)]
#[allow(non_snake_case)]
struct Resolved {
    scheme: String,
    Ta: f64,
    Ts: f64,
    ds: f64,
    da: f64,
    M: u32,
    k: Option<u32>,
    dm: f64,
    p_blk: f64,
    eta_target: f64,
    eta_achieved: f64,
    clamped: bool,
    bc: Option<BcInfo>,
    #[serde(skip)]
    params: PiParams,
}

fn resolve(scheme: SchemeArg, eta: f64, hw: &HardwareProfile, force: bool, bc: BcOptions) -> Result<Resolved> {
    let e = DutyCycle::new(eta)?;
    let plain = |params: PiParams, m, k, dm, p_blk, clamped| Resolved {
        scheme: scheme.to_string(),
        Ta: params.ta,
        Ts: params.ts,
        ds: params.ds,
        da: params.da,
        M: m,
        k,
        dm,
        p_blk,
        eta_target: eta,
        eta_achieved: duty_cycle(&params, hw),
        clamped,
        bc: None,
        params,
    };
    Ok(match scheme {
        SchemeArg::SingleInt | SchemeArg::SingleIntBound => {
            let mode = if scheme == SchemeArg::SingleInt { SingleIntMode::RoundedOpt } else { SingleIntMode::BoundOptimal };
            let s = singleint::solve_with(e, hw, &SingleIntOptions { mode, force, safety_margin: false })?;
            plain(s.params, s.m, None, s.dm, singleint::blocking(&s.params, hw), s.clamped)
        }
        SchemeArg::MultiInt(m) => {
            let s = multiint::solve(e, m, hw)?;
            plain(s.params, s.m, Some(s.k_c), s.dm, s.p_blk, s.clamped)
        }
        SchemeArg::MultiIntBc => {
            let s = multiint::bc_adjust(e, hw, &bc)?;
            let info = s.bc.expect("bc_adjust attaches bookkeeping");
            let mut r = plain(s.params, s.m, Some(s.k_c), s.dm, s.p_blk, s.clamped);
            r.eta_achieved = info.duty_achieved;
            r.bc = Some(info);
            r
        }
    })
}

/// `println!` that treats a closed stdout (e.g. `| head`) as success.
macro_rules! say {
    ($($t:tt)*) => {{
        use std::io::Write;
        match writeln!(std::io::stdout().lock(), $($t)*) {
            Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(anyhow::Error::from(e)),
            _ => Ok(()),
        }
    }};
}

fn print_json<T: Serialize>(v: &T) -> Result<()> {
    say!("{}", serde_json::to_string_pretty(v)?)
}

fn write_svg(path: &Path, plot: &Plot, manifest: &RunManifest) -> Result<()> {
    output::write_with_manifest(path, svg::render(plot).as_bytes(), manifest)
}

fn clock_model(c: ClockArg, hw: &HardwareProfile) -> ClockModel {
    match c {
        ClockArg::Ideal => ClockModel::Ideal,
        ClockArg::Quantized => ClockModel::quantized(hw.f_clk, false),
        ClockArg::QuantizedCorrected => ClockModel::quantized(hw.f_clk, true),
    }
}

pub fn param(a: ParamArgs) -> Result<()> {
    let hw = a.hw.profile(HardwareProfile::default())?;
    let accounting = match a.accounting {
        Accounting::Surcharge => BcAccounting::Surcharge,
        Accounting::Schedule => BcAccounting::Schedule,
    };
    let bc = BcOptions { accounting, ds_extension_ticks: a.bc_ext_ticks, compensation_da: None };
    let r = resolve(a.scheme, a.eta.0, &hw, a.force, bc)?;
    print_json(&r)?;
    if let Some(p) = &a.out {
        let m = RunManifest::start("param", &hw, None).finish();
        output::write_json(p, &WithManifest { manifest: &m, result: &r })?;
    }
    Ok(())
}

pub fn compare(a: CompareArgs) -> Result<()> {
    let hw = a.hw.profile(HardwareProfile::default())?;
    let manifest = RunManifest::start("compare", &hw, None);
    let opts = GainOptions {
        target_p: a.pblk.0,
        nihao_m: a.nihao_m,
        nihao_gamma: a.nihao_gamma,
        searchlight: match a.searchlight {
            SearchlightArg::Verbatim => SearchlightForm::Verbatim,
            SearchlightArg::Consistent => SearchlightForm::GainConsistent,
        },
    };
    let grid = a.eta.0;
    let refs = slotted::reference_dms(&grid, &hw)?;
    let table = slotted::gain_table(&grid, &hw, &refs, &opts)?;
    let manifest = manifest.finish();

    say!("reference: multiint2-bc ({} tick extension), searchlight form: {:?}", slotted::REFERENCE_EXTENSION_TICKS, opts.searchlight)?;
    say!("{:<22} {:>12} {:>12} {:>12}", "protocol", "slot [ms]", "G_max", "G_mean")?;
    for s in &table.summary {
        say!("{:<22} {:>12.3} {:>12.2} {:>12.2}", s.protocol.name(), s.d_sl * 1e3, s.g_max, s.g_mean)?;
    }

    if let Some(p) = &a.csv {
        output::write_csv(p, &table.rows)?;
        output::write_json(&output::manifest_path(p), &manifest)?;
    }
    if let Some(p) = &a.json {
        output::write_json(p, &WithManifest { manifest: &manifest, result: &table })?;
    }
    if let Some(p) = &a.svg {
        let mut series: Vec<Series> = Protocol::ALL
            .iter()
            .map(|&proto| Series {
                name: proto.name().to_string(),
                points: table.rows.iter().filter(|r| r.protocol == proto).map(|r| (r.eta * 100.0, r.dm_protocol)).collect(),
                style: Style::Line,
            })
            .collect();
        series.push(Series {
            name: "multiint2-bc".into(),
            points: grid.iter().zip(&refs).map(|(&e, &d)| (e * 100.0, d)).collect(),
            style: Style::Scatter,
        });
        let plot = Plot {
            title: "Worst-case latency".into(),
            x_label: "duty-cycle [%]".into(),
            y_label: "latency [s]".into(),
            log_y: true,
            series,
            ..Default::default()
        };
        write_svg(p, &plot, &manifest)?;
    }
    Ok(())
}

#[derive(Serialize)]
struct CsvTrial {
    trial: u64,
    seed: u64,
    latency_ab_ns: Option<i64>,
    latency_ba_ns: Option<i64>,
    failed: bool,
}

#[derive(Serialize)]
struct SimSummary<'a> {
    config: &'a Resolved,
    mode: LinkMode,
    clock: ClockModel,
    trials: u64,
    master_seed: u64,
    failures: u64,
    directional_failures: u64,
    failure_rate: f64,
    mean: f64,
    p50: Option<f64>,
    p95: Option<f64>,
    p99: Option<f64>,
    max: Option<f64>,
    cdf: Vec<(f64, f64)>,
}

pub fn simulate(a: SimulateArgs) -> Result<()> {
    let hw = a.hw.profile(HardwareProfile::default())?;
    let bc = BcOptions { ds_extension_ticks: slotted::REFERENCE_EXTENSION_TICKS, ..Default::default() };
    let r = resolve(a.scheme, a.eta.0, &hw, false, bc)?;
    let manifest = RunManifest::start("simulate", &hw, Some(a.seed));
    let mode = match a.mode {
        ModeArg::Oneway => LinkMode::OneWay,
        ModeArg::Twoway => LinkMode::TwoWay,
    };
    let mut cfg = ScenarioConfig::new(r.params, hw, mode, r.dm);
    cfg.clock = clock_model(a.clock, &hw);
    cfg.trials = a.trials;
    cfg.master_seed = a.seed;
    cfg.timeout = TimeNs::from_secs_f64(a.timeout.0);
    cfg.turnarounds = !a.no_turnarounds;
    cfg.ble_random_delay = a
        .ble_delay
        .map(|d| RandomDelay { max: TimeNs::from_secs_f64(d.0), step: TimeNs::from_secs_f64(ble::BLE_STEP) });
    let res = sim::monte_carlo(&cfg)?;
    let manifest = manifest.finish();

    let summary = SimSummary {
        config: &r,
        mode,
        clock: cfg.clock,
        trials: a.trials,
        master_seed: a.seed,
        failures: res.failures,
        directional_failures: res.directional_failures,
        failure_rate: res.failure_rate,
        mean: res.mean_latency,
        p50: res.quantile(0.5),
        p95: res.quantile(0.95),
        p99: res.quantile(0.99),
        max: res.sorted_latencies.last().copied(),
        cdf: res.cdf(100),
    };
    say!(
        "{} eta={:.4}% dm={:.6}s trials={} failures={} rate={:.3e} mean={:.6}s p99={}",
        r.scheme,
        r.eta_target * 100.0,
        r.dm,
        a.trials,
        res.failures,
        res.failure_rate,
        res.mean_latency,
        summary.p99.map_or("-".into(), |v| format!("{v:.6}s")),
    )?;

    if let Some(p) = &a.csv {
        let rows: Vec<CsvTrial> = res
            .outcomes
            .iter()
            .map(|o| CsvTrial {
                trial: o.trial,
                seed: o.seed,
                latency_ab_ns: o.latency_a_discovers_b.map(|t| t.0),
                latency_ba_ns: o.latency_b_discovers_a.map(|t| t.0),
                failed: o.failed,
            })
            .collect();
        output::write_csv(p, &rows)?;
        output::write_json(&output::manifest_path(p), &manifest)?;
    }
    if let Some(p) = &a.json {
        output::write_json(p, &WithManifest { manifest: &manifest, result: &summary })?;
    }
    if let Some(p) = &a.svg {
        let plot = Plot {
            title: format!("Latency CDF, {} at {:.3} %", r.scheme, r.eta_target * 100.0),
            x_label: "latency [s]".into(),
            y_label: "fraction of trials".into(),
            series: vec![
                Series { name: "simulated".into(), points: summary.cdf.clone(), style: Style::Line },
                Series { name: "predicted dm".into(), points: vec![(r.dm, 0.0), (r.dm, 1.0)], style: Style::Line },
            ],
            ..Default::default()
        };
        write_svg(p, &plot, &manifest)?;
    }

    if let Some(target) = a.assert_rate {
        let n = a.trials.max(1) as f64;
        let sigma = (target * (1.0 - target) / n).sqrt();
        let (lo, hi) = (target - 3.0 * sigma, target + 3.0 * sigma);
        if !(lo..=hi).contains(&res.failure_rate) {
            return Err(AssertFailed(format!(
                "failure rate {:.3e} outside 3-sigma interval [{lo:.3e}, {hi:.3e}] around {target:.3e}",
                res.failure_rate
            ))
            .into());
        }
    }
    Ok(())
}

#[derive(Serialize)]
struct SweepReport<'a> {
    config: &'a Resolved,
    clock: ClockModel,
    worst_s: f64,
    worst_dm_star_s: f64,
    argmax_offset_s: f64,
    mean_s: f64,
    breakpoints: usize,
    ratio_to_dm: f64,
}

pub fn sweep(a: SweepArgs) -> Result<()> {
    let hw = a.hw.profile(HardwareProfile::default())?;
    let r = resolve(a.scheme, a.eta.0, &hw, false, BcOptions::default())?;
    let clock = clock_model(a.clock, &hw);
    let limit = a.limit.map(|l| TimeNs::from_secs_f64(l.0));
    let o = sim::clocked_sweep(&r.params, &r.params, clock, limit)?;
    let rep = SweepReport {
        config: &r,
        clock,
        worst_s: o.worst.as_secs_f64(),
        worst_dm_star_s: o.worst_dm_star.as_secs_f64(),
        argmax_offset_s: o.argmax_offset.as_secs_f64(),
        mean_s: o.mean,
        breakpoints: o.breakpoints,
        ratio_to_dm: o.worst.as_secs_f64() / r.dm,
    };
    say!(
        "worst offset {:.9}s  worst latency {:.9}s  analytic dm {:.9}s  ratio {:.6}",
        rep.argmax_offset_s, rep.worst_s, r.dm, rep.ratio_to_dm
    )?;
    if let Some(p) = &a.json {
        let m = RunManifest::start("sweep", &hw, None).finish();
        output::write_json(p, &WithManifest { manifest: &m, result: &rep })?;
    }
    if a.assert && rep.ratio_to_dm > 1.01 {
        return Err(AssertFailed(format!("worst case {:.6}s exceeds 1.01 x dm {:.6}s", rep.worst_s, r.dm)).into());
    }
    Ok(())
}

pub fn search(a: SearchArgs) -> Result<()> {
    let hw = a.hw.profile(HardwareProfile::default())?;
    let mut grid = match a.grid {
        GridArg::Coarse => SearchGrid::coarse(),
        GridArg::Desk => SearchGrid::desk(),
        GridArg::Full => SearchGrid::full(),
    };
    grid.report_below = a.report_below.0;
    let manifest = RunManifest::start("search", &hw, None);
    let res = optsearch::grid_search_with_budget(&grid, &hw, a.budget)?;
    let manifest = manifest.finish();
    say!(
        "candidates {}  evaluated {}  unbounded {}  no reference {}  violations {}",
        res.candidates,
        res.evaluated,
        res.unbounded,
        res.no_reference,
        res.violations.len()
    )?;
    match (res.min_gap, res.witness) {
        (Some(g), Some(w)) => say!("min gap {g:.6}s at Ta={:.4}s Ts={:.4}s ds={:.4}s", w.ta, w.ts, w.ds)?,
        _ => say!("no candidate with bounded latency")?,
    }
    if let Some(p) = &a.csv {
        output::write_csv(p, &res.reported)?;
        output::write_json(&output::manifest_path(p), &manifest)?;
    }
    if let Some(p) = &a.json {
        output::write_json(p, &WithManifest { manifest: &manifest, result: &res })?;
    }
    if a.assert && !res.violations.is_empty() {
        return Err(AssertFailed(format!("{} configurations beat SingleInt", res.violations.len())).into());
    }
    Ok(())
}

#[derive(Serialize)]
struct BoundReport {
    eta: f64,
    da: f64,
    sym_bound: f64,
    singleint_relaxed_dm: f64,
    m: i64,
    singleint_optimal: bool,
    unidir_bound: Option<f64>,
}

pub fn bound(a: BoundArgs) -> Result<()> {
    let hw = a.hw.profile(HardwareProfile::default())?;
    let rep = bounds::check_singleint_optimal(a.eta.0, hw.da);
    let unidir = match (a.rho, a.beta) {
        (Some(r), Some(b)) => Some(bounds::BoundInputs::new(r.0, b.0, hw.da)?.unidir()),
        _ => None,
    };
    print_json(&BoundReport {
        eta: a.eta.0,
        da: hw.da,
        sym_bound: rep.bound,
        singleint_relaxed_dm: rep.singleint_relaxed_dm,
        m: rep.m,
        singleint_optimal: rep.equal,
        unidir_bound: unidir,
    })
}

#[derive(Serialize)]
struct BleReport {
    config: ble::BleConfig,
    solution: ble::BleSolution,
    ideal_reference_dm: f64,
    lint: Vec<String>,
    multiint: Option<ble::MultiIntBleReport>,
}

pub fn ble(a: BleArgs) -> Result<()> {
    let base = HardwareProfile::default();
    let default = if a.hw.da.is_none() && a.hw.profile.is_none() { ble::ble_hardware(&base) } else { base };
    let hw = a.hw.profile(default)?;
    let eta = a.eta_joint.0;
    let (lo, hi) = ble::DEFAULT_RANGE;
    if !a.allow_wide && !(lo - 1e-12..=hi + 1e-12).contains(&eta) {
        return Err(Error::InvalidParams(format!(
            "joint duty-cycle {:.4}% outside {:.2}%..{:.0}% (pass --allow-wide to override)",
            eta * 100.0,
            lo * 100.0,
            hi * 100.0
        ))
        .into());
    }
    let mode = match a.mode {
        BleModeArg::Unidir => BleMode::NonConnectableUnidir,
        BleModeArg::Bidir => BleMode::ConnectableBidir,
    };
    let ov = BleOverheads { mean_delay_in_ta: a.mean_delay, ..Default::default() };
    let s = ble::ble_solve(DutyCycle::new(eta)?, &ov, mode, &hw)?;
    let config = ble::ble_config(&s, !a.no_round);
    let lint = ble::compliance_lint(&config);
    for w in &lint {
        eprintln!("warning: {w}");
    }
    let multiint = a.multiint_n.map(|n| ble::multiint_ble_report(n, &ov)).transpose()?;
    if let Some(m) = &multiint {
        eprintln!("warning: {}", m.warning);
    }
    let rep = BleReport { config, solution: s, ideal_reference_dm: ble::ideal_reference_dm(eta, mode, &hw)?, lint, multiint };
    print_json(&rep)?;
    if let Some(p) = &a.out {
        let m = RunManifest::start("ble", &hw, None).finish();
        output::write_json(p, &WithManifest { manifest: &m, result: &rep })?;
    }
    if a.assert && !rep.lint.is_empty() {
        return Err(AssertFailed(rep.lint.join("; ")).into());
    }
    Ok(())
}

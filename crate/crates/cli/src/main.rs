mod commands;
mod output;
mod parse;
mod svg;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use parse::{Duty, DutyRange, SchemeArg, Secs};

/// Parametrize, analyze and simulate periodic-interval neighbor discovery.
#[derive(Parser, Debug)]
#[command(name = "pind", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone, Default)]
pub struct HwArgs {
    /// Hardware profile JSON (keys da_us, ds_min_us, drt_us, dtr_us, fclk_hz, alpha)
    #[arg(long, global = true)]
    profile: Option<PathBuf>,
    /// Beacon duration, e.g. 32us
    #[arg(long, global = true)]
    da: Option<Secs>,
    /// Minimum scan window, e.g. 1ms
    #[arg(long = "ds-min", global = true)]
    ds_min: Option<Secs>,
    /// Receive-to-transmit turnaround
    #[arg(long, global = true)]
    drt: Option<Secs>,
    /// Transmit-to-receive turnaround
    #[arg(long, global = true)]
    dtr: Option<Secs>,
    /// Sleep-clock frequency in Hz
    #[arg(long, global = true)]
    fclk: Option<f64>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Compute protocol parameters for a duty-cycle
    Param(ParamArgs),
    /// Compare against slotted protocols and print gain tables
    Compare(CompareArgs),
    /// Monte Carlo discovery simulation
    Simulate(SimulateArgs),
    /// Exact worst case over all initial offsets
    Sweep(SweepArgs),
    /// Exhaustive parameter grid search against SingleInt
    Search(SearchArgs),
    /// Lower latency bound and SingleInt optimality check
    Bound(BoundArgs),
    /// BLE advertising and scanning configuration
    Ble(BleArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Accounting {
    Surcharge,
    Schedule,
}

#[derive(Args, Debug)]
pub struct ParamArgs {
    #[arg(long)]
    scheme: SchemeArg,
    #[arg(long)]
    eta: Duty,
    /// Skip the conservative SingleInt duty-cycle ceiling
    #[arg(long)]
    force: bool,
    /// Scan-window extension in sleep-clock ticks (blocking-compensated scheme)
    #[arg(long, default_value_t = 0)]
    bc_ext_ticks: u32,
    #[arg(long, value_enum, default_value_t = Accounting::Surcharge)]
    accounting: Accounting,
    /// Also write the JSON result here
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    hw: HwArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SearchlightArg {
    Verbatim,
    Consistent,
}

#[derive(Args, Debug)]
pub struct CompareArgs {
    /// Duty-cycle or lo:hi:n
    #[arg(long, default_value = "0.002:0.0155:28")]
    eta: DutyRange,
    /// Blocking probability the slot lengths are calibrated to
    #[arg(long, default_value = "0.0019")]
    pblk: Duty,
    #[arg(long, value_enum, default_value_t = SearchlightArg::Consistent)]
    searchlight: SearchlightArg,
    #[arg(long, default_value_t = 33)]
    nihao_m: u32,
    #[arg(long, default_value_t = 2)]
    nihao_gamma: u32,
    #[arg(long)]
    csv: Option<PathBuf>,
    #[arg(long)]
    svg: Option<PathBuf>,
    #[arg(long)]
    json: Option<PathBuf>,
    #[command(flatten)]
    hw: HwArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Oneway,
    Twoway,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ClockArg {
    Ideal,
    Quantized,
    QuantizedCorrected,
}

#[derive(Args, Debug)]
pub struct SimulateArgs {
    #[arg(long)]
    scheme: SchemeArg,
    #[arg(long)]
    eta: Duty,
    #[arg(long, default_value_t = 1000)]
    trials: u64,
    #[arg(long, value_enum, default_value_t = ModeArg::Twoway)]
    mode: ModeArg,
    #[arg(long, value_enum, default_value_t = ClockArg::Ideal)]
    clock: ClockArg,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value = "35s")]
    timeout: Secs,
    /// Maximum random advertising delay, drawn in 625 us steps
    #[arg(long)]
    ble_delay: Option<Secs>,
    /// Ignore turnaround blackouts around own transmissions
    #[arg(long)]
    no_turnarounds: bool,
    #[arg(long)]
    csv: Option<PathBuf>,
    #[arg(long)]
    json: Option<PathBuf>,
    /// Latency CDF plot
    #[arg(long)]
    svg: Option<PathBuf>,
    /// Exit with status 4 unless the 3-sigma binomial interval of the failure rate contains this value
    #[arg(long)]
    assert_rate: Option<f64>,
    #[command(flatten)]
    hw: HwArgs,
}

#[derive(Args, Debug)]
pub struct SweepArgs {
    #[arg(long)]
    scheme: SchemeArg,
    #[arg(long)]
    eta: Duty,
    #[arg(long, value_enum, default_value_t = ClockArg::Ideal)]
    clock: ClockArg,
    /// Give up on offsets without discovery after this long (default 4x the analytic latency)
    #[arg(long)]
    limit: Option<Secs>,
    #[arg(long)]
    json: Option<PathBuf>,
    /// Exit with status 4 if the worst case exceeds 1.01x the analytic latency
    #[arg(long)]
    assert: bool,
    #[command(flatten)]
    hw: HwArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum GridArg {
    Coarse,
    Desk,
    Full,
}

#[derive(Args, Debug)]
pub struct SearchArgs {
    #[arg(long, value_enum, default_value_t = GridArg::Desk)]
    grid: GridArg,
    #[arg(long, default_value_t = pind_core::optsearch::DEFAULT_BUDGET)]
    budget: usize,
    /// Report rows whose gap is below this
    #[arg(long, default_value = "500ms")]
    report_below: Secs,
    #[arg(long)]
    csv: Option<PathBuf>,
    #[arg(long)]
    json: Option<PathBuf>,
    /// Exit with status 4 on any violation
    #[arg(long)]
    assert: bool,
    #[command(flatten)]
    hw: HwArgs,
}

#[derive(Args, Debug)]
pub struct BoundArgs {
    #[arg(long)]
    eta: Duty,
    /// Reception duty-cycle for the one-way bound (requires --beta)
    #[arg(long, requires = "beta")]
    rho: Option<Duty>,
    #[arg(long, requires = "rho")]
    beta: Option<Duty>,
    #[command(flatten)]
    hw: HwArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BleModeArg {
    Unidir,
    Bidir,
}

#[derive(Args, Debug)]
pub struct BleArgs {
    /// Joint duty-cycle of the device pair
    #[arg(long)]
    eta_joint: Duty,
    #[arg(long, value_enum, default_value_t = BleModeArg::Unidir)]
    mode: BleModeArg,
    /// Keep exact values instead of the 0.625 ms grid
    #[arg(long)]
    no_round: bool,
    /// Accept joint duty-cycles outside 2.15 % .. 10 %
    #[arg(long)]
    allow_wide: bool,
    /// Charge the mean random delay to the advertising interval
    #[arg(long)]
    mean_delay: bool,
    /// Also print the reduced-delay report for n MultiInt devices
    #[arg(long)]
    multiint_n: Option<u32>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Exit with status 4 if the configuration fails the range lint
    #[arg(long)]
    assert: bool,
    #[command(flatten)]
    hw: HwArgs,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let r = match cli.command {
        Command::Param(a) => commands::param(a),
        Command::Compare(a) => commands::compare(a),
        Command::Simulate(a) => commands::simulate(a),
        Command::Sweep(a) => commands::sweep(a),
        Command::Search(a) => commands::search(a),
        Command::Bound(a) => commands::bound(a),
        Command::Ble(a) => commands::ble(a),
    };
    match r {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(commands::exit_code(&e))
        }
    }
}

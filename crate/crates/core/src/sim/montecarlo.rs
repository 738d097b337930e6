use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::bc::apply_bc;
use super::clock::ClockModel;
use super::detect::{first_discovery, RadioTiming};
use super::rng::{trial_rng, uniform_time};
use super::schedule::{gen_schedule_with, DeviceSchedule, NsParams, Phases};
use crate::error::{Error, Result};
use crate::timebase::{HardwareProfile, PiParams, TimeNs};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum LinkMode {
    /// Device A only advertises, device B only scans.
    OneWay,
    /// Both devices advertise and scan.
    TwoWay,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScenarioConfig {
    pub params: PiParams,
    pub hw: HardwareProfile,
    pub mode: LinkMode,
    pub clock: ClockModel,
    pub timeout: TimeNs,
    pub trials: u64,
    pub master_seed: u64,
    /// Predicted worst-case latency in seconds; a trial fails above 1.01x this value.
    pub dm_predicted: f64,
    /// Per-interval advertising delay, uniform over multiples of `step` up to `max`.
    pub ble_random_delay: Option<RandomDelay>,
    /// Apply turnaround blackouts around own transmissions.
    pub turnarounds: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct RandomDelay {
    pub max: TimeNs,
    pub step: TimeNs,
}

impl ScenarioConfig {
    pub fn new(params: PiParams, hw: HardwareProfile, mode: LinkMode, dm_predicted: f64) -> Self {
        ScenarioConfig {
            params,
            hw,
            mode,
            clock: ClockModel::Ideal,
            timeout: TimeNs::from_ms(35_000),
            trials: 1000,
            master_seed: 1,
            dm_predicted,
            ble_random_delay: None,
            turnarounds: true,
        }
    }

    /// min(timeout, 1.2 dm + Ts)
    pub fn horizon(&self) -> TimeNs {
        let h = TimeNs::from_secs_f64(1.2 * self.dm_predicted + self.params.ts);
        h.min(self.timeout)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct SimOutcome {
    pub trial: u64,
    pub seed: u64,
    /// `None` is a timeout (nothing received before the horizon).
    pub latency_a_discovers_b: Option<TimeNs>,
    pub latency_b_discovers_a: Option<TimeNs>,
    pub failed: bool,
}

impl SimOutcome {
    /// Latency statistic of the trial: B's latency for one-way, the later of
    /// both directions for two-way. `None` if any required direction timed out.
    pub fn latency(&self, mode: LinkMode) -> Option<TimeNs> {
        match mode {
            LinkMode::OneWay => self.latency_b_discovers_a,
            LinkMode::TwoWay => Some(self.latency_a_discovers_b?.max(self.latency_b_discovers_a?)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct McResult {
    pub outcomes: Vec<SimOutcome>,
    pub failures: u64,
    pub failure_rate: f64,
    /// Failures counted per direction (two-way: up to two per trial).
    pub directional_failures: u64,
    /// Mean of the per-trial latency statistic over trials that did not time out (seconds).
    pub mean_latency: f64,
    /// Sorted latencies (seconds) of non-timed-out trials.
    pub sorted_latencies: Vec<f64>,
}

impl McResult {
    /// Empirical quantile (nearest rank) of the trial latency statistic.
    pub fn quantile(&self, q: f64) -> Option<f64> {
        let v = &self.sorted_latencies;
        if v.is_empty() {
            return None;
        }
        let idx = ((q * v.len() as f64).ceil() as usize).clamp(1, v.len()) - 1;
        Some(v[idx])
    }

    /// CDF sampled at up to `points` evenly spaced ranks.
    pub fn cdf(&self, points: usize) -> Vec<(f64, f64)> {
        let v = &self.sorted_latencies;
        let n = self.outcomes.len().max(1) as f64;
        if v.is_empty() || points == 0 {
            return Vec::new();
        }
        let step = (v.len() / points).max(1);
        let mut out: Vec<(f64, f64)> = (step - 1..v.len()).step_by(step).map(|i| (v[i], (i + 1) as f64 / n)).collect();
        if out.last().map(|l| l.0) != v.last().copied() {
            out.push((v[v.len() - 1], v.len() as f64 / n));
        }
        out
    }
}

fn device_schedule(cfg: &ScenarioConfig, n: &NsParams, rng: &mut rand_chacha::ChaCha8Rng, horizon: TimeNs) -> DeviceSchedule {
    let phases = Phases { scan: uniform_time(rng, n.ts), adv: uniform_time(rng, n.ta) };
    let mut jitter_rng = rng.clone();
    // jitter draws come from a fork so phase draws stay aligned across delay settings
    jitter_rng.set_word_pos(1 << 40);
    let mut jitter = || match cfg.ble_random_delay {
        Some(d) if d.step.0 > 0 => d.step * jitter_rng.gen_range(0..=d.max.0 / d.step.0),
        Some(d) => TimeNs(jitter_rng.gen_range(0..=d.max.0)),
        None => TimeNs::ZERO,
    };
    let s = gen_schedule_with(n, cfg.clock, phases, horizon, &mut jitter);
    let s = if cfg.params.bc_enabled && cfg.mode == LinkMode::TwoWay { apply_bc(&s, &cfg.hw) } else { s };
    s.beacons_from(TimeNs::ZERO)
}

/// Run one trial.
pub fn run_trial(cfg: &ScenarioConfig, trial: u64) -> SimOutcome {
    let n = NsParams::from_pi(&cfg.params);
    let horizon = cfg.horizon();
    let mut rng = trial_rng(cfg.master_seed, trial);
    let mut a = device_schedule(cfg, &n, &mut rng, horizon);
    // advance to a fresh block of the stream for device B
    rng.set_word_pos(1 << 41);
    let mut b = device_schedule(cfg, &n, &mut rng, horizon);
    let radio = if cfg.turnarounds {
        RadioTiming { collisions: false, ..RadioTiming::from_hw(&cfg.hw) }
    } else {
        RadioTiming::ideal()
    };
    let limit = TimeNs::from_secs_f64(1.01 * cfg.dm_predicted);
    let lat = |t: Option<TimeNs>| t.map(|t| t + n.da).filter(|&l| l <= horizon);
    let (ab, ba) = match cfg.mode {
        LinkMode::OneWay => {
            a.windows.clear();
            b.beacons.clear();
            (None, lat(first_discovery(&b, &a, &[], radio)))
        }
        LinkMode::TwoWay => (lat(first_discovery(&a, &b, &[], radio)), lat(first_discovery(&b, &a, &[], radio))),
    };
    let out = SimOutcome {
        trial,
        seed: cfg.master_seed,
        latency_a_discovers_b: ab,
        latency_b_discovers_a: ba,
        failed: false,
    };
    let failed = out.latency(cfg.mode).is_none_or(|l| l > limit);
    SimOutcome { failed, ..out }
}

pub fn monte_carlo(cfg: &ScenarioConfig) -> Result<McResult> {
    if cfg.trials == 0 {
        return Err(Error::InvalidParams("trials must be >= 1".into()));
    }
    if cfg.timeout.as_secs_f64() <= cfg.dm_predicted {
        return Err(Error::InvalidParams("timeout must exceed the predicted latency".into()));
    }
    cfg.params.validate()?;
    let outcomes: Vec<SimOutcome> = (0..cfg.trials).into_par_iter().map(|t| run_trial(cfg, t)).collect();
    let limit = TimeNs::from_secs_f64(1.01 * cfg.dm_predicted);
    let dir_fail = |l: Option<TimeNs>| u64::from(l.is_none_or(|l| l > limit));
    let directional_failures = outcomes
        .iter()
        .map(|o| match cfg.mode {
            LinkMode::OneWay => dir_fail(o.latency_b_discovers_a),
            LinkMode::TwoWay => dir_fail(o.latency_a_discovers_b) + dir_fail(o.latency_b_discovers_a),
        })
        .sum();
    let failures = outcomes.iter().filter(|o| o.failed).count() as u64;
    let mut sorted: Vec<f64> = outcomes.iter().filter_map(|o| o.latency(cfg.mode)).map(|l| l.as_secs_f64()).collect();
    sorted.sort_by(f64::total_cmp);
    let mean = if sorted.is_empty() { f64::NAN } else { sorted.iter().sum::<f64>() / sorted.len() as f64 };
    Ok(McResult {
        failure_rate: failures as f64 / cfg.trials as f64,
        failures,
        directional_failures,
        mean_latency: mean,
        sorted_latencies: sorted,
        outcomes,
    })
}

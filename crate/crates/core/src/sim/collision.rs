use rayon::prelude::*;

use super::clock::ClockModel;
use super::detect::{first_discovery, RadioTiming};
use super::rng::{trial_rng, uniform_time};
use super::schedule::{gen_schedule, DeviceSchedule, NsParams, Phases};
use super::bc::apply_bc;
use crate::timebase::{HardwareProfile, PiParams, TimeNs};

/// Probability that the discovery beacon of one device collides with a beacon
/// of any of the other `n - 1` devices (each sending two compensation beacons
/// per scan interval).
pub fn collision_prob(n_devices: u32, p: &PiParams) -> f64 {
    let n = n_devices as f64;
    1.0 - (-2.0 * (n - 1.0) * (p.da / p.ta + 2.0 * p.da / p.ts)).exp()
}

/// Monte Carlo counterpart of [`collision_prob`] with a passive listener.
///
/// Every trial places `n_devices` senders running `p` (with blocking
/// compensation when enabled) and one receive-only listener at uniform
/// phases. The first beacon of sender 0 that the listener would receive in
/// the absence of other senders is checked for overlap with any beacon of
/// the remaining `n - 1` senders. Returns (collided trials, trials).
pub fn collision_monte_carlo(n_devices: u32, p: &PiParams, hw: &HardwareProfile, trials: u64, seed: u64) -> (u64, u64) {
    let n = NsParams::from_pi(p);
    let horizon = (n.analytic_dm().unwrap_or(n.ts * 4) * 12) / 10 + n.ts;
    let collided: u64 = (0..trials)
        .into_par_iter()
        .map(|trial| {
            let mut rng = trial_rng(seed, trial);
            let senders: Vec<DeviceSchedule> = (0..n_devices)
                .map(|_| {
                    let ph = Phases { scan: uniform_time(&mut rng, n.ts), adv: uniform_time(&mut rng, n.ta) };
                    let s = gen_schedule(&n, ClockModel::Ideal, ph, horizon);
                    let s = if p.bc_enabled { apply_bc(&s, hw) } else { s };
                    s.beacons_from(TimeNs::ZERO)
                })
                .collect();
            let ph = Phases { scan: uniform_time(&mut rng, n.ts), adv: TimeNs::ZERO };
            let mut listener = gen_schedule(&n, ClockModel::Ideal, ph, horizon);
            listener.beacons.clear();
            let Some(t) = first_discovery(&listener, &senders[0], &[], RadioTiming::ideal()) else {
                return 0;
            };
            let hit = senders[1..].iter().any(|o| {
                let i = o.beacons.partition_point(|&b| b + o.da <= t);
                i < o.beacons.len() && o.beacons[i] < t + n.da
            });
            u64::from(hit)
        })
        .sum();
    (collided, trials)
}

//! Lower bounds on worst-case discovery latency and the check that SingleInt meets them.
//!
//! All latencies here are in seconds.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::singleint::relaxed_dm;

/// Reception/transmission split of a device pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundInputs {
    pub rho: f64,
    pub beta: f64,
    pub eta: f64,
    pub da: f64,
    /// Mean beacon spacing `da / beta`.
    pub lambda: f64,
    /// Minimum number of beacons needed to hit a reception window, `ceil(1/rho)`.
    pub n: u64,
}

impl BoundInputs {
    pub fn new(rho: f64, beta: f64, da: f64) -> Result<Self> {
        if !(rho > 0.0 && beta > 0.0 && rho + beta < 1.0) || da.is_nan() || da <= 0.0 {
            return Err(Error::InvalidParams(format!("need rho, beta > 0, rho + beta < 1, da > 0 (rho={rho}, beta={beta})")));
        }
        Ok(BoundInputs { rho, beta, eta: rho + beta, da, lambda: da / beta, n: min_beacons(rho) })
    }

    pub fn unidir(&self) -> f64 {
        self.n as f64 * self.lambda
    }
}

/// `ceil(1/rho)`, tolerant of 1/rho landing a hair above an integer.
fn min_beacons(rho: f64) -> u64 {
    let inv = 1.0 / rho;
    let r = inv.round();
    if (inv - r).abs() <= 1e-9 * r { r as u64 } else { inv.ceil() as u64 }
}

/// Lowest worst-case latency any one-way protocol can guarantee with reception
/// duty-cycle `rho` and transmission duty-cycle `beta`.
pub fn unidir_bound(rho: f64, beta: f64, da: f64) -> f64 {
    min_beacons(rho) as f64 * da / beta
}

/// Lowest worst-case latency for two devices sharing the same duty-cycle `eta`.
pub fn sym_bound(eta: f64, da: f64) -> f64 {
    let two = 2.0 / eta;
    [two.floor(), two.ceil()]
        .into_iter()
        .filter(|&k| eta * k > 1.0)
        .map(|k| k * k * da / (eta * k - 1.0))
        .fold(f64::INFINITY, f64::min)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OptimalityReport {
    pub eta: f64,
    pub bound: f64,
    pub singleint_relaxed_dm: f64,
    /// Order M chosen among the neighbours of 2/eta - 1.
    pub m: i64,
    pub equal: bool,
}

/// Compare SingleInt (beacon duration excluded from the latency, included in
/// the duty-cycle) against [`sym_bound`].
pub fn check_singleint_optimal(eta: f64, da: f64) -> OptimalityReport {
    let x = 2.0 / eta - 1.0;
    let (m, dm) = [x.floor() as i64, x.ceil() as i64]
        .into_iter()
        .filter(|&m| eta * (m + 1) as f64 > 1.0)
        .map(|m| (m, relaxed_dm(eta, m, da)))
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .unwrap_or((0, f64::INFINITY));
    let bound = sym_bound(eta, da);
    let equal = ((dm - bound) / bound).abs() <= 1e-9;
    OptimalityReport { eta, bound, singleint_relaxed_dm: dm, m, equal }
}

/// `n` log-spaced duty-cycles in `[lo, hi]`.
pub fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    let (a, b) = (lo.ln(), hi.ln());
    (0..n).map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    const DA: f64 = 32e-6;

    #[test]
    fn unidir_examples() {
        assert_relative_eq!(unidir_bound(0.5, 0.5, DA), 128e-6, max_relative = 1e-12);
        assert_relative_eq!(unidir_bound(0.01, 0.01, DA), 0.32, max_relative = 1e-12);
        assert_relative_eq!(unidir_bound(1.0 / 3.0, 0.001, DA), 0.096, max_relative = 1e-12);
        let b = BoundInputs::new(0.01, 0.01, DA).unwrap();
        assert_eq!(b.n, 100);
        assert_relative_eq!(b.unidir(), 0.32, max_relative = 1e-12);
        assert!(BoundInputs::new(0.6, 0.5, DA).is_err());
    }

    #[test]
    fn sym_examples() {
        assert_relative_eq!(sym_bound(0.02, DA), 0.32, max_relative = 1e-9);
        assert_relative_eq!(sym_bound(0.01, DA), 1.28, max_relative = 1e-9);
        assert_relative_eq!(sym_bound(0.002, DA), 32.0, max_relative = 1e-9);
    }

    #[test]
    fn sym_is_best_integer_split() {
        for &eta in &[0.0131, 0.003, 0.07, 0.3] {
            let two = 2.0f64 / eta;
            let via_unidir = [two.floor(), two.ceil()]
                .into_iter()
                .map(|k| unidir_bound(1.0 / k, eta - 1.0 / k, DA))
                .fold(f64::INFINITY, f64::min);
            assert_relative_eq!(sym_bound(eta, DA), via_unidir, max_relative = 1e-9);
        }
    }

    #[test]
    fn optimality_examples() {
        for &e in &[0.02, 0.002, 0.0131] {
            let r = check_singleint_optimal(e, DA);
            assert!(r.equal, "{r:?}");
        }
        assert_relative_eq!(check_singleint_optimal(0.02, DA).bound, 0.32, max_relative = 1e-9);
    }

    #[test]
    fn optimality_on_log_grid() {
        let g = log_grid(0.002, 0.5, 1000);
        assert_eq!(g.len(), 1000);
        assert!(g.iter().all(|&e| check_singleint_optimal(e, DA).equal));
    }

    #[test]
    fn relaxed_form_matches_duty_inversion() {
        // with da dropped from the window condition, Ta = ds and Ts = (M+1) Ta;
        // the beacon is still charged: eta = ds/Ts + da/Ta
        for &e in &[0.005, 0.02, 0.1] {
            let r = check_singleint_optimal(e, DA);
            let m1 = (r.m + 1) as f64;
            let ta = DA / (e - 1.0 / m1);
            let p = crate::PiParams::raw(ta, m1 * ta, ta, DA);
            assert_relative_eq!(p.plain_duty(1.0), e, max_relative = 1e-12);
            assert_relative_eq!(m1 * ta, r.singleint_relaxed_dm, max_relative = 1e-9);
        }
    }

    proptest! {
        #[test]
        fn non_integer_splits_never_beat_integer_ones(eta in 0.002f64..0.3, t in 0.0f64..1.0) {
            let k_best = (1..=(2.0 / eta).ceil() as u64 * 2)
                .map(|k| k as f64)
                .filter(|&k| 1.0 / k < eta)
                .map(|k| unidir_bound(1.0 / k, eta - 1.0 / k, DA))
                .fold(f64::INFINITY, f64::min);
            let rho = eta * (0.001 + 0.998 * t);
            prop_assert!(unidir_bound(rho, eta - rho, DA) >= k_best * (1.0 - 1e-12));
            prop_assert!(sym_bound(eta, DA) <= k_best * (1.0 + 1e-9));
        }

        #[test]
        fn sym_bound_decreases_with_eta(eta in 0.002f64..0.4, f in 1.01f64..2.0) {
            prop_assert!(sym_bound((eta * f).min(0.9), DA) <= sym_bound(eta, DA));
        }
    }
}

//! Deterministic discovery simulator on an integer-nanosecond time line.

pub mod bc;
pub mod clock;
pub mod collision;
pub mod detect;
pub mod montecarlo;
pub mod oracle;
pub mod rng;
pub mod schedule;

pub use bc::apply_bc;
pub use clock::ClockModel;
pub use collision::{collision_monte_carlo, collision_prob};
pub use detect::{detect_discovery, first_discovery, RadioTiming};
pub use montecarlo::{monte_carlo, run_trial, LinkMode, McResult, RandomDelay, ScenarioConfig, SimOutcome};
pub use oracle::{clocked_sweep, offset_sweep_oracle, periodic_sweep, sweep_schedules, OracleResult};
pub use schedule::{gen_schedule, gen_schedule_with, DeviceSchedule, NsParams, Phases, Window};

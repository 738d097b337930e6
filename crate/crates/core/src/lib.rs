//! Parametrization, worst-case latency analysis and simulation of
//! periodic-interval (PI) neighbor discovery protocols.
//!
//! The analytic layer works in `f64` seconds; the simulator in integer
//! nanoseconds ([`TimeNs`]).

pub mod ble;
pub mod bounds;
pub mod error;
pub mod multiint;
pub mod optsearch;
pub mod sim;
pub mod singleint;
pub mod slotted;
pub mod timebase;

pub use error::{Constraint, Error, Result};
pub use timebase::{duty_cycle, tick_quantize, DutyCycle, HardwareProfile, PiParams, Scheme, TimeNs};

//! Analysis and design of sixth-order triple-coupled transformer LC tanks.
//!
//! - [`tank`]: parameter model and realizability checks
//! - [`impedance`]: differential-mode input impedance, two independent paths
//! - [`modes`]: the three resonance modes from the characteristic cubic
//! - [`designer`]: ratio maps and third-harmonic placement search
//! - [`metrics`]: oscillator figures of merit
//! - [`config`] / [`export`] / [`cli`]: command-line plumbing

pub mod cli;
pub mod config;
pub mod designer;
pub mod export;
pub mod impedance;
pub mod metrics;
pub mod modes;
pub mod tank;
pub mod units;

pub use impedance::{FrequencyGrid, ImpedanceSweep, Method, Spacing};
pub use modes::{CubicCoefficients, ModeSet};
pub use tank::{LossSpec, TankParams};

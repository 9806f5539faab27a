//! Single-shot THz link discovery by spectrum shaping.
//!
//! A two-antenna receiver with a delay line turns the direction of arrival
//! into a ripple across the received magnitude spectrum. This crate
//! synthesizes such spectra, estimates angles and path-length differences
//! from one measurement, and computes Cramér–Rao bounds against array
//! baselines.

pub mod channel;
pub mod crb;
pub mod error;
pub mod estimators;
pub mod exec;
pub mod montecarlo;
pub mod scenario;
pub mod special;
pub mod synth;
pub mod zeta;

pub use error::{Error, Result};
pub use exec::Execution;
pub use scenario::{
    load_scenario, nyquist_lag, FrequencyGrid, Path, Scenario, TxMode, SPEED_OF_LIGHT,
};
pub use synth::{MeanField, ObservedSpectrum};
pub use zeta::ZetaSpectrum;

//! Experiment description: frequency grid, propagation paths, receiver
//! geometry and noise level.
//!
//! Scenarios are read from and written to JSON. Every constructor path ends
//! in [`Scenario::validate`], so a `Scenario` value always satisfies its
//! invariants.

use std::fs;
use std::path::Path as FsPath;

use serde::{Deserialize, Serialize};

use crate::channel::{ChannelKind, ChannelProfile};
use crate::error::{Error, Result};

/// Speed of light in vacuum, m/s (exact).
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Delay-line factor of the transmitter pair used for joint AoD/DoA.
pub const TX_PAIR_DELAY_FACTOR: f64 = 3.0;

/// Uniform sampling of the measured band.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrequencyGrid {
    pub f_start_hz: f64,
    pub f_stop_hz: f64,
    pub n_samples: usize,
}

impl Default for FrequencyGrid {
    /// 600 samples spaced 1.5 GHz apart starting at 0.1 THz.
    fn default() -> Self {
        FrequencyGrid::with_spacing(100e9, 1.0e12, 1.5e9)
    }
}

impl FrequencyGrid {
    pub fn new(f_start_hz: f64, f_stop_hz: f64, n_samples: usize) -> Result<Self> {
        let grid = FrequencyGrid {
            f_start_hz,
            f_stop_hz,
            n_samples,
        };
        grid.validate()?;
        Ok(grid)
    }

    /// Largest grid starting at `f_start_hz` with spacing `df_hz` that does
    /// not extend past `f_max_hz`.
    pub fn with_spacing(f_start_hz: f64, f_max_hz: f64, df_hz: f64) -> Self {
        let steps = ((f_max_hz - f_start_hz) / df_hz + 1e-9).floor() as usize;
        FrequencyGrid {
            f_start_hz,
            f_stop_hz: f_start_hz + steps as f64 * df_hz,
            n_samples: steps + 1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.f_start_hz.is_finite() && self.f_start_hz > 0.0) {
            return Err(Error::Validation("grid f_start must be > 0".into()));
        }
        if !(self.f_stop_hz.is_finite() && self.f_stop_hz > self.f_start_hz) {
            return Err(Error::Validation("grid f_stop must exceed f_start".into()));
        }
        if self.n_samples < 2 {
            return Err(Error::Validation("grid needs n_samples >= 2".into()));
        }
        Ok(())
    }

    /// Sample spacing Δf.
    pub fn spacing(&self) -> f64 {
        (self.f_stop_hz - self.f_start_hz) / (self.n_samples - 1) as f64
    }

    /// Occupied bandwidth `n·Δf`, the reciprocal of one un-padded lag bin.
    pub fn bandwidth(&self) -> f64 {
        self.n_samples as f64 * self.spacing()
    }

    pub fn freq(&self, k: usize) -> f64 {
        self.f_start_hz + k as f64 * self.spacing()
    }

    pub fn frequencies(&self) -> Vec<f64> {
        (0..self.n_samples).map(|k| self.freq(k)).collect()
    }
}

/// Largest unambiguous lag of the sampled spectrum, `1/(2Δf)` seconds.
pub fn nyquist_lag(grid: &FrequencyGrid) -> f64 {
    1.0 / (2.0 * grid.spacing())
}

/// One propagation path as seen by the receiver pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Path {
    pub theta_deg: f64,
    /// Extra length relative to the first path.
    pub excess_length_m: f64,
    /// Amplitude gain; power in dB is `20·log10(gain)`.
    pub gain_linear: f64,
}

impl Path {
    pub fn new(theta_deg: f64, excess_length_m: f64, gain_linear: f64) -> Self {
        Path {
            theta_deg,
            excess_length_m,
            gain_linear,
        }
    }

    pub fn los(theta_deg: f64) -> Self {
        Path::new(theta_deg, 0.0, 1.0)
    }

    /// Relative time of flight.
    pub fn delay_s(&self) -> f64 {
        self.excess_length_m / SPEED_OF_LIGHT
    }

    pub fn power_db(&self) -> f64 {
        20.0 * self.gain_linear.log10()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum TxMode {
    /// Single transmit antenna.
    #[default]
    Single,
    /// Transmit pair with a delay line on the second element.
    Pair,
}

fn default_delay_factor() -> f64 {
    TX_PAIR_DELAY_FACTOR
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    /// Receiver antenna gap D.
    pub d_m: f64,
    pub grid: FrequencyGrid,
    #[serde(default)]
    pub tx_mode: TxMode,
    #[serde(default = "default_delay_factor")]
    pub tx_delay_factor: f64,
    pub paths: Vec<Path>,
    /// Angle of departure; required for `tx_mode = pair`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub aod_deg: Option<f64>,
    pub channel: ChannelProfile,
    /// Per-antenna SNR: mean signal power over N0/2.
    pub snr_db: f64,
    #[serde(default)]
    pub seed: u64,
}

impl Scenario {
    /// Line-of-sight scenario with the default grid and a flat channel.
    pub fn los(theta_deg: f64, d_m: f64) -> Self {
        Scenario {
            d_m,
            grid: FrequencyGrid::default(),
            tx_mode: TxMode::Single,
            tx_delay_factor: TX_PAIR_DELAY_FACTOR,
            paths: vec![Path::los(theta_deg)],
            aod_deg: None,
            channel: ChannelProfile::flat(),
            snr_db: 20.0,
            seed: 0,
        }
    }

    /// Transmit-pair scenario with DoA `theta_i_deg` and AoD `theta_d_deg`.
    pub fn tx_pair(theta_i_deg: f64, theta_d_deg: f64, d_m: f64) -> Self {
        Scenario {
            tx_mode: TxMode::Pair,
            ..Scenario::los(theta_i_deg, d_m)
        }
        .with_aod(theta_d_deg)
    }

    fn with_aod(mut self, theta_d_deg: f64) -> Self {
        self.aod_deg = Some(theta_d_deg);
        self
    }

    /// AoD of a transmit-pair scenario.
    pub fn aod(&self) -> Result<f64> {
        self.aod_deg
            .ok_or_else(|| Error::Validation("tx_mode pair requires aod_deg".into()))
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.d_m.is_finite() && self.d_m > 0.0) {
            return Err(Error::Validation("d_m must be > 0".into()));
        }
        self.grid.validate()?;
        if self.paths.is_empty() {
            return Err(Error::Validation("at least one path required".into()));
        }
        for (i, p) in self.paths.iter().enumerate() {
            if !(0.0..=180.0).contains(&p.theta_deg) {
                return Err(Error::Validation(format!(
                    "path {i}: theta out of [0,180] ({})",
                    p.theta_deg
                )));
            }
            if !(p.excess_length_m.is_finite() && p.excess_length_m >= 0.0) {
                return Err(Error::Validation(format!(
                    "path {i}: excess_length_m must be >= 0"
                )));
            }
            if !(p.gain_linear.is_finite() && p.gain_linear > 0.0) {
                return Err(Error::Validation(format!(
                    "path {i}: gain_linear must be > 0"
                )));
            }
        }
        if self.paths[0].excess_length_m != 0.0 {
            return Err(Error::Validation(
                "first path must have excess_length_m = 0".into(),
            ));
        }
        if self.tx_mode == TxMode::Pair {
            if self.paths.len() != 1 {
                return Err(Error::Validation(
                    "tx_mode pair requires exactly one path".into(),
                ));
            }
            let aod = self.aod()?;
            if !(0.0..=180.0).contains(&aod) {
                return Err(Error::Validation(format!(
                    "aod theta out of [0,180] ({aod})"
                )));
            }
            if self.tx_delay_factor != TX_PAIR_DELAY_FACTOR {
                return Err(Error::Validation("tx_delay_factor must be 3".into()));
            }
        }
        if self.snr_db.is_nan() {
            return Err(Error::Validation("snr_db must be a number".into()));
        }
        self.channel.validate(&self.grid)
    }

    /// Copy with the grid refined to `df_hz` over the same band, when any
    /// path-length difference would otherwise alias past the Nyquist lag.
    pub fn refined_for_distances(&self, threshold_m: f64, df_hz: f64) -> Scenario {
        let needs = self.paths.iter().any(|p| p.excess_length_m > threshold_m);
        let mut out = self.clone();
        if needs && self.grid.spacing() > df_hz {
            out.grid = FrequencyGrid::with_spacing(
                self.grid.f_start_hz,
                self.grid.f_stop_hz + 1e-6,
                df_hz,
            );
        }
        out
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let sc: Scenario = serde_json::from_str(text)?;
        sc.validate()?;
        Ok(sc)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn save(&self, path: impl AsRef<FsPath>) -> Result<()> {
        fs::write(path, self.to_json()? + "\n")?;
        Ok(())
    }
}

/// Reads and validates a scenario file. A tabulated channel may reference
/// its table through `table_csv`, resolved relative to the scenario file.
pub fn load_scenario(path: impl AsRef<FsPath>) -> Result<Scenario> {
    let path = path.as_ref();
    let text = fs::read_to_string(path)?;
    let mut sc: Scenario = serde_json::from_str(&text)?;
    if sc.channel.kind == ChannelKind::Tabulated && sc.channel.table.is_none() {
        if let Some(rel) = sc.channel.table_csv.clone() {
            let base = path.parent().unwrap_or_else(|| FsPath::new("."));
            sc.channel.table = Some(crate::channel::load_table_csv(base.join(rel))?);
        }
    }
    sc.validate()?;
    Ok(sc)
}

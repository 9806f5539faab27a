//! Received field and THz-TDS magnitude observation of the two-antenna
//! receiver.
//!
//! Everything is computed on the frequency grid. The transmitted pulse has a
//! flat unit spectrum, so the field at each antenna is just the channel
//! response times the path gain and delay phase. The second antenna sits
//! behind a delay line of length D, which turns the DoA into the ripple lag
//! `ζ(θ) = (2D/c)·sin²(θ/2)`.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

use crate::channel::{channel_response, ChannelProfile};
use crate::error::{Error, Result};
use crate::scenario::{FrequencyGrid, Scenario, TxMode, SPEED_OF_LIGHT};

/// Arrival-time offset between the two receive antennas.
pub fn delta_t(theta_deg: f64, d_m: f64) -> f64 {
    -(d_m / SPEED_OF_LIGHT) * theta_deg.to_radians().cos()
}

/// Ripple lag imposed by the delay-line shaper.
pub fn shaper_zeta(theta_deg: f64, d_m: f64) -> f64 {
    let s = (theta_deg.to_radians() / 2.0).sin();
    2.0 * d_m / SPEED_OF_LIGHT * s * s
}

/// dζ/dθ per radian: `(D/c)·sin θ`.
pub fn shaper_zeta_derivative(theta_deg: f64, d_m: f64) -> f64 {
    d_m / SPEED_OF_LIGHT * sin_deg(theta_deg)
}

/// `sin θ` that is exactly zero at 0° and 180°.
pub(crate) fn sin_deg(theta_deg: f64) -> f64 {
    if theta_deg == 0.0 || theta_deg == 180.0 {
        0.0
    } else {
        theta_deg.to_radians().sin()
    }
}

/// Lag contributed by a transmit pair with AoD `theta_d_deg`:
/// `(D/c)·(factor − cos θ_d)`.
pub fn tx_pair_lag(theta_d_deg: f64, d_m: f64, factor: f64) -> f64 {
    d_m / SPEED_OF_LIGHT * (factor - theta_d_deg.to_radians().cos())
}

/// The four harmonic lags of the transmit-pair power spectrum, in the order
/// DoA, AoD, sum, difference.
pub fn tx_pair_harmonics(theta_i_deg: f64, theta_d_deg: f64, d_m: f64) -> [f64; 4] {
    let k = d_m / SPEED_OF_LIGHT;
    let ci = theta_i_deg.to_radians().cos();
    let cd = theta_d_deg.to_radians().cos();
    [
        k * (1.0 - ci),
        k * (3.0 - cd),
        k * (4.0 - ci - cd),
        k * (2.0 - cd + ci),
    ]
}

fn phasor(f: f64, lag: f64) -> Complex64 {
    Complex64::from_polar(1.0, -2.0 * PI * f * lag)
}

/// Noise-free complex field at the detector.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MeanField {
    pub grid: FrequencyGrid,
    pub values: Vec<Complex64>,
    /// Mean received power at a single antenna, used to set N0 from SNR.
    pub antenna_power: f64,
}

impl MeanField {
    pub fn power(&self) -> Vec<f64> {
        self.values.iter().map(|v| v.norm_sqr()).collect()
    }

    pub fn magnitude(&self) -> Vec<f64> {
        self.values.iter().map(|v| v.norm()).collect()
    }

    /// Field scaled by `s` (power by `s²`).
    pub fn scaled(mut self, s: f64) -> MeanField {
        for v in &mut self.values {
            *v *= s;
        }
        self.antenna_power *= s * s;
        self
    }
}

/// One THz-TDS shot: magnitude samples plus the field they were drawn from.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ObservedSpectrum {
    pub grid: FrequencyGrid,
    pub z: Vec<f64>,
    pub mean: MeanField,
    /// Total noise power N0 of the summed field (0 when noise-free).
    pub n0: f64,
}

impl ObservedSpectrum {
    /// Noise-free observation, `z = |mean|`.
    pub fn noise_free(mean: MeanField) -> ObservedSpectrum {
        ObservedSpectrum {
            grid: mean.grid,
            z: mean.magnitude(),
            mean,
            n0: 0.0,
        }
    }

    /// Measured power spectrum `z²`.
    pub fn power(&self) -> Vec<f64> {
        self.z.iter().map(|z| z * z).collect()
    }

    pub fn write_csv<W: std::io::Write>(&self, w: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(w);
        wtr.write_record(["f_hz", "z", "mean_re", "mean_im"])?;
        for (k, (z, m)) in self.z.iter().zip(&self.mean.values).enumerate() {
            wtr.write_record([
                self.grid.freq(k).to_string(),
                z.to_string(),
                m.re.to_string(),
                m.im.to_string(),
            ])?;
        }
        wtr.flush()?;
        Ok(())
    }
}

/// Channel amplitude for a path `excess_m` longer than the reference range.
fn path_channel(grid: &FrequencyGrid, profile: &ChannelProfile, excess_m: f64) -> Result<Vec<f64>> {
    let mut p = profile.clone();
    p.range_m += excess_m;
    channel_response(grid, &p)
}

fn require_paths(scenario: &Scenario, n: usize) -> Result<()> {
    if scenario.paths.len() != n {
        return Err(Error::PathCount {
            expected: n,
            found: scenario.paths.len(),
        });
    }
    Ok(())
}

/// Receiver wiring. The variant without delay line only exists to show the
/// θ ↔ 180° − θ ambiguity it suffers from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Receiver {
    DelayLine,
    NoDelayLine,
}

/// Single-path field `a(f)·g·(1 + e^{−j2πf ζ(θ)})`.
pub fn synth_single(scenario: &Scenario) -> Result<MeanField> {
    synth_single_with(scenario, Receiver::DelayLine)
}

pub fn synth_single_with(scenario: &Scenario, receiver: Receiver) -> Result<MeanField> {
    require_paths(scenario, 1)?;
    if scenario.tx_mode != TxMode::Single {
        return Err(Error::TxMode("single"));
    }
    let path = scenario.paths[0];
    let grid = scenario.grid;
    let a = path_channel(&grid, &scenario.channel, 0.0)?;
    let lag = match receiver {
        Receiver::DelayLine => shaper_zeta(path.theta_deg, scenario.d_m),
        Receiver::NoDelayLine => delta_t(path.theta_deg, scenario.d_m),
    };
    let values: Vec<Complex64> = (0..grid.n_samples)
        .map(|k| {
            let amp = a[k] * path.gain_linear;
            amp * (Complex64::new(1.0, 0.0) + phasor(grid.freq(k), lag))
        })
        .collect();
    let antenna_power = mean_sq(a.iter().map(|&ak| ak * path.gain_linear));
    Ok(MeanField {
        grid,
        values,
        antenna_power,
    })
}

fn mean_sq(it: impl Iterator<Item = f64>) -> f64 {
    let (s, n) = it.fold((0.0, 0usize), |(s, n), x| (s + x * x, n + 1));
    s / n.max(1) as f64
}

/// Multipath field `Σ_j a_j(f)·g_j·e^{−j2πf T_j}·(1 + e^{−j2πf ζ_j})`.
pub fn synth_multi(scenario: &Scenario) -> Result<MeanField> {
    if scenario.tx_mode != TxMode::Single {
        return Err(Error::TxMode("single"));
    }
    let grid = scenario.grid;
    let n = grid.n_samples;
    let mut values = vec![Complex64::new(0.0, 0.0); n];
    let mut antenna = vec![Complex64::new(0.0, 0.0); n];
    for path in &scenario.paths {
        let a = path_channel(&grid, &scenario.channel, path.excess_length_m)?;
        let zeta = shaper_zeta(path.theta_deg, scenario.d_m);
        let tof = path.delay_s();
        for k in 0..n {
            let f = grid.freq(k);
            let field = a[k] * path.gain_linear * phasor(f, tof);
            antenna[k] += field;
            values[k] += field * (Complex64::new(1.0, 0.0) + phasor(f, zeta));
        }
    }
    let antenna_power = antenna.iter().map(|v| v.norm_sqr()).sum::<f64>() / n as f64;
    Ok(MeanField {
        grid,
        values,
        antenna_power,
    })
}

/// Transmit-pair field
/// `a·g·(1 + e^{−j2πf(D/c)(1−cos θ_i)})·(1 + e^{−j2πf(D/c)(3−cos θ_d)})`.
pub fn synth_aod(scenario: &Scenario) -> Result<MeanField> {
    if scenario.tx_mode != TxMode::Pair {
        return Err(Error::TxMode("pair"));
    }
    require_paths(scenario, 1)?;
    let theta_d = scenario.aod()?;
    let path = scenario.paths[0];
    let grid = scenario.grid;
    let a = path_channel(&grid, &scenario.channel, 0.0)?;
    let rx_lag = shaper_zeta(path.theta_deg, scenario.d_m);
    let tx_lag = tx_pair_lag(theta_d, scenario.d_m, scenario.tx_delay_factor);
    let one = Complex64::new(1.0, 0.0);
    let mut antenna_power = 0.0;
    let values = (0..grid.n_samples)
        .map(|k| {
            let f = grid.freq(k);
            let tx = a[k] * path.gain_linear * (one + phasor(f, tx_lag));
            antenna_power += tx.norm_sqr();
            tx * (one + phasor(f, rx_lag))
        })
        .collect();
    Ok(MeanField {
        grid,
        values,
        antenna_power: antenna_power / grid.n_samples as f64,
    })
}

/// Field for any scenario, normalized so the noise-free power spectrum of
/// the first (line-of-sight) path alone peaks at 1.
pub fn synthesize(scenario: &Scenario) -> Result<MeanField> {
    let raw = match scenario.tx_mode {
        TxMode::Pair => synth_aod(scenario)?,
        TxMode::Single if scenario.paths.len() == 1 => synth_single(scenario)?,
        TxMode::Single => synth_multi(scenario)?,
    };
    let los_peak = if scenario.paths.len() == 1 {
        peak_power(&raw)
    } else {
        let los = Scenario {
            paths: scenario.paths[..1].to_vec(),
            ..scenario.clone()
        };
        peak_power(&synth_single(&los)?)
    };
    if !(los_peak > 0.0) {
        return Err(Error::Domain("line-of-sight power spectrum is zero".into()));
    }
    Ok(raw.scaled(1.0 / los_peak.sqrt()))
}

fn peak_power(field: &MeanField) -> f64 {
    field
        .values
        .iter()
        .map(|v| v.norm_sqr())
        .fold(0.0, f64::max)
}

/// Noise power N0 giving per-antenna SNR `snr_db`; 0 for an infinite SNR.
pub fn noise_power(antenna_power: f64, snr_db: f64) -> f64 {
    if snr_db == f64::INFINITY {
        0.0
    } else {
        2.0 * antenna_power / 10f64.powf(snr_db / 10.0)
    }
}

/// Deterministic RNG for `(seed, stream)`; distinct streams are independent.
pub fn trial_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// One noisy shot: `z_k = |mean_k + n_k|` with `n_k` circular complex
/// Gaussian of total power N0, so `z_k ~ Rice(|mean_k|, N0/2)`.
pub fn add_noise(mean: &MeanField, snr_db: f64, seed: u64) -> ObservedSpectrum {
    add_noise_stream(mean, snr_db, seed, 0)
}

/// [`add_noise`] drawing from stream `stream` of `seed`.
pub fn add_noise_stream(mean: &MeanField, snr_db: f64, seed: u64, stream: u64) -> ObservedSpectrum {
    let n0 = noise_power(mean.antenna_power, snr_db);
    if n0 == 0.0 {
        return ObservedSpectrum::noise_free(mean.clone());
    }
    let sigma = (n0 / 2.0).sqrt();
    let mut rng = trial_rng(seed, stream);
    let z = mean
        .values
        .iter()
        .map(|m| {
            let re: f64 = StandardNormal.sample(&mut rng);
            let im: f64 = StandardNormal.sample(&mut rng);
            (m + Complex64::new(sigma * re, sigma * im)).norm()
        })
        .collect();
    ObservedSpectrum {
        grid: mean.grid,
        z,
        mean: mean.clone(),
        n0,
    }
}

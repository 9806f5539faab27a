use std::f64::consts::PI;

use serde::Serialize;

use super::{
    find_peaks, max_shaper_lag, minimize_scalar, noise_threshold, theta_from_zeta, zeta_spectrum,
    DC_EXCLUSION,
};
use crate::error::{Error, Result};
use crate::synth::ObservedSpectrum;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DoaEstimate {
    pub theta_deg: f64,
    pub zeta_s: f64,
    /// Coarse ζ-spectrum peak the estimate started from, if any.
    pub peak_zeta_s: Option<f64>,
    pub peak_magnitude: f64,
    /// The lag sits within two bins of zero, where θ is poorly resolved.
    pub near_endfire: bool,
}

/// Squared residual of the best scaled fit `c·(1 + cos 2πfζ)` to `y`.
fn shape_residual(freqs: &[f64], y: &[f64], zeta: f64) -> f64 {
    let g: Vec<f64> = freqs
        .iter()
        .map(|f| 1.0 + (2.0 * PI * f * zeta).cos())
        .collect();
    let gg: f64 = g.iter().map(|x| x * x).sum();
    let gy: f64 = g.iter().zip(y).map(|(a, b)| a * b).sum();
    let c = gy / gg;
    g.iter().zip(y).map(|(a, b)| (b - c * a).powi(2)).sum()
}

/// DoA of a single path. The dominant ζ-spectrum peak outside the DC zone
/// gives a coarse lag, refined by least-squares fit of the shaper cosine to
/// the noise-bias-corrected power spectrum. A fit over the first few lag
/// bins competes with it, which covers lags hidden in the DC zone.
pub fn estimate_doa_single(spectrum: &ObservedSpectrum, d_m: f64) -> Result<DoaEstimate> {
    let y: Vec<f64> = spectrum.power().iter().map(|p| p - spectrum.n0).collect();
    let energy: f64 = spectrum.power().iter().sum();
    if !(energy > 0.0) || !energy.is_finite() {
        return Err(Error::NoPeak);
    }
    let zs = zeta_spectrum(spectrum);
    let zmax = max_shaper_lag(d_m);
    let res = zs.resolution_s;
    let peak = find_peaks(
        &zs,
        DC_EXCLUSION * zmax,
        f64::INFINITY,
        noise_threshold(&zs),
    )
    .into_iter()
    .next();
    if let Some(p) = peak {
        if p.zeta_s > zmax + res {
            return Err(Error::OutOfRange {
                lag_s: p.zeta_s,
                max_s: zmax,
            });
        }
    }
    let freqs = spectrum.grid.frequencies();
    let fit = |lo: f64, hi: f64, n: usize| {
        let z = minimize_scalar(|z| shape_residual(&freqs, &y, z), lo, hi, n);
        (z, shape_residual(&freqs, &y, z))
    };
    let mut best = fit(0.0, (3.0 * res).min(zmax), 97);
    if let Some(p) = peak.filter(|p| p.zeta_s >= 2.0 * res) {
        let cand = fit((p.zeta_s - res).max(0.0), (p.zeta_s + res).min(zmax), 33);
        if cand.1 <= best.1 {
            best = cand;
        }
    }
    let zeta = best.0;
    let near_endfire = zeta < 2.0 * res;
    Ok(DoaEstimate {
        theta_deg: theta_from_zeta(zeta, d_m),
        zeta_s: zeta,
        peak_zeta_s: peak.map(|p| p.zeta_s),
        peak_magnitude: peak.map_or(0.0, |p| p.magnitude),
        near_endfire,
    })
}

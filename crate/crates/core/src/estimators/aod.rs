use std::f64::consts::PI;

use serde::Serialize;

use super::{max_shaper_lag, minimize_scalar, significant_peaks, zeta_spectrum, DC_EXCLUSION};
use crate::error::{Error, Result};
use crate::scenario::{SPEED_OF_LIGHT, TX_PAIR_DELAY_FACTOR};
use crate::synth::ObservedSpectrum;

/// Harmonics weaker than this fraction of the strongest one are ignored.
const HARMONIC_FLOOR: f64 = 0.2;

/// At most this many of the strongest peaks enter the role assignment.
const MAX_CANDIDATE_PEAKS: usize = 6;

/// A role assignment must beat the two-largest-lag reading by this margin.
const PATTERN_MARGIN: f64 = 0.05;

/// Tolerance on arccos arguments before lags are declared inconsistent.
const ACOS_TOL: f64 = 0.02;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AodDoaEstimate {
    pub aod_deg: f64,
    pub doa_deg: f64,
    /// Estimate from the two largest lags alone, before the joint fit.
    pub lag_aod_deg: f64,
    pub lag_doa_deg: f64,
    /// Set when the two smaller harmonics are not where the estimate puts
    /// them (relative residual above 5%).
    pub warning: Option<String>,
}

fn acos_checked(x: f64) -> Result<f64> {
    if x.abs() > 1.0 + ACOS_TOL {
        return Err(Error::InconsistentLags(x));
    }
    Ok(x.clamp(-1.0, 1.0).acos().to_degrees())
}

/// Residual of the best scaled fit of `(1 + cos 2πf u)(1 + cos 2πf v)`.
fn pair_residual(freqs: &[f64], y: &[f64], u: f64, v: f64) -> f64 {
    let g: Vec<f64> = freqs
        .iter()
        .map(|f| (1.0 + (2.0 * PI * f * u).cos()) * (1.0 + (2.0 * PI * f * v).cos()))
        .collect();
    let gg: f64 = g.iter().map(|x| x * x).sum();
    let gy: f64 = g.iter().zip(y).map(|(a, b)| a * b).sum();
    let c = gy / gg;
    g.iter().zip(y).map(|(a, b)| (b - c * a).powi(2)).sum()
}

/// Coordinate-wise least-squares refinement of the lag pair `(u, v)` within
/// `±1.5·res` of the start, kept inside the given bounds.
pub(crate) fn refine_pair(
    spectrum: &ObservedSpectrum,
    start: (f64, f64),
    (u_lo, u_hi): (f64, f64),
    (v_lo, v_hi): (f64, f64),
    res: f64,
) -> (f64, f64) {
    let freqs = spectrum.grid.frequencies();
    let y: Vec<f64> = spectrum.power().iter().map(|p| p - spectrum.n0).collect();
    let mut u = start.0.clamp(u_lo, u_hi);
    let mut v = start.1.clamp(v_lo, v_hi);
    for _ in 0..4 {
        u = minimize_scalar(
            |x| pair_residual(&freqs, &y, x, v),
            (u - 1.5 * res).max(u_lo),
            (u + 1.5 * res).min(u_hi),
            25,
        );
        v = minimize_scalar(
            |x| pair_residual(&freqs, &y, u, x),
            (v - 1.5 * res).max(v_lo),
            (v + 1.5 * res).min(v_hi),
            25,
        );
    }
    (u, v)
}

/// Joint AoD/DoA from a transmit-pair observation.
///
/// With ζ₁ ≥ ζ₂ the two largest detected lags, `θ_d = acos(3 − ζ₂c/D)` and
/// `θ_i = acos(4 − ζ₁c/D − cos θ_d)`. When a harmonic is missed, another
/// role assignment of the detected peaks can win if its four predicted lines
/// `u, v, u+v, v−u` collect clearly more ζ-spectrum magnitude. The pair is
/// then refined by a least-squares fit of the two-factor ripple model to the
/// power spectrum.
pub fn estimate_aod_doa(spectrum: &ObservedSpectrum, d_m: f64) -> Result<AodDoaEstimate> {
    let zs = zeta_spectrum(spectrum);
    let k = d_m / SPEED_OF_LIGHT;
    let res = zs.resolution_s;
    let lo = DC_EXCLUSION * max_shaper_lag(d_m);
    let hi = 6.0 * k + res;
    let mut peaks = significant_peaks(&zs, lo, hi, HARMONIC_FLOOR);
    if peaks.len() < 2 {
        return Err(Error::HarmonicCountMismatch { found: peaks.len() });
    }
    peaks.truncate(MAX_CANDIDATE_PEAKS);
    peaks.sort_by(|a, b| b.zeta_s.total_cmp(&a.zeta_s));
    let (z1, z2) = (peaks[0].zeta_s, peaks[1].zeta_s);
    let first = (z1 - z2, z2);
    let pattern = |(u, v): (f64, f64)| {
        let mut lags = vec![u, v, u + v, v - u];
        lags.retain(|&l| l > lo);
        lags.sort_by(f64::total_cmp);
        lags.dedup_by(|a, b| (*a - *b).abs() < res);
        lags.iter().map(|&l| zs.magnitude_at(l)).sum::<f64>()
    };
    let valid = |(u, v): (f64, f64)| {
        (-res..=2.0 * k + res).contains(&u) && (2.0 * k - res..=4.0 * k + res).contains(&v)
    };
    let mut best: Option<((f64, f64), f64)> = valid(first).then(|| (first, pattern(first)));
    for (i, a) in peaks.iter().enumerate() {
        for b in &peaks[i + 1..] {
            let (a, b) = (a.zeta_s, b.zeta_s);
            for cand in [
                (a - b, b),
                (b, a - b),
                (0.5 * (a - b), 0.5 * (a + b)),
                (b, a),
                (a - b, a),
                (b, a + b),
                (a, a + b),
            ] {
                if !valid(cand) {
                    continue;
                }
                let score = pattern(cand);
                if best.is_none_or(|(_, s)| score > (1.0 + PATTERN_MARGIN) * s) {
                    best = Some((cand, score));
                }
            }
        }
    }
    let Some(((u0, v0), _)) = best else {
        return Err(Error::InconsistentLags(TX_PAIR_DELAY_FACTOR - z2 / k));
    };
    let lag_aod = acos_checked(TX_PAIR_DELAY_FACTOR - v0 / k)?;
    let lag_doa = acos_checked(1.0 - u0 / k)?;

    let (u, v) = refine_pair(
        spectrum,
        (u0, v0),
        (0.0, 2.0 * k),
        (
            (TX_PAIR_DELAY_FACTOR - 1.0) * k,
            (TX_PAIR_DELAY_FACTOR + 1.0) * k,
        ),
        res,
    );
    let aod_deg = (TX_PAIR_DELAY_FACTOR - v / k)
        .clamp(-1.0, 1.0)
        .acos()
        .to_degrees();
    let doa_deg = (1.0 - u / k).clamp(-1.0, 1.0).acos().to_degrees();

    let ci = doa_deg.to_radians().cos();
    let cdr = aod_deg.to_radians().cos();
    let expected = [k * (1.0 - ci), k * (2.0 - cdr + ci)];
    let scale = 4.0 * k;
    let worst = expected
        .iter()
        .filter(|&&e| e > lo)
        .map(|&e| {
            peaks
                .iter()
                .map(|p| (p.zeta_s - e).abs())
                .fold(f64::INFINITY, f64::min)
                / scale
        })
        .fold(0.0, f64::max);
    let warning = (worst > 0.05).then(|| {
        format!(
            "secondary harmonics off by {:.1}% of the lag span",
            100.0 * worst
        )
    });
    Ok(AodDoaEstimate {
        aod_deg,
        doa_deg,
        lag_aod_deg: lag_aod,
        lag_doa_deg: lag_doa,
        warning,
    })
}

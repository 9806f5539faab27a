//! Single-shot estimators working on one observed magnitude spectrum.

mod aod;
mod distance;
mod doa;
mod harmonic;
mod matched;
mod mmse;
mod report;

pub use aod::{estimate_aod_doa, AodDoaEstimate};
pub use distance::{estimate_rel_distances, DistanceEstimate};
pub use doa::{estimate_doa_single, DoaEstimate};
pub use harmonic::{harmonic_decompose, Component, Method};
pub use matched::{matched_filter, MatchedFilter};
pub use mmse::{
    array_mmse, mmse_estimate, ssh_template, theta_grid, ArrayBank, JointBank, TemplateBank,
    DEFAULT_MMSE_STEP_DEG,
};
pub use report::{estimate_report, EstimateReport, ReportDiagnostics};

use num_complex::Complex64;
use serde::Serialize;

use crate::scenario::{FrequencyGrid, SPEED_OF_LIGHT};
use crate::synth::ObservedSpectrum;
use crate::zeta::{fft_in_place, ifft_in_place, ZetaOptions, ZetaSpectrum};

/// Detection threshold in multiples of the median ζ-spectrum magnitude.
pub const NOISE_FLOOR_FACTOR: f64 = 6.0;

/// Peaks weaker than this fraction of the strongest one are ignored.
pub const RELATIVE_FLOOR: f64 = 0.05;

/// Fraction of `2D/c` treated as DC and excluded from DoA peak search.
pub const DC_EXCLUSION: f64 = 0.05;

/// Largest shaper lag `2D/c`.
pub fn max_shaper_lag(d_m: f64) -> f64 {
    2.0 * d_m / SPEED_OF_LIGHT
}

/// Power-spectrum ζ-spectrum of an observation: mean removal, Hann window,
/// 8x zero padding.
pub fn zeta_spectrum(spectrum: &ObservedSpectrum) -> ZetaSpectrum {
    ZetaSpectrum::from_samples(
        &spectrum.power(),
        spectrum.grid.spacing(),
        ZetaOptions::default(),
    )
}

/// Zeroes every bin above `2D/c` plus one guard bin.
pub fn lowpass(zspec: &ZetaSpectrum, d_m: f64) -> ZetaSpectrum {
    let cutoff = max_shaper_lag(d_m) + zspec.resolution_s;
    let mut out = zspec.clone();
    for (m, z) in out.magnitude.iter_mut().zip(&zspec.zeta_s) {
        if *z > cutoff {
            *m = 0.0;
        }
    }
    out
}

/// Low-pass filter applied to the power spectrum itself. The sequence is
/// mirrored to avoid an edge discontinuity, lags above `2·(2D/c)` are removed
/// and the result is transformed back. The guard band of width `2D/c` keeps
/// the leakage of shaper lines close to `2D/c`.
pub fn lowpass_power(power: &[f64], grid: &FrequencyGrid, d_m: f64) -> Vec<f64> {
    let n = power.len();
    let len = 2 * n;
    let mut buf: Vec<Complex64> = power
        .iter()
        .chain(power.iter().rev())
        .map(|&p| Complex64::new(p, 0.0))
        .collect();
    fft_in_place(&mut buf);
    let df = grid.spacing();
    let cutoff = 2.0 * max_shaper_lag(d_m);
    for (k, b) in buf.iter_mut().enumerate() {
        let j = k.min(len - k);
        if j as f64 / (len as f64 * df) > cutoff {
            *b = Complex64::new(0.0, 0.0);
        }
    }
    ifft_in_place(&mut buf);
    buf[..n].iter().map(|c| c.re / len as f64).collect()
}

/// A local maximum of a ζ-spectrum after parabolic refinement.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Peak {
    pub zeta_s: f64,
    pub magnitude: f64,
}

impl Peak {
    pub fn distance_m(&self) -> f64 {
        self.zeta_s * SPEED_OF_LIGHT
    }
}

/// Vertex offset and height of the parabola through three samples.
pub(crate) fn parabolic(a: f64, b: f64, c: f64) -> (f64, f64) {
    let den = a - 2.0 * b + c;
    if den.abs() < f64::MIN_POSITIVE || den >= 0.0 {
        return (0.0, b);
    }
    let d = (0.5 * (a - c) / den).clamp(-0.5, 0.5);
    (d, b - 0.25 * (a - c) * d)
}

/// Local maxima with `lo ≤ ζ ≤ hi` and magnitude above `threshold`, sorted by
/// descending magnitude, ties by smaller lag.
pub(crate) fn find_peaks(zs: &ZetaSpectrum, lo: f64, hi: f64, threshold: f64) -> Vec<Peak> {
    let m = &zs.magnitude;
    let step = zs.bin_s();
    let mut peaks = Vec::new();
    for i in 1..m.len().saturating_sub(1) {
        if !(m[i] > m[i - 1] && m[i] >= m[i + 1] && m[i] > threshold) {
            continue;
        }
        let (d, h) = parabolic(m[i - 1], m[i], m[i + 1]);
        let zeta = (i as f64 + d) * step;
        if zeta >= lo && zeta <= hi {
            peaks.push(Peak {
                zeta_s: zeta,
                magnitude: h,
            });
        }
    }
    sort_peaks(&mut peaks);
    peaks
}

pub(crate) fn sort_peaks(peaks: &mut [Peak]) {
    peaks.sort_by(|a, b| {
        b.magnitude
            .total_cmp(&a.magnitude)
            .then(a.zeta_s.total_cmp(&b.zeta_s))
    });
}

/// Robust detection threshold for a ζ-spectrum.
pub(crate) fn noise_threshold(zs: &ZetaSpectrum) -> f64 {
    NOISE_FLOOR_FACTOR * zs.median_magnitude()
}

/// Peaks above the noise threshold and above [`RELATIVE_FLOOR`] of the
/// strongest candidate in `[lo, hi]`.
pub(crate) fn significant_peaks(zs: &ZetaSpectrum, lo: f64, hi: f64, floor: f64) -> Vec<Peak> {
    let peaks = find_peaks(zs, lo, hi, noise_threshold(zs));
    let top = peaks.first().map_or(0.0, |p| p.magnitude);
    peaks
        .into_iter()
        .filter(|p| p.magnitude >= floor * top)
        .collect()
}

/// Dense grid scan of `f` on `[lo, hi]` followed by golden-section search
/// around the best grid point. Returns the minimizer.
pub(crate) fn minimize_scalar(
    mut f: impl FnMut(f64) -> f64,
    lo: f64,
    hi: f64,
    n_grid: usize,
) -> f64 {
    if hi <= lo {
        return lo;
    }
    let n = n_grid.max(3);
    let h = (hi - lo) / (n - 1) as f64;
    let mut best = (0, f64::INFINITY);
    for i in 0..n {
        let v = f(lo + i as f64 * h);
        if v < best.1 {
            best = (i, v);
        }
    }
    let mut a = lo + best.0.saturating_sub(1) as f64 * h;
    let mut b = (lo + (best.0 + 1) as f64 * h).min(hi);
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut x1 = b - g * (b - a);
    let mut x2 = a + g * (b - a);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    let tol = (hi - lo) * 1e-12;
    while b - a > tol {
        if f1 <= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - g * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + g * (b - a);
            f2 = f(x2);
        }
    }
    let x = 0.5 * (a + b);
    if f(x) <= best.1 {
        x
    } else {
        lo + best.0 as f64 * h
    }
}

/// Angle with shaper lag `zeta` (clamped onto `[0°, 180°]`).
pub fn theta_from_zeta(zeta: f64, d_m: f64) -> f64 {
    let s = (zeta / max_shaper_lag(d_m)).clamp(0.0, 1.0);
    2.0 * s.sqrt().asin().to_degrees()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::{Path, Scenario};
    use crate::synth::{shaper_zeta, synth_multi, synthesize};

    #[test]
    fn flat_input_has_no_ripple() {
        let obs = ObservedSpectrum::noise_free(synthesize(&Scenario::los(0.0, 5e-3)).unwrap());
        let zs = zeta_spectrum(&obs);
        assert!(zs.magnitude.iter().all(|&m| m < 1e-12));
    }

    #[test]
    fn dominant_peak_at_shaper_lag() {
        let obs = ObservedSpectrum::noise_free(synthesize(&Scenario::los(60.0, 5e-3)).unwrap());
        let zs = zeta_spectrum(&obs);
        let p = find_peaks(&zs, 0.0, f64::INFINITY, 0.0)[0];
        let want = shaper_zeta(60.0, 5e-3);
        assert!((want - 8.3391e-12).abs() < 1e-16);
        assert!((p.zeta_s - want).abs() < 0.5 * zs.resolution_s);
    }

    #[test]
    fn lowpass_keeps_shaper_band_only() {
        let df = 0.15e9;
        let grid = FrequencyGrid::with_spacing(100e9, 1e12, df);
        let d = 5e-3;
        let shaper = 2.5e-3 / SPEED_OF_LIGHT;
        let cross = 0.5 / SPEED_OF_LIGHT;
        let tone = |lag: f64| -> Vec<f64> {
            grid.frequencies()
                .iter()
                .map(|f| (2.0 * std::f64::consts::PI * f * lag).cos())
                .collect()
        };
        let zs = |s: &[f64]| ZetaSpectrum::from_samples(s, df, ZetaOptions::default());
        let kept = lowpass(&zs(&tone(shaper)), d);
        let removed = lowpass(&zs(&tone(cross)), d);
        assert!(kept.magnitude.iter().cloned().fold(0.0, f64::max) > 0.9);
        assert!(removed.magnitude.iter().cloned().fold(0.0, f64::max) < 1e-3);
    }

    #[test]
    fn lowpass_power_separates_paths() {
        let mut sc = Scenario::los(60.0, 5e-3);
        sc.paths.push(Path::new(100.0, 0.5, 0.5012));
        sc.grid = FrequencyGrid::with_spacing(100e9, 1e12, 0.15e9);
        let multi = synth_multi(&sc).unwrap().power();
        let mut single_sum = vec![0.0; multi.len()];
        for p in &sc.paths {
            let one = Scenario {
                paths: vec![Path::new(p.theta_deg, 0.0, p.gain_linear)],
                ..sc.clone()
            };
            for (s, v) in single_sum
                .iter_mut()
                .zip(synth_multi(&one).unwrap().power())
            {
                *s += v;
            }
        }
        let filtered = lowpass_power(&multi, &sc.grid, sc.d_m);
        let rms = |v: &[f64]| (v.iter().map(|x| x * x).sum::<f64>() / v.len() as f64).sqrt();
        let diff: Vec<f64> = filtered
            .iter()
            .zip(&single_sum)
            .map(|(a, b)| a - b)
            .collect();
        assert!(
            rms(&diff) < 0.01 * rms(&single_sum),
            "{}",
            rms(&diff) / rms(&single_sum)
        );
    }

    #[test]
    fn golden_section_finds_minimum() {
        let x = minimize_scalar(|x| (x - 0.3141).powi(2), 0.0, 1.0, 16);
        assert!((x - 0.3141).abs() < 1e-9);
        let edge = minimize_scalar(|x| x, 0.0, 1.0, 8);
        assert!(edge < 1e-9);
    }

    #[test]
    fn parabolic_vertex() {
        let f = |x: f64| 2.0 - (x - 0.3).powi(2);
        let (d, h) = parabolic(f(-1.0), f(0.0), f(1.0));
        assert!((d - 0.3).abs() < 1e-12);
        assert!((h - 2.0).abs() < 1e-12);
    }
}

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use serde::Serialize;

use super::{significant_peaks, RELATIVE_FLOOR};
use crate::error::{Error, Result};
use crate::zeta::{fft_in_place, ZetaOptions, ZetaSpectrum};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Periodogram,
    Music,
}

/// One cosine `amplitude·cos(2πfζ + φ)` found in a spectrum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Component {
    pub zeta_s: f64,
    pub amplitude: f64,
}

/// Cosine components of a sampled (power) spectrum, strongest first.
pub fn harmonic_decompose(
    samples: &[f64],
    df_hz: f64,
    method: Method,
    max_components: usize,
) -> Result<Vec<Component>> {
    if max_components == 0 {
        return Err(Error::Validation("max_components must be >= 1".into()));
    }
    match method {
        Method::Periodogram => Ok(periodogram(samples, df_hz, max_components)),
        Method::Music => music(samples, df_hz, max_components),
    }
}

fn periodogram(samples: &[f64], df_hz: f64, k: usize) -> Vec<Component> {
    let zs = ZetaSpectrum::from_samples(samples, df_hz, ZetaOptions::default());
    significant_peaks(&zs, zs.bin_s() * 0.5, f64::INFINITY, RELATIVE_FLOOR)
        .into_iter()
        .take(k)
        .map(|p| Component {
            zeta_s: p.zeta_s,
            amplitude: p.magnitude,
        })
        .collect()
}

fn music(samples: &[f64], df_hz: f64, k: usize) -> Result<Vec<Component>> {
    let n = samples.len();
    let order = 2 * k;
    let limit = n / 3;
    if order > limit {
        return Err(Error::ModelOrderTooLarge { order, limit });
    }
    let mean = samples.iter().sum::<f64>() / n as f64;
    let x: Vec<f64> = samples.iter().map(|s| s - mean).collect();
    if x.iter().all(|v| v.abs() < 1e-300) {
        return Ok(Vec::new());
    }
    let m = limit.max(order + 1);
    let snaps = n - m + 1;
    let mut r = DMatrix::<f64>::zeros(m, m);
    for s in 0..snaps {
        let fwd = DVector::from_row_slice(&x[s..s + m]);
        let bwd = DVector::from_iterator(m, x[s..s + m].iter().rev().copied());
        r += &fwd * fwd.transpose();
        r += &bwd * bwd.transpose();
    }
    r /= (2 * snaps) as f64;
    let eig = SymmetricEigen::new(r);
    let mut idx: Vec<usize> = (0..m).collect();
    idx.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let noise = &idx[..m - order];

    let len = (8 * n).next_power_of_two();
    let mut denom = vec![0.0; len / 2 + 1];
    for &j in noise {
        let mut buf = vec![Complex64::new(0.0, 0.0); len];
        for (b, v) in buf.iter_mut().zip(eig.eigenvectors.column(j).iter()) {
            *b = Complex64::new(*v, 0.0);
        }
        fft_in_place(&mut buf);
        for (d, c) in denom.iter_mut().zip(&buf) {
            *d += c.norm_sqr();
        }
    }
    let pseudo: Vec<f64> = denom.iter().map(|d| 1.0 / d.max(1e-300)).collect();
    let zs = ZetaSpectrum {
        zeta_s: (0..pseudo.len())
            .map(|i| i as f64 / (len as f64 * df_hz))
            .collect(),
        magnitude: pseudo,
        resolution_s: 1.0 / (n as f64 * df_hz),
    };
    let lags: Vec<f64> = super::find_peaks(&zs, zs.resolution_s * 0.25, f64::INFINITY, 0.0)
        .into_iter()
        .take(k)
        .map(|p| p.zeta_s)
        .collect();
    let amps = fit_amplitudes(&x, df_hz, &lags);
    let mut out: Vec<Component> = lags
        .into_iter()
        .zip(amps)
        .map(|(zeta_s, amplitude)| Component { zeta_s, amplitude })
        .collect();
    out.sort_by(|a, b| b.amplitude.total_cmp(&a.amplitude));
    Ok(out)
}

/// Least-squares amplitudes of cosines at fixed lags, phase free. The sample
/// index is the frequency offset from the first sample, which leaves each
/// amplitude unchanged.
fn fit_amplitudes(x: &[f64], df_hz: f64, lags: &[f64]) -> Vec<f64> {
    if lags.is_empty() {
        return Vec::new();
    }
    let n = x.len();
    let cols = 2 * lags.len();
    let a = DMatrix::from_fn(n, cols, |i, j| {
        let w = 2.0 * PI * i as f64 * df_hz * lags[j / 2];
        if j % 2 == 0 {
            w.cos()
        } else {
            w.sin()
        }
    });
    let b = DVector::from_column_slice(x);
    let coef = a
        .svd(true, true)
        .solve(&b, 1e-12)
        .unwrap_or_else(|_| DVector::zeros(cols));
    (0..lags.len())
        .map(|k| coef[2 * k].hypot(coef[2 * k + 1]))
        .collect()
}

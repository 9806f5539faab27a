//! Spectrum of a sampled spectrum.
//!
//! A ripple `cos(2π f ζ)` across the measured band shows up as a peak at lag
//! `ζ` (seconds), or at distance `c·ζ`.

use std::cell::RefCell;

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::Serialize;

use crate::scenario::SPEED_OF_LIGHT;

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

/// Forward FFT of `buf` in place.
pub(crate) fn fft_in_place(buf: &mut [Complex64]) {
    PLANNER.with(|p| p.borrow_mut().plan_fft_forward(buf.len()).process(buf));
}

/// Inverse FFT of `buf` in place, unnormalized.
pub(crate) fn ifft_in_place(buf: &mut [Complex64]) {
    PLANNER.with(|p| p.borrow_mut().plan_fft_inverse(buf.len()).process(buf));
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Window {
    Rectangular,
    Hann,
}

impl Window {
    fn weights(self, n: usize) -> Vec<f64> {
        match self {
            Window::Rectangular => vec![1.0; n],
            Window::Hann => (0..n)
                .map(|i| {
                    let x = std::f64::consts::PI * i as f64 / (n - 1) as f64;
                    x.sin().powi(2)
                })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ZetaOptions {
    pub remove_mean: bool,
    pub window: Window,
    /// Zero-padding factor (transform length = pad · n).
    pub pad: usize,
}

impl Default for ZetaOptions {
    /// Mean removal, Hann window, 8x zero padding.
    fn default() -> Self {
        ZetaOptions {
            remove_mean: true,
            window: Window::Hann,
            pad: 8,
        }
    }
}

impl ZetaOptions {
    /// Plain DFT magnitude: no mean removal, rectangular window, no padding.
    pub fn raw() -> Self {
        ZetaOptions {
            remove_mean: false,
            window: Window::Rectangular,
            pad: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ZetaSpectrum {
    pub zeta_s: Vec<f64>,
    pub magnitude: Vec<f64>,
    /// Width of one un-padded bin, `1/(n·Δf)`.
    pub resolution_s: f64,
}

impl ZetaSpectrum {
    /// Magnitude of the windowed, zero-padded DFT of `samples` taken with
    /// spacing `df_hz`. A cosine of amplitude A maps to a peak of height ~A.
    pub fn from_samples(samples: &[f64], df_hz: f64, opts: ZetaOptions) -> ZetaSpectrum {
        let n = samples.len();
        let len = n * opts.pad.max(1);
        let w = opts.window.weights(n);
        let wsum: f64 = w.iter().sum();
        let mean = if opts.remove_mean {
            samples.iter().sum::<f64>() / n as f64
        } else {
            0.0
        };
        let mut buf = vec![Complex64::new(0.0, 0.0); len];
        for ((b, &s), &wi) in buf.iter_mut().zip(samples).zip(&w) {
            *b = Complex64::new((s - mean) * wi, 0.0);
        }
        fft_in_place(&mut buf);
        let half = len / 2;
        let magnitude = buf[..=half]
            .iter()
            .enumerate()
            .map(|(k, c)| {
                let scale = if k == 0 { 1.0 } else { 2.0 };
                scale * c.norm() / wsum
            })
            .collect();
        let zeta_s = (0..=half)
            .map(|k| k as f64 / (len as f64 * df_hz))
            .collect();
        ZetaSpectrum {
            zeta_s,
            magnitude,
            resolution_s: 1.0 / (n as f64 * df_hz),
        }
    }

    pub fn len(&self) -> usize {
        self.zeta_s.len()
    }

    pub fn is_empty(&self) -> bool {
        self.zeta_s.is_empty()
    }

    /// Lag spacing between adjacent (padded) bins.
    pub fn bin_s(&self) -> f64 {
        self.zeta_s.get(1).copied().unwrap_or(0.0)
    }

    /// The lag axis expressed as path-length difference.
    pub fn distance_m(&self) -> Vec<f64> {
        self.zeta_s.iter().map(|z| z * SPEED_OF_LIGHT).collect()
    }

    /// Magnitude at an arbitrary lag by linear interpolation.
    pub fn magnitude_at(&self, zeta: f64) -> f64 {
        let step = self.bin_s();
        if step <= 0.0 || zeta < 0.0 {
            return 0.0;
        }
        let x = zeta / step;
        let i = x.floor() as usize;
        if i + 1 >= self.len() {
            return self.magnitude.last().copied().unwrap_or(0.0);
        }
        let t = x - i as f64;
        self.magnitude[i] * (1.0 - t) + self.magnitude[i + 1] * t
    }

    pub fn median_magnitude(&self) -> f64 {
        let mut m = self.magnitude.clone();
        if m.is_empty() {
            return 0.0;
        }
        m.sort_by(f64::total_cmp);
        m[m.len() / 2]
    }

    pub fn write_csv<W: std::io::Write>(&self, w: W) -> crate::Result<()> {
        let mut wtr = csv::Writer::from_writer(w);
        wtr.write_record(["zeta_s", "distance_m", "magnitude"])?;
        for (z, m) in self.zeta_s.iter().zip(&self.magnitude) {
            wtr.write_record([
                z.to_string(),
                (z * SPEED_OF_LIGHT).to_string(),
                m.to_string(),
            ])?;
        }
        wtr.flush()?;
        Ok(())
    }
}

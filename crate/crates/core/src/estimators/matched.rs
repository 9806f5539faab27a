use std::f64::consts::PI;

use serde::Serialize;

use super::parabolic;
use crate::error::Result;
use crate::synth::{shaper_zeta, ObservedSpectrum};

/// Matched-filter response over a θ grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MatchedFilter {
    pub theta_deg: Vec<f64>,
    pub e: Vec<f64>,
    /// The curve carries no angular information (flat input, or a maximum
    /// at the low end of the grid where ζ(θ) → 0).
    pub degenerate: bool,
}

impl MatchedFilter {
    /// Local maxima as `(θ, E)`, strongest first, refined parabolically.
    pub fn peaks(&self) -> Vec<(f64, f64)> {
        let e = &self.e;
        let step = self.theta_deg.get(1).map_or(0.0, |t| t - self.theta_deg[0]);
        let mut out = Vec::new();
        for i in 1..e.len().saturating_sub(1) {
            if e[i] > e[i - 1] && e[i] >= e[i + 1] && e[i] > 0.0 {
                let (d, h) = parabolic(e[i - 1], e[i], e[i + 1]);
                out.push((self.theta_deg[i] + d * step, h));
            }
        }
        out.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.total_cmp(&b.0)));
        out
    }

    /// Grid point of the global maximum.
    pub fn argmax(&self) -> f64 {
        let i = self
            .e
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1).then(b.0.cmp(&a.0)))
            .map_or(0, |(i, _)| i);
        self.theta_deg[i]
    }

    pub fn write_csv<W: std::io::Write>(&self, w: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(w);
        wtr.write_record(["theta_deg", "E_theta"])?;
        for (t, e) in self.theta_deg.iter().zip(&self.e) {
            wtr.write_record([t.to_string(), e.to_string()])?;
        }
        wtr.flush()?;
        Ok(())
    }
}

/// `E(θ) = ∫ cos(2πf ζ(θ))·(E_r(f) − Ē_r) df` by the trapezoid rule, for θ
/// from 0° to 180° in steps of `step_deg`. The band mean is removed first so
/// the constant part of the spectrum does not favour ζ = 0.
pub fn matched_filter(spectrum: &ObservedSpectrum, d_m: f64, step_deg: f64) -> MatchedFilter {
    let step = if step_deg > 0.0 { step_deg } else { 0.1 };
    let y = spectrum.power();
    let freqs = spectrum.grid.frequencies();
    let df = spectrum.grid.spacing();
    let n = y.len();
    let w = |k: usize| if k == 0 || k + 1 == n { 0.5 } else { 1.0 };
    let total_w: f64 = (0..n).map(w).sum();
    let mean = (0..n).map(|k| w(k) * y[k]).sum::<f64>() / total_w;
    let count = (180.0 / step).round() as usize + 1;
    let theta_deg: Vec<f64> = (0..count).map(|i| (i as f64 * step).min(180.0)).collect();
    let e: Vec<f64> = theta_deg
        .iter()
        .map(|&t| {
            let z = shaper_zeta(t, d_m);
            (0..n)
                .map(|k| w(k) * (2.0 * PI * freqs[k] * z).cos() * (y[k] - mean))
                .sum::<f64>()
                * df
        })
        .collect();
    let scale: f64 = y.iter().map(|v| v.abs()).sum::<f64>() * df;
    let peak = e.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut mf = MatchedFilter {
        theta_deg,
        e,
        degenerate: false,
    };
    mf.degenerate = !(peak > 1e-9 * scale) || mf.argmax() == mf.theta_deg[0];
    mf
}

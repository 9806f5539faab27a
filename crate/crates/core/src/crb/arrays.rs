//! Baseline receivers: a half-wavelength symmetric ULA and an energy-focusing
//! lens array, both with one deterministic snapshot of unknown complex gain.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand_distr::{Distribution, StandardNormal};

use crate::synth::trial_rng;

/// Symmetric element positions `m − (M−1)/2`.
fn positions(m: usize) -> impl Iterator<Item = f64> {
    let c = (m as f64 - 1.0) / 2.0;
    (0..m).map(move |i| i as f64 - c)
}

/// ULA steering vector `e^{jπ m cos θ}`.
pub fn ula_steering(n: usize, theta_deg: f64) -> Vec<Complex64> {
    let c = theta_deg.to_radians().cos();
    positions(n)
        .map(|m| Complex64::from_polar(1.0, PI * m * c))
        .collect()
}

/// `d/dθ` of [`ula_steering`] per radian.
pub fn ula_steering_derivative(n: usize, theta_deg: f64) -> Vec<Complex64> {
    let t = theta_deg.to_radians();
    positions(n)
        .map(|m| {
            Complex64::new(0.0, -PI * m * t.sin()) * Complex64::from_polar(1.0, PI * m * t.cos())
        })
        .collect()
}

fn sinc(u: f64) -> f64 {
    if u.abs() < 1e-8 {
        1.0 - (PI * u).powi(2) / 6.0
    } else {
        (PI * u).sin() / (PI * u)
    }
}

fn sinc_prime(u: f64) -> f64 {
    if u.abs() < 1e-4 {
        -PI * PI * u / 3.0
    } else {
        ((PI * u).cos() - sinc(u)) / u
    }
}

/// Lens element response `sinc(m − (L/λ)·cos θ)`.
pub fn lens_response(m: usize, aperture_over_lambda: f64, theta_deg: f64) -> Vec<f64> {
    let c = aperture_over_lambda * theta_deg.to_radians().cos();
    positions(m).map(|p| sinc(p - c)).collect()
}

/// `d/dθ` of [`lens_response`] per radian.
pub fn lens_response_derivative(m: usize, aperture_over_lambda: f64, theta_deg: f64) -> Vec<f64> {
    let t = theta_deg.to_radians();
    let c = aperture_over_lambda * t.cos();
    let dc = aperture_over_lambda * t.sin();
    positions(m).map(|p| sinc_prime(p - c) * dc).collect()
}

/// Single-snapshot Fisher information for θ with an unknown complex gain:
/// `2·SNR·(‖ȧ‖² − |aᴴȧ|²/‖a‖²)`.
pub fn deterministic_fim(a: &[Complex64], da: &[Complex64], snr: f64) -> f64 {
    let aa: f64 = a.iter().map(|x| x.norm_sqr()).sum();
    let dd: f64 = da.iter().map(|x| x.norm_sqr()).sum();
    let ad: Complex64 = a.iter().zip(da).map(|(x, y)| x.conj() * y).sum();
    (2.0 * snr * (dd - ad.norm_sqr() / aa)).max(0.0)
}

fn std_deg(fim: f64) -> f64 {
    if fim > 0.0 {
        (1.0 / fim).sqrt().to_degrees()
    } else {
        f64::INFINITY
    }
}

/// ULA bound `6/(SNR·π²·N(N²−1)·sin²θ)` rad², returned as a std in degrees.
pub fn crb_ula(n_elements: usize, snr_db: f64, theta_deg: f64) -> f64 {
    let snr = 10f64.powf(snr_db / 10.0);
    let n = n_elements as f64;
    let s = theta_deg.to_radians().sin();
    let fim = snr * PI * PI * n * (n * n - 1.0) * s * s / 6.0;
    std_deg(fim)
}

/// Lens-array bound from the sinc response, std in degrees.
pub fn crb_lens(m_elements: usize, aperture_over_lambda: f64, snr_db: f64, theta_deg: f64) -> f64 {
    let snr = 10f64.powf(snr_db / 10.0);
    let g: Vec<Complex64> = lens_response(m_elements, aperture_over_lambda, theta_deg)
        .into_iter()
        .map(|x| Complex64::new(x, 0.0))
        .collect();
    let dg: Vec<Complex64> = lens_response_derivative(m_elements, aperture_over_lambda, theta_deg)
        .into_iter()
        .map(|x| Complex64::new(x, 0.0))
        .collect();
    std_deg(deterministic_fim(&g, &dg, snr))
}

/// Lens aperture `L = Mλ/2`.
pub fn default_aperture(m_elements: usize) -> f64 {
    m_elements as f64 / 2.0
}

/// One noisy snapshot `a + n`, `n ~ CN(0, 1/SNR)` per element.
pub fn array_snapshot(
    response: &[Complex64],
    snr_db: f64,
    seed: u64,
    stream: u64,
) -> Vec<Complex64> {
    let sigma = (0.5 / 10f64.powf(snr_db / 10.0)).sqrt();
    let mut rng = trial_rng(seed, stream);
    response
        .iter()
        .map(|a| {
            let re: f64 = StandardNormal.sample(&mut rng);
            let im: f64 = StandardNormal.sample(&mut rng);
            a + Complex64::new(sigma * re, sigma * im)
        })
        .collect()
}

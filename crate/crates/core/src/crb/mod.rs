//! Cramér–Rao bounds under the Rician magnitude observation model.
//!
//! Each frequency bin contributes `F(ν_k)·∂ν_k/∂a·∂ν_k/∂b`, where `F` is the
//! Fisher information of a Rice variable about its location `ν`, evaluated
//! by Gauss–Legendre quadrature over z.

pub mod arrays;

use std::f64::consts::PI;
use std::sync::OnceLock;

use serde::Serialize;

use crate::channel::channel_response;
use crate::error::{Error, Result};
use crate::exec::{map_indexed, Execution};
use crate::scenario::{Scenario, TxMode, SPEED_OF_LIGHT};
use crate::special::{i1_over_i0, ln_i0, GaussLegendre};
use crate::synth::{noise_power, shaper_zeta, sin_deg, tx_pair_lag};

pub use arrays::{crb_lens, crb_ula};

/// Quadrature nodes per bin.
pub const QUADRATURE_NODES: usize = 200;

/// Half-width of the z integration window in units of σ.
pub const QUADRATURE_SIGMAS: f64 = 12.0;

fn rule() -> &'static GaussLegendre {
    static RULE: OnceLock<GaussLegendre> = OnceLock::new();
    RULE.get_or_init(|| GaussLegendre::new(QUADRATURE_NODES))
}

/// Rice log-density of magnitude `z` with location `nu` and total noise
/// power `n0` (σ² = N0/2).
pub fn rice_loglik(z: f64, nu: f64, n0: f64) -> Result<f64> {
    if !(z >= 0.0) || !(nu >= 0.0) {
        return Err(Error::Domain(format!(
            "rice_loglik needs z, nu >= 0 (z={z}, nu={nu})"
        )));
    }
    if !(n0 > 0.0) {
        return Err(Error::Domain(format!("rice_loglik needs n0 > 0 (n0={n0})")));
    }
    if z == 0.0 {
        return Ok(f64::NEG_INFINITY);
    }
    Ok(z.ln() - (0.5 * n0).ln() - (z * z + nu * nu) / n0 + ln_i0(2.0 * z * nu / n0))
}

/// `∂ ln p/∂ν`.
pub fn rice_score(z: f64, nu: f64, n0: f64) -> f64 {
    (-2.0 * nu + 2.0 * z * i1_over_i0(2.0 * z * nu / n0)) / n0
}

fn rice_expectation(nu: f64, n0: f64, g: impl Fn(f64) -> f64) -> f64 {
    let sigma = (0.5 * n0).sqrt();
    let lo = (nu - QUADRATURE_SIGMAS * sigma).max(0.0);
    let hi = nu + QUADRATURE_SIGMAS * sigma;
    rule().integrate(lo, hi, |z| {
        if z <= 0.0 {
            return 0.0;
        }
        let lp = z.ln() - (0.5 * n0).ln() - (z * z + nu * nu) / n0 + ln_i0(2.0 * z * nu / n0);
        lp.exp() * g(z)
    })
}

/// Fisher information of one Rice sample about `ν`, `E[(∂ ln p/∂ν)²]`.
pub fn rice_fisher(nu: f64, n0: f64) -> f64 {
    rice_expectation(nu, n0, |z| rice_score(z, nu, n0).powi(2))
}

/// `E[∂ ln p/∂ν]`, zero for a regular model.
pub fn rice_score_mean(nu: f64, n0: f64) -> f64 {
    rice_expectation(nu, n0, |z| rice_score(z, nu, n0))
}

/// How the unknown channel enters the bound.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Nuisance {
    /// a(f) known; θ is the only unknown.
    #[default]
    Known,
    /// One unknown real gain scales the whole field.
    FlatGain,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FisherResult {
    pub params: Vec<String>,
    /// Fisher information, rad⁻² for angles.
    pub j: Vec<Vec<f64>>,
    /// √(J⁻¹)ᵢᵢ in degrees for the angle parameters; ∞ where J is singular.
    pub crb_deg: Vec<f64>,
}

/// Per-bin ν and its parameter derivatives (per radian).
pub struct BinModel {
    pub nu: Vec<f64>,
    pub grads: Vec<Vec<f64>>,
    pub n0: f64,
}

fn normalization(amp: &[f64], field: impl Fn(usize) -> f64) -> f64 {
    amp.iter()
        .enumerate()
        .map(|(k, a)| (a * field(k)).powi(2))
        .fold(0.0, f64::max)
        .sqrt()
}

/// `2|cos(πfζ)|` and its derivative with respect to ζ.
fn shaper_factor(f: f64, zeta: f64) -> (f64, f64) {
    let half = PI * f * zeta;
    let c = half.cos();
    (2.0 * c.abs(), -2.0 * c.signum() * half.sin() * PI * f)
}

/// ν and ∂ν/∂θ for a single-path scenario at DoA `theta_deg`.
pub fn ssh_bins(scenario: &Scenario, theta_deg: f64) -> Result<BinModel> {
    if scenario.tx_mode != TxMode::Single || scenario.paths.len() != 1 {
        return Err(Error::Validation(
            "SSH bound needs one path and a single transmitter".into(),
        ));
    }
    let grid = scenario.grid;
    let gain = scenario.paths[0].gain_linear;
    let amp: Vec<f64> = channel_response(&grid, &scenario.channel)?
        .into_iter()
        .map(|a| a * gain)
        .collect();
    let d = scenario.d_m;
    let zeta = shaper_zeta(theta_deg, d);
    let dzeta = d / SPEED_OF_LIGHT * sin_deg(theta_deg);
    let freqs = grid.frequencies();
    let norm = normalization(&amp, |k| shaper_factor(freqs[k], zeta).0);
    let mut nu = Vec::with_capacity(amp.len());
    let mut dnu = Vec::with_capacity(amp.len());
    for (a, f) in amp.iter().zip(&freqs) {
        let (s, ds) = shaper_factor(*f, zeta);
        nu.push(a * s / norm);
        dnu.push(a * ds * dzeta / norm);
    }
    let antenna_power = amp.iter().map(|a| a * a).sum::<f64>() / amp.len() as f64 / (norm * norm);
    Ok(BinModel {
        nu,
        grads: vec![dnu],
        n0: noise_power(antenna_power, scenario.snr_db),
    })
}

/// ν and (∂ν/∂θ_i, ∂ν/∂θ_d) for a transmit-pair scenario.
pub fn joint_bins(scenario: &Scenario, theta_i_deg: f64, theta_d_deg: f64) -> Result<BinModel> {
    if scenario.tx_mode != TxMode::Pair || scenario.paths.len() != 1 {
        return Err(Error::TxMode("pair"));
    }
    let grid = scenario.grid;
    let gain = scenario.paths[0].gain_linear;
    let amp: Vec<f64> = channel_response(&grid, &scenario.channel)?
        .into_iter()
        .map(|a| a * gain)
        .collect();
    let d = scenario.d_m;
    let u = shaper_zeta(theta_i_deg, d);
    let v = tx_pair_lag(theta_d_deg, d, scenario.tx_delay_factor);
    let du = d / SPEED_OF_LIGHT * sin_deg(theta_i_deg);
    let dv = d / SPEED_OF_LIGHT * sin_deg(theta_d_deg);
    let freqs = grid.frequencies();
    let norm = normalization(&amp, |k| {
        shaper_factor(freqs[k], u).0 * shaper_factor(freqs[k], v).0
    });
    let n = amp.len();
    let (mut nu, mut gi, mut gd) = (
        Vec::with_capacity(n),
        Vec::with_capacity(n),
        Vec::with_capacity(n),
    );
    let mut tx_power = 0.0;
    for (a, f) in amp.iter().zip(&freqs) {
        let (si, dsi) = shaper_factor(*f, u);
        let (sd, dsd) = shaper_factor(*f, v);
        nu.push(a * si * sd / norm);
        gi.push(a * dsi * du * sd / norm);
        gd.push(a * si * dsd * dv / norm);
        tx_power += (a * sd).powi(2);
    }
    let antenna_power = tx_power / n as f64 / (norm * norm);
    Ok(BinModel {
        nu,
        grads: vec![gi, gd],
        n0: noise_power(antenna_power, scenario.snr_db),
    })
}

/// `J_ab = Σ_k F(ν_k)·∂_aν_k·∂_bν_k`.
pub fn fisher_matrix(model: &BinModel) -> Vec<Vec<f64>> {
    let p = model.grads.len();
    let mut j = vec![vec![0.0; p]; p];
    for (k, &nu) in model.nu.iter().enumerate() {
        if model.grads.iter().all(|g| g[k] == 0.0) {
            continue;
        }
        let f = if model.n0 > 0.0 {
            rice_fisher(nu, model.n0)
        } else {
            f64::INFINITY
        };
        for a in 0..p {
            for b in a..p {
                let v = f * model.grads[a][k] * model.grads[b][k];
                j[a][b] += v;
                if a != b {
                    j[b][a] += v;
                }
            }
        }
    }
    j
}

/// √ of the inverse-FIM diagonal in degrees for the first `n_angles`
/// parameters. Parameters with no information get ∞.
fn crb_from_fim(j: &[Vec<f64>], n_angles: usize) -> Vec<f64> {
    let p = j.len();
    let live: Vec<usize> = (0..p).filter(|&i| j[i][i] > 0.0).collect();
    let mut out = vec![f64::INFINITY; n_angles];
    if live.is_empty() {
        return out;
    }
    let m = nalgebra::DMatrix::from_fn(live.len(), live.len(), |a, b| j[live[a]][live[b]]);
    let Some(inv) = m.try_inverse() else {
        return out;
    };
    for (a, &i) in live.iter().enumerate() {
        if i < n_angles {
            let v = inv[(a, a)];
            out[i] = if v > 0.0 && v.is_finite() {
                v.sqrt().to_degrees()
            } else {
                f64::INFINITY
            };
        }
    }
    out
}

/// Fisher information for the DoA of a single path.
pub fn fim_ssh_doa(scenario: &Scenario, theta_deg: f64) -> Result<FisherResult> {
    fim_ssh_doa_with(scenario, theta_deg, Nuisance::Known)
}

pub fn fim_ssh_doa_with(
    scenario: &Scenario,
    theta_deg: f64,
    nuisance: Nuisance,
) -> Result<FisherResult> {
    let mut model = ssh_bins(scenario, theta_deg)?;
    let mut params = vec!["theta_i".to_string()];
    if nuisance == Nuisance::FlatGain {
        model.grads.push(model.nu.clone());
        params.push("gain".into());
    }
    let j = fisher_matrix(&model);
    let crb_deg = crb_from_fim(&j, 1);
    Ok(FisherResult { params, j, crb_deg })
}

/// Fisher information for (θ_i, θ_d) of a transmit pair.
pub fn fim_joint(scenario: &Scenario, theta_i_deg: f64, theta_d_deg: f64) -> Result<FisherResult> {
    let model = joint_bins(scenario, theta_i_deg, theta_d_deg)?;
    let j = fisher_matrix(&model);
    let crb_deg = crb_from_fim(&j, 2);
    Ok(FisherResult {
        params: vec!["theta_i".into(), "theta_d".into()],
        j,
        crb_deg,
    })
}

/// SSH bound in degrees (∞ at the endpoints).
pub fn crb_ssh_doa(scenario: &Scenario, theta_deg: f64) -> Result<f64> {
    Ok(fim_ssh_doa(scenario, theta_deg)?.crb_deg[0])
}

/// `Σ_k ∂ν_k/∂θ·E[∂ ln p/∂ν]`, the mean DoA score.
pub fn ssh_score_mean(scenario: &Scenario, theta_deg: f64) -> Result<f64> {
    let model = ssh_bins(scenario, theta_deg)?;
    Ok(model
        .nu
        .iter()
        .zip(&model.grads[0])
        .filter(|(_, g)| **g != 0.0)
        .map(|(&nu, g)| g * rice_score_mean(nu, model.n0))
        .sum())
}

/// One row of a CRB sweep export.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CrbRow {
    pub theta_deg: f64,
    pub crb_deg: f64,
    pub method: String,
    pub snr_db: f64,
    pub d_m: f64,
    pub range_m: f64,
    pub vapor_g_m3: f64,
}

/// SSH bound of a single-path scenario at each θ.
pub fn crb_sweep(scenario: &Scenario, thetas: &[f64], exec: Execution) -> Result<Vec<CrbRow>> {
    let vals = map_indexed(thetas.len(), exec, |i| crb_ssh_doa(scenario, thetas[i]));
    thetas
        .iter()
        .zip(vals)
        .map(|(&t, v)| {
            Ok(CrbRow {
                theta_deg: t,
                crb_deg: v?,
                method: "ssh".into(),
                snr_db: scenario.snr_db,
                d_m: scenario.d_m,
                range_m: scenario.channel.range_m,
                vapor_g_m3: scenario.channel.water_vapor_g_m3,
            })
        })
        .collect()
}

pub fn write_crb_csv<W: std::io::Write>(rows: &[CrbRow], w: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    for r in rows {
        wtr.serialize(r)?;
    }
    wtr.flush()?;
    Ok(())
}

use num_complex::Complex64;

use super::aod::refine_pair;
use super::parabolic;
use crate::channel::channel_response;
use crate::error::{Error, Result};
use crate::scenario::{Scenario, TxMode, SPEED_OF_LIGHT};
use crate::synth::{shaper_zeta, ObservedSpectrum};

/// Default θ grid step of the MMSE search.
pub const DEFAULT_MMSE_STEP_DEG: f64 = 0.1;

/// Noise-free power-spectrum template `θ ↦ E_r(f; θ)` of a single-path
/// scenario, normalized exactly like [`crate::synth::synthesize`].
pub fn ssh_template(scenario: &Scenario) -> Result<impl Fn(f64) -> Vec<f64> + Sync + Send> {
    if scenario.tx_mode != TxMode::Single || scenario.paths.len() != 1 {
        return Err(Error::Validation(
            "SSH template needs a single-path, single-transmitter scenario".into(),
        ));
    }
    let grid = scenario.grid;
    let gain = scenario.paths[0].gain_linear;
    let amp2: Vec<f64> = channel_response(&grid, &scenario.channel)?
        .into_iter()
        .map(|a| (a * gain).powi(2))
        .collect();
    let freqs = grid.frequencies();
    let d_m = scenario.d_m;
    Ok(move |theta_deg: f64| {
        let z = shaper_zeta(theta_deg, d_m);
        let p: Vec<f64> = freqs
            .iter()
            .zip(&amp2)
            .map(|(f, a2)| {
                let v = Complex64::new(1.0, 0.0)
                    + Complex64::from_polar(1.0, -2.0 * std::f64::consts::PI * f * z);
                a2 * v.norm_sqr()
            })
            .collect();
        let peak = p.iter().cloned().fold(0.0, f64::max);
        p.into_iter().map(|x| x / peak).collect()
    })
}

/// Uniform θ grid `[0°, 180°]`.
pub fn theta_grid(step_deg: f64) -> Vec<f64> {
    let n = (180.0 / step_deg).round() as usize + 1;
    (0..n).map(|i| (i as f64 * step_deg).min(180.0)).collect()
}

/// Refines a grid argmin with the parabola through its neighbours.
fn refine(theta: &[f64], cost: &[f64], i: usize) -> f64 {
    if i == 0 || i + 1 >= cost.len() {
        return theta[i];
    }
    let (d, _) = parabolic(-cost[i - 1], -cost[i], -cost[i + 1]);
    let step = theta[i + 1] - theta[i];
    (theta[i] + d * step).clamp(0.0, 180.0)
}

fn argmin(cost: &[f64]) -> usize {
    cost.iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .map_or(0, |(i, _)| i)
}

/// Precomputed templates for repeated MMSE estimates on one grid.
#[derive(Debug, Clone)]
pub struct TemplateBank {
    pub theta_deg: Vec<f64>,
    templates: Vec<Vec<f64>>,
}

impl TemplateBank {
    pub fn new(builder: impl Fn(f64) -> Vec<f64>, theta_deg: &[f64]) -> TemplateBank {
        TemplateBank {
            theta_deg: theta_deg.to_vec(),
            templates: theta_deg.iter().map(|&t| builder(t)).collect(),
        }
    }

    /// `argmin_θ ‖A − A_E(θ)‖²` with parabolic refinement.
    pub fn estimate(&self, a: &[f64]) -> f64 {
        let cost: Vec<f64> = self
            .templates
            .iter()
            .map(|t| t.iter().zip(a).map(|(x, y)| (y - x) * (y - x)).sum())
            .collect();
        refine(&self.theta_deg, &cost, argmin(&cost))
    }

    /// Estimate from an observation, using the bias-corrected power `z² − N0`.
    pub fn estimate_observed(&self, obs: &ObservedSpectrum) -> f64 {
        let a: Vec<f64> = obs.z.iter().map(|z| z * z - obs.n0).collect();
        self.estimate(&a)
    }
}

/// MMSE DoA: the grid θ whose noise-free template is closest in squared L2
/// distance to the observed power spectrum `z² − N0`.
pub fn mmse_estimate(
    observed: &ObservedSpectrum,
    template_builder: impl Fn(f64) -> Vec<f64>,
    theta_grid_deg: &[f64],
) -> f64 {
    TemplateBank::new(template_builder, theta_grid_deg).estimate_observed(observed)
}

/// Joint AoD/DoA search for a transmit pair. Templates
/// `|a(f)|²(1 + cos 2πfu)(1 + cos 2πfv)` sit on a uniform lag grid with
/// half-bin spacing; each is fitted with a free scale, and the best one seeds
/// the least-squares lag refinement.
#[derive(Debug, Clone)]
pub struct JointBank {
    k: f64,
    factor: f64,
    res: f64,
    lags: Vec<(f64, f64)>,
    unit: Vec<Vec<f64>>,
}

impl JointBank {
    pub fn new(scenario: &Scenario) -> Result<JointBank> {
        if scenario.tx_mode != TxMode::Pair || scenario.paths.len() != 1 {
            return Err(Error::Validation(
                "joint search needs a single-path transmit-pair scenario".into(),
            ));
        }
        let grid = scenario.grid;
        let amp2: Vec<f64> = channel_response(&grid, &scenario.channel)?
            .into_iter()
            .map(|a| a * a)
            .collect();
        let freqs = grid.frequencies();
        let k = scenario.d_m / SPEED_OF_LIGHT;
        let factor = scenario.tx_delay_factor;
        let res = 1.0 / (grid.n_samples as f64 * grid.spacing());
        let n = (4.0 * k / res).ceil() as usize + 1;
        let axis = |lo: f64| (0..n).map(move |i| lo + 2.0 * k * i as f64 / (n - 1) as f64);
        let lags: Vec<(f64, f64)> = axis(0.0)
            .flat_map(|u| axis((factor - 1.0) * k).map(move |v| (u, v)))
            .collect();
        let unit = lags
            .iter()
            .map(|&(u, v)| {
                let g: Vec<f64> = freqs
                    .iter()
                    .zip(&amp2)
                    .map(|(f, a2)| {
                        let w = 2.0 * std::f64::consts::PI * f;
                        a2 * (1.0 + (w * u).cos()) * (1.0 + (w * v).cos())
                    })
                    .collect();
                let norm = g.iter().map(|x| x * x).sum::<f64>().sqrt();
                g.into_iter().map(|x| x / norm).collect()
            })
            .collect();
        Ok(JointBank {
            k,
            factor,
            res,
            lags,
            unit,
        })
    }

    /// `(aod_deg, doa_deg)` from the bias-corrected power `z² − N0`.
    pub fn estimate_observed(&self, obs: &ObservedSpectrum) -> (f64, f64) {
        let y: Vec<f64> = obs.z.iter().map(|z| z * z - obs.n0).collect();
        let (mut best, mut score) = (0, f64::NEG_INFINITY);
        for (i, t) in self.unit.iter().enumerate() {
            let s: f64 = t.iter().zip(&y).map(|(a, b)| a * b).sum();
            if s > score {
                (best, score) = (i, s);
            }
        }
        let k = self.k;
        let (u, v) = refine_pair(
            obs,
            self.lags[best],
            (0.0, 2.0 * k),
            ((self.factor - 1.0) * k, (self.factor + 1.0) * k),
            self.res,
        );
        let aod = (self.factor - v / k).clamp(-1.0, 1.0).acos().to_degrees();
        let doa = (1.0 - u / k).clamp(-1.0, 1.0).acos().to_degrees();
        (aod, doa)
    }
}

/// Array counterpart of [`TemplateBank`]: with an unknown complex gain the
/// least-squares fit reduces to maximizing `|aᴴy|²/‖a‖²`.
#[derive(Debug, Clone)]
pub struct ArrayBank {
    pub theta_deg: Vec<f64>,
    unit: Vec<Vec<Complex64>>,
}

impl ArrayBank {
    pub fn new(builder: impl Fn(f64) -> Vec<Complex64>, theta_deg: &[f64]) -> ArrayBank {
        let unit = theta_deg
            .iter()
            .map(|&t| {
                let a = builder(t);
                let n = a.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
                a.into_iter().map(|x| x / n).collect()
            })
            .collect();
        ArrayBank {
            theta_deg: theta_deg.to_vec(),
            unit,
        }
    }
}

/// MMSE DoA for an array snapshot.
pub fn array_mmse(y: &[Complex64], bank: &ArrayBank) -> f64 {
    let cost: Vec<f64> = bank
        .unit
        .iter()
        .map(|a| {
            let p: Complex64 = a.iter().zip(y).map(|(u, v)| u.conj() * v).sum();
            -p.norm_sqr()
        })
        .collect();
    refine(&bank.theta_deg, &cost, argmin(&cost))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::crb::arrays::{array_snapshot, ula_steering};
    use crate::synth::synthesize;

    #[test]
    fn template_matches_synthesis() {
        let sc = Scenario::los(73.0, 5e-3);
        let t = ssh_template(&sc).unwrap()(73.0);
        let p = synthesize(&sc).unwrap().power();
        for (a, b) in t.iter().zip(&p) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn noise_free_recovers_grid_angle() {
        let grid = theta_grid(DEFAULT_MMSE_STEP_DEG);
        for theta in [20.0, 60.0, 133.3] {
            let sc = Scenario::los(theta, 5e-3);
            let obs = ObservedSpectrum::noise_free(synthesize(&sc).unwrap());
            let est = mmse_estimate(&obs, ssh_template(&sc).unwrap(), &grid);
            assert!((est - theta).abs() < 1e-3, "{theta}: {est}");
        }
    }

    #[test]
    fn joint_bank_noise_free_round_trip() {
        for (ti, td) in [(60.0, 120.0), (60.0, 60.0), (30.0, 150.0), (120.0, 45.0)] {
            let sc = Scenario::tx_pair(ti, td, 5e-3);
            let bank = JointBank::new(&sc).unwrap();
            let obs = ObservedSpectrum::noise_free(synthesize(&sc).unwrap());
            let (aod, doa) = bank.estimate_observed(&obs);
            assert!((aod - td).abs() < 0.05, "{ti},{td}: {aod}");
            assert!((doa - ti).abs() < 0.05, "{ti},{td}: {doa}");
        }
        assert!(JointBank::new(&Scenario::los(60.0, 5e-3)).is_err());
    }

    #[test]
    fn array_noise_free_and_noisy() {
        let grid = theta_grid(0.1);
        let bank = ArrayBank::new(|t| ula_steering(60, t), &grid);
        assert!((array_mmse(&ula_steering(60, 61.2), &bank) - 61.2).abs() < 1e-3);
        let y = array_snapshot(&ula_steering(60, 61.2), 20.0, 1, 0);
        assert!((array_mmse(&y, &bank) - 61.2).abs() < 0.5);
    }
}

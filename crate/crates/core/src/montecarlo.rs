//! Monte Carlo RMSE of the DoA estimators.
//!
//! Trial `t` draws its noise from stream `t` of the scenario seed, so a run is
//! reproducible and independent of how trials are scheduled.

use serde::{Deserialize, Serialize};

use crate::crb::arrays::{array_snapshot, default_aperture, lens_response, ula_steering};
use crate::error::{Error, Result};
use crate::estimators::{
    array_mmse, estimate_aod_doa, estimate_doa_single, ssh_template, theta_grid, ArrayBank,
    JointBank, TemplateBank, DEFAULT_MMSE_STEP_DEG,
};
use crate::exec::{map_indexed, Execution};
use crate::scenario::Scenario;
use crate::synth::{add_noise_stream, synthesize};

/// Largest tolerated share of failed trials.
pub const MAX_FAILURE_RATE: f64 = 0.2;

/// Fewest trials accepted by the drivers.
pub const MIN_TRIALS: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimatorId {
    /// ζ-spectrum peak with least-squares refinement.
    Peak,
    /// Template-matching MMSE on a θ grid.
    Mmse,
}

impl std::str::FromStr for EstimatorId {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "peak" => Ok(EstimatorId::Peak),
            "mmse" => Ok(EstimatorId::Mmse),
            other => Err(Error::Validation(format!("unknown estimator '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RmseResult {
    pub rmse_deg: f64,
    /// Standard error of the RMSE (delta method).
    pub stderr_deg: f64,
    pub trials: usize,
    pub failures: usize,
}

/// RMSE and its standard error from per-trial errors, failures excluded.
pub fn summarize(errors: &[Option<f64>]) -> Result<RmseResult> {
    let trials = errors.len();
    let ok: Vec<f64> = errors.iter().flatten().map(|e| e * e).collect();
    let failures = trials - ok.len();
    if failures as f64 > MAX_FAILURE_RATE * trials as f64 || ok.is_empty() {
        return Err(Error::TooManyFailures {
            failed: failures,
            trials,
            last: "estimator did not return an angle".into(),
        });
    }
    let n = ok.len() as f64;
    let mse = ok.iter().sum::<f64>() / n;
    let var = ok.iter().map(|s| (s - mse).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
    let rmse = mse.sqrt();
    let stderr = if rmse > 0.0 {
        (var / n).sqrt() / (2.0 * rmse)
    } else {
        0.0
    };
    Ok(RmseResult {
        rmse_deg: rmse,
        stderr_deg: stderr,
        trials,
        failures,
    })
}

fn check_trials(trials: usize) -> Result<()> {
    if trials < MIN_TRIALS {
        return Err(Error::Validation(format!(
            "need at least {MIN_TRIALS} trials, got {trials}"
        )));
    }
    Ok(())
}

/// RMSE of a single-path DoA estimator over `trials` noisy shots.
pub fn rmse_monte_carlo(
    scenario: &Scenario,
    estimator: EstimatorId,
    trials: usize,
    exec: Execution,
) -> Result<RmseResult> {
    check_trials(trials)?;
    let mean = synthesize(scenario)?;
    let truth = scenario.paths[0].theta_deg;
    let bank = match estimator {
        EstimatorId::Mmse => Some(TemplateBank::new(
            ssh_template(scenario)?,
            &theta_grid(DEFAULT_MMSE_STEP_DEG),
        )),
        EstimatorId::Peak => None,
    };
    let errors = map_indexed(trials, exec, |t| {
        let obs = add_noise_stream(&mean, scenario.snr_db, scenario.seed, t as u64);
        let est = match &bank {
            Some(b) => Some(b.estimate_observed(&obs)),
            None => estimate_doa_single(&obs, scenario.d_m)
                .ok()
                .map(|e| e.theta_deg),
        };
        est.map(|e| e - truth)
    });
    summarize(&errors)
}

/// RMSE of a joint estimator, as `(aod, doa)`. `Peak` reads the two largest
/// ζ-spectrum lags, `Mmse` searches a template bank.
pub fn rmse_joint(
    scenario: &Scenario,
    estimator: EstimatorId,
    trials: usize,
    exec: Execution,
) -> Result<(RmseResult, RmseResult)> {
    check_trials(trials)?;
    let mean = synthesize(scenario)?;
    let ti = scenario.paths[0].theta_deg;
    let td = scenario.aod()?;
    let bank = match estimator {
        EstimatorId::Mmse => Some(JointBank::new(scenario)?),
        EstimatorId::Peak => None,
    };
    let pairs = map_indexed(trials, exec, |t| {
        let obs = add_noise_stream(&mean, scenario.snr_db, scenario.seed, t as u64);
        let est = match &bank {
            Some(b) => Some(b.estimate_observed(&obs)),
            None => estimate_aod_doa(&obs, scenario.d_m)
                .ok()
                .map(|e| (e.aod_deg, e.doa_deg)),
        };
        est.map(|(a, d)| (a - td, d - ti))
    });
    let aod: Vec<Option<f64>> = pairs.iter().map(|p| p.map(|x| x.0)).collect();
    let doa: Vec<Option<f64>> = pairs.iter().map(|p| p.map(|x| x.1)).collect();
    Ok((summarize(&aod)?, summarize(&doa)?))
}

/// Baseline array for RMSE comparisons.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ArrayKind {
    Ula(usize),
    Lens(usize),
}

/// MMSE RMSE of a baseline array, one snapshot per trial.
pub fn rmse_array(
    kind: ArrayKind,
    theta_deg: f64,
    snr_db: f64,
    trials: usize,
    seed: u64,
    exec: Execution,
) -> Result<RmseResult> {
    check_trials(trials)?;
    let response = move |t: f64| match kind {
        ArrayKind::Ula(n) => ula_steering(n, t),
        ArrayKind::Lens(m) => lens_response(m, default_aperture(m), t)
            .into_iter()
            .map(|x| num_complex::Complex64::new(x, 0.0))
            .collect(),
    };
    let bank = ArrayBank::new(response, &theta_grid(DEFAULT_MMSE_STEP_DEG));
    let truth = response(theta_deg);
    let errors = map_indexed(trials, exec, |t| {
        let y = array_snapshot(&truth, snr_db, seed, t as u64);
        Some(array_mmse(&y, &bank) - theta_deg)
    });
    summarize(&errors)
}

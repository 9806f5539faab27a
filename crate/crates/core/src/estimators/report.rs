use serde::Serialize;

use super::{
    estimate_aod_doa, estimate_doa_single, estimate_rel_distances, max_shaper_lag,
    significant_peaks, theta_from_zeta, zeta_spectrum, Peak, DC_EXCLUSION, RELATIVE_FLOOR,
};
use crate::error::Result;
use crate::scenario::{Scenario, TxMode};
use crate::synth::ObservedSpectrum;

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ReportDiagnostics {
    /// Shaper-band peaks used for the DoAs.
    pub peaks: Vec<Peak>,
    pub near_endfire: bool,
    pub alias_risk: bool,
    pub warnings: Vec<String>,
}

/// Everything estimated from one shot.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct EstimateReport {
    /// Sorted by descending power.
    pub doas_deg: Vec<f64>,
    /// Relative to the strongest path.
    pub powers_db: Vec<f64>,
    pub rel_distances_m: Vec<f64>,
    pub aod_deg: Option<f64>,
    pub diagnostics: ReportDiagnostics,
}

impl EstimateReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Runs the estimators that fit the scenario layout: joint AoD/DoA for a
/// transmit pair, the refined single-path DoA for one path, and shaper-band
/// peaks plus cross-term distances for several.
pub fn estimate_report(spectrum: &ObservedSpectrum, scenario: &Scenario) -> Result<EstimateReport> {
    let d = scenario.d_m;
    let mut report = EstimateReport::default();
    if scenario.tx_mode == TxMode::Pair {
        let est = estimate_aod_doa(spectrum, d)?;
        report.doas_deg = vec![est.doa_deg];
        report.powers_db = vec![0.0];
        report.aod_deg = Some(est.aod_deg);
        report.diagnostics.warnings.extend(est.warning);
        return Ok(report);
    }
    let zs = zeta_spectrum(spectrum);
    let zmax = max_shaper_lag(d);
    let peaks = significant_peaks(
        &zs,
        DC_EXCLUSION * zmax,
        zmax + zs.resolution_s,
        RELATIVE_FLOOR,
    );
    if scenario.paths.len() == 1 {
        let est = estimate_doa_single(spectrum, d)?;
        report.doas_deg = vec![est.theta_deg];
        report.powers_db = vec![0.0];
        report.diagnostics.near_endfire = est.near_endfire;
    } else {
        let top = peaks.first().map_or(1.0, |p| p.magnitude);
        for p in peaks.iter().take(scenario.paths.len()) {
            report.doas_deg.push(theta_from_zeta(p.zeta_s, d));
            report.powers_db.push(10.0 * (p.magnitude / top).log10());
        }
        report.diagnostics.near_endfire = peaks.is_empty();
        let dist = estimate_rel_distances(spectrum, d, None);
        report.rel_distances_m = dist.distances_m;
        report.diagnostics.alias_risk = dist.alias_risk;
    }
    report.diagnostics.peaks = peaks;
    Ok(report)
}

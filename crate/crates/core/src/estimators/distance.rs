use serde::Serialize;

use super::{
    find_peaks, max_shaper_lag, noise_threshold, significant_peaks, zeta_spectrum, Peak,
    DC_EXCLUSION, RELATIVE_FLOOR,
};
use crate::scenario::{nyquist_lag, SPEED_OF_LIGHT};
use crate::synth::ObservedSpectrum;
use crate::zeta::ZetaSpectrum;

/// Cross-term peaks weaker than this fraction of the strongest shaper peak
/// are treated as window leakage.
const CROSS_FLOOR: f64 = 0.02;

/// Relative score gap under which two hypotheses count as tied.
const TIE_TOLERANCE: f64 = 0.02;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DistanceEstimate {
    /// Pairwise path-length differences, ascending.
    pub distances_m: Vec<f64>,
    /// The requested search range, or a detected cross term, reaches the
    /// Nyquist lag of the grid, so larger differences may have folded back.
    pub alias_risk: bool,
}

/// Path-length differences from the cross terms beyond the shaper band.
///
/// The cross term of a late path L and an early path E puts four lines at
/// `ΔT + {0, ζ_L, −ζ_E, ζ_L − ζ_E}`. The shaper lags found inside the band
/// (and 0) are tried as `(ζ_L, ζ_E)`, the hypothesis whose four lines collect
/// the most ζ-spectrum magnitude wins, and ΔT is averaged over its lines.
/// Near-ties are broken towards a stronger early path.
pub fn estimate_rel_distances(
    spectrum: &ObservedSpectrum,
    d_m: f64,
    search_max_m: Option<f64>,
) -> DistanceEstimate {
    let zs = zeta_spectrum(spectrum);
    let zmax = max_shaper_lag(d_m);
    let res = zs.resolution_s;
    let nyq = nyquist_lag(&spectrum.grid);

    let band = significant_peaks(&zs, DC_EXCLUSION * zmax, zmax + res, RELATIVE_FLOOR);
    let band_top = band.first().map_or(0.0, |p| p.magnitude);
    let mut lags: Vec<(f64, f64)> = band
        .iter()
        .map(|p| (p.zeta_s.min(zmax), p.magnitude))
        .collect();
    lags.push((0.0, 0.0));

    let mut cross = find_peaks(&zs, zmax + 3.0 * res, nyq, noise_threshold(&zs));
    let top = cross.first().map_or(0.0, |p| p.magnitude);
    let floor = (RELATIVE_FLOOR * top).max(CROSS_FLOOR * band_top);
    cross.retain(|p| p.magnitude >= floor);
    cross.sort_by(|a, b| a.zeta_s.total_cmp(&b.zeta_s));

    let mut distances: Vec<f64> = clusters(&cross, 2.0 * zmax + 2.0 * res)
        .iter()
        .filter_map(|c| fit_cluster(&zs, c, &lags, res))
        .map(|dt| dt * SPEED_OF_LIGHT)
        .collect();
    distances.sort_by(f64::total_cmp);
    distances.dedup_by(|a, b| (*a - *b).abs() < res * SPEED_OF_LIGHT);

    let near_nyquist = cross.last().is_some_and(|p| p.zeta_s > nyq - 2.0 * zmax);
    let beyond = search_max_m.is_some_and(|m| m > nyq * SPEED_OF_LIGHT);
    DistanceEstimate {
        distances_m: distances,
        alias_risk: near_nyquist || beyond,
    }
}

fn clusters(peaks: &[Peak], gap: f64) -> Vec<Vec<Peak>> {
    let mut out: Vec<Vec<Peak>> = Vec::new();
    for p in peaks {
        match out.last_mut() {
            Some(c) if p.zeta_s - c[c.len() - 1].zeta_s <= gap => c.push(*p),
            _ => out.push(vec![*p]),
        }
    }
    out
}

fn offsets(zl: f64, ze: f64, res: f64) -> Vec<f64> {
    let mut o = vec![0.0, zl, -ze, zl - ze];
    o.sort_by(f64::total_cmp);
    o.dedup_by(|a, b| (*a - *b).abs() < 0.5 * res);
    o
}

struct Hypothesis {
    score: f64,
    dt: f64,
    offsets: Vec<f64>,
    early_stronger: bool,
}

fn fit_cluster(zs: &ZetaSpectrum, cluster: &[Peak], lags: &[(f64, f64)], res: f64) -> Option<f64> {
    let mut hyps: Vec<Hypothesis> = Vec::new();
    for &(zl, ml) in lags {
        for &(ze, me) in lags {
            let offs = offsets(zl, ze, res);
            for p in cluster {
                for &o in &offs {
                    let dt = p.zeta_s - o;
                    let score: f64 = offs.iter().map(|&q| zs.magnitude_at(dt + q)).sum();
                    hyps.push(Hypothesis {
                        score,
                        dt,
                        offsets: offs.clone(),
                        early_stronger: me >= ml,
                    });
                }
            }
        }
    }
    let top = hyps.iter().map(|h| h.score).fold(0.0, f64::max);
    // swapped roles give the same lines; prefer the stronger early path
    let best = hyps
        .iter()
        .filter(|h| h.score >= (1.0 - TIE_TOLERANCE) * top)
        .max_by(|a, b| {
            a.early_stronger
                .cmp(&b.early_stronger)
                .then(a.score.total_cmp(&b.score))
        })?;
    let (dt, offs) = (best.dt, &best.offsets);
    let hits: Vec<f64> = offs
        .iter()
        .filter_map(|&o| {
            cluster
                .iter()
                .filter(|p| (p.zeta_s - (dt + o)).abs() <= res)
                .min_by(|a, b| {
                    (a.zeta_s - dt - o)
                        .abs()
                        .total_cmp(&(b.zeta_s - dt - o).abs())
                })
                .map(|p| p.zeta_s - o)
        })
        .collect();
    if hits.is_empty() {
        Some(dt)
    } else {
        Some(hits.iter().sum::<f64>() / hits.len() as f64)
    }
}

//! Built-in parameter sets for the figure runs.

use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use clap::ValueEnum;
use serde_json::{json, Value};

use specshape::channel::ChannelProfile;
use specshape::crb::arrays::{crb_lens, crb_ula, default_aperture};
use specshape::crb::{crb_ssh_doa, crb_sweep, fim_joint};
use specshape::estimators::{matched_filter, zeta_spectrum};
use specshape::exec::map_indexed;
use specshape::montecarlo::{rmse_array, rmse_joint, rmse_monte_carlo, ArrayKind, EstimatorId};
use specshape::synth::synthesize;
use specshape::{Execution, ObservedSpectrum, Path as Ray, Scenario};

use crate::output::{create, Table};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FigureId {
    Fig6a,
    Fig6b,
    Fig6c,
    Fig6d,
    Fig7,
    Fig8,
    Fig9,
    Fig10,
    Fig11,
    Fig12,
    Fig13,
}

impl FigureId {
    pub fn name(self) -> String {
        format!("{self:?}").to_lowercase()
    }
}

/// Element counts of the array baselines in the CRB comparison.
pub const ULA_SIZES: [usize; 4] = [7, 60, 111, 120];
pub const LENS_SIZES: [usize; 3] = [15, 80, 201];

/// Grid spacing used whenever a path-length difference needs resolving.
pub const FINE_SPACING_HZ: f64 = 0.15e9;

/// Excess length above which the grid is refined.
pub const REFINE_THRESHOLD_M: f64 = 0.09;

pub struct FigureRun {
    pub outputs: Vec<PathBuf>,
    pub config: Value,
}

pub struct Settings<'a> {
    pub out_dir: &'a Path,
    pub trials: usize,
    pub seed: Option<u64>,
    pub overrides: Option<&'a Value>,
    pub exec: Execution,
}

fn merge(base: &mut Value, patch: &Value) {
    match (base, patch) {
        (Value::Object(b), Value::Object(p)) => {
            for (k, v) in p {
                merge(b.entry(k.clone()).or_insert(Value::Null), v);
            }
        }
        (b, p) => *b = p.clone(),
    }
}

/// `base` with the user's partial scenario merged over it.
pub fn with_overrides(base: Scenario, overrides: Option<&Value>) -> Result<Scenario> {
    let Some(patch) = overrides else {
        return Ok(base);
    };
    let mut v = serde_json::to_value(&base)?;
    merge(&mut v, patch);
    let sc: Scenario = serde_json::from_value(v).context("applying scenario overrides")?;
    sc.validate()?;
    Ok(sc)
}

fn thetas() -> Vec<f64> {
    (1..=179).map(f64::from).collect()
}

fn dry_los(theta: f64, snr_db: f64) -> Scenario {
    let mut sc = Scenario::los(theta, 5e-3);
    sc.channel = ChannelProfile::dry(100.0);
    sc.snr_db = snr_db;
    sc
}

/// Two paths at 60° and 100°, the second 6 dB weaker and 0.5 m longer.
pub fn two_path() -> Scenario {
    let mut sc = dry_los(60.0, 20.0);
    sc.paths.push(Ray::new(100.0, 0.5, 10f64.powf(-6.0 / 20.0)));
    sc.refined_for_distances(REFINE_THRESHOLD_M, FINE_SPACING_HZ)
}

fn write(table: &Table, dir: &Path, name: &str, outputs: &mut Vec<PathBuf>) -> Result<()> {
    let path = dir.join(name);
    table.write(create(&path)?)?;
    outputs.push(path);
    Ok(())
}

pub fn run(id: FigureId, s: &Settings) -> Result<FigureRun> {
    let seeded = |mut sc: Scenario| -> Result<Scenario> {
        sc = with_overrides(sc, s.overrides)?;
        if let Some(seed) = s.seed {
            sc.seed = seed;
        }
        Ok(sc)
    };
    let name = id.name();
    let mut outputs = Vec::new();
    let dir = s.out_dir;
    let config = match id {
        FigureId::Fig6a | FigureId::Fig6b | FigureId::Fig6c | FigureId::Fig6d => {
            let snr = match id {
                FigureId::Fig6a => 20.0,
                FigureId::Fig6b => 10.0,
                FigureId::Fig6c => 0.0,
                _ => -10.0,
            };
            let sc = seeded(dry_los(60.0, snr))?;
            let th = thetas();
            let ssh = crb_sweep(&sc, &th, s.exec)?;
            let mut header = vec!["theta_deg".to_string(), "crb_ssh".into()];
            header.extend(ULA_SIZES.iter().map(|n| format!("crb_ula_{n}")));
            header.extend(LENS_SIZES.iter().map(|m| format!("crb_la_{m}")));
            let mut t = Table::new(header);
            for (theta, row) in th.iter().zip(&ssh) {
                let mut r = vec![*theta, row.crb_deg];
                r.extend(ULA_SIZES.iter().map(|&n| crb_ula(n, sc.snr_db, *theta)));
                r.extend(
                    LENS_SIZES
                        .iter()
                        .map(|&m| crb_lens(m, default_aperture(m), sc.snr_db, *theta)),
                );
                t.push(r);
            }
            write(&t, dir, &format!("{name}.csv"), &mut outputs)?;
            json!({ "scenario": sc, "ula_sizes": ULA_SIZES, "lens_sizes": LENS_SIZES,
                    "lens_aperture_over_lambda": "M/2" })
        }
        FigureId::Fig7 => {
            let ranges = [10.0, 100.0, 1000.0];
            let mut base = Scenario::los(60.0, 5e-3);
            base.channel = ChannelProfile::humid(100.0, 10.0);
            base.snr_db = 5.0;
            let base = seeded(base)?;
            let th = thetas();
            let mut cols = Vec::new();
            for r in ranges {
                let mut sc = base.clone();
                sc.channel.range_m = r;
                cols.push(crb_sweep(&sc, &th, s.exec)?);
            }
            let mut t = Table::new(["theta_deg", "crb_10m", "crb_100m", "crb_1000m"]);
            for (i, theta) in th.iter().enumerate() {
                t.push(vec![
                    *theta,
                    cols[0][i].crb_deg,
                    cols[1][i].crb_deg,
                    cols[2][i].crb_deg,
                ]);
            }
            write(&t, dir, &format!("{name}.csv"), &mut outputs)?;

            let rmse_ranges: Vec<f64> = (1..=10).map(|i| 200.0 * i as f64).collect();
            let ds = [1e-3, 5e-3, 10e-3];
            let mut t = Table::new([
                "range_m",
                "rmse_d1mm",
                "stderr_d1mm",
                "rmse_d5mm",
                "stderr_d5mm",
                "rmse_d10mm",
                "stderr_d10mm",
            ]);
            for &r in &rmse_ranges {
                let mut row = vec![r];
                for &d in &ds {
                    let mut sc = base.clone();
                    sc.channel.range_m = r;
                    sc.d_m = d;
                    let res = rmse_monte_carlo(&sc, EstimatorId::Mmse, s.trials, s.exec)
                        .with_context(|| format!("{name}: range {r} m, D {d} m"))?;
                    row.extend([res.rmse_deg, res.stderr_deg]);
                }
                t.push(row);
            }
            write(&t, dir, &format!("{name}_rmse.csv"), &mut outputs)?;
            json!({ "scenario": base, "crb_ranges_m": ranges, "rmse_ranges_m": rmse_ranges,
                    "rmse_d_m": ds, "estimator": "mmse", "trials": s.trials })
        }
        FigureId::Fig8 => {
            let base = seeded(dry_los(60.0, 0.0))?;
            let ds = [1e-3, 5e-3, 10e-3];
            let th = thetas();
            let mut cols = Vec::new();
            for d in ds {
                let mut sc = base.clone();
                sc.d_m = d;
                cols.push(crb_sweep(&sc, &th, s.exec)?);
            }
            let mut t = Table::new(["theta_deg", "crb_d1mm", "crb_d5mm", "crb_d10mm"]);
            for (i, theta) in th.iter().enumerate() {
                t.push(vec![
                    *theta,
                    cols[0][i].crb_deg,
                    cols[1][i].crb_deg,
                    cols[2][i].crb_deg,
                ]);
            }
            write(&t, dir, &format!("{name}.csv"), &mut outputs)?;
            json!({ "scenario": base, "d_m": ds })
        }
        FigureId::Fig9 => {
            let mut base = Scenario::tx_pair(60.0, 60.0, 5e-3);
            base.channel = ChannelProfile::dry(100.0);
            base.snr_db = 5.0;
            let base = seeded(base)?;
            let fixed = [30.0, 90.0, 150.0];
            let th = thetas();
            let n = th.len();
            let vals = map_indexed(2 * fixed.len() * n, s.exec, |idx| {
                let (series, i) = (idx / n, idx % n);
                let other = fixed[series % fixed.len()];
                let (ti, td, which) = if series < fixed.len() {
                    (th[i], other, 0)
                } else {
                    (other, th[i], 1)
                };
                let mut sc = base.clone();
                sc.paths[0].theta_deg = ti;
                sc.aod_deg = Some(td);
                fim_joint(&sc, ti, td).map(|f| f.crb_deg[which])
            });
            let vals: Vec<f64> = vals.into_iter().collect::<specshape::Result<_>>()?;
            let mut header = vec!["theta_deg".to_string()];
            header.extend(fixed.iter().map(|a| format!("crb_doa_aod{a}")));
            header.extend(fixed.iter().map(|a| format!("crb_aod_doa{a}")));
            let mut t = Table::new(header);
            for (i, theta) in th.iter().enumerate() {
                let mut r = vec![*theta];
                r.extend((0..2 * fixed.len()).map(|series| vals[series * n + i]));
                t.push(r);
            }
            write(&t, dir, &format!("{name}.csv"), &mut outputs)?;
            json!({ "scenario": base, "fixed_angles_deg": fixed })
        }
        FigureId::Fig10 => {
            let snrs = [-10.0, -5.0, 0.0, 3.0, 5.0, 10.0, 15.0, 20.0];
            let base = seeded(dry_los(60.0, 0.0))?;
            let theta = base.paths[0].theta_deg;
            let (ula, lens) = (60, 80);
            let mut t = Table::new([
                "snr_db",
                "rmse_ssh",
                "stderr_ssh",
                "rmse_ula_60",
                "stderr_ula_60",
                "rmse_la_80",
                "stderr_la_80",
                "crb_ssh",
                "crb_ula_60",
                "crb_la_80",
            ]);
            for &snr in &snrs {
                let mut sc = base.clone();
                sc.snr_db = snr;
                let ssh = rmse_monte_carlo(&sc, EstimatorId::Mmse, s.trials, s.exec)
                    .with_context(|| format!("{name}: SSH at {snr} dB"))?;
                let u = rmse_array(ArrayKind::Ula(ula), theta, snr, s.trials, sc.seed, s.exec)?;
                let l = rmse_array(ArrayKind::Lens(lens), theta, snr, s.trials, sc.seed, s.exec)?;
                t.push(vec![
                    snr,
                    ssh.rmse_deg,
                    ssh.stderr_deg,
                    u.rmse_deg,
                    u.stderr_deg,
                    l.rmse_deg,
                    l.stderr_deg,
                    crb_ssh_doa(&sc, theta)?,
                    crb_ula(ula, snr, theta),
                    crb_lens(lens, default_aperture(lens), snr, theta),
                ]);
            }
            write(&t, dir, &format!("{name}.csv"), &mut outputs)?;
            json!({ "scenario": base, "snr_db": snrs, "ula_elements": ula, "lens_elements": lens,
                    "estimator": "mmse", "trials": s.trials })
        }
        FigureId::Fig11 => {
            let snrs = [0.0, 2.5, 5.0, 7.5, 10.0, 15.0, 20.0];
            let mut base = Scenario::tx_pair(60.0, 60.0, 5e-3);
            base.channel = ChannelProfile::dry(100.0);
            let base = seeded(base)?;
            let mut t = Table::new([
                "snr_db",
                "rmse_aod",
                "stderr_aod",
                "rmse_doa",
                "stderr_doa",
                "failures",
            ]);
            for &snr in &snrs {
                let mut sc = base.clone();
                sc.snr_db = snr;
                let (a, d) = rmse_joint(&sc, EstimatorId::Mmse, s.trials, s.exec)
                    .with_context(|| format!("{name}: joint estimate at {snr} dB"))?;
                t.push(vec![
                    snr,
                    a.rmse_deg,
                    a.stderr_deg,
                    d.rmse_deg,
                    d.stderr_deg,
                    a.failures as f64,
                ]);
            }
            write(&t, dir, &format!("{name}.csv"), &mut outputs)?;
            json!({ "scenario": base, "snr_db": snrs, "estimator": "mmse", "trials": s.trials })
        }
        FigureId::Fig12 | FigureId::Fig13 => {
            let sc = seeded(two_path())?.refined_for_distances(REFINE_THRESHOLD_M, FINE_SPACING_HZ);
            let obs = ObservedSpectrum::noise_free(synthesize(&sc)?);
            if id == FigureId::Fig12 {
                let path = dir.join(format!("{name}.csv"));
                matched_filter(&obs, sc.d_m, 0.1).write_csv(create(&path)?)?;
                outputs.push(path);
            } else {
                let spec = dir.join(format!("{name}_spectrum.csv"));
                obs.write_csv(create(&spec)?)?;
                let zeta = dir.join(format!("{name}_zeta.csv"));
                zeta_spectrum(&obs).write_csv(create(&zeta)?)?;
                outputs.extend([spec, zeta]);
            }
            json!({ "scenario": sc, "noise_free": true, "matched_filter_step_deg": 0.1 })
        }
    };
    Ok(FigureRun { outputs, config })
}

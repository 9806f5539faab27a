//! Atmospheric channel magnitude |a(f)| from gaseous absorption.
//!
//! The line model sums oxygen and water-vapour resonances with
//! Van Vleck-Weisskopf type shapes plus the dry-air and water-vapour
//! continua. Line coefficients live in `data/gas_lines_v1.csv`. Spreading
//! loss is not part of |a(f)|; it is folded into the per-antenna SNR.

use std::path::Path as FsPath;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scenario::FrequencyGrid;

/// Default water-vapour density for the humid profile.
pub const HUMID_VAPOR_G_M3: f64 = 10.0;
pub const DEFAULT_TEMPERATURE_K: f64 = 288.15;
pub const DEFAULT_PRESSURE_HPA: f64 = 1013.25;

/// Frequency range covered by the line model.
pub const LINE_MODEL_BAND_HZ: (f64, f64) = (0.05e12, 1.1e12);

const GAS_LINES_CSV: &str = include_str!("../data/gas_lines_v1.csv");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ChannelKind {
    Dry,
    Humid,
    Tabulated,
}

/// One row of a tabulated specific-attenuation profile.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TablePoint {
    pub f_hz: f64,
    pub gamma_db_per_km: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(from = "RawChannel")]
pub struct ChannelProfile {
    pub kind: ChannelKind,
    pub water_vapor_g_m3: f64,
    pub range_m: f64,
    pub temperature_k: f64,
    /// Dry-air pressure; the total is this plus the vapour partial pressure.
    pub pressure_hpa: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub table: Option<Vec<TablePoint>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub table_csv: Option<String>,
}

#[derive(Deserialize)]
struct RawChannel {
    kind: ChannelKind,
    water_vapor_g_m3: Option<f64>,
    range_m: f64,
    temperature_k: Option<f64>,
    pressure_hpa: Option<f64>,
    table: Option<Vec<TablePoint>>,
    table_csv: Option<String>,
}

impl From<RawChannel> for ChannelProfile {
    fn from(raw: RawChannel) -> Self {
        let vapor = raw.water_vapor_g_m3.unwrap_or(match raw.kind {
            ChannelKind::Humid => HUMID_VAPOR_G_M3,
            _ => 0.0,
        });
        ChannelProfile {
            kind: raw.kind,
            water_vapor_g_m3: vapor,
            range_m: raw.range_m,
            temperature_k: raw.temperature_k.unwrap_or(DEFAULT_TEMPERATURE_K),
            pressure_hpa: raw.pressure_hpa.unwrap_or(DEFAULT_PRESSURE_HPA),
            table: raw.table,
            table_csv: raw.table_csv,
        }
    }
}

impl ChannelProfile {
    pub fn dry(range_m: f64) -> Self {
        ChannelProfile {
            kind: ChannelKind::Dry,
            water_vapor_g_m3: 0.0,
            range_m,
            temperature_k: DEFAULT_TEMPERATURE_K,
            pressure_hpa: DEFAULT_PRESSURE_HPA,
            table: None,
            table_csv: None,
        }
    }

    pub fn humid(range_m: f64, water_vapor_g_m3: f64) -> Self {
        ChannelProfile {
            kind: ChannelKind::Humid,
            water_vapor_g_m3,
            ..ChannelProfile::dry(range_m)
        }
    }

    pub fn tabulated(range_m: f64, table: Vec<TablePoint>) -> Self {
        ChannelProfile {
            kind: ChannelKind::Tabulated,
            table: Some(table),
            ..ChannelProfile::dry(range_m)
        }
    }

    /// Lossless channel, |a(f)| = 1.
    pub fn flat() -> Self {
        ChannelProfile::tabulated(
            1.0,
            vec![
                TablePoint {
                    f_hz: 1e9,
                    gamma_db_per_km: 0.0,
                },
                TablePoint {
                    f_hz: 1e13,
                    gamma_db_per_km: 0.0,
                },
            ],
        )
    }

    pub fn validate(&self, grid: &FrequencyGrid) -> Result<()> {
        if !(self.range_m.is_finite() && self.range_m > 0.0) {
            return Err(Error::Validation("channel range_m must be > 0".into()));
        }
        if !(self.temperature_k > 0.0 && self.pressure_hpa > 0.0) {
            return Err(Error::Validation(
                "channel temperature and pressure must be > 0".into(),
            ));
        }
        if !(self.water_vapor_g_m3 >= 0.0) {
            return Err(Error::Validation("water_vapor_g_m3 must be >= 0".into()));
        }
        match self.kind {
            ChannelKind::Dry if self.water_vapor_g_m3 != 0.0 => Err(Error::Validation(
                "dry channel requires water_vapor_g_m3 = 0".into(),
            )),
            ChannelKind::Dry | ChannelKind::Humid => {
                for f in [grid.f_start_hz, grid.f_stop_hz] {
                    if f < LINE_MODEL_BAND_HZ.0 || f > LINE_MODEL_BAND_HZ.1 {
                        return Err(Error::OutOfBand(f));
                    }
                }
                Ok(())
            }
            ChannelKind::Tabulated => {
                let table = self
                    .table
                    .as_ref()
                    .ok_or_else(|| Error::Validation("tabulated channel needs a table".into()))?;
                if table.len() < 2 {
                    return Err(Error::Validation("table needs at least two rows".into()));
                }
                if table.windows(2).any(|w| w[1].f_hz <= w[0].f_hz) {
                    return Err(Error::Validation(
                        "table must be sorted by increasing frequency".into(),
                    ));
                }
                if table.iter().any(|p| !(p.gamma_db_per_km >= 0.0)) {
                    return Err(Error::Validation("table attenuation must be >= 0".into()));
                }
                for f in [grid.f_start_hz, grid.f_stop_hz] {
                    if f < table[0].f_hz || f > table[table.len() - 1].f_hz {
                        return Err(Error::TableCoverage(f));
                    }
                }
                Ok(())
            }
        }
    }

    /// Water-vapour partial pressure from density (ideal gas).
    pub fn vapor_pressure_hpa(&self) -> f64 {
        self.water_vapor_g_m3 * self.temperature_k / 216.7
    }
}

/// Specific attenuation γ(f) in dB/km.
pub fn specific_attenuation(f_hz: f64, profile: &ChannelProfile) -> Result<f64> {
    match profile.kind {
        ChannelKind::Dry | ChannelKind::Humid => {
            if !(LINE_MODEL_BAND_HZ.0..=LINE_MODEL_BAND_HZ.1).contains(&f_hz) {
                return Err(Error::OutOfBand(f_hz));
            }
            let e = profile.vapor_pressure_hpa();
            let total = profile.pressure_hpa + e;
            let f_ghz = f_hz * 1e-9;
            Ok(oxygen_db_per_km(total, profile.temperature_k, e, f_ghz)
                + water_vapor_db_per_km(total, profile.temperature_k, e, f_ghz))
        }
        ChannelKind::Tabulated => {
            let table = profile
                .table
                .as_deref()
                .ok_or_else(|| Error::Validation("tabulated channel needs a table".into()))?;
            interpolate_table(table, f_hz)
        }
    }
}

fn interpolate_table(table: &[TablePoint], f_hz: f64) -> Result<f64> {
    let first = table.first().ok_or(Error::TableCoverage(f_hz))?;
    let last = table[table.len() - 1];
    if f_hz < first.f_hz || f_hz > last.f_hz {
        return Err(Error::TableCoverage(f_hz));
    }
    let hi = table.partition_point(|p| p.f_hz < f_hz).max(1);
    let (a, b) = (table[hi - 1], table[hi]);
    let t = (f_hz - a.f_hz) / (b.f_hz - a.f_hz);
    Ok(a.gamma_db_per_km + t * (b.gamma_db_per_km - a.gamma_db_per_km))
}

/// |a(f_k)| on the grid, linear amplitude in (0, 1].
pub fn channel_response(grid: &FrequencyGrid, profile: &ChannelProfile) -> Result<Vec<f64>> {
    let range_km = profile.range_m * 1e-3;
    (0..grid.n_samples)
        .map(|k| {
            let gamma = specific_attenuation(grid.freq(k), profile)?;
            Ok(10f64.powf(-gamma * range_km / 20.0).max(f64::MIN_POSITIVE))
        })
        .collect()
}

/// Reads a `f_hz,gamma_db_per_km` CSV.
pub fn load_table_csv(path: impl AsRef<FsPath>) -> Result<Vec<TablePoint>> {
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_path(path)?;
    rdr.deserialize().map(|r| Ok(r?)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
enum Species {
    O2,
    H2o,
}

/// One absorption line. Widths are GHz/kPa, mixing coefficients 1/hPa.
#[derive(Debug, Clone, Copy, Deserialize)]
struct Line {
    species: Species,
    line_center_hz: f64,
    strength: f64,
    strength_texp: f64,
    width_air: f64,
    width_air_texp: f64,
    width_self: f64,
    width_self_texp: f64,
    mixing: f64,
    mixing_t: f64,
}

struct LineSet {
    o2: Vec<Line>,
    h2o: Vec<Line>,
}

fn lines() -> &'static LineSet {
    static LINES: OnceLock<LineSet> = OnceLock::new();
    LINES.get_or_init(|| {
        let mut rdr = csv::ReaderBuilder::new()
            .comment(Some(b'#'))
            .from_reader(GAS_LINES_CSV.as_bytes());
        let all: Vec<Line> = rdr
            .deserialize()
            .collect::<std::result::Result<_, _>>()
            .expect("embedded gas line table is well formed");
        let (o2, h2o) = all.into_iter().partition(|l| l.species == Species::O2);
        LineSet { o2, h2o }
    })
}

/// Oxygen absorption (dB/km). `p` total and `pv` vapour pressure in hPa,
/// `t` in K, `freq` in GHz.
fn oxygen_db_per_km(p: f64, t: f64, pv: f64, freq: f64) -> f64 {
    let tht = 300.0 / t;
    let pwet = 0.1 * pv;
    let pdry = 0.1 * p - pwet;
    let xterm = 1.0 - tht;

    let sum: f64 = lines()
        .o2
        .iter()
        .map(|l| {
            let f0 = l.line_center_hz * 1e-9;
            let ga = l.width_air * pdry * tht.powf(l.width_air_texp)
                + l.width_self * pwet * tht.powf(l.width_self_texp);
            let delta = (l.mixing + l.mixing_t * tht) * p * tht.powf(0.8);
            let rnuneg = f0 - freq;
            let rnupos = f0 + freq;
            let ga_sq = ga * ga;
            let shape = (ga - rnuneg * delta) / (ga_sq + rnuneg * rnuneg)
                + (ga - rnupos * delta) / (ga_sq + rnupos * rnupos);
            shape * l.strength * (l.strength_texp * xterm).exp()
        })
        .sum::<f64>()
        .max(0.0);

    // non-resonant Debye term and pressure-induced N2 absorption
    let ga = 5.6e-3 * (pdry + 1.1 * pwet) * tht.powf(1.5);
    let zterm = ga * (1.0 + (freq / ga).powi(2));
    let apterm = (1.4e-10 * (1.0 - 1.2e-5 * freq.powf(1.5)) * pdry * tht.powf(1.5)).max(0.0);
    let sftot = pdry * freq * tht * tht * (tht * sum + 6.14e-4 / zterm + apterm);

    let mut gamma = 0.1820 * freq * sftot;
    if freq > 37.0 {
        gamma += 0.1820 * 26.0e-10 * pdry * pdry * tht.powi(3) * (freq - 37.0).powf(1.8);
    }
    gamma
}

/// Water-vapour absorption (dB/km), same units as [`oxygen_db_per_km`].
fn water_vapor_db_per_km(p: f64, t: f64, pv: f64, freq: f64) -> f64 {
    if pv <= 0.0 {
        return 0.0;
    }
    let pwet = 0.1 * pv;
    let pdry = 0.1 * p - pwet;
    let tht = 300.0 / t;
    let xterm = 1.0 - tht;

    let sum: f64 = lines()
        .h2o
        .iter()
        .map(|l| {
            let f0 = l.line_center_hz * 1e-9;
            let ga = l.width_air * pdry * tht.powf(l.width_air_texp)
                + l.width_self * pwet * tht.powf(l.width_self_texp);
            let ga_sq = ga * ga;
            let s = l.strength * (l.strength_texp * xterm).exp();
            let rnuneg = f0 - freq;
            let rnupos = f0 + freq;
            // local line contribution, cut off 750 GHz from the center
            let base = ga / (562_500.0 + ga_sq);
            let mut acc = 0.0;
            if rnuneg.abs() < 750.0 {
                acc += s * (ga / (ga_sq + rnuneg * rnuneg) - base);
            }
            if rnupos.abs() <= 750.0 {
                acc += s * (ga / (ga_sq + rnupos * rnupos) - base);
            }
            acc
        })
        .sum::<f64>()
        .max(0.0);

    let ffac = if freq < 90.0 {
        1.0 + 0.1 * ((90.0 - freq) / 90.0).powf(1.4)
    } else {
        1.0
    };
    // foreign and self continuum
    let continuum = ffac * 1.1 * 1.2957246e-6 * pdry / tht.sqrt()
        + 0.348 * freq.powf(0.15) * 4.2952193e-5 * pwet * tht.powi(4);
    let sftot = pwet * freq * tht.powf(3.5) * (sum + continuum);
    0.1820 * freq * sftot
}

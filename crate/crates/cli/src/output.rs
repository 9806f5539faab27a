use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{Context, Result};
use serde::Serialize;
use serde_json::Value;

/// Numeric table with a header row.
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn new(header: impl IntoIterator<Item = impl Into<String>>) -> Table {
        Table {
            header: header.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<f64>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn write<W: Write>(&self, w: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(w);
        wtr.write_record(&self.header)?;
        for r in &self.rows {
            wtr.write_record(r.iter().map(|v| fmt_num(*v)))?;
        }
        wtr.flush()?;
        Ok(())
    }
}

/// Shortest round-trip representation; non-finite values as `inf`/`nan`.
pub fn fmt_num(v: f64) -> String {
    if v.is_nan() {
        "nan".into()
    } else if v.is_infinite() {
        if v > 0.0 { "inf" } else { "-inf" }.into()
    } else {
        v.to_string()
    }
}

#[derive(Serialize)]
struct Manifest<'a> {
    tool: &'static str,
    version: &'static str,
    command: Vec<String>,
    config: &'a Value,
    outputs: Vec<String>,
    conventions: Conventions,
    runtime_s: f64,
}

#[derive(Serialize)]
struct Conventions {
    snr: &'static str,
    crb: &'static str,
    angles: &'static str,
}

const CONVENTIONS: Conventions = Conventions {
    snr: "per-antenna: mean signal power over N0/2; SSH Fisher information summed over all frequency bins",
    crb: "standard deviation sqrt(J^-1) in degrees; inf where J is singular",
    angles: "degrees in [0, 180]",
};

/// Writes the manifest sidecar `<stem>.manifest.json` next to `anchor`.
pub fn write_manifest(
    anchor: &Path,
    config: &Value,
    outputs: &[PathBuf],
    started: Instant,
) -> Result<PathBuf> {
    let stem = anchor
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "run".into());
    let dir = anchor.parent().unwrap_or_else(|| Path::new(""));
    let path = dir.join(format!("{stem}.manifest.json"));
    let m = Manifest {
        tool: "specshape",
        version: env!("CARGO_PKG_VERSION"),
        command: std::env::args().collect(),
        config,
        outputs: outputs
            .iter()
            .map(|p| {
                p.file_name()
                    .map_or_else(String::new, |n| n.to_string_lossy().into_owned())
            })
            .collect(),
        conventions: CONVENTIONS,
        runtime_s: started.elapsed().as_secs_f64(),
    };
    let text = serde_json::to_string_pretty(&m)? + "\n";
    fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
    Ok(path)
}

/// Creates `path` (and its parent directory) for writing.
pub fn create(path: &Path) -> Result<fs::File> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    fs::File::create(path).with_context(|| format!("creating {}", path.display()))
}

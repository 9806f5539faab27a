use std::fmt;
use std::str::FromStr;

use specshape::Scenario;

/// Scenario field a sweep walks over.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepVar {
    Theta,
    Snr,
    Range,
    D,
}

impl SweepVar {
    pub fn name(self) -> &'static str {
        match self {
            SweepVar::Theta => "theta_deg",
            SweepVar::Snr => "snr_db",
            SweepVar::Range => "range_m",
            SweepVar::D => "d_m",
        }
    }

    pub fn apply(self, sc: &mut Scenario, value: f64) {
        match self {
            SweepVar::Theta => sc.paths[0].theta_deg = value,
            SweepVar::Snr => sc.snr_db = value,
            SweepVar::Range => sc.channel.range_m = value,
            SweepVar::D => sc.d_m = value,
        }
    }

    pub fn read(self, sc: &Scenario) -> f64 {
        match self {
            SweepVar::Theta => sc.paths[0].theta_deg,
            SweepVar::Snr => sc.snr_db,
            SweepVar::Range => sc.channel.range_m,
            SweepVar::D => sc.d_m,
        }
    }
}

/// `var:start:stop:step`, stop inclusive.
#[derive(Debug, Clone, PartialEq)]
pub struct Sweep {
    pub var: SweepVar,
    pub values: Vec<f64>,
    /// The sweep as written on the command line.
    pub spec: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SweepError(String);

impl fmt::Display for SweepError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for SweepError {}

/// Largest sweep accepted, to catch typos such as a zero-ish step.
const MAX_POINTS: usize = 100_000;

impl FromStr for Sweep {
    type Err = SweepError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parts: Vec<&str> = s.split(':').collect();
        let [var, start, stop, step] = parts[..] else {
            return Err(SweepError(format!(
                "sweep '{s}' must look like var:start:stop:step"
            )));
        };
        let var = match var {
            "theta" => SweepVar::Theta,
            "snr" => SweepVar::Snr,
            "range" => SweepVar::Range,
            "d" => SweepVar::D,
            other => {
                return Err(SweepError(format!(
                    "unknown sweep variable '{other}' (theta, snr, range, d)"
                )))
            }
        };
        let num = |t: &str| {
            t.parse::<f64>()
                .ok()
                .filter(|x| x.is_finite())
                .ok_or_else(|| SweepError(format!("'{t}' is not a finite number")))
        };
        let (start, stop, step) = (num(start)?, num(stop)?, num(step)?);
        if !(step > 0.0) || stop < start {
            return Err(SweepError("sweep needs step > 0 and stop >= start".into()));
        }
        let n = ((stop - start) / step + 1e-9).floor() as usize + 1;
        if n > MAX_POINTS {
            return Err(SweepError(format!(
                "sweep has {n} points, limit {MAX_POINTS}"
            )));
        }
        let values = (0..n)
            .map(|i| ((start + i as f64 * step) * 1e9).round() / 1e9)
            .collect();
        Ok(Sweep {
            var,
            values,
            spec: s.to_string(),
        })
    }
}

//! Command-line runner: figure reproductions and ad-hoc synth, estimate,
//! crb and rmse runs. Every file output gets a `.manifest.json` sidecar.

mod figures;
mod output;
mod sweep;

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use specshape::crb::{crb_ssh_doa, fim_joint, write_crb_csv};
use specshape::estimators::estimate_report;
use specshape::exec::{map_indexed, set_jobs};
use specshape::montecarlo::{rmse_array, rmse_joint, rmse_monte_carlo, ArrayKind, EstimatorId};
use specshape::synth::{add_noise, synthesize};
use specshape::{load_scenario, Execution, ObservedSpectrum, Scenario, TxMode};

use figures::{FigureId, Settings, FINE_SPACING_HZ, REFINE_THRESHOLD_M};
use output::{create, write_manifest, Table};
use sweep::{Sweep, SweepError};

const DEFAULT_TRIALS: usize = 1000;

#[derive(Parser)]
#[command(
    name = "specshape",
    version,
    about = "Spectrum-shaping link discovery experiments"
)]
struct Cli {
    /// Worker threads; 1 runs everything sequentially.
    #[arg(long, global = true)]
    jobs: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Reproduce one figure's data as CSV files in --out.
    RunFigure {
        id: FigureId,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Partial scenario (or a manifest) merged over the built-in one.
        #[arg(long)]
        scenario: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value_t = DEFAULT_TRIALS)]
        trials: usize,
    },
    /// Synthesize a received magnitude spectrum.
    Synth {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        noise_free: bool,
    },
    /// Estimate angles and path-length differences from one shot.
    Estimate {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        noise_free: bool,
    },
    /// Cramér–Rao bound, optionally swept.
    Crb {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_parser = parse_sweep)]
        sweep: Option<Sweep>,
    },
    /// Monte Carlo RMSE, optionally swept.
    Rmse {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_parser = parse_sweep)]
        sweep: Option<Sweep>,
        #[arg(long)]
        trials: Option<usize>,
        /// peak or mmse
        #[arg(long)]
        estimator: Option<EstimatorId>,
        /// Array baseline instead of the shaper: ula:N or lens:M.
        #[arg(long, value_parser = parse_baseline)]
        baseline: Option<ArrayKind>,
    },
}

#[derive(Args)]
struct Common {
    /// Scenario JSON, or a manifest written by an earlier run.
    #[arg(long)]
    scenario: PathBuf,
    /// Output file; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
}

fn parse_sweep(s: &str) -> std::result::Result<Sweep, SweepError> {
    s.parse()
}

fn parse_baseline(s: &str) -> std::result::Result<ArrayKind, String> {
    let (kind, n) = s
        .split_once(':')
        .ok_or_else(|| format!("baseline '{s}' must be ula:N or lens:M"))?;
    let n: usize = n
        .parse()
        .ok()
        .filter(|n| *n >= 2)
        .ok_or_else(|| format!("element count '{n}' must be an integer >= 2"))?;
    match kind {
        "ula" => Ok(ArrayKind::Ula(n)),
        "lens" => Ok(ArrayKind::Lens(n)),
        other => Err(format!("unknown baseline '{other}' (ula, lens)")),
    }
}

/// A scenario file, or the resolved config of a manifest.
struct Input {
    scenario: Scenario,
    config: Option<Value>,
}

fn is_manifest(v: &Value) -> bool {
    v.get("tool").is_some() && v.get("config").is_some()
}

fn read_json(path: &Path) -> Result<Value> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let v = serde_json::from_str(&text)
        .map_err(specshape::Error::from)
        .with_context(|| format!("parsing {}", path.display()))?;
    Ok(v)
}

fn load_input(path: &Path) -> Result<Input> {
    let v = read_json(path)?;
    if !is_manifest(&v) {
        let scenario =
            load_scenario(path).with_context(|| format!("loading {}", path.display()))?;
        return Ok(Input {
            scenario,
            config: None,
        });
    }
    let config = v["config"].clone();
    let sc = config
        .get("scenario")
        .ok_or_else(|| specshape::Error::Validation("manifest has no config.scenario".into()))?;
    let scenario = Scenario::from_json(&sc.to_string())?;
    Ok(Input {
        scenario,
        config: Some(config),
    })
}

impl Input {
    fn flag<T: serde::de::DeserializeOwned>(&self, key: &str) -> Option<T> {
        let v = self.config.as_ref()?.get(key)?;
        serde_json::from_value(v.clone()).ok()
    }
}

fn prepare(common: &Common) -> Result<Input> {
    let mut input = load_input(&common.scenario)?;
    if let Some(seed) = common.seed {
        input.scenario.seed = seed;
    }
    input.scenario = input
        .scenario
        .refined_for_distances(REFINE_THRESHOLD_M, FINE_SPACING_HZ);
    Ok(input)
}

/// Writes through `f` to `--out` (plus manifest) or to stdout.
fn emit(
    out: Option<&Path>,
    config: Value,
    started: Instant,
    f: impl FnOnce(&mut dyn Write) -> Result<()>,
) -> Result<()> {
    match out {
        Some(path) => {
            let mut file = io::BufWriter::new(create(path)?);
            f(&mut file)?;
            file.flush()?;
            write_manifest(path, &config, &[path.to_path_buf()], started)?;
        }
        None => {
            let stdout = io::stdout();
            let mut lock = stdout.lock();
            f(&mut lock)?;
            lock.flush()?;
        }
    }
    Ok(())
}

fn sweep_points(sweep: Option<&Sweep>, base: &Scenario) -> Result<Vec<Scenario>> {
    let Some(s) = sweep else {
        return Ok(vec![base.clone()]);
    };
    s.values
        .iter()
        .map(|&v| {
            let mut sc = base.clone();
            s.var.apply(&mut sc, v);
            sc.validate()?;
            Ok(sc)
        })
        .collect()
}

fn run(cli: Cli) -> Result<()> {
    let exec = match cli.jobs {
        Some(0) => {
            return Err(specshape::Error::Validation("--jobs must be at least 1".into()).into())
        }
        Some(1) => Execution::Sequential,
        Some(n) => {
            set_jobs(n);
            Execution::Parallel
        }
        None => Execution::Parallel,
    };
    let started = Instant::now();
    match cli.command {
        Command::RunFigure {
            id,
            out,
            scenario,
            seed,
            trials,
        } => {
            let overrides = match &scenario {
                Some(p) => {
                    let v = read_json(p)?;
                    Some(if is_manifest(&v) {
                        v["config"]["scenario"].clone()
                    } else {
                        v
                    })
                }
                None => None,
            };
            let settings = Settings {
                out_dir: &out,
                trials,
                seed,
                overrides: overrides.as_ref(),
                exec,
            };
            let res =
                figures::run(id, &settings).with_context(|| format!("running {}", id.name()))?;
            let mut config = res.config;
            config["figure"] = json!(id.name());
            for path in &res.outputs {
                write_manifest(path, &config, &res.outputs, started)?;
            }
        }
        Command::Synth { common, noise_free } => {
            let input = prepare(&common)?;
            let noise_free = noise_free || input.flag("noise_free").unwrap_or(false);
            let sc = input.scenario;
            let mean = synthesize(&sc)?;
            let obs = if noise_free {
                ObservedSpectrum::noise_free(mean)
            } else {
                add_noise(&mean, sc.snr_db, sc.seed)
            };
            let config = json!({ "command": "synth", "scenario": sc, "noise_free": noise_free });
            emit(common.out.as_deref(), config, started, |w| {
                Ok(obs.write_csv(w)?)
            })?;
        }
        Command::Estimate { common, noise_free } => {
            let input = prepare(&common)?;
            let noise_free = noise_free || input.flag("noise_free").unwrap_or(false);
            let sc = input.scenario;
            let mean = synthesize(&sc)?;
            let obs = if noise_free {
                ObservedSpectrum::noise_free(mean)
            } else {
                add_noise(&mean, sc.snr_db, sc.seed)
            };
            let report = estimate_report(&obs, &sc)?;
            let config = json!({ "command": "estimate", "scenario": sc, "noise_free": noise_free });
            emit(common.out.as_deref(), config, started, |w| {
                writeln!(w, "{}", report.to_json()?)?;
                Ok(())
            })?;
        }
        Command::Crb { common, sweep } => {
            let input = prepare(&common)?;
            let sweep =
                sweep.or_else(|| input.flag::<String>("sweep").and_then(|s| s.parse().ok()));
            let sc = input.scenario;
            let points = sweep_points(sweep.as_ref(), &sc)?;
            let config = json!({ "command": "crb", "scenario": sc,
                                 "sweep": sweep.as_ref().map(|s| s.spec.clone()) });
            if sc.tx_mode == TxMode::Pair {
                let vals = map_indexed(points.len(), exec, |i| {
                    let p = &points[i];
                    fim_joint(p, p.paths[0].theta_deg, p.aod()?)
                });
                let mut t = Table::new([
                    "theta_deg",
                    "aod_deg",
                    "snr_db",
                    "d_m",
                    "range_m",
                    "crb_doa_deg",
                    "crb_aod_deg",
                ]);
                for (p, f) in points.iter().zip(vals) {
                    let f = f?;
                    t.push(vec![
                        p.paths[0].theta_deg,
                        p.aod()?,
                        p.snr_db,
                        p.d_m,
                        p.channel.range_m,
                        f.crb_deg[0],
                        f.crb_deg[1],
                    ]);
                }
                emit(common.out.as_deref(), config, started, |w| t.write(w))?;
            } else {
                let vals = map_indexed(points.len(), exec, |i| {
                    let p = &points[i];
                    crb_ssh_doa(p, p.paths[0].theta_deg)
                });
                let rows = points
                    .iter()
                    .zip(vals)
                    .map(|(p, v)| {
                        Ok(specshape::crb::CrbRow {
                            theta_deg: p.paths[0].theta_deg,
                            crb_deg: v?,
                            method: "ssh".into(),
                            snr_db: p.snr_db,
                            d_m: p.d_m,
                            range_m: p.channel.range_m,
                            vapor_g_m3: p.channel.water_vapor_g_m3,
                        })
                    })
                    .collect::<specshape::Result<Vec<_>>>()?;
                emit(common.out.as_deref(), config, started, |w| {
                    Ok(write_crb_csv(&rows, w)?)
                })?;
            }
        }
        Command::Rmse {
            common,
            sweep,
            trials,
            estimator,
            baseline,
        } => {
            let input = prepare(&common)?;
            let sweep =
                sweep.or_else(|| input.flag::<String>("sweep").and_then(|s| s.parse().ok()));
            let trials = trials
                .or_else(|| input.flag("trials"))
                .unwrap_or(DEFAULT_TRIALS);
            let estimator = estimator
                .or_else(|| input.flag("estimator"))
                .unwrap_or(EstimatorId::Mmse);
            let baseline = baseline.or_else(|| input.flag("baseline"));
            let sc = input.scenario;
            let points = sweep_points(sweep.as_ref(), &sc)?;
            let var = sweep.as_ref().map_or("theta_deg", |s| s.var.name());
            let read = |p: &Scenario| {
                sweep
                    .as_ref()
                    .map_or(p.paths[0].theta_deg, |s| s.var.read(p))
            };
            let config = json!({ "command": "rmse", "scenario": sc,
                                 "sweep": sweep.as_ref().map(|s| s.spec.clone()),
                                 "trials": trials, "estimator": estimator, "baseline": baseline });
            let t = if sc.tx_mode == TxMode::Pair && baseline.is_none() {
                let mut t = Table::new([
                    var,
                    "rmse_aod_deg",
                    "stderr_aod_deg",
                    "rmse_doa_deg",
                    "stderr_doa_deg",
                    "failures",
                ]);
                for p in &points {
                    let (a, d) = rmse_joint(p, estimator, trials, exec)?;
                    t.push(vec![
                        read(p),
                        a.rmse_deg,
                        a.stderr_deg,
                        d.rmse_deg,
                        d.stderr_deg,
                        a.failures as f64,
                    ]);
                }
                t
            } else {
                let mut t = Table::new([var, "rmse_deg", "stderr_deg", "failures"]);
                for p in &points {
                    let theta = p.paths[0].theta_deg;
                    let r = match baseline {
                        Some(kind) => rmse_array(kind, theta, p.snr_db, trials, p.seed, exec)?,
                        None => rmse_monte_carlo(p, estimator, trials, exec)?,
                    };
                    t.push(vec![read(p), r.rmse_deg, r.stderr_deg, r.failures as f64]);
                }
                t
            };
            emit(common.out.as_deref(), config, started, |w| t.write(w))?;
        }
    }
    Ok(())
}

fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if let Some(e) = cause.downcast_ref::<specshape::Error>() {
            return match e {
                specshape::Error::Io(_) => 1,
                e if e.is_validation() => 3,
                _ => 4,
            };
        }
        if cause.downcast_ref::<serde_json::Error>().is_some() {
            return 3;
        }
    }
    1
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}

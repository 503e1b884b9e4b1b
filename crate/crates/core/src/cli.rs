//! Command-line front end.
//!
//! Every subcommand accepts `--config FILE` (JSON or TOML, picked by
//! extension) whose keys mirror the long flag names; flags win over file
//! keys. Exit codes: 0 success, 2 usage/config/file, 3 numeric, 4 invalid
//! Monte Carlo run.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::estimator::{noise_floor_estimate, periodogram, spc_mle, whittle_mle, whittle_mle_pooled, Band, Estimate};
use crate::harness::{
    bounds_sweep, calibrate_scale, load_traces, CalibrationFloor, McConfig, McReport, Measurement, NoiseFloor,
};
use crate::psdmodel::{s_i_for_snr, snr_c, OuPsd, ParamVector};
use crate::synth::{add_homodyne_noise, coherent_noise_floor, derive_seed, spc_counts, synth_process, PhotonRecord};

pub const SEED_ENV: &str = "SPECFISHER_SEED";

pub const EXIT_USAGE: i32 = 2;
pub const EXIT_NUMERIC: i32 = 3;
pub const EXIT_INVALID: i32 = 4;

#[derive(Debug, Parser)]
#[command(
    name = "specfisher",
    version,
    about = "Fisher-information bounds and estimators for hidden-process spectra"
)]
pub struct Cli {
    /// Worker threads for Monte Carlo trials (default: all cores).
    #[arg(long, global = true)]
    pub workers: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Normalized inverse quantum and homodyne bounds for the OU spectrum.
    Bounds(BoundsArgs),
    /// Monte Carlo estimation errors next to the bounds.
    Mc(McArgs),
    /// Synthesize trace or photon-count files.
    Simulate(SimulateArgs),
    /// Maximum-likelihood estimates from trace or photon-count files.
    Estimate(EstimateArgs),
    /// Homodyne scale factor from paired X and Y traces.
    Calibrate(CalibrateArgs),
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, ValueEnum)]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MeasurementKind {
    Homodyne,
    Spc,
}

#[derive(Debug, Clone, Default, Args)]
pub struct Common {
    /// JSON or TOML file with default values for the flags.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output path (stdout when absent; a directory for `simulate`).
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t)]
    pub format: Format,
}

macro_rules! merge_from_file {
    ($args:ident, $file:ident; $($field:ident),+) => {
        $( if $args.$field.is_none() { $args.$field = $file.$field; } )+
    };
}

#[derive(Debug, Default, Args, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BoundsArgs {
    /// Process variance θ₁ (rad²).
    #[arg(long)]
    pub theta1: Option<f64>,
    /// Bandwidth θ₂ (rad/s).
    #[arg(long)]
    pub theta2: Option<f64>,
    /// Observation time (s).
    #[arg(long = "T")]
    #[serde(rename = "T")]
    pub horizon_t: Option<f64>,
    /// Comma-separated SNR values C.
    #[arg(long = "C", value_delimiter = ',', num_args = 1..)]
    #[serde(rename = "C")]
    pub c: Option<Vec<f64>>,
    /// Comma-separated photon fluxes S_I (1/s), instead of --C.
    #[arg(long = "S-I", value_delimiter = ',', num_args = 1.., conflicts_with = "c")]
    #[serde(rename = "S_I")]
    pub s_i: Option<Vec<f64>>,
    #[command(flatten)]
    #[serde(skip)]
    pub common: Common,
}

#[derive(Debug, Default, Args, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct McArgs {
    #[arg(long)]
    pub theta1: Option<f64>,
    #[arg(long)]
    pub theta2: Option<f64>,
    #[arg(long = "T")]
    #[serde(rename = "T")]
    pub horizon_t: Option<f64>,
    /// Sampling interval (s).
    #[arg(long)]
    pub dt: Option<f64>,
    /// Number of trials M.
    #[arg(long)]
    pub trials: Option<usize>,
    /// Base seed; falls back to SPECFISHER_SEED, then 0.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, value_enum)]
    pub measurement: Option<MeasurementKind>,
    /// SNR C; sets the flux from θ.
    #[arg(long = "C")]
    #[serde(rename = "C")]
    pub c: Option<f64>,
    /// Photon flux S_I (1/s); overrides --C.
    #[arg(long = "S-I")]
    #[serde(rename = "S_I")]
    pub s_i: Option<f64>,
    /// Estimation band `lo,hi` (rad/s).
    #[arg(long, value_delimiter = ',', num_args = 2)]
    pub band: Option<Vec<f64>>,
    /// Re-estimate the homodyne floor from this band `lo,hi` (rad/s).
    #[arg(long, value_delimiter = ',', num_args = 2)]
    pub noise_band: Option<Vec<f64>>,
    #[command(flatten)]
    #[serde(skip)]
    pub common: Common,
}

#[derive(Debug, Default, Args, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulateArgs {
    #[arg(long)]
    pub theta1: Option<f64>,
    #[arg(long)]
    pub theta2: Option<f64>,
    #[arg(long = "T")]
    #[serde(rename = "T")]
    pub horizon_t: Option<f64>,
    #[arg(long)]
    pub dt: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Number of records.
    #[arg(long)]
    pub count: Option<usize>,
    #[arg(long, value_enum)]
    pub measurement: Option<MeasurementKind>,
    /// Photon flux S_I (1/s); sets the homodyne floor 1/(4 S_I) or the counting flux.
    #[arg(long = "S-I")]
    #[serde(rename = "S_I")]
    pub s_i: Option<f64>,
    /// Multiply the written Y traces by this factor.
    #[arg(long)]
    pub y_scale: Option<f64>,
    #[command(flatten)]
    #[serde(skip)]
    pub common: Common,
}

#[derive(Debug, Default, Args, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EstimateArgs {
    /// Trace or photon-count CSV, or a directory of them.
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Initial θ₁ (rad²).
    #[arg(long)]
    pub theta1: Option<f64>,
    /// Initial θ₂ (rad/s).
    #[arg(long)]
    pub theta2: Option<f64>,
    /// Known homodyne noise floor S_η.
    #[arg(long)]
    pub s_eta: Option<f64>,
    /// Estimate the noise floor from this band `lo,hi` (rad/s).
    #[arg(long, value_delimiter = ',', num_args = 2)]
    pub noise_band: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',', num_args = 2)]
    pub band: Option<Vec<f64>>,
    /// Inputs are photon-count records at this flux (1/s).
    #[arg(long)]
    pub photon_flux: Option<f64>,
    /// One estimate from the pooled periodograms of all traces.
    #[arg(long)]
    pub pooled: Option<bool>,
    #[command(flatten)]
    #[serde(skip)]
    pub common: Common,
}

#[derive(Debug, Default, Args, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CalibrateArgs {
    /// Hidden-process traces (file or directory).
    #[arg(long)]
    pub x: Option<PathBuf>,
    /// Homodyne traces (file or directory).
    #[arg(long)]
    pub y: Option<PathBuf>,
    #[arg(long)]
    pub theta1: Option<f64>,
    #[arg(long)]
    pub theta2: Option<f64>,
    /// Known noise floor of the unscaled Y.
    #[arg(long)]
    pub s_eta: Option<f64>,
    /// Noise-floor band `lo,hi` (rad/s); default `[60·θ₂, π/dt]`.
    #[arg(long, value_delimiter = ',', num_args = 2)]
    pub noise_band: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',', num_args = 2)]
    pub band: Option<Vec<f64>>,
    #[command(flatten)]
    #[serde(skip)]
    pub common: Common,
}

/// Failure carrying its exit code.
#[derive(Debug)]
pub enum Failure {
    Lib(Error),
    Config(String),
    /// The run completed but its statistics are not valid.
    Invalid(String),
}

impl Failure {
    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::Lib(Error::Numeric(_) | Error::Calibration(_)) => EXIT_NUMERIC,
            Failure::Lib(_) | Failure::Config(_) => EXIT_USAGE,
            Failure::Invalid(_) => EXIT_INVALID,
        }
    }
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Failure::Lib(e) => write!(f, "{e}"),
            Failure::Config(m) => write!(f, "config error: {m}"),
            Failure::Invalid(m) => write!(f, "invalid run: {m}"),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

type CliResult<T> = std::result::Result<T, Failure>;

fn read_config<T: DeserializeOwned + Default>(path: Option<&Path>) -> CliResult<T> {
    let Some(path) = path else {
        return Ok(T::default());
    };
    let text = fs::read_to_string(path).map_err(|e| Failure::Config(format!("{}: {e}", path.display())))?;
    let ext = path.extension().and_then(|e| e.to_str()).unwrap_or("");
    match ext {
        "json" => serde_json::from_str(&text).map_err(|e| Failure::Config(format!("{}: {e}", path.display()))),
        "toml" => toml::from_str(&text).map_err(|e| Failure::Config(format!("{}: {e}", path.display()))),
        _ => Err(Failure::Config(format!(
            "{}: config must have a .json or .toml extension",
            path.display()
        ))),
    }
}

fn required<T>(v: Option<T>, flag: &str) -> CliResult<T> {
    v.ok_or_else(|| Failure::Config(format!("missing required --{flag}")))
}

fn band_from(v: Option<Vec<f64>>, flag: &str) -> CliResult<Option<Band>> {
    match v {
        None => Ok(None),
        Some(v) if v.len() == 2 => Ok(Some(Band::new(v[0], v[1])?)),
        Some(_) => Err(Failure::Config(format!("--{flag} takes lo,hi"))),
    }
}

fn seed_or_env(seed: Option<u64>) -> CliResult<u64> {
    if let Some(s) = seed {
        return Ok(s);
    }
    match std::env::var(SEED_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .map_err(|_| Failure::Config(format!("{SEED_ENV}={v:?} is not an unsigned integer"))),
        Err(_) => Ok(0),
    }
}

fn emit(common: &Common, text: &str) -> CliResult<()> {
    match &common.out {
        Some(path) => fs::write(path, text).map_err(|source| {
            Failure::Lib(Error::Io {
                path: path.clone(),
                source,
            })
        }),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(text.as_bytes())
                .map_err(|e| Failure::Config(format!("stdout: {e}")))
        }
    }
}

fn to_json<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("serializable output");
    s.push('\n');
    s
}

fn cmd_bounds(mut a: BoundsArgs) -> CliResult<()> {
    let file: BoundsArgs = read_config(a.common.config.as_deref())?;
    merge_from_file!(a, file; theta1, theta2, horizon_t, c, s_i);
    let theta = ParamVector::new(required(a.theta1, "theta1")?, required(a.theta2, "theta2")?)?;
    let t = required(a.horizon_t, "T")?;
    let grid = match (a.c, a.s_i) {
        (Some(c), None) => c,
        (None, Some(s)) => s.iter().map(|s| snr_c(&theta, *s)).collect::<Result<_, _>>()?,
        (Some(_), Some(_)) => return Err(Failure::Config("give either --C or --S-I, not both".into())),
        (None, None) => return Err(Failure::Config("missing required --C or --S-I".into())),
    };
    let sweep = bounds_sweep(&theta, t, &grid)?;
    if !sweep.monotone {
        log::warn!("quantum theta1 bound is not monotone over the C grid");
    }
    let text = match a.common.format {
        Format::Csv => sweep.to_csv(),
        Format::Json => to_json(&sweep),
    };
    emit(&a.common, &text)
}

fn mc_config(mut a: McArgs) -> CliResult<(McConfig, Common)> {
    let file: McArgs = read_config(a.common.config.as_deref())?;
    merge_from_file!(a, file; theta1, theta2, horizon_t, dt, trials, seed, measurement, c, s_i, band, noise_band);
    let mut cfg = McConfig::desk_scale(23.5, 0)?;
    if a.theta1.is_some() || a.theta2.is_some() {
        cfg.theta_true = ParamVector::new(
            a.theta1.unwrap_or(cfg.theta_true.theta1()),
            a.theta2.unwrap_or(cfg.theta_true.theta2()),
        )?;
    }
    cfg.horizon_t = a.horizon_t.unwrap_or(cfg.horizon_t);
    cfg.dt = a.dt.unwrap_or(cfg.dt);
    cfg.trials = a.trials.unwrap_or(cfg.trials);
    cfg.seed = seed_or_env(a.seed)?;
    let flux = match (a.s_i, a.c) {
        (Some(s), _) => s,
        (None, Some(c)) => {
            if !(c.is_finite() && c > 0.0) {
                return Err(Failure::Config(format!("--C must be > 0, got {c}")));
            }
            s_i_for_snr(&cfg.theta_true, c)?
        }
        (None, None) => s_i_for_snr(&cfg.theta_true, 23.5)?,
    };
    cfg.measurement = match a.measurement.unwrap_or(MeasurementKind::Homodyne) {
        MeasurementKind::Homodyne => Measurement::Homodyne { s_i: flux },
        MeasurementKind::Spc => Measurement::Spc { photon_flux: flux },
    };
    cfg.band = band_from(a.band, "band")?;
    if let Some(band) = band_from(a.noise_band, "noise-band")? {
        cfg.noise_floor = NoiseFloor::Estimated { band };
    }
    cfg.validate()?;
    Ok((cfg, a.common))
}

fn cmd_mc(a: McArgs) -> CliResult<()> {
    let (cfg, common) = mc_config(a)?;
    let report = McReport::run(&OuPsd, &cfg)?;
    let text = match common.format {
        Format::Csv => report.to_csv(),
        Format::Json => to_json(&report),
    };
    emit(&common, &text)?;
    let mut summary = String::new();
    let _ = writeln!(
        summary,
        "C = {:.4}, M = {}, excluded = {}",
        report.c, report.stats.m, report.stats.excluded
    );
    for i in 0..2 {
        let _ = writeln!(
            summary,
            "theta{}: eps_bar = {:.4} +/- {:.4}  quantum = {:.4}  homodyne = {:.4}",
            i + 1,
            report.eps_bar_normalized[i],
            report.se_normalized[i],
            report.bound_quantum[i],
            report.bound_homodyne[i]
        );
    }
    eprint!("{summary}");
    if !report.stats.valid {
        return Err(Failure::Invalid(format!(
            "{} of {} trials did not converge",
            report.stats.excluded, cfg.trials
        )));
    }
    Ok(())
}

fn cmd_simulate(mut a: SimulateArgs) -> CliResult<()> {
    let file: SimulateArgs = read_config(a.common.config.as_deref())?;
    merge_from_file!(a, file; theta1, theta2, horizon_t, dt, seed, count, measurement, s_i, y_scale);
    let theta = ParamVector::new(required(a.theta1, "theta1")?, required(a.theta2, "theta2")?)?;
    let t = required(a.horizon_t, "T")?;
    let seed = seed_or_env(a.seed)?;
    let count = a.count.unwrap_or(1);
    let out = required(a.common.out.clone(), "out")?;
    let kind = a.measurement.unwrap_or(MeasurementKind::Homodyne);
    let io = |source| {
        Failure::Lib(Error::Io {
            path: out.clone(),
            source,
        })
    };
    fs::create_dir_all(&out).map_err(io)?;
    match kind {
        MeasurementKind::Homodyne => {
            let dt = required(a.dt, "dt")?;
            let s_eta = match a.s_i {
                Some(s) => coherent_noise_floor(s)?,
                None => 0.0,
            };
            let scale = a.y_scale.unwrap_or(1.0);
            for dir in ["x", "y"] {
                fs::create_dir_all(out.join(dir)).map_err(io)?;
            }
            for k in 0..count {
                let s = derive_seed(seed, k as u64);
                let x = synth_process(&OuPsd, &theta, t, dt, derive_seed(s, 0))?;
                let y = add_homodyne_noise(&x, s_eta, derive_seed(s, 1))?.scaled(scale);
                x.write_csv(&out.join("x").join(format!("trace_{k:04}.csv")))?;
                y.write_csv(&out.join("y").join(format!("trace_{k:04}.csv")))?;
            }
        }
        MeasurementKind::Spc => {
            let flux = required(a.s_i, "S-I")?;
            let band = Band::default_for(&theta);
            let m_max = (band.hi * t / (2.0 * std::f64::consts::PI)).floor() as usize;
            for k in 0..count {
                let r = spc_counts(&OuPsd, &theta, flux, t, m_max, derive_seed(seed, k as u64))?;
                r.write_csv(&out.join(format!("counts_{k:04}.csv")))?;
            }
        }
    }
    Ok(())
}

#[derive(Serialize)]
struct EstimateRow {
    source: String,
    #[serde(flatten)]
    estimate: Estimate,
}

fn list_inputs(path: &Path) -> CliResult<Vec<PathBuf>> {
    if path.is_dir() {
        let mut files: Vec<PathBuf> = fs::read_dir(path)
            .map_err(|source| Error::Io {
                path: path.to_path_buf(),
                source,
            })?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.is_file() && p.extension().is_some_and(|e| e == "csv"))
            .collect();
        files.sort();
        Ok(files)
    } else {
        Ok(vec![path.to_path_buf()])
    }
}

fn cmd_estimate(mut a: EstimateArgs) -> CliResult<()> {
    let file: EstimateArgs = read_config(a.common.config.as_deref())?;
    merge_from_file!(a, file; input, theta1, theta2, s_eta, noise_band, band, photon_flux, pooled);
    let input = required(a.input.clone(), "input")?;
    let init = ParamVector::new(required(a.theta1, "theta1")?, required(a.theta2, "theta2")?)?;
    let band = band_from(a.band, "band")?.unwrap_or_else(|| Band::default_for(&init));
    let noise_band = band_from(a.noise_band, "noise-band")?;
    let mut rows = Vec::new();

    if let Some(flux) = a.photon_flux {
        for path in list_inputs(&input)? {
            let r = PhotonRecord::read_csv(&path, flux)?;
            rows.push(EstimateRow {
                source: path.display().to_string(),
                estimate: spc_mle(&r, &OuPsd, &init)?,
            });
        }
    } else {
        let traces = load_traces(&input)?;
        let spectra = traces.iter().map(periodogram).collect::<Result<Vec<_>, _>>()?;
        let floor_of = |p: &crate::estimator::Periodogram| -> CliResult<f64> {
            Ok(match (a.s_eta, noise_band) {
                (Some(s), _) => s,
                (None, Some(b)) => noise_floor_estimate(p, b)?,
                (None, None) => 0.0,
            })
        };
        if a.pooled.unwrap_or(false) {
            let floor = match (a.s_eta, noise_band) {
                (Some(s), _) => s,
                (None, Some(b)) => crate::estimator::noise_floor_pooled(&spectra, b)?,
                (None, None) => 0.0,
            };
            rows.push(EstimateRow {
                source: input.display().to_string(),
                estimate: whittle_mle_pooled(&spectra, &OuPsd, floor, band, &init)?,
            });
        } else {
            let names = list_inputs(&input)?;
            for (name, p) in names.iter().zip(&spectra) {
                rows.push(EstimateRow {
                    source: name.display().to_string(),
                    estimate: whittle_mle(p, &OuPsd, floor_of(p)?, band, &init)?,
                });
            }
        }
    }

    let text = match a.common.format {
        Format::Json => to_json(&rows),
        Format::Csv => {
            let mut s = String::from("# theta1 in rad^2, theta2 in rad/s, band in rad/s\n");
            s.push_str("source,theta1,theta2,loglik,converged,n_evals,band_lo,band_hi,at_bound\n");
            for r in &rows {
                let e = &r.estimate;
                let _ = writeln!(
                    s,
                    "{},{},{},{},{},{},{},{},{}",
                    r.source,
                    e.theta_hat.theta1(),
                    e.theta_hat.theta2(),
                    e.loglik,
                    e.converged,
                    e.n_evals,
                    e.band.lo,
                    e.band.hi,
                    e.at_bound
                );
            }
            s
        }
    };
    emit(&a.common, &text)
}

fn cmd_calibrate(mut a: CalibrateArgs) -> CliResult<()> {
    let file: CalibrateArgs = read_config(a.common.config.as_deref())?;
    merge_from_file!(a, file; x, y, theta1, theta2, s_eta, noise_band, band);
    let xs = load_traces(&required(a.x.clone(), "x")?)?;
    let ys = load_traces(&required(a.y.clone(), "y")?)?;
    let init = ParamVector::new(required(a.theta1, "theta1")?, required(a.theta2, "theta2")?)?;
    let floor = match (a.s_eta, band_from(a.noise_band, "noise-band")?) {
        (Some(s_eta), _) => CalibrationFloor::Known { s_eta },
        (None, Some(band)) => CalibrationFloor::HighBand { band },
        (None, None) => {
            let nyquist = std::f64::consts::PI / ys[0].dt();
            CalibrationFloor::HighBand {
                band: Band::new(60.0 * init.theta2(), nyquist).map_err(|_| {
                    Failure::Config(format!(
                        "no room for a default noise band above 60*theta2 below the Nyquist frequency {nyquist:e} rad/s; pass --s-eta or --noise-band"
                    ))
                })?,
            }
        }
    };
    let band = band_from(a.band, "band")?;
    let cal = calibrate_scale(&xs, &ys, &OuPsd, floor, band, &init)?;
    let text = match a.common.format {
        Format::Json => to_json(&cal),
        Format::Csv => format!(
            "# factor multiplies Y; theta1 in rad^2, theta2 in rad/s\nfactor,reference_theta1,reference_theta2,calibrated_theta1,calibrated_theta2,iterations\n{},{},{},{},{},{}\n",
            cal.factor,
            cal.reference.theta1(),
            cal.reference.theta2(),
            cal.calibrated.theta1(),
            cal.calibrated.theta2(),
            cal.iterations
        ),
    };
    emit(&a.common, &text)
}

fn dispatch(cli: Cli) -> CliResult<()> {
    let pool = {
        let mut b = rayon::ThreadPoolBuilder::new();
        if let Some(n) = cli.workers {
            if n == 0 {
                return Err(Failure::Config("--workers must be >= 1".into()));
            }
            b = b.num_threads(n);
        }
        b.build().map_err(|e| Failure::Config(format!("thread pool: {e}")))?
    };
    pool.install(|| match cli.command {
        Command::Bounds(a) => cmd_bounds(a),
        Command::Mc(a) => cmd_mc(a),
        Command::Simulate(a) => cmd_simulate(a),
        Command::Estimate(a) => cmd_estimate(a),
        Command::Calibrate(a) => cmd_calibrate(a),
    })
}

/// Parses `args` and runs the subcommand; returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match dispatch(cli) {
        Ok(()) => 0,
        Err(f) => {
            eprintln!("specfisher: {f}");
            f.exit_code()
        }
    }
}

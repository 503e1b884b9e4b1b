//! Monte Carlo error studies, bound sweeps, scale calibration and trace I/O.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{ensure_positive, Error, Result};
use crate::estimator::{
    noise_floor_estimate, noise_floor_pooled, periodogram, spc_mle, whittle_mle, whittle_mle_pooled, Band, Estimate,
    Periodogram,
};
use crate::fisher::{normalization_units, BoundsReport};
use crate::psdmodel::{s_i_for_snr, snr_c, ParamVector, PsdModel};
use crate::synth::{add_homodyne_noise, coherent_noise_floor, derive_seed, spc_counts, synth_process, TimeTrace};

/// Largest excluded fraction of trials for a run to count as valid.
pub const MAX_EXCLUDED_FRACTION: f64 = 0.10;

/// How the record of each trial is taken.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Measurement {
    /// Homodyne record with the coherent-state noise floor `1/(4S_I)`.
    Homodyne { s_i: f64 },
    /// Paired photon counts at flux `𝒩`.
    Spc { photon_flux: f64 },
}

impl Measurement {
    /// Flux-like quantity that sets `C`.
    pub fn flux(&self) -> f64 {
        match *self {
            Measurement::Homodyne { s_i } => s_i,
            Measurement::Spc { photon_flux } => photon_flux,
        }
    }
}

/// Noise floor supplied to the Whittle fit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NoiseFloor {
    /// The true floor of the simulated record.
    Known,
    /// Re-estimated per record from the mean periodogram power in `band`.
    Estimated { band: Band },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct McConfig {
    pub theta_true: ParamVector,
    pub measurement: Measurement,
    /// Record length `T` in seconds.
    pub horizon_t: f64,
    pub dt: f64,
    pub trials: usize,
    pub seed: u64,
    /// Estimation band; `(0, 10.15·θ₂]` when absent.
    #[serde(default)]
    pub band: Option<Band>,
    #[serde(default = "default_floor")]
    pub noise_floor: NoiseFloor,
    /// Optimizer start; the true parameters when absent.
    #[serde(default)]
    pub init: Option<ParamVector>,
}

fn default_floor() -> NoiseFloor {
    NoiseFloor::Known
}

impl McConfig {
    /// Desk-scale homodyne configuration at SNR `c`: θ₁ = 0.1323,
    /// θ₂ = 5.909e4 rad/s, T = 0.01 s, dt = 5e-6 s, 100 trials.
    pub fn desk_scale(c: f64, seed: u64) -> Result<Self> {
        let theta = ParamVector::new(0.1323, 5.909e4)?;
        Ok(McConfig {
            theta_true: theta,
            measurement: Measurement::Homodyne {
                s_i: s_i_for_snr(&theta, c)?,
            },
            horizon_t: 0.01,
            dt: 5e-6,
            trials: 100,
            seed,
            band: None,
            noise_floor: NoiseFloor::Known,
            init: None,
        })
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials < 2 {
            return Err(Error::usage(format!(
                "trials must be >= 2 for an unbiased variance, got {}",
                self.trials
            )));
        }
        ensure_positive("T", self.horizon_t)?;
        ensure_positive("dt", self.dt)?;
        ensure_positive("measurement flux", self.measurement.flux())?;
        if let Some(b) = self.band {
            Band::new(b.lo, b.hi)?;
        }
        Ok(())
    }

    pub fn band(&self) -> Band {
        self.band.unwrap_or_else(|| Band::default_for(&self.theta_true))
    }

    pub fn snr(&self) -> Result<f64> {
        snr_c(&self.theta_true, self.measurement.flux())
    }
}

/// Squared-error statistics of a Monte Carlo run, per parameter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ErrorStats {
    /// Sample mean of `(θ̂_μ − θ_μ)²`.
    pub eps_bar: [f64; 2],
    /// Unbiased sample variance of the squared errors.
    pub v: [f64; 2],
    /// Trials that entered the statistics.
    pub m: usize,
    /// `√(V/M)`.
    pub se: [f64; 2],
    pub excluded: usize,
    /// Included trials whose estimate ended on the optimizer box.
    pub at_bound: usize,
    pub valid: bool,
}

impl ErrorStats {
    pub fn from_errors(squared: &[[f64; 2]], excluded: usize) -> Self {
        let m = squared.len();
        let total = m + excluded;
        let mut eps_bar = [0.0; 2];
        let mut v = [0.0; 2];
        let mut se = [0.0; 2];
        if m > 0 {
            for i in 0..2 {
                eps_bar[i] = squared.iter().map(|e| e[i]).sum::<f64>() / m as f64;
            }
        }
        if m > 1 {
            for i in 0..2 {
                v[i] = squared.iter().map(|e| (e[i] - eps_bar[i]).powi(2)).sum::<f64>() / (m - 1) as f64;
                se[i] = (v[i] / m as f64).sqrt();
            }
        }
        let valid = m >= 2 && (excluded as f64) <= MAX_EXCLUDED_FRACTION * total as f64;
        ErrorStats {
            eps_bar,
            v,
            m,
            se,
            excluded,
            at_bound: 0,
            valid,
        }
    }

    /// `ε̄` and `se` in units of `θ₁²/(θ₂T)` and `θ₂/T`.
    pub fn normalized(&self, theta: &ParamVector, horizon_t: f64) -> ([f64; 2], [f64; 2]) {
        let u = normalization_units(theta, horizon_t);
        (
            [self.eps_bar[0] / u[0], self.eps_bar[1] / u[1]],
            [self.se[0] / u[0], self.se[1] / u[1]],
        )
    }
}

/// Runs one trial and returns its estimate.
pub fn run_trial<M>(model: &M, cfg: &McConfig, index: usize) -> Result<Estimate>
where
    M: PsdModel + ?Sized,
{
    let seed = derive_seed(cfg.seed, index as u64);
    let theta = &cfg.theta_true;
    let band = cfg.band();
    let init = cfg.init.unwrap_or(*theta);
    match cfg.measurement {
        Measurement::Homodyne { s_i } => {
            let s_eta = coherent_noise_floor(s_i)?;
            let x = synth_process(model, theta, cfg.horizon_t, cfg.dt, derive_seed(seed, 0))?;
            let y = add_homodyne_noise(&x, s_eta, derive_seed(seed, 1))?;
            let p = periodogram(&y)?;
            let floor = match cfg.noise_floor {
                NoiseFloor::Known => s_eta,
                NoiseFloor::Estimated { band } => noise_floor_estimate(&p, band)?,
            };
            whittle_mle(&p, model, floor, band, &init)
        }
        Measurement::Spc { photon_flux } => {
            let m_max = (band.hi * cfg.horizon_t / (2.0 * std::f64::consts::PI)).floor() as usize;
            let r = spc_counts(model, theta, photon_flux, cfg.horizon_t, m_max, seed)?;
            spc_mle(&r, model, &init)
        }
    }
}

/// Runs `cfg.trials` independent trials on the current rayon pool. Trial `m`
/// draws from `derive_seed(cfg.seed, m)`, so the result does not depend on
/// the number of workers.
pub fn run_trials<M>(model: &M, cfg: &McConfig) -> Result<ErrorStats>
where
    M: PsdModel + ?Sized,
{
    cfg.validate()?;
    let estimates: Vec<Estimate> = (0..cfg.trials)
        .into_par_iter()
        .map(|m| run_trial(model, cfg, m))
        .collect::<Result<_>>()?;
    let truth = cfg.theta_true.as_array();
    let mut squared = Vec::with_capacity(estimates.len());
    let mut excluded = 0;
    for (m, e) in estimates.iter().enumerate() {
        if !e.converged {
            log::info!("trial {m} did not converge; excluded");
            excluded += 1;
            continue;
        }
        let est = e.theta_hat.as_array();
        squared.push([(est[0] - truth[0]).powi(2), (est[1] - truth[1]).powi(2)]);
    }
    let mut stats = ErrorStats::from_errors(&squared, excluded);
    stats.at_bound = estimates.iter().filter(|e| e.converged && e.at_bound).count();
    if !stats.valid {
        log::warn!("{excluded} of {} trials excluded; run flagged invalid", cfg.trials);
    }
    Ok(stats)
}

/// Monte Carlo statistics next to the bounds for the same operating point.
#[derive(Debug, Clone, Serialize)]
pub struct McReport {
    pub config: McConfig,
    pub c: f64,
    pub stats: ErrorStats,
    /// Normalized inverse quantum-bound diagonal.
    pub bound_quantum: [f64; 2],
    /// Normalized inverse homodyne-limit diagonal.
    pub bound_homodyne: [f64; 2],
    pub eps_bar_normalized: [f64; 2],
    pub se_normalized: [f64; 2],
}

impl McReport {
    pub fn run<M>(model: &M, cfg: &McConfig) -> Result<Self>
    where
        M: PsdModel + ?Sized,
    {
        let stats = run_trials(model, cfg)?;
        let bounds = BoundsReport::compute(model, &cfg.theta_true, cfg.measurement.flux(), cfg.horizon_t)?;
        let (eps, se) = stats.normalized(&cfg.theta_true, cfg.horizon_t);
        Ok(McReport {
            config: cfg.clone(),
            c: bounds.c,
            stats,
            bound_quantum: [bounds.quantum_normalized[0][0], bounds.quantum_normalized[1][1]],
            bound_homodyne: [bounds.homodyne_normalized[0][0], bounds.homodyne_normalized[1][1]],
            eps_bar_normalized: eps,
            se_normalized: se,
        })
    }

    /// One row per parameter:
    /// `C,param_index,bound_quantum,bound_homodyne,eps_bar,se,M`.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        out.push_str("# param 1 (theta1) in units of theta1^2/(theta2*T); param 2 (theta2) in units of theta2/T\n");
        let _ = writeln!(
            out,
            "# theta1 = {} rad^2, theta2 = {} rad/s, T = {} s, excluded = {}, at_bound = {}, valid = {}",
            self.config.theta_true.theta1(),
            self.config.theta_true.theta2(),
            self.config.horizon_t,
            self.stats.excluded,
            self.stats.at_bound,
            self.stats.valid
        );
        out.push_str("C,param_index,bound_quantum,bound_homodyne,eps_bar,se,M\n");
        for i in 0..2 {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{}",
                self.c,
                i + 1,
                self.bound_quantum[i],
                self.bound_homodyne[i],
                self.eps_bar_normalized[i],
                self.se_normalized[i],
                self.stats.m
            );
        }
        out
    }
}

/// One `C` value of a bound sweep, in normalized units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepRow {
    pub c: f64,
    pub s_i: f64,
    pub quantum: [f64; 2],
    pub homodyne: [f64; 2],
    pub quantum_offdiag: f64,
    pub homodyne_offdiag: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundsSweep {
    pub theta: ParamVector,
    pub horizon_t: f64,
    pub rows: Vec<SweepRow>,
    /// Quantum `Σ₁₁` is non-increasing in `C`.
    pub monotone: bool,
    /// Homodyne `Σ_μμ ≥` quantum `Σ_μμ` in every row.
    pub ordered: bool,
}

/// Normalized inverse OU bounds (closed forms) over an increasing `C` grid.
pub fn bounds_sweep(theta: &ParamVector, horizon_t: f64, c_grid: &[f64]) -> Result<BoundsSweep> {
    ensure_positive("T", horizon_t)?;
    if c_grid.is_empty() {
        return Err(Error::usage("empty C grid"));
    }
    if c_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::usage("C grid must be strictly increasing"));
    }
    let mut rows = Vec::with_capacity(c_grid.len());
    for &c in c_grid {
        ensure_positive("C", c)?;
        let s_i = s_i_for_snr(theta, c)?;
        let r = BoundsReport::ou_closed(theta, s_i, horizon_t)?;
        let (q, h) = (r.quantum_normalized, r.homodyne_normalized);
        rows.push(SweepRow {
            c,
            s_i,
            quantum: [q[0][0], q[1][1]],
            homodyne: [h[0][0], h[1][1]],
            quantum_offdiag: q[0][1],
            homodyne_offdiag: h[0][1],
        });
    }
    let monotone = rows
        .windows(2)
        .all(|w| w[1].quantum[0] <= w[0].quantum[0] * (1.0 + 1e-12));
    let ordered = rows
        .iter()
        .all(|r| (0..2).all(|i| r.homodyne[i] >= r.quantum[i] * (1.0 - 1e-12)));
    Ok(BoundsSweep {
        theta: *theta,
        horizon_t,
        rows,
        monotone,
        ordered,
    })
}

impl BoundsSweep {
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        out.push_str("# inverse-information bounds; _11 in theta1^2/(theta2*T), _22 in theta2/T, _12 in theta1/T\n");
        let _ = writeln!(
            out,
            "# theta1 = {} rad^2, theta2 = {} rad/s, T = {} s, S_I in 1/s",
            self.theta.theta1(),
            self.theta.theta2(),
            self.horizon_t
        );
        out.push_str("C,S_I,quantum_11,quantum_22,quantum_12,homodyne_11,homodyne_22,homodyne_12\n");
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{}",
                r.c,
                r.s_i,
                r.quantum[0],
                r.quantum[1],
                r.quantum_offdiag,
                r.homodyne[0],
                r.homodyne[1],
                r.homodyne_offdiag
            );
        }
        out
    }
}

/// Noise floor used while calibrating `c·Y`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CalibrationFloor {
    /// Floor of the unscaled `Y`; scaled by `c²`.
    Known { s_eta: f64 },
    /// Re-estimated from the scaled `Y` periodograms in `band`.
    HighBand { band: Band },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Calibration {
    pub factor: f64,
    /// Pooled-X estimate taken as the reference.
    pub reference: ParamVector,
    /// Pooled estimate from the scaled `Y` at `factor`.
    pub calibrated: ParamVector,
    pub iterations: usize,
}

const CALIBRATION_BRACKET: (f64, f64) = (0.25, 4.0);
const CALIBRATION_TOL: f64 = 1e-4;

fn scaled_periodograms(spectra: &[Periodogram], c: f64) -> Vec<Periodogram> {
    spectra.iter().map(|p| p.scaled(c * c)).collect()
}

/// Finds the factor `c` for which the pooled Whittle estimate of `θ₁` from
/// `c·Y` matches the pooled estimate from the `X` traces, by bisection over
/// `[0.25, 4]`.
pub fn calibrate_scale<M>(
    x_traces: &[TimeTrace],
    y_traces: &[TimeTrace],
    model: &M,
    floor: CalibrationFloor,
    band: Option<Band>,
    init: &ParamVector,
) -> Result<Calibration>
where
    M: PsdModel + ?Sized,
{
    if x_traces.len() < 5 || y_traces.len() < 5 {
        return Err(Error::usage(format!(
            "calibration needs at least 5 traces of each kind, got {} X and {} Y",
            x_traces.len(),
            y_traces.len()
        )));
    }
    let px: Vec<Periodogram> = x_traces.iter().map(periodogram).collect::<Result<_>>()?;
    let py: Vec<Periodogram> = y_traces.iter().map(periodogram).collect::<Result<_>>()?;

    let band_for = |theta: &ParamVector| band.unwrap_or_else(|| Band::default_for(theta));
    let rough = whittle_mle_pooled(&px, model, 0.0, band_for(init), init)?;
    let reference_band = band_for(&rough.theta_hat);
    let reference = whittle_mle_pooled(&px, model, 0.0, reference_band, &rough.theta_hat)?;
    if !reference.converged {
        return Err(Error::Calibration("pooled X estimate did not converge".into()));
    }
    let target = reference.theta_hat.theta1();
    let band = reference_band;

    let estimate_at = |c: f64| -> Result<Estimate> {
        let scaled = scaled_periodograms(&py, c);
        let s_eta = match floor {
            CalibrationFloor::Known { s_eta } => c * c * s_eta,
            CalibrationFloor::HighBand { band } => noise_floor_pooled(&scaled, band)?,
        };
        let e = whittle_mle_pooled(&scaled, model, s_eta, band, &reference.theta_hat)?;
        if !e.converged {
            return Err(Error::Calibration(format!(
                "pooled Y estimate at c = {c} did not converge"
            )));
        }
        Ok(e)
    };
    let gap = |e: &Estimate| e.theta_hat.theta1() / target - 1.0;

    let (mut lo, mut hi) = CALIBRATION_BRACKET;
    let (e_lo, e_hi) = (estimate_at(lo)?, estimate_at(hi)?);
    let (mut g_lo, g_hi) = (gap(&e_lo), gap(&e_hi));
    if g_lo.signum() == g_hi.signum() {
        return Err(Error::Calibration(format!(
            "no sign change over [{lo}, {hi}]: relative theta1 gaps {g_lo:.4e} and {g_hi:.4e}"
        )));
    }
    let mut iterations = 0;
    loop {
        iterations += 1;
        // bisect in ln c; θ̂₁ scales like c²
        let mid = (lo * hi).sqrt();
        let e = estimate_at(mid)?;
        let g = gap(&e);
        if g.abs() <= CALIBRATION_TOL || hi / lo - 1.0 < 1e-12 || iterations >= 200 {
            return Ok(Calibration {
                factor: mid,
                reference: reference.theta_hat,
                calibrated: e.theta_hat,
                iterations,
            });
        }
        if g.signum() == g_lo.signum() {
            lo = mid;
            g_lo = g;
        } else {
            hi = mid;
        }
    }
}

/// Loads one CSV trace, or every `*.csv` in a directory in file-name order.
pub fn load_traces(path: &Path) -> Result<Vec<TimeTrace>> {
    let io = |source| Error::Io {
        path: path.to_path_buf(),
        source,
    };
    let meta = fs::metadata(path).map_err(io)?;
    if meta.is_file() {
        return Ok(vec![TimeTrace::read_csv(path)?]);
    }
    let mut files: Vec<PathBuf> = fs::read_dir(path)
        .map_err(io)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_file() && p.extension().is_some_and(|e| e == "csv"))
        .collect();
    files.sort();
    if files.is_empty() {
        return Err(Error::usage(format!("{} contains no .csv traces", path.display())));
    }
    files.iter().map(|p| TimeTrace::read_csv(p)).collect()
}

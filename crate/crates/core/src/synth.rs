//! Synthetic measurement records.
//!
//! Hidden-process traces are synthesized in the frequency domain: sideband
//! amplitudes `x_m` are drawn as independent circular complex Gaussians with
//! `E|x_m|² = S_X(ω_m|θ)`, Hermitian symmetry `x_{L−m} = x_m*` makes the
//! trace real, and
//!
//! ```text
//! X(t_l) = (1/√T) Σ_m x_m exp(−iω_m t_l),   ω_m = 2πm/T.
//! ```
//!
//! This is exact for a periodic process and an approximation to a stationary
//! one that improves as `T` grows past the correlation time.
//!
//! Randomness is counter-based: every record seed is split into independent
//! ChaCha streams per sideband, so a record is reproducible no matter how
//! many records are generated in parallel.

use std::f64::consts::PI;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, Poisson, StandardNormal};
use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;
use serde::Serialize;

use crate::error::{ensure_non_negative, ensure_positive, Error, Result};
use crate::psdmodel::{ParamVector, PsdModel};

pub const TRACE_HEADER: &str = "t_seconds,value";
pub const PHOTON_HEADER: &str = "omega_rad_per_s,count";

const TAG_PROCESS: u64 = 0x5052_4f43;
const TAG_NOISE: u64 = 0x4e4f_4953;
const TAG_COUNTS: u64 = 0x5350_4343;

/// SplitMix64 finalizer; used to derive independent seeds from `(seed, index)`.
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    let mut z = seed ^ index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn stream_rng(seed: u64, tag: u64, stream: u64) -> ChaCha12Rng {
    let mut rng = ChaCha12Rng::seed_from_u64(derive_seed(seed, tag));
    rng.set_stream(stream);
    rng
}

/// A uniformly sampled real time series `t_l = l·dt`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TimeTrace {
    dt: f64,
    samples: Vec<f64>,
}

impl TimeTrace {
    pub fn new(dt: f64, samples: Vec<f64>) -> Result<Self> {
        ensure_positive("dt", dt)?;
        if samples.len() < 2 {
            return Err(Error::usage(format!(
                "a trace needs at least 2 samples, got {}",
                samples.len()
            )));
        }
        if let Some(i) = samples.iter().position(|v| !v.is_finite()) {
            return Err(Error::domain(format!("sample {i} is not finite")));
        }
        Ok(TimeTrace { dt, samples })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// `T = L·dt`.
    pub fn horizon(&self) -> f64 {
        self.samples.len() as f64 * self.dt
    }

    /// Multiplies every sample by `factor`.
    pub fn scaled(&self, factor: f64) -> TimeTrace {
        TimeTrace {
            dt: self.dt,
            samples: self.samples.iter().map(|v| v * factor).collect(),
        }
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let io = |source| Error::Io {
            path: path.to_path_buf(),
            source,
        };
        let file = fs::File::create(path).map_err(io)?;
        let mut w = BufWriter::new(file);
        writeln!(w, "{TRACE_HEADER}").map_err(io)?;
        for (l, v) in self.samples.iter().enumerate() {
            writeln!(w, "{},{}", l as f64 * self.dt, v).map_err(io)?;
        }
        w.flush().map_err(io)
    }

    /// Parses a `t_seconds,value` file, validating uniform sampling.
    pub fn read_csv(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let perr = |line: usize, msg: String| Error::Parse {
            path: path.to_path_buf(),
            line,
            msg,
        };
        let mut lines = text.lines().enumerate();
        match lines.next() {
            Some((_, h)) if h.trim() == TRACE_HEADER => {}
            Some((_, h)) => return Err(perr(1, format!("expected header {TRACE_HEADER:?}, found {h:?}"))),
            None => return Err(perr(1, "empty file".into())),
        }
        let mut times = Vec::new();
        let mut samples = Vec::new();
        for (idx, raw) in lines {
            let line = idx + 1;
            let raw = raw.trim();
            if raw.is_empty() {
                continue;
            }
            let mut fields = raw.split(',');
            let (Some(t), Some(v), None) = (fields.next(), fields.next(), fields.next()) else {
                return Err(perr(line, format!("expected 2 fields, found {raw:?}")));
            };
            let t: f64 = t
                .trim()
                .parse()
                .map_err(|e| perr(line, format!("bad time {t:?}: {e}")))?;
            let v: f64 = v
                .trim()
                .parse()
                .map_err(|e| perr(line, format!("bad value {v:?}: {e}")))?;
            if !t.is_finite() || !v.is_finite() {
                return Err(perr(line, format!("non-finite entry in {raw:?}")));
            }
            times.push((line, t));
            samples.push(v);
        }
        if samples.len() < 2 {
            return Err(perr(
                text.lines().count().max(1),
                format!("need at least 2 samples, found {}", samples.len()),
            ));
        }
        let t0 = times[0].1;
        let n = times.len();
        let dt = (times[n - 1].1 - t0) / (n - 1) as f64;
        if dt.is_nan() || dt <= 0.0 {
            return Err(perr(times[1].0, "timestamps must increase".into()));
        }
        for (l, (line, t)) in times.iter().enumerate() {
            let dev = (t - t0 - l as f64 * dt).abs();
            if dev > 1e-9 * dt {
                return Err(perr(
                    *line,
                    format!("non-uniform sampling: t = {t} deviates from grid by {dev:e} s"),
                ));
            }
        }
        TimeTrace::new(dt, samples)
    }
}

/// Paired sideband photon counts `N_m = n_m + n_{−m}` for `m = 1..=m_max`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PhotonRecord {
    counts: Vec<u64>,
    omega: Vec<f64>,
    photon_flux: f64,
}

impl PhotonRecord {
    pub fn new(counts: Vec<u64>, omega: Vec<f64>, photon_flux: f64) -> Result<Self> {
        ensure_non_negative("photon flux", photon_flux)?;
        if counts.len() != omega.len() || counts.is_empty() {
            return Err(Error::usage(format!(
                "need equal, non-zero numbers of counts and frequencies ({} vs {})",
                counts.len(),
                omega.len()
            )));
        }
        if !omega.iter().all(|w| w.is_finite() && *w > 0.0) || omega.windows(2).any(|p| p[1] <= p[0]) {
            return Err(Error::usage(
                "sideband frequencies must be positive and strictly increasing",
            ));
        }
        Ok(PhotonRecord {
            counts,
            omega,
            photon_flux,
        })
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn omega(&self) -> &[f64] {
        &self.omega
    }

    pub fn photon_flux(&self) -> f64 {
        self.photon_flux
    }

    pub fn total_counts(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let io = |source| Error::Io {
            path: path.to_path_buf(),
            source,
        };
        let file = fs::File::create(path).map_err(io)?;
        let mut w = BufWriter::new(file);
        writeln!(w, "{PHOTON_HEADER}").map_err(io)?;
        for (w_m, n) in self.omega.iter().zip(&self.counts) {
            writeln!(w, "{w_m},{n}").map_err(io)?;
        }
        w.flush().map_err(io)
    }

    /// Parses an `omega_rad_per_s,count` file; the flux is not stored in
    /// the file and must be supplied.
    pub fn read_csv(path: &Path, photon_flux: f64) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let perr = |line: usize, msg: String| Error::Parse {
            path: path.to_path_buf(),
            line,
            msg,
        };
        let mut lines = text.lines().enumerate();
        match lines.next() {
            Some((_, h)) if h.trim() == PHOTON_HEADER => {}
            Some((_, h)) => return Err(perr(1, format!("expected header {PHOTON_HEADER:?}, found {h:?}"))),
            None => return Err(perr(1, "empty file".into())),
        }
        let mut omega = Vec::new();
        let mut counts = Vec::new();
        for (idx, raw) in lines {
            let line = idx + 1;
            let raw = raw.trim();
            if raw.is_empty() {
                continue;
            }
            let mut fields = raw.split(',');
            let (Some(w), Some(n), None) = (fields.next(), fields.next(), fields.next()) else {
                return Err(perr(line, format!("expected 2 fields, found {raw:?}")));
            };
            let w: f64 = w
                .trim()
                .parse()
                .map_err(|e| perr(line, format!("bad frequency {w:?}: {e}")))?;
            let n: u64 = n
                .trim()
                .parse()
                .map_err(|e| perr(line, format!("bad count {n:?}: {e}")))?;
            if !(w.is_finite() && w > 0.0) {
                return Err(perr(line, format!("frequency must be finite and > 0, got {w}")));
            }
            if omega.last().is_some_and(|&prev| w <= prev) {
                return Err(perr(line, "frequencies must be strictly increasing".into()));
            }
            omega.push(w);
            counts.push(n);
        }
        if counts.is_empty() {
            return Err(perr(1, "no photon-count rows".into()));
        }
        PhotonRecord::new(counts, omega, photon_flux)
    }
}

fn sideband_count(horizon_t: f64, dt: f64) -> Result<usize> {
    ensure_positive("T", horizon_t)?;
    ensure_positive("dt", dt)?;
    let l = (horizon_t / dt).round();
    if !(l.is_finite() && l >= 4.0) || (l * dt - horizon_t).abs() > 1e-9 * horizon_t {
        return Err(Error::usage(format!(
            "T = {horizon_t} s must be an integer multiple L·dt of dt = {dt} s with L >= 4"
        )));
    }
    Ok(l as usize)
}

/// Synthesizes one trace of the hidden process with spectrum `model(θ)`.
pub fn synth_process<M>(model: &M, theta: &ParamVector, horizon_t: f64, dt: f64, seed: u64) -> Result<TimeTrace>
where
    M: PsdModel + ?Sized,
{
    let l = sideband_count(horizon_t, dt)?;
    if PI / dt < 5.0 * model.frequency_scale(theta) {
        log::warn!(
            "sampling interval dt = {dt} s resolves only up to {:.3e} rad/s, below 5x the process bandwidth {:.3e} rad/s",
            PI / dt,
            model.frequency_scale(theta)
        );
    }
    let t = l as f64 * dt;
    let mut spectrum = vec![Complex64::new(0.0, 0.0); l];
    for m in 0..=l / 2 {
        let omega = 2.0 * PI * m as f64 / t;
        let s = model.value(omega, theta);
        if !(s.is_finite() && s >= 0.0) {
            return Err(Error::domain(format!(
                "spectral density {s} at omega = {omega} rad/s is not a valid variance"
            )));
        }
        let mut rng = stream_rng(seed, TAG_PROCESS, m as u64);
        let self_conjugate = m == 0 || (l % 2 == 0 && m == l / 2);
        if self_conjugate {
            let z: f64 = rng.sample(StandardNormal);
            spectrum[m] = Complex64::new(s.sqrt() * z, 0.0);
        } else {
            let sd = (0.5 * s).sqrt();
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            let x = Complex64::new(sd * re, sd * im);
            spectrum[m] = x;
            spectrum[l - m] = x.conj();
        }
    }

    // forward FFT computes Σ_m x_m e^{−2πi m l/L}
    let fft = FftPlanner::new().plan_fft_forward(l);
    fft.process(&mut spectrum);
    let norm = 1.0 / t.sqrt();
    let scale = spectrum.iter().fold(0.0_f64, |a, z| a.max(z.re.abs()));
    let max_imag = spectrum.iter().fold(0.0_f64, |a, z| a.max(z.im.abs()));
    if max_imag > 1e-10 * scale.max(f64::MIN_POSITIVE) {
        return Err(Error::numeric(format!(
            "synthesized trace is not real: imaginary part {:e} vs {:e}",
            max_imag * norm,
            scale * norm
        )));
    }
    TimeTrace::new(dt, spectrum.iter().map(|z| z.re * norm).collect())
}

/// Adds white measurement noise of two-sided PSD `s_eta` (per-sample
/// variance `s_eta/dt`).
pub fn add_homodyne_noise(x: &TimeTrace, s_eta: f64, seed: u64) -> Result<TimeTrace> {
    ensure_non_negative("s_eta", s_eta)?;
    if s_eta == 0.0 {
        return Ok(x.clone());
    }
    let sd = (s_eta / x.dt).sqrt();
    let mut rng = stream_rng(seed, TAG_NOISE, 0);
    let samples = x
        .samples
        .iter()
        .map(|v| {
            let z: f64 = rng.sample(StandardNormal);
            v + sd * z
        })
        .collect();
    TimeTrace::new(x.dt, samples)
}

/// Coherent-state homodyne noise floor `1/(4S_I)`.
pub fn coherent_noise_floor(s_i: f64) -> Result<f64> {
    ensure_positive("s_i", s_i)?;
    Ok(0.25 / s_i)
}

/// Draws a paired photon-count record for sidebands `m = 1..=m_max`.
pub fn spc_counts<M>(
    model: &M,
    theta: &ParamVector,
    photon_flux: f64,
    horizon_t: f64,
    m_max: usize,
    seed: u64,
) -> Result<PhotonRecord>
where
    M: PsdModel + ?Sized,
{
    ensure_non_negative("photon flux", photon_flux)?;
    ensure_positive("T", horizon_t)?;
    if m_max == 0 {
        return Err(Error::usage("m_max must be >= 1"));
    }
    let mut counts = Vec::with_capacity(m_max);
    let mut omega = Vec::with_capacity(m_max);
    for m in 1..=m_max {
        let w = 2.0 * PI * m as f64 / horizon_t;
        let s = model.value(w, theta);
        if !(s.is_finite() && s >= 0.0) {
            return Err(Error::domain(format!(
                "spectral density {s} at omega = {w} rad/s is not a valid variance"
            )));
        }
        let mut rng = stream_rng(seed, TAG_COUNTS, m as u64);
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        let power = 0.5 * s * (re * re + im * im);
        let mean = 2.0 * photon_flux * power;
        let n = if mean > 0.0 {
            let poisson = Poisson::new(mean).map_err(|e| Error::numeric(format!("Poisson mean {mean}: {e}")))?;
            poisson.sample(&mut rng) as u64
        } else {
            0
        };
        counts.push(n);
        omega.push(w);
    }
    PhotonRecord::new(counts, omega, photon_flux)
}

/// Bose-Einstein probability `n̄ⁿ/(1+n̄)^{n+1}`, evaluated in log space.
pub fn bose_einstein_pmf(n_bar: f64, n: i64) -> Result<f64> {
    if n < 0 {
        return Err(Error::usage(format!("photon number must be >= 0, got {n}")));
    }
    ensure_positive("mean photon number", n_bar)?;
    Ok(bose_einstein_ln_pmf(n_bar, n as u64).exp())
}

#[inline]
pub(crate) fn bose_einstein_ln_pmf(n_bar: f64, n: u64) -> f64 {
    let ln1p = n_bar.ln_1p();
    if n == 0 {
        -ln1p
    } else {
        n as f64 * n_bar.ln() - (n as f64 + 1.0) * ln1p
    }
}

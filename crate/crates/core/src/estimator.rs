//! Maximum-likelihood estimation of spectrum parameters.
//!
//! Homodyne records are reduced to a periodogram and fitted with the Whittle
//! approximation to the Gaussian likelihood; photon-count records are fitted
//! with their exact Bose-Einstein likelihood. Both maximizers run a bounded
//! Nelder-Mead search over `φ = ln θ` from five starting points and keep the
//! best converged result.

use std::f64::consts::PI;

use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{ensure_non_negative, Error, Result};
use crate::optim::{nelder_mead, NmOptions};
use crate::psdmodel::{ParamVector, PsdModel};
use crate::synth::{bose_einstein_ln_pmf, PhotonRecord, TimeTrace};

/// Default estimation band, as a multiple of the bandwidth `θ₂`.
pub const DEFAULT_BAND_FACTOR: f64 = 10.15;

/// Search box half-width around the initial guess, as a multiplicative factor.
const BOUND_FACTOR: f64 = 1e6;

/// Restart schedule: `(coordinate, factor)` applied to the initial guess.
const RESTARTS: [(usize, f64); 5] = [(0, 1.0), (0, 0.25), (1, 0.5), (0, 2.0), (1, 4.0)];

/// Inclusive frequency band `[lo, hi]` in rad/s.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 2]", into = "[f64; 2]")]
pub struct Band {
    pub lo: f64,
    pub hi: f64,
}

impl From<[f64; 2]> for Band {
    fn from(v: [f64; 2]) -> Self {
        Band { lo: v[0], hi: v[1] }
    }
}

impl From<Band> for [f64; 2] {
    fn from(b: Band) -> Self {
        [b.lo, b.hi]
    }
}

impl Band {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        ensure_non_negative("band lower edge", lo)?;
        if !(hi.is_finite() && hi > lo) {
            return Err(Error::usage(format!("invalid band [{lo}, {hi}]")));
        }
        Ok(Band { lo, hi })
    }

    /// `(0, 10.15·θ₂]`.
    pub fn default_for(theta: &ParamVector) -> Self {
        Band {
            lo: 0.0,
            hi: DEFAULT_BAND_FACTOR * theta.theta2(),
        }
    }

    #[inline]
    pub fn contains(&self, omega: f64) -> bool {
        omega >= self.lo && omega <= self.hi
    }
}

/// Periodogram ordinates `|y_m|²` for `0 < m < L/2`, with
/// `y_m = (δt/√T) Σ_l Y(t_l) e^{iω_m t_l}`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Periodogram {
    omega: Vec<f64>,
    power: Vec<f64>,
    horizon_t: f64,
}

impl Periodogram {
    pub fn omega(&self) -> &[f64] {
        &self.omega
    }

    pub fn power(&self) -> &[f64] {
        &self.power
    }

    pub fn horizon(&self) -> f64 {
        self.horizon_t
    }

    pub fn len(&self) -> usize {
        self.omega.len()
    }

    pub fn is_empty(&self) -> bool {
        self.omega.is_empty()
    }

    fn in_band(&self, band: Band) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.omega
            .iter()
            .zip(&self.power)
            .filter(move |(w, _)| band.contains(**w))
            .map(|(w, p)| (*w, *p))
    }

    /// Periodogram of the trace scaled by `√factor`.
    pub fn scaled(&self, factor: f64) -> Periodogram {
        Periodogram {
            omega: self.omega.clone(),
            power: self.power.iter().map(|p| p * factor).collect(),
            horizon_t: self.horizon_t,
        }
    }

    pub fn modes_in(&self, band: Band) -> usize {
        self.in_band(band).count()
    }
}

pub fn periodogram(y: &TimeTrace) -> Result<Periodogram> {
    let l = y.len();
    if l < 4 {
        return Err(Error::usage(format!("periodogram needs L >= 4 samples, got {l}")));
    }
    let t = y.horizon();
    let mut buf: Vec<Complex64> = y.samples().iter().map(|v| Complex64::new(*v, 0.0)).collect();
    FftPlanner::new().plan_fft_forward(l).process(&mut buf);
    // |Σ Y e^{+iω t}| = |Σ Y e^{−iω t}| for real Y
    let norm = y.dt() * y.dt() / t;
    let count = (l - 1) / 2;
    let mut omega = Vec::with_capacity(count);
    let mut power = Vec::with_capacity(count);
    for (m, z) in buf.iter().enumerate().take(count + 1).skip(1) {
        omega.push(2.0 * PI * m as f64 / t);
        power.push(z.norm_sqr() * norm);
    }
    Ok(Periodogram {
        omega,
        power,
        horizon_t: t,
    })
}

fn whittle_sum<M>(
    spectra: &[Periodogram],
    model: &M,
    theta: &ParamVector,
    s_eta: f64,
    band: Band,
) -> Result<(f64, usize)>
where
    M: PsdModel + ?Sized,
{
    let mut acc = 0.0;
    let mut k = 0usize;
    for p in spectra {
        for (w, power) in p.in_band(band) {
            let s_y = model.value(w, theta) + s_eta;
            if !(s_y > 0.0 && s_y.is_finite()) {
                return Err(Error::domain(format!(
                    "S_Y = {s_y} at omega = {w} rad/s is not positive"
                )));
            }
            acc += s_y.ln() + power / s_y;
            k += 1;
        }
    }
    Ok((-acc, k))
}

/// Whittle log-likelihood `−Σ_{m∈band} [ln S_Y(ω_m) + |y_m|²/S_Y(ω_m)]`
/// with `S_Y = S_X + s_eta`.
pub fn whittle_loglik<M>(p: &Periodogram, model: &M, theta: &ParamVector, s_eta: f64, band: Band) -> Result<f64>
where
    M: PsdModel + ?Sized,
{
    whittle_loglik_pooled(std::slice::from_ref(p), model, theta, s_eta, band)
}

/// Whittle log-likelihood over the union of several periodograms' modes.
pub fn whittle_loglik_pooled<M>(
    spectra: &[Periodogram],
    model: &M,
    theta: &ParamVector,
    s_eta: f64,
    band: Band,
) -> Result<f64>
where
    M: PsdModel + ?Sized,
{
    ensure_non_negative("s_eta", s_eta)?;
    let (ll, k) = whittle_sum(spectra, model, theta, s_eta, band)?;
    if k == 0 {
        return Err(Error::usage(format!(
            "band [{}, {}] rad/s contains no periodogram modes",
            band.lo, band.hi
        )));
    }
    Ok(ll)
}

/// Result of a likelihood maximization.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Estimate {
    #[serde(flatten)]
    pub theta_hat: ParamVector,
    pub loglik: f64,
    pub converged: bool,
    pub n_evals: usize,
    pub band: Band,
    /// Some coordinate ended on the search box (a degenerate record).
    pub at_bound: bool,
}

fn maximize<F>(loglik: F, init: &ParamVector, band: Band) -> Estimate
where
    F: Fn(&ParamVector) -> f64,
{
    let phi0 = init.to_log();
    let width = BOUND_FACTOR.ln();
    let lo = [phi0[0] - width, phi0[1] - width];
    let hi = [phi0[0] + width, phi0[1] + width];
    let objective = |phi: [f64; 2]| match ParamVector::from_log(phi) {
        Ok(theta) => -loglik(&theta),
        Err(_) => f64::INFINITY,
    };

    let mut n_evals = 0;
    let mut best_converged: Option<([f64; 2], f64)> = None;
    let mut best_any: Option<([f64; 2], f64)> = None;
    for (coord, factor) in RESTARTS {
        let mut start = phi0;
        start[coord] += factor.ln();
        let r = nelder_mead(objective, start, lo, hi, NmOptions::default());
        n_evals += r.evals;
        if best_any.is_none_or(|(_, f)| r.f < f) {
            best_any = Some((r.x, r.f));
        }
        if r.converged && best_converged.is_none_or(|(_, f)| r.f < f) {
            best_converged = Some((r.x, r.f));
        }
    }

    let converged = best_converged.is_some();
    let (phi, f) = best_converged.or(best_any).expect("at least one restart");
    let at_bound = (0..2).any(|i| phi[i] - lo[i] < 1e-6 || hi[i] - phi[i] < 1e-6);
    Estimate {
        theta_hat: ParamVector::from_log(phi).unwrap_or(*init),
        loglik: -f,
        converged: converged && f.is_finite(),
        n_evals,
        band,
        at_bound,
    }
}

/// Whittle maximum-likelihood estimate from one periodogram.
pub fn whittle_mle<M>(p: &Periodogram, model: &M, s_eta: f64, band: Band, init: &ParamVector) -> Result<Estimate>
where
    M: PsdModel + ?Sized,
{
    whittle_mle_pooled(std::slice::from_ref(p), model, s_eta, band, init)
}

/// Whittle estimate from the pooled modes of several records.
pub fn whittle_mle_pooled<M>(
    spectra: &[Periodogram],
    model: &M,
    s_eta: f64,
    band: Band,
    init: &ParamVector,
) -> Result<Estimate>
where
    M: PsdModel + ?Sized,
{
    // validates the band and noise floor once
    whittle_loglik_pooled(spectra, model, init, s_eta, band)?;
    Ok(maximize(
        |theta| {
            whittle_sum(spectra, model, theta, s_eta, band)
                .map(|(ll, _)| ll)
                .unwrap_or(f64::NEG_INFINITY)
        },
        init,
        band,
    ))
}

/// Mean periodogram power over `high_band`, an estimate of a flat noise floor.
pub fn noise_floor_estimate(p: &Periodogram, high_band: Band) -> Result<f64> {
    noise_floor_pooled(std::slice::from_ref(p), high_band)
}

pub fn noise_floor_pooled(spectra: &[Periodogram], high_band: Band) -> Result<f64> {
    let mut k = 0usize;
    let mut acc = 0.0;
    for p in spectra {
        for (_, power) in p.in_band(high_band) {
            acc += power;
            k += 1;
        }
    }
    if k < 50 {
        return Err(Error::usage(format!(
            "noise-floor band [{}, {}] rad/s holds {k} modes; at least 50 are required",
            high_band.lo, high_band.hi
        )));
    }
    Ok(acc / k as f64)
}

/// Bose-Einstein log-likelihood `Σ_m [N_m ln N̄_m − (N_m + 1) ln(1 + N̄_m)]`
/// with `N̄_m = 2𝒩 S_X(ω_m)`.
pub fn spc_loglik<M>(r: &PhotonRecord, model: &M, theta: &ParamVector) -> Result<f64>
where
    M: PsdModel + ?Sized,
{
    let flux = r.photon_flux();
    let mut acc = 0.0;
    for (w, n) in r.omega().iter().zip(r.counts()) {
        let n_bar = 2.0 * flux * model.value(*w, theta);
        if !(n_bar > 0.0 && n_bar.is_finite()) {
            return Err(Error::domain(format!(
                "mean photon number {n_bar} at omega = {w} rad/s is not positive"
            )));
        }
        acc += bose_einstein_ln_pmf(n_bar, *n);
    }
    Ok(acc)
}

/// Photon-counting maximum-likelihood estimate.
pub fn spc_mle<M>(r: &PhotonRecord, model: &M, init: &ParamVector) -> Result<Estimate>
where
    M: PsdModel + ?Sized,
{
    spc_loglik(r, model, init)?;
    let omega = r.omega();
    let band = Band {
        lo: omega[0],
        hi: omega[omega.len() - 1],
    };
    Ok(maximize(
        |theta| spc_loglik(r, model, theta).unwrap_or(f64::NEG_INFINITY),
        init,
        band,
    ))
}

//! Spectral-density families for the hidden process.
//!
//! All densities follow the two-sided convention
//! `S_X(ω) = ∫ E[X(t)X(t+τ)] e^{iωτ} dτ`, so the process variance is
//! `(1/2π) ∫ S_X dω`.

use serde::{Deserialize, Serialize};

use crate::error::{ensure_positive, Error, Result};

/// Relative step used by the finite-difference log-gradient fallback.
pub const FD_REL_STEP: f64 = 1e-6;

/// Hyperparameters of the hidden-process spectrum.
///
/// `theta1` is the process variance (rad²) and `theta2` the bandwidth
/// (rad/s). Both are strictly positive.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawParams", into = "RawParams")]
pub struct ParamVector {
    theta1: f64,
    theta2: f64,
}

#[derive(Serialize, Deserialize)]
struct RawParams {
    theta1: f64,
    theta2: f64,
}

impl TryFrom<RawParams> for ParamVector {
    type Error = Error;

    fn try_from(raw: RawParams) -> Result<Self> {
        ParamVector::new(raw.theta1, raw.theta2)
    }
}

impl From<ParamVector> for RawParams {
    fn from(p: ParamVector) -> Self {
        RawParams {
            theta1: p.theta1,
            theta2: p.theta2,
        }
    }
}

impl ParamVector {
    pub fn new(theta1: f64, theta2: f64) -> Result<Self> {
        ensure_positive("theta1", theta1)?;
        ensure_positive("theta2", theta2)?;
        Ok(ParamVector { theta1, theta2 })
    }

    #[inline]
    pub fn theta1(&self) -> f64 {
        self.theta1
    }

    #[inline]
    pub fn theta2(&self) -> f64 {
        self.theta2
    }

    #[inline]
    pub fn as_array(&self) -> [f64; 2] {
        [self.theta1, self.theta2]
    }

    pub fn from_array(v: [f64; 2]) -> Result<Self> {
        ParamVector::new(v[0], v[1])
    }

    /// Log-parameterization used by the optimizers.
    pub fn to_log(&self) -> [f64; 2] {
        [self.theta1.ln(), self.theta2.ln()]
    }

    pub fn from_log(phi: [f64; 2]) -> Result<Self> {
        ParamVector::new(phi[0].exp(), phi[1].exp())
    }

    /// Copy with coordinate `index` multiplied by `factor`.
    pub fn scaled(&self, index: usize, factor: f64) -> Result<Self> {
        let mut v = self.as_array();
        v[index] *= factor;
        ParamVector::from_array(v)
    }
}

/// A spectral-density family `S_X(ω|θ)` with two parameters.
///
/// Implementors supply `value`; `log_grad` defaults to central differences of
/// `ln value` with relative step [`FD_REL_STEP`].
pub trait PsdModel: Sync {
    fn value(&self, omega: f64, theta: &ParamVector) -> f64;

    fn log_grad(&self, omega: f64, theta: &ParamVector) -> [f64; 2] {
        finite_difference_log_grad(|w, p| self.value(w, p), omega, theta)
    }

    fn dim(&self) -> usize {
        2
    }

    /// Frequency scale (rad/s) used to compactify `ω ∈ (−∞, ∞)` for quadrature.
    fn frequency_scale(&self, theta: &ParamVector) -> f64 {
        theta.theta2
    }
}

pub(crate) fn finite_difference_log_grad<F>(value: F, omega: f64, theta: &ParamVector) -> [f64; 2]
where
    F: Fn(f64, &ParamVector) -> f64,
{
    let base = theta.as_array();
    let mut grad = [0.0; 2];
    for (mu, g) in grad.iter_mut().enumerate() {
        let h = FD_REL_STEP * base[mu];
        let mut up = base;
        let mut down = base;
        up[mu] += h;
        down[mu] -= h;
        let up = ParamVector {
            theta1: up[0],
            theta2: up[1],
        };
        let down = ParamVector {
            theta1: down[0],
            theta2: down[1],
        };
        *g = (value(omega, &up).ln() - value(omega, &down).ln()) / (2.0 * h);
    }
    grad
}

/// Lorentzian spectrum of an Ornstein-Uhlenbeck process,
/// `S_X(ω) = 2θ₁θ₂ / (ω² + θ₂²)`.
#[derive(Debug, Clone, Copy, Default)]
pub struct OuPsd;

impl PsdModel for OuPsd {
    #[inline]
    fn value(&self, omega: f64, theta: &ParamVector) -> f64 {
        2.0 * theta.theta1 * theta.theta2 / (omega * omega + theta.theta2 * theta.theta2)
    }

    #[inline]
    fn log_grad(&self, omega: f64, theta: &ParamVector) -> [f64; 2] {
        let t2 = theta.theta2;
        [1.0 / theta.theta1, 1.0 / t2 - 2.0 * t2 / (omega * omega + t2 * t2)]
    }
}

/// OU spectral density at `omega`.
pub fn ou_value(omega: f64, theta1: f64, theta2: f64) -> Result<f64> {
    let theta = ParamVector::new(theta1, theta2)?;
    Ok(OuPsd.value(omega, &theta))
}

/// Analytic `∂_μ ln S_X` of the OU density.
pub fn ou_log_grad(omega: f64, theta1: f64, theta2: f64) -> Result<[f64; 2]> {
    let theta = ParamVector::new(theta1, theta2)?;
    Ok(OuPsd.log_grad(omega, &theta))
}

/// User-supplied spectral density with a finite-difference gradient.
pub struct FnPsd<F> {
    f: F,
}

impl<F> FnPsd<F>
where
    F: Fn(f64, &ParamVector) -> f64 + Sync,
{
    pub fn new(f: F) -> Self {
        FnPsd { f }
    }
}

impl<F> PsdModel for FnPsd<F>
where
    F: Fn(f64, &ParamVector) -> f64 + Sync,
{
    fn value(&self, omega: f64, theta: &ParamVector) -> f64 {
        (self.f)(omega, theta)
    }
}

/// Photon-flux PSD and observation horizon of a phase-modulation experiment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SnrContext {
    /// Photon-flux PSD `S_I` (s⁻¹); equals the mean flux for a coherent state.
    pub s_i: f64,
    /// Observation time `T` (s).
    pub horizon_t: f64,
}

impl SnrContext {
    pub fn new(s_i: f64, horizon_t: f64) -> Result<Self> {
        ensure_positive("s_i", s_i)?;
        ensure_positive("horizon T", horizon_t)?;
        Ok(SnrContext { s_i, horizon_t })
    }

    pub fn snr(&self, theta: &ParamVector) -> f64 {
        8.0 * theta.theta1 * self.s_i / theta.theta2
    }
}

/// SNR quantity `C = 8θ₁S_I/θ₂ = 4·S_I·S_X(0|θ)`.
pub fn snr_c(theta: &ParamVector, s_i: f64) -> Result<f64> {
    ensure_positive("s_i", s_i)?;
    Ok(8.0 * theta.theta1 * s_i / theta.theta2)
}

/// Photon-flux PSD that yields SNR `c` for the given parameters.
pub fn s_i_for_snr(theta: &ParamVector, c: f64) -> Result<f64> {
    ensure_positive("C", c)?;
    Ok(c * theta.theta2 / (8.0 * theta.theta1))
}

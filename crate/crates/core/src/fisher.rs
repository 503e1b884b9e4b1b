//! Fisher-information matrices and mean-square-error bounds.
//!
//! Every information quantity here has the form
//!
//! ```text
//! T · (1/2π) ∫ (∂_μ ln S_X)(∂_ν ln S_X) · w(ω) dω
//! ```
//!
//! for a measurement-specific weight `w`. Integrals over the real line use
//! Gauss-Legendre quadrature after the substitution `ω = θ₂·tan φ`, with node
//! doubling until the result is stable to 1e-8 relative. Generator PSDs are
//! passed in the dimensionless convention `s_Q = S_Q/ħ²`, so for optical
//! phase modulation they are photon-flux PSDs in s⁻¹.

use std::cell::Cell;
use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use nalgebra::{Matrix2, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{ensure_non_negative, ensure_positive, Error, Result};
use crate::psdmodel::{ParamVector, PsdModel};
use crate::quad::integrate_real_line;

/// A real symmetric 2×2 matrix stored row-major.
pub type Mat2 = [[f64; 2]; 2];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InfoKind {
    /// Variational upper bound on the quantum Fisher information.
    Quantum,
    /// Homodyne Fisher information for a given noise floor.
    HomodyneInfo,
    /// Homodyne information at the coherent-state noise floor `S_η = 1/(4S_I)`.
    HomodyneLimit,
    /// Spectral photon counting.
    Spc,
}

/// Fisher-information matrix over `(θ₁, θ₂)` for horizon `T`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InfoMatrix {
    pub entries: Mat2,
    pub horizon_t: f64,
    pub kind: InfoKind,
}

impl InfoMatrix {
    fn from_upper(upper: [f64; 3], horizon_t: f64, kind: InfoKind) -> Self {
        InfoMatrix {
            entries: [[upper[0], upper[1]], [upper[1], upper[2]]],
            horizon_t,
            kind,
        }
    }

    pub fn get(&self, mu: usize, nu: usize) -> f64 {
        self.entries[mu][nu]
    }

    pub fn trace(&self) -> f64 {
        self.entries[0][0] + self.entries[1][1]
    }

    pub fn eigenvalues(&self) -> [f64; 2] {
        let eig = SymmetricEigen::new(to_na(&self.entries));
        let mut ev = [eig.eigenvalues[0], eig.eigenvalues[1]];
        ev.sort_by(f64::total_cmp);
        ev
    }

    /// `uᵀ J u`.
    pub fn quadratic_form(&self, u: [f64; 2]) -> f64 {
        quadratic_form(&self.entries, u)
    }

    pub fn is_symmetric(&self) -> bool {
        let a = self.entries[0][1];
        let b = self.entries[1][0];
        (a - b).abs() <= 4.0 * f64::EPSILON * a.abs().max(b.abs())
    }

    /// Symmetric and positive semidefinite up to a relative `1e-12`.
    pub fn check_valid(&self) -> Result<()> {
        if self.entries.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::numeric(format!(
                "{:?} matrix has non-finite entries: {:?}",
                self.kind, self.entries
            )));
        }
        if !self.is_symmetric() {
            return Err(Error::numeric(format!(
                "{:?} matrix is not symmetric: {:?}",
                self.kind, self.entries
            )));
        }
        let [[a, b], [_, d]] = self.entries;
        let scale = a.abs().max(d.abs());
        if a < -1e-12 * scale || d < -1e-12 * scale || b * b > a * d * (1.0 + 1e-12) + f64::MIN_POSITIVE {
            return Err(Error::numeric(format!(
                "{:?} matrix is not positive semidefinite: {:?}",
                self.kind, self.entries
            )));
        }
        Ok(())
    }

    pub fn inverse(&self) -> Result<Mat2> {
        invert_info(self)
    }
}

pub(crate) fn quadratic_form(m: &Mat2, u: [f64; 2]) -> f64 {
    u[0] * (m[0][0] * u[0] + m[0][1] * u[1]) + u[1] * (m[1][0] * u[0] + m[1][1] * u[1])
}

fn to_na(m: &Mat2) -> Matrix2<f64> {
    Matrix2::new(m[0][0], m[0][1], m[1][0], m[1][1])
}

/// Shared integrator: `T·(1/2π)∫ g_μ g_ν w(ω, S_X) dω`.
fn info_integral<M, W>(model: &M, theta: &ParamVector, horizon_t: f64, kind: InfoKind, weight: W) -> Result<InfoMatrix>
where
    M: PsdModel + ?Sized,
    W: Fn(f64, f64) -> f64,
{
    ensure_positive("horizon T", horizon_t)?;
    let bad = Cell::new(None::<(f64, f64)>);
    let integrand = |omega: f64| {
        let s_x = model.value(omega, theta);
        if !(s_x.is_finite() && s_x >= 0.0) {
            bad.set(Some((omega, s_x)));
            return [0.0; 3];
        }
        if s_x == 0.0 {
            return [0.0; 3];
        }
        let w = weight(omega, s_x);
        if w.is_nan() {
            bad.set(Some((omega, w)));
            return [0.0; 3];
        }
        if w == 0.0 {
            return [0.0; 3];
        }
        let g = model.log_grad(omega, theta);
        let c = w / (2.0 * PI);
        [g[0] * g[0] * c, g[0] * g[1] * c, g[1] * g[1] * c]
    };
    let upper = integrate_real_line(integrand, model.frequency_scale(theta))?;
    if let Some((omega, v)) = bad.get() {
        return Err(Error::domain(format!(
            "invalid spectral value {v} at omega = {omega} rad/s"
        )));
    }
    Ok(InfoMatrix::from_upper(
        [upper[0] * horizon_t, upper[1] * horizon_t, upper[2] * horizon_t],
        horizon_t,
        kind,
    ))
}

/// Variational upper bound on the quantum Fisher information for a general
/// generator PSD `s_q(ω) = S_Q(ω)/ħ²`.
pub fn quantum_bound<M, Q>(model: &M, s_q: Q, theta: &ParamVector, horizon_t: f64) -> Result<InfoMatrix>
where
    M: PsdModel + ?Sized,
    Q: Fn(f64) -> f64,
{
    let negative = Cell::new(None::<(f64, f64)>);
    let out = info_integral(model, theta, horizon_t, InfoKind::Quantum, |omega, s_x| {
        let q = s_q(omega);
        if q.is_nan() || q < 0.0 {
            negative.set(Some((omega, q)));
            return 0.0;
        }
        1.0 / (2.0 + 1.0 / (q * s_x))
    })?;
    if let Some((omega, q)) = negative.get() {
        return Err(Error::domain(format!(
            "generator PSD must be >= 0, got {q} at omega = {omega} rad/s"
        )));
    }
    Ok(out)
}

/// Quantum bound for phase modulation with a flat photon-flux PSD `s_i`.
pub fn phase_quantum_bound<M>(model: &M, s_i: f64, theta: &ParamVector, horizon_t: f64) -> Result<InfoMatrix>
where
    M: PsdModel + ?Sized,
{
    ensure_non_negative("s_i", s_i)?;
    quantum_bound(model, |_| s_i, theta, horizon_t)
}

/// Homodyne Fisher information for a noise-floor PSD `s_eta(ω)`.
pub fn homodyne_info<M, E>(model: &M, s_eta: E, theta: &ParamVector, horizon_t: f64) -> Result<InfoMatrix>
where
    M: PsdModel + ?Sized,
    E: Fn(f64) -> f64,
{
    let negative = Cell::new(None::<(f64, f64)>);
    let out = info_integral(model, theta, horizon_t, InfoKind::HomodyneInfo, |omega, s_x| {
        let e = s_eta(omega);
        if e.is_nan() || e < 0.0 {
            negative.set(Some((omega, e)));
            return 0.0;
        }
        let r = 1.0 + e / s_x;
        1.0 / (2.0 * r * r)
    })?;
    if let Some((omega, e)) = negative.get() {
        return Err(Error::domain(format!(
            "noise-floor PSD must be >= 0, got {e} at omega = {omega} rad/s"
        )));
    }
    Ok(out)
}

/// Optimal homodyne information at the quadrature-uncertainty floor.
pub fn homodyne_limit<M>(model: &M, s_i: f64, theta: &ParamVector, horizon_t: f64) -> Result<InfoMatrix>
where
    M: PsdModel + ?Sized,
{
    ensure_positive("s_i", s_i)?;
    info_integral(model, theta, horizon_t, InfoKind::HomodyneLimit, |_, s_x| {
        let snr = s_i * s_x;
        1.0 / (2.0 + 1.0 / snr + 1.0 / (8.0 * snr * snr))
    })
}

/// Spectral-photon-counting information for mean photon flux `photon_flux`.
///
/// Evaluated from the per-mode Bose-Einstein information
/// `(∂ ln N̄)(∂ ln N̄)/(1 + 1/N̄)` with `N̄ = 2𝒩S_X`, summed over positive
/// sidebands in the long-horizon limit.
pub fn spc_info<M>(model: &M, photon_flux: f64, theta: &ParamVector, horizon_t: f64) -> Result<InfoMatrix>
where
    M: PsdModel + ?Sized,
{
    ensure_non_negative("photon flux", photon_flux)?;
    info_integral(model, theta, horizon_t, InfoKind::Spc, |_, s_x| {
        let n_bar = 2.0 * photon_flux * s_x;
        0.5 / (1.0 + 1.0 / n_bar)
    })
}

/// Exact per-mode photon-counting information `Σ_{m=1}^{m_max}` for a
/// record of horizon `T` (no long-horizon approximation).
pub fn spc_info_modes<M>(
    model: &M,
    photon_flux: f64,
    theta: &ParamVector,
    horizon_t: f64,
    m_max: usize,
) -> Result<InfoMatrix>
where
    M: PsdModel + ?Sized,
{
    ensure_positive("photon flux", photon_flux)?;
    ensure_positive("horizon T", horizon_t)?;
    let mut acc = [0.0; 3];
    for m in 1..=m_max {
        let omega = 2.0 * PI * m as f64 / horizon_t;
        let n_bar = 2.0 * photon_flux * model.value(omega, theta);
        let g = model.log_grad(omega, theta);
        let w = 1.0 / (1.0 + 1.0 / n_bar);
        acc[0] += g[0] * g[0] * w;
        acc[1] += g[0] * g[1] * w;
        acc[2] += g[1] * g[1] * w;
    }
    Ok(InfoMatrix::from_upper(acc, horizon_t, InfoKind::Spc))
}

/// Exact per-mode Whittle information of `Y = X + η` over the sidebands
/// `ω_m = 2πm/T` inside `[omega_lo, omega_hi]`, `m > 0`.
pub fn homodyne_info_modes<M>(
    model: &M,
    s_eta: f64,
    theta: &ParamVector,
    horizon_t: f64,
    omega_lo: f64,
    omega_hi: f64,
) -> Result<InfoMatrix>
where
    M: PsdModel + ?Sized,
{
    ensure_non_negative("s_eta", s_eta)?;
    ensure_positive("horizon T", horizon_t)?;
    let step = 2.0 * PI / horizon_t;
    let mut acc = [0.0; 3];
    let mut m = 1usize;
    loop {
        let omega = step * m as f64;
        if omega > omega_hi {
            break;
        }
        if omega >= omega_lo {
            let s_x = model.value(omega, theta);
            let g = model.log_grad(omega, theta);
            let r = s_x / (s_x + s_eta);
            let w = r * r;
            acc[0] += g[0] * g[0] * w;
            acc[1] += g[0] * g[1] * w;
            acc[2] += g[1] * g[1] * w;
        }
        m += 1;
    }
    Ok(InfoMatrix::from_upper(acc, horizon_t, InfoKind::HomodyneInfo))
}

fn ou_snr(theta: &ParamVector, s_i: f64) -> Result<f64> {
    ensure_positive("s_i (C = 0 is singular for the closed forms)", s_i)?;
    Ok(8.0 * theta.theta1() * s_i / theta.theta2())
}

/// `(1 + C/4)/√(1 + C/2) − 1`, free of cancellation for small `C`.
fn quantum_bracket(c: f64) -> f64 {
    let r = (1.0 + 0.5 * c).sqrt();
    (c * c / 16.0) / (r * (1.0 + 0.25 * c + r))
}

/// Closed-form quantum bound for the OU spectrum with flat `S_I`.
pub fn ou_quantum_closed(theta: &ParamVector, s_i: f64, horizon_t: f64) -> Result<InfoMatrix> {
    ensure_positive("horizon T", horizon_t)?;
    let c = ou_snr(theta, s_i)?;
    let (t1, t2, t) = (theta.theta1(), theta.theta2(), horizon_t);
    let bracket = quantum_bracket(c);
    let j11 = t2 * t / (8.0 * t1 * t1) * c / (1.0 + 0.5 * c).sqrt();
    let j22 = 2.0 * t / t2 * (1.0 + 0.25 * c) / c * bracket;
    let j12 = t / (2.0 * t1) * bracket;
    Ok(InfoMatrix::from_upper([j11, j12, j22], t, InfoKind::Quantum))
}

/// Closed-form homodyne limit for the OU spectrum with flat `S_I`.
pub fn ou_homodyne_closed(theta: &ParamVector, s_i: f64, horizon_t: f64) -> Result<InfoMatrix> {
    ensure_positive("horizon T", horizon_t)?;
    let c = ou_snr(theta, s_i)?;
    let (t1, t2, t) = (theta.theta1(), theta.theta2(), horizon_t);
    let b = (1.0 + c).powf(1.5);
    let j11 = t2 * t / (8.0 * t1 * t1) * c * c / b;

    // (1 + 3C/2 + C²/4)/(1+C)^{3/2} − 1 = (a² − b²)/(b(a + b))
    let a = 1.0 + 1.5 * c + 0.25 * c * c;
    let off = c * c * (c * c - 4.0 * c - 4.0) / 16.0 / (b * (a + b));
    let j12 = t / (2.0 * t1) * off;

    // (1/C)[p/b − (1 + C/4)] with p = (1 + C/2)(1 + 5C/4 + C²/8)
    let p = (1.0 + 0.5 * c) * (1.0 + 1.25 * c + c * c / 8.0);
    let q = (1.0 + 0.25 * c) * b;
    let diff = c * c * c * (c * c * c + 8.0 * c * c + 24.0 * c + 16.0) / 256.0 / (p + q);
    let j22 = 2.0 * t / t2 * diff / (c * b);
    Ok(InfoMatrix::from_upper([j11, j12, j22], t, InfoKind::HomodyneLimit))
}

/// Asymptotic regime of the OU error bounds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    HighC,
    LowCQuantum,
    LowCHomodyne,
}

impl FromStr for Regime {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "highC" | "high_c" => Ok(Regime::HighC),
            "lowC_quantum" | "low_c_quantum" => Ok(Regime::LowCQuantum),
            "lowC_homodyne" | "low_c_homodyne" => Ok(Regime::LowCHomodyne),
            other => Err(Error::usage(format!("unknown regime tag {other:?}"))),
        }
    }
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Regime::HighC => "highC",
            Regime::LowCQuantum => "lowC_quantum",
            Regime::LowCHomodyne => "lowC_homodyne",
        })
    }
}

/// Limiting error-bound (inverse information) matrices of the OU problem.
pub fn asymptotics(theta: &ParamVector, horizon_t: f64, c: f64, regime: Regime) -> Result<Mat2> {
    ensure_positive("horizon T", horizon_t)?;
    let (t1, t2) = (theta.theta1(), theta.theta2());
    let unit = 1.0 / (t2 * horizon_t);
    Ok(match regime {
        Regime::HighC => {
            let k = 2.0 * unit;
            [[k * t1 * t1, -k * t1 * t2], [-k * t1 * t2, k * t2 * t2]]
        }
        Regime::LowCQuantum => {
            ensure_positive("C", c)?;
            let k = 8.0 * unit / c;
            [[k * t1 * t1, 0.0], [0.0, 2.0 * k * t2 * t2]]
        }
        Regime::LowCHomodyne => {
            ensure_positive("C", c)?;
            let k = 16.0 * unit / (c * c);
            [[k * t1 * t1, k * t1 * t2], [k * t1 * t2, 2.0 * k * t2 * t2]]
        }
    })
}

/// Inverts a positive-definite information matrix into an error bound.
pub fn invert_info(m: &InfoMatrix) -> Result<Mat2> {
    invert_symmetric(&m.entries)
}

pub(crate) fn invert_symmetric(m: &Mat2) -> Result<Mat2> {
    // judged on the unit-diagonal rescaling so parameter units do not matter
    let (a, d) = (m[0][0], m[1][1]);
    let b = 0.5 * (m[0][1] + m[1][0]);
    let lo = if a > 0.0 && d > 0.0 {
        1.0 - b.abs() / (a * d).sqrt()
    } else {
        a.min(d)
    };
    if !(a.is_finite() && d.is_finite() && b.is_finite()) || lo.is_nan() || lo <= 1e-12 {
        return Err(Error::numeric(format!(
            "matrix is not positive definite: smallest eigenvalue {lo:e} of its unit-diagonal form ({m:?})"
        )));
    }
    let det = a * d - b * b;
    Ok([[d / det, -b / det], [-b / det, a / det]])
}

/// Expresses an error matrix in units `θ₁²/(θ₂T)`, `θ₁/T` and `θ₂/T`.
pub fn normalize_errors(m: &Mat2, theta: &ParamVector, horizon_t: f64) -> Mat2 {
    let u = normalization_units(theta, horizon_t);
    let off = (u[0] * u[1]).sqrt();
    [[m[0][0] / u[0], m[0][1] / off], [m[1][0] / off, m[1][1] / u[1]]]
}

/// Units of the normalized diagonal errors: `[θ₁²/(θ₂T), θ₂/T]`.
pub fn normalization_units(theta: &ParamVector, horizon_t: f64) -> [f64; 2] {
    let (t1, t2) = (theta.theta1(), theta.theta2());
    [t1 * t1 / (t2 * horizon_t), t2 / horizon_t]
}

/// All bounds for one operating point of a flat-`S_I` phase measurement.
#[derive(Debug, Clone, Serialize)]
pub struct BoundsReport {
    pub c: f64,
    pub s_i: f64,
    pub theta: ParamVector,
    pub horizon_t: f64,
    pub quantum: InfoMatrix,
    pub homodyne_limit: InfoMatrix,
    pub spc: InfoMatrix,
    pub quantum_inverse: Mat2,
    pub homodyne_inverse: Mat2,
    pub spc_inverse: Mat2,
    pub quantum_normalized: Mat2,
    pub homodyne_normalized: Mat2,
    pub spc_normalized: Mat2,
}

impl BoundsReport {
    fn assemble(
        theta: &ParamVector,
        s_i: f64,
        horizon_t: f64,
        quantum: InfoMatrix,
        homodyne_limit: InfoMatrix,
        spc: InfoMatrix,
    ) -> Result<Self> {
        for m in [&quantum, &homodyne_limit, &spc] {
            m.check_valid()?;
        }
        let quantum_inverse = invert_info(&quantum)?;
        let homodyne_inverse = invert_info(&homodyne_limit)?;
        let spc_inverse = invert_info(&spc)?;
        Ok(BoundsReport {
            c: 8.0 * theta.theta1() * s_i / theta.theta2(),
            s_i,
            theta: *theta,
            horizon_t,
            quantum,
            homodyne_limit,
            spc,
            quantum_normalized: normalize_errors(&quantum_inverse, theta, horizon_t),
            homodyne_normalized: normalize_errors(&homodyne_inverse, theta, horizon_t),
            spc_normalized: normalize_errors(&spc_inverse, theta, horizon_t),
            quantum_inverse,
            homodyne_inverse,
            spc_inverse,
        })
    }

    /// Bounds for an arbitrary model by quadrature.
    pub fn compute<M>(model: &M, theta: &ParamVector, s_i: f64, horizon_t: f64) -> Result<Self>
    where
        M: PsdModel + ?Sized,
    {
        let quantum = phase_quantum_bound(model, s_i, theta, horizon_t)?;
        let homodyne = homodyne_limit(model, s_i, theta, horizon_t)?;
        let spc = spc_info(model, s_i, theta, horizon_t)?;
        Self::assemble(theta, s_i, horizon_t, quantum, homodyne, spc)
    }

    /// OU bounds from the closed forms; the photon-counting entry reuses the
    /// quantum matrix, which it equals for a coherent state.
    pub fn ou_closed(theta: &ParamVector, s_i: f64, horizon_t: f64) -> Result<Self> {
        let quantum = ou_quantum_closed(theta, s_i, horizon_t)?;
        let homodyne = ou_homodyne_closed(theta, s_i, horizon_t)?;
        let spc = InfoMatrix {
            kind: InfoKind::Spc,
            ..quantum
        };
        Self::assemble(theta, s_i, horizon_t, quantum, homodyne, spc)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::psdmodel::{FnPsd, OuPsd};
    use approx::assert_relative_eq;
    use std::f64::consts::FRAC_PI_2;

    fn unit_theta() -> ParamVector {
        ParamVector::new(1.0, 1.0).unwrap()
    }

    /// Independent oracle: composite midpoint rule over φ with `n` panels.
    fn midpoint_oracle<F: Fn(f64) -> [f64; 3]>(f: F, scale: f64, n: usize) -> [f64; 3] {
        let h = 2.0 * FRAC_PI_2 / n as f64;
        let mut acc = [0.0; 3];
        for k in 0..n {
            let phi = -FRAC_PI_2 + (k as f64 + 0.5) * h;
            let c = phi.cos();
            let v = f(scale * phi.tan());
            for i in 0..3 {
                acc[i] += v[i] * scale / (c * c) * h;
            }
        }
        acc
    }

    fn assert_mat_close(a: &Mat2, b: &Mat2, rel: f64) {
        for i in 0..2 {
            for j in 0..2 {
                let scale = a[i][j].abs().max(b[i][j].abs());
                assert!(
                    (a[i][j] - b[i][j]).abs() <= rel * scale,
                    "entry ({i},{j}): {} vs {} (rel tol {rel:e})",
                    a[i][j],
                    b[i][j]
                );
            }
        }
    }

    #[test]
    fn quantum_bound_c2_matches_closed_form_and_midpoint() {
        let theta = unit_theta();
        let s_i = 2.0 / 8.0;
        let q = phase_quantum_bound(&OuPsd, s_i, &theta, 1.0).unwrap();
        let expected = [[0.176777, 0.030330], [0.030330, 0.090990]];
        assert_mat_close(&q.entries, &expected, 2e-5);
        assert_relative_eq!(q.get(0, 0), 0.25 / 2.0_f64.sqrt(), max_relative = 1e-10);

        let closed = ou_quantum_closed(&theta, s_i, 1.0).unwrap();
        assert_mat_close(&q.entries, &closed.entries, 1e-9);

        let oracle = midpoint_oracle(
            |w| {
                let s = OuPsd.value(w, &theta);
                let g = OuPsd.log_grad(w, &theta);
                let d = (2.0 + 1.0 / (s_i * s)) * 2.0 * PI;
                [g[0] * g[0] / d, g[0] * g[1] / d, g[1] * g[1] / d]
            },
            1.0,
            100_000,
        );
        assert_relative_eq!(q.get(0, 0), oracle[0], max_relative = 1e-8);
        assert_relative_eq!(q.get(0, 1), oracle[1], max_relative = 1e-8);
        assert_relative_eq!(q.get(1, 1), oracle[2], max_relative = 1e-8);
    }

    #[test]
    fn quantum_bound_limits() {
        let theta = unit_theta();
        let zero = quantum_bound(&OuPsd, |_| 0.0, &theta, 1.0).unwrap();
        assert_eq!(zero.entries, [[0.0; 2]; 2]);
        assert!(quantum_bound(&OuPsd, |_| -1.0, &theta, 1.0).is_err());

        // s_q → ∞ leaves j(P_Z) = T(1/2π)∫ g g / 2 dω; needs decaying log-gradients.
        let model = FnPsd::new(|w: f64, p: &ParamVector| 1.0 + p.theta1() * (-w * w / (p.theta2() * p.theta2())).exp());
        let theta = ParamVector::new(0.8, 2.0).unwrap();
        let big = quantum_bound(&model, |_| 1e12, &theta, 3.0).unwrap();
        let oracle = midpoint_oracle(
            |w| {
                let g = model.log_grad(w, &theta);
                let d = 2.0 * 2.0 * PI;
                [g[0] * g[0] / d, g[0] * g[1] / d, g[1] * g[1] / d]
            },
            2.0,
            100_000,
        );
        assert_relative_eq!(big.get(0, 0), 3.0 * oracle[0], max_relative = 1e-7);
        assert_relative_eq!(big.get(0, 1), 3.0 * oracle[1], max_relative = 1e-7);
        assert_relative_eq!(big.get(1, 1), 3.0 * oracle[2], max_relative = 1e-7);

        // noiseless homodyne information is the same quantity
        let noiseless = homodyne_info(&model, |_| 0.0, &theta, 3.0).unwrap();
        assert_mat_close(&noiseless.entries, &big.entries, 1e-7);
    }

    #[test]
    fn quantum_bound_increases_with_flux() {
        let theta = ParamVector::new(0.3, 7.0).unwrap();
        let a = phase_quantum_bound(&OuPsd, 0.5, &theta, 1.0).unwrap();
        let b = phase_quantum_bound(&OuPsd, 1.0, &theta, 1.0).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                assert!(b.entries[i][j] > a.entries[i][j]);
            }
        }
    }

    #[test]
    fn quantum_low_snr_series() {
        // J11 = (θ₂T/8θ₁²)·C/√(1+C/2) → (θ₂T/8θ₁²)·C
        let theta = ParamVector::new(0.4, 3.0).unwrap();
        let c = 1e-6;
        let s_i = c * theta.theta2() / (8.0 * theta.theta1());
        let q = phase_quantum_bound(&OuPsd, s_i, &theta, 2.0).unwrap();
        let series = theta.theta2() * 2.0 / (8.0 * 0.16) * c;
        assert!((q.get(0, 0) - series).abs() / series < 1e-4);
    }

    #[test]
    fn homodyne_examples() {
        let theta = unit_theta();
        let s_i = 0.25;
        let h = homodyne_info(&OuPsd, |_| 1.0 / (4.0 * s_i), &theta, 1.0).unwrap();
        assert_relative_eq!(h.get(0, 0), 0.125 * 4.0 / 3.0_f64.powf(1.5), max_relative = 1e-9);
        assert!((h.get(0, 0) - 0.096225).abs() < 1e-6);

        let lim = homodyne_limit(&OuPsd, s_i, &theta, 1.0).unwrap();
        assert_mat_close(&lim.entries, &h.entries, 1e-12);
        let closed = ou_homodyne_closed(&theta, s_i, 1.0).unwrap();
        assert_mat_close(&lim.entries, &closed.entries, 1e-6);

        let swamped = homodyne_info(&OuPsd, |_| 1e8, &theta, 1.0).unwrap();
        assert!(swamped.get(0, 0) < 1e-12 && swamped.get(1, 1) < 1e-12);
        assert!(homodyne_info(&OuPsd, |_| -1.0, &theta, 1.0).is_err());
    }

    #[test]
    fn spc_equals_quantum_and_vanishes_without_light() {
        let theta = ParamVector::new(0.1323, 5.909e4).unwrap();
        for flux in [1e3, 1.315e6, 1e8] {
            let s = spc_info(&OuPsd, flux, &theta, 0.01).unwrap();
            let q = phase_quantum_bound(&OuPsd, flux, &theta, 0.01).unwrap();
            assert_mat_close(&s.entries, &q.entries, 1e-12);
        }
        let dark = spc_info(&OuPsd, 0.0, &theta, 0.01).unwrap();
        assert_eq!(dark.entries, [[0.0; 2]; 2]);
    }

    #[test]
    fn spc_at_first_reference_snr() {
        let theta = ParamVector::new(0.1323, 5.909e4).unwrap();
        let t = 0.01;
        let s_i = 23.5 * theta.theta2() / (8.0 * theta.theta1());
        let s = spc_info(&OuPsd, s_i, &theta, t).unwrap();
        let n = normalize_errors(&invert_info(&s).unwrap(), &theta, t);
        let closed = ou_quantum_closed(&theta, s_i, t).unwrap();
        let nc = normalize_errors(&invert_info(&closed).unwrap(), &theta, t);
        assert_relative_eq!(n[0][0], nc[0][0], max_relative = 1e-6);
        assert!(n[0][0] < 4.0);
    }

    #[test]
    fn mode_sums_approach_integrals() {
        let theta = ParamVector::new(1.0, 1.0).unwrap();
        let t = 3000.0;
        let flux = 2.0;
        let modes = spc_info_modes(&OuPsd, flux, &theta, t, 2_000_000).unwrap();
        let splot = spc_info(&OuPsd, flux, &theta, t).unwrap();
        assert_mat_close(&modes.entries, &splot.entries, 5e-3);

        let s_eta = 0.3;
        let hm = homodyne_info_modes(&OuPsd, s_eta, &theta, t, 0.0, 1e4).unwrap();
        let hs = homodyne_info(&OuPsd, |_| s_eta, &theta, t).unwrap();
        // Euler-Maclaurin: the sum over m >= 1 misses half the ω = 0 ordinate
        let s0 = OuPsd.value(0.0, &theta);
        let g0 = OuPsd.log_grad(0.0, &theta);
        let w0 = (s0 / (s0 + s_eta)).powi(2) / 2.0;
        let mut corrected = hm.entries;
        for i in 0..2 {
            for j in 0..2 {
                corrected[i][j] += w0 * g0[i] * g0[j];
            }
        }
        assert_mat_close(&corrected, &hs.entries, 1e-5);
    }

    #[test]
    fn closed_forms_reject_zero_snr() {
        let theta = unit_theta();
        assert!(matches!(ou_quantum_closed(&theta, 0.0, 1.0), Err(Error::Domain(_))));
        assert!(matches!(ou_homodyne_closed(&theta, 0.0, 1.0), Err(Error::Domain(_))));
    }

    #[test]
    fn closed_form_high_snr_limit() {
        let theta = ParamVector::new(0.5, 4.0).unwrap();
        let t = 10.0;
        let s_i = 1e9 * theta.theta2() / (8.0 * theta.theta1());
        let lim = asymptotics(&theta, t, 0.0, Regime::HighC).unwrap();
        for m in [
            ou_quantum_closed(&theta, s_i, t).unwrap(),
            ou_homodyne_closed(&theta, s_i, t).unwrap(),
        ] {
            let inv = invert_info(&m).unwrap();
            assert_mat_close(&inv, &lim, 1e-3);
        }
    }

    #[test]
    fn closed_form_low_snr_homodyne() {
        let theta = ParamVector::new(0.5, 4.0).unwrap();
        let t = 10.0;
        let c = 1e-3;
        let s_i = c * theta.theta2() / (8.0 * theta.theta1());
        let inv = invert_info(&ou_homodyne_closed(&theta, s_i, t).unwrap()).unwrap();
        let k = 16.0 / (theta.theta2() * t) / (c * c);
        assert!((inv[0][0] / (k * 0.25) - 1.0).abs() < 0.01);
        assert!((inv[1][1] / (k * 2.0 * 16.0) - 1.0).abs() < 0.01);
    }

    #[test]
    fn asymptotic_examples() {
        let theta = unit_theta();
        assert_eq!(
            asymptotics(&theta, 1.0, 5.0, Regime::HighC).unwrap(),
            [[2.0, -2.0], [-2.0, 2.0]]
        );
        let q = asymptotics(&theta, 1.0, 0.01, Regime::LowCQuantum).unwrap();
        assert_relative_eq!(q[0][0], 800.0, max_relative = 1e-14);
        assert_relative_eq!(q[1][1], 1600.0, max_relative = 1e-14);
        let theta = ParamVector::new(0.3, 2.0).unwrap();
        for c in [1e-3, 0.07, 0.5] {
            let q = asymptotics(&theta, 4.0, c, Regime::LowCQuantum).unwrap();
            let h = asymptotics(&theta, 4.0, c, Regime::LowCHomodyne).unwrap();
            assert_relative_eq!(h[0][0] / q[0][0], 2.0 / c, max_relative = 1e-14);
            assert_relative_eq!(h[1][1] / q[1][1], 2.0 / c, max_relative = 1e-14);
        }
        assert!(matches!("mediumC".parse::<Regime>(), Err(Error::Usage(_))));
        assert_eq!("lowC_homodyne".parse::<Regime>().unwrap(), Regime::LowCHomodyne);
        assert!(asymptotics(&theta, 1.0, 0.0, Regime::LowCQuantum).is_err());
    }

    #[test]
    fn inversion() {
        let id = InfoMatrix {
            entries: [[1.0, 0.0], [0.0, 1.0]],
            horizon_t: 1.0,
            kind: InfoKind::Quantum,
        };
        assert_eq!(invert_info(&id).unwrap(), [[1.0, 0.0], [0.0, 1.0]]);
        let m = InfoMatrix {
            entries: [[2.0, 1.0], [1.0, 2.0]],
            ..id
        };
        assert_mat_close(
            &invert_info(&m).unwrap(),
            &[[2.0 / 3.0, -1.0 / 3.0], [-1.0 / 3.0, 2.0 / 3.0]],
            1e-15,
        );
        let singular = InfoMatrix {
            entries: [[1.0, 1.0], [1.0, 1.0]],
            ..id
        };
        let err = invert_info(&singular).unwrap_err().to_string();
        assert!(err.contains("smallest eigenvalue"), "{err}");
        let indefinite = InfoMatrix {
            entries: [[1.0, 2.0], [2.0, 1.0]],
            ..id
        };
        assert!(invert_info(&indefinite).is_err());
    }

    #[test]
    fn first_reference_snr_bound_below_measured_error() {
        let theta = ParamVector::new(0.1323, 5.909e4).unwrap();
        let t = 0.01;
        let q = ou_quantum_closed(&theta, 1.315e6, t).unwrap();
        let n = normalize_errors(&invert_info(&q).unwrap(), &theta, t);
        assert!(n[0][0] < 4.0, "{}", n[0][0]);
    }

    #[test]
    fn reports_are_consistent() {
        let theta = ParamVector::new(0.1323, 5.909e4).unwrap();
        let closed = BoundsReport::ou_closed(&theta, 1.315e6, 0.01).unwrap();
        let quad = BoundsReport::compute(&OuPsd, &theta, 1.315e6, 0.01).unwrap();
        assert_mat_close(&closed.quantum_normalized, &quad.quantum_normalized, 1e-6);
        assert_mat_close(&closed.homodyne_normalized, &quad.homodyne_normalized, 1e-6);
        assert_mat_close(&closed.spc_normalized, &quad.spc_normalized, 1e-6);
        assert!((closed.c - 23.554).abs() < 1e-3);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn theta_and_flux() -> impl Strategy<Value = (ParamVector, f64, f64)> {
            (-2.0f64..1.0, -1.0f64..4.0, -2.0f64..6.0, -2.0f64..3.0).prop_map(|(a, b, s, t)| {
                (
                    ParamVector::new(10f64.powf(a), 10f64.powf(b)).unwrap(),
                    10f64.powf(s),
                    10f64.powf(t),
                )
            })
        }

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(64))]

            #[test]
            fn bounds_are_symmetric_psd_and_ordered((theta, s_i, t) in theta_and_flux(), phi in 0.0f64..6.3) {
                let q = phase_quantum_bound(&OuPsd, s_i, &theta, t).unwrap();
                let h = homodyne_limit(&OuPsd, s_i, &theta, t).unwrap();
                for m in [&q, &h] {
                    prop_assert!(m.is_symmetric());
                    prop_assert!(m.check_valid().is_ok());
                }
                let u = [phi.cos(), phi.sin()];
                prop_assert!(h.quadratic_form(u) <= q.quadratic_form(u) * (1.0 + 1e-12));
            }

            #[test]
            fn information_is_linear_in_horizon((theta, s_i, t) in theta_and_flux(), k in 0.1f64..10.0) {
                let a = ou_homodyne_closed(&theta, s_i, t).unwrap();
                let b = ou_homodyne_closed(&theta, s_i, k * t).unwrap();
                let q1 = phase_quantum_bound(&OuPsd, s_i, &theta, t).unwrap();
                let q2 = phase_quantum_bound(&OuPsd, s_i, &theta, k * t).unwrap();
                for i in 0..2 {
                    for j in 0..2 {
                        prop_assert!((b.get(i, j) - k * a.get(i, j)).abs() <= 1e-14 * b.get(i, j).abs());
                        prop_assert!((q2.get(i, j) - k * q1.get(i, j)).abs() <= 1e-14 * q2.get(i, j).abs());
                    }
                }
            }

            #[test]
            fn closed_forms_agree_with_quadrature((theta, s_i, t) in theta_and_flux()) {
                let q = phase_quantum_bound(&OuPsd, s_i, &theta, t).unwrap();
                let h = homodyne_limit(&OuPsd, s_i, &theta, t).unwrap();
                let qc = ou_quantum_closed(&theta, s_i, t).unwrap();
                let hc = ou_homodyne_closed(&theta, s_i, t).unwrap();
                for i in 0..2 {
                    for j in 0..2 {
                        prop_assert!((q.get(i, j) - qc.get(i, j)).abs() <= 1e-7 * qc.get(i, j).abs());
                        prop_assert!((h.get(i, j) - hc.get(i, j)).abs() <= 1e-7 * hc.get(i, j).abs());
                    }
                }
            }
        }
    }
}

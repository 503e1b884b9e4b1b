//! Gauss-Legendre quadrature over the whole real line.
//!
//! `ω = s·tan(φ)` maps `φ ∈ (−π/2, π/2)` onto `ω ∈ (−∞, ∞)`; integrands that
//! decay like `ω⁻²` become bounded and smooth in `φ`.

use std::collections::HashMap;
use std::f64::consts::{FRAC_PI_2, PI};
use std::sync::{Arc, Mutex, OnceLock};

use crate::error::{Error, Result};

pub(crate) const BASE_NODES: usize = 256;
pub(crate) const MAX_NODES: usize = 1 << 14;
pub(crate) const REL_TOL: f64 = 1e-8;

/// Nodes and weights of the `n`-point Gauss-Legendre rule on `[-1, 1]`.
pub(crate) fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let half = n.div_ceil(2);
    for i in 0..half {
        // Tricomi initial guess, then Newton on P_n.
        let k = (i + 1) as f64;
        let nf = n as f64;
        let mut x = (PI * (k - 0.25) / (nf + 0.5)).cos() * (1.0 - (nf - 1.0) / (8.0 * nf * nf * nf));
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, x);
        if d.is_finite() {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let nf = n as f64;
    let dp = nf * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

type Rule = Arc<(Vec<f64>, Vec<f64>)>;

fn cached_rule(n: usize) -> Rule {
    static CACHE: OnceLock<Mutex<HashMap<usize, Rule>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(rule) = cache.lock().expect("rule cache poisoned").get(&n) {
        return Arc::clone(rule);
    }
    let rule = Arc::new(gauss_legendre(n));
    cache
        .lock()
        .expect("rule cache poisoned")
        .entry(n)
        .or_insert(rule)
        .clone()
}

/// Fixed-order rule: `∫ f(ω) dω` with `K` integrand components.
fn fixed<const K: usize, F>(f: &F, scale: f64, n: usize) -> [f64; K]
where
    F: Fn(f64) -> [f64; K],
{
    let rule = cached_rule(n);
    let (nodes, weights) = (&rule.0, &rule.1);
    let mut acc = [0.0; K];
    for (x, w) in nodes.iter().zip(weights) {
        let phi = FRAC_PI_2 * x;
        let c = phi.cos();
        let omega = scale * phi.tan();
        let jac = FRAC_PI_2 * scale / (c * c);
        let v = f(omega);
        for (a, vk) in acc.iter_mut().zip(v) {
            *a += w * jac * vk;
        }
    }
    acc
}

/// Integrates `f` over `(−∞, ∞)` doubling the node count from
/// [`BASE_NODES`] until every component changes by less than [`REL_TOL`]
/// relative (components that are negligible against the largest one are
/// judged against it).
pub(crate) fn integrate_real_line<const K: usize, F>(f: F, scale: f64) -> Result<[f64; K]>
where
    F: Fn(f64) -> [f64; K],
{
    if !(scale.is_finite() && scale > 0.0) {
        return Err(Error::domain(format!("quadrature scale must be > 0, got {scale}")));
    }
    let mut n = BASE_NODES;
    let mut prev = fixed(&f, scale, n);
    loop {
        if prev.iter().any(|v| !v.is_finite()) {
            return Err(Error::numeric(format!("non-finite integral with {n} nodes: {prev:?}")));
        }
        let next_n = n * 2;
        if next_n > MAX_NODES {
            return Err(Error::numeric(format!(
                "quadrature did not converge to {REL_TOL:e} relative within {MAX_NODES} nodes (last: {prev:?})"
            )));
        }
        let next = fixed(&f, scale, next_n);
        let largest = next.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        let converged = next.iter().zip(&prev).all(|(a, b)| {
            let floor = a.abs().max(1e-6 * largest);
            (a - b).abs() <= REL_TOL * floor
        });
        if converged {
            return Ok(next);
        }
        prev = next;
        n = next_n;
    }
}

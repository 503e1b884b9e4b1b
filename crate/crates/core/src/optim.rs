//! Box-constrained Nelder-Mead minimizer in two dimensions.

use std::cell::Cell;

#[derive(Debug, Clone, Copy)]
pub(crate) struct NmOptions {
    /// Initial simplex edge along each axis.
    pub step: f64,
    /// Converged once every vertex lies within this distance of the best.
    pub diameter_tol: f64,
    pub max_evals: usize,
}

impl Default for NmOptions {
    fn default() -> Self {
        NmOptions {
            step: 0.5,
            diameter_tol: 1e-8,
            max_evals: 2000,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct NmResult {
    pub x: [f64; 2],
    pub f: f64,
    pub evals: usize,
    pub converged: bool,
}

type Point = [f64; 2];

fn clamp(p: Point, lo: Point, hi: Point) -> Point {
    [p[0].clamp(lo[0], hi[0]), p[1].clamp(lo[1], hi[1])]
}

fn lerp(a: Point, b: Point, t: f64) -> Point {
    [a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])]
}

fn dist(a: Point, b: Point) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

/// Minimizes `f` over the box `[lo, hi]`. Non-finite objective values are
/// treated as `+∞`.
pub(crate) fn nelder_mead<F>(f: F, x0: Point, lo: Point, hi: Point, opts: NmOptions) -> NmResult
where
    F: Fn(Point) -> f64,
{
    let evals = Cell::new(0usize);
    let eval = |p: Point| {
        evals.set(evals.get() + 1);
        let v = f(p);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    };

    let x0 = clamp(x0, lo, hi);
    let mut simplex: Vec<(Point, f64)> = Vec::with_capacity(3);
    simplex.push((x0, eval(x0)));
    for axis in 0..2 {
        let mut p = x0;
        p[axis] += opts.step;
        if p[axis] > hi[axis] {
            p[axis] = x0[axis] - opts.step;
        }
        let p = clamp(p, lo, hi);
        simplex.push((p, eval(p)));
    }

    let mut converged = false;
    loop {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let best = simplex[0].0;
        let diameter = simplex[1..].iter().map(|(p, _)| dist(*p, best)).fold(0.0_f64, f64::max);
        if diameter < opts.diameter_tol {
            converged = true;
            break;
        }
        if evals.get() >= opts.max_evals {
            break;
        }

        let centroid = lerp(simplex[0].0, simplex[1].0, 0.5);
        let (worst, f_worst) = simplex[2];
        let reflected = clamp(lerp(centroid, worst, -1.0), lo, hi);
        let f_r = eval(reflected);

        if f_r < simplex[0].1 {
            let expanded = clamp(lerp(centroid, worst, -2.0), lo, hi);
            let f_e = eval(expanded);
            simplex[2] = if f_e < f_r { (expanded, f_e) } else { (reflected, f_r) };
            continue;
        }
        if f_r < simplex[1].1 {
            simplex[2] = (reflected, f_r);
            continue;
        }
        let (contracted, f_c) = if f_r < f_worst {
            let p = lerp(centroid, reflected, 0.5);
            (p, eval(p))
        } else {
            let p = lerp(centroid, worst, 0.5);
            (p, eval(p))
        };
        if f_c < f_worst.min(f_r) {
            simplex[2] = (contracted, f_c);
            continue;
        }
        // shrink toward the best vertex
        for vertex in simplex.iter_mut().skip(1) {
            let p = lerp(best, vertex.0, 0.5);
            *vertex = (p, eval(p));
        }
    }

    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    NmResult {
        x: simplex[0].0,
        f: simplex[0].1,
        evals: evals.get(),
        converged,
    }
}

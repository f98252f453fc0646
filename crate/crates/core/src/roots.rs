//! Bracketed scalar root finders shared by the solvers and the oracles.

use crate::error::{Result, SolverError};

/// Termination settings for the bracketed solvers.
#[derive(Debug, Clone, Copy)]
pub struct RootOptions {
    /// Stop once `|f(x)| <= f_tol`.
    pub f_tol: f64,
    /// Stop once the bracket is narrower than `x_tol`.
    pub x_tol: f64,
    pub max_iter: usize,
}

impl Default for RootOptions {
    fn default() -> Self {
        Self {
            f_tol: 1e-12,
            x_tol: 4.0 * f64::EPSILON,
            max_iter: 200,
        }
    }
}

fn opposite(a: f64, b: f64) -> bool {
    (a < 0.0) != (b < 0.0)
}

/// Plain bisection. Slow but unconditionally convergent; the oracles rely on it.
pub fn bisect<F: FnMut(f64) -> f64>(mut f: F, lo: f64, hi: f64, opts: RootOptions) -> Result<f64> {
    let (mut a, mut b) = (lo, hi);
    let mut fa = f(a);
    let fb = f(b);
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if !opposite(fa, fb) {
        return Err(SolverError::NotBracketed { lo, hi });
    }
    loop {
        let m = 0.5 * (a + b);
        if m == a || m == b || (b - a).abs() <= opts.x_tol * (1.0 + m.abs()) {
            return Ok(m);
        }
        let fm = f(m);
        if fm == 0.0 {
            return Ok(m);
        }
        if opposite(fa, fm) {
            b = m;
        } else {
            a = m;
            fa = fm;
        }
    }
}

/// Regula falsi with the Illinois modification.
pub fn illinois<F: FnMut(f64) -> f64>(mut f: F, lo: f64, hi: f64, opts: RootOptions) -> Result<f64> {
    let fa = f(lo);
    let fb = f(hi);
    illinois_with_values(f, lo, hi, fa, fb, opts)
}

/// Same as [`illinois`] when the end-point values are already known.
pub fn illinois_with_values<F: FnMut(f64) -> f64>(
    mut f: F,
    lo: f64,
    hi: f64,
    fa: f64,
    fb: f64,
    opts: RootOptions,
) -> Result<f64> {
    let (mut a, mut b, mut fa, mut fb) = (lo, hi, fa, fb);
    if !fa.is_finite() || !fb.is_finite() {
        return Err(SolverError::Numerical {
            what: "non-finite bracket value".into(),
            residual: f64::NAN,
        });
    }
    if fa.abs() <= opts.f_tol {
        return Ok(a);
    }
    if fb.abs() <= opts.f_tol {
        return Ok(b);
    }
    if !opposite(fa, fb) {
        return Err(SolverError::NotBracketed { lo, hi });
    }
    for _ in 0..opts.max_iter {
        let mut c = (a * fb - b * fa) / (fb - fa);
        if !c.is_finite() || c <= a.min(b) || c >= a.max(b) {
            c = 0.5 * (a + b);
        }
        let fc = f(c);
        if !fc.is_finite() {
            return Err(SolverError::Numerical {
                what: format!("non-finite residual at {c}"),
                residual: fc,
            });
        }
        if fc.abs() <= opts.f_tol || (b - a).abs() <= opts.x_tol * (1.0 + c.abs()) {
            return Ok(c);
        }
        if opposite(fc, fb) {
            a = b;
            fa = fb;
        } else {
            fa *= 0.5;
        }
        b = c;
        fb = fc;
    }
    Err(SolverError::Numerical {
        what: "illinois iteration limit".into(),
        residual: fb.abs().min(fa.abs()),
    })
}

/// Newton's method kept inside a sign-changing bracket; any step leaving the
/// bracket (or failing to shrink it fast enough) becomes a bisection step.
pub fn newton_bisect<F>(mut f: F, lo: f64, hi: f64, opts: RootOptions) -> Result<f64>
where
    F: FnMut(f64) -> (f64, f64),
{
    let (mut a, mut b) = (lo.min(hi), lo.max(hi));
    let (mut fa, _) = f(a);
    let (fb, _) = f(b);
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if !opposite(fa, fb) {
        return Err(SolverError::NotBracketed { lo, hi });
    }
    let mut x = 0.5 * (a + b);
    let mut width = b - a;
    for _ in 0..opts.max_iter {
        let (fx, dfx) = f(x);
        if fx == 0.0 || fx.abs() <= opts.f_tol {
            return Ok(x);
        }
        if opposite(fa, fx) {
            b = x;
        } else {
            a = x;
            fa = fx;
        }
        if (b - a) <= opts.x_tol * (1.0 + x.abs()) {
            return Ok(0.5 * (a + b));
        }
        let newton = x - fx / dfx;
        let shrunk = (b - a) < 0.5 * width;
        x = if dfx != 0.0 && newton.is_finite() && newton > a && newton < b && shrunk {
            newton
        } else {
            0.5 * (a + b)
        };
        width = b - a;
    }
    Ok(x)
}

/// Golden-section search for the maximiser of a unimodal function on `[lo, hi]`.
pub fn golden_max<F: FnMut(f64) -> f64>(mut f: F, lo: f64, hi: f64, x_tol: f64) -> f64 {
    let inv_phi = 0.5 * (5f64.sqrt() - 1.0);
    let (mut a, mut b) = (lo, hi);
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    while (b - a).abs() > x_tol {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}

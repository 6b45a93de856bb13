//! Shared numerical kernels: quadrature, ODE stepping, root finding,
//! finite differences and monotone interpolation.

pub mod diff;
pub mod grid;
pub mod interp;
pub mod ode;
pub mod quad;
pub mod quad2d;
pub mod roots;

/// Relative difference |a - b| / max(|a|, |b|, floor).
pub fn rel_diff(a: f64, b: f64) -> f64 {
    let scale = a.abs().max(b.abs()).max(f64::MIN_POSITIVE);
    (a - b).abs() / scale
}

/// True when `a` and `b` agree to the given relative tolerance.
pub fn approx_rel(a: f64, b: f64, tol: f64) -> bool {
    rel_diff(a, b) <= tol
}

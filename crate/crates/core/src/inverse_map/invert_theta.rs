//! Recovery of the L^p profile from the velocity modulus: epsilon(r) =
//! lambda'(r)/2 inverted on the concave tail, the explicit exponential
//! formula for alpha, and the numerical Legendre transformation that
//! expresses the same inversion variationally.

use super::InverseError;
use crate::forward_map::LpProfile;
use crate::moc_core::{LambdaCurve, Moc};
use crate::num::roots;

/// epsilon(r) = lambda'(r)/2 = (1 - A(e^{-r}))/2 for the given mu.
fn eps_of_r(mu: &Moc, r: f64) -> f64 {
    match mu.a_ratio_at_log(-r) {
        Ok(a) => 0.5 * (1.0 - a),
        Err(_) => f64::NAN,
    }
}

/// Solves eps(r) = target on the decreasing tail, seeded near the
/// bounded-vorticity scale r = 1/(2 eps).
fn eta_solve(mu: &Moc, eps: f64) -> Option<f64> {
    let seed = 0.5 / eps;
    roots::solve_monotone(
        &|r| eps_of_r(mu, r),
        eps,
        seed,
        0.25 * seed,
        mu.domain_hi().ln().min(0.0).abs().max(1e-2),
        1e16,
        1e-13,
    )
}

/// ln alpha(eps) = lambda(eta(eps)) - 2 eta(eps) eps (with C0 = 1).
fn log_alpha(mu: &Moc, eps: f64) -> Option<f64> {
    let eta = eta_solve(mu, eps)?;
    let lam = mu.eval_log_ratio(-eta);
    Some(lam - 2.0 * eta * eps)
}

/// Inverts the defining infimum: theta(p) = alpha(1/p)/p on the
/// certified concave tail of lambda.
///
/// The returned profile evaluates theta by solving the minimizer
/// equation afresh per query, so downstream round trips see no
/// interpolation error.
pub fn theta_from_mu(mu: &Moc, p_grid: &[f64]) -> Result<LpProfile, InverseError> {
    let p_min = p_grid.iter().cloned().fold(f64::INFINITY, f64::min);
    let p_max = p_grid.iter().cloned().fold(0.0f64, f64::max);
    assert!(p_min > 1.0 && p_max.is_finite());

    // locate the r-range the grid needs and certify on it
    let r_lo = eta_solve(mu, 1.0 / p_min).ok_or(InverseError::EpsilonNotInvertible { r: p_min })?;
    let r_hi = eta_solve(mu, 1.0 / p_max).ok_or(InverseError::EpsilonNotInvertible { r: p_max })?;
    let lam = LambdaCurve::new(mu.clone(), r_lo, r_hi);
    let n = 128;
    let mut prev_eps = f64::INFINITY;
    for i in 0..=n {
        let r = r_lo + (r_hi - r_lo) * i as f64 / n as f64;
        let e = eps_of_r(mu, r);
        if !e.is_finite() || e >= prev_eps {
            return Err(InverseError::EpsilonNotInvertible { r });
        }
        prev_eps = e;
        let d2 = lam.d2(r)?;
        if !(d2 < 0.0) {
            return Err(InverseError::LambdaNotConcave { r });
        }
    }

    let m1 = mu.clone();
    let m2 = mu.clone();
    let profile = LpProfile::from_log_theta(
        move |l1: f64| {
            let p = l1.exp();
            match log_alpha(&m1, 1.0 / p) {
                Some(la) => la - l1,
                None => f64::NAN,
            }
        },
        // the profile is certified from p_min up
        p_min,
    )
    .with_dlog_theta(move |l1: f64| {
        // d ln theta / d ln p = 2 eta(1/p)/p - 1
        let p = l1.exp();
        match eta_solve(&m2, 1.0 / p) {
            Some(eta) => 2.0 * eta / p - 1.0,
            None => f64::NAN,
        }
    });
    Ok(profile)
}

/// ln of the test curve produced by feeding an explicit decreasing
/// eps-overlay into the exponential formula: any such curve
/// under-estimates ln alpha pointwise, since the true value is the
/// supremum over r of lambda(r) - 2 r eps.
pub fn log_alpha_from_eps_curve<F>(mu: &Moc, eps_curve: F, r: f64) -> f64
where
    F: Fn(f64) -> f64,
{
    mu.eval_log_ratio(-r) - 2.0 * r * eps_curve(r)
}

/// Legendre transform f*(x) = sup over the interval of (x eps - f(eps)),
/// computed by a grid scan with golden refinement. The samples are
/// certified convex by second differences first.
pub fn legendre_transform<F>(
    f: &F,
    interval: (f64, f64),
    n_grid: usize,
    x: f64,
) -> Result<f64, InverseError>
where
    F: Fn(f64) -> f64,
{
    let (lo, hi) = interval;
    assert!(hi > lo && n_grid >= 8);
    let h = (hi - lo) / n_grid as f64;
    let mut vals = Vec::with_capacity(n_grid + 1);
    for i in 0..=n_grid {
        vals.push(f(lo + h * i as f64));
    }
    for i in 1..n_grid {
        let second = vals[i + 1] - 2.0 * vals[i] + vals[i - 1];
        if second < -1e-9 * vals[i].abs().max(1.0) {
            return Err(InverseError::NotConvex { at: lo + h * i as f64 });
        }
    }
    let obj = |e: f64| x * e - f(e);
    let mut best_i = 0;
    let mut best = f64::NEG_INFINITY;
    for i in 0..=n_grid {
        let v = obj(lo + h * i as f64);
        if v.is_finite() && v > best {
            best = v;
            best_i = i;
        }
    }
    let a = lo + h * best_i.saturating_sub(1) as f64;
    let b = (lo + h * (best_i + 1) as f64).min(hi);
    let (_, neg_min) = roots::golden_min(&|e: f64| -obj(e), a, b, 1e-12);
    Ok(-neg_min)
}

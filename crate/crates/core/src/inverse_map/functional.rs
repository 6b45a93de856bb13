//! Construction of a velocity modulus from the flow modulus at one
//! fixed time: seed a strictly increasing curve on [a, f(a)] meeting
//! the integral condition int_a^{f(a)} ds/mu = t0 and the junction
//! condition mu(f(a)) = f'(a) mu(a), then extend along the orbit of f
//! by mu(f(x)) = f'(x) mu(x) in both directions.

use super::InverseError;
use crate::moc_core::Moc;
use crate::num::{quad, roots};
use std::sync::Arc;

type F1 = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// A candidate flow modulus f with f(x) > x, carrying its inverse and
/// derivative, plus J = sup of the interval where f(x) - x strictly
/// increases (equivalently f' > 1).
#[derive(Clone)]
pub struct AcceptableMoc {
    /// u = ln x -> ln f(e^u)
    f_log: F1,
    /// u = ln x -> ln f^{-1}(e^u)
    f_inv_log: F1,
    /// u = ln x -> ln f'(e^u)
    d1_log: F1,
    /// f''(x), needed only for the optional C^1 matching
    d2: Option<F1>,
    j: f64,
}

impl std::fmt::Debug for AcceptableMoc {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("AcceptableMoc").field("j", &self.j).finish()
    }
}

impl AcceptableMoc {
    pub fn from_log_closures<F, FI, D>(f_log: F, f_inv_log: FI, d1_log: D, j: f64) -> Self
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
        FI: Fn(f64) -> f64 + Send + Sync + 'static,
        D: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        AcceptableMoc {
            f_log: Arc::new(f_log),
            f_inv_log: Arc::new(f_inv_log),
            d1_log: Arc::new(d1_log),
            d2: None,
            j,
        }
    }

    pub fn with_d2<D>(mut self, d2: D) -> Self
    where
        D: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        self.d2 = Some(Arc::new(d2));
        self
    }

    /// f(x) = sqrt(x): acceptable on (0, 1/4).
    pub fn sqrt() -> Self {
        AcceptableMoc {
            f_log: Arc::new(|u: f64| 0.5 * u),
            f_inv_log: Arc::new(|u: f64| 2.0 * u),
            d1_log: Arc::new(|u: f64| -0.5 * u - std::f64::consts::LN_2),
            d2: Some(Arc::new(|x: f64| -0.25 * x.powf(-1.5))),
            j: 0.25,
        }
    }

    /// f = f_m^1, the time-one member of the iterated-exponential
    /// group; f' comes from the identity f' = mu_m(f(x))/mu_m(x).
    pub fn builtin_time1(m: u32) -> Self {
        let fam = crate::moc_core::BuiltinFamily::new(m);
        let mu = fam.mu();
        let mu2 = mu.clone();
        let hi = mu.domain_hi();
        let j = fam.flow(-1.0, hi).unwrap_or(hi);
        AcceptableMoc {
            f_log: Arc::new(move |u: f64| fam.flow_log(1.0, u).unwrap_or(f64::NAN)),
            f_inv_log: Arc::new(move |u: f64| fam.flow_log(-1.0, u).unwrap_or(f64::NAN)),
            d1_log: Arc::new(move |u: f64| {
                let fu = fam.flow_log(1.0, u).unwrap_or(f64::NAN);
                mu2.eval_log(fu) - mu2.eval_log(u)
            }),
            d2: None,
            j,
        }
    }

    pub fn j(&self) -> f64 {
        self.j
    }

    pub fn eval(&self, x: f64) -> f64 {
        (self.f_log)(x.ln()).exp()
    }

    pub fn eval_log(&self, u: f64) -> f64 {
        (self.f_log)(u)
    }

    pub fn inv_log(&self, u: f64) -> f64 {
        (self.f_inv_log)(u)
    }

    pub fn d1(&self, x: f64) -> f64 {
        (self.d1_log)(x.ln()).exp()
    }

    pub fn d1_log_at(&self, u: f64) -> f64 {
        (self.d1_log)(u)
    }

    pub fn d2(&self, x: f64) -> Option<f64> {
        self.d2.as_ref().map(|d| d(x))
    }

    /// Certifies f' > 1 on a log grid over [x_lo, x_hi].
    pub fn certify_slope(&self, x_lo: f64, x_hi: f64) -> Result<(), InverseError> {
        for &u in crate::num::grid::log_grid(x_lo, x_hi, 16).iter().map(|x| x.ln()).collect::<Vec<_>>().iter() {
            if (self.d1_log)(u) <= 0.0 {
                return Err(InverseError::NotAcceptable { x: u.exp() });
            }
        }
        Ok(())
    }
}

/// The seed shape family on [a, f(a)]: ln mu = ln mu_a + R W_s(tau),
/// R = ln f'(a). W_s fixes W(0) = 0, W(1) = 1 for every s (so the
/// junction condition holds identically) while s warps the interior,
/// trading integral mass between the two ends.
fn warp(s: f64, tau: f64) -> f64 {
    if s.abs() < 1e-9 {
        tau
    } else {
        ((s * tau).exp_m1()) / (s.exp_m1())
    }
}

#[derive(Clone)]
pub struct InverseMocResult {
    pub mu: Moc,
    pub a: f64,
    pub t0: f64,
    pub mu_a: f64,
    /// the solved shape parameter of the seed curve
    pub shape: f64,
    /// largest x to which the orbit extension was certified
    pub upper_valid: f64,
}

/// Builds mu with int_x^{f(x)} dr/mu(r) = t0 for all x > 0 (Theorem
/// form: seed + orbit extension). `mu_a = None` takes the geometric
/// mean of the admissible open interval.
pub fn mu_from_gamma_single_time(
    f: &AcceptableMoc,
    t0: f64,
    a: f64,
    mu_a: Option<f64>,
) -> Result<InverseMocResult, InverseError> {
    assert!(t0 > 0.0 && a > 0.0);
    let fa = f.eval(a);
    let fpa = f.d1(a);
    if fpa <= 1.0 {
        return Err(InverseError::NotAcceptable { x: a });
    }
    let lo = (fa - a) / (fpa * t0);
    let hi = (fa - a) / t0;
    let mu_a = match mu_a {
        Some(v) => {
            if v <= lo || v >= hi {
                return Err(InverseError::BadMuA { given: v, lo, hi });
            }
            v
        }
        None => (lo * hi).sqrt(),
    };

    // Solve the shape parameter: I(s) = int_a^{fa} dx / mu_s(x) = t0.
    // I is strictly increasing in s with limits (fa-a)/(fpa mu_a) and
    // (fa-a)/mu_a, which bracket t0 exactly when mu_a is admissible.
    let r_jump = fpa.ln();
    let seed_integral = |s: f64| {
        let g = |x: f64| {
            let tau = (x - a) / (fa - a);
            (-(mu_a.ln() + r_jump * warp(s, tau))).exp()
        };
        quad::integrate(&g, a, fa, 0.0, 1e-12).value
    };
    let mut s_lo = -1.0;
    let mut s_hi = 1.0;
    let mut n_expand = 0;
    while seed_integral(s_lo) > t0 {
        s_lo *= 2.0;
        n_expand += 1;
        if s_lo < -700.0 || n_expand > 50 {
            return Err(InverseError::SeedShapeFailure(n_expand));
        }
    }
    n_expand = 0;
    while seed_integral(s_hi) < t0 {
        s_hi *= 2.0;
        n_expand += 1;
        if s_hi > 700.0 || n_expand > 50 {
            return Err(InverseError::SeedShapeFailure(n_expand));
        }
    }
    let shape = roots::bisect(&|s| seed_integral(s) - t0, s_lo, s_hi, 1e-13)
        .ok_or(InverseError::SeedShapeFailure(50))?;

    // Upward orbit validity: extend while f' > 1 along the orbit.
    let mut upper_valid = fa;
    {
        let mut u = fa.ln();
        for _ in 0..64 {
            let fu = f.eval_log(u);
            if !fu.is_finite() || f.d1_log_at(u) <= 0.0 {
                break;
            }
            upper_valid = fu.exp();
            u = fu;
        }
    }

    let fc = f.clone();
    let ua = a.ln();
    let ufa = fa.ln();
    let log_mu_a = mu_a.ln();
    let log_mu = move |u: f64| -> f64 {
        // walk the orbit into [ln a, ln f(a))
        let mut v = u;
        let mut acc = 0.0;
        let mut n = 0;
        while v < ua {
            acc -= fc.d1_log_at(v);
            v = fc.eval_log(v);
            n += 1;
            if n > 100_000 || !v.is_finite() {
                return f64::NAN;
            }
        }
        while v >= ufa {
            v = fc.inv_log(v);
            if !v.is_finite() {
                return f64::NAN;
            }
            acc += fc.d1_log_at(v);
            n += 1;
            if n > 100_000 {
                return f64::NAN;
            }
        }
        let tau = (v.exp() - a) / (fa - a);
        log_mu_a + r_jump * warp(shape, tau) + acc
    };

    let mu = Moc::from_log_fn(log_mu, upper_valid).with_smoothness(0);
    Ok(InverseMocResult { mu, a, t0, mu_a, shape, upper_valid })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::moc_core::osgood_integral;
    use crate::num::rel_diff;

    /// I(x) = int_x^{f(x)} dr/mu(r) by adaptive quadrature, splitting
    /// at the orbit points of a where mu has derivative kinks.
    fn orbit_integral(f: &AcceptableMoc, res: &InverseMocResult, x: f64) -> f64 {
        let u_lo = x.ln();
        let u_hi = f.eval_log(u_lo);
        // orbit break points of a inside [x, f(x)]
        let mut breaks = Vec::new();
        let mut v = res.a.ln();
        while v > u_lo {
            if v < u_hi {
                breaks.push(v);
            }
            v = f.inv_log(v);
        }
        let mu = &res.mu;
        let g = |u: f64| (-mu.eval_log_ratio(u)).exp();
        quad::integrate_with_breaks(&g, u_lo, u_hi, &breaks, 0.0, 1e-11, 120_000).value
    }

    #[test]
    fn sqrt_flow_constant_integral() {
        // t0 = ln 2 / (2e): the time at which x -> sqrt(x) for the
        // bounded-vorticity group x^{e^{-2et}}
        let f = AcceptableMoc::sqrt();
        let t0 = std::f64::consts::LN_2 / (2.0 * std::f64::consts::E);
        let res = mu_from_gamma_single_time(&f, t0, 0.1, None).unwrap();
        let mut worst: f64 = 0.0;
        for k in 0..=16 {
            let x = 10f64.powf(-10.0 + 8.0 * k as f64 / 16.0);
            let i = orbit_integral(&f, &res, x);
            worst = worst.max((i - t0).abs());
        }
        assert!(worst <= 1e-6 * t0, "max |I - t0| = {worst:e}");
    }

    #[test]
    fn sqrt_flow_matches_xlogx_up_to_orbit_periodic_factor() {
        // ratio mu(x)/(x ln(1/x)) is exactly invariant under x -> f(x)
        let f = AcceptableMoc::sqrt();
        let t0 = std::f64::consts::LN_2 / (2.0 * std::f64::consts::E);
        let res = mu_from_gamma_single_time(&f, t0, 0.1, None).unwrap();
        let ratio = |x: f64| res.mu.eval(x) / (x * (1.0f64 / x).ln());
        for &x in &[1e-9, 1e-6, 1e-3] {
            let r1 = ratio(x);
            let r2 = ratio(x.sqrt());
            assert!(rel_diff(r1, r2) < 1e-9, "x {x:e}: {r1} vs {r2}");
        }
        // and the ratio stays in a fixed band
        let vals: Vec<f64> = [1e-10, 1e-7, 1e-4, 1e-2].iter().map(|&x| ratio(x)).collect();
        let lo = vals.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = vals.iter().cloned().fold(0.0f64, f64::max);
        assert!(hi / lo < 10.0, "band [{lo}, {hi}]");
    }

    #[test]
    fn orbit_shells_telescope() {
        let f = AcceptableMoc::sqrt();
        let t0 = std::f64::consts::LN_2 / (2.0 * std::f64::consts::E);
        let a = 0.1;
        let res = mu_from_gamma_single_time(&f, t0, a, None).unwrap();
        // shells [f^{-(n+1)}(a), f^{-n}(a)] each carry mass exactly t0;
        // n stops where f^{-n}(a) = a^{2^n} underflows f64
        let mut u_hi = a.ln();
        for n in 0..=8 {
            let u_lo = f.inv_log(u_hi);
            let v = quad::integrate(
                &|u: f64| (-res.mu.eval_log_ratio(u)).exp(),
                u_lo,
                u_hi,
                0.0,
                1e-11,
            )
            .value;
            assert!((v - t0).abs() < 1e-8, "shell {n}: {v} vs {t0}");
            u_hi = u_lo;
        }
    }

    #[test]
    fn functional_identity_along_orbit() {
        // mu(f(x)) = f'(x) mu(x) to relative 1e-6 everywhere sampled
        let f = AcceptableMoc::builtin_time1(1);
        let res = mu_from_gamma_single_time(&f, 1.0, 1e-3, None).unwrap();
        for &x in &[1e-9f64, 1e-7, 1e-4, 2e-3] {
            let lhs = res.mu.eval_log(f.eval_log(x.ln()));
            let rhs = f.d1_log_at(x.ln()) + res.mu.eval_log(x.ln());
            assert!((lhs - rhs).abs() < 1e-6, "x {x:e}: {lhs} vs {rhs}");
        }
    }

    #[test]
    fn builtin_time1_constant_integral() {
        let f = AcceptableMoc::builtin_time1(1);
        let res = mu_from_gamma_single_time(&f, 1.0, 1e-3, None).unwrap();
        for &x in &[1e-8, 1e-6, 1e-4] {
            let i = orbit_integral(&f, &res, x);
            assert!((i - 1.0).abs() < 1e-6, "x {x:e}: I = {i}");
        }
    }

    #[test]
    fn bad_seed_rejected() {
        let f = AcceptableMoc::sqrt();
        let t0 = 0.1;
        let a = 0.1f64;
        let fa = a.sqrt();
        let hi = (fa - a) / t0;
        assert!(matches!(
            mu_from_gamma_single_time(&f, t0, a, Some(hi * 1.01)),
            Err(InverseError::BadMuA { .. })
        ));
    }

    #[test]
    fn not_acceptable_rejected() {
        // sqrt is not acceptable at a > 1/4 (f' < 1 there)
        let f = AcceptableMoc::sqrt();
        assert!(matches!(
            mu_from_gamma_single_time(&f, 0.1, 0.5, None),
            Err(InverseError::NotAcceptable { .. })
        ));
    }
}

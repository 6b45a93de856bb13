//! The lambda curve r -> r + ln mu(e^{-r}), the log-scale view of
//! mu(x)/x in which concavity questions become one-dimensional.

use super::{Moc, MocError};
use crate::num::diff;

#[derive(Clone, Debug)]
pub struct LambdaCurve {
    source: Moc,
    r_lo: f64,
    r_hi: f64,
}

impl LambdaCurve {
    pub fn new(source: Moc, r_lo: f64, r_hi: f64) -> Self {
        LambdaCurve { source, r_lo, r_hi }
    }

    pub fn range(&self) -> (f64, f64) {
        (self.r_lo, self.r_hi)
    }

    /// lambda(r) = r + ln mu(e^{-r}) = ln(mu(x)/x) at x = e^{-r}.
    pub fn eval(&self, r: f64) -> f64 {
        self.source.eval_log_ratio(-r)
    }

    /// lambda'(r) = 1 - A(e^{-r}).
    pub fn d1(&self, r: f64) -> Result<f64, MocError> {
        Ok(1.0 - self.source.a_ratio_at_log(-r)?)
    }

    /// lambda''(r); via the x-space second derivative when analytic
    /// (and x^3 still representable), else by differencing lambda' in r.
    pub fn d2(&self, r: f64) -> Result<f64, MocError> {
        let x = (-r).exp();
        if self.source.has_analytic_deriv2() && x > 1e-95 && x.is_finite() {
            let m = self.source.eval(x);
            if m <= 0.0 {
                return Err(MocError::NonPositiveMoc { x, value: m });
            }
            let mp = self.source.d1(x);
            let mpp = self.source.d2(x);
            return Ok(x * x * mpp / m - (x * mp / m).powi(2) + x * mp / m);
        }
        let src = self.source.clone();
        let g = move |rr: f64| 1.0 - src.a_ratio_at_log(-rr).unwrap_or(f64::NAN);
        let d = diff::d1_central(&g, r, 1e-4_f64.max(1e-6 * r.abs()));
        if d.is_finite() {
            Ok(d)
        } else {
            Err(MocError::DerivativeUnavailable { x })
        }
    }

    /// Max deviation between this curve and a direct x-space
    /// recomputation of r + ln mu(e^{-r}) on a grid (the two paths are
    /// distinct whenever the source carries an independent x-space
    /// evaluator).
    pub fn max_source_mismatch(&self, r_grid: &[f64]) -> f64 {
        let mut worst: f64 = 0.0;
        for &r in r_grid {
            let x = (-r).exp();
            if x <= 0.0 || !x.is_finite() {
                continue;
            }
            let via_x = r + self.source.eval(x).ln();
            worst = worst.max((self.eval(r) - via_x).abs());
        }
        worst
    }

    pub fn source(&self) -> &Moc {
        &self.source
    }
}

/// Builds the lambda curve for `mu` covering the given r grid.
/// Errors with DomainExceeded when the grid maps outside (0, domain_hi).
pub fn lambda_of(mu: &Moc, r_grid: &[f64]) -> Result<LambdaCurve, MocError> {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for &r in r_grid {
        let x = (-r).exp();
        if x > mu.domain_hi() {
            return Err(MocError::DomainExceeded { x, domain_hi: mu.domain_hi() });
        }
        lo = lo.min(r);
        hi = hi.max(r);
    }
    Ok(LambdaCurve::new(mu.clone(), lo, hi))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::moc_core::BuiltinFamily;

    #[test]
    fn xlogx_lambda_is_log_r() {
        let mu = BuiltinFamily::new(1).mu();
        let grid: Vec<f64> = (1..60).map(|i| 3.0 + i as f64).collect();
        let lam = lambda_of(&mu, &grid).unwrap();
        for &r in &grid {
            assert!((lam.eval(r) - r.ln()).abs() < 1e-12, "r = {r}");
        }
        assert!(lam.max_source_mismatch(&grid) < 1e-10);
    }

    #[test]
    fn mu2_lambda_is_logr_plus_loglogr() {
        let mu = BuiltinFamily::new(2).mu();
        for &r in &[20.0, 50.0, 200.0, 1e4] {
            let lam = LambdaCurve::new(mu.clone(), r, r);
            let expect = r.ln() + r.ln().ln();
            assert!((lam.eval(r) - expect).abs() < 1e-11, "r = {r}");
        }
    }

    #[test]
    fn linear_mu_lambda_zero_and_dprime() {
        let mu = BuiltinFamily::new(0).mu();
        let lam = LambdaCurve::new(mu, 1.0, 50.0);
        for &r in &[1.0, 10.0, 50.0] {
            assert!(lam.eval(r).abs() < 1e-13);
            assert!(lam.d1(r).unwrap().abs() < 1e-12);
        }
    }

    #[test]
    fn lambda_prime_is_one_minus_a() {
        let mu = BuiltinFamily::new(2).mu();
        let lam = LambdaCurve::new(mu.clone(), 10.0, 100.0);
        for &r in &[15.0, 40.0, 90.0] {
            let a = mu.a_ratio_at_log(-r).unwrap();
            assert!((lam.d1(r).unwrap() - (1.0 - a)).abs() < 1e-12);
        }
    }
}

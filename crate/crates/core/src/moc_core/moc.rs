//! The `Moc` value type: an evaluable curve with optional analytic
//! derivatives, a guaranteed-validity interval, and a log-space form
//! `u = ln x -> ln mu(e^u)` so the deep tail (x far below the smallest
//! positive double) stays computable.

use super::MocError;
use crate::num::diff;
use std::fmt;
use std::sync::Arc;

type F1 = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

#[derive(Clone)]
pub struct Moc {
    eval: F1,
    /// u = ln x  ->  ln(mu(e^u)/e^u); the primary log-space form.
    /// Keeping the ratio rather than ln mu itself avoids catastrophic
    /// cancellation at |u| ~ 1e10 where ln mu ~ u.
    log_ratio: F1,
    deriv1: Option<F1>,
    deriv2: Option<F1>,
    /// u -> d/du ln mu(e^u) = A(e^u); analytic when supplied
    log_deriv: Option<F1>,
    domain_hi: f64,
    smoothness_class: u32,
}

impl fmt::Debug for Moc {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Moc")
            .field("domain_hi", &self.domain_hi)
            .field("smoothness_class", &self.smoothness_class)
            .field("analytic_d1", &self.deriv1.is_some())
            .field("analytic_d2", &self.deriv2.is_some())
            .finish()
    }
}

impl Moc {
    /// From an x-space evaluator only; the log form is derived and is
    /// valid wherever x = e^u is representable.
    pub fn from_fn<F>(eval: F, domain_hi: f64) -> Self
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        let eval: F1 = Arc::new(eval);
        let e2 = eval.clone();
        Moc {
            eval,
            log_ratio: Arc::new(move |u: f64| {
                let x = u.exp();
                (e2(x) / x).ln()
            }),
            deriv1: None,
            deriv2: None,
            log_deriv: None,
            domain_hi,
            smoothness_class: 0,
        }
    }

    /// From u -> ln mu(e^u); the ratio form is derived (subject to
    /// cancellation for |u| beyond ~1e8, use `from_log_ratio` there).
    pub fn from_log_fn<F>(log_eval: F, domain_hi: f64) -> Self
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        let le: F1 = Arc::new(log_eval);
        let l2 = le.clone();
        let l3 = le.clone();
        Moc {
            eval: Arc::new(move |x: f64| l2(x.ln()).exp()),
            log_ratio: Arc::new(move |u: f64| l3(u) - u),
            deriv1: None,
            deriv2: None,
            log_deriv: None,
            domain_hi,
            smoothness_class: 0,
        }
    }

    /// From u -> ln(mu(e^u)/e^u), exact arbitrarily deep in the tail.
    pub fn from_log_ratio<F>(log_ratio: F, domain_hi: f64) -> Self
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        let lr: F1 = Arc::new(log_ratio);
        let l2 = lr.clone();
        Moc {
            eval: Arc::new(move |x: f64| {
                let u = x.ln();
                (u + l2(u)).exp()
            }),
            log_ratio: lr,
            deriv1: None,
            deriv2: None,
            log_deriv: None,
            domain_hi,
            smoothness_class: 0,
        }
    }

    pub fn with_deriv1<F>(mut self, d1: F) -> Self
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        self.deriv1 = Some(Arc::new(d1));
        self
    }

    pub fn with_deriv2<F>(mut self, d2: F) -> Self
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        self.deriv2 = Some(Arc::new(d2));
        self
    }

    /// Analytic A(e^u) as a function of u = ln x.
    pub fn with_log_deriv<F>(mut self, ld: F) -> Self
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        self.log_deriv = Some(Arc::new(ld));
        self
    }

    pub fn with_smoothness(mut self, k: u32) -> Self {
        self.smoothness_class = k;
        self
    }

    pub fn eval(&self, x: f64) -> f64 {
        (self.eval)(x)
    }

    /// ln mu(e^u).
    pub fn eval_log(&self, u: f64) -> f64 {
        u + (self.log_ratio)(u)
    }

    /// ln(mu(e^u)/e^u); this is lambda(-u).
    pub fn eval_log_ratio(&self, u: f64) -> f64 {
        (self.log_ratio)(u)
    }

    pub fn domain_hi(&self) -> f64 {
        self.domain_hi
    }

    pub fn smoothness_class(&self) -> u32 {
        self.smoothness_class
    }

    pub fn has_analytic_deriv1(&self) -> bool {
        self.deriv1.is_some()
    }

    pub fn has_analytic_deriv2(&self) -> bool {
        self.deriv2.is_some()
    }

    /// mu'(x), analytic when available, else central differences with
    /// Richardson extrapolation at relative step 1e-4.
    pub fn d1(&self, x: f64) -> f64 {
        match &self.deriv1 {
            Some(d) => d(x),
            None => {
                let f = self.eval.clone();
                diff::d1_central(&move |v| f(v), x, 1e-4)
            }
        }
    }

    /// mu''(x), analytic when available, else the 5-point stencil.
    pub fn d2(&self, x: f64) -> f64 {
        match &self.deriv2 {
            Some(d) => d(x),
            None => {
                let f = self.eval.clone();
                diff::d2_central(&move |v| f(v), x, 1e-4)
            }
        }
    }

    /// A(x) = x mu'(x)/mu(x), evaluated in the best available way:
    /// analytic log-derivative, analytic mu', or a log-space central
    /// difference (well conditioned arbitrarily close to x = 0).
    pub fn a_ratio_at(&self, x: f64) -> Result<f64, MocError> {
        if x <= 0.0 || x > self.domain_hi {
            return Err(MocError::DomainExceeded { x, domain_hi: self.domain_hi });
        }
        self.a_ratio_at_log(x.ln())
    }

    /// Same as `a_ratio_at` with the argument given as u = ln x.
    pub fn a_ratio_at_log(&self, u: f64) -> Result<f64, MocError> {
        if let Some(ld) = &self.log_deriv {
            return Ok(ld(u));
        }
        if let Some(d1) = &self.deriv1 {
            let x = u.exp();
            if x > 0.0 && x.is_finite() {
                let m = self.eval(x);
                if m <= 0.0 {
                    return Err(MocError::NonPositiveMoc { x, value: m });
                }
                return Ok(x * d1(x) / m);
            }
        }
        // A = 1 + d/du ln(mu/x); differencing the ratio keeps full
        // precision in the deep tail where A -> 1
        let f = self.log_ratio.clone();
        let a = 1.0 + diff::d1_central(&move |v| f(v), u, 1e-6_f64.max(1e-7 * u.abs()));
        if a.is_finite() {
            Ok(a)
        } else {
            Err(MocError::DerivativeUnavailable { x: u.exp() })
        }
    }

    /// Checks the defining MOC properties on a decreasing grid:
    /// mu -> 0 at 0, positivity inside, and (when an analytic first
    /// derivative is present) agreement with finite differences.
    pub fn validate_on(&self, grid: &[f64], d1_rel_tol: f64) -> Result<(), MocError> {
        let mut prev_at_zero = f64::INFINITY;
        for &x in grid {
            let v = self.eval(x);
            if x > 0.0 && x <= self.domain_hi && v <= 0.0 {
                return Err(MocError::NonPositiveMoc { x, value: v });
            }
        }
        // continuity at zero along a decreasing tail of the grid
        let mut xs: Vec<f64> = grid.to_vec();
        xs.sort_by(|a, b| b.partial_cmp(a).unwrap());
        for &x in xs.iter().rev().take(8) {
            let v = self.eval(x);
            if v > prev_at_zero * 1.5 {
                return Err(MocError::NonPositiveMoc { x, value: v });
            }
            prev_at_zero = prev_at_zero.min(v);
        }
        if let Some(d) = &self.deriv1 {
            for &x in grid.iter().filter(|&&x| x > 10.0 * grid[0] && x < 0.5 * self.domain_hi) {
                let f = self.eval.clone();
                let fd = diff::d1_central(&move |v| f(v), x, 1e-5);
                let an = d(x);
                if crate::num::rel_diff(fd, an) > d1_rel_tol {
                    return Err(MocError::DerivativeUnavailable { x });
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn xlogx() -> Moc {
        Moc::from_log_fn(|u: f64| u + (-u).ln(), (-1.0f64).exp())
            .with_deriv1(|x: f64| -x.ln() - 1.0)
            .with_deriv2(|x: f64| -1.0 / x)
            .with_log_deriv(|u: f64| 1.0 + 1.0 / u)
    }

    #[test]
    fn log_and_linear_paths_agree() {
        let mu = xlogx();
        for &x in &[1e-3, 1e-6, 1e-9] {
            let direct = x * (1.0f64 / x).ln();
            assert!(crate::num::rel_diff(mu.eval(x), direct) < 1e-14);
            assert!(crate::num::rel_diff(mu.eval_log(x.ln()).exp(), direct) < 1e-13);
        }
    }

    #[test]
    fn deep_tail_log_evaluation() {
        let mu = xlogx();
        // x = e^{-5e5} underflows; the log form must still work
        let u = -5.0e5;
        let l = mu.eval_log(u);
        assert!((l - (u + (5.0e5f64).ln())).abs() < 1e-9);
        let a = mu.a_ratio_at_log(u).unwrap();
        assert!((a - (1.0 - 1.0 / 5.0e5)).abs() < 1e-12);
    }

    #[test]
    fn fd_a_ratio_matches_closed_form() {
        let mu = Moc::from_log_fn(|u: f64| u + (-u).ln(), (-1.0f64).exp());
        let a = mu.a_ratio_at(1e-6).unwrap();
        let exact = 1.0 - 1.0 / (1e6f64).ln();
        assert!((a - exact).abs() < 1e-8, "a {a} exact {exact}");
    }
}

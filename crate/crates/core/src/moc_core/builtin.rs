//! The iterated-logarithm example family: L^p growth profiles
//! theta_m(p) = log p * log^2 p ... log^m p, the induced moduli
//! mu_m(x) = x theta_m(1/x), their generating functions
//! h_m(s) = 1/exp^{m+1}(-s), and the closed-form flow members
//! f_m^t = h_m(t + h_m^{-1}).

use super::{Moc, MocError};

/// log applied `k` times; None when an intermediate value leaves the
/// domain of log.
pub fn iter_log(k: u32, x: f64) -> Option<f64> {
    let mut v = x;
    for _ in 0..k {
        if v <= 0.0 {
            return None;
        }
        v = v.ln();
    }
    Some(v)
}

/// exp applied `k` times; None on overflow.
pub fn iter_exp(k: u32, x: f64) -> Option<f64> {
    let mut v = x;
    for _ in 0..k {
        if v > 709.0 {
            return None;
        }
        v = v.exp();
    }
    if v.is_finite() {
        Some(v)
    } else {
        None
    }
}

/// Chain l_1 = ln p, l_{k+1} = ln l_k up to l_m, starting from
/// l_1 given directly (safe when p itself overflows f64).
fn log_chain_from_l1(m: u32, l1: f64) -> Option<Vec<f64>> {
    let mut out = Vec::with_capacity(m as usize);
    let mut v = l1;
    for k in 0..m {
        if k > 0 {
            if v <= 0.0 {
                return None;
            }
            v = v.ln();
        }
        out.push(v);
    }
    Some(out)
}

#[derive(Clone, Copy, Debug)]
pub struct BuiltinFamily {
    m: u32,
}

impl BuiltinFamily {
    pub fn new(m: u32) -> Self {
        BuiltinFamily { m }
    }

    pub fn m(&self) -> u32 {
        self.m
    }

    /// Upper end of the interval on which mu_m is guaranteed strictly
    /// increasing and concave: 1/exp^{m+1}(1) where that is
    /// representable (m <= 2); one e-fold below the positivity
    /// threshold of the innermost log factor otherwise.
    pub fn mu_domain_hi(&self) -> f64 {
        match iter_exp(self.m + 1, 1.0) {
            Some(v) if v.is_finite() && 1.0 / v > 0.0 => 1.0 / v,
            _ => {
                let thresh = iter_exp(self.m - 1, 1.0).expect("m too large for f64");
                (-(thresh + 1.0)).exp()
            }
        }
    }

    /// Smallest p with theta_m(p) > 0 (1 for m = 0).
    pub fn theta_positivity_threshold(&self) -> f64 {
        if self.m == 0 {
            1.0
        } else {
            iter_exp(self.m - 1, 1.0).expect("m too large for f64")
        }
    }

    /// theta_m(p).
    pub fn theta(&self, p: f64) -> f64 {
        self.log_theta_from_l1(p.ln()).map(f64::exp).unwrap_or(f64::NAN)
    }

    /// ln theta_m given l1 = ln p; None outside the positivity domain.
    pub fn log_theta_from_l1(&self, l1: f64) -> Option<f64> {
        if self.m == 0 {
            return Some(0.0);
        }
        let chain = log_chain_from_l1(self.m, l1)?;
        if *chain.last().unwrap() <= 0.0 {
            return None;
        }
        Some(chain.iter().map(|v| v.ln()).sum())
    }

    /// theta_m'(p) = gamma_m(p)/p with the factor recursion
    /// gamma_k = gamma_{k-1} l_k + 1.
    pub fn theta_d1(&self, p: f64) -> f64 {
        if self.m == 0 {
            return 0.0;
        }
        let chain = match log_chain_from_l1(self.m, p.ln()) {
            Some(c) => c,
            None => return f64::NAN,
        };
        let mut gamma = 0.0;
        for &l in &chain {
            gamma = gamma * l + 1.0;
        }
        gamma / p
    }

    /// theta_m''(p).
    pub fn theta_d2(&self, p: f64) -> f64 {
        if self.m == 0 {
            return 0.0;
        }
        let chain = match log_chain_from_l1(self.m, p.ln()) {
            Some(c) => c,
            None => return f64::NAN,
        };
        // partial products theta_k = l_1 ... l_k
        let mut theta_partial = Vec::with_capacity(chain.len());
        let mut prod = 1.0;
        for &l in &chain {
            prod *= l;
            theta_partial.push(prod);
        }
        let mut gamma = 0.0;
        let mut gamma_p = 0.0; // d gamma_k / dp
        for (k, &l) in chain.iter().enumerate() {
            // l_k'(p) = 1/(p * theta_{k-1}(p)); theta_0 = 1
            let lk_prime = if k == 0 { 1.0 / p } else { 1.0 / (p * theta_partial[k - 1]) };
            gamma_p = gamma_p * l + gamma * lk_prime;
            gamma = gamma * l + 1.0;
        }
        gamma_p / p - gamma / (p * p)
    }

    /// d ln theta_m / d ln p = sum over k = 1..m of 1/theta_k(p),
    /// given l1 = ln p. Also equals 1 - A(x) at x = 1/p for mu_m.
    pub fn log_theta_slope_from_l1(&self, l1: f64) -> Option<f64> {
        self.inv_theta_sum_from_l1(l1)
    }

    fn inv_theta_sum_from_l1(&self, l1: f64) -> Option<f64> {
        if self.m == 0 {
            return Some(0.0);
        }
        let chain = log_chain_from_l1(self.m, l1)?;
        if *chain.last().unwrap() <= 0.0 {
            return None;
        }
        let mut prod = 1.0;
        let mut sum = 0.0;
        for &l in &chain {
            prod *= l;
            sum += 1.0 / prod;
        }
        Some(sum)
    }

    /// mu_m as a Moc with analytic derivatives and deep-tail log form.
    pub fn mu(&self) -> Moc {
        let fam = *self;
        let fam_d1 = *self;
        let fam_d2 = *self;
        let fam_a = *self;
        let hi = self.mu_domain_hi();
        Moc::from_log_ratio(
            move |u: f64| fam.log_theta_from_l1(-u).unwrap_or(f64::NAN),
            hi,
        )
        .with_deriv1(move |x: f64| {
            // theta_m(1/x) - gamma_m(1/x)
            let p = 1.0 / x;
            fam_d1.theta(p) - p * fam_d1.theta_d1(p)
        })
        .with_deriv2(move |x: f64| fam_d2.theta_d2(1.0 / x) / (x * x * x))
        .with_log_deriv(move |u: f64| {
            1.0 - fam_a.inv_theta_sum_from_l1(-u).unwrap_or(f64::NAN)
        })
        .with_smoothness(u32::MAX)
    }

    /// ln h_m(s) = -exp^m(-s); None on overflow.
    pub fn h_log(&self, s: f64) -> Option<f64> {
        iter_exp(self.m, -s).map(|v| -v)
    }

    /// h_m(s) = 1/exp^{m+1}(-s).
    pub fn h(&self, s: f64) -> f64 {
        self.h_log(s).map(f64::exp).unwrap_or(0.0)
    }

    /// h_m^{-1}(x) = -log^{m+1}(1/x) expressed through u = ln x.
    pub fn h_inv_from_log(&self, u: f64) -> Option<f64> {
        iter_log(self.m, -u).map(|v| -v)
    }

    pub fn h_inv(&self, x: f64) -> Option<f64> {
        if x <= 0.0 {
            return None;
        }
        self.h_inv_from_log(x.ln())
    }

    /// g_m(s) = ln h_m'(s) = -exp^m(-s) + sum_{k=0}^{m-1} exp^k(-s).
    pub fn g(&self, s: f64) -> Option<f64> {
        let mut acc = -iter_exp(self.m, -s)?;
        for k in 0..self.m {
            acc += iter_exp(k, -s)?;
        }
        Some(acc)
    }

    /// ln f_m^t(e^u) = -exp^m(log^{m+1}(1/x) - t).
    pub fn flow_log(&self, t: f64, u: f64) -> Result<f64, MocError> {
        let hinv = self
            .h_inv_from_log(u)
            .ok_or(MocError::DomainExceeded { x: u.exp(), domain_hi: self.mu_domain_hi() })?;
        iter_exp(self.m, -(t + hinv))
            .map(|v| -v)
            .ok_or(MocError::DomainExceeded { x: u.exp(), domain_hi: self.mu_domain_hi() })
    }

    /// f_m^t(x) = h_m(t + h_m^{-1}(x)).
    pub fn flow(&self, t: f64, x: f64) -> Result<f64, MocError> {
        if x <= 0.0 {
            return Err(MocError::DomainExceeded { x, domain_hi: self.mu_domain_hi() });
        }
        Ok(self.flow_log(t, x.ln())?.exp())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn theta0_is_one() {
        let f = BuiltinFamily::new(0);
        for &p in &[1.0, 10.0, 1e6] {
            assert_eq!(f.theta(p), 1.0);
        }
    }

    #[test]
    fn mu1_at_e_minus_2() {
        let f = BuiltinFamily::new(1);
        let x = (-2.0f64).exp();
        let expect = 2.0 * x; // x log(1/x) with log(1/x) = 2
        assert!((f.mu().eval(x) - expect).abs() < 1e-16);
        assert!((expect - 0.2706705664732254).abs() < 1e-15);
    }

    #[test]
    fn flow_at_t0_is_identity() {
        for m in 0..=3u32 {
            let f = BuiltinFamily::new(m);
            let x = 0.5 * f.mu_domain_hi();
            let y = f.flow(0.0, x).unwrap();
            assert!(crate::num::rel_diff(x, y) < 1e-12, "m = {m}");
        }
    }

    #[test]
    fn flow_group_law() {
        for m in 1..=2u32 {
            let f = BuiltinFamily::new(m);
            let x = 0.1 * f.mu_domain_hi();
            let a = f.flow(0.3, f.flow(0.45, x).unwrap()).unwrap();
            let b = f.flow(0.75, x).unwrap();
            assert!(crate::num::rel_diff(a, b) < 1e-12, "m = {m}");
        }
    }

    #[test]
    fn mu_is_h_prime_of_h_inv() {
        // mu_m = h_m' o h_m^{-1} (log form: ln mu(x) = g(h^{-1}(x)))
        for m in 0..=2u32 {
            let f = BuiltinFamily::new(m);
            let x = 0.2 * f.mu_domain_hi();
            let r = f.h_inv(x).unwrap();
            let lhs = f.g(r).unwrap();
            let rhs = f.mu().eval(x).ln();
            assert!((lhs - rhs).abs() < 1e-10, "m = {m}: {lhs} vs {rhs}");
        }
    }

    #[test]
    fn analytic_derivatives_match_differences() {
        for m in 1..=3u32 {
            let mu = BuiltinFamily::new(m).mu();
            let hi = mu.domain_hi();
            for &frac in &[1e-4, 1e-2, 0.3] {
                let x = frac * hi;
                let fd = crate::num::diff::d1_central(&|v| mu.eval(v), x, 1e-5);
                assert!(
                    crate::num::rel_diff(fd, mu.d1(x)) < 1e-7,
                    "m {m} x {x:e}: fd {fd} an {}",
                    mu.d1(x)
                );
                let fd2 = crate::num::diff::d2_central(&|v| mu.eval(v), x, 1e-4);
                assert!(
                    crate::num::rel_diff(fd2, mu.d2(x)) < 1e-5,
                    "m {m} x {x:e}: fd2 {fd2} an {}",
                    mu.d2(x)
                );
            }
        }
    }

    #[test]
    fn m3_domain_is_representable_and_valid() {
        let f = BuiltinFamily::new(3);
        let hi = f.mu_domain_hi();
        assert!(hi > 0.0 && hi < 1e-6);
        let mu = f.mu();
        // strictly increasing and concave just inside the cap
        let x = 0.9 * hi;
        assert!(mu.d1(x) > 0.0);
        assert!(mu.d2(x) < 0.0);
        assert!(mu.a_ratio_at(1e-12).unwrap() > 0.9);
    }
}

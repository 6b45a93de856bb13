//! L^p growth profiles theta(p), the derived curves
//! phi(p) = p ln theta(p) and alpha(eps) = theta(1/eps)/eps, the
//! constrained infimum mu(x) = inf { x^{1-2 eps} alpha(eps) }, and the
//! minimizer curve eps(r) with its inverse eta.

use super::ForwardError;
use crate::moc_core::{BuiltinFamily, Moc};
use crate::num::{diff, interp::MonotoneCubic, roots};
use std::sync::Arc;

type F1 = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Default lower end of the epsilon search bracket.
pub const EPS_FLOOR: f64 = 1e-9;

#[derive(Clone)]
pub struct LpProfile {
    /// l1 = ln p -> ln theta(p); NaN outside the positivity domain.
    log_theta: F1,
    /// analytic d ln theta / d ln p when available
    dlog_theta: Option<F1>,
    p0: f64,
}

impl std::fmt::Debug for LpProfile {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("LpProfile").field("p0", &self.p0).finish()
    }
}

impl LpProfile {
    pub fn new<F>(theta: F, p0: f64) -> Self
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        LpProfile {
            log_theta: Arc::new(move |l1: f64| theta(l1.exp()).ln()),
            dlog_theta: None,
            p0,
        }
    }

    pub fn from_log_theta<F>(log_theta: F, p0: f64) -> Self
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        LpProfile { log_theta: Arc::new(log_theta), dlog_theta: None, p0 }
    }

    pub fn with_dlog_theta<F>(mut self, d: F) -> Self
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        self.dlog_theta = Some(Arc::new(d));
        self
    }

    /// theta_m with p0 set a safe factor above the positivity
    /// threshold of the innermost log factor.
    pub fn yudovich(m: u32) -> Self {
        let fam = BuiltinFamily::new(m);
        let fam2 = fam;
        let p0 = if m == 0 { 2.0 } else { 2.0 * fam.theta_positivity_threshold() };
        LpProfile {
            log_theta: Arc::new(move |l1: f64| {
                fam.log_theta_from_l1(l1).unwrap_or(f64::NAN)
            }),
            dlog_theta: Some(Arc::new(move |l1: f64| {
                fam2.log_theta_slope_from_l1(l1).unwrap_or(f64::NAN)
            })),
            p0,
        }
    }

    pub fn constant(c: f64) -> Self {
        assert!(c > 0.0);
        let lc = c.ln();
        LpProfile {
            log_theta: Arc::new(move |_| lc),
            dlog_theta: Some(Arc::new(|_| 0.0)),
            p0: 2.0,
        }
    }

    pub fn p0(&self) -> f64 {
        self.p0
    }

    pub fn theta(&self, p: f64) -> f64 {
        (self.log_theta)(p.ln()).exp()
    }

    pub fn log_theta_at_l1(&self, l1: f64) -> f64 {
        (self.log_theta)(l1)
    }

    /// phi(p) = p ln theta(p).
    pub fn phi(&self, p: f64) -> f64 {
        p * (self.log_theta)(p.ln())
    }

    /// alpha(eps) = theta(1/eps)/eps.
    pub fn alpha(&self, eps: f64) -> f64 {
        self.log_alpha_t(eps.ln()).exp()
    }

    /// ln alpha as a function of t = ln eps.
    pub fn log_alpha_t(&self, t: f64) -> f64 {
        -t + (self.log_theta)(-t)
    }

    /// d ln alpha / dt at t = ln eps (so (log alpha)'(eps) = this / eps).
    pub fn dlog_alpha_t(&self, t: f64) -> f64 {
        match &self.dlog_theta {
            Some(d) => -1.0 - d(-t),
            None => {
                let lt = self.log_theta.clone();
                -1.0 - diff::d1_central(&move |l1| lt(l1), -t, 1e-6)
            }
        }
    }

    /// Upper end of the admissible epsilon interval (0, min(1/2, 1/p0)].
    pub fn eps_max(&self) -> f64 {
        (1.0f64 / self.p0).min(0.5)
    }
}

/// Result of the per-point minimization of g(r, eps) = 2 eps r + ln alpha(eps).
#[derive(Clone, Copy, Debug)]
pub struct EnvelopePoint {
    pub lambda: f64,
    pub eps: f64,
    pub at_boundary: bool,
}

/// Minimizes g(r, .) over the eps bracket: a 256-point scan in ln eps
/// refined by golden section. For strictly convex ln alpha the scan
/// brackets the unique interior minimum.
pub fn minimize_envelope(profile: &LpProfile, r: f64) -> EnvelopePoint {
    let t_lo = EPS_FLOOR.ln();
    let t_hi = profile.eps_max().ln();
    let g = |t: f64| 2.0 * r * t.exp() + profile.log_alpha_t(t);
    const N: usize = 256;
    let mut best_i = N;
    let mut best = f64::INFINITY;
    for i in 0..=N {
        let t = t_lo + (t_hi - t_lo) * i as f64 / N as f64;
        let v = g(t);
        if v.is_finite() && v < best {
            best = v;
            best_i = i;
        }
    }
    if best_i == N {
        // boundary minimizer at eps_max
        return EnvelopePoint { lambda: g(t_hi), eps: t_hi.exp(), at_boundary: true };
    }
    let cell = (t_hi - t_lo) / N as f64;
    let a = t_lo + cell * (best_i.saturating_sub(1)) as f64;
    let b = (t_lo + cell * (best_i + 1) as f64).min(t_hi);
    let (t_min, v_min) = roots::golden_min(&g, a, b, 1e-13);
    EnvelopePoint { lambda: v_min, eps: t_min.exp(), at_boundary: false }
}

/// mu(x) = x exp(min_eps g(-ln x, eps)) as a Moc valid on (0, 1), with
/// the minimizer supplying analytic-quality derivatives through
/// lambda'(r) = 2 eps(r).
pub fn mu_from_theta(profile: &LpProfile, x_grid: &[f64]) -> Result<Moc, ForwardError> {
    // degenerate-profile detection on the certification grid
    let mut any_interior = false;
    for &x in x_grid {
        assert!(x > 0.0 && x < 1.0, "x_grid must lie in (0,1)");
        let p = minimize_envelope(profile, -x.ln());
        if !p.lambda.is_finite() {
            return Err(ForwardError::ProfileDomain { p: 1.0 / p.eps });
        }
        if !p.at_boundary {
            any_interior = true;
        }
    }
    if !any_interior {
        return Err(ForwardError::FlatAlpha);
    }
    let pr1 = profile.clone();
    let pr2 = profile.clone();
    let pr3 = profile.clone();
    // the infimum defines mu for every x > 0 (boundary minimizer past
    // the grid top), so the returned modulus carries no finite cap
    Ok(Moc::from_log_ratio(move |u: f64| minimize_envelope(&pr1, -u).lambda, f64::INFINITY)
        .with_log_deriv(move |u: f64| 1.0 - 2.0 * minimize_envelope(&pr2, -u).eps)
        .with_deriv1(move |x: f64| {
            let p = minimize_envelope(&pr3, -x.ln());
            (1.0 - 2.0 * p.eps) * p.lambda.exp()
        })
        .with_smoothness(2))
}

#[derive(Clone)]
pub struct EpsilonMap {
    profile: LpProfile,
    /// (r, eps) samples, increasing in r
    pairs: Vec<(f64, f64)>,
    /// monotone interpolant t = ln eps -> r
    eta_interp: MonotoneCubic,
    r_lo: f64,
    r_hi: f64,
}

impl std::fmt::Debug for EpsilonMap {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("EpsilonMap")
            .field("r_lo", &self.r_lo)
            .field("r_hi", &self.r_hi)
            .field("samples", &self.pairs.len())
            .finish()
    }
}

impl EpsilonMap {
    /// eps(r) by solving (log alpha)'(eps) = -2r exactly (bisection on
    /// the strictly increasing residual).
    pub fn eps(&self, r: f64) -> Result<f64, ForwardError> {
        solve_eps(&self.profile, r)
    }

    /// eta(eps) = r with eps(r) = eps, by exact inversion.
    pub fn eta(&self, eps: f64) -> Result<f64, ForwardError> {
        let t = eps.ln();
        let da = self.profile.dlog_alpha_t(t);
        if !da.is_finite() {
            return Err(ForwardError::ProfileDomain { p: 1.0 / eps });
        }
        // (log alpha)'(eps) = -2 r  =>  r = -dA/dt * e^{-t} / 2
        Ok(-0.5 * da * (-t).exp())
    }

    /// The monotone-interpolated eta (the stored (eps, r) pairs).
    pub fn eta_interp(&self, eps: f64) -> f64 {
        self.eta_interp.eval(eps.ln())
    }

    pub fn validity(&self) -> (f64, f64) {
        (self.r_lo, self.r_hi)
    }

    pub fn pairs(&self) -> &[(f64, f64)] {
        &self.pairs
    }
}

fn solve_eps(profile: &LpProfile, r: f64) -> Result<f64, ForwardError> {
    let t_lo = EPS_FLOOR.ln();
    let t_hi = profile.eps_max().ln();
    // residual in t: (log alpha)'(eps) + 2r, strictly increasing in t
    let res = |t: f64| profile.dlog_alpha_t(t) * (-t).exp() + 2.0 * r;
    let lo = res(t_lo);
    let hi = res(t_hi);
    if !lo.is_finite() || !hi.is_finite() {
        return Err(ForwardError::ProfileDomain { p: (-t_hi).exp() });
    }
    if lo >= 0.0 || hi <= 0.0 {
        // no interior solution: r outside the validity interval
        return Err(ForwardError::NotStrictlyConvex { eps: if lo >= 0.0 { EPS_FLOOR } else { t_hi.exp() } });
    }
    let t = roots::bisect(&res, t_lo, t_hi, 1e-14).ok_or(ForwardError::FlatAlpha)?;
    Ok(t.exp())
}

/// Builds the minimizer curve eps(r) on the given grid by solving
/// (log alpha)'(eps) = -2r, together with the interpolated inverse.
pub fn epsilon_minimizer(profile: &LpProfile, r_grid: &[f64]) -> Result<EpsilonMap, ForwardError> {
    // certify that (log alpha)' is strictly increasing on the scan grid
    let t_lo = EPS_FLOOR.ln();
    let t_hi = profile.eps_max().ln();
    let mut prev = f64::NEG_INFINITY;
    for i in 0..=128 {
        let t = t_lo + (t_hi - t_lo) * i as f64 / 128.0;
        let v = profile.dlog_alpha_t(t) * (-t).exp();
        if v.is_finite() {
            if v <= prev {
                return Err(ForwardError::NotStrictlyConvex { eps: t.exp() });
            }
            prev = v;
        }
    }

    let mut rs: Vec<f64> = r_grid.to_vec();
    rs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    rs.dedup();
    let mut pairs = Vec::with_capacity(rs.len());
    for &r in &rs {
        pairs.push((r, solve_eps(profile, r)?));
    }
    // interpolant nodes must be strictly increasing in t = ln eps
    let mut nodes: Vec<(f64, f64)> = pairs.iter().map(|&(r, e)| (e.ln(), r)).collect();
    nodes.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    nodes.dedup_by(|a, b| a.0 == b.0);
    if nodes.len() < 2 {
        return Err(ForwardError::FlatAlpha);
    }
    let eta_interp = MonotoneCubic::new(
        nodes.iter().map(|p| p.0).collect(),
        nodes.iter().map(|p| p.1).collect(),
    );
    Ok(EpsilonMap {
        profile: profile.clone(),
        r_lo: rs[0],
        r_hi: *rs.last().unwrap(),
        pairs,
        eta_interp,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::num::rel_diff;

    #[test]
    fn constant_theta_gives_bounded_vorticity_mu() {
        // theta = 1: mu(r) = -2 e r ln r on r < 1/e
        let pr = LpProfile::constant(1.0);
        let grid = crate::num::grid::log_grid(1e-8, 0.9 / std::f64::consts::E, 16);
        let mu = mu_from_theta(&pr, &grid).unwrap();
        for &x in &grid {
            let exact = -2.0 * std::f64::consts::E * x * x.ln();
            assert!(rel_diff(mu.eval(x), exact) < 1e-9, "x {x:e}: {} vs {exact}", mu.eval(x));
        }
        // interior minimizer eps0 = 1/(2 ln(1/r))
        let p = minimize_envelope(&pr, 10.0);
        assert!(!p.at_boundary);
        assert!((p.eps - 0.05).abs() < 1e-6);
    }

    #[test]
    fn theta_p_ratio_nonincreasing() {
        // theta(p) = p: mu(x)/x = inf x^{-2eps} alpha(eps) nonincreasing
        let pr = LpProfile::new(|p: f64| p, 2.0);
        let grid = crate::num::grid::log_grid(1e-6, 0.5, 8);
        let mu = mu_from_theta(&pr, &grid).unwrap();
        let mut prev = f64::INFINITY;
        for &x in &grid {
            let ratio = mu.eval(x) / x;
            assert!(ratio <= prev * (1.0 + 1e-12));
            prev = ratio;
        }
    }

    #[test]
    fn theta1_upper_bound_by_test_point() {
        // mu(x) <= C x log(1/x) loglog(1/x) via eps = 1/(2 log(1/x))
        let pr = LpProfile::yudovich(1);
        let grid = crate::num::grid::log_grid(1e-12, 1e-4, 8);
        let mu = mu_from_theta(&pr, &grid).unwrap();
        for &x in &grid {
            let l1 = (1.0f64 / x).ln();
            let bound = 2.0 * std::f64::consts::E * x * l1 * (2.0 * l1).ln();
            assert!(mu.eval(x) <= bound * (1.0 + 1e-9), "x {x:e}");
        }
    }

    #[test]
    fn eps_minimizer_constant_theta() {
        let pr = LpProfile::constant(1.0);
        let r_grid: Vec<f64> = (2..100).map(|i| i as f64).collect();
        let em = epsilon_minimizer(&pr, &r_grid).unwrap();
        // eps(r) = 1/(2r)
        for &r in &[2.0, 10.0, 75.0] {
            assert!(rel_diff(em.eps(r).unwrap(), 1.0 / (2.0 * r)) < 1e-10);
        }
        // round trip through the exact inverse and the interpolant
        let e5 = em.eps(5.0).unwrap();
        assert!((em.eta(e5).unwrap() - 5.0).abs() < 1e-8);
        assert!((em.eta_interp(e5) - 5.0).abs() < 1e-6);
        // (log alpha)'(eps(r)) = -2r
        let t = em.eps(20.0).unwrap().ln();
        let lhs = pr.dlog_alpha_t(t) * (-t).exp();
        assert!(rel_diff(lhs, -40.0) < 1e-9);
        // eps -> 0 as r -> infinity
        assert!(em.eps(1e6).unwrap() < 1e-6);
    }

    #[test]
    fn flat_alpha_detected() {
        // theta(p) = exp(p): (log alpha)' < -2r across the bracket for
        // every shallow x, so the minimizer pins to eps_max everywhere
        let pr = LpProfile::from_log_theta(|l1: f64| l1.exp(), 2.0);
        let grid = [0.2, 0.3, 0.5];
        assert!(matches!(mu_from_theta(&pr, &grid), Err(ForwardError::FlatAlpha)));
    }

    #[test]
    fn non_convex_log_alpha_detected() {
        // oscillatory theta breaks monotonicity of (log alpha)'
        let pr = LpProfile::from_log_theta(|l1: f64| (3.0 * l1).sin(), 2.0);
        let r_grid = [5.0, 10.0];
        assert!(matches!(
            epsilon_minimizer(&pr, &r_grid),
            Err(ForwardError::NotStrictlyConvex { .. })
        ));
    }
}

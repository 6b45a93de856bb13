//! The flow modulus Gamma(t, x): realized from a velocity modulus mu
//! through the defining relation int_x^Gamma dr/mu = t (an Abel
//! coordinate with cached cumulative integrals), or handed off from a
//! generating function. The ODE route dGamma/dt = mu(Gamma) is kept
//! separate in `gamma_from_mu` so the two stay independent checks.

use super::ForwardError;
use crate::moc_core::Moc;
use crate::num::{ode, quad, roots};
use std::sync::{Arc, Mutex};

/// Cached strictly increasing map u -> int_{anchor}^{u} e^{-ln(mu/x)} dv,
/// i.e. the Abel coordinate h^{-1} up to an additive constant.
#[derive(Clone)]
pub struct AbelMap {
    mu: Moc,
    knots: Arc<Mutex<Vec<(f64, f64)>>>,
}

impl AbelMap {
    pub fn new(mu: &Moc, anchor_u: f64) -> Self {
        AbelMap {
            mu: mu.clone(),
            knots: Arc::new(Mutex::new(vec![(anchor_u, 0.0)])),
        }
    }

    /// H(u) with incremental caching; each new segment is integrated
    /// adaptively to relative 1e-12.
    pub fn value(&self, u: f64) -> f64 {
        if !u.is_finite() {
            return f64::NAN;
        }
        let mut knots = self.knots.lock().unwrap();
        let idx = knots
            .binary_search_by(|k| k.0.partial_cmp(&u).unwrap())
            .map(|i| i as isize)
            .unwrap_or_else(|i| i as isize - 1);
        // nearest cached knot (prefer the closer of the two neighbors)
        let pick = if idx < 0 {
            0
        } else if (idx as usize) + 1 < knots.len() {
            let l = idx as usize;
            if (u - knots[l].0).abs() <= (knots[l + 1].0 - u).abs() {
                l
            } else {
                l + 1
            }
        } else {
            idx as usize
        };
        let (u0, h0) = knots[pick];
        if u == u0 {
            return h0;
        }
        let mu = &self.mu;
        let integrand = |v: f64| (-mu.eval_log_ratio(v)).exp();
        let seg = quad::integrate_with_breaks(&integrand, u0, u, &[], 0.0, 1e-12, 60_000);
        let h = h0 + seg.value;
        let pos = knots
            .binary_search_by(|k| k.0.partial_cmp(&u).unwrap())
            .unwrap_or_else(|i| i);
        if pos == knots.len() || knots[pos].0 != u {
            knots.insert(pos, (u, h));
            // keep the cache bounded
            if knots.len() > 4096 {
                let keep: Vec<(f64, f64)> =
                    knots.iter().step_by(2).copied().collect();
                *knots = keep;
            }
        }
        h
    }

    /// Solves H(w) = target for w.
    pub fn invert(&self, target: f64, seed_u: f64) -> Option<f64> {
        let slope = (-self.mu.eval_log_ratio(seed_u)).exp();
        let step = ((target - self.value(seed_u)).abs() / slope).clamp(1e-8, 0.5);
        roots::solve_monotone(
            &|u| self.value(u),
            target,
            seed_u,
            step,
            -1.7e308,
            self.mu.domain_hi().ln(),
            1e-13,
        )
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FlowSource {
    FromMu,
    FromGeneratingFunction,
}

type FlowFn = Arc<dyn Fn(f64, f64) -> Result<f64, ForwardError> + Send + Sync>;

/// Gamma(t, x) as a family, together with its source modulus.
#[derive(Clone)]
pub struct FlowFamily {
    mu_ref: Moc,
    source: FlowSource,
    advance_log: FlowFn,
}

impl std::fmt::Debug for FlowFamily {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FlowFamily").field("source", &self.source).finish()
    }
}

impl FlowFamily {
    /// Realizes the family from mu through the Abel coordinate: the
    /// defining integral relation, not the ODE.
    pub fn from_mu(mu: &Moc) -> Self {
        let anchor = mu.domain_hi().ln().min(0.0) - 1.0;
        let abel = AbelMap::new(mu, anchor);
        let hi = mu.domain_hi();
        FlowFamily {
            mu_ref: mu.clone(),
            source: FlowSource::FromMu,
            advance_log: Arc::new(move |t: f64, u: f64| {
                let target = abel.value(u) + t;
                abel.invert(target, u).ok_or(ForwardError::BlowThroughDomain {
                    t_exit: t,
                    domain_hi: hi,
                })
            }),
        }
    }

    /// Realizes the family from an external iteration-group evaluator
    /// (t, ln x) -> ln f^t(x).
    pub fn from_generating<F>(mu_ref: &Moc, advance_log: F) -> Self
    where
        F: Fn(f64, f64) -> Result<f64, ForwardError> + Send + Sync + 'static,
    {
        FlowFamily {
            mu_ref: mu_ref.clone(),
            source: FlowSource::FromGeneratingFunction,
            advance_log: Arc::new(advance_log),
        }
    }

    pub fn source(&self) -> FlowSource {
        self.source
    }

    pub fn mu_ref(&self) -> &Moc {
        &self.mu_ref
    }

    /// ln Gamma_t(e^u).
    pub fn gamma_log(&self, t: f64, u: f64) -> Result<f64, ForwardError> {
        (self.advance_log)(t, u)
    }

    pub fn gamma(&self, t: f64, x: f64) -> Result<f64, ForwardError> {
        Ok(self.gamma_log(t, x.ln())?.exp())
    }
}

/// Integrates dGamma/dt = mu(Gamma), Gamma(0) = x up to time t, in
/// u = ln Gamma coordinates (du/dt = mu(e^u)/e^u). The right-hand side
/// is clamped at mu(domain_hi) past the validity interval and leaving
/// it is reported rather than silently extrapolated.
pub fn gamma_from_mu(mu: &Moc, t: f64, x: f64) -> Result<f64, ForwardError> {
    Ok(gamma_from_mu_log(mu, t, x.ln())?.exp())
}

/// Same ODE with initial condition and result as u = ln x.
pub fn gamma_from_mu_log(mu: &Moc, t: f64, u0: f64) -> Result<f64, ForwardError> {
    assert!(t >= 0.0, "flow ODE runs forward in time");
    let u_hi = mu.domain_hi().ln();
    if u0 > u_hi {
        return Err(ForwardError::BlowThroughDomain { t_exit: 0.0, domain_hi: mu.domain_hi() });
    }
    let rhs = |_: f64, u: f64| {
        if u <= u_hi {
            mu.eval_log_ratio(u).exp()
        } else {
            (mu.eval_log(u_hi) - u).exp()
        }
    };
    let opts = ode::OdeOpts { rel_tol: 1e-11, abs_tol: 1e-280, max_steps: 5_000_000 };
    let r = ode::integrate(rhs, 0.0, u0, t, opts, |_, u| u <= u_hi);
    if r.stopped {
        return Err(ForwardError::BlowThroughDomain { t_exit: r.t, domain_hi: mu.domain_hi() });
    }
    Ok(r.y)
}

#[derive(Clone, Debug)]
pub struct TransportReport {
    /// max over the grid of |mu(Gamma) - Gamma' mu(x)| / mu(Gamma)
    pub max_rel_mufunc: f64,
    /// max over the grid of |dGamma/dt - mu(x) Gamma'(x)| / |dGamma/dt|
    pub max_rel_transport: f64,
}

/// Checks the functional identity mu(Gamma_t(x)) = Gamma_t'(x) mu(x)
/// and the transport form dGamma/dt = mu(x) Gamma_t'(x), with Gamma'
/// taken by finite differences so the check stays independent of how
/// the family was built.
pub fn verify_transport(
    mu: &Moc,
    flow: &FlowFamily,
    t_grid: &[f64],
    x_grid: &[f64],
) -> Result<TransportReport, ForwardError> {
    let mut worst_mufunc: f64 = 0.0;
    let mut worst_transport: f64 = 0.0;
    for &t in t_grid {
        for &x in x_grid {
            let u = x.ln();
            let hu = 1e-6;
            let up = flow.gamma_log(t, u + hu)?;
            let um = flow.gamma_log(t, u - hu)?;
            let u_out = flow.gamma_log(t, u)?;
            // Gamma'(x) = (Gamma/x) d u_out/d u_in
            let dudu = (up - um) / (2.0 * hu);
            let gp = (u_out - u).exp() * dudu;
            let mu_x = mu.eval_log(u).exp();
            let mu_g = mu.eval_log(u_out).exp();
            let r1 = ((mu_g - gp * mu_x) / mu_g).abs();
            worst_mufunc = worst_mufunc.max(r1);

            let ht = 1e-6 * t.max(1.0);
            let (ta, tb) = if t >= ht { (t - ht, t + ht) } else { (t, t + ht) };
            let ga = flow.gamma_log(ta, u)?.exp();
            let gb = flow.gamma_log(tb, u)?.exp();
            let dgdt = (gb - ga) / (tb - ta);
            if dgdt != 0.0 {
                let r2 = ((dgdt - mu_x * gp) / dgdt).abs();
                worst_transport = worst_transport.max(r2);
            }
        }
    }
    Ok(TransportReport { max_rel_mufunc: worst_mufunc, max_rel_transport: worst_transport })
}

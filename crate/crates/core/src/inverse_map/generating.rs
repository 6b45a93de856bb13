//! Generating functions h of continuous iteration groups:
//! f^t(x) = h(t + h^{-1}(x)), mu = h' o h^{-1}. Numeric instances are
//! built from a modulus through the signed integral of 1/mu; the
//! iterated-exponential family supplies analytic instances.

use super::InverseError;
use crate::moc_core::{BuiltinFamily, Moc};
use crate::num::quad::Cumulative;
use std::sync::Arc;

type OptF1 = Arc<dyn Fn(f64) -> Option<f64> + Send + Sync>;

#[derive(Clone)]
pub struct GeneratingFunction {
    /// r -> ln h(r); None outside the evaluable range.
    h_log: OptF1,
    /// u = ln x -> h^{-1}(e^u).
    h_inv_log: OptF1,
    /// r -> g(r) = ln h'(r).
    g: OptF1,
    /// (a0, h^{-1}(a0)) normalization pair.
    anchor: (f64, f64),
    /// certified argument range of h.
    r_lo: f64,
    r_hi: f64,
}

impl std::fmt::Debug for GeneratingFunction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("GeneratingFunction")
            .field("anchor", &self.anchor)
            .field("r_lo", &self.r_lo)
            .field("r_hi", &self.r_hi)
            .finish()
    }
}

impl GeneratingFunction {
    pub fn from_closures<H, HI, G>(
        h_log: H,
        h_inv_log: HI,
        g: G,
        anchor: (f64, f64),
        r_lo: f64,
        r_hi: f64,
    ) -> Self
    where
        H: Fn(f64) -> Option<f64> + Send + Sync + 'static,
        HI: Fn(f64) -> Option<f64> + Send + Sync + 'static,
        G: Fn(f64) -> Option<f64> + Send + Sync + 'static,
    {
        GeneratingFunction {
            h_log: Arc::new(h_log),
            h_inv_log: Arc::new(h_inv_log),
            g: Arc::new(g),
            anchor,
            r_lo,
            r_hi,
        }
    }

    /// Analytic h_m for the iterated-exponential family.
    pub fn builtin(m: u32) -> Self {
        let fam = BuiltinFamily::new(m);
        let f2 = fam;
        let f3 = fam;
        let a0 = 0.25 * fam.mu_domain_hi();
        let b0 = fam.h_inv(a0).expect("anchor inside domain");
        GeneratingFunction {
            h_log: Arc::new(move |r: f64| fam.h_log(r)),
            h_inv_log: Arc::new(move |u: f64| f2.h_inv_from_log(u)),
            g: Arc::new(move |r: f64| f3.g(r)),
            anchor: (a0, b0),
            r_lo: b0 - 60.0,
            r_hi: f2.h_inv(f2.mu_domain_hi()).unwrap_or(0.0),
        }
    }

    pub fn anchor(&self) -> (f64, f64) {
        self.anchor
    }

    pub fn range(&self) -> (f64, f64) {
        (self.r_lo, self.r_hi)
    }

    pub fn h_log(&self, r: f64) -> Result<f64, InverseError> {
        (self.h_log)(r).ok_or(InverseError::RangeExceeded { arg: r })
    }

    pub fn h(&self, r: f64) -> Result<f64, InverseError> {
        Ok(self.h_log(r)?.exp())
    }

    pub fn h_inv_log(&self, u: f64) -> Result<f64, InverseError> {
        (self.h_inv_log)(u).ok_or(InverseError::RangeExceeded { arg: u })
    }

    pub fn h_inv(&self, x: f64) -> Result<f64, InverseError> {
        if x <= 0.0 {
            return Err(InverseError::RangeExceeded { arg: x });
        }
        self.h_inv_log(x.ln())
    }

    /// g = ln h'.
    pub fn g(&self, r: f64) -> Result<f64, InverseError> {
        (self.g)(r).ok_or(InverseError::RangeExceeded { arg: r })
    }

    /// ln f^t(e^u) = ln h(t + h^{-1}(e^u)).
    pub fn advance_log(&self, t: f64, u: f64) -> Result<f64, InverseError> {
        let r = self.h_inv_log(u)?;
        self.h_log(r + t)
    }

    /// The modulus mu = h' o h^{-1} as a Moc (log form ln mu(x) =
    /// g(h^{-1}(x))).
    pub fn mu(&self, domain_hi: f64) -> Moc {
        let s = self.clone();
        Moc::from_log_fn(
            move |u: f64| match s.h_inv_log(u).and_then(|r| s.g(r)) {
                Ok(v) => v,
                Err(_) => f64::NAN,
            },
            domain_hi,
        )
    }
}

/// f^t(x) evaluated through the generating function.
pub fn cig_from_generating(gf: &GeneratingFunction, t: f64, x: f64) -> Result<f64, InverseError> {
    Ok(gf.advance_log(t, x.ln())?.exp())
}

/// Builds h from a modulus: h^{-1}(x) = b0 + int_{a0}^x ds/mu(s)
/// (signed), h by monotone inversion, g = ln mu(h(r)).
///
/// Errors with NonOsgood when the tail integral toward 0 converges
/// (h^{-1}(0) would be finite, so h could not generate a group on all
/// of R).
pub fn generating_from_mu(mu: &Moc, a0: f64, b0: f64) -> Result<GeneratingFunction, InverseError> {
    assert!(a0 > 0.0 && a0 <= mu.domain_hi());
    let u0 = a0.ln();
    let m = mu.clone();
    let integrand = move |v: f64| (-m.eval_log_ratio(v)).exp();

    // Osgood certificate: the integral over [u0 - 2W, u0 - W] must not
    // be vanishing relative to [u0 - W, u0]; for a convergent tail the
    // deeper block collapses geometrically.
    {
        let w = 40.0;
        let near = crate::num::quad::integrate(&integrand, u0 - w, u0, 0.0, 1e-10).value;
        let far = crate::num::quad::integrate(&integrand, u0 - 2.0 * w, u0 - w, 0.0, 1e-10).value;
        if !(far > 1e-6 * near) {
            return Err(InverseError::NonOsgood);
        }
    }

    let cum = Cumulative::new(integrand, u0, b0);
    let cum2 = cum.clone();
    let mu_for_slope = mu.clone();
    let mu_for_g = mu.clone();
    let u_hi = mu.domain_hi().ln();

    let h_inv_log = move |u: f64| {
        if u > u_hi {
            return None;
        }
        let v = cum.value(u);
        if v.is_finite() {
            Some(v)
        } else {
            None
        }
    };
    let h_inv_log2 = h_inv_log.clone();

    let h_log = move |r: f64| {
        // solve cum(u) = r for u, seeded from the anchor
        let slope0 = (-mu_for_slope.eval_log_ratio(u0)).exp();
        let step = ((r - b0).abs() / slope0).clamp(1e-8, 0.5);
        cum2.invert(r, u0, step, -1.7e308, u_hi)
    };
    let h_log2 = h_log.clone();

    let g = move |r: f64| h_log2(r).map(|u| mu_for_g.eval_log(u));

    Ok(GeneratingFunction {
        h_log: Arc::new(h_log),
        h_inv_log: Arc::new(move |u: f64| h_inv_log2(u)),
        g: Arc::new(g),
        anchor: (a0, b0),
        r_lo: f64::NEG_INFINITY,
        r_hi: b0 + 60.0,
    })
}

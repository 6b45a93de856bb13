//! Scalar adaptive Runge-Kutta integration (Dormand-Prince 5(4)).

/// Outcome of one integration run.
#[derive(Clone, Debug)]
pub struct OdeResult {
    pub t: f64,
    pub y: f64,
    pub steps: usize,
    /// Set when a guard function requested an early stop.
    pub stopped: bool,
}

#[derive(Clone, Copy, Debug)]
pub struct OdeOpts {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_steps: usize,
}

impl Default for OdeOpts {
    fn default() -> Self {
        OdeOpts { rel_tol: 1e-10, abs_tol: 1e-300, max_steps: 2_000_000 }
    }
}

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
const E1: f64 = 35.0 / 384.0 - 5179.0 / 57600.0;
const E3: f64 = 500.0 / 1113.0 - 7571.0 / 16695.0;
const E4: f64 = 125.0 / 192.0 - 393.0 / 640.0;
const E5: f64 = -2187.0 / 6784.0 + 92097.0 / 339200.0;
const E6: f64 = 11.0 / 84.0 - 187.0 / 2100.0;
const E7: f64 = -1.0 / 40.0;

/// Integrates dy/dt = f(t, y) from (t0, y0) to t1 (t1 may be < t0).
///
/// `guard(t, y)` is checked after every accepted step; returning `false`
/// stops the integration at that point with `stopped = true`.
pub fn integrate<F, G>(f: F, t0: f64, y0: f64, t1: f64, opts: OdeOpts, guard: G) -> OdeResult
where
    F: Fn(f64, f64) -> f64,
    G: Fn(f64, f64) -> bool,
{
    let dir = if t1 >= t0 { 1.0 } else { -1.0 };
    let span = (t1 - t0).abs();
    if span == 0.0 {
        return OdeResult { t: t0, y: y0, steps: 0, stopped: false };
    }
    let mut t = t0;
    let mut y = y0;
    let mut k1 = f(t, y);
    // initial step: limit both by span and by the local growth rate
    let rate = (k1 / y.abs().max(opts.abs_tol.max(1e-300))).abs().max(1e-12);
    let mut h = dir * (span * 1e-3).min(0.01 / rate).max(span * 1e-14);
    let mut steps = 0usize;

    while steps < opts.max_steps {
        if (t - t1).abs() <= 1e-15 * span.max(t1.abs()) || dir * (t1 - t) <= 0.0 {
            break;
        }
        if dir * (t + h - t1) > 0.0 {
            h = t1 - t;
        }
        let k2 = f(t + 0.2 * h, y + h * A21 * k1);
        let k3 = f(t + 0.3 * h, y + h * (A31 * k1 + A32 * k2));
        let k4 = f(t + 0.8 * h, y + h * (A41 * k1 + A42 * k2 + A43 * k3));
        let k5 = f(t + 8.0 / 9.0 * h, y + h * (A51 * k1 + A52 * k2 + A53 * k3 + A54 * k4));
        let k6 = f(t + h, y + h * (A61 * k1 + A62 * k2 + A63 * k3 + A64 * k4 + A65 * k5));
        let y5 = y + h * (B1 * k1 + B3 * k3 + B4 * k4 + B5 * k5 + B6 * k6);
        let k7 = f(t + h, y5);
        let err = h * (E1 * k1 + E3 * k3 + E4 * k4 + E5 * k5 + E6 * k6 + E7 * k7);
        let scale = opts.abs_tol + opts.rel_tol * y.abs().max(y5.abs());
        let err_norm = (err / scale).abs();

        // a non-finite stage means the right-hand side died inside the
        // step: shrink, and give up (reported as stopped) once the step
        // cannot shrink further
        if !err_norm.is_finite() || !y5.is_finite() {
            h *= 0.2;
            if h.abs() <= 1e-14 * t.abs().max(span * 1e-12) {
                return OdeResult { t, y, steps, stopped: true };
            }
            continue;
        }

        if err_norm <= 1.0 || h.abs() <= 1e-14 * t.abs().max(span * 1e-12) {
            t += h;
            y = y5;
            k1 = k7;
            steps += 1;
            if !guard(t, y) {
                return OdeResult { t, y, steps, stopped: true };
            }
        }
        let factor = if err_norm > 0.0 {
            (0.9 * err_norm.powf(-0.2)).clamp(0.2, 5.0)
        } else {
            5.0
        };
        h *= factor;
    }
    OdeResult { t, y, steps, stopped: false }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_decay() {
        let r = integrate(|_, y| -y, 0.0, 1.0, 3.0, OdeOpts::default(), |_, _| true);
        assert!((r.y - (-3.0f64).exp()).abs() < 1e-10);
    }

    #[test]
    fn backward_integration() {
        let r = integrate(|_, y| y, 1.0, 1.0, 0.0, OdeOpts::default(), |_, _| true);
        assert!((r.y - (-1.0f64).exp()).abs() < 1e-10);
    }

    #[test]
    fn linear_in_log_variable() {
        // u' = -c u over [0,1]: the flow-map equation for mu = -c x log x
        // written in u = log(1/x).
        let c = 2.0 * std::f64::consts::E;
        let u0 = 575.0;
        let r = integrate(|_, u| -c * u, 0.0, u0, 1.0, OdeOpts::default(), |_, _| true);
        let exact = u0 * (-c).exp();
        assert!(((r.y - exact) / exact).abs() < 1e-9, "rel {}", ((r.y - exact) / exact).abs());
    }
}

//! Bracketed root finding and one-dimensional minimization.

/// Bisection on a bracketing interval; `f(a)` and `f(b)` must have
/// opposite signs. Returns the midpoint after convergence.
pub fn bisect<F: Fn(f64) -> f64>(f: &F, mut a: f64, mut b: f64, tol: f64) -> Option<f64> {
    let mut fa = f(a);
    let fb = f(b);
    if fa == 0.0 {
        return Some(a);
    }
    if fb == 0.0 {
        return Some(b);
    }
    if fa.signum() == fb.signum() || !fa.is_finite() || !fb.is_finite() {
        return None;
    }
    for _ in 0..400 {
        let m = 0.5 * (a + b);
        if (b - a).abs() <= tol * (1.0 + m.abs()) || m == a || m == b {
            return Some(m);
        }
        let fm = f(m);
        if fm == 0.0 {
            return Some(m);
        }
        if fm.signum() == fa.signum() {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
    }
    Some(0.5 * (a + b))
}

/// Golden-section minimization of a unimodal function on [a, b].
pub fn golden_min<F: Fn(f64) -> f64>(f: &F, mut a: f64, mut b: f64, tol: f64) -> (f64, f64) {
    const INV_PHI: f64 = 0.618_033_988_749_894_8;
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    for _ in 0..300 {
        if (b - a).abs() <= tol * (1.0 + a.abs().max(b.abs())) {
            break;
        }
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
    }
    let x = 0.5 * (a + b);
    (x, f(x))
}

/// Solves f(x) = target for strictly monotone f by expanding a bracket
/// around `seed` geometrically (in the additive sense) and bisecting.
pub fn solve_monotone<F: Fn(f64) -> f64>(
    f: &F,
    target: f64,
    seed: f64,
    initial_step: f64,
    lo_limit: f64,
    hi_limit: f64,
    tol: f64,
) -> Option<f64> {
    let g = |x: f64| f(x) - target;
    let g0 = g(seed);
    if g0 == 0.0 {
        return Some(seed);
    }
    let increasing = {
        let probe = (seed + initial_step).min(hi_limit);
        if probe > seed {
            f(probe) >= f(seed)
        } else {
            let probe = (seed - initial_step).max(lo_limit);
            f(seed) >= f(probe)
        }
    };
    // decide the search direction from the sign of the residual
    let go_up = (g0 < 0.0) == increasing;
    let mut step = initial_step.abs().max(1e-12);
    let mut prev = seed;
    for _ in 0..400 {
        let next = if go_up {
            (prev + step).min(hi_limit)
        } else {
            (prev - step).max(lo_limit)
        };
        if next == prev {
            return None;
        }
        let gn = g(next);
        if !gn.is_finite() {
            return None;
        }
        if gn == 0.0 {
            return Some(next);
        }
        if gn.signum() != g0.signum() {
            return bisect(&g, prev.min(next), prev.max(next), tol);
        }
        prev = next;
        step *= 2.0;
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bisect_sqrt2() {
        let r = bisect(&|x: f64| x * x - 2.0, 0.0, 2.0, 1e-14).unwrap();
        assert!((r - 2.0f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn golden_parabola() {
        let (x, _) = golden_min(&|x: f64| (x - 0.3).powi(2), -1.0, 1.0, 1e-12);
        assert!((x - 0.3).abs() < 1e-8);
    }

    #[test]
    fn monotone_solver_expands_bracket() {
        let r = solve_monotone(&|x: f64| x.exp(), 100.0, 0.0, 0.5, -1e9, 1e9, 1e-14).unwrap();
        assert!((r - 100.0f64.ln()).abs() < 1e-10);
    }
}

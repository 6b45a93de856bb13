//! Embedding a concave acceptable flow modulus into a globally concave
//! iteration group: average the log-slope g over unit windows, rebuild
//! the generating function from the averaged slope, and double the
//! time scale. The result strictly dominates the original f at time
//! one on the certified interval.

use super::{GeneratingFunction, InverseError};
use crate::moc_core::Moc;
use crate::num::quad::Cumulative;
use std::sync::Arc;

#[derive(Clone)]
pub struct ConcavifyResult {
    /// the averaged generating function h-bar
    pub h_bar: GeneratingFunction,
    /// generating function of the returned group j^t = f-bar^{2t}
    pub j: GeneratingFunction,
    /// the concave modulus mu = 2 (h-bar' o h-bar^{-1})
    pub mu: Moc,
    /// conclusions certified on (0, a)
    pub a: f64,
}

/// Builds the concave CIG dominating the group generated by `gf`.
///
/// Prerequisites are certified numerically on the generating
/// function's declared range [r_lo, r_hi]: g strictly increasing,
/// g(x) > g(x-1), g'(x) <= g'(x-1).
pub fn concavify_cig(gf: &GeneratingFunction) -> Result<ConcavifyResult, InverseError> {
    let (r_lo_decl, r_hi) = gf.range();
    let r_lo = r_lo_decl.max(r_hi - 48.0);
    let g_at = {
        let gf = gf.clone();
        move |r: f64| gf.g(r).unwrap_or(f64::NAN)
    };

    // prerequisite certificates on a uniform grid
    let n = 256;
    let dg = |r: f64| (g_at(r + 5e-6) - g_at(r - 5e-6)) / 1e-5;
    for i in 0..=n {
        let r = r_lo + (r_hi - r_lo) * i as f64 / n as f64;
        let gp = dg(r);
        if !(gp > 0.0) {
            return Err(InverseError::PrerequisiteFailed { which: "g' > 0", at: r });
        }
        if !(g_at(r) > g_at(r - 1.0)) {
            return Err(InverseError::PrerequisiteFailed { which: "g(x) > g(x-1)", at: r });
        }
        if !(dg(r) <= dg(r - 1.0) * (1.0 + 1e-7) + 1e-12) {
            return Err(InverseError::PrerequisiteFailed { which: "g'(x) <= g'(x-1)", at: r });
        }
    }

    // g-bar(x) = int_x^{x+1} g via a cached antiderivative of g
    let g_cum = Arc::new(Cumulative::new(
        {
            let g_at = g_at.clone();
            move |r: f64| g_at(r)
        },
        r_hi - 1.0,
        0.0,
    ));
    let g_bar = {
        let g_cum = g_cum.clone();
        Arc::new(move |x: f64| g_cum.value(x + 1.0) - g_cum.value(x))
    };
    let g_bar_prime = {
        let g_at = g_at.clone();
        Arc::new(move |x: f64| g_at(x + 1.0) - g_at(x))
    };

    // lower truncation point: the concavity of g-bar bounds the
    // remaining tail of int e^{g-bar} by e^{g-bar(v)}/g-bar'(v)
    let top = r_hi - 1.0;
    let mut v_tail = top - 8.0;
    let scale_mass = (g_bar(top)).exp() / g_bar_prime(top).max(1e-6);
    loop {
        let bound = (g_bar(v_tail)).exp() / g_bar_prime(v_tail).max(1e-12);
        if bound < 1e-15 * scale_mass || v_tail < r_lo - 600.0 {
            break;
        }
        v_tail -= 4.0;
    }

    let h_bar_cum = Arc::new(Cumulative::new(
        {
            let g_bar = g_bar.clone();
            move |v: f64| (g_bar(v)).exp()
        },
        v_tail,
        0.0,
    ));

    let a = gf.h(r_hi - 1.0)?;

    // h-bar as a generating function
    let h_bar_gf = {
        let c = h_bar_cum.clone();
        let c2 = h_bar_cum.clone();
        let gb = g_bar.clone();
        let gb2 = g_bar.clone();
        let hi_cap = top;
        GeneratingFunction::from_closures(
            move |r: f64| {
                if r > hi_cap || r < v_tail {
                    return None;
                }
                let v = c.value(r);
                if v > 0.0 {
                    Some(v.ln())
                } else {
                    None
                }
            },
            move |u: f64| {
                let x = u.exp();
                let slope = (gb2(hi_cap)).exp();
                c2.invert(x, hi_cap - 1.0, (x / slope).clamp(1e-8, 0.5), v_tail, hi_cap)
            },
            move |r: f64| {
                if r > hi_cap || r < v_tail {
                    None
                } else {
                    Some(gb(r))
                }
            },
            (a, 0.0),
            v_tail,
            top,
        )
    };

    // mu = 2 mu-bar, evaluated as ln mu = ln 2 + g-bar(h-bar^{-1}(x))
    let mu = {
        let hb = h_bar_gf.clone();
        Moc::from_log_fn(
            move |u: f64| match hb.h_inv_log(u).and_then(|r| hb.g(r)) {
                Ok(v) => std::f64::consts::LN_2 + v,
                Err(_) => f64::NAN,
            },
            a,
        )
    };

    // j^t = f-bar^{2t} is generated by r -> h-bar(2r)
    let j = {
        let hb = h_bar_gf.clone();
        let hb2 = h_bar_gf.clone();
        let hb3 = h_bar_gf.clone();
        GeneratingFunction::from_closures(
            move |r: f64| hb.h_log(2.0 * r).ok(),
            move |u: f64| hb2.h_inv_log(u).ok().map(|v| 0.5 * v),
            move |r: f64| hb3.g(2.0 * r).ok().map(|v| std::f64::consts::LN_2 + v),
            (a, 0.0),
            0.5 * v_tail,
            0.5 * top,
        )
    };

    Ok(ConcavifyResult { h_bar: h_bar_gf, j, mu, a })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::inverse_map::cig_from_generating;
    use crate::num::{quad, rel_diff};

    fn setup() -> (GeneratingFunction, ConcavifyResult) {
        let gf = GeneratingFunction::builtin(1);
        let res = concavify_cig(&gf).unwrap();
        (gf, res)
    }

    #[test]
    fn sandwich_inequality() {
        // h-bar(x) > h(x) > h-bar(x - 1) pointwise on the interval
        let (gf, res) = setup();
        let (v_tail, top) = res.h_bar.range();
        // stay where h-bar(r - 1) is still representable in f64
        let depth = (top - v_tail - 1.2).min(3.5);
        for k in 0..=20 {
            let r = top - depth * k as f64 / 20.0 - 0.01;
            let hb = res.h_bar.h(r).unwrap();
            let h = gf.h(r).unwrap();
            let hbm = res.h_bar.h(r - 1.0).unwrap();
            assert!(hb > h && h > hbm, "r {r}: {hb} {h} {hbm}");
        }
    }

    #[test]
    fn output_mu_is_concave_and_strictly_increasing() {
        let (_, res) = setup();
        let grid = crate::num::grid::log_grid(1e-9, 0.9 * res.a, 64);
        let mut prev = 0.0;
        let mut prev_slope = f64::INFINITY;
        let mut prev_x = 0.0;
        for &x in &grid {
            let v = res.mu.eval(x);
            assert!(v > prev, "monotone at {x:e}");
            if prev_x > 0.0 {
                let slope = (v - prev) / (x - prev_x);
                assert!(slope <= prev_slope * (1.0 + 1e-9), "concave at {x:e}");
                prev_slope = slope;
            }
            prev = v;
            prev_x = x;
        }
    }

    #[test]
    fn strict_concavity_of_mu_second_differences() {
        // strongly strictly concave input f gives strictly negative
        // second differences of mu
        let (_, res) = setup();
        let grid = crate::num::grid::log_grid(1e-6, 0.5 * res.a, 16);
        for w in grid.windows(3) {
            let (x0, x1, x2) = (w[0], w[1], w[2]);
            let d2 = (res.mu.eval(x2) - res.mu.eval(x1)) / (x2 - x1)
                - (res.mu.eval(x1) - res.mu.eval(x0)) / (x1 - x0);
            assert!(d2 < 0.0, "second difference at {x1:e}: {d2}");
        }
    }

    #[test]
    fn dominates_original_at_time_one() {
        // j^1 = f-bar^2 > f on (0, a)
        let (gf, res) = setup();
        // j^1 reaches 2 units up the generating function, so the check
        // range is the double-exponentially smaller head of (0, a)
        for &x in &[1e-30, 1e-22, 1e-16] {
            assert!(x < res.a);
            let j1 = cig_from_generating(&res.j, 1.0, x).unwrap();
            let f1 = cig_from_generating(&gf, 1.0, x).unwrap();
            assert!(j1 > f1, "x {x:e}: {j1} vs {f1}");
        }
    }

    #[test]
    fn unit_integral_of_inverse_mu_over_j_step() {
        // int_x^{j(x)} dr/mu(r) = 1
        let (_, res) = setup();
        for &x in &[1e-30f64, 1e-22, 1e-16] {
            let u_lo = x.ln();
            let u_hi = cig_from_generating(&res.j, 1.0, x).unwrap().ln();
            let mu = res.mu.clone();
            let v = quad::integrate(
                &move |u: f64| (-mu.eval_log_ratio(u)).exp(),
                u_lo,
                u_hi,
                0.0,
                1e-10,
            )
            .value;
            assert!((v - 1.0).abs() < 1e-6, "x {x:e}: {v}");
        }
    }

    #[test]
    fn j_group_law() {
        let (_, res) = setup();
        let x = 1e-20;
        let a = cig_from_generating(&res.j, 0.3, x).unwrap();
        let b = cig_from_generating(&res.j, 0.45, a).unwrap();
        let c = cig_from_generating(&res.j, 0.75, x).unwrap();
        assert!(rel_diff(b, c) < 1e-6, "{b} vs {c}");
    }

    #[test]
    fn prerequisite_violation_reported() {
        // a generating function with oscillating slope violates gpIneq
        let gf = GeneratingFunction::from_closures(
            |r: f64| Some(r + 0.3 * (2.0 * r).sin()),
            |u: f64| Some(u),
            |r: f64| Some(1.0 + 0.2 * (3.0 * r).sin()),
            (1.0, 0.0),
            -40.0,
            -1.0,
        );
        assert!(matches!(
            concavify_cig(&gf),
            Err(InverseError::PrerequisiteFailed { .. })
        ));
    }
}

//! Adaptive Gauss-Kronrod quadrature (G7/K15) with an error-ordered
//! interval heap, plus a march-to-target variant used for equal-mass
//! shell detection.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

// QUADPACK qk15 nodes and weights (positive half).
const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144838258730,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
];
const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

/// Single-panel K15 estimate with embedded G7 error estimate.
pub fn qk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut res_k = WGK[7] * fc;
    let mut res_g = WG[3] * fc;
    for j in 0..7 {
        let x = h * XGK[j];
        let f1 = f(c - x);
        let f2 = f(c + x);
        res_k += WGK[j] * (f1 + f2);
        if j % 2 == 1 {
            res_g += WG[j / 2] * (f1 + f2);
        }
    }
    let value = res_k * h;
    let err = ((res_k - res_g) * h).abs();
    (value, err)
}

struct Panel {
    a: f64,
    b: f64,
    value: f64,
    err: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.err == other.err
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.err.partial_cmp(&other.err).unwrap_or(Ordering::Equal)
    }
}

#[derive(Clone, Copy, Debug)]
pub struct QuadResult {
    pub value: f64,
    pub err: f64,
    pub converged: bool,
}

/// Adaptive integration of `f` over [a, b] to the requested tolerances.
pub fn integrate<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    abs_tol: f64,
    rel_tol: f64,
) -> QuadResult {
    integrate_with_breaks(f, a, b, &[], abs_tol, rel_tol, 20_000)
}

/// Adaptive integration with forced initial breakpoints (singular or
/// kink locations known in advance).
pub fn integrate_with_breaks<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    breaks: &[f64],
    abs_tol: f64,
    rel_tol: f64,
    max_panels: usize,
) -> QuadResult {
    if a == b {
        return QuadResult { value: 0.0, err: 0.0, converged: true };
    }
    let (lo, hi, sign) = if a < b { (a, b, 1.0) } else { (b, a, -1.0) };
    let mut pts: Vec<f64> = vec![lo];
    for &p in breaks {
        if p > lo && p < hi {
            pts.push(p);
        }
    }
    pts.push(hi);
    pts.sort_by(|x, y| x.partial_cmp(y).unwrap());
    pts.dedup();

    let mut heap: BinaryHeap<Panel> = BinaryHeap::new();
    let mut total = 0.0;
    let mut total_err = 0.0;
    for w in pts.windows(2) {
        let (v, e) = qk15(f, w[0], w[1]);
        total += v;
        total_err += e;
        heap.push(Panel { a: w[0], b: w[1], value: v, err: e });
    }

    let mut panels = pts.len() - 1;
    loop {
        let tol = abs_tol.max(rel_tol * total.abs());
        if total_err <= tol || panels >= max_panels {
            break;
        }
        let worst = match heap.pop() {
            Some(p) => p,
            None => break,
        };
        // Splitting a panel of width ~ulp cannot improve anything.
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            total_err -= worst.err;
            continue;
        }
        total -= worst.value;
        total_err -= worst.err;
        let (v1, e1) = qk15(f, worst.a, mid);
        let (v2, e2) = qk15(f, mid, worst.b);
        total += v1 + v2;
        total_err += e1 + e2;
        heap.push(Panel { a: worst.a, b: mid, value: v1, err: e1 });
        heap.push(Panel { a: mid, b: worst.b, value: v2, err: e2 });
        panels += 1;
    }

    let tol = abs_tol.max(rel_tol * total.abs());
    QuadResult { value: sign * total, err: total_err, converged: total_err <= tol }
}

/// Integrates leftward from `from` until the accumulated mass reaches
/// `target`, returning the left endpoint where it is hit. Used to find
/// equal-Osgood-mass shell boundaries. The integrand must be positive.
///
/// Marches with K15 panels whose width adapts to keep the per-panel
/// estimate a small fraction of the remaining mass.
pub fn march_left_to_mass<F: Fn(f64) -> f64>(
    f: &F,
    from: f64,
    target: f64,
    hard_lo: f64,
) -> Option<f64> {
    assert!(target > 0.0);
    let mut hi = from;
    let mut acc = 0.0;
    // initial guess: width that would reach the target at the current level
    let f0 = f(from).max(f64::MIN_POSITIVE);
    let mut h = (target / f0 * 0.25).max(1e-12 * from.abs().max(1.0));
    for _ in 0..1_000_000 {
        let lo = (hi - h).max(hard_lo);
        if lo >= hi {
            return None;
        }
        let (v, e) = qk15(f, lo, hi);
        if e > 1e-9 * target + 1e-12 * v.abs() {
            h *= 0.5;
            continue;
        }
        if acc + v >= target {
            // bisect inside [lo, hi] for the exact boundary
            let mut a = lo;
            let mut b = hi;
            for _ in 0..200 {
                let m = 0.5 * (a + b);
                let (vm, _) = qk15(f, m, hi);
                if acc + vm >= target {
                    a = m;
                } else {
                    b = m;
                }
                if (b - a).abs() <= 1e-14 * b.abs().max(1e-300) {
                    break;
                }
            }
            return Some(0.5 * (a + b));
        }
        acc += v;
        hi = lo;
        if hi <= hard_lo {
            return None;
        }
        h *= 1.6;
    }
    None
}

/// Cached cumulative integral F(x) = int_{anchor}^{x} f, with segments
/// between previously-visited points integrated adaptively on demand.
pub struct Cumulative {
    integrand: std::sync::Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    knots: std::sync::Mutex<Vec<(f64, f64)>>,
}

impl Clone for Cumulative {
    fn clone(&self) -> Self {
        Cumulative {
            integrand: self.integrand.clone(),
            knots: std::sync::Mutex::new(self.knots.lock().unwrap().clone()),
        }
    }
}

impl Cumulative {
    pub fn new<F>(integrand: F, anchor: f64, anchor_value: f64) -> Self
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        Cumulative {
            integrand: std::sync::Arc::new(integrand),
            knots: std::sync::Mutex::new(vec![(anchor, anchor_value)]),
        }
    }

    pub fn value(&self, x: f64) -> f64 {
        if !x.is_finite() {
            return f64::NAN;
        }
        let mut knots = self.knots.lock().unwrap();
        // anchor from the nearest knot at or below x: with a positive
        // integrand the segment only adds mass, so values spanning many
        // orders of magnitude never cancel
        let idx = knots
            .binary_search_by(|k| k.0.partial_cmp(&x).unwrap())
            .map(|i| i as isize)
            .unwrap_or_else(|i| i as isize - 1);
        let pick = if idx < 0 { 0 } else { idx as usize };
        let (x0, f0) = knots[pick];
        if x == x0 {
            return f0;
        }
        let g = self.integrand.clone();
        let seg = integrate_with_breaks(&move |v| g(v), x0, x, &[], 0.0, 1e-12, 60_000);
        let f = f0 + seg.value;
        let pos = knots
            .binary_search_by(|k| k.0.partial_cmp(&x).unwrap())
            .unwrap_or_else(|i| i);
        if pos == knots.len() || knots[pos].0 != x {
            knots.insert(pos, (x, f));
            if knots.len() > 4096 {
                let keep: Vec<(f64, f64)> = knots.iter().step_by(2).copied().collect();
                *knots = keep;
            }
        }
        f
    }

    /// Solves F(x) = target for strictly monotone F (positive integrand).
    pub fn invert(&self, target: f64, seed: f64, initial_step: f64, lo: f64, hi: f64) -> Option<f64> {
        crate::num::roots::solve_monotone(&|x| self.value(x), target, seed, initial_step, lo, hi, 1e-13)
    }
}

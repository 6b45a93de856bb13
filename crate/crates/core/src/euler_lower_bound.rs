//! Desk-scale verification of the lower-bound machinery: axis velocity
//! of square-symmetric vorticity by 2D Biot-Savart quadrature, the
//! scaled square bounds, the lower-bound trajectory ODE, Holder
//! quotient diagnostics, and L^p norms of the log-singular profiles.

use crate::forward_map::FlowFamily;
use crate::moc_core::{iter_exp, BuiltinFamily};
use crate::num::{interp::MonotoneCubic, ode, quad, quad2d, roots};
use std::sync::Arc;
use thiserror::Error;

type F1 = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

#[derive(Debug, Error)]
pub enum EulerError {
    #[error("2D quadrature failed to converge (error {err:e} on value {value:e})")]
    QuadratureNonconvergent { err: f64, value: f64 },
    #[error("argument {x:e} outside the working interval (0, {hi:e}]")]
    DomainExceeded { x: f64, hi: f64 },
    #[error("flow bound unavailable: {0}")]
    Flow(#[from] crate::forward_map::ForwardError),
    #[error("starting point {a:e} outside the certified neighborhood (0, {hi:e}]")]
    LeftNeighborhood { a: f64, hi: f64 },
}

/// A nonincreasing axis profile defining a square-symmetric vorticity:
/// on the first quadrant the value at (y1, y2) is the axis value at
/// max(y1, y2).
#[derive(Clone)]
pub struct SquareSymmetricVorticity {
    axis: F1,
    r_max: f64,
    /// optional layer density: axis(x1) = 2 pi int_{x1}^{1} density
    density: Option<F1>,
}

impl std::fmt::Debug for SquareSymmetricVorticity {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SquareSymmetricVorticity")
            .field("r_max", &self.r_max)
            .finish()
    }
}

impl SquareSymmetricVorticity {
    pub fn from_axis<F>(axis: F, r_max: f64) -> Self
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        SquareSymmetricVorticity { axis: Arc::new(axis), r_max, density: None }
    }

    /// 2 pi on the square [0, r]^2.
    pub fn indicator(r: f64) -> Self {
        SquareSymmetricVorticity {
            axis: Arc::new(move |x: f64| if x <= r { 2.0 * std::f64::consts::PI } else { 0.0 }),
            r_max: r,
            density: None,
        }
    }

    /// The bounded-vorticity example: 1 on [0, 1/2]^2.
    pub fn bounded_half() -> Self {
        SquareSymmetricVorticity {
            axis: Arc::new(|x: f64| if x <= 0.5 { 1.0 } else { 0.0 }),
            r_max: 0.5,
            density: None,
        }
    }

    /// The m = 2 singular profile: loglog(1/x1) on (0, 1/e).
    pub fn m2_profile() -> Self {
        let r_max = (-1.0f64).exp();
        SquareSymmetricVorticity {
            axis: Arc::new(move |x: f64| {
                if x > 0.0 && x < r_max {
                    (1.0 / x).ln().ln()
                } else {
                    0.0
                }
            }),
            r_max,
            density: None,
        }
    }

    /// Layered profile from a nonnegative density on (0, 1).
    pub fn from_density<F>(density: F) -> Self
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        let d: F1 = Arc::new(density);
        let d2 = d.clone();
        let axis = move |x1: f64| {
            if x1 >= 1.0 {
                return 0.0;
            }
            let g = |s: f64| d2(s);
            2.0 * std::f64::consts::PI * quad::integrate(&g, x1, 1.0, 1e-14, 1e-10).value
        };
        SquareSymmetricVorticity { axis: Arc::new(axis), r_max: 1.0, density: Some(d) }
    }

    pub fn axis(&self, x1: f64) -> f64 {
        if x1 >= self.r_max {
            0.0
        } else {
            (self.axis)(x1)
        }
    }

    pub fn value_q1(&self, y1: f64, y2: f64) -> f64 {
        self.axis(y1.max(y2))
    }

    pub fn r_max(&self) -> f64 {
        self.r_max
    }

    pub fn density(&self, s: f64) -> Option<f64> {
        self.density.as_ref().map(|d| d(s))
    }
}

/// f1 and f2, the attracting and repelling kernel parts on Q1.
pub fn kernel_f1(x1: f64, y1: f64, y2: f64) -> f64 {
    y2 / ((x1 - y1).powi(2) + y2 * y2)
}

pub fn kernel_f2(x1: f64, y1: f64, y2: f64) -> f64 {
    y2 / ((x1 + y1).powi(2) + y2 * y2)
}

/// Axis velocity v1(x1, 0) = (1/pi) int_{Q1} (f1 - f2) w dy by adaptive
/// 2D quadrature; the integrable 1/|x-y| singularity at (x1, 0) is
/// resolved by the error-driven refinement, seeded with cuts at the
/// singular abscissa and the support edge.
pub fn biot_savart_axis(
    w: &SquareSymmetricVorticity,
    x1: f64,
) -> Result<f64, EulerError> {
    assert!(x1 > 0.0);
    let r = w.r_max();
    let wf = w.clone();
    let f = move |y1: f64, y2: f64| {
        let om = wf.value_q1(y1, y2);
        if om == 0.0 {
            0.0
        } else {
            (kernel_f1(x1, y1, y2) - kernel_f2(x1, y1, y2)) * om
        }
    };
    let mut cuts_x = vec![x1];
    let mut cuts_y = Vec::new();
    // geometric grading toward the singular point: shells shrink until
    // their total contribution (O(d)) is below tolerance
    for k in 1..=44 {
        let d = x1 * 0.5f64.powi(k);
        if d < 4.0 * f64::EPSILON * x1 {
            break;
        }
        cuts_x.push(x1 - d);
        cuts_x.push(x1 + d);
        cuts_y.push(d);
    }
    let res = quad2d::integrate2d(
        &f,
        quad2d::Rect { x0: 0.0, x1: r, y0: 0.0, y1: r },
        &cuts_x,
        &cuts_y,
        1e-14,
        1e-6,
        400_000,
    );
    let value = res.value / std::f64::consts::PI;
    if !res.converged && res.err / std::f64::consts::PI > 1e-4 * value.abs() {
        return Err(EulerError::QuadratureNonconvergent { err: res.err, value });
    }
    Ok(value)
}

/// Exact-decomposition oracle for the indicator vorticity
/// 2 pi 1_{[0,r]^2}: v1 = -4 x1 ln x1 + phi_r(x1) + psi_r(x1), with
/// phi_r in closed form and psi_r by 1D quadrature. Kept free of any
/// 2D machinery so it can check the quadrature path.
pub fn indicator_axis_oracle(r: f64, x1: f64) -> f64 {
    let phi_r = 2.0 * (r + x1) * (r + x1).ln() - 2.0 * (r - x1) * (r - x1).abs().ln();
    let psi = |y1: f64| {
        (((x1 - y1).powi(2) + r * r) / ((x1 + y1).powi(2) + r * r)).ln()
    };
    let psi_r = quad::integrate_with_breaks(&psi, 0.0, r, &[x1], 0.0, 1e-12, 40_000).value;
    -4.0 * x1 * x1.ln() + phi_r + psi_r
}

/// |v1^r(x1) - r v1^1(x1/r)| / v1^1(x1/r) for the indicator vorticity,
/// from two independent 2D quadratures.
pub fn scaling_check(r: f64, x1: f64) -> Result<f64, EulerError> {
    assert!(x1 > 0.0 && x1 < r && r < 1.0);
    let v_r = biot_savart_axis(&SquareSymmetricVorticity::indicator(r), x1)?;
    let v_1 = biot_savart_axis(&SquareSymmetricVorticity::indicator(1.0), x1 / r)?;
    Ok((v_r - r * v_1).abs() / v_1)
}

#[derive(Clone, Copy, Debug)]
pub struct LowerBoundConfig {
    pub lambda: f64,
    pub c_lambda: f64,
    pub neighborhood_hi: f64,
    pub t_max: f64,
}

impl LowerBoundConfig {
    pub fn new(lambda: f64) -> Self {
        assert!(lambda > 0.0 && lambda < 1.0);
        LowerBoundConfig {
            lambda,
            c_lambda: (1.0 - lambda) / std::f64::consts::PI,
            neighborhood_hi: 1e-2,
            t_max: 1.0,
        }
    }

    pub fn with_neighborhood(mut self, hi: f64) -> Self {
        self.neighborhood_hi = hi;
        self
    }
}

/// L(t, x1) = C_lambda w0(Gamma_t(2^{lambda/2} x1^lambda), 0) x1 ln(1/x1);
/// the static t = 0 form omits the 2^{lambda/2} factor. Falling off
/// the profile support gives 0; only losing the flow itself errors.
pub fn lower_bound_velocity(
    w: &SquareSymmetricVorticity,
    cfg: &LowerBoundConfig,
    gamma: Option<&FlowFamily>,
    t: f64,
    x1: f64,
) -> Result<f64, EulerError> {
    if !(x1 > 0.0 && x1 <= cfg.neighborhood_hi) {
        return Err(EulerError::DomainExceeded { x: x1, hi: cfg.neighborhood_hi });
    }
    let base = cfg.c_lambda * x1 * (1.0 / x1).ln();
    let omega = match gamma {
        None => {
            assert!(t == 0.0, "the static bound form is only for t = 0");
            w.axis(x1.powf(cfg.lambda))
        }
        Some(flow) => {
            let arg_log = 0.5 * cfg.lambda * std::f64::consts::LN_2 + cfg.lambda * x1.ln();
            let moved = flow.gamma_log(t, arg_log)?;
            w.axis(moved.exp())
        }
    };
    Ok(base * omega)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TrajectorySource {
    Ode,
    ClosedForm,
}

/// A lower-bound trajectory x1(t) with dense evaluation in
/// v = ln(1/x1) (so arbitrarily deep starting points stay exact).
#[derive(Clone, Debug)]
pub struct FlowLowerBound {
    /// (t, ln(1/x1)) samples, increasing in t
    pub trajectory_log: Vec<(f64, f64)>,
    pub a: f64,
    pub source: TrajectorySource,
    pub truncated: bool,
    interp: MonotoneCubic,
}

impl FlowLowerBound {
    fn build(samples: Vec<(f64, f64)>, a: f64, source: TrajectorySource, truncated: bool) -> Self {
        let xs: Vec<f64> = samples.iter().map(|s| s.0).collect();
        let ys: Vec<f64> = samples.iter().map(|s| s.1).collect();
        let interp = MonotoneCubic::new(xs, ys);
        FlowLowerBound { trajectory_log: samples, a, source, truncated, interp }
    }

    /// ln(1/x1(t)).
    pub fn v_at(&self, t: f64) -> f64 {
        self.interp.eval(t)
    }

    pub fn x1_at(&self, t: f64) -> f64 {
        (-self.v_at(t)).exp()
    }

    /// Closed form for the bounded case: x1(t) = a^{exp(-C t)}.
    pub fn closed_form_bounded(cfg: &LowerBoundConfig, a: f64, t_grid: &[f64]) -> Self {
        let v0 = -(a.ln());
        let samples: Vec<(f64, f64)> = t_grid
            .iter()
            .map(|&t| (t, v0 * (-cfg.c_lambda * t).exp()))
            .collect();
        Self::build(samples, a, TrajectorySource::ClosedForm, false)
    }

    /// Closed form for the m = 2 reduced model dx/dt =
    /// c' e^{-ct} x theta_2(1/x): ln(1/x1(t)) = (ln(1/a))^gamma with
    /// gamma = exp((c'/c)(e^{-ct} - 1)).
    pub fn closed_form_m2(c_prime: f64, c_decay: f64, a: f64, t_grid: &[f64]) -> Self {
        let v0 = -(a.ln());
        let samples: Vec<(f64, f64)> = t_grid
            .iter()
            .map(|&t| {
                let gamma = ((c_prime / c_decay) * ((-c_decay * t).exp() - 1.0)).exp();
                (t, v0.powf(gamma))
            })
            .collect();
        Self::build(samples, a, TrajectorySource::ClosedForm, false)
    }
}

/// Right-hand-side models for the lower-bound trajectory.
pub enum BoundModel<'a> {
    /// the full bound with the flow-shifted argument
    Full { w: &'a SquareSymmetricVorticity, gamma: &'a FlowFamily },
    /// dx/dt = C_lambda x ln(1/x), the bounded-vorticity reduction
    BoundedReduced,
    /// dx/dt = c' e^{-ct} x theta_2(1/x), the m = 2 reduction
    M2Reduced { c_prime: f64, c_decay: f64 },
}

/// Integrates dx1/dt = L(t, x1) from x1(0) = a over the grid, in
/// v = ln(1/x1). Leaving the certified neighborhood truncates the
/// trajectory and flags it.
pub fn propagate_lower_bound(
    model: &BoundModel<'_>,
    cfg: &LowerBoundConfig,
    a: f64,
    t_grid: &[f64],
) -> Result<FlowLowerBound, EulerError> {
    if !(a > 0.0) || a > cfg.neighborhood_hi {
        return Err(EulerError::LeftNeighborhood { a, hi: cfg.neighborhood_hi });
    }
    // dv/dt = -L(t, x)/x with v = ln(1/x)
    let rhs = |t: f64, v: f64| -> f64 {
        match model {
            BoundModel::BoundedReduced => -cfg.c_lambda * v,
            BoundModel::M2Reduced { c_prime, c_decay } => {
                -c_prime * (-c_decay * t).exp() * v * v.ln()
            }
            BoundModel::Full { w, gamma } => {
                let arg_log = 0.5 * cfg.lambda * std::f64::consts::LN_2 - cfg.lambda * v;
                match gamma.gamma_log(t, arg_log) {
                    Ok(moved) => -cfg.c_lambda * w.axis(moved.exp()) * v,
                    Err(_) => f64::NAN,
                }
            }
        }
    };
    let v_floor = -(cfg.neighborhood_hi.ln());
    let mut samples = Vec::with_capacity(t_grid.len());
    let mut v = -(a.ln());
    let mut t_prev = 0.0;
    let mut truncated = false;
    samples.push((0.0, v));
    for &t in t_grid.iter().filter(|&&t| t > 0.0) {
        if truncated {
            samples.push((t, v_floor));
            continue;
        }
        let opts = ode::OdeOpts { rel_tol: 1e-10, abs_tol: 1e-14, max_steps: 2_000_000 };
        let r = ode::integrate(&rhs, t_prev, v, t, opts, |_, vv| vv >= v_floor && vv.is_finite());
        if r.stopped || !r.y.is_finite() {
            truncated = true;
            v = v_floor;
        } else {
            v = r.y;
        }
        t_prev = t;
        samples.push((t, v));
    }
    Ok(FlowLowerBound::build(samples, a, TrajectorySource::Ode, truncated))
}

#[derive(Clone, Debug)]
pub struct HolderReport {
    pub a_seq: Vec<f64>,
    /// ln of x1(t; a) / a^alpha per starting point
    pub log_quotients: Vec<f64>,
    /// multiplicative growth per decade of a, between consecutive points
    pub per_decade_factors: Vec<f64>,
    /// total growth across the sampled range
    pub total_factor: f64,
    pub decades_spanned: f64,
    pub diverging: bool,
}

/// Quotients x1(t; a)/a^alpha over a decreasing sequence of starting
/// points. The verdict `diverging` certifies monotone growth with a
/// total factor of at least 10 across a window of at least 4 decades.
pub fn holder_quotient<F>(
    make: F,
    t: f64,
    alpha: f64,
    a_seq: &[f64],
) -> Result<HolderReport, EulerError>
where
    F: Fn(f64) -> Result<FlowLowerBound, EulerError>,
{
    let mut log_q = Vec::with_capacity(a_seq.len());
    for &a in a_seq {
        let fb = make(a)?;
        // ln q = -v(t) - alpha ln a
        log_q.push(-fb.v_at(t) - alpha * a.ln());
    }
    let mut per_decade = Vec::new();
    let mut monotone = true;
    for i in 1..a_seq.len() {
        let decades = (a_seq[i - 1] / a_seq[i]).log10();
        let growth = log_q[i] - log_q[i - 1];
        per_decade.push((growth / decades.max(1e-12)).exp());
        if growth <= 0.0 {
            monotone = false;
        }
    }
    let total = (log_q.last().unwrap() - log_q[0]).exp();
    let decades = (a_seq[0] / a_seq.last().unwrap()).log10();
    Ok(HolderReport {
        a_seq: a_seq.to_vec(),
        log_quotients: log_q,
        per_decade_factors: per_decade,
        total_factor: total,
        decades_spanned: decades,
        diverging: monotone && decades >= 4.0 && total >= 10.0,
    })
}

#[derive(Clone, Copy, Debug)]
pub struct LpNormResult {
    pub log_norm: f64,
    pub norm: f64,
    /// norm / theta_{m-1}(p)
    pub ratio_to_theta: f64,
}

/// ||w0||_p for the m-th singular profile via the u = ln(1/x1)
/// substitution: ||w0||_p^p = 8 int e^{-2u} theta_{m-1}(e^u)^p du,
/// evaluated in log space around its maximizer.
pub fn lp_norm_singular(m: u32, p: f64) -> Result<LpNormResult, EulerError> {
    assert!(m >= 2, "the singular profiles start at m = 2");
    let lower = iter_exp(m - 1, 0.0).expect("m too large");
    assert!(p > lower, "p must exceed exp^{{m-1}}(0)");
    let fam = BuiltinFamily::new(m - 1);
    // S(u) = -2u + p ln theta_{m-1}(u)
    let s = |u: f64| match fam.log_theta_from_l1(u.ln()) {
        Some(lt) => -2.0 * u + p * lt,
        None => f64::NEG_INFINITY,
    };
    // the maximizer sits near u = p/2 (where 2 = d/du [p ln theta])
    let (u_star, neg) = roots::golden_min(&|u: f64| -s(u), lower + 1e-9, 20.0 * p, 1e-12);
    let s_star = -neg;
    let g = |u: f64| (s(u) - s_star).exp();
    let mut w = (0.25 * u_star).max(1.0);
    let mut total = quad::integrate(&g, (u_star - w).max(lower), u_star + w, 0.0, 1e-11).value;
    for _ in 0..80 {
        let left = quad::integrate(
            &g,
            (u_star - 2.0 * w).max(lower),
            (u_star - w).max(lower),
            0.0,
            1e-11,
        )
        .value;
        let right = quad::integrate(&g, u_star + w, u_star + 2.0 * w, 0.0, 1e-11).value;
        let inc = left + right;
        total += inc;
        w *= 2.0;
        if inc <= 1e-12 * total {
            let log_norm = (8.0f64.ln() + s_star + total.ln()) / p;
            let log_theta = fam.log_theta_from_l1(p.ln()).unwrap_or(f64::NAN);
            return Ok(LpNormResult {
                log_norm,
                norm: log_norm.exp(),
                ratio_to_theta: (log_norm - log_theta).exp(),
            });
        }
    }
    Err(EulerError::QuadratureNonconvergent { err: total, value: total })
}

/// Bound of the iterated-log comparison lemma:
/// log(xp) ... log^{m-1}(xp) <= theta_{m-1}(p) e^{x-1} for x >= 1.
pub fn loglog_ineq_margin(m: u32, p: f64, x: f64) -> f64 {
    let fam = BuiltinFamily::new(m - 1);
    let lhs = fam.log_theta_from_l1((x * p).ln()).unwrap_or(f64::NAN);
    let rhs = fam.log_theta_from_l1(p.ln()).unwrap_or(f64::NAN) + (x - 1.0);
    rhs - lhs
}

/// Static neighborhood certificate: v1(x1, 0) >= C_lambda
/// w(x1^lambda, 0) x1 ln(1/x1) checked by quadrature at the given
/// points; returns the margin per point.
pub fn static_bound_margins(
    w: &SquareSymmetricVorticity,
    cfg: &LowerBoundConfig,
    points: &[f64],
) -> Result<Vec<(f64, f64)>, EulerError> {
    let mut out = Vec::with_capacity(points.len());
    for &x1 in points {
        let v = biot_savart_axis(w, x1)?;
        let bound = lower_bound_velocity(w, cfg, None, 0.0, x1)?;
        out.push((x1, v - bound));
    }
    Ok(out)
}

pub use crate::num::grid::log_grid as holder_grid;

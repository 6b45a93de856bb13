//! Certified diagnostics for a modulus: monotonicity and concavity
//! flags with witnesses, Osgood shell sums, Dini samples, the A-curve
//! with its extrapolated limit, and the second-order margin.

use super::ops::{dini_transform, osgood_shells_below, yudocond_margin};
use super::{LambdaCurve, Moc, MocError};
use crate::num::grid::log_grid;

/// A boolean certified on an explicit grid, never claimed globally.
#[derive(Clone, Debug)]
pub struct CertifiedFlag {
    pub holds: bool,
    /// First grid point violating the property, when any.
    pub witness: Option<f64>,
    pub grid_lo: f64,
    pub grid_hi: f64,
    pub grid_len: usize,
}

#[derive(Clone, Debug)]
pub struct DiagnosticsOpts {
    pub x_lo: f64,
    pub x_hi: f64,
    pub points_per_decade: usize,
    pub shell_mass: f64,
    pub n_shells: usize,
}

impl Default for DiagnosticsOpts {
    fn default() -> Self {
        DiagnosticsOpts {
            x_lo: 1e-12,
            x_hi: 1e-2,
            points_per_decade: 512,
            shell_mass: 1.0,
            n_shells: 20,
        }
    }
}

#[derive(Clone, Debug)]
pub struct DiagnosticsReport {
    pub is_strictly_increasing: CertifiedFlag,
    pub is_concave: CertifiedFlag,
    pub is_strongly_strictly_concave: CertifiedFlag,
    /// Cumulative Osgood mass over consecutive equal-mass shells below
    /// x_lo; divergence is certified by every shell meeting its target.
    pub osgood_partial_sums: Vec<f64>,
    pub osgood_shell_integrals: Vec<f64>,
    pub osgood_shell_mass: f64,
    pub osgood_diverges: bool,
    /// (x, S_mu(x)) samples.
    pub dini_value_at: Vec<(f64, f64)>,
    pub dini_finite: bool,
    /// (x, A(x)) samples.
    pub a_curve: Vec<(f64, f64)>,
    /// Limit of A at 0 extrapolated in 1/log(1/x) from the tail.
    pub a_limit_estimate: f64,
    /// (x, x^2 mu'' - x mu' + mu) samples.
    pub yudocond_margin: Vec<(f64, f64)>,
    pub lambda_strictly_concave: CertifiedFlag,
}

pub fn diagnostics(mu: &Moc, opts: &DiagnosticsOpts) -> Result<DiagnosticsReport, MocError> {
    let grid = log_grid(opts.x_lo, opts.x_hi.min(mu.domain_hi()), opts.points_per_decade);
    let vals: Vec<f64> = grid.iter().map(|&x| mu.eval(x)).collect();

    // strict increase
    let mut increasing = CertifiedFlag {
        holds: true,
        witness: None,
        grid_lo: grid[0],
        grid_hi: *grid.last().unwrap(),
        grid_len: grid.len(),
    };
    for i in 1..grid.len() {
        if vals[i] <= vals[i - 1] {
            increasing.holds = false;
            increasing.witness = Some(grid[i]);
            break;
        }
    }

    // concavity via decreasing chord slopes
    let mut concave = increasing.clone();
    concave.holds = true;
    concave.witness = None;
    let mut strong = concave.clone();
    let mut prev_slope = f64::INFINITY;
    for i in 1..grid.len() {
        let slope = (vals[i] - vals[i - 1]) / (grid[i] - grid[i - 1]);
        if slope > prev_slope * (1.0 + 1e-9) + 1e-9 {
            if concave.holds {
                concave.holds = false;
                concave.witness = Some(grid[i]);
            }
        }
        if slope >= prev_slope {
            if strong.holds && i > 1 {
                strong.holds = false;
                strong.witness = Some(grid[i]);
            }
        }
        prev_slope = slope;
    }

    // Osgood shells below x_lo
    let shells = osgood_shells_below(mu, opts.x_lo, opts.shell_mass, opts.n_shells);
    let (shell_integrals, diverges) = match shells {
        Ok(s) => {
            let ok = s
                .integrals
                .iter()
                .all(|&v| v >= opts.shell_mass * (1.0 - 1e-4));
            (s.integrals, ok)
        }
        Err(_) => (Vec::new(), false),
    };
    let mut partial = Vec::with_capacity(shell_integrals.len());
    let mut acc = 0.0;
    for &v in &shell_integrals {
        acc += v;
        partial.push(acc);
    }

    // Dini samples
    let mut dini_value_at = Vec::new();
    let dini_finite = match dini_transform(mu) {
        Ok(s) => {
            for &x in &[opts.x_lo, (opts.x_lo * opts.x_hi).sqrt(), opts.x_hi.min(mu.domain_hi())]
            {
                dini_value_at.push((x, s.eval(x)));
            }
            true
        }
        Err(_) => false,
    };

    // A-curve on a coarse log grid plus tail extrapolation in 1/log(1/x)
    let a_grid = log_grid(opts.x_lo, opts.x_hi.min(mu.domain_hi()), 4);
    let mut a_curve = Vec::with_capacity(a_grid.len());
    for &x in &a_grid {
        a_curve.push((x, mu.a_ratio_at(x)?));
    }
    let a_limit_estimate = {
        let (x1, a1) = a_curve[0];
        let (x2, a2) = a_curve[1.min(a_curve.len() - 1)];
        let t1 = 1.0 / (1.0 / x1).ln();
        let t2 = 1.0 / (1.0 / x2).ln();
        if (t2 - t1).abs() > 0.0 {
            a1 - t1 * (a2 - a1) / (t2 - t1)
        } else {
            a1
        }
    };

    // margin samples
    let m_grid = log_grid(opts.x_lo, opts.x_hi.min(mu.domain_hi()), 4);
    let margin_rep = yudocond_margin(mu, &m_grid)?;
    let yudo: Vec<(f64, f64)> =
        m_grid.iter().copied().zip(margin_rep.margin.iter().copied()).collect();

    // lambda strict concavity on the matching r-range
    let lam = LambdaCurve::new(mu.clone(), -(opts.x_hi.min(mu.domain_hi()).ln()), -(opts.x_lo.ln()));
    let (r_lo, r_hi) = lam.range();
    let n_r = 64;
    let mut lambda_flag = CertifiedFlag {
        holds: true,
        witness: None,
        grid_lo: r_lo,
        grid_hi: r_hi,
        grid_len: n_r + 1,
    };
    let mut prev_d1 = f64::INFINITY;
    for i in 0..=n_r {
        let r = r_lo + (r_hi - r_lo) * i as f64 / n_r as f64;
        let d1 = lam.d1(r)?;
        if d1 >= prev_d1 {
            lambda_flag.holds = false;
            lambda_flag.witness = Some(r);
            break;
        }
        prev_d1 = d1;
    }

    Ok(DiagnosticsReport {
        is_strictly_increasing: increasing,
        is_concave: concave,
        is_strongly_strictly_concave: strong,
        osgood_partial_sums: partial,
        osgood_shell_integrals: shell_integrals,
        osgood_shell_mass: opts.shell_mass,
        osgood_diverges: diverges,
        dini_value_at,
        dini_finite,
        a_curve,
        a_limit_estimate,
        yudocond_margin: yudo,
        lambda_strictly_concave: lambda_flag,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::moc_core::BuiltinFamily;

    #[test]
    fn mu1_full_report() {
        let mu = BuiltinFamily::new(1).mu();
        let opts = DiagnosticsOpts {
            x_hi: 0.9 * mu.domain_hi(),
            points_per_decade: 64,
            ..Default::default()
        };
        let rep = diagnostics(&mu, &opts).unwrap();
        assert!(rep.is_strictly_increasing.holds);
        assert!(rep.is_concave.holds);
        assert!(rep.osgood_diverges);
        assert!(rep.dini_finite);
        assert!((rep.a_limit_estimate - 1.0).abs() < 1e-2);
        assert!(rep.lambda_strictly_concave.holds);
        for &(_, m) in &rep.yudocond_margin {
            assert!(m >= -1e-9);
        }
    }

    #[test]
    fn non_concave_modulus_flagged() {
        let mu = crate::moc_core::Moc::from_fn(|x: f64| x * x, 1.0);
        let opts = DiagnosticsOpts {
            x_lo: 1e-4,
            x_hi: 0.5,
            points_per_decade: 32,
            shell_mass: 4000.0,
            n_shells: 3,
        };
        let rep = diagnostics(&mu, &opts).unwrap();
        assert!(!rep.is_concave.holds);
        assert!(rep.is_concave.witness.is_some());
    }

    #[test]
    fn non_osgood_modulus_shells_fail() {
        // sqrt(x): the Osgood integral below any point converges (to
        // 2 sqrt(x)), so no equal-mass shell sequence exists
        let mu = crate::moc_core::Moc::from_log_ratio(|u: f64| -0.5 * u, 1.0);
        let opts = DiagnosticsOpts {
            x_lo: 1e-4,
            x_hi: 0.5,
            points_per_decade: 16,
            shell_mass: 1.0,
            n_shells: 5,
        };
        let rep = diagnostics(&mu, &opts).unwrap();
        assert!(!rep.osgood_diverges);
    }
}

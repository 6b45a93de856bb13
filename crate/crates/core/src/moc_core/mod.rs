//! Core modulus-of-continuity representation and the diagnostic
//! calculus (Osgood, Dini, concavity, A(x), the lambda curve and the
//! second-order margin) consumed by every other module.

mod builtin;
mod diagnostics;
mod lambda;
mod moc;
mod ops;

pub use builtin::{iter_log, iter_exp, BuiltinFamily};
pub use diagnostics::{diagnostics, CertifiedFlag, DiagnosticsOpts, DiagnosticsReport};
pub use lambda::{lambda_of, LambdaCurve};
pub use moc::Moc;
pub use ops::{
    a_ratio, dini_transform, osgood_integral, osgood_integral_log, osgood_shells_below,
    yudocond_margin, OsgoodShells, YudocondReport,
};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum MocError {
    #[error("modulus is non-positive at x = {x:e} (value {value:e})")]
    NonPositiveMoc { x: f64, value: f64 },
    #[error("Dini integral fails to converge: increment {increment:e} at lower limit {at:e}")]
    DiniDivergence { at: f64, increment: f64 },
    #[error("argument {x:e} exceeds the validity interval (0, {domain_hi:e}]")]
    DomainExceeded { x: f64, domain_hi: f64 },
    #[error("no usable derivative at x = {x:e}")]
    DerivativeUnavailable { x: f64 },
    #[error("quadrature failed to converge (residual error {err:e})")]
    QuadratureNonconvergent { err: f64 },
}

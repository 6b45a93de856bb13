//! The inverse constructions: a velocity modulus from the flow modulus
//! at a single time (via the orbit functional equation), concave
//! iteration-group embedding through generating functions, and
//! recovery of the L^p profile from the velocity modulus.

mod concave;
mod functional;
mod generating;
mod invert_theta;

pub use concave::{concavify_cig, ConcavifyResult};
pub use functional::{mu_from_gamma_single_time, AcceptableMoc, InverseMocResult};
pub use generating::{cig_from_generating, generating_from_mu, GeneratingFunction};
pub use invert_theta::{legendre_transform, log_alpha_from_eps_curve, theta_from_mu};

use crate::moc_core::MocError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum InverseError {
    #[error("f'(x) <= 1 at x = {x:e}: not acceptable on the needed orbit")]
    NotAcceptable { x: f64 },
    #[error("mu(a) = {given:e} outside the admissible open interval ({lo:e}, {hi:e})")]
    BadMuA { given: f64, lo: f64, hi: f64 },
    #[error("seed curve cannot meet the integral condition after {0} bisections")]
    SeedShapeFailure(usize),
    #[error("tail integral of 1/mu toward 0 converges: mu is not Osgood")]
    NonOsgood,
    #[error("argument {arg:e} outside the certified generating-function range")]
    RangeExceeded { arg: f64 },
    #[error("prerequisite {which} fails at x = {at:e}")]
    PrerequisiteFailed { which: &'static str, at: f64 },
    #[error("lambda is not strictly concave near r = {r:e}")]
    LambdaNotConcave { r: f64 },
    #[error("epsilon(r) is not invertible near r = {r:e}")]
    EpsilonNotInvertible { r: f64 },
    #[error("sampled function is not convex near {at:e}")]
    NotConvex { at: f64 },
    #[error(transparent)]
    Moc(#[from] MocError),
}

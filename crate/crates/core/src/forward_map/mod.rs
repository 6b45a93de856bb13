//! The forward pipeline: from an L^p growth profile theta(p) to the
//! velocity modulus mu (via the constrained infimum over epsilon) and
//! from mu to the flow modulus Gamma_t, including the minimizer curve
//! epsilon(r).

mod flow;
mod profile;

pub use flow::{gamma_from_mu, verify_transport, FlowFamily, FlowSource, TransportReport};
pub use profile::{epsilon_minimizer, mu_from_theta, EpsilonMap, LpProfile};

use crate::moc_core::MocError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ForwardError {
    #[error("epsilon minimizer sits on the boundary across the whole grid (degenerate profile)")]
    FlatAlpha,
    #[error("(log alpha)' is not strictly increasing near eps = {eps:e}")]
    NotStrictlyConvex { eps: f64 },
    #[error("flow left the validity interval (0, {domain_hi:e}] at t = {t_exit:e}")]
    BlowThroughDomain { t_exit: f64, domain_hi: f64 },
    #[error("profile not evaluable at p = {p:e}")]
    ProfileDomain { p: f64 },
    #[error(transparent)]
    Moc(#[from] MocError),
}

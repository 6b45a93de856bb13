//! Numerical laboratory for the modulus-of-continuity calculus of 2D
//! Euler flows with unbounded (Yudovich-class) vorticity: the forward
//! chain from L^p growth profiles to velocity and flow moduli, the
//! inverse constructions (flow modulus -> velocity modulus -> L^p
//! profile -> vorticity distribution), and desk-scale verification of
//! the Holder-blowup lower bounds via Biot-Savart quadrature.

pub mod euler_lower_bound;
pub mod forward_map;
pub mod inverse_map;
pub mod moc_core;
pub mod num;
pub mod vorticity_recovery;

pub use moc_core::{BuiltinFamily, LambdaCurve, Moc};

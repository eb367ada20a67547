//! Helical CR structures, step-two Carnot groups and curves whose
//! derivatives all have constant Euclidean norm.
//!
//! The crate is organised around the three objects that the library ties
//! together:
//!
//! * [`helical`]: curves of the form `exp(As) v ⊕ w` (class Q0) and their
//!   integrals (class Q1), the canonical decomposition of such a curve and
//!   the helical CR structure it induces.
//! * [`carnot`]: step-two stratified Lie algebras given by skew structure
//!   matrices, their exponential-coordinate frames and group law, and the
//!   correspondences with helical structures.
//! * [`geodesic`]: normal sub-Riemannian geodesics, evaluated in closed form
//!   and cross-checked against a Hamiltonian integrator.
//!
//! [`skewlin`] holds the dense skew-symmetric linear algebra everything else
//! is built on and [`homcurves`] the homogeneous spherical curves `γ_m`.

pub mod carnot;
pub mod error;
pub mod geodesic;
pub mod helical;
pub mod homcurves;
pub mod quad;
pub mod skewlin;
pub mod tol;
pub mod verify;

pub use error::{Error, Result};
pub use tol::Tolerances;

pub use nalgebra::{DMatrix, DVector};

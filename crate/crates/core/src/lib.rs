//! Verification engine for almost para-quaternionic geometry.
//!
//! The crate evaluates user-specified pseudo-Riemannian metrics, linear
//! connections, and endomorphism triples (J1, J2, J3) on coordinate charts or
//! on Lie-group frames, computes the associated tensor fields (torsion,
//! curvature, Nijenhuis tensors, covariant derivatives of the structure,
//! Ricci-type 2-forms, Weyl curvature halves), and judges a catalog of
//! integrability and equivalence conditions numerically at sampled points.

pub mod algebra;
pub mod checks;
pub mod expr;
pub mod geometry;
pub mod jet;
pub mod oracle;
pub mod tensor;
pub mod weyl;

pub mod catalog;

/// Engine version, surfaced in report documents.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

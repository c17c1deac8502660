//! Intrinsic torsion of almost Robinson structures.
//!
//! Given a Lorentzian metric in even dimension presented through a null
//! coframe (kappa, theta^1..theta^m, lambda) with Hermitian screen metric h,
//! this crate computes the covariant derivatives of kappa and of the
//! structure three-form, decomposes them into the irreducible components of
//! the intrinsic torsion, classifies the structure against the lattice of
//! invariant submodules, and reports geometric properties of the underlying
//! null congruence.

pub mod classify;
pub mod coframe;
pub mod error;
pub mod frame;
pub mod torsion;

pub use classify::{classify, ClassVerdict, Classification, FamilyVerdict, FieldVerdict, Flags};
pub use coframe::{CoframeField, CovectorField};
pub use error::{Result, RobinsonError};
pub use frame::{Legs, PointData};
pub use torsion::{extract, extract_with, Components};

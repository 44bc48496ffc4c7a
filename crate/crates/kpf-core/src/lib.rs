//! Kernel-section calculus for Koopman and Perron-Frobenius operators.
//!
//! The crate represents functions and measures through reproducing-kernel
//! sections `k(x, ·)`. Perron-Frobenius action on the span of sections is
//! exact (atoms move, weights stay), so operator identities such as the
//! composition law and Koopman/Perron-Frobenius duality can be checked to
//! machine precision instead of being approximated. Everything that is not
//! exact — projected operators, spectra, operator-norm and semigroup
//! growth-bound certificates, path integrals, the transport solver — is
//! computed on an explicit sample span with pinned regularization and rank
//! truncation so results are deterministic and auditable.
//!
//! Module map:
//! - [`kernels`]: the kernel catalog (evaluation, gradients, Gram matrices,
//!   pullbacks, invariance checks).
//! - [`dynamics`]: discrete maps, vector fields, RK4 flows, structural
//!   relations between maps.
//! - [`operators`]: atomic measures, operator application, dictionary
//!   projection, spectra, norm-bound certificates, representation matrices.
//! - [`semigroups`]: generators, path integrals, growth bounds, Lyapunov
//!   sampling, the characteristics transport solver.
//! - [`structure`]: commutation and intertwining defect reports.

pub mod dynamics;
pub mod error;
pub mod expr;
pub mod kernels;
pub mod linalg;
pub mod operators;
pub mod point;
pub mod quad;
pub mod sampling;
pub mod semigroups;
pub mod structure;

pub use error::{Error, Result};
pub use linalg::C64;
pub use point::{Domain, Point};

//! Space-conditional (SC) wave functions for free quantum particles: the time-conditional
//! picture, its reparametrization by a spatial coordinate, arrival-time densities and the
//! generalized constraint residuals.

// Guards are written `!(x > 0.0)` so that NaN is rejected along with nonpositive values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod arrival;
pub mod constraint;
pub mod error;
pub mod field;
pub mod operators;
pub mod qm;
pub mod quadrature;
pub mod scenario;
pub mod spectral;
pub mod sts;

pub use error::{Error, Result};
pub use field::{Branch, FieldDiagnostics, ScalarField, SpinorField};
pub use quadrature::{HalfLineAxis, HalfLineRule};
pub use spectral::{GaussianPacketSpec, PhysicalConstants, UniformGrid1D};

pub type C64 = num_complex::Complex64;

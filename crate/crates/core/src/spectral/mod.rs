//! Grids, transforms between coordinate and conjugate bases, Gaussian packets, and the
//! half-derivative multiplier.
//!
//! All square roots of operators use the principal branch, cut along the negative real axis.

pub mod grid;
pub mod packet;
pub mod transform;

pub use grid::{make_grid, PhysicalConstants, UniformGrid1D};
pub use packet::{gaussian_amplitude, GaussianPacketSpec};
pub use transform::{
    energy_derivative_apply, forward_transform, half_derivative_apply, inverse_transform, norm_squared, principal_sqrt,
    Conjugate, Direction, SpectralTransform,
};

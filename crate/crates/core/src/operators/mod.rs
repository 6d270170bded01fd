//! Mode-wise forms of the space-evolution generator `P̂_x`, the branch-coupled slab step,
//! and the stationary space-conditional equation.

pub mod coupled;
pub mod matrix;
pub mod stationary;

pub use coupled::{apply_coupled_sc_step, slab_update, CoupledStepOptions, StepReport, StepScheme, DEFAULT_STABILITY_BOUND};
pub use matrix::{
    dirac_split_matrix, px_eigenvalue_sigma_z, verify_anticommutation, AnticommutationReport, Mat2, ModeCoordinates,
    PxConstruction, TwoByTwoComplex,
};
pub use stationary::{
    integrate_stationary_sc, ConstantPotential, FnPotential, Potential, SmoothStep, StationaryBranch, StationaryProfile,
    StationarySeed, DEFAULT_V_MIN,
};

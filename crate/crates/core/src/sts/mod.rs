//! Free-particle space-conditional states: amplitudes over `p_x ≥ 0` per branch, the
//! energy representation, and synthesis of `φ^±(t, y…|x)`.

pub mod amplitude;
pub mod field;

pub use amplitude::{energy_to_momentum, momentum_to_energy, shift_to_plane, SCEnergyAmplitude, SCMomentumAmplitude};
pub(crate) use field::half_line_sum;
pub use field::{sc_field, sc_norm, sc_norm_amplitude, sc_schrodinger_residual, EDGE_WARNING, TRUNCATION_LIMIT, TRUNCATION_WARNING};

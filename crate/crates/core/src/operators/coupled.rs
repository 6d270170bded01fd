use ndarray::ArrayD;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::matrix::{ModeCoordinates, PxConstruction, TwoByTwoComplex};
use crate::error::{Error, Result};
use crate::field::SpinorField;
use crate::spectral::{principal_sqrt, Conjugate, Direction, SpectralTransform};

/// Default bound on the spectral radius of a single slab update.
pub const DEFAULT_STABILITY_BOUND: f64 = 2.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StepScheme {
    /// `exp(i M dx/ħ)` per mode, exact for `V` constant across the slab.
    #[default]
    ExactSlab,
    /// Explicit midpoint, `𝟙 + A + A²/2` with `A = i M dx/ħ`; third-order local error.
    Midpoint,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoupledStepOptions {
    pub construction: PxConstruction,
    pub scheme: StepScheme,
    pub stability_bound: f64,
}

impl Default for CoupledStepOptions {
    fn default() -> Self {
        Self {
            construction: PxConstruction::default(),
            scheme: StepScheme::default(),
            stability_bound: DEFAULT_STABILITY_BOUND,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepReport {
    /// Largest eigenvalue modulus of the per-mode update over all modes on the grid.
    pub spectral_radius: f64,
    pub norm_plus: f64,
    pub norm_minus: f64,
}

/// `(sin z)/z`, continuous at 0.
fn sinc(z: Complex64) -> Complex64 {
    if z.norm() < 1e-4 {
        let z2 = z * z;
        1.0 - z2 / 6.0 + z2 * z2 / 120.0
    } else {
        z.sin() / z
    }
}

/// Update matrix for one mode. `M² = k² 𝟙` for every construction, so
/// `exp(iMθ) = cos(kθ) 𝟙 + iθ sinc(kθ) M`.
pub fn slab_update(m: &TwoByTwoComplex, dispersion: f64, theta: f64, scheme: StepScheme) -> TwoByTwoComplex {
    let i = Complex64::i();
    match scheme {
        StepScheme::ExactSlab => {
            let kt = principal_sqrt(dispersion) * theta;
            TwoByTwoComplex::IDENTITY.scale(kt.cos()) + m.scale(i * theta * sinc(kt))
        }
        StepScheme::Midpoint => {
            let a = m.scale(i * theta);
            TwoByTwoComplex::IDENTITY + a + (a * a).scale(Complex64::new(0.5, 0.0))
        }
    }
}

/// Advances `(φ⁺, φ⁻)(t, y… | x)` to `x + dx` under `−iħ ∂_x φ = P̂_x φ`, with `V` constant in the slab.
///
/// Time is taken to energy and transverse axes to momenta; each `(ε, p⊥)` mode is then
/// multiplied by the update built from the chosen construction of `P̂_x`. The step is
/// rejected if any mode's update has spectral radius above `options.stability_bound`.
pub fn apply_coupled_sc_step(
    field: &SpinorField,
    dx: f64,
    potential: f64,
    options: &CoupledStepOptions,
) -> Result<(SpinorField, StepReport)> {
    if !dx.is_finite() || !potential.is_finite() {
        return Err(Error::domain("step size and potential must be finite"));
    }
    let constants = field.constants;
    let hbar = constants.hbar;
    let mut transforms = vec![SpectralTransform::new(&field.t_grid, Conjugate::Energy, hbar)];
    transforms.extend(field.transverse.iter().map(|g| SpectralTransform::new(g, Conjugate::Momentum, hbar)));

    let mut plus = field.plus.clone();
    let mut minus = field.minus.clone();
    for (axis, tr) in transforms.iter().enumerate() {
        tr.apply_along(&mut plus, axis, Direction::Forward)?;
        tr.apply_along(&mut minus, axis, Direction::Forward)?;
    }

    let energies = transforms[0].conjugate_grid().points();
    let momenta: Vec<Vec<f64>> = transforms[1..].iter().map(|t| t.conjugate_grid().points()).collect();
    let theta = dx / hbar;
    let mut radius: f64 = 0.0;
    let mut mode = ModeCoordinates::new(0.0, vec![0.0; momenta.len()], potential);
    for (idx, a) in plus.indexed_iter_mut() {
        mode.energy = energies[idx[0]];
        for (k, p) in momenta.iter().enumerate() {
            mode.p_perp[k] = p[idx[k + 1]];
        }
        let u = slab_update(&options.construction.matrix(&mode, &constants), mode.dispersion(&constants), theta, options.scheme);
        radius = radius.max(u.spectral_radius());
        let b = &mut minus[&idx];
        let out = u.apply([*a, *b]);
        *a = out[0];
        *b = out[1];
    }
    if !(radius <= options.stability_bound) {
        return Err(Error::StepRejected {
            radius,
            bound: options.stability_bound,
        });
    }

    for (axis, tr) in transforms.iter().enumerate() {
        tr.apply_along(&mut plus, axis, Direction::Inverse)?;
        tr.apply_along(&mut minus, axis, Direction::Inverse)?;
    }
    let mut out = SpinorField::new(field.t_grid, field.transverse.clone(), field.x + dx, plus, minus, constants)?;
    out.diagnostics = field.diagnostics.clone();
    let cell = out.cell_volume();
    let norm = |a: &ArrayD<Complex64>| a.iter().map(|z| z.norm_sqr()).sum::<f64>() * cell;
    let report = StepReport {
        spectral_radius: radius,
        norm_plus: norm(&out.plus),
        norm_minus: norm(&out.minus),
    };
    Ok((out, report))
}

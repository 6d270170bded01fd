use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::spectral::{principal_sqrt, PhysicalConstants};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);
const I: Complex64 = Complex64::new(0.0, 1.0);

/// Complex 2×2 matrix acting on `(φ⁺, φ⁻)`, stored row-major.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoByTwoComplex {
    pub m: [[Complex64; 2]; 2],
}

pub type Mat2 = TwoByTwoComplex;

impl TwoByTwoComplex {
    pub const fn new(a: Complex64, b: Complex64, c: Complex64, d: Complex64) -> Self {
        Self { m: [[a, b], [c, d]] }
    }

    pub const ZERO: Self = Self::new(ZERO, ZERO, ZERO, ZERO);
    pub const IDENTITY: Self = Self::new(ONE, ZERO, ZERO, ONE);
    pub const SIGMA_X: Self = Self::new(ZERO, ONE, ONE, ZERO);
    pub const SIGMA_Y: Self = Self::new(ZERO, Complex64::new(0.0, -1.0), I, ZERO);
    pub const SIGMA_Z: Self = Self::new(ONE, ZERO, ZERO, Complex64::new(-1.0, 0.0));

    pub fn scale(self, s: Complex64) -> Self {
        let [[a, b], [c, d]] = self.m;
        Self::new(s * a, s * b, s * c, s * d)
    }

    pub fn trace(&self) -> Complex64 {
        self.m[0][0] + self.m[1][1]
    }

    pub fn det(&self) -> Complex64 {
        self.m[0][0] * self.m[1][1] - self.m[0][1] * self.m[1][0]
    }

    pub fn square(self) -> Self {
        self * self
    }

    /// Largest entry modulus.
    pub fn max_abs(&self) -> f64 {
        self.m.iter().flatten().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn apply(&self, v: [Complex64; 2]) -> [Complex64; 2] {
        [
            self.m[0][0] * v[0] + self.m[0][1] * v[1],
            self.m[1][0] * v[0] + self.m[1][1] * v[1],
        ]
    }

    /// Eigenvalue moduli from the characteristic polynomial.
    pub fn spectral_radius(&self) -> f64 {
        let half_tr = 0.5 * self.trace();
        let disc = (half_tr * half_tr - self.det()).sqrt();
        (half_tr + disc).norm().max((half_tr - disc).norm())
    }
}

impl Mul for TwoByTwoComplex {
    type Output = Self;
    fn mul(self, o: Self) -> Self {
        let (a, b) = (self.m, o.m);
        Self::new(
            a[0][0] * b[0][0] + a[0][1] * b[1][0],
            a[0][0] * b[0][1] + a[0][1] * b[1][1],
            a[1][0] * b[0][0] + a[1][1] * b[1][0],
            a[1][0] * b[0][1] + a[1][1] * b[1][1],
        )
    }
}

impl Add for TwoByTwoComplex {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        let (a, b) = (self.m, o.m);
        Self::new(a[0][0] + b[0][0], a[0][1] + b[0][1], a[1][0] + b[1][0], a[1][1] + b[1][1])
    }
}

impl Sub for TwoByTwoComplex {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        self + (-o)
    }
}

impl Neg for TwoByTwoComplex {
    type Output = Self;
    fn neg(self) -> Self {
        self.scale(-ONE)
    }
}

/// Energy, transverse momenta and potential value seen by one mode of `P̂_x`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeCoordinates {
    pub energy: f64,
    #[serde(default)]
    pub p_perp: Vec<f64>,
    #[serde(default)]
    pub potential_value: f64,
}

impl ModeCoordinates {
    pub fn new(energy: f64, p_perp: Vec<f64>, potential_value: f64) -> Self {
        Self {
            energy,
            p_perp,
            potential_value,
        }
    }

    pub fn p_perp_squared(&self) -> f64 {
        self.p_perp.iter().map(|p| p * p).sum()
    }

    /// `2m(ε − V) − |p⊥|²`, the square of every `P̂_x` eigenvalue.
    pub fn dispersion(&self, constants: &PhysicalConstants) -> f64 {
        2.0 * constants.mass * (self.energy - self.potential_value) - self.p_perp_squared()
    }

    /// Classically allowed iff the dispersion is nonnegative.
    pub fn is_allowed(&self, constants: &PhysicalConstants) -> bool {
        self.dispersion(constants) >= 0.0
    }
}

/// `(λ⁺, λ⁻) = ±√(2m(ε − V) − |p⊥|²)`, principal branch.
pub fn px_eigenvalue_sigma_z(mode: &ModeCoordinates, constants: &PhysicalConstants) -> (Complex64, Complex64) {
    let l = principal_sqrt(mode.dispersion(constants));
    (l, -l)
}

/// `σ_z √(2mε) + iσ_x √(2mV + |p⊥|²)`.
pub fn dirac_split_matrix(mode: &ModeCoordinates, constants: &PhysicalConstants) -> TwoByTwoComplex {
    PxConstruction::DiracSplit.matrix(mode, constants)
}

/// The mode-wise forms of the space-evolution generator `P̂_x`.
///
/// Every variant squares to `(2mε − 2mV − |p⊥|²)·𝟙`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PxConstruction {
    /// `σ_z √(2m(ε − V) − |p⊥|²)`.
    SigmaZ,
    /// `σ_z √(2mε) + iσ_x √(2mV + |p⊥|²)`; couples the branches whenever `2mV + |p⊥|² ≠ 0`.
    DiracSplit,
    /// `σ_z √(2mε − |p⊥|²) + iσ_x √(2mV)`; couples the branches only through `V`.
    #[default]
    DiracSplitKineticTransverse,
    /// `σ_x √(2mε) + iσ_z √(2mV + |p⊥|²)`, i.e. `α = σ_x`, `β = σ_z`.
    DiracSplitSwapped,
}

impl PxConstruction {
    pub const ALL: [PxConstruction; 4] = [
        PxConstruction::SigmaZ,
        PxConstruction::DiracSplit,
        PxConstruction::DiracSplitKineticTransverse,
        PxConstruction::DiracSplitSwapped,
    ];

    /// `(α, β)` for the split forms `α a + iβ b`; `None` for the σ_z form.
    pub fn alpha_beta(self) -> Option<(TwoByTwoComplex, TwoByTwoComplex)> {
        match self {
            PxConstruction::SigmaZ => None,
            PxConstruction::DiracSplit | PxConstruction::DiracSplitKineticTransverse => {
                Some((TwoByTwoComplex::SIGMA_Z, TwoByTwoComplex::SIGMA_X))
            }
            PxConstruction::DiracSplitSwapped => Some((TwoByTwoComplex::SIGMA_X, TwoByTwoComplex::SIGMA_Z)),
        }
    }

    pub fn matrix(self, mode: &ModeCoordinates, constants: &PhysicalConstants) -> TwoByTwoComplex {
        let two_m = 2.0 * constants.mass;
        let pp = mode.p_perp_squared();
        let (a, b) = match self {
            PxConstruction::SigmaZ => {
                return TwoByTwoComplex::SIGMA_Z.scale(principal_sqrt(mode.dispersion(constants)));
            }
            PxConstruction::DiracSplit | PxConstruction::DiracSplitSwapped => (
                principal_sqrt(two_m * mode.energy),
                principal_sqrt(two_m * mode.potential_value + pp),
            ),
            PxConstruction::DiracSplitKineticTransverse => (
                principal_sqrt(two_m * mode.energy - pp),
                principal_sqrt(two_m * mode.potential_value),
            ),
        };
        let (alpha, beta) = self.alpha_beta().expect("split form");
        alpha.scale(a) + beta.scale(I * b)
    }
}

/// Residuals of `α² = 𝟙`, `β² = 𝟙` and `αβ + βα = 0` as maximum entry moduli.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnticommutationReport {
    pub alpha_squared: f64,
    pub beta_squared: f64,
    pub anticommutator: f64,
    pub holds: bool,
}

impl AnticommutationReport {
    pub fn max_residual(&self) -> f64 {
        self.alpha_squared.max(self.beta_squared).max(self.anticommutator)
    }
}

pub const ANTICOMMUTATION_TOLERANCE: f64 = 1e-14;

pub fn verify_anticommutation(alpha: &TwoByTwoComplex, beta: &TwoByTwoComplex) -> AnticommutationReport {
    let alpha_squared = (alpha.square() - TwoByTwoComplex::IDENTITY).max_abs();
    let beta_squared = (beta.square() - TwoByTwoComplex::IDENTITY).max_abs();
    let anticommutator = (*alpha * *beta + *beta * *alpha).max_abs();
    AnticommutationReport {
        alpha_squared,
        beta_squared,
        anticommutator,
        holds: alpha_squared.max(beta_squared).max(anticommutator) <= ANTICOMMUTATION_TOLERANCE,
    }
}

//! Sampled wave functions shared by the propagators.

use ndarray::ArrayD;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::spectral::{PhysicalConstants, UniformGrid1D};

/// `ψ(x, y, … | t)` sampled on one grid per spatial axis.
#[derive(Debug, Clone)]
pub struct ScalarField {
    pub grids: Vec<UniformGrid1D>,
    pub samples: ArrayD<Complex64>,
    pub time: f64,
    pub constants: PhysicalConstants,
}

impl ScalarField {
    pub fn new(grids: Vec<UniformGrid1D>, samples: ArrayD<Complex64>, time: f64, constants: PhysicalConstants) -> Result<Self> {
        check_shape(&grids, samples.shape())?;
        Ok(Self {
            grids,
            samples,
            time,
            constants,
        })
    }

    pub fn cell_volume(&self) -> f64 {
        self.grids.iter().map(|g| g.spacing()).product()
    }

    /// `∫|ψ|²` by the discrete sum.
    pub fn norm_squared(&self) -> f64 {
        self.samples.iter().map(|z| z.norm_sqr()).sum::<f64>() * self.cell_volume()
    }
}

/// Transport diagnostics attached to a synthesized field.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct FieldDiagnostics {
    /// Fraction of the amplitude norm found inside the sampled window.
    pub captured_fraction: Option<f64>,
    /// Largest boundary modulus relative to the peak modulus.
    pub edge_ratio: f64,
    /// Norm discarded when the half-line momentum support was truncated.
    pub truncation_tail: f64,
    /// Number of quadrature nodes and the rule used for the longitudinal momentum.
    pub quadrature: String,
    pub warnings: Vec<String>,
}

/// Two-component space-conditional field `(φ⁺, φ⁻)(t, y, … | x)`.
///
/// Arrays are indexed `[t, transverse…]`.
#[derive(Debug, Clone)]
pub struct SpinorField {
    pub t_grid: UniformGrid1D,
    pub transverse: Vec<UniformGrid1D>,
    pub x: f64,
    pub plus: ArrayD<Complex64>,
    pub minus: ArrayD<Complex64>,
    pub constants: PhysicalConstants,
    pub diagnostics: FieldDiagnostics,
}

impl SpinorField {
    pub fn new(
        t_grid: UniformGrid1D,
        transverse: Vec<UniformGrid1D>,
        x: f64,
        plus: ArrayD<Complex64>,
        minus: ArrayD<Complex64>,
        constants: PhysicalConstants,
    ) -> Result<Self> {
        let grids = Self::all_grids(&t_grid, &transverse);
        check_shape(&grids, plus.shape())?;
        check_shape(&grids, minus.shape())?;
        Ok(Self {
            t_grid,
            transverse,
            x,
            plus,
            minus,
            constants,
            diagnostics: FieldDiagnostics::default(),
        })
    }

    fn all_grids(t_grid: &UniformGrid1D, transverse: &[UniformGrid1D]) -> Vec<UniformGrid1D> {
        std::iter::once(*t_grid).chain(transverse.iter().copied()).collect()
    }

    /// The `(t, transverse…)` grids in array-axis order.
    pub fn grids(&self) -> Vec<UniformGrid1D> {
        Self::all_grids(&self.t_grid, &self.transverse)
    }

    pub fn cell_volume(&self) -> f64 {
        self.t_grid.spacing() * self.transverse.iter().map(|g| g.spacing()).product::<f64>()
    }

    /// `Σ_r ∫ dt dy… |φ^r|²` by the discrete sum.
    pub fn norm_squared(&self) -> f64 {
        let s: f64 = self.plus.iter().chain(self.minus.iter()).map(|z| z.norm_sqr()).sum();
        s * self.cell_volume()
    }

    pub fn branch(&self, branch: Branch) -> &ArrayD<Complex64> {
        match branch {
            Branch::Plus => &self.plus,
            Branch::Minus => &self.minus,
        }
    }

    pub fn same_grids(&self, other: &SpinorField) -> bool {
        self.t_grid.matches(&other.t_grid, 1e-12)
            && self.transverse.len() == other.transverse.len()
            && self.transverse.iter().zip(&other.transverse).all(|(a, b)| a.matches(b, 1e-12))
    }
}

/// Longitudinal momentum branch: `+` arrives moving towards `+x`, `−` towards `−x`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Branch {
    Plus,
    Minus,
}

impl Branch {
    pub const BOTH: [Branch; 2] = [Branch::Plus, Branch::Minus];

    pub fn sign(self) -> f64 {
        match self {
            Branch::Plus => 1.0,
            Branch::Minus => -1.0,
        }
    }
}

pub(crate) fn check_shape(grids: &[UniformGrid1D], shape: &[usize]) -> Result<()> {
    let expected: Vec<usize> = grids.iter().map(|g| g.len()).collect();
    if expected != shape {
        return Err(Error::domain(format!("array shape {shape:?} does not match grid sizes {expected:?}")));
    }
    Ok(())
}

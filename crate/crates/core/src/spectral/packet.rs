use ndarray::{ArrayD, IxDyn};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::grid::{PhysicalConstants, UniformGrid1D};
use crate::error::{Error, Result};

/// Gaussian momentum-space packet, one entry per axis.
///
/// The amplitude is `N ∏ exp(-(p-p₀)²/4σ²) exp(-i p·x₀/ħ) exp(+i p² t₀ / 2mħ)`, so in position
/// space the packet is centred at `x₀` at time `t₀` and arrives at a plane `x` near
/// `t₀ + m(x - x₀)/p₀`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GaussianPacketSpec {
    pub center_momentum: Vec<f64>,
    pub momentum_width: Vec<f64>,
    #[serde(default)]
    pub center_position: Vec<f64>,
    #[serde(default)]
    pub center_time: f64,
}

impl GaussianPacketSpec {
    pub fn new(center_momentum: Vec<f64>, momentum_width: Vec<f64>) -> Self {
        let dims = center_momentum.len();
        Self {
            center_momentum,
            momentum_width,
            center_position: vec![0.0; dims],
            center_time: 0.0,
        }
    }

    pub fn at_position(mut self, center_position: Vec<f64>) -> Self {
        self.center_position = center_position;
        self
    }

    pub fn at_time(mut self, center_time: f64) -> Self {
        self.center_time = center_time;
        self
    }

    pub fn dims(&self) -> usize {
        self.center_momentum.len()
    }

    /// Checks widths and vector lengths; missing centre positions default to zero.
    pub fn validate(&self) -> Result<()> {
        let d = self.dims();
        if d == 0 {
            return Err(Error::domain("packet needs at least one axis"));
        }
        if self.momentum_width.len() != d {
            return Err(Error::domain(format!(
                "packet has {d} centre momenta but {} widths",
                self.momentum_width.len()
            )));
        }
        if !self.center_position.is_empty() && self.center_position.len() != d {
            return Err(Error::domain(format!(
                "packet has {d} centre momenta but {} centre positions",
                self.center_position.len()
            )));
        }
        if let Some(w) = self.momentum_width.iter().find(|w| !(**w > 0.0 && w.is_finite())) {
            return Err(Error::domain(format!("momentum widths must be positive, got {w}")));
        }
        Ok(())
    }

    fn position(&self, axis: usize) -> f64 {
        self.center_position.get(axis).copied().unwrap_or(0.0)
    }

    /// Continuum-normalized amplitude at momentum `p` (one component per axis).
    pub fn value(&self, p: &[f64], constants: &PhysicalConstants) -> Complex64 {
        let hbar = constants.hbar;
        let mut envelope = 1.0;
        let mut phase = 0.0;
        let mut p2 = 0.0;
        for (a, &pa) in p.iter().enumerate() {
            let s = self.momentum_width[a];
            let d = pa - self.center_momentum[a];
            envelope *= (2.0 * std::f64::consts::PI * s * s).powf(-0.25) * (-d * d / (4.0 * s * s)).exp();
            phase -= pa * self.position(a) / hbar;
            p2 += pa * pa;
        }
        phase += p2 * self.center_time / (2.0 * constants.mass * hbar);
        Complex64::from_polar(envelope, phase)
    }

    /// Momentum range `p₀ ± k σ` on axis `a`.
    pub fn support(&self, axis: usize, widths: f64) -> (f64, f64) {
        let (c, s) = (self.center_momentum[axis], self.momentum_width[axis]);
        (c - widths * s, c + widths * s)
    }
}

/// Samples of the packet on a product of momentum grids, rescaled so that `Σ|a|² ∏Δp = 1`.
pub fn gaussian_amplitude(
    spec: &GaussianPacketSpec,
    momentum_grids: &[UniformGrid1D],
    constants: &PhysicalConstants,
) -> Result<ArrayD<Complex64>> {
    spec.validate()?;
    if momentum_grids.len() != spec.dims() {
        return Err(Error::domain(format!(
            "packet has {} axes but {} momentum grids were given",
            spec.dims(),
            momentum_grids.len()
        )));
    }
    let shape: Vec<usize> = momentum_grids.iter().map(|g| g.len()).collect();
    let mut p = vec![0.0; shape.len()];
    let mut out = ArrayD::from_shape_fn(IxDyn(&shape), |idx| {
        for (a, g) in momentum_grids.iter().enumerate() {
            p[a] = g.point(idx[a]);
        }
        spec.value(&p, constants)
    });
    let cell: f64 = momentum_grids.iter().map(|g| g.spacing()).product();
    let norm = (out.iter().map(|z| z.norm_sqr()).sum::<f64>() * cell).sqrt();
    if norm == 0.0 {
        return Err(Error::ZeroNorm("Gaussian packet has no weight on the grid".into()));
    }
    out.mapv_inplace(|z| z / norm);
    Ok(out)
}

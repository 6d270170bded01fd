use std::f64::consts::PI;
use std::sync::Arc;

use ndarray::{ArrayD, Axis};
use num_complex::Complex64;
use rustfft::{Fft, FftDirection, FftPlanner};

use super::grid::UniformGrid1D;
use crate::error::{Error, Result};

/// Which continuum kernel a coordinate axis pairs with.
///
/// Energy pairs with time through `|ε⟩ = (2πħ)^(-1/2) ∫dt e^{-iεt/ħ} |t⟩`, momenta pair with
/// positions through `|p⟩ = (2πħ)^(-1/2) ∫dy e^{+ipy/ħ} |y⟩`. The analysis (forward) transform
/// uses the conjugate kernel, so energy amplitudes are `∫dt e^{+iεt/ħ} φ(t)` and momentum
/// amplitudes are `∫dy e^{-ipy/ħ} φ(y)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Conjugate {
    Energy,
    Momentum,
}

impl Conjugate {
    /// Sign of the exponent in the forward (coordinate to conjugate) kernel.
    pub fn forward_sign(self) -> f64 {
        match self {
            Conjugate::Energy => 1.0,
            Conjugate::Momentum => -1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Forward,
    Inverse,
}

/// Discrete version of the continuum transform between a periodic coordinate grid and its
/// conjugate grid. Values are Riemann sums of the continuum integrals, so the discrete L2
/// norms `Σ|f|²Δ` and `Σ|F|²Δκ` agree.
#[derive(Clone)]
pub struct SpectralTransform {
    grid: UniformGrid1D,
    conjugate_grid: UniformGrid1D,
    kind: Conjugate,
    pre: Vec<Complex64>,
    post: Vec<Complex64>,
    forward_scale: f64,
    inverse_scale: f64,
    forward_fft: Arc<dyn Fft<f64>>,
    inverse_fft: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for SpectralTransform {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SpectralTransform")
            .field("grid", &self.grid)
            .field("kind", &self.kind)
            .finish()
    }
}

impl SpectralTransform {
    pub fn new(grid: &UniformGrid1D, kind: Conjugate, hbar: f64) -> Self {
        let n = grid.len();
        let h = grid.conjugate_offset();
        let s = kind.forward_sign();
        let pre = (0..n)
            .map(|k| {
                let m = (h * k) % n;
                Complex64::cis(-s * 2.0 * PI * m as f64 / n as f64)
            })
            .collect();
        let ratio = grid.lo() / grid.length();
        let post = (0..n)
            .map(|j| {
                let shifted = j as f64 - h as f64;
                Complex64::cis(s * 2.0 * PI * shifted * ratio)
            })
            .collect();
        let mut planner = FftPlanner::new();
        let (fwd_dir, inv_dir) = if s > 0.0 {
            (FftDirection::Inverse, FftDirection::Forward)
        } else {
            (FftDirection::Forward, FftDirection::Inverse)
        };
        let norm = (2.0 * PI * hbar).sqrt();
        let conjugate_grid = grid.conjugate(hbar);
        Self {
            grid: *grid,
            conjugate_grid,
            kind,
            pre,
            post,
            forward_scale: grid.spacing() / norm,
            inverse_scale: conjugate_grid.spacing() / norm,
            forward_fft: planner.plan_fft(n, fwd_dir),
            inverse_fft: planner.plan_fft(n, inv_dir),
        }
    }

    pub fn grid(&self) -> &UniformGrid1D {
        &self.grid
    }

    pub fn conjugate_grid(&self) -> &UniformGrid1D {
        &self.conjugate_grid
    }

    pub fn kind(&self) -> Conjugate {
        self.kind
    }

    fn check_len(&self, len: usize) -> Result<()> {
        if len != self.grid.len() {
            return Err(Error::domain(format!(
                "sample length {len} does not match grid size {}",
                self.grid.len()
            )));
        }
        Ok(())
    }

    pub fn forward_in_place(&self, data: &mut [Complex64]) -> Result<()> {
        self.check_len(data.len())?;
        for (z, p) in data.iter_mut().zip(&self.pre) {
            *z *= p;
        }
        self.forward_fft.process(data);
        for (z, p) in data.iter_mut().zip(&self.post) {
            *z *= p * self.forward_scale;
        }
        Ok(())
    }

    pub fn inverse_in_place(&self, data: &mut [Complex64]) -> Result<()> {
        self.check_len(data.len())?;
        for (z, p) in data.iter_mut().zip(&self.post) {
            *z *= p.conj();
        }
        self.inverse_fft.process(data);
        for (z, p) in data.iter_mut().zip(&self.pre) {
            *z *= p.conj() * self.inverse_scale;
        }
        Ok(())
    }

    pub fn apply_in_place(&self, data: &mut [Complex64], direction: Direction) -> Result<()> {
        match direction {
            Direction::Forward => self.forward_in_place(data),
            Direction::Inverse => self.inverse_in_place(data),
        }
    }

    /// Transforms every lane of `array` along `axis`.
    pub fn apply_along(&self, array: &mut ArrayD<Complex64>, axis: usize, direction: Direction) -> Result<()> {
        self.check_len(array.shape()[axis])?;
        let mut buf = vec![Complex64::default(); self.grid.len()];
        for mut lane in array.lanes_mut(Axis(axis)) {
            for (b, z) in buf.iter_mut().zip(lane.iter()) {
                *b = *z;
            }
            self.apply_in_place(&mut buf, direction)?;
            for (z, b) in lane.iter_mut().zip(&buf) {
                *z = *b;
            }
        }
        Ok(())
    }

    /// Multiplies each conjugate mode of every lane along `axis` by `multiplier(κ)`.
    pub fn multiply_along<F>(&self, array: &mut ArrayD<Complex64>, axis: usize, multiplier: F) -> Result<()>
    where
        F: Fn(f64) -> Complex64,
    {
        let factors: Vec<Complex64> = self.conjugate_grid.points().into_iter().map(multiplier).collect();
        self.apply_along(array, axis, Direction::Forward)?;
        for mut lane in array.lanes_mut(Axis(axis)) {
            for (z, f) in lane.iter_mut().zip(&factors) {
                *z *= f;
            }
        }
        self.apply_along(array, axis, Direction::Inverse)
    }
}

/// Coordinate samples to conjugate samples (ascending conjugate grid, zero at index `n/2`).
pub fn forward_transform(samples: &[Complex64], grid: &UniformGrid1D, kind: Conjugate, hbar: f64) -> Result<Vec<Complex64>> {
    let t = SpectralTransform::new(grid, kind, hbar);
    let mut out = samples.to_vec();
    t.forward_in_place(&mut out)?;
    Ok(out)
}

/// Conjugate samples back to the coordinate grid `grid`.
pub fn inverse_transform(samples: &[Complex64], grid: &UniformGrid1D, kind: Conjugate, hbar: f64) -> Result<Vec<Complex64>> {
    let t = SpectralTransform::new(grid, kind, hbar);
    let mut out = samples.to_vec();
    t.inverse_in_place(&mut out)?;
    Ok(out)
}

/// Principal square root of a real number: `√x` for `x ≥ 0`, `i√|x|` otherwise.
pub fn principal_sqrt(x: f64) -> Complex64 {
    if x >= 0.0 {
        Complex64::new(x.sqrt(), 0.0)
    } else {
        Complex64::new(0.0, (-x).sqrt())
    }
}

/// `√(iħ d/dt)` realized as the multiplier `√ε` on each energy mode of a time series.
pub fn half_derivative_apply(samples: &[Complex64], grid: &UniformGrid1D, hbar: f64) -> Result<Vec<Complex64>> {
    energy_multiplier_apply(samples, grid, hbar, principal_sqrt)
}

/// `iħ d/dt` realized as the multiplier `ε` on each energy mode.
pub fn energy_derivative_apply(samples: &[Complex64], grid: &UniformGrid1D, hbar: f64) -> Result<Vec<Complex64>> {
    energy_multiplier_apply(samples, grid, hbar, |e| Complex64::new(e, 0.0))
}

fn energy_multiplier_apply<F>(samples: &[Complex64], grid: &UniformGrid1D, hbar: f64, f: F) -> Result<Vec<Complex64>>
where
    F: Fn(f64) -> Complex64,
{
    let t = SpectralTransform::new(grid, Conjugate::Energy, hbar);
    let mut out = samples.to_vec();
    t.forward_in_place(&mut out)?;
    for (z, e) in out.iter_mut().zip(t.conjugate_grid().points()) {
        *z *= f(e);
    }
    t.inverse_in_place(&mut out)?;
    Ok(out)
}

/// Discrete L2 norm squared, `Σ|f|² Δ`.
pub fn norm_squared(samples: &[Complex64], cell: f64) -> f64 {
    samples.iter().map(|z| z.norm_sqr()).sum::<f64>() * cell
}

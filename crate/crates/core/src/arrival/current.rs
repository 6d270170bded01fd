use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::distribution::{detect_backflow, BackflowInterval, FluxSeries};
use crate::error::{Error, Result};
use crate::field::ScalarField;
use crate::qm::{tc_position_field, TCMomentumAmplitude};
use crate::spectral::{Conjugate, GaussianPacketSpec, PhysicalConstants, SpectralTransform, UniformGrid1D};

/// `J(L, t) = (ħ/m) Im(ψ* ∂_xψ)` at the grid point nearest `plane`, one value per field,
/// with `∂_x` taken spectrally.
pub fn probability_current(fields: &[ScalarField], plane: f64) -> Result<FluxSeries> {
    let mut t = Vec::with_capacity(fields.len());
    let mut j = Vec::with_capacity(fields.len());
    let mut transform: Option<SpectralTransform> = None;
    for f in fields {
        if f.grids.len() != 1 {
            return Err(Error::domain(format!("current needs a 1D field, got {} axes", f.grids.len())));
        }
        let g = f.grids[0];
        let c = f.constants;
        let col = g
            .nearest_index(plane)
            .ok_or_else(|| Error::domain(format!("plane {plane} lies outside [{}, {})", g.lo(), g.hi())))?;
        if transform.as_ref().is_none_or(|tr| !tr.grid().matches(&g, 1e-12)) {
            transform = Some(SpectralTransform::new(&g, Conjugate::Momentum, c.hbar));
        }
        let tr = transform.as_ref().expect("set above");
        let psi: Vec<Complex64> = f.samples.iter().copied().collect();
        let mut d = psi.clone();
        tr.forward_in_place(&mut d)?;
        for (z, p) in d.iter_mut().zip(tr.conjugate_grid().points()) {
            *z *= Complex64::new(0.0, p / c.hbar);
        }
        tr.inverse_in_place(&mut d)?;
        t.push(f.time);
        j.push(c.hbar / c.mass * (psi[col].conj() * d[col]).im);
    }
    FluxSeries::new(t, j, plane)
}

/// Current at `plane` for the free evolution of `amp` over every time of `t_grid`.
pub fn current_sweep(amp: &TCMomentumAmplitude, x_grid: &UniformGrid1D, plane: f64, t_grid: &UniformGrid1D) -> Result<FluxSeries> {
    let fields: Vec<ScalarField> = t_grid
        .points()
        .into_iter()
        .map(|t| tc_position_field(amp, t, &[*x_grid]))
        .collect::<Result<_>>()?;
    probability_current(&fields, plane)
}

/// Two narrow positive-momentum Gaussians `g(p − p₁) + c·g(p − p₂)`, normalized.
///
/// Near `x = 0` the state is close to the plane-wave pair `e^{ip₁x} + c e^{ip₂x}`, whose
/// current `(p₁ + p₂c² + (p₁ + p₂)c·cos Δθ)/m` has minimum `(p₂c − p₁)(c − 1)/m`, negative
/// exactly for `p₁/p₂ < c < 1` while both envelopes still overlap the plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BackflowFixture {
    pub p1: f64,
    pub p2: f64,
    pub width: f64,
    pub coefficient: f64,
    pub plane: f64,
}

impl BackflowFixture {
    /// Coefficient found by [`search_backflow_coefficient`] over `c ∈ [0.05, 2]` with the stored grids.
    pub const STORED: BackflowFixture = BackflowFixture {
        p1: 1.0,
        p2: 2.0,
        width: 0.05,
        coefficient: 0.75,
        plane: 0.0,
    };

    pub fn x_grid() -> UniformGrid1D {
        UniformGrid1D::new(8192, -400.0, 400.0).expect("static grid")
    }

    pub fn t_grid() -> UniformGrid1D {
        UniformGrid1D::new(256, 0.0, 4.0 * std::f64::consts::PI).expect("static grid")
    }

    pub fn psi(&self, p: f64, constants: &PhysicalConstants) -> Complex64 {
        let g = |c: f64| GaussianPacketSpec::new(vec![c], vec![self.width]).value(&[p], constants);
        g(self.p1) + self.coefficient * g(self.p2)
    }

    /// Amplitude on the momentum grid conjugate to `x_grid`, discretely normalized.
    pub fn amplitude(&self, x_grid: &UniformGrid1D, constants: PhysicalConstants) -> Result<TCMomentumAmplitude> {
        let mut amp = TCMomentumAmplitude::from_fn(vec![x_grid.conjugate(constants.hbar)], constants, |p| self.psi(p[0], &constants))?;
        let n = amp.norm_squared().sqrt();
        amp.samples.mapv_inplace(|z| z / n);
        Ok(amp)
    }

    pub fn flux(&self, x_grid: &UniformGrid1D, t_grid: &UniformGrid1D, constants: PhysicalConstants) -> Result<FluxSeries> {
        current_sweep(&self.amplitude(x_grid, constants)?, x_grid, self.plane, t_grid)
    }
}

/// Outcome of the coefficient scan.
#[derive(Debug, Clone, PartialEq)]
pub struct BackflowSearch {
    pub fixture: BackflowFixture,
    /// Minimum current divided by the mean velocity `(p₁ + c²p₂)/(m(1 + c²))`.
    pub relative_min_flux: f64,
    pub intervals: Vec<BackflowInterval>,
    pub candidates: Vec<(f64, f64)>,
}

/// Scans `c` over a uniform grid of `grid_points` values in `[lo, hi]`, plus `random_points`
/// values drawn with `seed`, and keeps the most negative relative current.
#[allow(clippy::too_many_arguments)]
pub fn search_backflow_coefficient(
    template: BackflowFixture,
    range: (f64, f64),
    grid_points: usize,
    random_points: usize,
    seed: u64,
    x_grid: &UniformGrid1D,
    t_grid: &UniformGrid1D,
    constants: PhysicalConstants,
) -> Result<BackflowSearch> {
    let (lo, hi) = range;
    if !(hi > lo) || grid_points < 2 {
        return Err(Error::domain("search range must be nonempty with at least two grid points"));
    }
    let mut values: Vec<f64> = (0..grid_points).map(|k| lo + (hi - lo) * k as f64 / (grid_points - 1) as f64).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    values.extend((0..random_points).map(|_| rng.gen_range(lo..hi)));
    let mut candidates = Vec::with_capacity(values.len());
    let mut best: Option<(BackflowFixture, f64, FluxSeries)> = None;
    for c in values {
        let fixture = BackflowFixture { coefficient: c, ..template };
        let flux = fixture.flux(x_grid, t_grid, constants)?;
        let mean = (template.p1 + c * c * template.p2) / (constants.mass * (1.0 + c * c));
        let rel = flux.min() / mean;
        candidates.push((c, rel));
        if best.as_ref().is_none_or(|b| rel < b.1) {
            best = Some((fixture, rel, flux));
        }
    }
    let (fixture, relative_min_flux, flux) = best.expect("at least two candidates");
    Ok(BackflowSearch {
        fixture,
        relative_min_flux,
        intervals: detect_backflow(&flux),
        candidates,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::make_grid;
    use ndarray::{Array1, ArrayD, IxDyn};

    #[test]
    fn plane_wave_current() {
        let k = PhysicalConstants::new(1.0, 2.0).unwrap();
        let x = make_grid(64, 0.0, 2.0 * std::f64::consts::PI).unwrap();
        let p = 3.0;
        let s = Array1::from_iter(x.points().into_iter().map(|v| Complex64::from_polar(0.5, p * v))).into_dyn();
        let f = ScalarField::new(vec![x], s, 0.0, k).unwrap();
        let j = probability_current(&[f], 1.0).unwrap();
        assert!((j.j[0] - p / k.mass * 0.25).abs() < 1e-12);
    }

    #[test]
    fn real_field_has_no_current() {
        let x = make_grid(64, -8.0, 8.0).unwrap();
        let s = ArrayD::from_shape_fn(IxDyn(&[64]), |i| Complex64::new((-x.point(i[0]).powi(2)).exp(), 0.0));
        let f = ScalarField::new(vec![x], s, 0.0, PhysicalConstants::default()).unwrap();
        assert!(probability_current(&[f], 0.5).unwrap().j[0].abs() < 1e-15);
    }

    #[test]
    fn stored_fixture_shows_backflow() {
        let f = BackflowFixture::STORED;
        let flux = f.flux(&BackflowFixture::x_grid(), &BackflowFixture::t_grid(), PhysicalConstants::default()).unwrap();
        let iv = detect_backflow(&flux);
        assert!(!iv.is_empty());
        // first negative beat near Δθ = π, i.e. t = 2π/3
        assert!(iv.iter().any(|i| i.t_start <= 2.0 * std::f64::consts::PI / 3.0 + 0.1 && i.t_end >= 2.0 * std::f64::consts::PI / 3.0 - 0.1));
        // c = 1.75 lies outside the plane-wave band p₁/p₂ < c < 1, so the early beats stay positive;
        // later the faster packet drifts off the plane and the effective ratio enters the band
        let big = BackflowFixture { coefficient: 1.75, ..f };
        let flux = big.flux(&BackflowFixture::x_grid(), &BackflowFixture::t_grid(), PhysicalConstants::default()).unwrap();
        assert!(detect_backflow(&flux).iter().all(|i| i.t_start > 2.0 * std::f64::consts::PI));
    }
}

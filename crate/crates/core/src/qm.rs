//! Time-conditional free evolution `ψ(x, y… | t)` by exact per-mode phases.

use ndarray::{ArrayD, Axis, IxDyn};
use num_complex::Complex64;

use crate::arrival::{ArrivalDistribution, DistributionAxis};
use crate::error::{Error, Result};
use crate::field::{check_shape, ScalarField};
use crate::spectral::grid::check_conjugate;
use crate::spectral::{gaussian_amplitude, Conjugate, Direction, GaussianPacketSpec, PhysicalConstants, SpectralTransform, UniformGrid1D};

/// `ψ̃(p)` sampled on full-line momentum grids, one per spatial axis.
#[derive(Debug, Clone, PartialEq)]
pub struct TCMomentumAmplitude {
    pub grids: Vec<UniformGrid1D>,
    pub samples: ArrayD<Complex64>,
    pub constants: PhysicalConstants,
}

impl TCMomentumAmplitude {
    pub fn new(grids: Vec<UniformGrid1D>, samples: ArrayD<Complex64>, constants: PhysicalConstants) -> Result<Self> {
        check_shape(&grids, samples.shape())?;
        constants.validate()?;
        Ok(Self {
            grids,
            samples,
            constants,
        })
    }

    /// Gaussian packet on the given momentum grids, discretely normalized.
    pub fn gaussian(spec: &GaussianPacketSpec, momentum_grids: Vec<UniformGrid1D>, constants: PhysicalConstants) -> Result<Self> {
        let samples = gaussian_amplitude(spec, &momentum_grids, &constants)?;
        Self::new(momentum_grids, samples, constants)
    }

    /// Gaussian packet on the momentum grids conjugate to `spatial` grids.
    pub fn gaussian_for(spec: &GaussianPacketSpec, spatial: &[UniformGrid1D], constants: PhysicalConstants) -> Result<Self> {
        let grids = spatial.iter().map(|g| g.conjugate(constants.hbar)).collect();
        Self::gaussian(spec, grids, constants)
    }

    /// Samples `f(p)` on a product of momentum grids.
    pub fn from_fn<F>(grids: Vec<UniformGrid1D>, constants: PhysicalConstants, f: F) -> Result<Self>
    where
        F: Fn(&[f64]) -> Complex64,
    {
        let shape: Vec<usize> = grids.iter().map(|g| g.len()).collect();
        let mut p = vec![0.0; grids.len()];
        let samples = ArrayD::from_shape_fn(IxDyn(&shape), |idx| {
            for (a, g) in grids.iter().enumerate() {
                p[a] = g.point(idx[a]);
            }
            f(&p)
        });
        Self::new(grids, samples, constants)
    }

    pub fn cell_volume(&self) -> f64 {
        self.grids.iter().map(|g| g.spacing()).product()
    }

    pub fn norm_squared(&self) -> f64 {
        self.samples.iter().map(|z| z.norm_sqr()).sum::<f64>() * self.cell_volume()
    }

    pub fn dims(&self) -> usize {
        self.grids.len()
    }
}

/// `ψ̃(p|t) = ψ̃(p) e^{−ip²t/2mħ}`.
pub fn tc_evolve_momentum(amp: &TCMomentumAmplitude, t: f64) -> TCMomentumAmplitude {
    let c = amp.constants;
    let rate = t / (2.0 * c.mass * c.hbar);
    let mut out = amp.clone();
    let mut p = vec![0.0; amp.grids.len()];
    for (idx, z) in out.samples.indexed_iter_mut() {
        for (a, g) in amp.grids.iter().enumerate() {
            p[a] = g.point(idx[a]);
        }
        let p2: f64 = p.iter().map(|v| v * v).sum();
        *z *= Complex64::from_polar(1.0, -p2 * rate);
    }
    out
}

/// `ψ(x|t)` on spatial grids conjugate to the amplitude's momentum grids.
pub fn tc_position_field(amp: &TCMomentumAmplitude, t: f64, spatial: &[UniformGrid1D]) -> Result<ScalarField> {
    if spatial.len() != amp.dims() {
        return Err(Error::domain(format!(
            "amplitude has {} momentum axes but {} spatial grids were given",
            amp.dims(),
            spatial.len()
        )));
    }
    let hbar = amp.constants.hbar;
    for (x, p) in spatial.iter().zip(&amp.grids) {
        check_conjugate(x, p, hbar)?;
    }
    let mut samples = tc_evolve_momentum(amp, t).samples;
    for (axis, g) in spatial.iter().enumerate() {
        SpectralTransform::new(g, Conjugate::Momentum, hbar).apply_along(&mut samples, axis, Direction::Inverse)?;
    }
    ScalarField::new(spatial.to_vec(), samples, t, amp.constants)
}

fn require_xy(field: &ScalarField) -> Result<()> {
    if field.grids.len() != 2 {
        return Err(Error::domain(format!("expected an (x, y) field, got {} axes", field.grids.len())));
    }
    Ok(())
}

/// `𝒫_ψ(y|t) = ∫ dx |ψ(x, y|t)|²`.
pub fn tc_cumulative_y_density(field: &ScalarField) -> Result<ArrivalDistribution> {
    require_xy(field)?;
    let dx = field.grids[0].spacing();
    let density = field.samples.mapv(|z| z.norm_sqr()).sum_axis(Axis(0)) * dx;
    Ok(ArrivalDistribution::new(vec![DistributionAxis::length("y", field.grids[1])], density)?
        .with_meta("time", field.time))
}

/// `𝒫_ψ(y|t; L) = |ψ(L, y|t)|² / ∫dy |ψ(L, y|t)|²` at the grid column nearest `L`.
pub fn tc_conditional_y_at_plane(field: &ScalarField, plane: f64) -> Result<ArrivalDistribution> {
    require_xy(field)?;
    let xg = field.grids[0];
    let column = xg
        .nearest_index(plane)
        .ok_or_else(|| Error::domain(format!("plane x = {plane} lies outside [{}, {})", xg.lo(), xg.hi())))?;
    let slice = field.samples.index_axis(Axis(0), column).mapv(|z| z.norm_sqr());
    let dy = field.grids[1].spacing();
    let denominator = slice.sum() * dy;
    if !(denominator > 0.0) {
        return Err(Error::NoSupportOnPlane { plane, column });
    }
    Ok(ArrivalDistribution::new(vec![DistributionAxis::length("y", field.grids[1])], slice / denominator)?
        .with_meta("plane", plane)
        .with_meta("column", column)
        .with_meta("column_x", xg.point(column))
        .with_meta("time", field.time))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arrival::moments;
    use crate::spectral::make_grid;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn evolution_examples() {
        let k = PhysicalConstants::default();
        let g = make_grid(8, -4.0, 4.0).unwrap().conjugate(1.0);
        let amp = TCMomentumAmplitude::from_fn(vec![g], k, |p| c(1.0 + p[0], 0.5)).unwrap();
        assert_eq!(tc_evolve_momentum(&amp, 0.0), amp);
        // p = 2 sits on this grid only if spacing divides 2; build a dedicated 3D single mode
        let axes = vec![make_grid(4, 0.0, 4.0).unwrap(), make_grid(2, -1.0, 1.0).unwrap(), make_grid(2, -1.0, 1.0).unwrap()];
        let one = TCMomentumAmplitude::from_fn(axes.clone(), k, |p| if p == [2.0, 0.0, 0.0] { c(1.0, 0.0) } else { c(0.0, 0.0) }).unwrap();
        let out = tc_evolve_momentum(&one, std::f64::consts::PI);
        assert!((out.samples[[2, 1, 1]] - c(1.0, 0.0)).norm() < 1e-14);
    }

    proptest! {
        #[test]
        fn evolution_preserves_moduli(re in proptest::collection::vec(-1.0..1.0f64, 16), im in proptest::collection::vec(-1.0..1.0f64, 16), t in -50.0..50.0f64) {
            let g = make_grid(16, -4.0, 4.0).unwrap().conjugate(1.0);
            let amp = TCMomentumAmplitude::new(
                vec![g],
                ndarray::Array1::from_iter(re.iter().zip(&im).map(|(a, b)| c(*a, *b))).into_dyn(),
                PhysicalConstants::default(),
            ).unwrap();
            let out = tc_evolve_momentum(&amp, t);
            for (a, b) in amp.samples.iter().zip(out.samples.iter()) {
                prop_assert!((a.norm() - b.norm()).abs() <= 1e-15 * a.norm().max(1e-300) + 1e-300);
            }
            prop_assert!((amp.norm_squared() - out.norm_squared()).abs() <= 1e-14 * amp.norm_squared());
        }
    }

    #[test]
    fn gaussian_spreads_as_textbook() {
        // σ_p = 0.5 gives σ_x(0) = ħ/(2σ_p) = 1
        let k = PhysicalConstants::default();
        let x = make_grid(512, -64.0, 64.0).unwrap();
        let amp = TCMomentumAmplitude::gaussian_for(&GaussianPacketSpec::new(vec![0.0], vec![0.5]), &[x], k).unwrap();
        for t in [0.0, 1.0, 3.0] {
            let f = tc_position_field(&amp, t, &[x]).unwrap();
            assert!((f.norm_squared() - 1.0).abs() < 1e-12);
            let dens = ArrivalDistribution::new(vec![DistributionAxis::length("x", x)], f.samples.mapv(|z| z.norm_sqr())).unwrap();
            let var = crate::arrival::variance(&dens).unwrap();
            let expected = 1.0 + (t / 2.0f64).powi(2);
            assert!((var - expected).abs() < 1e-10, "t = {t}: {var} vs {expected}");
        }
    }

    #[test]
    fn centroid_moves_at_group_velocity() {
        let k = PhysicalConstants::new(1.0, 2.0).unwrap();
        let x = make_grid(1024, -40.0, 60.0).unwrap();
        let amp = TCMomentumAmplitude::gaussian_for(&GaussianPacketSpec::new(vec![10.0], vec![1.0]), &[x], k).unwrap();
        for t in [0.0, 2.0, 6.0] {
            let f = tc_position_field(&amp, t, &[x]).unwrap();
            let dens = ArrivalDistribution::new(vec![DistributionAxis::length("x", x)], f.samples.mapv(|z| z.norm_sqr())).unwrap();
            assert!((moments(&dens, 1).unwrap() - 5.0 * t).abs() < 1e-9);
        }
    }

    #[test]
    fn galilean_boost_shifts_velocity() {
        let k = PhysicalConstants::default();
        let x = make_grid(1024, -60.0, 60.0).unwrap();
        let base = TCMomentumAmplitude::gaussian_for(&GaussianPacketSpec::new(vec![1.0], vec![0.7]), &[x], k).unwrap();
        let boosted = TCMomentumAmplitude::gaussian_for(&GaussianPacketSpec::new(vec![1.0 + 2.5], vec![0.7]), &[x], k).unwrap();
        let mean = |a: &TCMomentumAmplitude, t: f64| {
            let f = tc_position_field(a, t, &[x]).unwrap();
            moments(&ArrivalDistribution::new(vec![DistributionAxis::length("x", x)], f.samples.mapv(|z| z.norm_sqr())).unwrap(), 1).unwrap()
        };
        let dv = (mean(&boosted, 4.0) - mean(&boosted, 0.0)) / 4.0 - (mean(&base, 4.0) - mean(&base, 0.0)) / 4.0;
        assert!((dv - 2.5).abs() < 1e-9);
    }

    #[test]
    fn free_schrodinger_residual_is_small() {
        let k = PhysicalConstants::default();
        let x = make_grid(256, -32.0, 32.0).unwrap();
        let y = make_grid(128, -16.0, 16.0).unwrap();
        let spec = GaussianPacketSpec::new(vec![2.0, -1.0], vec![0.6, 0.8]);
        let amp = TCMomentumAmplitude::gaussian_for(&spec, &[x, y], k).unwrap();
        let (t, dt) = (1.0, 1e-4);
        let fp = tc_position_field(&amp, t + dt, &[x, y]).unwrap();
        let fm = tc_position_field(&amp, t - dt, &[x, y]).unwrap();
        // ∇²ψ spectrally
        let mut lap = tc_evolve_momentum(&amp, t);
        let grids = lap.grids.clone();
        for (idx, z) in lap.samples.indexed_iter_mut() {
            let p2: f64 = grids.iter().enumerate().map(|(a, g)| g.point(idx[a]).powi(2)).sum();
            *z *= -p2;
        }
        for (axis, g) in [x, y].iter().enumerate() {
            SpectralTransform::new(g, Conjugate::Momentum, 1.0).apply_along(&mut lap.samples, axis, Direction::Inverse).unwrap();
        }
        let mut num = 0.0;
        let mut den = 0.0;
        for ((a, b), l) in fp.samples.iter().zip(fm.samples.iter()).zip(lap.samples.iter()) {
            let dtpsi = Complex64::i() * (a - b) / (2.0 * dt);
            num += (dtpsi + 0.5 * l).norm_sqr();
            den += (0.5 * l).norm_sqr();
        }
        assert!((num / den).sqrt() < 1e-6, "residual {}", (num / den).sqrt());
    }

    #[test]
    fn incompatible_grids_are_rejected() {
        let k = PhysicalConstants::default();
        let x = make_grid(64, -8.0, 8.0).unwrap();
        let amp = TCMomentumAmplitude::gaussian_for(&GaussianPacketSpec::new(vec![0.0], vec![1.0]), &[x], k).unwrap();
        assert!(tc_position_field(&amp, 0.0, &[make_grid(64, -9.0, 9.0).unwrap()]).is_err());
        assert!(tc_position_field(&amp, 0.0, &[x, x]).is_err());
    }

    fn separable_field() -> ScalarField {
        let x = make_grid(32, -4.0, 4.0).unwrap();
        let y = make_grid(16, -2.0, 2.0).unwrap();
        let f = |v: f64| (-(v - 0.3).powi(2)).exp();
        let g = |v: f64| (-(v * v) / 0.5).exp() * (1.0 + 0.2 * v);
        let s = ArrayD::from_shape_fn(IxDyn(&[32, 16]), |i| c(f(x.point(i[0])) * g(y.point(i[1])), 0.0));
        ScalarField::new(vec![x, y], s, 0.0, PhysicalConstants::default()).unwrap()
    }

    #[test]
    fn separable_field_densities() {
        let field = separable_field();
        let y = field.grids[1];
        let g2: Vec<f64> = y.points().iter().map(|v| ((-(v * v) / 0.5).exp() * (1.0 + 0.2 * v)).powi(2)).collect();
        let gnorm: f64 = g2.iter().sum::<f64>() * y.spacing();
        let a = tc_conditional_y_at_plane(&field, -2.0).unwrap();
        let b = tc_conditional_y_at_plane(&field, 1.5).unwrap();
        for (k, g) in g2.iter().enumerate() {
            assert!((a.samples[[k]] - g / gnorm).abs() < 1e-12);
            assert!((b.samples[[k]] - g / gnorm).abs() < 1e-12);
        }
        let cum = tc_cumulative_y_density(&field).unwrap();
        let n = cum.normalized();
        for (k, g) in g2.iter().enumerate() {
            assert!((n[[k]] - g / gnorm).abs() < 1e-12);
        }
        assert_eq!(a.metadata["column"], "8");
    }

    #[test]
    fn zero_column_and_outside_plane() {
        let mut field = separable_field();
        field.samples.index_axis_mut(Axis(0), 4).fill(c(0.0, 0.0));
        let x4 = field.grids[0].point(4);
        assert!(matches!(tc_conditional_y_at_plane(&field, x4), Err(Error::NoSupportOnPlane { column: 4, .. })));
        assert!(tc_conditional_y_at_plane(&field, 100.0).is_err());
    }

    #[test]
    fn symmetric_field_gives_symmetric_density() {
        let x = make_grid(32, -4.0, 4.0).unwrap();
        let y = make_grid(32, -4.0, 4.0).unwrap();
        let amp = TCMomentumAmplitude::gaussian_for(&GaussianPacketSpec::new(vec![1.0, 0.0], vec![0.7, 0.9]), &[x, y], PhysicalConstants::default()).unwrap();
        let f = tc_position_field(&amp, 0.8, &[x, y]).unwrap();
        let d = tc_cumulative_y_density(&f).unwrap();
        // y_k ↔ y_{n−k}, with y_0 = −4 unpaired
        for k in 1..16 {
            assert!((d.samples[[16 + k]] - d.samples[[16 - k]]).abs() < 1e-14);
        }
    }

    #[test]
    fn tilted_packet_mean_y_and_conditional_shift() {
        let k = PhysicalConstants::default();
        let x = make_grid(256, -40.0, 40.0).unwrap();
        let y = make_grid(256, -40.0, 40.0).unwrap();
        let spec = GaussianPacketSpec::new(vec![3.0, 1.5], vec![0.5, 0.5]).at_position(vec![0.0, -2.0]);
        let amp = TCMomentumAmplitude::gaussian_for(&spec, &[x, y], k).unwrap();
        let t = 2.0;
        let f = tc_position_field(&amp, t, &[x, y]).unwrap();
        let d = tc_cumulative_y_density(&f).unwrap();
        assert!((moments(&d, 1).unwrap() - (-2.0 + 1.5 * t)).abs() < 1e-9);
    }

    #[test]
    fn correlated_packet_conditional_against_direct_quadrature() {
        // a momentum-space tilt p_y ∝ p_x correlates x and y at t > 0
        let k = PhysicalConstants::default();
        let x = make_grid(128, -24.0, 24.0).unwrap();
        let y = make_grid(128, -24.0, 24.0).unwrap();
        let (px, py) = (x.conjugate(1.0), y.conjugate(1.0));
        let psi = |p: &[f64]| {
            let u = p[0] - 2.0;
            let v = p[1] - 0.8 * u;
            Complex64::new((-u * u / (2.0 * 0.36) - v * v / (2.0 * 0.09)).exp(), 0.0)
        };
        let mut amp = TCMomentumAmplitude::from_fn(vec![px, py], k, psi).unwrap();
        let n = amp.norm_squared().sqrt();
        amp.samples.mapv_inplace(|z| z / n);
        let t = 3.0;
        let f = tc_position_field(&amp, t, &[x, y]).unwrap();
        let mean_at = |plane: f64| moments(&tc_conditional_y_at_plane(&f, plane).unwrap(), 1).unwrap();
        let (m_lo, m_hi) = (mean_at(3.0), mean_at(9.0));
        // Gaussian oracle: Σ_x(t) = (ħ²/4) Σ_p⁻¹ + t² Σ_p for a real momentum amplitude
        let (s11, s12, s22) = (0.18, 0.8 * 0.18, 0.64 * 0.18 + 0.045);
        let det = s11 * s22 - s12 * s12;
        let cxx = 0.25 * s22 / det + t * t * s11;
        let cxy = -0.25 * s12 / det + t * t * s12;
        let slope = cxy / cxx;
        assert!((m_lo - slope * (3.0 - 2.0 * t)).abs() < 1e-6, "{m_lo} vs {}", slope * (3.0 - 2.0 * t));
        assert!((m_hi - slope * (9.0 - 2.0 * t)).abs() < 1e-6, "{m_hi} vs {}", slope * (9.0 - 2.0 * t));
        // direct sum of ψ(L, y|t) = (2π)^{-1} Σ dp ψ̃ e^{i(p·r − p²t/2)} at the chosen column
        let column = x.nearest_index(9.0).unwrap();
        let xl = x.point(column);
        let mut dens = vec![0.0; y.len()];
        for (j, yv) in y.points().iter().enumerate() {
            let mut s = Complex64::new(0.0, 0.0);
            for a in 0..px.len() {
                for b in 0..py.len() {
                    let (p, q) = (px.point(a), py.point(b));
                    s += amp.samples[[a, b]] * Complex64::from_polar(1.0, p * xl + q * yv - 0.5 * (p * p + q * q) * t);
                }
            }
            dens[j] = (s * px.spacing() * py.spacing() / (2.0 * std::f64::consts::PI)).norm_sqr();
        }
        let tot: f64 = dens.iter().sum::<f64>() * y.spacing();
        let direct_mean: f64 = y.points().iter().zip(&dens).map(|(v, d)| v * d).sum::<f64>() * y.spacing() / tot;
        assert!((direct_mean - m_hi).abs() < 1e-10);
    }
}

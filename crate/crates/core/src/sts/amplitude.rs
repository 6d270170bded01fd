use ndarray::{ArrayD, IxDyn};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::field::Branch;
use crate::quadrature::HalfLineAxis;
use crate::spectral::{GaussianPacketSpec, PhysicalConstants, UniformGrid1D};

/// `φ̃(r p_x, p⊥)` for `r = ±`, sampled on a half-line rule in `p_x` times full transverse
/// momentum grids. Arrays are indexed `[k, transverse…]`.
///
/// The stored samples are the amplitude referred to the plane `x = 0`; `plane` records a pending
/// shift so that the amplitude at that plane is `φ̃(r p_x, p⊥) e^{i r p_x plane/ħ}`.
#[derive(Debug, Clone, PartialEq)]
pub struct SCMomentumAmplitude {
    px: HalfLineAxis,
    transverse: Vec<UniformGrid1D>,
    plus: ArrayD<Complex64>,
    minus: ArrayD<Complex64>,
    plane: f64,
    constants: PhysicalConstants,
}

fn shape_of(px: &HalfLineAxis, transverse: &[UniformGrid1D]) -> Vec<usize> {
    std::iter::once(px.len()).chain(transverse.iter().map(|g| g.len())).collect()
}

fn sample_branches<F>(px: &HalfLineAxis, transverse: &[UniformGrid1D], f: &F) -> (ArrayD<Complex64>, ArrayD<Complex64>)
where
    F: Fn(Branch, &[f64]) -> Complex64,
{
    let shape = shape_of(px, transverse);
    let mut p = vec![0.0; shape.len()];
    let mut sample = |branch: Branch| {
        ArrayD::from_shape_fn(IxDyn(&shape), |idx| {
            p[0] = px.nodes()[idx[0]];
            for (a, g) in transverse.iter().enumerate() {
                p[a + 1] = g.point(idx[a + 1]);
            }
            f(branch, &p)
        })
    };
    (sample(Branch::Plus), sample(Branch::Minus))
}

impl SCMomentumAmplitude {
    pub fn new(
        px: HalfLineAxis,
        transverse: Vec<UniformGrid1D>,
        plus: ArrayD<Complex64>,
        minus: ArrayD<Complex64>,
        constants: PhysicalConstants,
    ) -> Result<Self> {
        constants.validate()?;
        let shape = shape_of(&px, &transverse);
        for a in [&plus, &minus] {
            if a.shape() != shape.as_slice() {
                return Err(Error::domain(format!("amplitude shape {:?} does not match {:?}", a.shape(), shape)));
            }
        }
        Ok(Self {
            px,
            transverse,
            plus,
            minus,
            plane: 0.0,
            constants,
        })
    }

    /// Samples `f(branch, [|p_x|, p⊥…])` on every node.
    pub fn from_branch_fn<F>(px: HalfLineAxis, transverse: Vec<UniformGrid1D>, constants: PhysicalConstants, f: F) -> Result<Self>
    where
        F: Fn(Branch, &[f64]) -> Complex64,
    {
        let (plus, minus) = sample_branches(&px, &transverse, &f);
        Self::new(px, transverse, plus, minus, constants)
    }

    /// Restriction of a full-line amplitude `ψ̃(p_x, p⊥)` to the two branches,
    /// `φ̃(± p_x, p⊥) = ψ̃(± p_x, p⊥)`.
    pub fn from_full_line<F>(px: HalfLineAxis, transverse: Vec<UniformGrid1D>, constants: PhysicalConstants, psi: F) -> Result<Self>
    where
        F: Fn(&[f64]) -> Complex64,
    {
        Self::from_branch_fn(px, transverse, constants, |branch, p| {
            let mut q = p.to_vec();
            q[0] *= branch.sign();
            psi(&q)
        })
    }

    /// Full-line function restricted to the branches, on a Gauss–Legendre rule truncated where
    /// the tail of `Σ_r ∫dp⊥ |ψ̃(r p_x, p⊥)|²` falls below `tail_tolerance`.
    pub fn truncated_from_full_line<F>(
        transverse: Vec<UniformGrid1D>,
        constants: PhysicalConstants,
        panel_width: f64,
        tail_tolerance: f64,
        psi: F,
    ) -> Result<Self>
    where
        F: Fn(&[f64]) -> Complex64,
    {
        let cell: f64 = transverse.iter().map(|g| g.spacing()).product();
        let sizes: Vec<usize> = transverse.iter().map(|g| g.len()).collect();
        let count: usize = sizes.iter().product();
        let marginal = |px: f64| {
            let mut q = vec![0.0; transverse.len() + 1];
            let mut s = 0.0;
            for flat in 0..count {
                let mut rest = flat;
                for a in (0..transverse.len()).rev() {
                    q[a + 1] = transverse[a].point(rest % sizes[a]);
                    rest /= sizes[a];
                }
                for sign in [1.0, -1.0] {
                    q[0] = sign * px;
                    s += psi(&q).norm_sqr();
                }
            }
            s * cell
        };
        let axis = HalfLineAxis::truncated(marginal, panel_width, tail_tolerance)?;
        Self::from_full_line(axis, transverse, constants, psi)
    }

    /// Gaussian packet whose first axis is longitudinal; `transverse` are the momentum grids of the rest.
    pub fn gaussian(
        spec: &GaussianPacketSpec,
        transverse: Vec<UniformGrid1D>,
        constants: PhysicalConstants,
        panel_width: f64,
        tail_tolerance: f64,
    ) -> Result<Self> {
        spec.validate()?;
        if spec.dims() != transverse.len() + 1 {
            return Err(Error::domain(format!(
                "packet has {} axes but {} transverse grids were given",
                spec.dims(),
                transverse.len()
            )));
        }
        let spec = spec.clone();
        Self::truncated_from_full_line(transverse, constants, panel_width, tail_tolerance, move |p| spec.value(p, &constants))
    }

    pub fn px_axis(&self) -> &HalfLineAxis {
        &self.px
    }

    pub fn transverse(&self) -> &[UniformGrid1D] {
        &self.transverse
    }

    pub fn constants(&self) -> &PhysicalConstants {
        &self.constants
    }

    pub fn plane(&self) -> f64 {
        self.plane
    }

    /// Samples referred to `x = 0`.
    pub fn base(&self, branch: Branch) -> &ArrayD<Complex64> {
        match branch {
            Branch::Plus => &self.plus,
            Branch::Minus => &self.minus,
        }
    }

    /// `|φ̃|` per node; unaffected by the plane.
    pub fn moduli(&self, branch: Branch) -> ArrayD<f64> {
        self.base(branch).mapv(|z| z.norm())
    }

    /// `φ̃(r p_x, p⊥) e^{i r p_x x/ħ}` at the current plane.
    pub fn samples_at_plane(&self, branch: Branch) -> ArrayD<Complex64> {
        let mut out = self.base(branch).clone();
        if self.plane != 0.0 {
            let s = branch.sign() * self.plane / self.constants.hbar;
            for (idx, z) in out.indexed_iter_mut() {
                *z *= Complex64::from_polar(1.0, s * self.px.nodes()[idx[0]]);
            }
        }
        out
    }

    pub fn scaled(&self, c: Complex64) -> Self {
        let mut out = self.clone();
        out.plus.mapv_inplace(|z| c * z);
        out.minus.mapv_inplace(|z| c * z);
        out
    }

    /// Copy with one branch set to zero.
    pub fn without(&self, branch: Branch) -> Self {
        let mut out = self.clone();
        match branch {
            Branch::Plus => out.plus.fill(Complex64::new(0.0, 0.0)),
            Branch::Minus => out.minus.fill(Complex64::new(0.0, 0.0)),
        }
        out
    }

    /// Swaps the branches, i.e. the mirror image `x → −x`.
    pub fn mirrored(&self) -> Self {
        let mut out = self.clone();
        std::mem::swap(&mut out.plus, &mut out.minus);
        out.plane = -self.plane;
        out
    }

    pub(crate) fn transverse_cell(&self) -> f64 {
        self.transverse.iter().map(|g| g.spacing()).product()
    }

    /// `Σ_r Σ_k ν_k ∫dp⊥ |φ̃|²`, or `None` for non-normalizable mode sets.
    pub fn norm_squared(&self) -> Option<f64> {
        let nu = self.px.norm_weights()?;
        let mut s = 0.0;
        for a in [&self.plus, &self.minus] {
            for (idx, z) in a.indexed_iter() {
                s += nu[idx[0]] * z.norm_sqr();
            }
        }
        Some(s * self.transverse_cell())
    }
}

/// Amplitude referred to the plane `x`: branch `r` picks up `e^{i r p_x x/ħ}`.
///
/// Only the pending plane offset changes, so `|φ̃|` is bit-identical before and after.
pub fn shift_to_plane(amp: &SCMomentumAmplitude, x: f64) -> SCMomentumAmplitude {
    let mut out = amp.clone();
    out.plane += x;
    out
}

/// `φ̄^r(ε, p⊥)` at the energies `ε_k = (p_k² + |p⊥|²)/2m` imaged from a half-line momentum rule.
#[derive(Debug, Clone, PartialEq)]
pub struct SCEnergyAmplitude {
    px: HalfLineAxis,
    transverse: Vec<UniformGrid1D>,
    energies: ArrayD<f64>,
    plus: ArrayD<Complex64>,
    minus: ArrayD<Complex64>,
    plane: f64,
    constants: PhysicalConstants,
}

fn image_energies(px: &HalfLineAxis, transverse: &[UniformGrid1D], constants: &PhysicalConstants) -> ArrayD<f64> {
    let shape = shape_of(px, transverse);
    ArrayD::from_shape_fn(IxDyn(&shape), |idx| {
        let mut p2 = px.nodes()[idx[0]].powi(2);
        for (a, g) in transverse.iter().enumerate() {
            p2 += g.point(idx[a + 1]).powi(2);
        }
        p2 / (2.0 * constants.mass)
    })
}

impl SCEnergyAmplitude {
    /// Samples `f(branch, ε, p⊥)` at the imaged energies.
    pub fn from_fn<F>(px: HalfLineAxis, transverse: Vec<UniformGrid1D>, constants: PhysicalConstants, f: F) -> Result<Self>
    where
        F: Fn(Branch, f64, &[f64]) -> Complex64,
    {
        constants.validate()?;
        let energies = image_energies(&px, &transverse, &constants);
        let (plus, minus) = sample_branches(&px, &transverse, &|branch, p: &[f64]| {
            let e = (p.iter().map(|v| v * v).sum::<f64>()) / (2.0 * constants.mass);
            f(branch, e, &p[1..])
        });
        Ok(Self {
            px,
            transverse,
            energies,
            plus,
            minus,
            plane: 0.0,
            constants,
        })
    }

    pub fn energies(&self) -> &ArrayD<f64> {
        &self.energies
    }

    pub fn branch(&self, branch: Branch) -> &ArrayD<Complex64> {
        match branch {
            Branch::Plus => &self.plus,
            Branch::Minus => &self.minus,
        }
    }

    pub fn px_axis(&self) -> &HalfLineAxis {
        &self.px
    }

    pub fn transverse(&self) -> &[UniformGrid1D] {
        &self.transverse
    }

    /// `Σ_r ∫dε dp⊥ |φ̄|²` with `dε = (p_x/m) dp_x` at fixed `p⊥`.
    pub fn norm_squared(&self) -> Option<f64> {
        let nu = self.px.norm_weights()?;
        let m = self.constants.mass;
        let cell: f64 = self.transverse.iter().map(|g| g.spacing()).product();
        let mut s = 0.0;
        for a in [&self.plus, &self.minus] {
            for (idx, z) in a.indexed_iter() {
                let p = self.px.nodes()[idx[0]];
                s += nu[idx[0]] * (p / m) * z.norm_sqr();
            }
        }
        Some(s * cell)
    }
}

/// `φ̃(r p_x, p⊥) = √(p_x/m) φ̄^r(ε(p), p⊥)`.
pub fn energy_to_momentum(amp: &SCEnergyAmplitude) -> SCMomentumAmplitude {
    let m = amp.constants.mass;
    let jac: Vec<f64> = amp.px.nodes().iter().map(|p| (p / m).sqrt()).collect();
    let scale = |a: &ArrayD<Complex64>| {
        let mut out = a.clone();
        for (idx, z) in out.indexed_iter_mut() {
            *z *= jac[idx[0]];
        }
        out
    };
    SCMomentumAmplitude {
        px: amp.px.clone(),
        transverse: amp.transverse.clone(),
        plus: scale(&amp.plus),
        minus: scale(&amp.minus),
        plane: amp.plane,
        constants: amp.constants,
    }
}

/// Inverse of [`energy_to_momentum`]; nodes at `p_x = 0` that carry amplitude are refused.
pub fn momentum_to_energy(amp: &SCMomentumAmplitude) -> Result<SCEnergyAmplitude> {
    let m = amp.constants.mass;
    let nodes = amp.px.nodes();
    let mut count = 0;
    for a in [&amp.plus, &amp.minus] {
        count += a.indexed_iter().filter(|(idx, z)| nodes[idx[0]] == 0.0 && z.norm() != 0.0).count();
    }
    if count > 0 {
        return Err(Error::JacobianVanishes { count });
    }
    let jac: Vec<f64> = nodes.iter().map(|p| if *p == 0.0 { 0.0 } else { (m / p).sqrt() }).collect();
    let scale = |a: &ArrayD<Complex64>| {
        let mut out = a.clone();
        for (idx, z) in out.indexed_iter_mut() {
            *z *= jac[idx[0]];
        }
        out
    };
    Ok(SCEnergyAmplitude {
        px: amp.px.clone(),
        transverse: amp.transverse.clone(),
        energies: image_energies(&amp.px, &amp.transverse, &amp.constants),
        plus: scale(&amp.plus),
        minus: scale(&amp.minus),
        plane: amp.plane,
        constants: amp.constants,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::make_grid;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn gaussian_2d() -> SCMomentumAmplitude {
        let y = make_grid(32, -16.0, 16.0).unwrap();
        let spec = GaussianPacketSpec::new(vec![3.0, 0.5], vec![0.5, 0.4]).at_position(vec![-1.0, 0.3]);
        SCMomentumAmplitude::gaussian(&spec, vec![y.conjugate(1.0)], PhysicalConstants::default(), 0.05, 1e-12).unwrap()
    }

    #[test]
    fn single_energy_mode_maps_to_momentum_mode() {
        let k = PhysicalConstants::new(1.0, 2.0).unwrap();
        let eps0 = 4.0;
        let p0 = (2.0 * k.mass * eps0).sqrt();
        let axis = HalfLineAxis::modes(vec![p0]).unwrap();
        let e = SCEnergyAmplitude::from_fn(axis, vec![], k, |b, eps, _| if b == Branch::Plus && eps == eps0 { c(1.5, -0.5) } else { c(0.0, 0.0) })
            .unwrap();
        assert_eq!(e.energies()[[0]], eps0);
        let m = energy_to_momentum(&e);
        assert!((m.base(Branch::Plus)[[0]] - c(1.5, -0.5) * (p0 / k.mass).sqrt()).norm() < 1e-15);
        assert_eq!(m.base(Branch::Minus)[[0]], c(0.0, 0.0));
        let back = momentum_to_energy(&m).unwrap();
        assert!((back.branch(Branch::Plus)[[0]] - c(1.5, -0.5)).norm() < 1e-15);
    }

    #[test]
    fn zero_amplitude_stays_zero() {
        let axis = HalfLineAxis::gauss_legendre(2.0, 3).unwrap();
        let e = SCEnergyAmplitude::from_fn(axis, vec![], PhysicalConstants::default(), |_, _, _| c(0.0, 0.0)).unwrap();
        let m = energy_to_momentum(&e);
        assert!(m.base(Branch::Plus).iter().chain(m.base(Branch::Minus).iter()).all(|z| *z == c(0.0, 0.0)));
    }

    #[test]
    fn energy_and_momentum_norms_agree() {
        let amp = gaussian_2d();
        let e = momentum_to_energy(&amp).unwrap();
        let (a, b) = (amp.norm_squared().unwrap(), e.norm_squared().unwrap());
        assert!((a - 1.0).abs() < 1e-8, "{a}");
        assert!((a - b).abs() < 1e-12);
    }

    #[test]
    fn zero_momentum_node_is_flagged() {
        let axis = HalfLineAxis::modes(vec![0.0, 1.0]).unwrap();
        let amp = SCMomentumAmplitude::from_branch_fn(axis.clone(), vec![], PhysicalConstants::default(), |_, _| c(1.0, 0.0)).unwrap();
        assert!(matches!(momentum_to_energy(&amp), Err(Error::JacobianVanishes { count: 2 })));
        let quiet = SCMomentumAmplitude::from_branch_fn(axis, vec![], PhysicalConstants::default(), |_, p| c(p[0], 0.0)).unwrap();
        assert!(momentum_to_energy(&quiet).is_ok());
    }

    #[test]
    fn shift_is_a_pure_phase() {
        let amp = gaussian_2d();
        assert_eq!(shift_to_plane(&amp, 0.0), amp);
        for x in [0.3, -7.0, 123.456] {
            let s = shift_to_plane(&amp, x);
            for b in Branch::BOTH {
                assert_eq!(s.moduli(b), amp.moduli(b));
                for (u, v) in amp.base(b).iter().zip(s.samples_at_plane(b).iter()) {
                    assert!((u.norm() - v.norm()).abs() <= 4.0 * f64::EPSILON * u.norm());
                }
            }
            let back = shift_to_plane(&s, -x);
            for b in Branch::BOTH {
                for (u, v) in amp.samples_at_plane(b).iter().zip(back.samples_at_plane(b).iter()) {
                    assert!((u - v).norm() <= 1e-15 * u.norm().max(1e-300));
                }
            }
        }
    }

    #[test]
    fn plane_phase_follows_branch_sign() {
        let axis = HalfLineAxis::modes(vec![2.0]).unwrap();
        let amp = SCMomentumAmplitude::from_branch_fn(axis, vec![], PhysicalConstants::default(), |_, _| c(1.0, 0.0)).unwrap();
        let s = shift_to_plane(&amp, 0.25);
        assert!((s.samples_at_plane(Branch::Plus)[[0]] - c(0.5f64.cos(), 0.5f64.sin())).norm() < 1e-15);
        assert!((s.samples_at_plane(Branch::Minus)[[0]] - c(0.5f64.cos(), -(0.5f64.sin()))).norm() < 1e-15);
    }

    proptest! {
        #[test]
        fn round_trip_is_identity(vals in proptest::collection::vec((-1.0..1.0f64, -1.0..1.0f64), 32), plane in -5.0..5.0f64) {
            let axis = HalfLineAxis::gauss_legendre(4.0, 2).unwrap();
            let y = make_grid(2, -1.0, 1.0).unwrap();
            let plus = ArrayD::from_shape_fn(IxDyn(&[16, 2]), |i| c(vals[i[0]].0, vals[i[0] + 16 * i[1] % 32].1));
            let minus = ArrayD::from_shape_fn(IxDyn(&[16, 2]), |i| c(vals[(i[0] + 7) % 32].1, vals[i[0]].0));
            let amp = shift_to_plane(&SCMomentumAmplitude::new(axis, vec![y], plus, minus, PhysicalConstants::default()).unwrap(), plane);
            let back = energy_to_momentum(&momentum_to_energy(&amp).unwrap());
            for b in Branch::BOTH {
                for (u, v) in amp.base(b).iter().zip(back.base(b).iter()) {
                    prop_assert!((u - v).norm() <= 1e-10 * u.norm().max(1e-12));
                }
            }
            prop_assert_eq!(back.plane(), amp.plane());
        }
    }

    #[test]
    fn mirror_swaps_branches() {
        let amp = gaussian_2d();
        let m = amp.mirrored();
        assert_eq!(m.base(Branch::Plus), amp.base(Branch::Minus));
        assert_eq!(m.mirrored(), amp);
    }
}

//! History states `|Φ^μ⟩ = ∫dx^μ |φ^μ(x^μ)⟩ ⊗ |x^μ⟩` of the free particle and the constraint
//! `(−p̂^μ + P̂̂^μ)|Φ^μ⟩ = 0`.
//!
//! `μ = 0` slices are time-conditional fields `ψ(x…|t_k)`, `μ = 1` slices are space-conditional
//! spinors `φ(t, y…|x_k)`. On the slice axis `p̂⁰ = iħ d/dt` and `p̂¹ = −iħ d/dx`; both act on
//! `e^{−iεt/ħ}` and `e^{ipx/ħ}` as multiplication by the conjugate coordinate. Slice-wise,
//! `P̂̂⁰` is the free Hamiltonian and `P̂̂¹` the branch multiplier `r√(2mε − |p⊥|²)`.
//! Only `V = 0` is modelled.

use ndarray::{ArrayD, Axis, IxDyn};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{Branch, ScalarField, SpinorField};
use crate::qm::{tc_position_field, TCMomentumAmplitude};
use crate::spectral::{principal_sqrt, Conjugate, Direction, PhysicalConstants, SpectralTransform, UniformGrid1D};
use crate::sts::{sc_field, SCMomentumAmplitude};

/// Slice positions `lo + kΔ`, `k < len`. A single slice is allowed; derivatives need four.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SliceAxis {
    pub lo: f64,
    pub spacing: f64,
    pub len: usize,
}

impl SliceAxis {
    pub fn single(point: f64) -> Self {
        Self {
            lo: point,
            spacing: 1.0,
            len: 1,
        }
    }

    pub fn point(&self, k: usize) -> f64 {
        self.lo + k as f64 * self.spacing
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.len).map(|k| self.point(k)).collect()
    }

    /// The periodic grid `[lo, lo + len·Δ)` used by spectral slice derivatives.
    pub fn grid(&self) -> Result<UniformGrid1D> {
        UniformGrid1D::with_spacing(self.len, self.lo, self.spacing)
    }
}

impl From<UniformGrid1D> for SliceAxis {
    fn from(g: UniformGrid1D) -> Self {
        Self {
            lo: g.lo(),
            spacing: g.spacing(),
            len: g.len(),
        }
    }
}

#[derive(Debug, Clone)]
pub enum Slices {
    Time(Vec<ScalarField>),
    Space(Vec<SpinorField>),
}

/// One slice, borrowed from a history.
#[derive(Debug, Clone, Copy)]
pub enum SliceRef<'a> {
    Time(&'a ScalarField),
    Space(&'a SpinorField),
}

impl SliceRef<'_> {
    /// `⟨φ^μ(x^μ)|φ^μ(x^μ)⟩`.
    pub fn norm_squared(&self) -> f64 {
        match self {
            SliceRef::Time(f) => f.norm_squared(),
            SliceRef::Space(f) => f.norm_squared(),
        }
    }
}

/// A discretized history state. Not normalized as a whole; only slice inner products are.
#[derive(Debug, Clone)]
pub struct HistoryState {
    /// 0 for time slices; 1, 2 or 3 for space slices (2 and 3 are relabelled copies of 1).
    pub mu: usize,
    pub slice_axis: SliceAxis,
    pub slices: Slices,
}

impl HistoryState {
    pub fn new(mu: usize, slice_axis: SliceAxis, slices: Slices) -> Result<Self> {
        let count = match &slices {
            Slices::Time(s) => {
                if mu != 0 {
                    return Err(Error::domain(format!("time slices belong to μ = 0, got μ = {mu}")));
                }
                if let Some(bad) = s.iter().find(|f| f.grids != s[0].grids) {
                    return Err(Error::domain(format!("slice at t = {} has different spatial grids", bad.time)));
                }
                s.len()
            }
            Slices::Space(s) => {
                if !(1..=3).contains(&mu) {
                    return Err(Error::domain(format!("space slices belong to μ ∈ {{1, 2, 3}}, got μ = {mu}")));
                }
                if let Some(bad) = s.iter().find(|f| !f.same_grids(&s[0])) {
                    return Err(Error::domain(format!("slice at x = {} has different (t, transverse) grids", bad.x)));
                }
                s.len()
            }
        };
        if count != slice_axis.len || count == 0 {
            return Err(Error::domain(format!("{count} slices for a slice axis of {} points", slice_axis.len)));
        }
        Ok(Self { mu, slice_axis, slices })
    }

    pub fn len(&self) -> usize {
        self.slice_axis.len
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// The same space history with the slice axis named `x^mu`, `mu ∈ {1, 2, 3}`.
    pub fn relabelled(&self, mu: usize) -> Result<Self> {
        match self.slices {
            Slices::Space(_) => Self::new(mu, self.slice_axis, self.slices.clone()),
            Slices::Time(_) => Err(Error::domain("only space histories can be relabelled")),
        }
    }

    /// Copy with slice `k` multiplied by `factor`, for sensitivity checks.
    pub fn corrupted(&self, k: usize, factor: Complex64) -> Result<Self> {
        check_index(k, self.len())?;
        let mut out = self.clone();
        match &mut out.slices {
            Slices::Time(s) => s[k].samples.mapv_inplace(|z| z * factor),
            Slices::Space(s) => {
                s[k].plus.mapv_inplace(|z| z * factor);
                s[k].minus.mapv_inplace(|z| z * factor);
            }
        }
        Ok(out)
    }

    fn constants(&self) -> PhysicalConstants {
        match &self.slices {
            Slices::Time(s) => s[0].constants,
            Slices::Space(s) => s[0].constants,
        }
    }

    /// Slice components as arrays: one per time slice, `[φ⁺, φ⁻]` per space slice.
    fn components(&self) -> Vec<Vec<&ArrayD<Complex64>>> {
        match &self.slices {
            Slices::Time(s) => s.iter().map(|f| vec![&f.samples]).collect(),
            Slices::Space(s) => s.iter().map(|f| vec![&f.plus, &f.minus]).collect(),
        }
    }

    fn internal_grids(&self) -> Vec<UniformGrid1D> {
        match &self.slices {
            Slices::Time(s) => s[0].grids.clone(),
            Slices::Space(s) => s[0].grids(),
        }
    }
}

fn check_index(k: usize, len: usize) -> Result<()> {
    if k >= len {
        return Err(Error::IndexOutOfRange { index: k, len });
    }
    Ok(())
}

/// `ψ(x…|t_k)` for every `t_k`, by exact free propagation.
pub fn build_history_time(amp: &TCMomentumAmplitude, t_axis: &SliceAxis, spatial: &[UniformGrid1D]) -> Result<HistoryState> {
    let slices: Vec<ScalarField> = t_axis
        .points()
        .into_par_iter()
        .map(|t| tc_position_field(amp, t, spatial))
        .collect::<Result<_>>()?;
    HistoryState::new(0, *t_axis, Slices::Time(slices))
}

/// `φ(t, y…|x_k)` for every `x_k`, by half-line mode synthesis.
pub fn build_history_space(
    amp: &SCMomentumAmplitude,
    x_axis: &SliceAxis,
    t_grid: &UniformGrid1D,
    transverse: &[UniformGrid1D],
) -> Result<HistoryState> {
    let slices: Vec<SpinorField> = x_axis
        .points()
        .into_par_iter()
        .map(|x| sc_field(amp, x, t_grid, transverse))
        .collect::<Result<_>>()?;
    HistoryState::new(1, *x_axis, Slices::Space(slices))
}

/// How `d/dx^μ` is discretized along the slice axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SliceDerivative {
    /// Transform derivative over the periodic slice window; exact for on-grid phases.
    #[default]
    Spectral,
    /// Second-order centred difference, evaluated on interior slices only.
    Centered,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstraintReport {
    /// `‖(−p̂^μ + P̂̂^μ)Φ‖ / max(‖P̂̂^μΦ‖, ‖p̂^μΦ‖)` over the slices where `p̂^μ` is defined.
    pub residual_l2: f64,
    pub slice_norms: Vec<f64>,
    /// Slice-axis spacing first, then the internal grid spacings.
    pub grid_spacings: Vec<f64>,
}

/// `P̂̂^μ` applied to every slice, component by component.
fn generator_slices(history: &HistoryState) -> Result<Vec<Vec<ArrayD<Complex64>>>> {
    let c = history.constants();
    let grids = history.internal_grids();
    let comps = history.components();
    match history.slices {
        Slices::Time(_) => {
            let tr: Vec<SpectralTransform> = grids.iter().map(|g| SpectralTransform::new(g, Conjugate::Momentum, c.hbar)).collect();
            comps
                .par_iter()
                .map(|parts| {
                    parts
                        .iter()
                        .map(|a| mode_multiply(a, &tr, |k| Complex64::new(k.iter().map(|p| p * p).sum::<f64>() / (2.0 * c.mass), 0.0)))
                        .collect()
                })
                .collect()
        }
        Slices::Space(_) => {
            let tr: Vec<SpectralTransform> = grids
                .iter()
                .enumerate()
                .map(|(a, g)| SpectralTransform::new(g, if a == 0 { Conjugate::Energy } else { Conjugate::Momentum }, c.hbar))
                .collect();
            comps
                .par_iter()
                .map(|parts| {
                    parts
                        .iter()
                        .zip(Branch::BOTH)
                        .map(|(a, branch)| {
                            mode_multiply(a, &tr, |k| {
                                let perp: f64 = k[1..].iter().map(|p| p * p).sum();
                                branch.sign() * principal_sqrt(2.0 * c.mass * k[0] - perp)
                            })
                        })
                        .collect()
                })
                .collect()
        }
    }
}

/// Forward transform on every axis, multiply by `f(κ)`, inverse transform.
fn mode_multiply<F>(a: &ArrayD<Complex64>, transforms: &[SpectralTransform], f: F) -> Result<ArrayD<Complex64>>
where
    F: Fn(&[f64]) -> Complex64,
{
    let mut out = a.clone();
    for (axis, tr) in transforms.iter().enumerate() {
        tr.apply_along(&mut out, axis, Direction::Forward)?;
    }
    let kappa: Vec<Vec<f64>> = transforms.iter().map(|t| t.conjugate_grid().points()).collect();
    let mut k = vec![0.0; transforms.len()];
    for (idx, z) in out.indexed_iter_mut() {
        for (a, ks) in kappa.iter().enumerate() {
            k[a] = ks[idx[a]];
        }
        *z *= f(&k);
    }
    for (axis, tr) in transforms.iter().enumerate() {
        tr.apply_along(&mut out, axis, Direction::Inverse)?;
    }
    Ok(out)
}

/// Per slice, one array per field component.
type SliceComponents = Vec<Vec<ArrayD<Complex64>>>;

/// `p̂^μ` along the slice axis, i.e. `iħη^{μμ} d/dx^μ` with `η = diag(1, −1, −1, −1)`.
/// Returns the slice indices where the result is defined, with one entry per slice.
fn slice_momentum(history: &HistoryState, derivative: SliceDerivative) -> Result<(Vec<usize>, SliceComponents)> {
    let n = history.len();
    if n < 4 {
        return Err(Error::domain(format!("slice derivatives need at least 4 slices, got {n}")));
    }
    let c = history.constants();
    let eta = if history.mu == 0 { 1.0 } else { -1.0 };
    let comps = history.components();
    let parts = comps[0].len();
    match derivative {
        SliceDerivative::Spectral => {
            let kind = if history.mu == 0 { Conjugate::Energy } else { Conjugate::Momentum };
            let tr = SpectralTransform::new(&history.slice_axis.grid()?, kind, c.hbar);
            // iħ d/dt ↔ ε under e^{−iεt/ħ}; −iħ d/dx ↔ p under e^{ipx/ħ}
            let mut out: Vec<Vec<ArrayD<Complex64>>> = vec![Vec::with_capacity(parts); n];
            for part in 0..parts {
                let views: Vec<_> = comps.iter().map(|s| s[part].view()).collect();
                let mut stacked = ndarray::stack(Axis(0), &views).map_err(|e| Error::domain(e.to_string()))?;
                tr.multiply_along(&mut stacked, 0, |k| Complex64::new(k, 0.0))?;
                for (k, slot) in out.iter_mut().enumerate() {
                    slot.push(stacked.index_axis(Axis(0), k).to_owned());
                }
            }
            Ok(((0..n).collect(), out))
        }
        SliceDerivative::Centered => {
            let scale = Complex64::new(0.0, eta * c.hbar / (2.0 * history.slice_axis.spacing));
            let mut out: Vec<Vec<ArrayD<Complex64>>> = vec![Vec::new(); n];
            for k in 1..n - 1 {
                out[k] = (0..parts).map(|p| (comps[k + 1][p] - comps[k - 1][p]) * scale).collect();
            }
            Ok(((1..n - 1).collect(), out))
        }
    }
}

/// Relative residual of `(−p̂^μ + P̂̂^μ)|Φ^μ⟩ = 0`, applied to the whole history.
pub fn constraint_residual(history: &HistoryState, derivative: SliceDerivative) -> Result<ConstraintReport> {
    let (rows, p_hat) = slice_momentum(history, derivative)?;
    let generator = generator_slices(history)?;
    // −p̂Φ + P̂̂Φ over the defined rows, accumulated in fixed order
    let mut num = 0.0;
    let mut gen = 0.0;
    let mut mom = 0.0;
    for &k in &rows {
        for (a, b) in generator[k].iter().zip(&p_hat[k]) {
            num += (b.mapv(|z| -z) + a).iter().map(|z| z.norm_sqr()).sum::<f64>();
            gen += a.iter().map(|z| z.norm_sqr()).sum::<f64>();
            mom += b.iter().map(|z| z.norm_sqr()).sum::<f64>();
        }
    }
    let den = gen.max(mom);
    let mut grid_spacings = vec![history.slice_axis.spacing];
    grid_spacings.extend(history.internal_grids().iter().map(|g| g.spacing()));
    Ok(ConstraintReport {
        residual_l2: if den > 0.0 { (num / den).sqrt() } else { 0.0 },
        slice_norms: slice_norm_report(history),
        grid_spacings,
    })
}

/// The stored slice `⟨x^μ_k|Φ^μ⟩`.
pub fn project_slice(history: &HistoryState, k: usize) -> Result<SliceRef<'_>> {
    check_index(k, history.len())?;
    Ok(match &history.slices {
        Slices::Time(s) => SliceRef::Time(&s[k]),
        Slices::Space(s) => SliceRef::Space(&s[k]),
    })
}

/// Relative residual of `P̂^μ φ^μ = iħη^{μν} dφ^μ/dx^ν`, checked one projected slice at a time.
pub fn verify_generalized_evolution(history: &HistoryState, derivative: SliceDerivative) -> Result<f64> {
    let (rows, p_hat) = slice_momentum(history, derivative)?;
    let generator = generator_slices(history)?;
    let per_slice: Vec<(f64, f64)> = rows
        .iter()
        .map(|&k| {
            let _ = project_slice(history, k)?;
            let mut r = 0.0;
            let mut d = 0.0;
            for (a, b) in generator[k].iter().zip(&p_hat[k]) {
                r += a.iter().zip(b.iter()).map(|(u, v)| (u - v).norm_sqr()).sum::<f64>();
                d += a.iter().map(|z| z.norm_sqr()).sum::<f64>().max(b.iter().map(|z| z.norm_sqr()).sum::<f64>());
            }
            Ok((r, d))
        })
        .collect::<Result<_>>()?;
    let (num, den) = per_slice.iter().fold((0.0, 0.0), |(a, b), (r, d)| (a + r, b + d));
    Ok(if den > 0.0 { (num / den).sqrt() } else { 0.0 })
}

/// `⟨φ^μ(x^μ_k)|φ^μ(x^μ_k)⟩` for every slice.
pub fn slice_norm_report(history: &HistoryState) -> Vec<f64> {
    (0..history.len())
        .map(|k| project_slice(history, k).map(|s| s.norm_squared()).expect("index in range"))
        .collect()
}

/// Stacks slices of one component into an array with the slice axis first.
pub fn stack_component(history: &HistoryState, branch: Option<Branch>) -> Result<ArrayD<Complex64>> {
    let comps = history.components();
    let part = match (&history.slices, branch) {
        (Slices::Time(_), None) => 0,
        (Slices::Space(_), Some(Branch::Plus)) => 0,
        (Slices::Space(_), Some(Branch::Minus)) => 1,
        _ => return Err(Error::domain("branch must be given for space histories and omitted for time histories")),
    };
    let mut shape = vec![history.len()];
    shape.extend_from_slice(comps[0][part].shape());
    let flat: Vec<Complex64> = comps.iter().flat_map(|s| s[part].iter().copied()).collect();
    ArrayD::from_shape_vec(IxDyn(&shape), flat).map_err(|e| Error::domain(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::HalfLineAxis;
    use crate::spectral::{make_grid, GaussianPacketSpec};
    use std::f64::consts::PI;

    fn k1() -> PhysicalConstants {
        PhysicalConstants::default()
    }

    /// Gaussian on `x ∈ [−16, 16)`, sliced over one revival period `mL²/(πħ)` so every
    /// mode phase `e^{−ip²t/2mħ}` is periodic on the slice window.
    fn periodic_time_history() -> (TCMomentumAmplitude, HistoryState) {
        let x = make_grid(64, -16.0, 16.0).unwrap();
        let amp = TCMomentumAmplitude::gaussian_for(&GaussianPacketSpec::new(vec![0.5], vec![0.4]), &[x], k1()).unwrap();
        let period = x.length().powi(2) / PI;
        // mode frequencies are n² in units of 2π/period; 2048 slices resolve |n| < 32
        let axis = SliceAxis::from(make_grid(2048, 0.0, period).unwrap());
        let h = build_history_time(&amp, &axis, &[x]).unwrap();
        (amp, h)
    }

    /// Lattice `p_x = kΔp` with the transverse `Δp`; the x window `2πħ/Δp` and the t window
    /// `4πmħ/Δp²` make every mode periodic on both.
    fn periodic_space_history() -> HistoryState {
        let y = make_grid(32, -8.0, 8.0).unwrap();
        let py = y.conjugate(1.0);
        let dp = py.spacing();
        let spec = GaussianPacketSpec::new(vec![1.6, 0.0], vec![0.25, 0.25]);
        let c = k1();
        let amp = SCMomentumAmplitude::from_full_line(HalfLineAxis::lattice(dp, 12).unwrap(), vec![py], c, |p| spec.value(p, &c)).unwrap();
        let amp = amp.scaled(Complex64::new(1.0 / amp.norm_squared().unwrap().sqrt(), 0.0));
        let t = make_grid(512, 0.0, 4.0 * PI / (dp * dp)).unwrap();
        let x_axis = SliceAxis::from(make_grid(32, 0.0, 2.0 * PI / dp).unwrap());
        build_history_space(&amp, &x_axis, &t, &[y]).unwrap()
    }

    #[test]
    fn time_history_is_exact_spectrally() {
        let (_, h) = periodic_time_history();
        let r = constraint_residual(&h, SliceDerivative::Spectral).unwrap();
        assert!(r.residual_l2 < 1e-10, "{}", r.residual_l2);
        assert!(r.slice_norms.iter().all(|n| (n - 1.0).abs() < 1e-10));
        assert_eq!(r.grid_spacings.len(), 2);
        assert!(verify_generalized_evolution(&h, SliceDerivative::Spectral).unwrap() < 1e-10);
    }

    #[test]
    fn space_history_is_exact_spectrally() {
        let h = periodic_space_history();
        let r = constraint_residual(&h, SliceDerivative::Spectral).unwrap();
        assert!(r.residual_l2 < 1e-10, "{}", r.residual_l2);
        assert!(r.slice_norms.iter().all(|n| (n - 1.0).abs() < 1e-8), "{:?}", &r.slice_norms[..3]);
        // relabelled copies describe the same constraint
        let h3 = h.relabelled(3).unwrap();
        assert_eq!(constraint_residual(&h3, SliceDerivative::Spectral).unwrap().residual_l2, r.residual_l2);
    }

    #[test]
    fn corrupted_history_is_detected() {
        let (_, h) = periodic_time_history();
        let bad = h.corrupted(300, Complex64::new(-1.0, 0.0)).unwrap();
        assert!(constraint_residual(&bad, SliceDerivative::Spectral).unwrap().residual_l2 > 0.1);
        assert!(constraint_residual(&bad, SliceDerivative::Centered).unwrap().residual_l2 > 0.1);
        let hs = periodic_space_history().corrupted(7, Complex64::new(-1.0, 0.0)).unwrap();
        assert!(constraint_residual(&hs, SliceDerivative::Spectral).unwrap().residual_l2 > 0.1);
    }

    fn centred_time_residual(slices: usize) -> (f64, f64) {
        let x = make_grid(64, -16.0, 16.0).unwrap();
        let amp = TCMomentumAmplitude::gaussian_for(&GaussianPacketSpec::new(vec![1.0], vec![0.5]), &[x], k1()).unwrap();
        let axis = SliceAxis::from(make_grid(slices, 0.0, 2.0).unwrap());
        let h = build_history_time(&amp, &axis, &[x]).unwrap();
        (
            constraint_residual(&h, SliceDerivative::Centered).unwrap().residual_l2,
            verify_generalized_evolution(&h, SliceDerivative::Centered).unwrap(),
        )
    }

    #[test]
    fn centred_time_residual_is_second_order() {
        let (a, va) = centred_time_residual(64);
        let (b, vb) = centred_time_residual(128);
        let slope = (a / b).log2();
        assert!((slope - 2.0).abs() < 0.2, "slope {slope}");
        // the projected statement and the whole-history constraint agree
        assert!(va / a < 2.0 && a / va < 2.0);
        assert!(vb / b < 2.0 && b / vb < 2.0);
        let (fine, _) = centred_time_residual(512);
        assert!(fine < 1e-4, "{fine}");
    }

    fn centred_space_residual(slices: usize) -> f64 {
        let y = make_grid(32, -8.0, 8.0).unwrap();
        let spec = GaussianPacketSpec::new(vec![4.0, 0.0], vec![0.5, 0.5]).at_position(vec![-5.0, 0.0]);
        let amp = SCMomentumAmplitude::gaussian(&spec, vec![y.conjugate(1.0)], k1(), 0.05, 1e-20).unwrap();
        let t = make_grid(256, -2.0, 6.0).unwrap();
        let axis = SliceAxis::from(make_grid(slices, 0.0, 1.0).unwrap());
        let h = build_history_space(&amp, &axis, &t, &[y]).unwrap();
        verify_generalized_evolution(&h, SliceDerivative::Centered).unwrap()
    }

    #[test]
    fn centred_space_residual_is_second_order() {
        let a = centred_space_residual(16);
        let b = centred_space_residual(32);
        let slope = (a / b).log2();
        assert!((slope - 2.0).abs() < 0.2, "slope {slope}, {a} {b}");
    }

    #[test]
    fn single_mode_history() {
        let x = make_grid(32, -8.0, 8.0).unwrap();
        let px = x.conjugate(1.0);
        // one on-grid mode: slices differ by a phase only
        let j0 = 19;
        let amp = TCMomentumAmplitude::from_fn(vec![px], k1(), |p| {
            if (p[0] - px.point(j0)).abs() < 1e-12 {
                Complex64::new(1.0 / px.spacing().sqrt(), 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            }
        })
        .unwrap();
        let energy = px.point(j0).powi(2) / 2.0;
        let axis = SliceAxis::from(make_grid(8, 0.0, 2.0 * PI / energy).unwrap());
        let h = build_history_time(&amp, &axis, &[x]).unwrap();
        let Slices::Time(s) = &h.slices else { unreachable!() };
        let ratio = s[3].samples[[5]] / s[0].samples[[5]];
        for (a, b) in s[3].samples.iter().zip(s[0].samples.iter()) {
            assert!((a - b * ratio).norm() < 1e-12);
        }
        assert!(verify_generalized_evolution(&h, SliceDerivative::Spectral).unwrap() < 1e-10);

        let one = build_history_time(&amp, &SliceAxis::single(0.3), &[x]).unwrap();
        assert_eq!(one.len(), 1);
        assert!((slice_norm_report(&one)[0] - 1.0).abs() < 1e-12);
        assert!(constraint_residual(&one, SliceDerivative::Spectral).is_err());
    }

    #[test]
    fn projection_matches_direct_propagation() {
        let (amp, h) = periodic_time_history();
        let x = make_grid(64, -16.0, 16.0).unwrap();
        for k in [0, 1023, 2047] {
            let SliceRef::Time(s) = project_slice(&h, k).unwrap() else { unreachable!() };
            let direct = tc_position_field(&amp, h.slice_axis.point(k), &[x]).unwrap();
            for (a, b) in s.samples.iter().zip(direct.samples.iter()) {
                assert!((a - b).norm() < 1e-10);
            }
        }
        assert!(matches!(project_slice(&h, 2048), Err(Error::IndexOutOfRange { index: 2048, len: 2048 })));
    }

    #[test]
    fn too_few_slices_and_mixed_grids() {
        let x = make_grid(16, -4.0, 4.0).unwrap();
        let amp = TCMomentumAmplitude::gaussian_for(&GaussianPacketSpec::new(vec![0.0], vec![1.0]), &[x], k1()).unwrap();
        let h = build_history_time(&amp, &SliceAxis::from(make_grid(3, 0.0, 1.0).unwrap()), &[x]).unwrap();
        assert!(constraint_residual(&h, SliceDerivative::Centered).is_err());
        let Slices::Time(mut s) = h.slices.clone() else { unreachable!() };
        s[1] = tc_position_field(
            &TCMomentumAmplitude::gaussian_for(&GaussianPacketSpec::new(vec![0.0], vec![1.0]), &[make_grid(16, -5.0, 5.0).unwrap()], k1()).unwrap(),
            0.0,
            &[make_grid(16, -5.0, 5.0).unwrap()],
        )
        .unwrap();
        assert!(HistoryState::new(0, h.slice_axis, Slices::Time(s)).is_err());
        let stacked = stack_component(&h, None).unwrap();
        assert_eq!(stacked.shape(), &[3, 16]);
        assert!(stack_component(&h, Some(Branch::Plus)).is_err());
    }
}

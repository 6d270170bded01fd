use ndarray::{Array2, ArrayD, IxDyn};
use num_complex::Complex64;
use rayon::prelude::*;

use super::amplitude::SCMomentumAmplitude;
use crate::error::{Error, Result};
use crate::field::{Branch, FieldDiagnostics, SpinorField};
use crate::spectral::grid::check_conjugate;
use crate::spectral::{Conjugate, Direction, SpectralTransform, UniformGrid1D};

/// Tail mass of the half-line truncation above which a warning is recorded.
pub const TRUNCATION_WARNING: f64 = 1e-6;
/// Tail mass of the half-line truncation above which field synthesis is refused.
pub const TRUNCATION_LIMIT: f64 = 1e-3;
/// Boundary-to-peak modulus ratio above which a field is flagged as not contained.
pub const EDGE_WARNING: f64 = 1e-6;

/// `S[i, j⊥] = Σ_k e^{−ip_k² t_i/2mħ} w_k √(p_k/m) φ̃(r p_k, p⊥_j) e^{i r p_k x/ħ} / √(2πħ)`,
/// the half-line `p_x` integral at each time and transverse momentum, without the
/// `e^{−i|p⊥|²t/2mħ}` factor. Rows are summed in ascending `k`.
pub(crate) fn half_line_sum(amp: &SCMomentumAmplitude, x: f64, times: &[f64], branch: Branch) -> Array2<Complex64> {
    let c = amp.constants();
    let hbar = c.hbar;
    let axis = amp.px_axis();
    let nodes = axis.nodes();
    let weights = axis.weights();
    let base = amp.base(branch);
    let n_k = nodes.len();
    let cols = base.len() / n_k.max(1);
    let prefactor = (2.0 * std::f64::consts::PI * hbar).sqrt().recip();
    let s = branch.sign();
    let flat: Vec<Complex64> = base.iter().copied().collect();
    let mut coef = vec![Complex64::new(0.0, 0.0); n_k * cols];
    for k in 0..n_k {
        let w = prefactor * weights[k] * (nodes[k] / c.mass).sqrt();
        let phase = Complex64::from_polar(w, s * nodes[k] * x / hbar);
        for j in 0..cols {
            coef[k * cols + j] = flat[k * cols + j] * phase;
        }
    }
    let rate: Vec<f64> = nodes.iter().map(|p| p * p / (2.0 * c.mass * hbar)).collect();
    let rows: Vec<Vec<Complex64>> = times
        .par_iter()
        .map(|&t| {
            let mut row = vec![Complex64::new(0.0, 0.0); cols];
            for k in 0..n_k {
                let e = Complex64::from_polar(1.0, -rate[k] * t);
                let ck = &coef[k * cols..(k + 1) * cols];
                for (r, v) in row.iter_mut().zip(ck) {
                    *r += e * v;
                }
            }
            row
        })
        .collect();
    let mut out = Array2::zeros((times.len(), cols));
    for (i, row) in rows.into_iter().enumerate() {
        for (j, v) in row.into_iter().enumerate() {
            out[[i, j]] = v;
        }
    }
    out
}

fn check_truncation(amp: &SCMomentumAmplitude, diagnostics: &mut FieldDiagnostics) -> Result<()> {
    let tail = amp.px_axis().tail_mass();
    if tail > TRUNCATION_LIMIT {
        return Err(Error::TruncationLoss { lost: tail });
    }
    if tail > TRUNCATION_WARNING {
        diagnostics
            .warnings
            .push(format!("half-line truncation discards {tail:.3e} of the norm"));
    }
    diagnostics.truncation_tail = tail;
    Ok(())
}

/// `φ^r(t, y… | x)` on a time grid and transverse coordinate grids conjugate to the
/// amplitude's transverse momentum grids.
///
/// The `p_x` integral is evaluated directly at every time with the rule's nodes and weights;
/// transverse axes go through the inverse momentum transform. `x` is absolute: the amplitude's
/// pending plane does not enter.
pub fn sc_field(amp: &SCMomentumAmplitude, x: f64, t_grid: &UniformGrid1D, transverse: &[UniformGrid1D]) -> Result<SpinorField> {
    let c = *amp.constants();
    if transverse.len() != amp.transverse().len() {
        return Err(Error::domain(format!(
            "amplitude has {} transverse axes but {} grids were given",
            amp.transverse().len(),
            transverse.len()
        )));
    }
    for (y, p) in transverse.iter().zip(amp.transverse()) {
        check_conjugate(y, p, c.hbar)?;
    }
    let mut diagnostics = FieldDiagnostics {
        quadrature: amp.px_axis().describe(),
        ..Default::default()
    };
    check_truncation(amp, &mut diagnostics)?;

    let times = t_grid.points();
    let shape: Vec<usize> = std::iter::once(t_grid.len()).chain(transverse.iter().map(|g| g.len())).collect();
    let p_perp_sq: Vec<f64> = {
        let sizes: Vec<usize> = amp.transverse().iter().map(|g| g.len()).collect();
        let cols: usize = sizes.iter().product();
        (0..cols)
            .map(|flat| {
                let mut rest = flat;
                let mut s = 0.0;
                for a in (0..sizes.len()).rev() {
                    s += amp.transverse()[a].point(rest % sizes[a]).powi(2);
                    rest /= sizes[a];
                }
                s
            })
            .collect()
    };
    let transforms: Vec<SpectralTransform> = transverse.iter().map(|g| SpectralTransform::new(g, Conjugate::Momentum, c.hbar)).collect();
    let synth = |branch: Branch| -> Result<ArrayD<Complex64>> {
        let sum = half_line_sum(amp, x, &times, branch);
        let mut out = ArrayD::from_shape_fn(IxDyn(&shape), |_| Complex64::new(0.0, 0.0));
        for (slot, (i, j)) in out.iter_mut().zip((0..times.len()).flat_map(|i| (0..p_perp_sq.len()).map(move |j| (i, j)))) {
            let phase = -p_perp_sq[j] * times[i] / (2.0 * c.mass * c.hbar);
            *slot = sum[[i, j]] * Complex64::from_polar(1.0, phase);
        }
        for (a, tr) in transforms.iter().enumerate() {
            tr.apply_along(&mut out, a + 1, Direction::Inverse)?;
        }
        Ok(out)
    };
    let plus = synth(Branch::Plus)?;
    let minus = synth(Branch::Minus)?;
    let mut field = SpinorField::new(*t_grid, transverse.to_vec(), x, plus, minus, c)?;

    let peak = field.plus.iter().chain(field.minus.iter()).map(|z| z.norm()).fold(0.0, f64::max);
    let edge = edge_modulus(&field);
    diagnostics.edge_ratio = if peak > 0.0 { edge / peak } else { 0.0 };
    if diagnostics.edge_ratio > EDGE_WARNING {
        diagnostics.warnings.push(format!(
            "field reaches {:.3e} of its peak on the grid boundary; enlarge the window",
            diagnostics.edge_ratio
        ));
    }
    if let Some(n) = amp.norm_squared() {
        if n > 0.0 {
            diagnostics.captured_fraction = Some(field.norm_squared() / n);
        }
    }
    field.diagnostics = diagnostics;
    Ok(field)
}

/// Largest modulus over the boundary faces of the `(t, transverse…)` box.
fn edge_modulus(field: &SpinorField) -> f64 {
    let shape = field.plus.shape().to_vec();
    let mut m: f64 = 0.0;
    for a in [&field.plus, &field.minus] {
        for (idx, z) in a.indexed_iter() {
            let on_edge = (0..shape.len()).any(|a| idx[a] == 0 || idx[a] + 1 == shape[a]);
            if on_edge {
                m = m.max(z.norm());
            }
        }
    }
    m
}

/// `Σ_r ∫dt dy… |φ^r|²` by the discrete sum.
pub fn sc_norm(field: &SpinorField) -> f64 {
    field.norm_squared()
}

/// `Σ_r ∫dp |φ̃|²` from the amplitude; `None` for plane-wave mode sets.
pub fn sc_norm_amplitude(amp: &SCMomentumAmplitude) -> Option<f64> {
    amp.norm_squared()
}

/// Relative L2 residual of `[iħ∂_t + (ħ²/2m)∇⊥²]φ^r = −(ħ²/2m)∂_x²φ^r` at the middle field, with
/// spectral derivatives in `t` and the transverse axes and a centred second difference in `x`.
/// Zero fields give zero.
pub fn sc_schrodinger_residual(below: &SpinorField, center: &SpinorField, above: &SpinorField) -> Result<f64> {
    if !center.same_grids(below) || !center.same_grids(above) {
        return Err(Error::domain("residual needs three fields on identical grids"));
    }
    let dx = center.x - below.x;
    if !(dx > 0.0) || ((above.x - center.x) - dx).abs() > 1e-9 * dx.abs().max(center.x.abs()) {
        return Err(Error::domain(format!(
            "fields must sit at x - dx, x, x + dx, got {}, {}, {}",
            below.x, center.x, above.x
        )));
    }
    let c = center.constants;
    let kin = c.hbar * c.hbar / (2.0 * c.mass);
    let te = SpectralTransform::new(&center.t_grid, Conjugate::Energy, c.hbar);
    let tr: Vec<SpectralTransform> = center.transverse.iter().map(|g| SpectralTransform::new(g, Conjugate::Momentum, c.hbar)).collect();
    let mut num = 0.0;
    let mut den = 0.0;
    for branch in Branch::BOTH {
        let phi = center.branch(branch);
        // iħ∂_t φ − (|p⊥|²/2m) φ in the mixed representation
        let mut lhs = phi.clone();
        te.apply_along(&mut lhs, 0, Direction::Forward)?;
        for (a, t) in tr.iter().enumerate() {
            t.apply_along(&mut lhs, a + 1, Direction::Forward)?;
        }
        let energies = te.conjugate_grid().points();
        let momenta: Vec<Vec<f64>> = tr.iter().map(|t| t.conjugate_grid().points()).collect();
        for (idx, z) in lhs.indexed_iter_mut() {
            let pp: f64 = momenta.iter().enumerate().map(|(a, p)| p[idx[a + 1]].powi(2)).sum();
            *z *= energies[idx[0]] - pp / (2.0 * c.mass);
        }
        te.apply_along(&mut lhs, 0, Direction::Inverse)?;
        for (a, t) in tr.iter().enumerate() {
            t.apply_along(&mut lhs, a + 1, Direction::Inverse)?;
        }
        let (lo, hi) = (below.branch(branch), above.branch(branch));
        for (((l, p), a), b) in lhs.iter().zip(phi.iter()).zip(lo.iter()).zip(hi.iter()) {
            let d2 = (a - 2.0 * p + b) / (dx * dx);
            num += (l + kin * d2).norm_sqr();
            den += l.norm_sqr();
        }
    }
    Ok(if den == 0.0 { 0.0 } else { (num / den).sqrt() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::HalfLineAxis;
    use crate::spectral::{make_grid, GaussianPacketSpec, PhysicalConstants};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn gaussian_amp(panel: f64) -> (SCMomentumAmplitude, UniformGrid1D) {
        let y = make_grid(64, -16.0, 16.0).unwrap();
        let spec = GaussianPacketSpec::new(vec![10.0, 0.5], vec![0.5, 0.5]).at_position(vec![0.0, 0.5]);
        let amp = SCMomentumAmplitude::gaussian(&spec, vec![y.conjugate(1.0)], PhysicalConstants::default(), panel, 1e-12).unwrap();
        (amp, y)
    }

    #[test]
    fn single_mode_is_the_plane_wave() {
        let k = PhysicalConstants::new(0.7, 1.3).unwrap();
        let y = make_grid(16, -4.0, 4.0).unwrap();
        let py = y.conjugate(k.hbar);
        let (px, j) = (2.2, 11);
        let q = py.point(j);
        let axis = HalfLineAxis::modes(vec![px]).unwrap();
        // √(p_x/m)·φ̃ = 1 and a unit transverse delta
        let amp = SCMomentumAmplitude::from_branch_fn(axis, vec![py], k, |b, p| {
            if b == Branch::Plus && p[1] == q {
                c((k.mass / px).sqrt() / py.spacing(), 0.0)
            } else {
                c(0.0, 0.0)
            }
        })
        .unwrap();
        let t = make_grid(32, -3.0, 5.0).unwrap();
        let x = 1.7;
        let f = sc_field(&amp, x, &t, &[y]).unwrap();
        let e = (px * px + q * q) / (2.0 * k.mass);
        let norm = (2.0 * std::f64::consts::PI * k.hbar).powf(-1.0);
        for (idx, z) in f.plus.indexed_iter() {
            let (tv, yv) = (t.point(idx[0]), y.point(idx[1]));
            let expected = Complex64::from_polar(norm, (px * x + q * yv - e * tv) / k.hbar);
            assert!((z - expected).norm() < 1e-10 * norm);
        }
        assert!(f.minus.iter().all(|z| z.norm() < 1e-15));
    }

    #[test]
    fn zero_amplitude_gives_zero_field() {
        let (amp, y) = gaussian_amp(0.1);
        let zero = amp.scaled(c(0.0, 0.0));
        let t = make_grid(16, -1.0, 2.0).unwrap();
        let f = sc_field(&zero, 5.0, &t, &[y]).unwrap();
        assert_eq!(sc_norm(&f), 0.0);
        assert_eq!(sc_schrodinger_residual(&f, &sc_field(&zero, 5.1, &t, &[y]).unwrap(), &sc_field(&zero, 5.2, &t, &[y]).unwrap()).unwrap(), 0.0);
    }

    #[test]
    fn norm_is_quadratic_and_independent_of_plane() {
        let (amp, y) = gaussian_amp(0.05);
        let t = make_grid(256, -2.0, 3.5).unwrap();
        let n0 = sc_norm(&sc_field(&amp, 0.0, &t, &[y]).unwrap());
        let n7 = sc_norm(&sc_field(&amp, 7.0, &t, &[y]).unwrap());
        assert!((n0 - 1.0).abs() < 1e-8, "{n0}");
        assert!((n0 - n7).abs() < 1e-8);
        let n2 = sc_norm(&sc_field(&amp.scaled(c(2.0, 0.0)), 0.0, &t, &[y]).unwrap());
        assert!((n2 - 4.0 * n0).abs() < 1e-12);
    }

    #[test]
    fn branches_do_not_mix() {
        let (amp, y) = gaussian_amp(0.1);
        let amp = amp.mirrored().scaled(c(0.5, 0.5)); // weight in the minus branch
        let t = make_grid(64, -2.0, 1.0).unwrap();
        let full = sc_field(&amp, -3.0, &t, &[y]).unwrap();
        let only_minus = sc_field(&amp.without(Branch::Plus), -3.0, &t, &[y]).unwrap();
        assert_eq!(full.minus, only_minus.minus);
        assert!(only_minus.plus.iter().all(|z| *z == c(0.0, 0.0)));
    }

    #[test]
    fn schrodinger_residual_converges_at_second_order() {
        let (amp, y) = gaussian_amp(0.05);
        let t = make_grid(256, -1.0, 2.0).unwrap();
        let res = |dx: f64| {
            let f = |x: f64| sc_field(&amp, x, &t, &[y]).unwrap();
            sc_schrodinger_residual(&f(5.0 - dx), &f(5.0), &f(5.0 + dx)).unwrap()
        };
        let (a, b) = (res(4e-3), res(2e-3));
        assert!(b < 1e-4, "{b}");
        let slope = (a / b).log2();
        assert!((slope - 2.0).abs() < 0.2, "slope {slope}");
    }

    #[test]
    fn mismatched_fields_are_rejected() {
        let (amp, y) = gaussian_amp(0.1);
        let t = make_grid(16, -1.0, 2.0).unwrap();
        let t2 = make_grid(16, -1.0, 2.5).unwrap();
        let a = sc_field(&amp, 0.0, &t, &[y]).unwrap();
        let b = sc_field(&amp, 0.1, &t2, &[y]).unwrap();
        assert!(sc_schrodinger_residual(&a, &b, &a).is_err());
        assert!(sc_field(&amp, 0.0, &t, &[make_grid(64, -10.0, 10.0).unwrap()]).is_err());
    }

    #[test]
    fn heavy_truncation_is_refused() {
        let axis = HalfLineAxis::truncated(|p: f64| (-(p - 10.0f64).powi(2) / 0.5).exp(), 0.1, 1e-10).unwrap();
        assert!(axis.tail_mass() < 1e-10);
        let short = HalfLineAxis::truncated(|p: f64| (-(p - 10.0f64).powi(2) / 0.5).exp(), 0.1, 0.01).unwrap();
        let amp = SCMomentumAmplitude::from_branch_fn(short, vec![], PhysicalConstants::default(), |_, _| c(1.0, 0.0)).unwrap();
        let t = make_grid(16, -1.0, 2.0).unwrap();
        assert!(matches!(sc_field(&amp, 0.0, &t, &[]), Err(Error::TruncationLoss { .. })));
    }

    #[test]
    fn edge_warning_when_window_is_too_small() {
        let (amp, y) = gaussian_amp(0.1);
        let t = make_grid(64, 0.4, 0.6).unwrap();
        let f = sc_field(&amp, 5.0, &t, &[y]).unwrap();
        assert!(f.diagnostics.edge_ratio > EDGE_WARNING);
        assert!(!f.diagnostics.warnings.is_empty());
    }

    proptest::proptest! {
        #![proptest_config(proptest::prelude::ProptestConfig::with_cases(8))]
        #[test]
        fn norm_does_not_depend_on_the_plane(x in -20.0..20.0f64) {
            let spec = GaussianPacketSpec::new(vec![6.0], vec![0.5]);
            let amp = SCMomentumAmplitude::gaussian(&spec, vec![], PhysicalConstants::default(), 0.05, 1e-16).unwrap();
            // a window wide enough to hold every arrival at |x| ≤ 20
            let t = make_grid(4096, -8.0, 8.0).unwrap();
            let n = sc_norm(&sc_field(&amp, x, &t, &[]).unwrap());
            proptest::prop_assert!((n - 1.0).abs() < 1e-8, "{n}");
        }
    }
}

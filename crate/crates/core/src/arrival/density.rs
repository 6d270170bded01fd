use ndarray::{Array1, ArrayD, Axis};
use num_complex::Complex64;
use rayon::prelude::*;

use super::distribution::{ArrivalDistribution, DistributionAxis};
use crate::error::{Error, Result};
use crate::field::{Branch, SpinorField};
use crate::qm::TCMomentumAmplitude;
use crate::spectral::UniformGrid1D;
use crate::sts::{half_line_sum, SCMomentumAmplitude};

/// Largest tail mass a normalized time density may leave outside its window.
pub const WINDOW_TAIL_LIMIT: f64 = 1e-3;

fn transverse_labels(n: usize) -> impl Iterator<Item = &'static str> {
    ["y", "z", "w"].into_iter().take(n)
}

/// `𝒫_φ(t, y…|x) = φ†φ / ⟨φ|φ⟩` per cell of the field's grids.
pub fn arrival_density(field: &SpinorField) -> Result<ArrivalDistribution> {
    let norm = field.norm_squared();
    if !(norm > 0.0) {
        return Err(Error::ZeroNorm("space-conditional field has zero norm".into()));
    }
    let samples = ArrayD::from_shape_fn(field.plus.raw_dim(), |idx| {
        (field.plus[&idx].norm_sqr() + field.minus[&idx].norm_sqr()) / norm
    });
    let mut axes = vec![DistributionAxis::time(field.t_grid)];
    axes.extend(transverse_labels(field.transverse.len()).zip(&field.transverse).map(|(l, g)| DistributionAxis::length(l, *g)));
    Ok(ArrivalDistribution::new(axes, samples)?.with_meta("plane", field.x))
}

/// Window enlarged on both sides by its own length.
fn suggest_window(t_grid: &UniformGrid1D) -> (f64, f64) {
    (t_grid.lo() - t_grid.length(), t_grid.hi() + t_grid.length())
}

/// `𝒫_φ(t|x) = (1/⟨φ|φ⟩) Σ_r ∫dp⊥ |∫₀^∞ dp_x √(p_x/2πmħ) φ̃(r p_x, p⊥) e^{−ip_x²t/2mħ} e^{i r p_x x/ħ}|²`
/// by the amplitude's half-line rule.
///
/// Plane-wave mode sets give an unnormalized density flagged as improper. For normalizable
/// amplitudes a window leaving more than `1e-3` of the mass outside is refused.
pub fn arrival_time_density(amp: &SCMomentumAmplitude, x: f64, t_grid: &UniformGrid1D) -> Result<ArrivalDistribution> {
    let norm = amp.norm_squared();
    if norm == Some(0.0) || amp.base(Branch::Plus).iter().chain(amp.base(Branch::Minus).iter()).all(|z| *z == Complex64::new(0.0, 0.0)) {
        return Err(Error::ZeroNorm("space-conditional amplitude is zero".into()));
    }
    let times = t_grid.points();
    let cell = amp.transverse_cell();
    let mut density = Array1::<f64>::zeros(times.len());
    for branch in Branch::BOTH {
        let s = half_line_sum(amp, x, &times, branch);
        for (i, row) in s.axis_iter(Axis(0)).enumerate() {
            density[i] += row.iter().map(|z| z.norm_sqr()).sum::<f64>() * cell;
        }
    }
    let axes = vec![DistributionAxis::time(*t_grid)];
    match norm {
        None => Ok(ArrivalDistribution::new(axes, density.into_dyn())?.improper().with_meta("plane", x)),
        Some(n) => {
            density /= n;
            let dist = ArrivalDistribution::new(axes, density.into_dyn())?;
            let tail = 1.0 - dist.total();
            if tail > WINDOW_TAIL_LIMIT {
                let (suggested_lo, suggested_hi) = suggest_window(t_grid);
                return Err(Error::WindowTooSmall {
                    lo: t_grid.lo(),
                    hi: t_grid.hi(),
                    tail,
                    suggested_lo,
                    suggested_hi,
                });
            }
            Ok(dist
                .with_meta("plane", x)
                .with_meta("captured_mass", dist_total_string(1.0 - tail))
                .with_meta("amplitude_norm", n)
                .with_meta("quadrature", amp.px_axis().describe()))
        }
    }
}

fn dist_total_string(v: f64) -> String {
    format!("{v:.17e}")
}

/// The same functional form as [`arrival_time_density`] with `φ̃ := ψ̃`, computed as a plain
/// Riemann sum over a uniform full-line momentum grid: nodes with `p_x > 0` form branch `+`,
/// nodes with `p_x < 0` branch `−`, and the norm is the full-line discrete norm of `ψ̃`.
pub fn kijowski_reference(tc: &TCMomentumAmplitude, x: f64, t_grid: &UniformGrid1D) -> Result<ArrivalDistribution> {
    let norm = tc.norm_squared();
    if !(norm > 0.0) {
        return Err(Error::ZeroNorm("momentum amplitude is zero".into()));
    }
    let c = tc.constants;
    let pg = tc.grids[0];
    let dp = pg.spacing();
    let cell: f64 = tc.grids[1..].iter().map(|g| g.spacing()).product();
    let lanes: Vec<Vec<Complex64>> = tc.samples.lanes(Axis(0)).into_iter().map(|l| l.to_vec()).collect();
    let p: Vec<f64> = pg.points();
    let weight: Vec<f64> = p
        .iter()
        .map(|v| dp * (v.abs() / (2.0 * std::f64::consts::PI * c.mass * c.hbar)).sqrt())
        .collect();
    let times = t_grid.points();
    let density: Vec<f64> = times
        .par_iter()
        .map(|&t| {
            let phase: Vec<Complex64> = p
                .iter()
                .zip(&weight)
                .map(|(v, w)| Complex64::from_polar(*w, (v * x - v * v * t / (2.0 * c.mass)) / c.hbar))
                .collect();
            let mut total = 0.0;
            for lane in &lanes {
                let mut pos = Complex64::new(0.0, 0.0);
                let mut neg = Complex64::new(0.0, 0.0);
                for ((v, z), e) in p.iter().zip(lane).zip(&phase) {
                    if *v > 0.0 {
                        pos += z * e;
                    } else if *v < 0.0 {
                        neg += z * e;
                    }
                }
                total += pos.norm_sqr() + neg.norm_sqr();
            }
            total * cell / norm
        })
        .collect();
    Ok(ArrivalDistribution::new(vec![DistributionAxis::time(*t_grid)], Array1::from(density).into_dyn())?
        .with_meta("plane", x)
        .with_meta("quadrature", format!("riemann sum, {} nodes, spacing {dp}", pg.len())))
}

/// `𝒫_φ(y|x) = ∫dt φ†φ`, normalized by the field norm.
pub fn sc_cumulative_y(field: &SpinorField) -> Result<ArrivalDistribution> {
    if field.transverse.len() != 1 {
        return Err(Error::domain(format!("expected a (t, y) field, got {} transverse axes", field.transverse.len())));
    }
    let norm = field.norm_squared();
    if !(norm > 0.0) {
        return Err(Error::ZeroNorm("space-conditional field has zero norm".into()));
    }
    let dt = field.t_grid.spacing();
    let dens = (field.plus.mapv(|z| z.norm_sqr()) + field.minus.mapv(|z| z.norm_sqr())).sum_axis(Axis(0)) * (dt / norm);
    Ok(ArrivalDistribution::new(vec![DistributionAxis::length("y", field.transverse[0])], dens)?.with_meta("plane", field.x))
}

/// `𝒫_φ(y|t; L) = φ†φ(t, y|L) / ∫dy φ†φ(t, y|L)` at the time row nearest `t*`.
pub fn sc_conditional_y_at_time(field: &SpinorField, t_star: f64) -> Result<ArrivalDistribution> {
    if field.transverse.len() != 1 {
        return Err(Error::domain(format!("expected a (t, y) field, got {} transverse axes", field.transverse.len())));
    }
    let tg = field.t_grid;
    let row = tg
        .nearest_index(t_star)
        .ok_or_else(|| Error::domain(format!("time {t_star} lies outside [{}, {})", tg.lo(), tg.hi())))?;
    let slice = field.plus.index_axis(Axis(0), row).mapv(|z| z.norm_sqr()) + field.minus.index_axis(Axis(0), row).mapv(|z| z.norm_sqr());
    let denominator = slice.sum() * field.transverse[0].spacing();
    if !(denominator > 0.0) {
        return Err(Error::NoArrivals { time: t_star, row });
    }
    Ok(ArrivalDistribution::new(vec![DistributionAxis::length("y", field.transverse[0])], slice / denominator)?
        .with_meta("plane", field.x)
        .with_meta("row", row)
        .with_meta("row_t", tg.point(row)))
}

/// `∫|a − b| dy` between two densities on the same axis.
pub fn l1_distance(a: &ArrivalDistribution, b: &ArrivalDistribution) -> Result<f64> {
    if a.dims() != 1 || b.dims() != 1 || !a.axes[0].grid.matches(&b.axes[0].grid, 1e-12) {
        return Err(Error::domain("L1 distance needs two one-axis densities on the same grid"));
    }
    let (na, nb) = (a.normalized(), b.normalized());
    Ok(na.iter().zip(nb.iter()).map(|(u, v)| (u - v).abs()).sum::<f64>() * a.cell_volume())
}

/// Cell-wise agreement of two one-axis densities on their common core window.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoreAgreement {
    /// `max |a − b| / b` over the core cells.
    pub max_relative: f64,
    pub lo: usize,
    /// Inclusive.
    pub hi: usize,
    /// `Σ b · Δt` over the core.
    pub core_mass: f64,
}

/// Grows a contiguous window from the peak of the reference `b`, always taking the heavier
/// neighbour, until it holds `core_mass` of `b`'s (unnormalized) mass, then compares cell-wise.
pub fn core_relative_difference(a: &ArrivalDistribution, b: &ArrivalDistribution, core_mass: f64) -> Result<CoreAgreement> {
    if a.dims() != 1 || b.dims() != 1 || !a.axes[0].grid.matches(&b.axes[0].grid, 1e-12) {
        return Err(Error::domain("core comparison needs two one-axis densities on the same grid"));
    }
    let dt = b.cell_volume();
    let rb: Vec<f64> = b.samples.iter().copied().collect();
    let ra: Vec<f64> = a.samples.iter().copied().collect();
    if b.total() < core_mass {
        return Err(Error::domain(format!(
            "reference holds only {} of the mass on this window, below the requested core {core_mass}",
            b.total()
        )));
    }
    let peak = (0..rb.len()).fold(0, |best, k| if rb[k] > rb[best] { k } else { best });
    let (mut lo, mut hi) = (peak, peak);
    let mut mass = rb[peak] * dt;
    while mass < core_mass {
        let left = if lo > 0 { rb[lo - 1] } else { -1.0 };
        let right = if hi + 1 < rb.len() { rb[hi + 1] } else { -1.0 };
        if left < 0.0 && right < 0.0 {
            break;
        }
        if right > left {
            hi += 1;
            mass += right * dt;
        } else {
            lo -= 1;
            mass += left * dt;
        }
    }
    let max_relative = (lo..=hi).map(|k| (ra[k] - rb[k]).abs() / rb[k]).fold(0.0, f64::max);
    Ok(CoreAgreement {
        max_relative,
        lo,
        hi,
        core_mass: mass,
    })
}

//! History states sliced in time and in x: spectral slice derivatives annihilate them to
//! rounding, centred differences converge at second order, and a flipped slice is caught.

use std::f64::consts::PI;

use num_complex::Complex64;
use stsqm::constraint::{build_history_space, build_history_time, constraint_residual, SliceAxis, SliceDerivative};
use stsqm::qm::TCMomentumAmplitude;
use stsqm::spectral::make_grid;
use stsqm::sts::SCMomentumAmplitude;
use stsqm::{GaussianPacketSpec, HalfLineAxis, PhysicalConstants};

fn main() -> stsqm::Result<()> {
    let c = PhysicalConstants::default();
    let x = make_grid(64, -16.0, 16.0)?;
    let amp = TCMomentumAmplitude::gaussian_for(&GaussianPacketSpec::new(vec![0.5], vec![0.4]), &[x], c)?;
    // one revival period of the box makes every slice series periodic
    let period = x.length().powi(2) / PI;
    let h = build_history_time(&amp, &SliceAxis::from(make_grid(2048, 0.0, period)?), &[x])?;
    for d in [SliceDerivative::Spectral, SliceDerivative::Centered] {
        println!("time slices, {d:?}: residual {:.3e}", constraint_residual(&h, d)?.residual_l2);
    }
    let bad = h.corrupted(300, Complex64::new(-1.0, 0.0))?;
    println!("time slices, one slice flipped: residual {:.3}", constraint_residual(&bad, SliceDerivative::Spectral)?.residual_l2);

    let y = make_grid(32, -8.0, 8.0)?;
    let py = y.conjugate(c.hbar);
    let dp = py.spacing();
    let spec = GaussianPacketSpec::new(vec![1.6, 0.0], vec![0.25, 0.25]);
    let lat = SCMomentumAmplitude::from_full_line(HalfLineAxis::lattice(dp, 12)?, vec![py], c, |p| spec.value(p, &c))?;
    let lat = lat.scaled(Complex64::new(1.0 / lat.norm_squared().expect("lattice norm").sqrt(), 0.0));
    let t = make_grid(512, 0.0, 4.0 * PI / (dp * dp))?;
    let hs = build_history_space(&lat, &SliceAxis::from(make_grid(32, 0.0, 2.0 * PI / dp)?), &t, &[y])?;
    let r = constraint_residual(&hs, SliceDerivative::Spectral)?;
    println!("x slices, Spectral: residual {:.3e}, first slice norm {:.6}", r.residual_l2, r.slice_norms[0]);
    Ok(())
}

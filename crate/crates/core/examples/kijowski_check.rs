//! Two independent routes to the same arrival-time density: the half-line quadrature of the
//! space-conditional field and a Riemann sum over a full-line momentum grid.

use stsqm::arrival::{arrival_time_density, core_relative_difference, kijowski_reference};
use stsqm::qm::TCMomentumAmplitude;
use stsqm::spectral::make_grid;
use stsqm::sts::SCMomentumAmplitude;
use stsqm::{GaussianPacketSpec, PhysicalConstants};

fn main() -> stsqm::Result<()> {
    let c = PhysicalConstants::default();
    let spec = GaussianPacketSpec::new(vec![10.0], vec![0.5]);
    let sc = SCMomentumAmplitude::gaussian(&spec, vec![], c, 0.025, 1e-24)?;
    let tc = TCMomentumAmplitude::gaussian(&spec, vec![make_grid(2048, -20.48, 20.48)?], c)?;
    let t = make_grid(1024, -1.0, 2.0)?;
    for x in [2.0, 5.0] {
        let a = arrival_time_density(&sc, x, &t)?;
        let b = kijowski_reference(&tc, x, &t)?;
        let g = core_relative_difference(&a, &b, 1.0 - 1e-6)?;
        println!(
            "x = {x}: max relative difference {:.3e} on t in [{:.4}, {:.4}] holding mass {:.8}",
            g.max_relative,
            t.point(g.lo),
            t.point(g.hi),
            g.core_mass
        );
    }
    Ok(())
}

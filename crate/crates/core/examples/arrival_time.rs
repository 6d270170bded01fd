//! Arrival-time density of a Gaussian packet at several planes, with its mean against the
//! classical time of flight `m·x/p₀`.

use stsqm::arrival::{arrival_time_density, moments, variance};
use stsqm::spectral::make_grid;
use stsqm::sts::SCMomentumAmplitude;
use stsqm::{GaussianPacketSpec, PhysicalConstants};

fn main() -> stsqm::Result<()> {
    let c = PhysicalConstants::default();
    let spec = GaussianPacketSpec::new(vec![10.0], vec![0.5]);
    let amp = SCMomentumAmplitude::gaussian(&spec, vec![], c, 0.025, 1e-20)?;
    let t = make_grid(2048, -2.0, 3.0)?;
    println!("{:>6} {:>12} {:>12} {:>12} {:>12}", "x", "mean t", "m x / p0", "std t", "captured");
    for x in [2.0, 5.0, 10.0] {
        let d = arrival_time_density(&amp, x, &t)?;
        println!("{x:>6} {:>12.6} {:>12.6} {:>12.6} {:>12.9}", moments(&d, 1)?, c.mass * x / 10.0, variance(&d)?.sqrt(), d.total());
    }
    Ok(())
}

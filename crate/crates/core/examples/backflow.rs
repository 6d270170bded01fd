//! Two right-moving Gaussians whose current turns negative at the origin while both arrival
//! densities stay nonnegative.

use stsqm::arrival::{arrival_density, detect_backflow, kijowski_reference, BackflowFixture};
use stsqm::sts::{sc_field, SCMomentumAmplitude};
use stsqm::PhysicalConstants;

fn main() -> stsqm::Result<()> {
    let c = PhysicalConstants::default();
    let f = BackflowFixture::STORED;
    let (x, t) = (BackflowFixture::x_grid(), BackflowFixture::t_grid());
    let flux = f.flux(&x, &t, c)?;
    for i in detect_backflow(&flux) {
        println!("current negative on [{:.4}, {:.4}], minimum {:.4e}", i.t_start, i.t_end, i.min_flux);
    }
    let kij = kijowski_reference(&f.amplitude(&x, c)?, f.plane, &t)?;
    let sc = SCMomentumAmplitude::truncated_from_full_line(vec![], c, 0.005, 1e-20, |p| f.psi(p[0], &c))?;
    let sts = arrival_density(&sc_field(&sc, f.plane, &t, &[])?)?;
    println!("min reference density {:.4e}, min half-line density {:.4e}", kij.min(), sts.min());
    Ok(())
}

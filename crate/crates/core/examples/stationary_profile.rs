//! Stationary two-branch profile through a smooth step that stays below the energy.

use stsqm::operators::{Potential, SmoothStep, StationaryProfile, StationarySeed, DEFAULT_V_MIN};
use stsqm::spectral::make_grid;
use stsqm::PhysicalConstants;

fn main() -> stsqm::Result<()> {
    let c = PhysicalConstants::default();
    let v = SmoothStep { height: 1.0, width: 0.5, offset: 0.5 };
    let x = make_grid(2001, -10.0, 10.0)?;
    let energy = 2.0;
    let v0 = v.value(x.lo());
    let plus = StationarySeed::plane_wave(x.lo(), energy, v0, 1.0, &c);
    let minus = StationarySeed::plane_wave(x.lo(), energy, v0, -1.0, &c);
    let p = StationaryProfile::solve(plus, minus, energy, &v, &x, &c, DEFAULT_V_MIN)?;
    for k in (0..x.len()).step_by(250) {
        println!("x = {:>7.3}  V = {:.4}  |phi+| = {:.6}  |phi-| = {:.6}", x.point(k), v.value(x.point(k)), p.phi_plus[k].norm(), p.phi_minus[k].norm());
    }
    Ok(())
}

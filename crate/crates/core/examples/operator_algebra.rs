//! The `P_x` constructions on random modes: every form squares to the dispersion scalar, and
//! the split forms rest on an anticommuting pair.

use stsqm::operators::{verify_anticommutation, PxConstruction};
use stsqm::scenario::{construction_name, random_modes, square_residual};
use stsqm::PhysicalConstants;

fn main() {
    let c = PhysicalConstants::default();
    let modes = random_modes(1, 1000, 50.0, 5.0, 10.0);
    for con in PxConstruction::ALL {
        let anti = con.alpha_beta().map(|(a, b)| verify_anticommutation(&a, &b).max_residual());
        println!("{:<32} square residual {:.2e}, anticommutation {:?}", construction_name(con), square_residual(con, &modes, &c), anti);
    }
}

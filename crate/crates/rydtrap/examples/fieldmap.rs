//! Static field along the trap axis and the quadratic and linear trap
//! coefficients for trap A.

use rydtrap::field::{gravity_compensating_u2, HarmonicPotential};
use rydtrap::presets::TRAP_A;
use rydtrap::stark::polarizability_hz;
use rydtrap::{dressing::GROUND, units};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let hp = HarmonicPotential::bundled("trapA", TRAP_A.drive.eta)?;
    let d = TRAP_A.drive;
    println!("validity radius {:.0} um, z0 {:.1} mm", hp.validity_radius * 1e6, hp.z0 * 1e3);
    println!("{:>8} {:>12} {:>12}", "z [um]", "|E| [V/m]", "theta");
    for k in -4..=4 {
        let z = k as f64 * 50e-6;
        let f = hp.field(&d, [0.0, 0.0, z], 0.0)?;
        println!("{:>8.0} {:>12.3} {:>12.3e}", z * 1e6, f.modulus, f.theta);
    }
    let alpha = polarizability_hz(&GROUND);
    let ql = hp.quad_lin_coefficients(&d, alpha);
    println!("quadratic/linear coefficients: {ql:?}");
    println!("gravity-compensating U2 = {:.4} mV", gravity_compensating_u2(&hp, &d, alpha, units::MASS_RB87) * 1e3);
    Ok(())
}
